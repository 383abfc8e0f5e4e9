"""Right-continuous piecewise-constant functions on a time grid."""

from __future__ import annotations

import numpy as np


class StepFunction:
    """Right-continuous step function.

    ``values[i]`` holds on ``[knots[i], knots[i+1])``; ``initial`` holds before
    the first knot (0 for cumulative hazards, 1 for survival curves).
    """

    __slots__ = ("knots", "values", "initial")

    def __init__(self, knots, values, initial: float = 0.0):
        knots = np.asarray(knots, dtype=float).ravel()
        values = np.asarray(values, dtype=float).ravel()
        if knots.shape != values.shape:
            raise ValueError("knots and values must have the same length")
        if knots.size > 1 and np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly increasing")
        self.knots = knots
        self.values = values
        self.initial = float(initial)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.knots, t, side="right") - 1
        ext = np.concatenate([[self.initial], self.values])
        out = ext[idx + 1]
        return out if out.ndim else float(out)

    def left_limit(self, t):
        """Value just before ``t``."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.knots, t, side="left") - 1
        ext = np.concatenate([[self.initial], self.values])
        out = ext[idx + 1]
        return out if out.ndim else float(out)

    def __len__(self):
        return self.knots.size

    def __repr__(self):
        return f"StepFunction(knots={self.knots!r}, values={self.values!r}, initial={self.initial})"

    def __eq__(self, other):
        if not isinstance(other, StepFunction):
            return NotImplemented
        return (self.initial == other.initial and np.array_equal(self.knots, other.knots)
                and np.array_equal(self.values, other.values))

    def is_nondecreasing(self) -> bool:
        v = np.concatenate([[self.initial], self.values])
        return bool(np.all(np.diff(v) >= 0))

    def map(self, fn) -> "StepFunction":
        """Apply ``fn`` pointwise (e.g. ``lambda h: np.exp(-h)``)."""
        return StepFunction(self.knots, fn(self.values), fn(np.array(self.initial)))

    def to_survival(self) -> "StepFunction":
        return self.map(lambda h: np.exp(-h))

    def to_dict(self) -> dict:
        return {"knots": self.knots.tolist(), "values": self.values.tolist(), "initial": self.initial}

    @classmethod
    def from_dict(cls, d) -> "StepFunction":
        return cls(d["knots"], d["values"], d.get("initial", 0.0))


def average(functions, weights=None) -> StepFunction:
    """Pointwise (weighted) mean of step functions on the union of their knots."""
    functions = list(functions)
    if not functions:
        raise ValueError("cannot average an empty collection")
    grid = np.unique(np.concatenate([f.knots for f in functions]))
    w = np.ones(len(functions)) if weights is None else np.asarray(weights, dtype=float)
    vals = np.array([f(grid) for f in functions]).reshape(len(functions), grid.size)
    init = np.array([f.initial for f in functions])
    return StepFunction(grid, w @ vals / w.sum(), float(w @ init / w.sum()))
