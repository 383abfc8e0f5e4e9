"""Survival trees grown with log-rank splitting and adaptive imputation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..stepfunction import StepFunction
from . import _kernels
from .splitting import SplitRule, death_index, node_chf


@dataclass
class TerminalNode:
    chf: StepFunction
    member_count: int
    unique_deaths: int
    depth: int = 0


@dataclass
class InternalNode:
    rule: SplitRule
    left: "TerminalNode | InternalNode"
    right: "TerminalNode | InternalNode"
    # in-bag observed values of rule.feature at this node (test-time imputation)
    pool: np.ndarray = field(default_factory=lambda: np.empty(0))
    depth: int = 0


@dataclass
class ImputationDraws:
    """Values drawn for missing in-bag cells at terminal nodes."""

    subject: np.ndarray
    feature: np.ndarray
    value: np.ndarray

    @classmethod
    def empty(cls):
        return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))


class _Grower:
    def __init__(self, X, time, status, max_features, min_deaths, categorical, rng,
                 fallback_pools):
        self.X = X
        self.time = time
        self.status = status.astype(bool)
        self.max_features = max_features
        self.min_deaths = min_deaths
        self.categorical = categorical
        self.rng = rng
        self.fallback = fallback_pools
        self.missing_cols = [f for f in range(X.shape[1]) if np.isnan(X[:, f]).any()]
        self.draws = []

    def impute(self, members, inherited):
        Xn = self.X[members]
        pools = {}
        if not self.missing_cols:
            return Xn, pools, None
        na_mat = np.isnan(Xn[:, self.missing_cols])
        n_na = na_mat.sum(axis=0)
        for k, f in enumerate(self.missing_cols):
            if n_na[k] == 0:
                pools[f] = Xn[:, f].copy()
                continue
            na = na_mat[:, k]
            obs = Xn[~na, f]
            pool = obs if obs.size else inherited[f]
            pools[f] = pool
            # same stream as Generator.choice with replacement
            Xn[na, f] = pool[self.rng.integers(0, pool.size, size=int(n_na[k]))]
        return Xn, pools, na_mat

    def grow(self, members, depth, inherited):
        Xn, pools, na_mat = self.impute(members, inherited)
        t = self.time[members]
        s = self.status[members]
        death_times, kidx = death_index(t, s)
        rule = None
        if death_times.size >= 2 * self.min_deaths:
            cand = self.rng.choice(self.X.shape[1], size=self.max_features, replace=False)
            col, cut, stat, found = _kernels.best_split_kernel(
                np.ascontiguousarray(Xn[:, cand]), self.categorical[cand], kidx, s,
                death_times.size, self.min_deaths)
            if found:
                rule = SplitRule(int(cand[col]), float(cut), float(stat),
                                 bool(self.categorical[cand[col]]))
        if rule is None:
            if na_mat is not None and na_mat.any():
                for k, f in enumerate(self.missing_cols):
                    na = na_mat[:, k]
                    if na.any():
                        self.draws.append((members[na], np.full(int(na.sum()), f), Xn[na, f]))
            return TerminalNode(node_chf(t, s), int(members.size), int(death_times.size), depth)
        go_left = rule.goes_left(Xn[:, rule.feature])
        f = rule.feature
        if f in pools:
            pool = pools[f]
        else:
            pool = Xn[:, f]
        node = InternalNode(rule, None, None, np.array(pool, dtype=float), depth)
        node.left = self.grow(members[go_left], depth + 1, pools)
        node.right = self.grow(members[~go_left], depth + 1, pools)
        return node


class SurvivalTree:
    """A grown tree plus a flat array encoding used for vectorized routing."""

    def __init__(self, root):
        self.root = root
        feature, threshold, is_cat, left, right, leaf_of, depth, pools = [], [], [], [], [], [], [], []
        self.leaves: list[TerminalNode] = []

        stack = [(root, None, None)]
        while stack:
            node, parent, side = stack.pop()
            idx = len(feature)
            if parent is not None:
                (left if side == 0 else right)[parent] = idx
            depth.append(node.depth)
            if isinstance(node, TerminalNode):
                feature.append(-1)
                threshold.append(0.0)
                is_cat.append(False)
                left.append(-1)
                right.append(-1)
                leaf_of.append(len(self.leaves))
                pools.append(None)
                self.leaves.append(node)
            else:
                feature.append(node.rule.feature)
                threshold.append(node.rule.threshold)
                is_cat.append(node.rule.categorical)
                left.append(-1)
                right.append(-1)
                leaf_of.append(-1)
                pools.append(node.pool)
                stack.append((node.right, idx, 1))
                stack.append((node.left, idx, 0))
        self.feature = np.array(feature, dtype=np.int64)
        self.threshold = np.array(threshold, dtype=float)
        self.is_cat = np.array(is_cat, dtype=bool)
        self.left = np.array(left, dtype=np.int64)
        self.right = np.array(right, dtype=np.int64)
        self.leaf_of = np.array(leaf_of, dtype=np.int64)
        self.depth = np.array(depth, dtype=np.int64)
        self.pools = pools

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def height(self) -> int:
        return int(self.depth.max())

    def first_split_depth(self, n_features: int) -> np.ndarray:
        """Shallowest depth at which each feature splits; ``-1`` if unused."""
        out = np.full(n_features, -1, dtype=np.int64)
        for node in np.argsort(self.depth, kind="stable"):
            f = self.feature[node]
            if f >= 0 and out[f] < 0:
                out[f] = self.depth[node]
        return out

    def used_features(self) -> set[int]:
        return {int(f) for f in self.feature if f >= 0}

    def apply(self, X, rng=None) -> np.ndarray:
        """Leaf index reached by each row of ``X``.

        Missing values met at a split are drawn from that node's training
        pool, which needs ``rng``.
        """
        X = np.asarray(X, dtype=float)
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.leaf_of[node] < 0)
        while active.size:
            nd = node[active]
            f = self.feature[nd]
            v = X[active, f]
            na = np.isnan(v)
            if na.any():
                if rng is None:
                    raise ValueError("missing values at prediction time require an rng")
                for q in np.unique(nd[na]):
                    sel = na & (nd == q)
                    v[sel] = rng.choice(self.pools[q], size=int(sel.sum()))
            go_left = np.where(self.is_cat[nd], v == self.threshold[nd], v <= self.threshold[nd])
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.leaf_of[node[active]] < 0]
        return self.leaf_of[node]

    def leaf_matrix(self, grid) -> np.ndarray:
        """CHF of every leaf evaluated on ``grid`` (``n_leaves x len(grid)``)."""
        return np.array([leaf.chf(grid) for leaf in self.leaves]).reshape(self.n_leaves, len(grid))

    def chf(self, x, rng=None) -> StepFunction:
        leaf = self.apply(np.asarray(x, dtype=float).reshape(1, -1), rng)[0]
        return self.leaves[leaf].chf


def grow_tree(X, time, status, in_bag, *, max_features, min_deaths=3, categorical=None,
              rng=None, fallback_pools=None):
    """Grow one survival tree on the in-bag multiset ``in_bag``.

    Returns ``(tree, draws)`` where ``draws`` are the terminal-node imputation
    draws for missing in-bag cells.
    """
    X = np.asarray(X, dtype=float)
    in_bag = np.asarray(in_bag, dtype=np.int64)
    if in_bag.size == 0:
        raise ValueError("in_bag must be non-empty")
    if categorical is None:
        categorical = np.zeros(X.shape[1], dtype=bool)
    rng = np.random.default_rng(rng)
    if fallback_pools is None:
        fallback_pools = observed_pools(X)
    g = _Grower(X, np.asarray(time, dtype=float), np.asarray(status), max_features,
                min_deaths, np.asarray(categorical, dtype=bool), rng, fallback_pools)
    root = g.grow(in_bag, 0, fallback_pools)
    if g.draws:
        subj, feat, val = (np.concatenate(a) for a in zip(*g.draws))
        draws = ImputationDraws(subj.astype(np.int64), feat.astype(np.int64), val)
    else:
        draws = ImputationDraws.empty()
    return SurvivalTree(root), draws


def observed_pools(X) -> dict:
    """Observed values of every column that has missing cells."""
    X = np.asarray(X, dtype=float)
    pools = {}
    for f in range(X.shape[1]):
        col = X[:, f]
        na = np.isnan(col)
        if na.any():
            if na.all():
                raise ValueError(f"feature {f} is entirely missing")
            pools[f] = col[~na]
    return pools


def tree_chf(tree: SurvivalTree, x, rng=None) -> StepFunction:
    return tree.chf(x, rng)
