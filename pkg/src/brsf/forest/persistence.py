"""Versioned JSON persistence for fitted forests."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..dataset import FeatureMeta
from ..stepfunction import StepFunction
from .ensemble import RandomSurvivalForest
from .splitting import SplitRule
from .tree import InternalNode, SurvivalTree, TerminalNode

FORMAT = "brsf-forest"
VERSION = 1


class ModelFormatError(ValueError):
    pass


def _node_to_dict(node):
    if isinstance(node, TerminalNode):
        return {"chf": node.chf.to_dict(), "member_count": node.member_count,
                "unique_deaths": node.unique_deaths, "depth": node.depth}
    r = node.rule
    return {"rule": {"feature": r.feature, "threshold": r.threshold, "statistic": r.statistic,
                     "categorical": r.categorical},
            "pool": node.pool.tolist(), "depth": node.depth,
            "left": _node_to_dict(node.left), "right": _node_to_dict(node.right)}


def _node_from_dict(d):
    if "rule" not in d:
        return TerminalNode(StepFunction.from_dict(d["chf"]), d["member_count"],
                            d["unique_deaths"], d["depth"])
    return InternalNode(SplitRule(**d["rule"]), _node_from_dict(d["left"]),
                        _node_from_dict(d["right"]), np.array(d["pool"], dtype=float), d["depth"])


def forest_to_dict(forest: RandomSurvivalForest) -> dict:
    meta = getattr(forest, "feature_meta_", None)
    if meta is None:
        meta = tuple(FeatureMeta(f"x{j}") for j in range(forest.n_features_in_))
    return {
        "format": FORMAT,
        "version": VERSION,
        "params": {**forest.get_params(),
                   "categorical_features": np.flatnonzero(forest.categorical_mask_).tolist(),
                   "max_features_resolved": forest.max_features_, "seed": forest.seed_},
        "feature_meta": [{"name": f.name, "kind": f.kind, "levels": list(f.levels)} for f in meta],
        "event_times": forest.event_times_.tolist(),
        "in_bag": forest.in_bag_.tolist(),
        "trees": [_node_to_dict(t.root) for t in forest.trees_],
    }


def forest_from_dict(doc: dict) -> RandomSurvivalForest:
    if doc.get("format") != FORMAT:
        raise ModelFormatError(f"not a {FORMAT} document")
    if doc.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}")
    p = dict(doc["params"])
    resolved = p.pop("max_features_resolved")
    seed = p.pop("seed")
    forest = RandomSurvivalForest(**p)
    forest.feature_meta_ = tuple(FeatureMeta(f["name"], f["kind"], tuple(f["levels"]))
                                 for f in doc["feature_meta"])
    forest.n_features_in_ = len(forest.feature_meta_)
    forest.categorical_mask_ = np.array([f.is_categorical for f in forest.feature_meta_])
    forest.max_features_ = resolved
    forest.seed_ = seed
    forest.event_times_ = np.array(doc["event_times"], dtype=float)
    forest.in_bag_ = np.array(doc["in_bag"], dtype=np.int32)
    forest.trees_ = [SurvivalTree(_node_from_dict(t)) for t in doc["trees"]]
    forest._build_leaf_tables()
    return forest


def save_forest(forest: RandomSurvivalForest, path) -> None:
    Path(path).write_text(json.dumps(forest_to_dict(forest)))


def load_forest(path) -> RandomSurvivalForest:
    return forest_from_dict(json.loads(Path(path).read_text()))
