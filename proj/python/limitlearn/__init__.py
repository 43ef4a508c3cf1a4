"""Python front end for the limitlearn C++ core."""

import json

from . import _core
from ._core import LimitlearnError, decide_exact, normalize, operator_names, pair, prefix, target_prefix, unpair

__all__ = [
    "LimitlearnError",
    "approx",
    "apply_pipeline",
    "decide_exact",
    "learn",
    "normalize",
    "operator_names",
    "pair",
    "prefix",
    "run_suite",
    "stabilization",
    "target_prefix",
    "unpair",
]


def approx(relation, a, b, horizon=4096, column_budget=8):
    return json.loads(_core.approx(relation, a, b, horizon, column_budget))


def apply_pipeline(pipeline, bits, **trial):
    """Runs operator names over a bit string such as "0110"; extra keys go into the trial config."""
    cfg = {"name": "py", "kind": "reduce", "pipeline": list(pipeline), **trial}
    return _core.apply_pipeline(json.dumps(cfg), bits)


def learn(family, target, seed=1, **trial):
    """Trace rows (dicts) of one learning trial."""
    cfg = {"name": "py", "kind": "learn", "family": list(family), "targets": [target], **trial}
    return json.loads(_core.learn(json.dumps(cfg), target, seed))


def stabilization(rows, window):
    return json.loads(_core.stabilization(json.dumps(rows), window))


def run_suite(config, output_dir=""):
    return json.loads(_core.run_suite(json.dumps(config), str(output_dir)))
