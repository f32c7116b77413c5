"""CO2-based occupancy detection: simulation, calibration, training and evaluation."""

import json as _json

import numpy as _np

from ._core import *  # noqa: F401,F403
from ._core import (
    NetworkConfig,
    TrainConfig,
    _run_protocol_json,
)

__all__ = [name for name in dir() if not name.startswith("_")]


def run_protocol(x, y, day, base=None, ks=(1, 2, 3, 4), n_seeds=10, base_seed=0, modes=None,
                 net=None, config=None, jobs=1, wraparound=False):
    """Cross-validated comparison over days; returns the report as a dict.

    ``day`` gives the day id of every window, in chronological order. Without
    ``base`` the transfer mode is skipped.
    """
    if modes is None:
        modes = ["transfer", "cold", "logistic"] if base is not None else ["cold", "logistic"]
    text = _run_protocol_json(
        _np.asarray(x, dtype=float), _np.asarray(y, dtype=_np.uint8), _np.asarray(day, dtype=_np.int32),
        base, list(ks), n_seeds, base_seed, list(modes),
        net if net is not None else NetworkConfig.reduced(),
        config if config is not None else TrainConfig(), jobs, wraparound)
    return _json.loads(text)
