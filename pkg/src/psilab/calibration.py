"""Frozen empirical constants.

Each value was measured once on the configuration named by its key (see
the acceptance tests) and is kept as a regression reference: later runs
must stay within ``REGRESSION_FACTOR`` times the frozen value.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

REGRESSION_FACTOR = 2.0


@lru_cache(maxsize=None)
def frozen_constants() -> dict:
    text = resources.files("psilab").joinpath("calibration.json").read_text()
    return json.loads(text)


def frozen(name: str) -> float:
    return float(frozen_constants()[name])


def within_regression(name: str, value: float) -> bool:
    return abs(value) <= REGRESSION_FACTOR * frozen(name)
