"""Shared builders for curve and dataset fixtures."""

import numpy as np
import pytest

from isdkit.core import SurvivalCurve, SurvivalDataset


def step_curve(times, probs):
    return SurvivalCurve(np.asarray(times, float), np.asarray(probs, float), "step")


def linear_curve(times, probs):
    return SurvivalCurve(np.asarray(times, float), np.asarray(probs, float), "linear")


def dataset(times, events, x=None):
    times = np.asarray(times, float)
    if x is None:
        x = np.zeros((times.size, 1))
    return SurvivalDataset.from_arrays(x, times, events)


def random_curve(rng, interp=None, allow_zero_end=True):
    """A random valid survival curve with a few knots."""
    n = rng.integers(1, 8)
    times = np.sort(rng.uniform(0.5, 100.0, size=n))
    times = np.unique(times)
    probs = np.sort(rng.uniform(0.0, 1.0, size=times.size))[::-1]
    if not allow_zero_end:
        probs = np.clip(probs, 0.05, 0.95)
    probs = np.sort(probs)[::-1]
    kind = interp or rng.choice(["step", "linear"])
    return SurvivalCurve(times, probs, kind)


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
