import time

import pytest

from titan.solver import Hyperparams, fit
from titan.synth import SynthConfig, generate


@pytest.fixture(scope="session")
def default_run():
    """Default star-graph benchmark: dataset, planted truth, trained model.

    Fit once per session; several test modules score different aspects
    of the same run.
    """
    train, test, truth = generate(SynthConfig(seed=7))
    model = fit(train, Hyperparams())
    return train, test, truth, model


@pytest.fixture(scope="session")
def default_fit_seconds():
    """Wall time of one default-benchmark fit, measured independently of
    the shared default_run fixture so fixture caching cannot hide it."""
    train, _, _ = generate(SynthConfig(seed=7))
    started = time.perf_counter()
    fit(train, Hyperparams())
    return time.perf_counter() - started
