import logging
import math

import numpy as np
import pytest
from pytest import raises

from qandysig.errors import InsufficientData, ParameterError
from qandysig.harness.fitting import fit_decay, fit_summary

NS = np.array([64, 128, 256, 512])


def test_exact_exponential():
    fit = fit_decay(NS, np.exp(-0.01 * NS), gap=0.1, event="forge_succ")
    assert fit.slope == pytest.approx(-0.01)
    assert fit.intercept == pytest.approx(0.0, abs=1e-9)
    assert fit.decays
    assert fit.constant == pytest.approx(1.0)
    assert fit.event == "forge_succ"
    assert fit.slope_ci[0] <= fit.slope <= fit.slope_ci[1]


def test_constant_frequency_does_not_decay():
    fit = fit_decay(NS, [0.3] * 4)
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert not fit.decays


def test_noisy_decay_has_a_confidence_interval():
    noise = np.array([1.1, 0.9, 1.05, 0.95])
    fit = fit_decay(NS, 0.5 * np.exp(-0.005 * NS) * noise)
    assert fit.stderr > 0
    assert fit.slope_ci[0] < -0.005 < fit.slope_ci[1]
    assert fit.decays


def test_increasing_frequency_does_not_decay():
    assert not fit_decay(NS, [0.1, 0.2, 0.4, 0.8]).decays


def test_two_points_are_insufficient():
    with raises(InsufficientData):
        fit_decay([64, 128], [0.5, 0.25])


def test_zero_frequencies_are_dropped_without_trial_counts():
    with raises(InsufficientData):
        fit_decay(NS, [0.5, 0.1, 0.0, 0.0])


def test_zero_frequencies_are_censored_with_trial_counts(caplog):
    with caplog.at_level(logging.WARNING, logger="qandysig.harness.fitting"):
        fit = fit_decay(NS, [0.5, 0.1, 0.01, 0.0], trials=[1000] * 4)
    assert "censored" in caplog.text
    censored = [p for p in fit.points if p.censored]
    assert [p.n for p in censored] == [512]
    assert censored[0].value == pytest.approx(math.log(censored[0].wilson_hi))
    assert fit.slope < 0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(ns=NS, freqs=[0.1, 0.2, 1.5, 0.1]),
        dict(ns=NS, freqs=[0.1, 0.2]),
        dict(ns=NS, freqs=[0.4, 0.3, 0.2, 0.1], trials=[10, 10]),
        dict(ns=NS, freqs=[0.4, 0.3, 0.2, 0.1], gap=0.0),
    ],
)
def test_invalid_fits(kwargs):
    with raises(ParameterError):
        fit_decay(**kwargs)


def test_fit_summary():
    rows = [
        dict(n=n, event=event, count=count, trials=1000)
        for n, (acc, abort) in zip(NS, [(500, 500), (800, 200), (960, 40), (998, 2)])
        for event, count in (("honest_acc", acc), ("honest_abort", abort))
    ]
    fit = fit_summary(rows[::-1], "honest_abort", gap=0.05)
    assert [p.n for p in fit.points] == list(NS)
    assert fit.decays
    assert fit.constant == pytest.approx(-fit.slope / 0.05 ** 2)
    doc = fit.to_dict()
    assert doc["event"] == "honest_abort" and len(doc["points"]) == 4
    with raises(InsufficientData):
        fit_summary(rows, "forge_succ")
