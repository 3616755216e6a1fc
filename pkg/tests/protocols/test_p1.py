import logging
from typing import List

import numpy as np
import pytest
from numpy.testing import assert_array_equal
from pytest import raises

from qandysig.adversaries import Role, Strategy
from qandysig.channels import QandyChannel, Transcript
from qandysig.errors import InsufficientSample, KeyAlreadyUsed, ParameterError
from qandysig.harness.fitting import fit_decay
from qandysig.harness.thresholds import optimize_thresholds
from qandysig.protocol_base import Arbitration, Outcome, ProtocolParams, TrialResult, Verdict
from qandysig.protocols.p1 import (
    KeyHoldings,
    P1Params,
    P1Protocol,
    P1Signature,
    PrivateKey,
    copy_counts,
    p1_arbitrate,
    p1_disclose,
    p1_distribute,
    p1_keygen,
    p1_run,
    p1_sign,
    p1_symmetrize,
    p1_test,
    p1_verify,
)
from qandysig.qandy import MeasurementRecords, Provenance
from qandysig.rng import Rng

S_A, S_V = 1 / 24, 1 / 12
GRID = (64, 128, 256, 512)


def _params(n=64, **kwargs) -> P1Params:
    return P1Params(n=n, s_a=kwargs.pop("s_a", S_A), s_v=kwargs.pop("s_v", S_V), **kwargs)


def _holdings(n: int, seed: int = 0):
    rng = Rng(seed)
    key, public = p1_keygen(_params(n), rng.child(1))
    noiseless = lambda: QandyChannel(0.0, rng.child(2))  # noqa: E731
    bob, charlie = p1_distribute(public, noiseless(), noiseless())
    bob_h, charlie_h = p1_symmetrize(
        bob, charlie, noiseless(), noiseless(), rng.child(3), rng.child(4)
    )
    return key, bob_h, charlie_h


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n=7),
        dict(s_a=0.1, s_v=0.1),
        dict(s_a=0.05, s_v=0.2),  # s_v must stay below p_f
        dict(p_e=0.05, s_a=0.05),
        dict(test_fraction=0.0),
        dict(p_channel=0.5),
    ],
)
def test_invalid_params(kwargs):
    with raises(ParameterError):
        _params(**kwargs)


def test_from_params_needs_both_thresholds():
    with raises(ParameterError):
        P1Protocol.from_params(ProtocolParams(n=8, s_v=0.1))


def test_symmetrization_moves_halves():
    n = 40
    key, bob_h, charlie_h = _holdings(n)
    p1_disclose(bob_h, charlie_h, Transcript())
    for b in (0, 1):
        bob_k, charlie_k = bob_h.keys[b], charlie_h.keys[b]
        assert bob_k.forwarded.size == charlie_k.forwarded.size == n // 2
        assert len(bob_k.records) == len(charlie_k.records) == n
        assert_array_equal(charlie_k.received, bob_k.forwarded)
        assert_array_equal(bob_k.received, charlie_k.forwarded)

        kept = bob_k.records.select(bob_k.records.provenance == Provenance.KEPT)
        received = bob_k.records.select(bob_k.records.provenance == Provenance.RECEIVED)
        assert not np.isin(kept.index, bob_k.forwarded).any()
        assert_array_equal(np.sort(received.index), charlie_k.forwarded)
        # noiseless channels: no record contradicts Alice's key
        assert not any(
            (key.bob[b][r.index] >> 1) == r.basis and (key.bob[b][r.index] & 1) != r.outcome
            for r in bob_k.records
        )


def _symmetrized_copy_fractions(n: int, runs: int):
    """Fractions of key indices of which Bob measured 0, 1 and 2 copies, over both
    keys of ``runs`` symmetrizations."""
    totals = np.zeros(3)
    for seed in range(runs):
        _, bob_h, charlie_h = _holdings(n, seed)
        for b in (0, 1):
            counts = copy_counts(bob_h.keys[b].forwarded, charlie_h.keys[b].forwarded, n)
            if seed == 0:
                # the counts are exactly the records Bob holds per index
                measured = np.bincount(bob_h.keys[b].records.index, minlength=n)
                assert_array_equal(counts, measured)
            totals += np.bincount(counts, minlength=3)
    return totals / totals.sum(), 2 * runs


def _assert_copy_fractions(fractions, samples: int, n: int, sigmas: float):
    expected = np.array([0.25, 0.5, 0.25])
    sigma = np.sqrt(expected * (1 - expected) / (n * samples))
    assert np.all(np.abs(fractions - expected) < sigmas * sigma), (fractions, sigma)


def test_symmetrized_copy_counts_are_binomial():
    n = 100
    fractions, samples = _symmetrized_copy_fractions(n, runs=200)
    _assert_copy_fractions(fractions, samples, n, sigmas=4)


@pytest.mark.slow
def test_symmetrized_copy_counts_at_acceptance_scale():
    n = 100
    fractions, samples = _symmetrized_copy_fractions(n, runs=5000)
    assert samples == 10_000
    _assert_copy_fractions(fractions, samples, n, sigmas=3)


def test_copy_counts_examples():
    assert_array_equal(copy_counts([0, 1], [1, 2], 4), [0, 1, 2, 1])


def test_test_removes_revealed_records():
    n = 64
    key, bob_h, _ = _holdings(n)
    holdings = bob_h.keys[0]
    before = len(holdings.records)
    report = p1_test(
        key.bob[0], holdings, _params(n), alice_rng=Rng(5), recipient_rng=Rng(6)
    )
    assert not report.aborted and report.mismatches == 0 and report.rate == 0
    assert len(holdings.records) + len(holdings.tested) == before
    assert not np.isin(holdings.records.index, report.revealed).any()
    # a few dozen records cannot afford delta <= s_a
    assert report.delta > S_A
    assert not report.margin_applied and report.threshold == S_A
    record = report.to_record()
    assert record["pair"] == "alice-bob" and record["margin_applied"] is False


def test_test_tolerates_rates_up_to_s_a_on_small_samples():
    # 8 tested color records of R, one of them read as G: rate 1/8
    records = MeasurementRecords(np.arange(8), np.zeros(8), [1] + [0] * 7)
    holdings = KeyHoldings(records, np.zeros(0, dtype=np.int64))
    params = _params(8, s_a=0.1, s_v=0.11, test_fraction=0.9)
    report = p1_test(
        np.zeros(8, dtype=np.uint8), holdings, params, alice_rng=Rng(0), recipient_rng=Rng(1)
    )
    assert not report.margin_applied
    assert report.rate == report.mismatches / report.t
    assert report.aborted is (report.rate > 0.1)


def test_test_keeps_the_margin_on_large_samples():
    n = 2000
    params = _params(n, s_a=0.1, s_v=0.11, test_fraction=0.5)
    outcome = (np.arange(n) % 10 == 0).astype(np.uint8)
    holdings = KeyHoldings(
        MeasurementRecords(np.arange(n), np.zeros(n), outcome), np.zeros(0, dtype=np.int64)
    )
    report = p1_test(
        np.zeros(n, dtype=np.uint8), holdings, params, alice_rng=Rng(0), recipient_rng=Rng(1)
    )
    assert report.margin_applied and report.delta <= 0.1
    assert report.threshold == pytest.approx(0.1 - report.delta)
    # a 10% rate is within s_a but not within s_a - delta
    assert 0.06 < report.rate < 0.14
    assert report.aborted


def test_margin_applies():
    params = _params(64)
    assert params.nominal_test_size == 6
    assert not params.margin_applies(params.nominal_test_size)
    assert params.margin_applies(2000)


def test_protocol_warns_when_tests_cannot_afford_the_margin(caplog):
    with caplog.at_level(logging.WARNING, logger="qandysig.protocols.p1"):
        P1Protocol(_params(64))
    assert "too few for the margin" in caplog.text

    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="qandysig.protocols.p1"):
        P1Protocol(_params(20000, s_a=0.1, s_v=0.11))
    assert not caplog.records


def test_test_without_matching_bases_raises():
    params = _params(4, test_fraction=0.5)
    records = MeasurementRecords([0, 1, 2, 3], [1, 1, 1, 1], [0, 1, 0, 1])
    holdings = KeyHoldings(records, np.zeros(0, dtype=np.int64))
    with raises(InsufficientSample):
        p1_test(
            np.zeros(4, dtype=np.uint8), holdings, params, alice_rng=Rng(0), recipient_rng=Rng(1)
        )


def test_sign_once():
    key = PrivateKey(np.zeros((2, 4), dtype=np.uint8))
    sig = p1_sign(key, 1)
    assert sig.b == 1
    with raises(KeyAlreadyUsed):
        p1_sign(key, 0)


def test_verification_thresholds():
    # 10 color records of R; s_a * n = 2.5 with n = 10
    records = MeasurementRecords(np.arange(10), np.zeros(10), np.zeros(10))
    sig = P1Signature(0, np.zeros(10, dtype=np.uint8))
    assert p1_verify(records, sig, 0.25, 10) is Verdict.ACC
    flipped = P1Signature(0, np.array([1] * 3 + [0] * 7, dtype=np.uint8))  # G at 0..2
    assert p1_verify(records, flipped, 0.25, 10) is Verdict.REJ
    assert p1_arbitrate(records, flipped, 0.35, 10) is Arbitration.ACCEPT_BOB
    assert p1_arbitrate(records, flipped, 0.3, 10) is Arbitration.REJECT_BOB


def test_honest_noiseless_run_accepts():
    result = p1_run(_params(64), seed=3)
    assert result.outcome is Outcome.HONEST_ACC
    assert result.audit_clean
    assert result.mismatch_counts["bob"] == result.mismatch_counts["charlie"] == 0
    assert len(result.test_reports) == 4
    steps = [m.step for m in result.transcript]
    assert steps.index("symmetrize") < steps.index("disclose") < steps.index("test")
    assert steps.index("test") < steps.index("sign") < steps.index("dispute")


def test_noisy_channels_abort():
    result = p1_run(_params(512, p_channel=0.3), seed=1)
    assert result.aborted and result.abort_reason == "TEST"
    assert result.outcome is Outcome.HONEST_ABORT
    assert any(r["aborted"] for r in result.test_reports)


def test_runs_are_reproducible():
    strategy = Strategy(Role.FORGER_BOB)
    a = p1_run(_params(64, p_channel=0.01), strategy, seed=9)
    b = p1_run(_params(64, p_channel=0.01), strategy, seed=9)
    assert a.to_record() == b.to_record()
    assert a.transcript.to_jsonl() == b.transcript.to_jsonl()


def _results(n: int, strategy: Strategy, trials: int, **kwargs) -> List[TrialResult]:
    protocol = P1Protocol(_params(n, **kwargs))
    return [protocol.run_trial(strategy, Rng(1000 + t), trial=t) for t in range(trials)]


def _frequency(n: int, strategy: Strategy, outcome: Outcome, trials: int, **kwargs) -> float:
    protocol = P1Protocol(_params(n, **kwargs))
    hits = sum(
        protocol.run_trial(strategy, Rng(1000 + t), trial=t).outcome is outcome
        for t in range(trials)
    )
    return hits / trials


def test_forgery_success_decays_with_n():
    forger = Strategy(Role.FORGER_BOB)
    short = _frequency(32, forger, Outcome.FORGE_SUCC, 60)
    long = _frequency(512, forger, Outcome.FORGE_SUCC, 60)
    assert short > 0.15
    assert long <= 0.1
    assert long < short


def test_gap_budget_repudiation_succeeds_at_short_keys():
    results = _results(64, Strategy(Role.REPUDIATOR_ALICE), 400)
    successes = sum(r.outcome is Outcome.REPUD_SUCC for r in results)
    assert 0 < successes < 80

    # Bob's expected count sits at s_a n + floor(n (s_v - s_a) / 2) = 3.67
    counts = [r.mismatch_counts["bob"] for r in results if not r.aborted]
    assert abs(np.mean(counts) - (S_A * 64 + 1)) < 0.7


def test_value_flips_show_more_mismatches_than_basis_flips():
    totals = {}
    for flip in ("value", "basis"):
        strategy = Strategy(Role.REPUDIATOR_ALICE, budget=24, flip=flip)
        totals[flip] = sum(
            r.mismatch_counts["bob"] + r.mismatch_counts["charlie"]
            for r in _results(128, strategy, 40)
            if not r.aborted
        )
    # a conjugate character is only compared with records taken in its basis, half of them
    assert totals["value"] > 1.5 * totals["basis"]


@pytest.mark.parametrize("n", [64, 128])
def test_split_key_does_no_better_than_repudiation(n: int):
    trials = 200
    split = _frequency(n, Strategy(Role.SPLIT_KEY_ALICE), Outcome.REPUD_SUCC, trials)
    repudiation = _frequency(n, Strategy(Role.REPUDIATOR_ALICE), Outcome.REPUD_SUCC, trials)
    tolerance = 3 * np.sqrt(max(repudiation, 1 / trials) / trials)
    assert split <= repudiation + tolerance


@pytest.mark.parametrize("identical", [True, False])
def test_split_key_alice_fails(identical: bool):
    strategy = Strategy(Role.SPLIT_KEY_ALICE, identical=identical)
    result = P1Protocol(_params(128)).run_trial(strategy, Rng(4))
    assert result.outcome is Outcome.REPUD_FAIL
    if identical:
        assert result.charlie_verdict is Arbitration.ACCEPT_BOB


@pytest.mark.slow
def test_forgery_success_decays_over_the_grid():
    s_a, s_v = optimize_thresholds(0.0, 0.125)
    trials = 10_000
    forger = Strategy(Role.FORGER_BOB)
    freqs = [
        _frequency(n, forger, Outcome.FORGE_SUCC, trials, s_a=s_a, s_v=s_v) for n in GRID
    ]
    assert all(a >= b for a, b in zip(freqs, freqs[1:])), freqs
    fit = fit_decay(GRID, freqs, trials=[trials] * len(GRID), event="forge_succ")
    assert fit.decays, fit


@pytest.mark.slow
def test_gap_budget_repudiation_decays_over_the_grid():
    s_a, s_v = optimize_thresholds(0.0, 0.125)
    trials = 10_000
    repudiator = Strategy(Role.REPUDIATOR_ALICE)
    freqs = [
        _frequency(n, repudiator, Outcome.REPUD_SUCC, trials, s_a=s_a, s_v=s_v) for n in GRID
    ]
    assert freqs[0] > 0
    fit = fit_decay(GRID, freqs, trials=[trials] * len(GRID), event="repud_succ")
    assert fit.decays, fit


@pytest.mark.slow
def test_honest_aborts_decay_over_the_grid():
    # s_a n / 10 grows past one tolerated TEST mismatch from n = 128 on
    kwargs = dict(s_a=0.1, s_v=0.11, p_channel=0.01)
    trials = 4000
    freqs = [_frequency(n, Strategy(), Outcome.HONEST_ABORT, trials, **kwargs) for n in GRID]
    fit = fit_decay(GRID, freqs, trials=[trials] * len(GRID), event="honest_abort")
    assert fit.decays, fit
    assert 1 - freqs[-1] >= 0.99


@pytest.mark.slow
def test_noise_above_s_a_always_aborts():
    assert _frequency(512, Strategy(), Outcome.HONEST_ABORT, 200, p_channel=0.2) >= 0.99
