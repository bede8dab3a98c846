import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from xpbell.experiment import ExperimentConfig, simulate_windows
from xpbell.measurement import DetectorConfig, JointNoiseModel, joint_measure_many
from xpbell.oscillator import PhysicalConfig, ground_state, squeezed_state
from xpbell.rng import Stream
from xpbell.sampling import (
    BinaryOutcome,
    CalibrationError,
    CalibrationReport,
    ThresholdConfig,
    binarize,
    calibrate,
    estimate_spread,
    joint_binarize,
    outcome_records,
)


def test_estimate_spread_examples():
    assert estimate_spread([3.0, 3.0, 3.0]) == 0.0
    assert estimate_spread([0.0, 2.0]) == pytest.approx(math.sqrt(2))
    assert estimate_spread([1.0]) is None
    assert estimate_spread([1.0, 2.0, 3.0], failed=[False, True, True]) is None
    assert estimate_spread([1.0, np.nan, 3.0]) == pytest.approx(math.sqrt(2))


def test_estimate_spread_monte_carlo():
    d = estimate_spread(Stream.from_seed(1).normal(0.0, 1.3, size=10_000))
    assert d == pytest.approx(1.3, rel=0.02)


def test_binarize_examples():
    assert binarize(0.0, 0.1) == 1
    assert binarize(0.2, 0.1) == -1
    assert binarize(0.1, 0.1) == -1
    with pytest.raises(ValueError):
        binarize(-1.0, 0.1)
    with pytest.raises(ValueError):
        binarize(1.0, 0.0)


@given(st.floats(0, 100), st.floats(1e-6, 100), st.floats(0, 100))
def test_binarize_monotone_in_threshold(spread, eps, bump):
    lo, hi = binarize(spread, eps), binarize(spread, eps + bump)
    assert lo in (1, -1) and hi in (1, -1)
    assert hi >= lo


def test_threshold_config():
    ThresholdConfig(0.4, 1.0).check(PhysicalConfig())
    with pytest.raises(ValueError):
        ThresholdConfig(1.0, 0.5).check(PhysicalConfig())
    with pytest.raises(ValueError):
        ThresholdConfig(0.0, 1.0)
    assert ThresholdConfig(0.3, 0.7).for_observable("P") == 0.7


def test_binary_outcome_values():
    BinaryOutcome(1, "X", "", 0)
    with pytest.raises(ValueError):
        BinaryOutcome(0, "X", "", 0)
    recs = outcome_records(np.array([1, 0, -1], dtype=np.int8), "P", "'")
    assert [(r.value, r.window) for r in recs] == [(1, 0), (-1, 2)]


def test_calibrate_perfect_detector(backend, unit):
    rep = calibrate(DetectorConfig("X"), squeezed_state(unit, 3.0), unit, 0.4, 2000, Stream.from_seed(1))
    assert rep.minus_count == 0 and rep.p_minus == 0.0 and rep.passed
    assert rep.to_dict()["passed"] is True


def test_calibrate_coin_flip_detector(backend, unit):
    # oracle: (W-1) S^2 / sigma^2 ~ chi2(W-1); choose sigma so P(S >= eps) = 1/2
    w, eps = 100, 0.5
    sigma = eps / math.sqrt(stats.chi2.median(w - 1) / (w - 1))
    state = squeezed_state(unit, 4.0)
    noise = math.sqrt(sigma**2 - state.sxx)
    n = 20_000
    rep = calibrate(DetectorConfig("X", noise=noise), state, unit, eps, n, Stream.from_seed(2), w)
    assert abs(rep.p_minus - 0.5) < 3 * math.sqrt(0.25 / n)
    assert not rep.passed


def test_calibrate_failures_tallied(unit):
    det = DetectorConfig("P", failure=0.02)
    rep = calibrate(det, squeezed_state(unit, -3.0), unit, 1.0, 5000, Stream.from_seed(3), width=2)
    assert rep.indeterminate > 0
    assert rep.minus_count == 0


def test_calibrate_reproducible_and_guarded(unit):
    args = (DetectorConfig("X", noise=0.3), ground_state(unit), unit, 0.8, 3000)
    a = calibrate(*args, Stream.from_seed(4))
    b = calibrate(*args, Stream.from_seed(4))
    assert a == b
    with pytest.raises(ValueError):
        calibrate(*args[:4], 999, Stream.from_seed(4))


def test_calibration_report_threshold():
    assert CalibrationReport("X", 1000, 9, 0).passed
    assert not CalibrationReport("X", 1000, 10, 0).passed


def _joint_windows(state, noise, n, w, seed, cfg):
    x, p, xf, pf = joint_measure_many(state, DetectorConfig("X"), DetectorConfig("P"), noise, cfg,
                                      Stream.from_seed(seed), n * w)
    return x.reshape(n, w), p.reshape(n, w), xf.reshape(n, w), pf.reshape(n, w)


def test_joint_binarize_requires_calibration(unit):
    x, p, xf, pf = _joint_windows(ground_state(unit), JointNoiseModel(1, 1), 10, 5, 1, unit)
    th = ThresholdConfig(0.5, 0.5)
    with pytest.raises(CalibrationError):
        joint_binarize(x, p, th, xf, pf)
    bad = [CalibrationReport("X", 1000, 500, 0), CalibrationReport("P", 1000, 0, 0)]
    with pytest.raises(CalibrationError) as exc:
        joint_binarize(x, p, th, xf, pf, calibrations=bad)
    assert len(exc.value.reports) == 2
    xo, po = joint_binarize(x, p, th, xf, pf, calibrations=bad, override=True)
    assert xo.shape == (10,) and set(np.unique(xo)) <= {-1, 1}


def test_joint_binarize_matches_estimate_spread(unit):
    x, p, xf, pf = _joint_windows(ground_state(unit), JointNoiseModel(0.8, 0.8), 200, 10, 2, unit)
    th = ThresholdConfig(0.9, 0.5)
    xo, po = joint_binarize(x, p, th, xf, pf, override=True)
    for i in range(200):
        assert xo[i] == binarize(estimate_spread(x[i]), 0.9)
        assert po[i] == binarize(estimate_spread(p[i]), 0.5)


def test_double_sharp_vanishes_with_window(unit):
    # floor-saturating noise, thresholds at eps_x * eps_p = 0.4 hbar
    noise = JointNoiseModel(math.sqrt(0.5), math.sqrt(0.5))
    th = ThresholdConfig(math.sqrt(0.4) * 1.2, math.sqrt(0.4) / 1.2)
    rates = []
    for w in (4, 25, 100):
        x, p, xf, pf = _joint_windows(ground_state(unit), noise, 20_000, w, 3, unit)
        xo, po = joint_binarize(x, p, th, xf, pf, override=True)
        rates.append(np.mean((xo == 1) & (po == 1)))
    assert rates[0] > rates[1] >= rates[2]
    assert rates[2] == 0.0


def test_mixed_outcomes_dominate_default():
    cfg = ExperimentConfig(trials=5000)
    counts = np.zeros(4)
    for pair in range(4):
        xo, po = simulate_windows(cfg, pair, 0, cfg.trials)
        counts += [np.sum((xo == a) & (po == b)) for a, b in ((1, 1), (1, -1), (-1, 1), (-1, -1))]
    pp, pm, mp, mm = counts / counts.sum()
    assert pm + mp > 0.5
    assert pm + mp > max(pp, mm)
    assert pp == 0.0
