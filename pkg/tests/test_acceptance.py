"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import json
import math
import subprocess
import sys
import time
from dataclasses import replace

import numpy as np
import pytest
from scipy import stats

from xpbell import kernels
from xpbell.acquisition import AdcConfig, dequantize, quantize
from xpbell.bell import CLASSICAL_BOUND, TSIRELSON_BOUND
from xpbell.experiment import AcquisitionSpec, ExperimentConfig, StateSpec, run_experiment, simulate_windows
from xpbell.measurement import DetectorConfig, JointNoiseModel, joint_measure_many
from xpbell.oscillator import GaussianState, PhysicalConfig, evolve, quadrature, squeezed_along, squeezed_state
from xpbell.rng import FAIL, NOISE, Stream, derive_keys
from xpbell.sampling import FUZZY, SHARP, CalibrationReport, ThresholdConfig
from xpbell.validation import inequalities_suite, lhv_suite, singlet_suite


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}", flush=True)
        assert ok, detail

    return emit


def test_criterion_1_inequalities(verdict):
    t0 = time.perf_counter()
    res = inequalities_suite(seed=0, n=10_000)
    dt = time.perf_counter() - t0
    fails = {c["check"]: c["failures"] for c in res["checks"]}
    verdict(1, res["passed"] and dt < 5.0, f"failures {fails}, {dt:.2f} s")


def test_criterion_2_tsirelson(verdict):
    t0 = time.perf_counter()
    res = singlet_suite(seed=0, trials=1_000_000, tolerance=0.02)
    dt = time.perf_counter() - t0
    again = singlet_suite(seed=0, trials=1_000_000, tolerance=0.02)
    s = res["checks"][0]["S"]
    same = again["checks"][0]["S"] == s
    verdict(2, res["passed"] and same and dt < 10.0,
            f"S = {s:.5f} (target {TSIRELSON_BOUND:.5f} +- 0.02), repeatable={same}, {dt:.2f} s")


def test_criterion_3_classical_bound(verdict):
    t0 = time.perf_counter()
    res = lhv_suite(seed=0, models=100, trials=100_000, grid=10_000)
    dt = time.perf_counter() - t0
    mc, ex = res["checks"]
    verdict(3, res["passed"] and dt < 60.0,
            f"MC failures {mc['failures']} (max S {mc['max_S']:.4f}), exact failures {ex['failures']} "
            f"(max S {ex['max_S']:.12f}), {dt:.1f} s")


def _random_config(stream, i):
    u = stream.uniform(size=24)
    phys = PhysicalConfig(0.5 + 1.5 * u[0], 0.5 + 1.5 * u[1], 0.5 + u[2])
    kind = ("ground", "coherent", "squeezed")[int(3 * u[3])]
    state = StateSpec(kind, r=float(3 * u[4] - 1.5), x0=float(4 * u[5] - 2), p0=float(4 * u[6] - 2))
    sx = math.exp(4 * u[7] - 2) * math.sqrt(phys.hbar / 2)
    sp = phys.hbar / 2 / sx * (1 + 2 * u[8] ** 2)
    dets = (
        DetectorConfig("X", "", float(2 * math.pi * u[9]), float(0.05 * u[10])),
        DetectorConfig("X", "'", float(2 * math.pi * u[11]), float(0.05 * u[10])),
        DetectorConfig("P", "", float(2 * math.pi * u[12]), float(0.05 * u[13]), failure=float(0.02 * u[14])),
        DetectorConfig("P", "'", float(2 * math.pi * u[15]), float(0.05 * u[13])),
    )
    cfg = ExperimentConfig(physics=phys, state=state, noise=JointNoiseModel(sx, sp), detectors=dets,
                           window=int(10 + 190 * u[16]), trials=10_000, seed=1000 + i,
                           override_calibration=True)
    # thresholds near the X-side output spread so outcomes are mixed where the product bound allows
    mx = np.sqrt(state.build(phys).sxx + sx * sx)
    eps_x = float(mx * (0.7 + 0.6 * u[17]))
    eps_p = float(min(phys.hbar / 2 / eps_x * (0.5 + 0.49 * u[18]), 10 * sp))
    cfg = replace(cfg, thresholds=ThresholdConfig(eps_x, eps_p))
    if u[19] < 0.4:
        cfg = replace(cfg, acquisition=AcquisitionSpec(bits=int(8 + 9 * u[20]), jitter=float(0.05 * u[21])))
    return cfg


def test_criterion_4_joint_measurement_compliance(verdict):
    root = Stream.from_seed(4)
    rows = []
    for i in range(20):
        cfg = _random_config(root.child(i), i)
        rep = run_experiment(cfg)
        c = rep.chsh
        rows.append((c.s_value, c.stderr, cfg.acquisition is not None))
    bad = [r for r in rows if not r[0] <= CLASSICAL_BOUND + 3 * r[1]]
    worst = max((r[0] - 2) / r[1] if r[1] > 0 else (0.0 if r[0] <= 2 else math.inf) for r in rows)
    n_acq = sum(r[2] for r in rows)
    verdict(4, not bad, f"{len(bad)} of 20 configs above 2 + 3 sigma ({n_acq} with acquisition), "
                        f"max S {max(r[0] for r in rows):.4f}, worst (S-2)/sigma {worst:.2f}")


def test_criterion_5_joint_floor(verdict):
    root = Stream.from_seed(5)
    n = 100_000
    bad, worst, n_floor = 0, math.inf, 0
    for i in range(1000):
        st = root.child(i)
        u = st.child(0).uniform(size=8)
        phys = PhysicalConfig(0.5 + 1.5 * u[0], 0.5 + 1.5 * u[1], 0.5 + u[2])
        state = squeezed_state(phys, float(3 * u[3] - 1.5), float(u[4]), float(-u[4]))
        sx = math.exp(4 * u[5] - 2) * math.sqrt(phys.hbar / 2)
        # a quarter of the models sit exactly on the floor
        sp = phys.hbar / 2 / sx * (1.0 if i % 4 == 0 else 1 + 3 * u[6])
        n_floor += i % 4 == 0
        phase = float(2 * math.pi * u[7])
        x, p, _, _ = joint_measure_many(state, DetectorConfig("X", "", phase), DetectorConfig("P", "", phase),
                                        JointNoiseModel(sx, sp), phys, st.child(1), n)
        ratio = np.std(x, ddof=1) * np.std(p, ddof=1) / phys.hbar
        worst = min(worst, ratio)
        bad += ratio < 1 - 3 / math.sqrt(n)
    verdict(5, bad == 0, f"{bad} of 1000 configs below hbar(1 - 3/sqrt(N)), min ratio {worst:.5f}, "
                         f"{n_floor} at the floor")


def _partner_off_verdicts(det, cfg, eps, seed, n, w):
    # calibration-style source: squeezed along the quadrature the detector reads
    mu, var = quadrature(squeezed_along(cfg, det.observable, det.phase, 3.0), det.observable, det.phase, cfg)
    key = Stream.from_seed(seed).key
    idx = np.arange(n)
    return kernels.gaussian_window_verdicts(derive_keys(key, idx, NOISE), derive_keys(key, idx, FAIL),
                                            w, mu, math.sqrt(var + det.noise ** 2), det.failure, eps)


def _binom_ok(k_joint, p_a, p_b, n):
    prod = p_a * p_b
    sig = math.sqrt(max(prod * (1 - prod), 1.0 / n) / n)
    return abs(k_joint / n - prod) <= 3 * sig, prod, sig


def test_criterion_6_probability_structure(verdict):
    cfg = PhysicalConfig()
    w, n = 100, 400_000
    details, ok = [], True

    # low-rate regime: both detectors partner-off, thresholds at the 0.6% fuzzy quantile
    dx, dp = DetectorConfig("X", "", 0.0, 0.02), DetectorConfig("P", "", 0.0, 0.02)
    sigma = math.sqrt(0.5 * cfg.hbar * math.exp(-6) + 0.02 ** 2)
    eps = sigma * math.sqrt(stats.chi2.ppf(1 - 0.006, w - 1) / (w - 1))
    vx = _partner_off_verdicts(dx, cfg, eps, 61, n, w)
    vp = _partner_off_verdicts(dp, cfg, eps, 62, n, w)
    pa, pb = float(np.mean(vx == FUZZY)), float(np.mean(vp == FUZZY))
    rep_x = CalibrationReport("X", n, int(np.sum(vx == FUZZY)), 0)
    rep_p = CalibrationReport("P", n, int(np.sum(vp == FUZZY)), 0)
    k = int(np.sum((vx == FUZZY) & (vp == FUZZY)))
    good, prod, sig = _binom_ok(k, pa, pb, n)
    ok &= good and rep_x.passed and rep_p.passed
    details.append(f"low-rate p(-)={pa:.4f},{pb:.4f} p(-,-)={k / n:.2e} vs {prod:.2e}+-{3 * sig:.1e}")

    # joint run of the calibrated default configuration
    base = ExperimentConfig(trials=100_000)
    rep = run_experiment(base)
    ok &= all(r.passed for r in rep.calibration)
    for x, p in rep.outcomes:
        m = (x != 0) & (p != 0)
        x, p = x[m], p[m]
        good, prod, sig = _binom_ok(int(np.sum((x == FUZZY) & (p == FUZZY))),
                                    float(np.mean(x == FUZZY)), float(np.mean(p == FUZZY)), m.sum())
        ok &= good
    details.append("joint-run p(-,-) = p_x(-) p_p(-) within 3 sigma" if ok else "joint-run product check failed")

    # p(+,+) versus window length, thresholds with eps_x * eps_p <= 0.4 hbar
    configs = {
        "default": ExperimentConfig(trials=10_000),
        "floor": ExperimentConfig(state=StateSpec("ground"), noise=JointNoiseModel(math.sqrt(0.5), math.sqrt(0.5)),
                                  thresholds=ThresholdConfig(math.sqrt(0.4), math.sqrt(0.4)), trials=10_000),
        "skew": ExperimentConfig(state=StateSpec("squeezed", r=0.5), noise=JointNoiseModel(0.3, 0.5 / 0.3),
                                 thresholds=ThresholdConfig(0.35, 0.4 / 0.35), trials=10_000),
    }
    for name, c in configs.items():
        assert c.thresholds.eps_x * c.thresholds.eps_p <= 0.4 * c.physics.hbar * (1 + 1e-12)
        rates = []
        for wlen in (25, 100, 400):
            cw = replace(c, window=wlen)
            pp = tot = 0
            for pair in range(4):
                x, p = simulate_windows(cw, pair, 0, cw.trials)
                m = (x != 0) & (p != 0)
                pp += int(np.sum((x[m] == SHARP) & (p[m] == SHARP)))
                tot += int(m.sum())
            rates.append(pp / tot)
        mono = rates[0] >= rates[1] >= rates[2]
        ok &= mono and rates[2] < 0.01
        details.append(f"{name} p(+,+) W=25/100/400: " + "/".join(f"{r:.2e}" for r in rates))
    verdict(6, bool(ok), "; ".join(details))


def test_criterion_7_acquisition_fidelity(verdict):
    rng = Stream.from_seed(7)
    worst = 0.0
    for i in range(10):
        u = rng.child(i).uniform(size=3)
        lo = float(20 * u[0] - 10)
        adc = AdcConfig(int(4 + 20 * u[1]) if u[1] < 0.999 else 24, lo, lo + float(0.01 + 10 * u[2]))
        v = adc.vmin + (adc.vmax - adc.vmin) * rng.child(i, 1).uniform(size=10_000)
        v = np.minimum(v, np.nextafter(adc.vmax, adc.vmin))
        err = np.max(np.abs(dequantize(quantize(v, adc), adc) - v)) / adc.lsb
        worst = max(worst, err)
    rt_ok = worst <= 0.5 + 1e-9

    cfg = ExperimentConfig(acquisition=AcquisitionSpec(bits=16, jitter=0.0))
    flips = total = 0
    for pair in range(4):
        dig = simulate_windows(cfg, pair, 0, cfg.trials)
        ana = simulate_windows(cfg, pair, 0, cfg.trials, acquisition=False)
        for s in range(2):
            flips += int(np.sum(dig[s] != ana[s]))
            total += dig[s].size
    rate = flips / total
    verdict(7, rt_ok and rate < 1e-3,
            f"round-trip max error {worst:.4f} LSB on 1e5 values; 16-bit flips {flips}/{total} = {rate:.2e}")


def _cli_run(tmp_path, name, *extra):
    out = tmp_path / name
    subprocess.run([sys.executable, "-m", "xpbell", "run", "--seed", "42", "-o", str(out), *extra],
                   check=True, timeout=600)
    return out.read_bytes()


def test_criterion_8_determinism(verdict, tmp_path):
    a = _cli_run(tmp_path, "a.json")
    b = _cli_run(tmp_path, "b.json")
    w1 = _cli_run(tmp_path, "w1.json", "--workers", "1")
    w8 = _cli_run(tmp_path, "w8.json", "--workers", "8")
    c1 = _cli_run(tmp_path, "w1.csv", "--workers", "1", "--format", "csv")
    c8 = _cli_run(tmp_path, "w8.csv", "--workers", "8", "--format", "csv")
    json.loads(a)
    ok = a == b and w1 == w8 and a == w1 and c1 == c8
    verdict(8, ok, f"repeat identical={a == b}, workers 1 vs 8 identical json={w1 == w8} csv={c1 == c8}")


def test_criterion_9_oscillator_invariants(verdict):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(10_000):
        cfg = PhysicalConfig(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.2, 2))
        s = evolve(squeezed_state(cfg, rng.uniform(-1.5, 1.5), rng.normal(), rng.normal()), rng.uniform(0, 7), cfg)
        k = rng.uniform(1, 3)
        s = GaussianState(s.x, s.p, k * s.sxx, k * s.sxp, k * s.spp)
        e = evolve(s, rng.uniform(-50, 50), cfg)
        worst = max(worst, abs(e.det - s.det) / s.det)
    period_err = 0.0
    for _ in range(1000):
        cfg = PhysicalConfig(rng.uniform(0.5, 2), rng.uniform(0.5, 2), rng.uniform(0.2, 2))
        s = squeezed_state(cfg, rng.uniform(-1.5, 1.5), rng.normal(), rng.normal())
        e = evolve(s, 2 * math.pi / cfg.omega, cfg)
        scale = np.array([1 + abs(s.x) + abs(s.p), 1 + abs(s.x) + abs(s.p), s.sxx, math.sqrt(s.sxx * s.spp), s.spp])
        diff = np.abs(np.array([e.x - s.x, e.p - s.p, e.sxx - s.sxx, e.sxp - s.sxp, e.spp - s.spp])) / scale
        period_err = max(period_err, float(diff.max()))
    verdict(9, worst <= 1e-12 and period_err <= 1e-9,
            f"max relative det drift {worst:.2e} over 1e4 evolutions; full-period error {period_err:.2e}")
