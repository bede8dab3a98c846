"""Validation suites that exercise the inequality machinery against known regimes."""

from __future__ import annotations

import math

import numpy as np

from .baselines import lhv_chsh, lhv_exact_joint, random_lhv_model, singlet_chsh
from .bell import CLASSICAL_BOUND, TSIRELSON_BOUND, bound_eq2, bound_eq3, check_eq1, check_eq4_joint
from .rng import Stream

SUITES = ("singlet", "lhv", "inequalities")

CHSH_QUADRUPLE = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)


def random_simplex(stream, n: int, k: int):
    """``n`` random distributions over ``{+1,-1}^k``.

    Half are flat-Dirichlet draws; the other half are sparse (a random subset of
    at most three cells) so the equality cases on the simplex boundary get hit.
    """
    cells = 2**k
    g = -np.log(stream.uniform(size=(n, cells)))
    sparse = stream.uniform(size=(n, cells)) < 3.0 / cells
    sparse[np.arange(n), np.minimum((stream.uniform(size=n) * cells).astype(int), cells - 1)] = True
    half = np.arange(n) >= n // 2
    g = np.where(half[:, None] & ~sparse, 0.0, g)
    q = g / g.sum(axis=1, keepdims=True)
    return q.reshape((n,) + (2,) * k)


def inequalities_suite(seed: int = 0, n: int = 10_000) -> dict:
    root = Stream.from_seed(seed, 11)
    q3 = random_simplex(root.child(0), n, 3)
    q4 = random_simplex(root.child(1), n, 4)
    checks = []
    for name, fn, q in (
        ("eq1", check_eq1, q3),
        ("eq2", bound_eq2, q3),
        ("eq3", bound_eq3, q3),
        ("eq4_joint", check_eq4_joint, q4),
    ):
        holds = np.asarray(fn(q)[-1])
        checks.append({"check": name, "distributions": n, "failures": int((~holds).sum()), "passed": bool(holds.all())})
    return {"suite": "inequalities", "passed": all(c["passed"] for c in checks), "checks": checks}


def singlet_suite(seed: int = 0, trials: int = 1_000_000, tolerance: float = 0.02) -> dict:
    res = singlet_chsh(CHSH_QUADRUPLE, Stream.from_seed(seed, 12), trials)
    ok = abs(res.s_value - TSIRELSON_BOUND) <= tolerance
    return {
        "suite": "singlet",
        "passed": bool(ok),
        "checks": [
            {
                "check": "tsirelson_saturation",
                "S": res.s_value,
                "stderr": res.stderr,
                "target": TSIRELSON_BOUND,
                "tolerance": tolerance,
                "trials_per_pair": trials,
                "passed": bool(ok),
            }
        ],
    }


def lhv_suite(seed: int = 0, models: int = 100, trials: int = 100_000, grid: int = 10_000) -> dict:
    """Random local models at random settings: Monte Carlo and exact ``S <= 2``."""
    root = Stream.from_seed(seed, 13)
    rows = []
    for i in range(models):
        st = root.child(i)
        model = random_lhv_model(st.child(0))
        quad = tuple(float(a) for a in 2 * math.pi * st.child(1).uniform(size=4))
        res = lhv_chsh(model, quad, st.child(2), trials)
        s_exact = float(check_eq4_joint(lhv_exact_joint(model, quad, grid))[0])
        rows.append(
            {
                "model": i,
                "settings": list(quad),
                "S": res.s_value,
                "stderr": res.stderr,
                "S_exact": s_exact,
                "mc_ok": bool(res.s_value <= CLASSICAL_BOUND + 3 * res.stderr),
                "exact_ok": bool(s_exact <= CLASSICAL_BOUND + 1e-9),
            }
        )
    mc_fail = sum(not r["mc_ok"] for r in rows)
    ex_fail = sum(not r["exact_ok"] for r in rows)
    return {
        "suite": "lhv",
        "passed": mc_fail == 0 and ex_fail == 0,
        "checks": [
            {"check": "monte_carlo_bound", "models": models, "trials_per_pair": trials, "failures": mc_fail,
             "max_S": max(r["S"] for r in rows), "passed": mc_fail == 0},
            {"check": "exact_joint_bound", "models": models, "grid": grid, "failures": ex_fail,
             "max_S": max(r["S_exact"] for r in rows), "passed": ex_fail == 0},
        ],
        "models": rows,
    }


def run_validation(suite: str, seed: int = 0, quick: bool = False) -> dict:
    """Run one named suite and return its machine-readable verdict."""
    if suite == "singlet":
        return singlet_suite(seed, trials=100_000 if quick else 1_000_000)
    if suite == "lhv":
        return lhv_suite(seed, models=10 if quick else 100, trials=10_000 if quick else 100_000)
    if suite == "inequalities":
        return inequalities_suite(seed, n=1000 if quick else 10_000)
    raise ValueError(f"unknown validation suite {suite!r}; expected one of {SUITES}")
