"""Reference models for the inequality machinery.

``LhvModel`` is a local hidden-variable model: a shared angle ``lambda`` and
deterministic +-1 responses that see only their own setting. It can never
exceed ``S = 2``. The singlet sampler draws spin-singlet outcome pairs with
``E(a, b) = -cos(a - b)`` and reaches ``2 sqrt 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bell import CountTable, PAIR_LABELS, chsh_from_tables, s_value

TWO_PI = 2.0 * math.pi


def _sign(v):
    return np.where(v >= 0, 1, -1).astype(np.int8)


@dataclass(frozen=True)
class LhvModel:
    """Hidden angle distributed as a mix of uniform and wrapped-normal parts.

    Responses are ``sign_a * sign(cos(freq_a * (lam - s)) + bias_a)`` and the
    same form for side B.
    """

    uniform_weight: float = 1.0
    center: float = 0.0
    width: float = 1.0
    freq_a: int = 1
    bias_a: float = 0.0
    sign_a: int = 1
    freq_b: int = 1
    bias_b: float = 0.0
    sign_b: int = 1

    def __post_init__(self):
        if not 0.0 <= self.uniform_weight <= 1.0:
            raise ValueError("uniform_weight must lie in [0, 1]")
        if not self.width > 0:
            raise ValueError("width must be > 0")
        if self.sign_a not in (1, -1) or self.sign_b not in (1, -1):
            raise ValueError("response signs must be +1 or -1")

    def response_a(self, setting, lam):
        return (self.sign_a * _sign(np.cos(self.freq_a * (np.asarray(lam) - setting)) + self.bias_a)).astype(np.int8)

    def response_b(self, setting, lam):
        return (self.sign_b * _sign(np.cos(self.freq_b * (np.asarray(lam) - setting)) + self.bias_b)).astype(np.int8)

    def density(self, lam):
        """Density of ``lambda`` on ``[0, 2 pi)``."""
        lam = np.asarray(lam, dtype=np.float64)
        wrapped = np.zeros_like(lam)
        for k in range(-5, 6):
            d = lam - self.center + k * TWO_PI
            wrapped += np.exp(-0.5 * (d / self.width) ** 2)
        wrapped /= self.width * math.sqrt(TWO_PI)
        return self.uniform_weight / TWO_PI + (1.0 - self.uniform_weight) * wrapped

    def sample_lambda(self, stream, n: int):
        u = stream.uniform(size=n)
        z = stream.normal(size=n)
        flat = stream.uniform(size=n) * TWO_PI
        peaked = np.mod(self.center + self.width * z, TWO_PI)
        return np.where(u < self.uniform_weight, flat, peaked)


def random_lhv_model(stream) -> LhvModel:
    u = stream.uniform(size=9)
    return LhvModel(
        uniform_weight=float(u[0]),
        center=float(TWO_PI * u[1]),
        width=float(0.2 + 2.0 * u[2]),
        freq_a=1 + int(3 * u[3]),
        bias_a=float(1.6 * u[4] - 0.8),
        sign_a=1 if u[5] < 0.5 else -1,
        freq_b=1 + int(3 * u[6]),
        bias_b=float(1.6 * u[7] - 0.8),
        sign_b=1 if u[8] < 0.5 else -1,
    )


def lhv_trials(model: LhvModel, settings, stream, n: int):
    """``n`` trials at ``settings = (s1, s2)``; one hidden angle per trial."""
    lam = model.sample_lambda(stream, n)
    return model.response_a(settings[0], lam), model.response_b(settings[1], lam)


def lhv_trial(model: LhvModel, settings, stream):
    a, b = lhv_trials(model, settings, stream, 1)
    return int(a[0]), int(b[0])


def quadruple_pairs(quad):
    """Setting pairs in CHSH order from ``(a, a', b, b')``."""
    a, a2, b, b2 = quad
    return ((a, b), (a2, b), (a, b2), (a2, b2))


def lhv_chsh(model: LhvModel, quad, stream, n: int):
    tables = []
    for i, (lab, pair) in enumerate(zip(PAIR_LABELS, quadruple_pairs(quad))):
        x, y = lhv_trials(model, pair, stream.child(i), n)
        tables.append(CountTable.from_outcomes(lab, x, y))
    return chsh_from_tables(tables)


def lhv_exact_joint(model: LhvModel, quad, n_grid: int = 10_000):
    """Joint distribution of ``(A(a), A(a'), B(b), B(b'))`` on a midpoint lambda grid."""
    a, a2, b, b2 = quad
    lam = (np.arange(n_grid) + 0.5) * (TWO_PI / n_grid)
    w = model.density(lam)
    w = w / w.sum()
    idx = [(r < 0).astype(np.int64) for r in (
        model.response_a(a, lam), model.response_a(a2, lam), model.response_b(b, lam), model.response_b(b2, lam)
    )]
    flat = 8 * idx[0] + 4 * idx[1] + 2 * idx[2] + idx[3]
    return np.bincount(flat, weights=w, minlength=16).reshape(2, 2, 2, 2)


@dataclass(frozen=True)
class SingletSampler:
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("analyzer angles must be finite")

    @property
    def expected_correlation(self) -> float:
        return -math.cos(self.a - self.b)


def singlet_trials(sampler: SingletSampler, stream, n: int):
    """Outcome pairs drawn from the singlet table ``p(same) = (1 - cos(a - b)) / 2``."""
    u = stream.uniform(size=(n, 2))
    first = np.where(u[:, 0] < 0.5, 1, -1).astype(np.int8)
    same = u[:, 1] < 0.5 * (1.0 - math.cos(sampler.a - sampler.b))
    second = np.where(same, first, -first).astype(np.int8)
    return first, second


def singlet_trial(sampler: SingletSampler, stream):
    a, b = singlet_trials(sampler, stream, 1)
    return int(a[0]), int(b[0])


def singlet_chsh(quad, stream, n: int):
    tables = []
    for i, (lab, pair) in enumerate(zip(PAIR_LABELS, quadruple_pairs(quad))):
        x, y = singlet_trials(SingletSampler(*pair), stream.child(i), n)
        tables.append(CountTable.from_outcomes(lab, x, y))
    return chsh_from_tables(tables)


def singlet_exact_s(quad) -> float:
    return float(s_value(*(-math.cos(p - q) for p, q in quadruple_pairs(quad))))


def angle_grid(steps: int, lo: float = 0.0, hi: float = math.pi):
    """All quadruples ``(a, a', b, b')`` from ``steps`` evenly spaced angles in ``[lo, hi)``."""
    angles = lo + (hi - lo) * np.arange(steps) / steps
    g = np.stack(np.meshgrid(angles, angles, angles, angles, indexing="ij"), axis=-1)
    return [tuple(map(float, q)) for q in g.reshape(-1, 4)]


def scan_settings(family, grid, stream, trials: int):
    """Monte Carlo ``S`` for every quadruple of ``grid``.

    ``family`` is ``"singlet"`` or an :class:`LhvModel`. Returns
    ``(rows, best)`` where each row is a dict and ``best`` indexes the largest S.
    """
    grid = list(grid)
    if not grid:
        raise ValueError("settings grid is empty")
    rows = []
    for i, quad in enumerate(grid):
        if isinstance(family, LhvModel):
            res = lhv_chsh(family, quad, stream.child(i), trials)
        elif family == "singlet":
            res = singlet_chsh(quad, stream.child(i), trials)
        else:
            raise ValueError(f"unknown settings family {family!r}")
        rows.append({"settings": list(quad), "S": res.s_value, "stderr": res.stderr})
    best = int(np.argmax([r["S"] for r in rows]))
    return rows, best
