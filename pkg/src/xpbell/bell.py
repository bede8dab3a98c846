"""Correlation functions and the CHSH-type inequality for ``X, X', P, P'``.

Outcome distributions over ``{+1, -1}^k`` are numpy arrays of shape
``(..., 2, ..., 2)`` where index 0 stands for ``+1`` and index 1 for ``-1``.
Leading axes are batch axes, so every check runs on many distributions at
once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

CLASSICAL_BOUND = 2.0
TSIRELSON_BOUND = 2.0 * math.sqrt(2.0)
SLACK = 1e-12

_PM = np.array([1.0, -1.0])
PAIR_LABELS = ("X,P", "X',P", "X,P'", "X',P'")


@dataclass(frozen=True)
class CountTable:
    """Joint counts of one setting pair; ``counts`` is ``(n++, n+-, n-+, n--)``."""

    label: str
    counts: tuple = (0, 0, 0, 0)

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if len(c) != 4 or min(c) < 0:
            raise ValueError("counts must be four non-negative integers")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_array(cls, label, arr) -> "CountTable":
        return cls(label, tuple(np.asarray(arr).reshape(4).tolist()))

    @classmethod
    def from_outcomes(cls, label, a, b) -> "CountTable":
        a = np.asarray(a)
        b = np.asarray(b)
        return cls(
            label,
            (
                int(np.sum((a > 0) & (b > 0))),
                int(np.sum((a > 0) & (b < 0))),
                int(np.sum((a < 0) & (b > 0))),
                int(np.sum((a < 0) & (b < 0))),
            ),
        )

    @property
    def total(self) -> int:
        return sum(self.counts)

    def __add__(self, other: "CountTable") -> "CountTable":
        if other.label != self.label:
            raise ValueError(f"cannot merge tables {self.label!r} and {other.label!r}")
        return CountTable(self.label, tuple(a + b for a, b in zip(self.counts, other.counts)))

    def flipped(self) -> "CountTable":
        pp, pm, mp, mm = self.counts
        return CountTable(self.label, (mm, mp, pm, pp))

    def to_dict(self) -> dict:
        pp, pm, mp, mm = self.counts
        return {"label": self.label, "++": pp, "+-": pm, "-+": mp, "--": mm, "total": self.total}


@dataclass(frozen=True)
class CorrelationEstimate:
    value: float
    stderr: float
    n: int

    def to_dict(self) -> dict:
        return {"E": self.value, "stderr": self.stderr, "n": self.n}


@dataclass(frozen=True)
class ChshResult:
    """Four correlations ordered ``(X,P), (X',P), (X,P'), (X',P')`` and the CHSH value."""

    correlations: tuple
    s_value: float
    stderr: float
    sample_mode: str = "dual"
    classical_bound: float = CLASSICAL_BOUND
    tsirelson_bound: float = TSIRELSON_BOUND
    violated: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "violated", self.s_value > self.classical_bound + 3 * self.stderr)

    def to_dict(self) -> dict:
        return {
            "correlations": {lab: e.to_dict() for lab, e in zip(PAIR_LABELS, self.correlations)},
            "S": self.s_value,
            "stderr": self.stderr,
            "classical_bound": self.classical_bound,
            "tsirelson_bound": self.tsirelson_bound,
            "violated": self.violated,
            "sample_mode": self.sample_mode,
        }


def correlation(table: CountTable) -> CorrelationEstimate:
    """``E = p(a = b) - p(a = -b)`` with delta-method error ``sqrt((1 - E^2) / N)``."""
    n = table.total
    if n == 0:
        raise ValueError(f"count table {table.label!r} is empty")
    pp, pm, mp, mm = table.counts
    e = (pp + mm - pm - mp) / n
    return CorrelationEstimate(e, math.sqrt(max(1.0 - e * e, 0.0) / n), n)


def bootstrap_stderr(table: CountTable, stream, n_resamples: int = 1000) -> float:
    """Bootstrap standard error of ``E`` by resampling the table's outcomes."""
    n = table.total
    if n == 0:
        raise ValueError("empty table")
    cum = np.cumsum(table.counts) / n
    sign = np.array([1.0, -1.0, -1.0, 1.0])
    es = np.empty(n_resamples)
    for i in range(n_resamples):
        cells = np.searchsorted(cum, stream.uniform(size=n), side="right")
        es[i] = sign[np.minimum(cells, 3)].mean()
    return float(es.std(ddof=1))


def chsh(e1, e2, e3, e4, sample_mode: str = "dual") -> ChshResult:
    """``S = |E(X,P) + E(X',P)| + |E(X,P') - E(X',P')|``."""
    if sample_mode not in ("dual", "single"):
        raise ValueError("sample_mode must be 'dual' or 'single'")
    s = abs(e1.value + e2.value) + abs(e3.value - e4.value)
    err = math.sqrt(sum(e.stderr**2 for e in (e1, e2, e3, e4)))
    return ChshResult((e1, e2, e3, e4), s, err, sample_mode)


def chsh_from_tables(tables, sample_mode: str = "dual") -> ChshResult:
    return chsh(*(correlation(t) for t in tables), sample_mode=sample_mode)


def s_value(e_xp, e_x2p, e_xp2, e_x2p2):
    """CHSH combination on plain numbers or arrays."""
    return np.abs(np.add(e_xp, e_x2p)) + np.abs(np.subtract(e_xp2, e_x2p2))


def _check_dist(q, k):
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-k:] != (2,) * k:
        raise ValueError(f"distribution must end in {k} axes of length 2, got {q.shape}")
    if np.any(q < -SLACK) or np.any(np.abs(q.sum(axis=tuple(range(-k, 0))) - 1.0) > SLACK):
        raise ValueError("not a probability distribution")
    return q


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


def _expect(q, axes, k):
    """Expectation of the product of the ``axes`` outcomes under ``q``."""
    shape = [1] * k
    w = np.ones((2,) * k)
    for a in axes:
        s = list(shape)
        s[a] = 2
        w = w * _PM.reshape(s)
    return (q * w).sum(axis=tuple(range(-k, 0)))


def check_eq1(q):
    """Sum vs |difference| of ``p(X=X'=P)`` and ``p(X=X'=-P)`` for ``q`` over ``(X, X', P)``."""
    q = _check_dist(q, 3)
    same = q[..., 0, 0, 0] + q[..., 1, 1, 1]
    opposite = q[..., 0, 0, 1] + q[..., 1, 1, 0]
    lhs = same + opposite
    rhs = np.abs(same - opposite)
    return _out(lhs), _out(rhs), _out(lhs >= rhs - SLACK)


def bound_eq2(q):
    """``p(X = X') >= (E(X,P) + E(X',P)) / 2`` for ``q`` over ``(X, X', P)``."""
    q = _check_dist(q, 3)
    p_agree = q[..., 0, 0, :].sum(axis=-1) + q[..., 1, 1, :].sum(axis=-1)
    half_sum = 0.5 * (_expect(q, (0, 2), 3) + _expect(q, (1, 2), 3))
    return _out(p_agree), _out(half_sum), _out(p_agree >= half_sum - SLACK)


def bound_eq3(q):
    """``p(X = -X') >= (E(X,P') - E(X',P')) / 2`` for ``q`` over ``(X, X', P')``."""
    q = _check_dist(q, 3)
    p_dis = q[..., 0, 1, :].sum(axis=-1) + q[..., 1, 0, :].sum(axis=-1)
    half_diff = 0.5 * (_expect(q, (0, 2), 3) - _expect(q, (1, 2), 3))
    return _out(p_dis), _out(half_diff), _out(p_dis >= half_diff - SLACK)


def joint_correlations(q4):
    """``E(X,P), E(X',P), E(X,P'), E(X',P')`` of ``q4`` over ``(X, X', P, P')``."""
    q4 = _check_dist(q4, 4)
    return tuple(_out(_expect(q4, ax, 4)) for ax in ((0, 2), (1, 2), (0, 3), (1, 3)))


def check_eq4_joint(q4):
    """CHSH value of a genuine joint distribution and whether it respects the bound 2."""
    s = s_value(*joint_correlations(q4))
    return _out(s), _out(s <= CLASSICAL_BOUND + SLACK)


def probability_completeness(p_agree: float, p_disagree: float, indeterminate_fraction: float = 0.0) -> bool:
    """Agreement and disagreement probabilities must exhaust the determinate windows."""
    tol = max(SLACK, indeterminate_fraction + SLACK)
    return abs(p_agree + p_disagree - 1.0) <= tol
