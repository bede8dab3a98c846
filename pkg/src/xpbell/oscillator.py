"""Gaussian phase-space states of a single harmonic oscillator.

States are described by their first and second moments. Free evolution is a
symplectic rotation of phase space, so Gaussian states stay Gaussian and the
moments are propagated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConfig:
    """Oscillator parameters in dimensionless internal units."""

    mass: float = 1.0
    omega: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("mass", "omega", "hbar"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")


@dataclass(frozen=True)
class GaussianState:
    """Mean ``(x, p)`` and covariance entries ``sxx, sxp, spp``.

    Only the upper triangle is stored, so the covariance is symmetric by
    construction.
    """

    x: float
    p: float
    sxx: float
    sxp: float
    spp: float

    def __post_init__(self):
        if not (self.sxx > 0 and self.spp > 0):
            raise ValueError("covariance diagonal must be positive")

    @property
    def mean(self) -> tuple[float, float]:
        return (self.x, self.p)

    @property
    def det(self) -> float:
        return self.sxx * self.spp - self.sxp * self.sxp

    def cov(self):
        return [[self.sxx, self.sxp], [self.sxp, self.spp]]

    def is_admissible(self, cfg: PhysicalConfig, slack: float = 1e-15) -> bool:
        """Heisenberg condition ``det >= (hbar/2)^2`` up to ``slack``."""
        return self.det >= (cfg.hbar / 2) ** 2 - slack


def ground_state(cfg: PhysicalConfig) -> GaussianState:
    return GaussianState(
        0.0, 0.0, cfg.hbar / (2 * cfg.mass * cfg.omega), 0.0, cfg.hbar * cfg.mass * cfg.omega / 2
    )


def coherent_state(cfg: PhysicalConfig, x0: float, p0: float) -> GaussianState:
    g = ground_state(cfg)
    return GaussianState(float(x0), float(p0), g.sxx, 0.0, g.spp)


def squeezed_state(cfg: PhysicalConfig, r: float, x0: float = 0.0, p0: float = 0.0) -> GaussianState:
    """Minimum-uncertainty state with position variance scaled by ``exp(-2r)``."""
    if not math.isfinite(r):
        raise ValueError("squeeze parameter must be finite")
    g = ground_state(cfg)
    return GaussianState(float(x0), float(p0), g.sxx * math.exp(-2 * r), 0.0, g.spp * math.exp(2 * r))


def propagator(t: float, cfg: PhysicalConfig) -> tuple[float, float, float, float]:
    """Entries ``(a, b, c, d)`` of the phase-space map ``[[a, b], [c, d]]`` over time ``t``."""
    mw = cfg.mass * cfg.omega
    c = math.cos(cfg.omega * t)
    s = math.sin(cfg.omega * t)
    return c, s / mw, -mw * s, c


def evolve(state: GaussianState, t: float, cfg: PhysicalConfig) -> GaussianState:
    if not math.isfinite(t):
        raise ValueError("time must be finite")
    a, b, c, d = propagator(t, cfg)
    sxx, sxp, spp = state.sxx, state.sxp, state.spp
    return GaussianState(
        a * state.x + b * state.p,
        c * state.x + d * state.p,
        a * a * sxx + 2 * a * b * sxp + b * b * spp,
        a * c * sxx + (a * d + b * c) * sxp + b * d * spp,
        c * c * sxx + 2 * c * d * sxp + d * d * spp,
    )


def quadrature(state: GaussianState, observable: str, phase: float, cfg: PhysicalConfig) -> tuple[float, float]:
    """Mean and variance of ``x`` or ``p`` after a delay of ``phase / omega``.

    ``phase = 0`` gives the plain observable; ``phase = pi/2`` rotates position
    into ``p / (m omega)`` and momentum into ``-m omega x``.
    """
    s = evolve(state, phase / cfg.omega, cfg)
    if observable == "X":
        return s.x, s.sxx
    if observable == "P":
        return s.p, s.spp
    raise ValueError(f"observable must be 'X' or 'P', got {observable!r}")


def squeezed_along(cfg: PhysicalConfig, observable: str, phase: float, r: float) -> GaussianState:
    """State whose ``observable`` quadrature at ``phase`` is squeezed by ``r``.

    Used as a calibration source: it is sharp exactly where the detector looks.
    """
    base = squeezed_state(cfg, r if observable == "X" else -r)
    return evolve(base, -phase / cfg.omega, cfg)
