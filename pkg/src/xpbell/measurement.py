"""Simulated position and momentum detectors.

Three readout modes are modelled:

* single-observable measurement with the partner detector switched off,
* simultaneous joint measurement of ``x`` and ``p`` with added noise obeying
  the joint-measurement floor ``sx * sp >= hbar / 2``,
* a photogate that infers velocity from the transit time across a beam of
  finite width.

Settings (``X`` vs ``X'``, ``P`` vs ``P'``) are quadrature phases: a detector
with phase ``theta`` reads its observable after the oscillator has evolved
for ``theta / omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .oscillator import GaussianState, PhysicalConfig, quadrature
from .rng import Stream


@dataclass(frozen=True)
class DetectorConfig:
    """One detector setting.

    Parameters
    ----------
    observable : {"X", "P"}
    setting : str
        ``""`` for the unprimed setting, ``"'"`` for the primed one.
    phase : float
        Quadrature phase in radians.
    noise : float
        Added Gaussian noise std in single (partner-off) measurements.
    failure : float
        Per-reading failure probability in ``[0, 1]``; 1 models a detector
        that is switched off.
    """

    observable: str
    setting: str = ""
    phase: float = 0.0
    noise: float = 0.0
    failure: float = 0.0

    def __post_init__(self):
        if self.observable not in ("X", "P"):
            raise ValueError(f"observable must be 'X' or 'P', got {self.observable!r}")
        if self.setting not in ("", "'"):
            raise ValueError(f"setting must be '' or \"'\", got {self.setting!r}")
        if not math.isfinite(self.phase):
            raise ValueError("phase must be finite")
        if not self.noise >= 0:
            raise ValueError("noise std must be >= 0")
        if not 0.0 <= self.failure <= 1.0:
            raise ValueError("failure probability must lie in [0, 1]")

    @property
    def label(self) -> str:
        return self.observable + self.setting


@dataclass(frozen=True)
class JointNoiseModel:
    """Added noise stds of a simultaneous ``(x, p)`` measurement."""

    sx: float
    sp: float

    def __post_init__(self):
        if not (self.sx > 0 and self.sp > 0):
            raise ValueError("joint noise stds must be > 0")

    def check(self, cfg: PhysicalConfig) -> None:
        # relative slack so that sx = sp = sqrt(hbar/2) is accepted
        if self.sx * self.sp < 0.5 * cfg.hbar * (1 - 1e-12):
            raise ValueError(
                f"joint noise sx*sp = {self.sx * self.sp:.6g} violates the floor hbar/2 = {cfg.hbar / 2:.6g}"
            )


@dataclass(frozen=True)
class JointSample:
    trial: int
    x_raw: float
    p_raw: float
    x_setting: str
    p_setting: str
    x_failed: bool = False
    p_failed: bool = False


def single_measure(state: GaussianState, det: DetectorConfig, cfg: PhysicalConfig, rng: Stream, size=None):
    """Reading(s) of one detector with its partner switched off.

    Returns ``(value, failed)``; failed readings carry ``nan``.
    """
    mu, var = quadrature(state, det.observable, det.phase, cfg)
    values = rng.normal(mu, math.sqrt(var + det.noise**2), size=size)
    failed = np.asarray(rng.uniform(size=size)) < det.failure
    values = np.where(failed, np.nan, values)
    if size is None:
        return float(values), bool(failed)
    return values, failed


def joint_measure_many(
    state: GaussianState,
    xdet: DetectorConfig,
    pdet: DetectorConfig,
    noise: JointNoiseModel,
    cfg: PhysicalConfig,
    rng: Stream,
    size: int,
):
    """Arrays ``(x, p, x_failed, p_failed)`` for ``size`` independent joint trials."""
    noise.check(cfg)
    if xdet.observable != "X" or pdet.observable != "P":
        raise ValueError("joint measurement needs an X detector and a P detector")
    mx, vx = quadrature(state, "X", xdet.phase, cfg)
    mp, vp = quadrature(state, "P", pdet.phase, cfg)
    xs = rng.child(0)
    ps = rng.child(1)
    x = xs.normal(mx, math.sqrt(vx + noise.sx**2), size=size)
    p = ps.normal(mp, math.sqrt(vp + noise.sp**2), size=size)
    xf = xs.uniform(size=size) < xdet.failure
    pf = ps.uniform(size=size) < pdet.failure
    return np.where(xf, np.nan, x), np.where(pf, np.nan, p), xf, pf


def joint_measure(
    state: GaussianState,
    xdet: DetectorConfig,
    pdet: DetectorConfig,
    noise: JointNoiseModel,
    cfg: PhysicalConfig,
    rng: Stream,
    trial: int = 0,
) -> JointSample:
    x, p, xf, pf = joint_measure_many(state, xdet, pdet, noise, cfg, rng.child(trial), 1)
    return JointSample(trial, float(x[0]), float(p[0]), xdet.label, pdet.label, bool(xf[0]), bool(pf[0]))


def phase_points(state: GaussianState, z1, z2):
    """Map standard normals to phase-space points distributed as ``state``."""
    l11 = math.sqrt(state.sxx)
    l21 = state.sxp / l11
    l22 = math.sqrt(max(state.spp - l21 * l21, 0.0))
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    return state.x + l11 * z1, state.p + l21 * z1 + l22 * z2


def photogate_velocity(state: GaussianState, width: float, cfg: PhysicalConfig, rng: Stream, size=None):
    """Transit-averaged velocity for phase-space points drawn from ``state``.

    The beam is centred on each drawn position. Returns ``(velocity, failed)``
    where ``failed`` marks trajectories that turn around inside the beam.
    """
    if not width > 0:
        raise ValueError("beam width must be > 0")
    n = 1 if size is None else int(size)
    z = rng.normal(size=(n, 2))
    x, p = phase_points(state, z[:, 0], z[:, 1])
    v, failed = kernels.photogate_transit(x, p, width, cfg.mass, cfg.omega)
    if size is None:
        return float(v[0]), bool(failed[0])
    return v, failed


def velocity_to_momentum(v, cfg: PhysicalConfig):
    return cfg.mass * v
