"""Sharp/fuzzy binarization of measured spreads and detector calibration.

A window of ``W`` readings from one detector yields one binary outcome: ``+1``
(sharp) when the sample standard deviation of the window is below the
detector's threshold, ``-1`` (fuzzy) otherwise. Thresholds are chosen so that
``eps_x * eps_p < hbar / 2``, i.e. a double ``+1`` would beat the uncertainty
principle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .measurement import DetectorConfig
from .oscillator import GaussianState, PhysicalConfig, quadrature
from .rng import FAIL, NOISE, Stream, derive_keys

SHARP = 1
FUZZY = -1
INDETERMINATE = 0

DEFAULT_WINDOW = 100
CALIBRATION_LIMIT = 0.01


class CalibrationError(RuntimeError):
    """Raised when joint sampling is attempted with a detector that failed calibration."""

    def __init__(self, message, reports=()):
        super().__init__(message)
        self.reports = list(reports)


@dataclass(frozen=True)
class ThresholdConfig:
    eps_x: float
    eps_p: float

    def __post_init__(self):
        if not (self.eps_x > 0 and self.eps_p > 0):
            raise ValueError("thresholds must be > 0")

    def check(self, cfg: PhysicalConfig) -> None:
        if not self.eps_x * self.eps_p < cfg.hbar / 2:
            raise ValueError(
                f"thresholds eps_x*eps_p = {self.eps_x * self.eps_p:.6g} must lie below hbar/2 = {cfg.hbar / 2:.6g}"
            )

    def for_observable(self, observable: str) -> float:
        return self.eps_x if observable == "X" else self.eps_p


@dataclass(frozen=True)
class BinaryOutcome:
    value: int
    detector: str
    setting: str
    window: int

    def __post_init__(self):
        if self.value not in (SHARP, FUZZY):
            raise ValueError("binary outcome must be +1 or -1")


@dataclass(frozen=True)
class CalibrationReport:
    detector: str
    trials: int
    minus_count: int
    indeterminate: int

    @property
    def p_minus(self) -> float:
        return self.minus_count / self.trials

    @property
    def passed(self) -> bool:
        return self.p_minus < CALIBRATION_LIMIT

    def to_dict(self) -> dict:
        return {
            "detector": self.detector,
            "trials": self.trials,
            "minus_count": self.minus_count,
            "indeterminate": self.indeterminate,
            "p_minus": self.p_minus,
            "passed": self.passed,
        }


def estimate_spread(readings, failed=None):
    """Unbiased sample std of the non-failed readings, or ``None`` if fewer than two."""
    r = np.asarray(readings, dtype=np.float64)
    if failed is not None:
        r = r[~np.asarray(failed, dtype=bool)]
    r = r[~np.isnan(r)]
    if r.size < 2:
        return None
    return float(np.std(r, ddof=1))


def binarize(spread: float, eps: float) -> int:
    """``+1`` if ``spread < eps`` else ``-1``; a tie counts as fuzzy."""
    if not spread >= 0:
        raise ValueError("spread must be >= 0")
    if not eps > 0:
        raise ValueError("threshold must be > 0")
    return SHARP if spread < eps else FUZZY


def calibrate(
    det: DetectorConfig,
    state: GaussianState,
    cfg: PhysicalConfig,
    eps: float,
    n_windows: int,
    stream: Stream,
    width: int = DEFAULT_WINDOW,
) -> CalibrationReport:
    """Partner-off calibration of one detector on ``n_windows`` windows.

    Only the detector's own noise and failure model apply; the joint
    measurement noise floor does not.
    """
    if n_windows < 1000:
        raise ValueError("calibration needs at least 1000 windows")
    mu, var = quadrature(state, det.observable, det.phase, cfg)
    idx = np.arange(n_windows)
    verdicts = kernels.gaussian_window_verdicts(
        derive_keys(stream.key, idx, NOISE),
        derive_keys(stream.key, idx, FAIL),
        width,
        mu,
        math.sqrt(var + det.noise**2),
        det.failure,
        eps,
    )
    indeterminate = int(np.count_nonzero(verdicts == INDETERMINATE))
    return CalibrationReport(det.label, n_windows, int(np.count_nonzero(verdicts == FUZZY)), indeterminate)


def require_calibrated(reports, override: bool = False) -> None:
    failed = [r for r in reports if not r.passed]
    if failed and not override:
        names = ", ".join(f"{r.detector} (p_minus={r.p_minus:.4f})" for r in failed)
        raise CalibrationError(f"detectors failed calibration: {names}", reports)


def joint_binarize(
    x_readings,
    p_readings,
    thresholds: ThresholdConfig,
    x_failed=None,
    p_failed=None,
    calibrations=None,
    override: bool = False,
):
    """Window-wise outcomes for both columns of a joint run.

    ``x_readings`` and ``p_readings`` have shape ``(n_windows, W)``. Returns two
    ``int8`` arrays with ``+1``/``-1`` per window, ``0`` for indeterminate
    windows. Uncalibrated or failing detectors are rejected unless
    ``override`` is set.
    """
    if calibrations is None:
        if not override:
            raise CalibrationError("joint sampling requires calibration reports (or override)")
    else:
        require_calibrated(calibrations, override)
    x = np.asarray(x_readings, dtype=np.float64)
    p = np.asarray(p_readings, dtype=np.float64)
    xf = np.isnan(x) if x_failed is None else np.asarray(x_failed, dtype=bool) | np.isnan(x)
    pf = np.isnan(p) if p_failed is None else np.asarray(p_failed, dtype=bool) | np.isnan(p)
    return (
        kernels.window_verdicts(np.nan_to_num(x), xf, thresholds.eps_x),
        kernels.window_verdicts(np.nan_to_num(p), pf, thresholds.eps_p),
    )


def outcome_records(verdicts, detector: str, setting: str):
    """Expand a verdict array into :class:`BinaryOutcome` records, skipping indeterminate windows."""
    return [BinaryOutcome(int(v), detector, setting, j) for j, v in enumerate(verdicts) if v != INDETERMINATE]
