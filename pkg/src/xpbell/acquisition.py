"""Readout chain: sample-and-hold amplifier followed by a flash ADC."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AdcConfig:
    bits: int
    vmin: float
    vmax: float

    def __post_init__(self):
        if not (isinstance(self.bits, (int, np.integer)) and 1 <= self.bits <= 24):
            raise ValueError(f"ADC bits must be an integer in [1, 24], got {self.bits!r}")
        if not (math.isfinite(self.vmin) and math.isfinite(self.vmax) and self.vmin < self.vmax):
            raise ValueError("ADC range needs finite vmin < vmax")

    @property
    def levels(self) -> int:
        return 1 << int(self.bits)

    @property
    def lsb(self) -> float:
        return (self.vmax - self.vmin) / self.levels

    @classmethod
    def auto(cls, bits: int, mean: float, std: float, span: float = 6.0) -> "AdcConfig":
        """Range of ``mean +/- span * std``; clipping probability ~1e-9 for Gaussian input."""
        return cls(bits, mean - span * std, mean + span * std)


@dataclass(frozen=True)
class HoldConfig:
    period: float
    jitter: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("sample period must be > 0")
        if not self.jitter >= 0:
            raise ValueError("aperture jitter must be >= 0")


def quantize(v, cfg: AdcConfig):
    """Flash-converter output code; over-range inputs saturate at the end codes."""
    v = np.asarray(v, dtype=np.float64)
    codes = np.floor((v - cfg.vmin) / (cfg.vmax - cfg.vmin) * cfg.levels)
    codes = np.clip(codes, 0, cfg.levels - 1).astype(np.int64)
    return int(codes) if codes.ndim == 0 else codes


def dequantize(code, cfg: AdcConfig):
    """Code-centre reconstruction (mid-rise)."""
    c = np.asarray(code)
    if np.any((c < 0) | (c > cfg.levels - 1)):
        raise ValueError(f"ADC code out of range [0, {cfg.levels - 1}]")
    v = cfg.vmin + (c + 0.5) * cfg.lsb
    return float(v) if v.ndim == 0 else v


def sample_and_hold(times, values, hold: HoldConfig, rng=None):
    """Sample a time-indexed signal once per period.

    Sample ``k`` is taken at ``t0 + k*T + jitter_k`` by linear interpolation.
    Samples whose actual time falls outside the signal span are dropped.

    Returns
    -------
    (nominal_times, held_values)
    """
    t = np.asarray(times, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    if t.size == 0:
        return np.empty(0), np.empty(0)
    if np.any(np.diff(t) <= 0):
        raise ValueError("signal timestamps must be strictly increasing")
    n = int(math.floor((t[-1] - t[0]) / hold.period + 1e-9)) + 1
    nominal = t[0] + hold.period * np.arange(n)
    if hold.jitter > 0:
        if rng is None:
            raise ValueError("jittered sampling needs a random stream")
        actual = nominal + hold.jitter * np.asarray(rng.normal(size=n))
    else:
        actual = nominal
    keep = (actual >= t[0]) & (actual <= t[-1])
    return nominal[keep], np.interp(actual[keep], t, v)


def acquire(times, values, hold: HoldConfig, adc: AdcConfig, rng=None):
    """Sample-and-hold, then quantize and reconstruct every held sample."""
    nominal, held = sample_and_hold(times, values, hold, rng)
    return nominal, dequantize(quantize(held, adc), adc) if held.size else held


def acquire_windows(readings, failed, adc: AdcConfig, jitter=None):
    """Readout chain applied row-wise to windows of evenly spaced readings.

    Readings in a row are taken as a signal sampled at ``t_k = k`` (in units of
    the hold period). ``jitter`` holds per-sample aperture offsets in the same
    units, or ``None`` for ideal timing. Samples that land outside the row's
    span, or next to a failed reading, come back flagged as failed.

    Returns ``(values, failed)`` with the input shape.
    """
    r = np.where(failed, np.nan, np.asarray(readings, dtype=np.float64))
    n, w = r.shape
    if jitter is None:
        held = r
        out_of_span = np.zeros(r.shape, dtype=bool)
    else:
        t = np.arange(w)[None, :] + jitter
        out_of_span = (t < 0) | (t > w - 1)
        tc = np.clip(t, 0, w - 1)
        i0 = np.minimum(np.floor(tc).astype(np.int64), max(w - 2, 0))
        frac = tc - i0
        rows = np.arange(n)[:, None]
        a = r[rows, i0]
        b = r[rows, np.minimum(i0 + 1, w - 1)]
        held = a + frac * (b - a)
    bad = out_of_span | np.isnan(held)
    safe = np.where(bad, adc.vmin, held)
    values = adc.vmin + (quantize(safe, adc) + 0.5) * adc.lsb
    return np.where(bad, np.nan, values), bad
