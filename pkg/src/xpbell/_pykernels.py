"""Pure numpy implementation of the Monte Carlo kernels.

This is the fallback used when the compiled ``_ckernels`` extension is not
available. Both modules expose the same functions with the same semantics;
results agree to within a few ulp (transcendental functions come from numpy
rather than libm).
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO_M53 = 2.0**-53
_TWO_PI = 2.0 * np.pi

# Rows per chunk in the fused kernel; keeps temporaries around a few MB.
_CHUNK_VALUES = 1 << 18


def mix64(z):
    """SplitMix64 finalizer, elementwise on a uint64 array."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _raw(keys, offset, count):
    keys = np.asarray(keys, dtype=np.uint64).reshape(-1, 1)
    ctr = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    return mix64(keys + ctr * GOLDEN)


def _to_unit(raw):
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_M53


def fill_uniform(keys, offset, count):
    """Uniforms in (0, 1): row i holds outputs ``offset .. offset+count-1`` of stream ``keys[i]``."""
    if count == 0:
        return np.empty((len(keys), 0))
    return _to_unit(_raw(keys, offset, count))


def fill_normal(keys, offset, count):
    """Standard normals by Box-Muller; normal k uses raw outputs offset+2(k//2) and +1."""
    n = len(keys)
    if count == 0:
        return np.empty((n, 0))
    npairs = (count + 1) // 2
    u = fill_uniform(keys, offset, 2 * npairs).reshape(n, npairs, 2)
    rad = np.sqrt(-2.0 * np.log(u[:, :, 0]))
    ang = _TWO_PI * u[:, :, 1]
    out = np.empty((n, npairs, 2))
    out[:, :, 0] = rad * np.cos(ang)
    out[:, :, 1] = rad * np.sin(ang)
    return out.reshape(n, 2 * npairs)[:, :count]


def window_verdicts(readings, failed, eps):
    """Per-row sharp/fuzzy verdict: +1 if sample std < eps, -1 otherwise, 0 if < 2 valid."""
    readings = np.asarray(readings, dtype=np.float64)
    valid = ~np.asarray(failed, dtype=bool)
    n = valid.sum(axis=1)
    safe = np.where(valid, readings, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = safe.sum(axis=1) / n
        dev = np.where(valid, readings - mean[:, None], 0.0)
        var = (dev * dev).sum(axis=1) / (n - 1)
        std = np.sqrt(var)
    out = np.where(std < eps, 1, -1).astype(np.int8)
    out[n < 2] = 0
    return out


def gaussian_window_verdicts(noise_keys, fail_keys, width, mu, sigma, fail_prob, eps):
    """Fused generate-and-binarize for windows of i.i.d. Normal(mu, sigma^2) readings."""
    noise_keys = np.asarray(noise_keys, dtype=np.uint64)
    fail_keys = np.asarray(fail_keys, dtype=np.uint64)
    out = np.empty(len(noise_keys), dtype=np.int8)
    step = max(1, _CHUNK_VALUES // max(width, 1))
    for lo in range(0, len(noise_keys), step):
        hi = min(lo + step, len(noise_keys))
        vals = mu + sigma * fill_normal(noise_keys[lo:hi], 0, width)
        if fail_prob > 0.0:
            failed = fill_uniform(fail_keys[lo:hi], 0, width) < fail_prob
        else:
            failed = np.zeros(vals.shape, dtype=bool)
        out[lo:hi] = window_verdicts(vals, failed, eps)
    return out


def tally(x_out, p_out):
    """Count table over (+1, -1) x (+1, -1) plus the number of indeterminate rows."""
    x_out = np.asarray(x_out)
    p_out = np.asarray(p_out)
    ok = (x_out != 0) & (p_out != 0)
    xi = (x_out[ok] < 0).astype(np.int64)
    pi = (p_out[ok] < 0).astype(np.int64)
    counts = np.bincount(2 * xi + pi, minlength=4).reshape(2, 2).astype(np.int64)
    return counts, int((~ok).sum())


def photogate_transit(x, p, width, mass, omega):
    """Transit-averaged velocity across a beam of ``width`` centred at each position.

    Returns ``(velocity, failed)``; ``failed`` is set where the classical orbit
    turns around inside the beam.
    """
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    amp = np.hypot(x, p / (mass * omega))
    half = 0.5 * width
    lo = x - half
    hi = x + half
    failed = (hi >= amp) | (lo <= -amp)
    with np.errstate(invalid="ignore", divide="ignore"):
        a_lo = np.arccos(np.clip(lo / amp, -1.0, 1.0))
        a_hi = np.arccos(np.clip(hi / amp, -1.0, 1.0))
        v = np.copysign(width * omega / (a_lo - a_hi), p)
    v = np.where(failed, np.nan, v)
    return v, failed
