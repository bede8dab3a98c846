"""Counter-based, addressable random streams.

Every random number in a run is a pure function of ``(master seed, path)``,
where the path names the consumer, e.g. ``(pair, window, detector, purpose)``.
Work can therefore be split across processes in any way without changing a
single draw. The generator is SplitMix64 evaluated at counter positions, with
Box-Muller for normals.
"""

from __future__ import annotations

import numpy as np

from . import _pykernels, kernels

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

# purpose tags
NOISE = 0
FAIL = 1
JITTER = 2
POINT = 3


def _mix_int(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def _derive_int(key: int, ident: int) -> int:
    return _mix_int(key ^ _mix_int((ident & _MASK) * _GOLDEN + _GOLDEN))


def root_key(seed: int) -> int:
    return _mix_int(int(seed) + _GOLDEN)


def derive_key(key: int, *path: int) -> int:
    """Key of the sub-stream reached from ``key`` along ``path``."""
    for ident in path:
        key = _derive_int(key, int(ident))
    return key


def derive_keys(key: int, indices, *suffix: int) -> np.ndarray:
    """Vectorised ``derive_key(key, i, *suffix)`` for every ``i`` in ``indices``."""
    idx = np.asarray(indices, dtype=np.uint64)
    g = np.uint64(_GOLDEN)
    k = _pykernels.mix64(np.uint64(key) ^ _pykernels.mix64(idx * g + g))
    for ident in suffix:
        h = np.uint64(_mix_int((int(ident) & _MASK) * _GOLDEN + _GOLDEN))
        k = _pykernels.mix64(k ^ h)
    return k


class Stream:
    """A sequential view on one counter-based stream.

    Parameters
    ----------
    key : int
        64-bit stream key, usually obtained from :meth:`from_seed` or
        :meth:`child`.
    """

    __slots__ = ("key", "position")

    def __init__(self, key: int, position: int = 0):
        self.key = int(key) & _MASK
        self.position = int(position)

    @classmethod
    def from_seed(cls, seed: int, *path: int) -> "Stream":
        return cls(derive_key(root_key(seed), *path))

    def child(self, *path: int) -> "Stream":
        return Stream(derive_key(self.key, *path))

    def _keys(self):
        return np.array([self.key], dtype=np.uint64)

    def uniform(self, size=None):
        n = 1 if size is None else int(np.prod(size))
        out = kernels.fill_uniform(self._keys(), self.position, n)[0]
        self.position += n
        return float(out[0]) if size is None else out.reshape(size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        n = 1 if size is None else int(np.prod(size))
        z = kernels.fill_normal(self._keys(), self.position, n)[0]
        self.position += 2 * ((n + 1) // 2)
        out = loc + scale * z
        return float(out[0]) if size is None else out.reshape(size)

    def __repr__(self):
        return f"Stream(key={self.key:#018x}, position={self.position})"
