import pytest

from xpbell import kernels
from xpbell.oscillator import PhysicalConfig

_KERNEL_FUNCS = (
    "mix64",
    "fill_uniform",
    "fill_normal",
    "window_verdicts",
    "gaussian_window_verdicts",
    "tally",
    "photogate_transit",
)

BACKENDS = kernels.available_backends()


@pytest.fixture(params=sorted(BACKENDS))
def kmod(request):
    """Each importable kernel module in turn."""
    return BACKENDS[request.param]


@pytest.fixture(params=sorted(BACKENDS))
def backend(request, monkeypatch):
    """Route the whole package through one kernel backend."""
    mod = BACKENDS[request.param]
    for name in _KERNEL_FUNCS:
        monkeypatch.setattr(kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def unit():
    return PhysicalConfig(1.0, 1.0, 1.0)
