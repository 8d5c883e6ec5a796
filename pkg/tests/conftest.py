from functools import lru_cache

import numpy as np
import pytest

from sphrecon.field import paper_spectrum
from sphrecon.mask import AxialMaskSpec, mask_coeffs
from sphrecon.operator import build_axial_blocks


class DeskSetup:
    def __init__(self, L, K, J):
        self.L, self.K, self.J = L, K, J
        self.spec = AxialMaskSpec.from_degrees(10, 20, K)
        self.mask = mask_coeffs(self.spec)
        self.blocks = build_axial_blocks(self.mask, L, J)
        self.C = paper_spectrum(L)


@lru_cache(maxsize=None)
def get_setup(L, K, J):
    """Shared, lazily built operator setups (the paper-size one takes seconds)."""
    return DeskSetup(L, K, J)


@pytest.fixture(scope="session")
def desk():
    """The desk-scale configuration L=32, K=96, J=128."""
    return get_setup(32, 96, 128)


@pytest.fixture(scope="session")
def small():
    return get_setup(16, 48, 64)


@pytest.fixture(scope="session")
def paper():
    return get_setup(100, 900, 1000)


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


def random_real_coeffs(rng, lmax, scale=1.0):
    from sphrecon.harmonics import HarmonicCoeffs, num_alm

    c = HarmonicCoeffs(lmax, scale * (rng.standard_normal(num_alm(lmax))
                                      + 1j * rng.standard_normal(num_alm(lmax))))
    c.order(0)[:] = c.order(0).real
    return c
