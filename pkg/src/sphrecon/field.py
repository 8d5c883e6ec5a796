"""Gaussian random fields, coefficient-space noise and masked data."""
import zlib
from dataclasses import dataclass

import numpy as np

from .harmonics import HarmonicCoeffs, analyze, make_grid, synthesize
from .mask import mask_coeffs

__all__ = [
    "PowerSpectrum",
    "NoiseModel",
    "Seed",
    "paper_spectrum",
    "sample_field",
    "sample_noise",
    "masked_data_matrix",
    "masked_data_pixel",
]


@dataclass
class PowerSpectrum:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("spectrum must be a non-empty 1-d sequence")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValueError("spectrum entries must be finite and non-negative")

    @property
    def lmax(self):
        return self.values.size - 1

    def __len__(self):
        return self.values.size


@dataclass
class NoiseModel:
    """Diagonal noise covariance N_l = tau * C_l."""

    tau: float
    base: PowerSpectrum

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError(f"tau must be non-negative, got {self.tau}")

    @property
    def spectrum(self):
        return PowerSpectrum(self.tau * self.base.values)


@dataclass(frozen=True)
class Seed:
    """Root seed plus a stream label; each label gets an independent stream."""

    value: int
    label: str = "field"

    def rng(self):
        ss = np.random.SeedSequence(entropy=int(self.value),
                                    spawn_key=(zlib.crc32(self.label.encode()),))
        return np.random.default_rng(ss)

    def child(self, label):
        return Seed(self.value, label)


def paper_spectrum(L, include_monopole_dipole=False):
    """C_l = g(l/(L+1)), g = 1 on [0, 1/2] and 2 - 2x above.

    C_0 and C_1 are zeroed unless ``include_monopole_dipole``.
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    x = np.arange(L + 1) / (L + 1.0)
    c = np.where(x <= 0.5, 1.0, 2.0 - 2.0 * x)
    if not include_monopole_dipole:
        c[:2] = 0.0
    return PowerSpectrum(c)


def _gaussian_coeffs(variances, rng):
    L = variances.size - 1
    out = HarmonicCoeffs(L)
    # fixed draw order: one (re, im) pair per stored entry, order-major
    draws = rng.standard_normal((out.values.size, 2))
    deg = out.degrees()
    var = variances[deg]
    zonal = out.orders() == 0
    sd = np.sqrt(np.where(zonal, var, 0.5 * var))
    out.values = sd * draws[:, 0] + 1j * np.where(zonal, 0.0, sd * draws[:, 1])
    return out


def sample_field(spectrum, seed):
    """Real-field coefficients with <a_lm conj(a_l'm')> = C_l delta delta."""
    return _gaussian_coeffs(spectrum.values, seed.rng())


def sample_noise(model, seed):
    """Noise coefficients with spectrum tau*C on the ``noise`` stream of ``seed``."""
    if seed.label == "field":
        seed = seed.child("noise")
    return _gaussian_coeffs(model.spectrum.values, seed.rng())


def masked_data_matrix(a, eps, blocks):
    """Per-order data E^(m) (a + eps)^(m), as a list of complex vectors by m."""
    total = a if eps is None else a + eps
    out = []
    for block in blocks:
        if block.L != total.lmax:
            raise ValueError(f"block degree L={block.L} but coefficients have L={total.lmax}")
        out.append(block.matrix @ total.order(block.m))
    return out


def masked_data_pixel(a, eps, spec, J, grid=None, mask=None):
    """Coefficients to degree J of (a + eps) times the degree-K truncated mask.

    The product is formed on a grid exact to degree L + K + J, so the result
    equals the matrix route up to rounding.
    """
    total = a if eps is None else a + eps
    if mask is None:
        mask = mask_coeffs(spec)
    if grid is None:
        grid = make_grid(total.lmax + mask.degree + J)
    field = synthesize(total, grid)
    vz = mask.evaluate(grid.nodes_z)
    field.values = field.values * vz[:, None]
    field.degree = total.lmax + mask.degree
    return analyze(field, J)


def data_by_order(coeffs, L):
    """Split degree-J coefficients into per-order vectors for m = 0..L."""
    return [coeffs.order(m).copy() for m in range(L + 1)]
