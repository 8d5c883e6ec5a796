"""Smooth axially symmetric masks and their zonal harmonic coefficients."""
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .harmonics import HarmonicCoeffs, gauss_legendre, legendre_order_table

__all__ = [
    "AxialMaskSpec",
    "MaskCoeffs",
    "smoothstep_p",
    "mask_value",
    "zonal_coeffs",
    "mask_coeffs",
    "mask_extrema",
]


@dataclass(frozen=True)
class AxialMaskSpec:
    """Band mask: 0 within ``a_lat`` of the equator, 1 beyond ``b_lat`` (radians)."""

    a_lat: float
    b_lat: float
    degree: int

    def __post_init__(self):
        if not 0.0 < self.a_lat < self.b_lat < 0.5 * math.pi:
            raise ValueError(f"need 0 < a_lat < b_lat < pi/2, got {self.a_lat}, {self.b_lat}")
        if self.degree < 1:
            raise ValueError("mask degree must be at least 1")

    @classmethod
    def from_degrees(cls, a_deg, b_deg, degree):
        return cls(math.radians(a_deg), math.radians(b_deg), int(degree))

    @property
    def z_a(self):
        return math.sin(self.a_lat)

    @property
    def z_b(self):
        return math.sin(self.b_lat)


@dataclass
class MaskCoeffs:
    """Zonal coefficients w_k = v_{k,0}, k = 0..degree."""

    degree: int
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float)
        if self.w.shape != (self.degree + 1,):
            raise ValueError(f"expected {self.degree + 1} coefficients, got {self.w.shape}")

    @property
    def is_even(self):
        return not np.any(self.w[1::2])

    def evaluate(self, z):
        """Truncated series sum_k w_k Pbar_{k,0}(z)."""
        z = np.atleast_1d(np.asarray(z, dtype=float))
        return self.w @ legendre_order_table(self.degree, 0, z)

    def to_harmonic(self):
        out = HarmonicCoeffs(self.degree)
        out.order(0)[:] = self.w
        return out


def smoothstep_p(x):
    """C^3 ramp: 0 for x <= 0, 1 for x >= 1, x^4 (35 - 84x + 70x^2 - 20x^3) between."""
    x = np.asarray(x, dtype=float)
    y = np.clip(x, 0.0, 1.0)
    # upper half through p(y) = 1 - p(1 - y), so values never leave [0, 1]
    t = np.minimum(y, 1.0 - y)
    low = t ** 4 * (35.0 + t * (-84.0 + t * (70.0 - 20.0 * t)))
    out = np.where(y <= 0.5, low, 1.0 - low)
    out = np.where(x <= 0.0, 0.0, np.where(x >= 1.0, 1.0, out))
    return float(out) if out.ndim == 0 else out


def mask_value(z, spec):
    z = np.asarray(z, dtype=float)
    return smoothstep_p((np.abs(z) - spec.z_a) / (spec.z_b - spec.z_a))


def zonal_coeffs(func, degree, breakpoints=(), nodes_per_piece=None):
    """w_k = 2 pi int_{-1}^{1} func(z) Pbar_{k,0}(z) dz, k = 0..degree.

    ``func`` must be a polynomial of modest degree between consecutive
    breakpoints; each piece gets its own Gauss-Legendre rule, exact for
    integrands of degree ``2 * nodes_per_piece - 1``.
    """
    if nodes_per_piece is None:
        nodes_per_piece = degree // 2 + 8
    edges = np.unique(np.concatenate([[-1.0, 1.0], np.clip(breakpoints, -1.0, 1.0)]))
    x, wq = gauss_legendre(nodes_per_piece)
    w = np.zeros(degree + 1)
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        z = lo + half * (x + 1.0)
        vals = np.asarray(func(z), dtype=float) * wq * half
        if not np.any(vals):
            continue
        w += legendre_order_table(degree, 0, z) @ vals
    return 2.0 * math.pi * w


def _cap_integrals(degree, z0):
    """int_{z0}^{1} Pbar_{k,0}(z) dz for k = 0..degree, in closed form."""
    p = np.empty(degree + 2)
    p[0], p[1] = 1.0, z0
    for n in range(2, degree + 2):
        p[n] = ((2 * n - 1) * z0 * p[n - 1] - (n - 1) * p[n - 2]) / n
    k = np.arange(degree + 1)
    out = np.empty(degree + 1)
    out[0] = 1.0 - z0
    out[1:] = (p[0:degree] - p[2:degree + 2]) / (2.0 * k[1:] + 1.0)
    return out * np.sqrt((2.0 * k + 1.0) / (4.0 * math.pi))


def mask_coeffs(spec, nodes_per_piece=None):
    """Zonal coefficients of the C^3 band mask, odd entries exactly zero.

    The mask is even, so w_k = 4 pi int_0^1 v Pbar_k dz for even k.  The
    polar cap (v = 1) is integrated in closed form and the ramp by
    Gauss-Legendre, exact there since v is a degree-7 polynomial.
    """
    za, zb, K = spec.z_a, spec.z_b, spec.degree
    if nodes_per_piece is None:
        nodes_per_piece = K // 2 + 8
    x, wq = gauss_legendre(nodes_per_piece)
    half = 0.5 * (zb - za)
    z = za + half * (x + 1.0)
    ramp = legendre_order_table(K, 0, z) @ (mask_value(z, spec) * wq * half)
    w = 4.0 * math.pi * (ramp + _cap_integrals(K, zb))
    w[1::2] = 0.0
    return MaskCoeffs(K, w)


def mask_extrema(coeffs, n_samples=None, refine=True):
    """(min, max) of the truncated mask series over z in [-1, 1].

    Sampled on Chebyshev points (endpoints included), then polished by a
    bounded scalar search around the best samples.  Gibbs oscillations of
    the truncation can push the minimum below 0 and the maximum above 1.
    """
    if n_samples is None:
        n_samples = 4 * coeffs.degree + 1
    n_samples = max(int(n_samples), 4 * coeffs.degree, 2)
    z = np.cos(np.pi * np.arange(n_samples) / (n_samples - 1))
    vals = coeffs.evaluate(z)
    i_min, i_max = int(np.argmin(vals)), int(np.argmax(vals))
    vmin, vmax = float(vals[i_min]), float(vals[i_max])
    if refine:
        def polish(i, sign):
            lo = z[min(i + 1, n_samples - 1)]
            hi = z[max(i - 1, 0)]
            if hi <= lo:
                return float(sign * vals[i])
            res = minimize_scalar(lambda t: sign * coeffs.evaluate(t)[0], bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-14})
            return float(min(sign * vals[i], res.fun))
        vmin = polish(i_min, 1.0)
        vmax = -polish(i_max, -1.0)
    return vmin, vmax
