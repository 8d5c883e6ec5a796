"""Spherical-harmonic basis and exact transforms on a Gauss-Legendre grid.

Harmonics follow the Condon-Shortley convention,
``Y_{l,m}(theta, phi) = Pbar_{l,m}(cos theta) exp(i m phi)`` with
``Y_{l,-m} = (-1)^m conj(Y_{l,m})``.  Coefficients of real fields are stored
for ``m >= 0`` only, ordered by m first (all l for m=0, then m=1, ...), so
that each fixed-order slice is contiguous.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_legendre

__all__ = [
    "HarmonicCoeffs",
    "SphereGrid",
    "FieldSamples",
    "ExactnessWarning",
    "alm_index",
    "num_alm",
    "assoc_legendre_norm",
    "legendre_order_table",
    "legendre_p",
    "gauss_legendre",
    "make_grid",
    "synthesize",
    "analyze",
    "ylm_grid",
]

_FOUR_PI = 4.0 * math.pi


class ExactnessWarning(UserWarning):
    """Quadrature grid too coarse for the requested projection to be exact."""


def num_alm(lmax):
    return (lmax + 1) * (lmax + 2) // 2


def alm_index(lmax, l, m):
    """Position of a_{l,m} (m >= 0) in the packed, order-major layout."""
    return m * (2 * lmax + 1 - m) // 2 + l


@dataclass
class HarmonicCoeffs:
    """Coefficients a_{l,m}, 0 <= m <= l <= lmax, of a real band-limited field.

    Negative orders are implied by ``a_{l,-m} = (-1)^m conj(a_{l,m})``.
    """

    lmax: int
    values: np.ndarray = None

    def __post_init__(self):
        n = num_alm(self.lmax)
        if self.values is None:
            self.values = np.zeros(n, dtype=complex)
        else:
            self.values = np.asarray(self.values, dtype=complex)
            if self.values.shape != (n,):
                raise ValueError(
                    f"expected {n} coefficients for lmax={self.lmax}, got shape {self.values.shape}"
                )

    def index(self, l, m):
        if not 0 <= m <= l <= self.lmax:
            raise IndexError(f"(l={l}, m={m}) outside 0 <= m <= l <= {self.lmax}")
        return alm_index(self.lmax, l, m)

    def __getitem__(self, lm):
        l, m = lm
        if m < 0:
            v = self.values[self.index(l, -m)]
            return (-1) ** m * np.conj(v)
        return self.values[self.index(l, m)]

    def __setitem__(self, lm, value):
        l, m = lm
        if m < 0:
            self.values[self.index(l, -m)] = (-1) ** m * np.conj(value)
        else:
            self.values[self.index(l, m)] = value

    def order(self, m):
        """View of a_{l,m} for l = m..lmax."""
        start = alm_index(self.lmax, m, m)
        return self.values[start:start + self.lmax + 1 - m]

    def degrees(self):
        """Degree l of every stored entry, in storage order."""
        return np.concatenate([np.arange(m, self.lmax + 1) for m in range(self.lmax + 1)])

    def orders(self):
        return np.concatenate([np.full(self.lmax + 1 - m, m) for m in range(self.lmax + 1)])

    def copy(self):
        return HarmonicCoeffs(self.lmax, self.values.copy())

    def resized(self, lmax):
        """Zero-padded or truncated copy with a new degree bound."""
        out = HarmonicCoeffs(lmax)
        top = min(lmax, self.lmax)
        for m in range(top + 1):
            out.order(m)[: top + 1 - m] = self.order(m)[: top + 1 - m]
        return out

    def to_full(self):
        """Vector over all (l, m), m = -l..l, at position l*l + l + m."""
        full = np.empty((self.lmax + 1) ** 2, dtype=complex)
        for l in range(self.lmax + 1):
            for m in range(-l, l + 1):
                full[l * l + l + m] = self[l, m]
        return full

    @classmethod
    def from_full(cls, full, lmax):
        out = cls(lmax)
        for l in range(lmax + 1):
            for m in range(l + 1):
                out.values[out.index(l, m)] = full[l * l + l + m]
        return out

    def _check_compatible(self, other):
        if not isinstance(other, HarmonicCoeffs) or other.lmax != self.lmax:
            raise ValueError("coefficient sets have different degree bounds")

    def __add__(self, other):
        self._check_compatible(other)
        return HarmonicCoeffs(self.lmax, self.values + other.values)

    def __sub__(self, other):
        self._check_compatible(other)
        return HarmonicCoeffs(self.lmax, self.values - other.values)

    def __mul__(self, factor):
        return HarmonicCoeffs(self.lmax, self.values * factor)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SphereGrid:
    """Gauss-Legendre nodes in z = cos(theta) times equispaced longitudes."""

    n_theta: int
    n_phi: int
    nodes_z: np.ndarray = field(repr=False)
    weights_z: np.ndarray = field(repr=False)
    exactness_degree: int

    @property
    def phi(self):
        return 2.0 * np.pi * np.arange(self.n_phi) / self.n_phi

    @property
    def theta(self):
        return np.arccos(self.nodes_z)

    @property
    def point_weights(self):
        """Quadrature weight of every grid point, shape (n_theta, n_phi)."""
        return np.outer(self.weights_z, np.full(self.n_phi, 2.0 * np.pi / self.n_phi))

    @property
    def shape(self):
        return (self.n_theta, self.n_phi)

    def same_as(self, other):
        return (self.n_theta == other.n_theta and self.n_phi == other.n_phi
                and np.array_equal(self.nodes_z, other.nodes_z))


@dataclass
class FieldSamples:
    """Real field values on a grid; ``degree`` is the band limit when known."""

    grid: SphereGrid
    values: np.ndarray
    degree: int = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"samples shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field samples must be finite")


# ----------------------------------------------------------------------
# Legendre functions
# ----------------------------------------------------------------------


def _check_unit_interval(x):
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0):
        raise ValueError("argument outside [-1, 1]")
    return x


def _sectoral_start(m, x):
    """Pbar_{m,m}(x), built up by a running product that underflows gracefully."""
    s = np.sqrt((1.0 - x) * (1.0 + x))
    p = np.full_like(x, 1.0 / math.sqrt(_FOUR_PI))
    for k in range(1, m + 1):
        p = p * (-math.sqrt((2.0 * k + 1.0) / (2.0 * k))) * s
    return p


def _order_table_from(pmm, lmax, m, x):
    out = np.empty((lmax + 1 - m,) + x.shape)
    out[0] = pmm
    if lmax == m:
        return out
    out[1] = math.sqrt(2.0 * m + 3.0) * x * pmm
    for l in range(m + 2, lmax + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        out[l - m] = a * (x * out[l - m - 1] - b * out[l - m - 2])
    return out


def legendre_order_table(lmax, m, x):
    """Pbar_{l,m}(x) for l = m..lmax, shape ``(lmax - m + 1,) + x.shape``."""
    x = _check_unit_interval(x)
    if not 0 <= m <= lmax:
        raise ValueError(f"need 0 <= m <= lmax, got m={m}, lmax={lmax}")
    return _order_table_from(_sectoral_start(m, x), lmax, m, x)


def _iter_order_tables(lmax, x):
    """Yield (m, table) for m = 0..lmax, reusing the sectoral seed."""
    s = np.sqrt((1.0 - x) * (1.0 + x))
    pmm = np.full_like(x, 1.0 / math.sqrt(_FOUR_PI))
    for m in range(lmax + 1):
        if m > 0:
            pmm = pmm * (-math.sqrt((2.0 * m + 1.0) / (2.0 * m))) * s
        yield m, _order_table_from(pmm, lmax, m, x)


def assoc_legendre_norm(l, m, x):
    """Normalised associated Legendre function with Y_{l,m} = Pbar_{l,m}(cos t) e^{i m phi}."""
    if not 0 <= m <= l:
        raise ValueError(f"need 0 <= m <= l, got l={l}, m={m}")
    x = _check_unit_interval(x)
    val = legendre_order_table(l, m, np.atleast_1d(x))[-1]
    return float(val[0]) if x.ndim == 0 else val


def legendre_p(l, x):
    """Legendre polynomial P_l with P_l(1) = 1."""
    if l < 0:
        raise ValueError("degree must be non-negative")
    x = _check_unit_interval(x)
    p0 = np.ones_like(x)
    if l == 0:
        return float(p0) if x.ndim == 0 else p0
    p1 = x.copy()
    for n in range(2, l + 1):
        p0, p1 = p1, ((2 * n - 1) * x * p1 - (n - 1) * p0) / n
    return float(p1) if x.ndim == 0 else p1


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------


def gauss_legendre(n):
    """n-point Gauss-Legendre nodes (ascending) and weights on [-1, 1]."""
    if n < 1:
        raise ValueError("need at least one node")
    x, w = roots_legendre(n)
    return np.asarray(x, dtype=float), np.asarray(w, dtype=float)


def make_grid(exactness_degree):
    """Smallest grid integrating every spherical polynomial of the given degree exactly."""
    if exactness_degree < 0:
        raise ValueError("exactness degree must be non-negative")
    n_theta = (exactness_degree + 2) // 2
    n_phi = exactness_degree + 1
    z, w = gauss_legendre(n_theta)
    return SphereGrid(n_theta, n_phi, z, w, exactness_degree)


# ----------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------


def synthesize(coeffs, grid):
    """Evaluate a real band-limited field on the grid.

    Longitudes use a length-n_phi inverse FFT with orders folded modulo
    n_phi, which evaluates the series exactly at the grid longitudes.
    """
    lmax = coeffs.lmax
    z = grid.nodes_z
    spectrum = np.zeros((grid.n_theta, grid.n_phi), dtype=complex)
    for m, table in _iter_order_tables(lmax, z):
        fm = coeffs.order(m) @ table
        if m == 0:
            spectrum[:, 0] += fm
        else:
            spectrum[:, m % grid.n_phi] += fm
            spectrum[:, (-m) % grid.n_phi] += np.conj(fm)
    values = np.fft.ifft(spectrum, axis=1) * grid.n_phi
    scale = max(np.max(np.abs(values.real)), np.finfo(float).tiny)
    resid = np.max(np.abs(values.imag)) / scale
    if resid > 1e-10:
        warnings.warn(f"synthesized field has imaginary residue {resid:.2e}; "
                      "coefficients break the reality symmetry", RuntimeWarning, stacklevel=2)
    return FieldSamples(grid, values.real, degree=lmax)


def analyze(samples, lmax):
    """Project samples onto Y_{l,m}, l <= lmax, by quadrature."""
    grid = samples.grid
    need = (samples.degree if samples.degree is not None else lmax) + lmax
    if grid.exactness_degree < need:
        warnings.warn(f"grid exactness {grid.exactness_degree} < {need}; projection is not exact",
                      ExactnessWarning, stacklevel=2)
    rows = np.fft.fft(samples.values, axis=1) * (2.0 * np.pi / grid.n_phi)
    weighted = rows * grid.weights_z[:, None]
    out = HarmonicCoeffs(lmax)
    for m, table in _iter_order_tables(lmax, grid.nodes_z):
        out.order(m)[:] = table @ weighted[:, m % grid.n_phi]
    return out


def ylm_grid(l, m, grid):
    """Y_{l,m} sampled on every grid point (complex, any sign of m)."""
    p = legendre_order_table(l, abs(m), grid.nodes_z)[-1]
    y = np.outer(p, np.exp(1j * abs(m) * grid.phi))
    if m < 0:
        y = (-1) ** m * np.conj(y)
    return y
