"""The masking operator E mapping true coefficients to masked-field coefficients.

For an axially symmetric mask the operator splits into one real block per
order m, ``E^(m)[j, l] = sum_k D_{l,m;k,0;j,m} w_k``.  The general complex
operator is available at small degree for cross-checks.
"""
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .harmonics import ExactnessWarning, ylm_grid
from .wigner import _family_into, _gaunt_axial_into

__all__ = [
    "OperatorContractError",
    "MaskOperatorBlock",
    "GeneralOperator",
    "build_axial_block",
    "build_axial_blocks",
    "build_general",
    "operator_integral_oracle",
    "singular_values",
    "eigenvalues_square",
    "spectral_summary",
]

DEFAULT_MEMORY_BUDGET = 512 * 2 ** 20
SYMMETRY_TOL = 1e-12


class OperatorContractError(ValueError):
    """Operator arguments or state violate the operator's contract."""


@dataclass
class MaskOperatorBlock:
    """Real block E^(m), rows j = m..J, columns l = m..L."""

    m: int
    L: int
    J: int
    matrix: np.ndarray

    def __post_init__(self):
        shape = (self.J - self.m + 1, self.L - self.m + 1)
        if self.matrix.shape != shape:
            raise OperatorContractError(f"block m={self.m} has shape {self.matrix.shape}, expected {shape}")

    @property
    def square_part(self):
        return self.matrix[: self.L - self.m + 1]


@dataclass
class GeneralOperator:
    """Complex E with rows (j, mu) at j*j+j+mu and columns (l, m) at l*l+l+m."""

    L: int
    J: int
    matrix: np.ndarray

    def order_slice(self, m):
        """Rows (j, m), j = |m|..J, against columns (l, m), l = |m|..L."""
        rows = [j * j + j + m for j in range(abs(m), self.J + 1)]
        cols = [l * l + l + m for l in range(abs(m), self.L + 1)]
        return self.matrix[np.ix_(rows, cols)]


# ----------------------------------------------------------------------
# assembly
# ----------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _axial_block_kernel(m, w, L, J, even, out):
    K = w.shape[0] - 1
    size = 2 * L + 1
    f000 = np.empty(size)
    fm = np.empty(size)
    buf = np.empty(size)
    for j in range(m, J + 1):
        for l in range(m, L + 1):
            if l > j:
                continue
            if j - l > K or (even and (j + l) % 2):
                continue
            kmin, cnt = _gaunt_axial_into(l, j, m, K, f000, fm, buf)
            s = 0.0
            for q in range(0, cnt, 2):
                s += buf[q] * w[kmin + q]
            out[j - m, l - m] = s
    # upper triangle of the square part by symmetry
    for j in range(m, L + 1):
        for l in range(j + 1, L + 1):
            out[j - m, l - m] = out[l - m, j - m]


def build_axial_block(m, w, L, J):
    """Block E^(m) for mask coefficients ``w`` (a :class:`MaskCoeffs`)."""
    if not 0 <= m <= L:
        raise OperatorContractError(f"order m={m} outside 0..L={L}")
    if not L <= J <= L + w.degree:
        raise OperatorContractError(f"need L <= J <= L + K, got L={L}, J={J}, K={w.degree}")
    out = np.zeros((J - m + 1, L - m + 1))
    _axial_block_kernel(m, np.ascontiguousarray(w.w, dtype=float), L, J, w.is_even, out)
    return MaskOperatorBlock(m, L, J, out)


def build_axial_blocks(w, L, J, workers=1, orders=None):
    """Blocks for every order (default m = 0..L), listed by m."""
    orders = list(range(L + 1)) if orders is None else list(orders)
    if workers <= 1:
        return [build_axial_block(m, w, L, J) for m in orders]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda m: build_axial_block(m, w, L, J), orders))


@numba.njit(cache=True, nogil=True)
def _general_kernel(v, K, L, J, out):
    # v[k, nu + K] holds v_{k,nu} for all signs of nu
    size = 2 * max(L, J) + 1
    f000 = np.empty(size)
    fm = np.empty(size)
    for j in range(J + 1):
        for l in range(L + 1):
            if abs(j - l) > K:
                continue
            kmin0 = _family_into(l, j, 0, 0, f000)
            for mu in range(-j, j + 1):
                for m in range(-l, l + 1):
                    nu = mu - m
                    if abs(nu) > K or abs(nu) > l + j:
                        continue
                    kmin = _family_into(l, j, m, -mu, fm)
                    ktop = min(l + j, K)
                    sign = -1.0 if mu % 2 else 1.0
                    acc = 0.0 + 0.0j
                    for k in range(kmin, ktop + 1):
                        if (l + j + k) % 2:
                            continue
                        d = (sign * math.sqrt((2.0 * l + 1.0) * (2.0 * k + 1.0) * (2.0 * j + 1.0)
                                              / (4.0 * math.pi))
                             * f000[k - kmin0] * fm[k - kmin])
                        acc += d * v[k, nu + K]
                    out[j * j + j + mu, l * l + l + m] = acc


def build_general(v_coeffs, L, J, memory_budget=DEFAULT_MEMORY_BUDGET):
    """Full complex operator for a general real mask given by ``v_coeffs``.

    E_{j,mu;l,m} = sum_k D_{l,m;k,mu-m;j,mu} v_{k,mu-m}, negative mask orders
    taken from the reality symmetry.  Intended for small degrees only.
    """
    K = v_coeffs.lmax
    if not L <= J <= L + K:
        raise OperatorContractError(f"need L <= J <= L + K, got L={L}, J={J}, K={K}")
    nbytes = 16 * (J + 1) ** 2 * (L + 1) ** 2
    if nbytes > memory_budget:
        raise MemoryError(f"general operator needs {nbytes / 2**20:.1f} MiB, budget "
                          f"{memory_budget / 2**20:.1f} MiB")
    v = np.zeros((K + 1, 2 * K + 1), dtype=complex)
    for k in range(K + 1):
        for nu in range(-k, k + 1):
            v[k, nu + K] = v_coeffs[k, nu]
    out = np.zeros(((J + 1) ** 2, (L + 1) ** 2), dtype=complex)
    _general_kernel(v, K, L, J, out)
    return GeneralOperator(L, J, out)


def operator_integral_oracle(v_samples, l, m, j, mu):
    """Quadrature value of int conj(Y_{j,mu}) Y_{l,m} v over the sphere."""
    grid = v_samples.grid
    if v_samples.degree is not None and grid.exactness_degree < l + j + v_samples.degree:
        warnings.warn(f"grid exactness {grid.exactness_degree} < {l + j + v_samples.degree}",
                      ExactnessWarning, stacklevel=2)
    integrand = np.conj(ylm_grid(j, mu, grid)) * ylm_grid(l, m, grid) * v_samples.values
    return complex(np.sum(integrand * grid.point_weights))


# ----------------------------------------------------------------------
# spectra
# ----------------------------------------------------------------------


def _matrix_of(op):
    return op.matrix


def singular_values(op):
    """Singular values of a block or general operator, descending."""
    return np.linalg.svd(_matrix_of(op), compute_uv=False)


def eigenvalues_square(op):
    """Real eigenvalues (ascending) of a square block or J = L general operator."""
    if op.J != op.L:
        raise OperatorContractError(f"eigenvalues need J = L, got L={op.L}, J={op.J}")
    a = _matrix_of(op)
    asym = np.max(np.abs(a - a.conj().T)) if a.size else 0.0
    scale = max(np.max(np.abs(a)), 1.0) if a.size else 1.0
    if asym > SYMMETRY_TOL * scale:
        raise OperatorContractError(f"operator not Hermitian: asymmetry {asym:.3e}")
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))


def spectral_summary(block):
    """(sigma_max, sigma_min, condition number) of one block."""
    s = singular_values(block)
    smax, smin = float(s[0]), float(s[-1])
    cond = math.inf if smin == 0.0 else smax / smin
    return smax, smin, cond
