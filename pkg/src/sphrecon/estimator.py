"""Minimum mean-square-error reconstruction from masked coefficients.

Each order m is solved on its own: a weighted least-squares problem for the
block E^(m) (Householder QR, or Tikhonov-regularised normal equations),
followed by the diagonal Wiener factor C_l / (C_l + N_l).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .harmonics import HarmonicCoeffs

__all__ = [
    "RankError",
    "SolverError",
    "EstimatorConfig",
    "BlockDiagnostics",
    "ReconstructionResult",
    "solve_block_qr",
    "solve_block_regularized",
    "solve_general_qr",
    "wiener_factors",
    "postprocess",
    "reconstruct",
    "grid_search_nu",
    "refine_nu_grid",
    "theoretical_mse",
    "PAPER_NU_GRID",
]

PAPER_NU_GRID = (1e-15, 1.0, 10.0, 1e2, 1e3, 1e4, 1e5)


class RankError(np.linalg.LinAlgError):
    """Triangular factor has a diagonal entry below the rank tolerance."""

    def __init__(self, msg, m=None):
        super().__init__(msg)
        self.m = m


class SolverError(np.linalg.LinAlgError):
    """Normal equations are not numerically positive definite."""

    def __init__(self, msg, m=None):
        super().__init__(msg)
        self.m = m


@dataclass
class EstimatorConfig:
    method: str = "qr"
    gamma: np.ndarray = None
    nu: float = 0.0
    rank_tolerance: float = 1e-12

    def __post_init__(self):
        if self.method not in ("qr", "regularized"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.nu >= 0:
            raise ValueError(f"nu must be non-negative, got {self.nu}")
        if self.gamma is not None:
            self.gamma = np.asarray(self.gamma, dtype=float)
            if np.any(self.gamma <= 0):
                raise ValueError("gamma weights must be positive")

    def gamma_rows(self, m, n_rows):
        """Weights for the rows j = m..J of block m (gamma is indexed by j)."""
        if self.gamma is None:
            return None
        return self.gamma[m:m + n_rows]


@dataclass
class BlockDiagnostics:
    m: int
    n_active: int
    condition: float
    residual: float
    orthogonality: float
    rank_ok: bool


@dataclass
class ReconstructionResult:
    a_hat: HarmonicCoeffs
    alpha: HarmonicCoeffs
    diagnostics: list = field(default_factory=list)
    symmetry_residual: float = 0.0


def _split(rhs):
    rhs = np.asarray(rhs)
    return np.column_stack([rhs.real, rhs.imag])


def _join(x):
    return x[:, 0] + 1j * x[:, 1]


def _weighted(matrix, rhs, gamma):
    if gamma is None:
        return matrix, rhs
    theta = np.sqrt(np.asarray(gamma, dtype=float))
    return matrix * theta[:, None], rhs * theta[:, None]


def solve_block_qr(block, rhs, gamma=None, rank_tolerance=1e-12, columns=None, return_info=False):
    """Least-squares alpha minimising ||Gamma^(1/2) (E alpha - rhs)|| via Householder QR.

    ``columns`` (boolean over l = m..L) restricts the unknowns; the others are
    returned as zero.  Real and imaginary parts share one factorisation.
    """
    E = block.matrix if hasattr(block, "matrix") else np.asarray(block, dtype=float)
    if E.shape[0] != len(rhs):
        raise ValueError(f"block has {E.shape[0]} rows but rhs has {len(rhs)}")
    n = E.shape[1]
    cols = np.ones(n, bool) if columns is None else np.asarray(columns, bool)
    alpha = np.zeros(n, dtype=complex)
    m = getattr(block, "m", None)
    if not cols.any():
        return (alpha, (1.0, 0.0, 0.0)) if return_info else alpha
    A, B = _weighted(E[:, cols], _split(rhs), gamma)
    Q, R = sla.qr(A, mode="economic")
    d = np.abs(np.diag(R))
    if d.min() < rank_tolerance * d.max():
        raise RankError(f"block m={m}: |R_ii| ratio {d.min() / d.max():.3e} below "
                        f"tolerance {rank_tolerance:g}", m)
    x = sla.solve_triangular(R, Q.T @ B)
    alpha[cols] = _join(x)
    if not return_info:
        return alpha
    resid = A @ x - B
    ref = np.linalg.norm(A.T @ B)
    ortho = np.linalg.norm(A.T @ resid) / ref if ref > 0 else 0.0
    s = np.linalg.svd(R, compute_uv=False)
    return alpha, (s[0] / s[-1], float(np.linalg.norm(resid)), float(ortho))


def solve_block_regularized(block, rhs, nu, gamma=None, columns=None):
    """alpha from (E^T Gamma E + nu I) alpha = E^T Gamma rhs by Cholesky."""
    E = block.matrix if hasattr(block, "matrix") else np.asarray(block, dtype=float)
    if E.shape[0] != len(rhs):
        raise ValueError(f"block has {E.shape[0]} rows but rhs has {len(rhs)}")
    if nu < 0:
        raise ValueError("nu must be non-negative")
    n = E.shape[1]
    cols = np.ones(n, bool) if columns is None else np.asarray(columns, bool)
    alpha = np.zeros(n, dtype=complex)
    if not cols.any():
        return alpha
    A, B = _weighted(E[:, cols], _split(rhs), gamma)
    G = A.T @ A + nu * np.eye(A.shape[1])
    try:
        factor = sla.cho_factor(G, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        m = getattr(block, "m", None)
        raise SolverError(f"block m={m}: normal matrix not positive definite (nu={nu:g})", m) from exc
    alpha[cols] = _join(sla.cho_solve(factor, A.T @ B))
    return alpha


def solve_general_qr(op, rhs_full, rank_tolerance=1e-12):
    """Complex least squares against a full general operator, no symmetry imposed."""
    E = op.matrix
    Q, R = sla.qr(E, mode="economic")
    d = np.abs(np.diag(R))
    if d.min() < rank_tolerance * d.max():
        raise RankError(f"general operator: |R_ii| ratio {d.min() / d.max():.3e} below tolerance")
    return sla.solve_triangular(R, Q.conj().T @ rhs_full)


def _spectra(C, N):
    """(C_l, N_l) arrays from spectra, noise models or plain sequences."""
    c = np.asarray(getattr(C, "values", C), dtype=float)
    if N is None:
        n = np.zeros_like(c)
    elif hasattr(N, "tau"):
        n = N.tau * np.asarray(N.base.values, dtype=float)
    else:
        n = np.asarray(getattr(N, "values", N), dtype=float)
    if n.shape != c.shape:
        raise ValueError(f"signal and noise spectra differ in length: {c.size} vs {n.size}")
    return c, n


def wiener_factors(C, N=None):
    """C_l / (C_l + N_l), taken as 0 where C_l = 0."""
    c, n = _spectra(C, N)
    out = np.zeros_like(c)
    pos = c > 0
    out[pos] = c[pos] / (c[pos] + n[pos])
    return out


def postprocess(alpha, C, N=None):
    """a_hat_{l,m} = C_l / (C_l + N_l) alpha_{l,m}."""
    f = wiener_factors(C, N)
    if f.size != alpha.lmax + 1:
        raise ValueError(f"spectrum has {f.size} degrees, coefficients need {alpha.lmax + 1}")
    return HarmonicCoeffs(alpha.lmax, alpha.values * f[alpha.degrees()])


def _active_columns(C, N, m, L):
    c, n = _spectra(C, N)
    return (c + n)[m:L + 1] > 0


def _solve_one(block, rhs, C, N, config):
    cols = _active_columns(C, N, block.m, block.L)
    gamma = config.gamma_rows(block.m, block.matrix.shape[0])
    if config.method == "qr":
        alpha, (cond, resid, ortho) = solve_block_qr(block, rhs, gamma, config.rank_tolerance,
                                                     cols, return_info=True)
        diag = BlockDiagnostics(block.m, int(cols.sum()), cond, resid, ortho, True)
    else:
        alpha = solve_block_regularized(block, rhs, config.nu, gamma, cols)
        diag = BlockDiagnostics(block.m, int(cols.sum()), float("nan"), float("nan"),
                                float("nan"), True)
    return alpha, diag


def reconstruct(blocks, data, C, N=None, config=None, check_symmetry=True):
    """Per-order solve plus Wiener factor, assembled into coefficients.

    ``data[i]`` is the right-hand side for ``blocks[i]``.  With
    ``check_symmetry`` the order -m system (same real block, data
    (-1)^m conj(b_m)) is solved as well and its disagreement with the
    reality symmetry is reported; nothing is symmetrised.
    """
    config = config or EstimatorConfig()
    if len(blocks) != len(data):
        raise ValueError("one right-hand side per block is required")
    L = blocks[0].L
    alpha = HarmonicCoeffs(L)
    f = wiener_factors(C, N)
    if f.size != L + 1:
        raise ValueError(f"spectrum has {f.size} degrees, blocks need {L + 1}")
    diags = []
    sym = 0.0
    for block, rhs in sorted(zip(blocks, data), key=lambda t: t[0].m):
        m = block.m
        try:
            a_m, diag = _solve_one(block, rhs, C, N, config)
            if check_symmetry and m > 0:
                a_neg, _ = _solve_one(block, (-1) ** m * np.conj(rhs), C, N, config)
        except (RankError, SolverError) as exc:
            exc.m = m
            raise
        alpha.order(m)[:] = a_m
        diags.append(diag)
        if check_symmetry and m > 0:
            fl = f[m:]
            mirrored = (-1) ** m * np.conj(fl * a_neg)
            scale = max(np.max(np.abs(fl * a_m)), np.finfo(float).tiny)
            sym = max(sym, float(np.max(np.abs(mirrored - fl * a_m)) / scale))
    a_hat = postprocess(alpha, C, N)
    return ReconstructionResult(a_hat, alpha, diags, sym)


def refine_nu_grid(nu, steps=(0, 5, 10, 15, 20, 25)):
    """nu + k nu/10 for the given k."""
    return [nu * (1.0 + 0.1 * k) for k in steps]


def grid_search_nu(blocks, data, C, N, truth, grid=PAPER_NU_GRID, refine=True, gamma=None):
    """nu minimising the coefficient l2 error of the regularised reconstruction.

    Returns ``(best_nu, best_error, table)`` with ``table`` a list of
    ``(nu, error)`` in evaluation order; nu values whose normal matrix is
    not positive definite get an infinite error.
    """
    from .metrics import coeff_l2_error

    grid = list(grid)
    if not grid:
        raise ValueError("nu grid is empty")
    table = []

    def run(nu):
        cfg = EstimatorConfig("regularized", gamma=gamma, nu=nu)
        try:
            res = reconstruct(blocks, data, C, N, cfg, check_symmetry=False)
            err = coeff_l2_error(res.a_hat, truth)
        except SolverError:
            err = float("inf")
        table.append((nu, err))
        return err

    errs = [run(nu) for nu in grid]
    best = grid[int(np.argmin(errs))]
    if refine and len(grid) > 1:
        fine = [nu for nu in refine_nu_grid(best) if nu not in grid]
        for nu in fine:
            run(nu)
    best_nu, best_err = min(table, key=lambda t: t[1])
    return best_nu, best_err, table


def theoretical_mse(C, N, lambda_weights=None):
    """tr[Lambda (C - C (C+N)^-1 C)] for diagonal C, N, Lambda, summed over (l, m)."""
    c, n = _spectra(C, N)
    lam = np.ones_like(c) if lambda_weights is None else np.asarray(lambda_weights, dtype=float)
    per = np.zeros_like(c)
    pos = (c + n) > 0
    per[pos] = c[pos] - c[pos] ** 2 / (c[pos] + n[pos])
    deg = np.arange(c.size)
    return float(np.sum((2 * deg + 1) * lam * per))
