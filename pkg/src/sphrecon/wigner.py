"""Wigner 3j symbols and Gaunt coefficients.

Values are obtained from the three-term recursion in the third degree
(Schulten & Gordon), run forward from the lower end of the allowed range and
backward from the upper end, then matched and normalised.  This stays finite
for degrees in the thousands, where factorial formulas overflow.

An exact-arithmetic evaluation of the Racah sum is provided as an
independent reference for small degrees.
"""
import math
from fractions import Fraction
from functools import lru_cache

import numba
import numpy as np

__all__ = [
    "WignerDomainError",
    "OracleRangeError",
    "ORACLE_MAX_DEGREE",
    "wigner3j",
    "wigner3j_family",
    "wigner3j_oracle",
    "gaunt",
    "gaunt_axial_range",
]

ORACLE_MAX_DEGREE = 200

_FOUR_PI = 4.0 * math.pi
_BIG = 1e200


class WignerDomainError(ValueError):
    """Raised for negative degrees or orders exceeding their degree."""


class OracleRangeError(ValueError):
    """Raised when the exact reference is asked for degrees it does not support."""


def _check_index(l, m):
    if l < 0:
        raise WignerDomainError(f"degree must be non-negative, got {l}")
    if abs(m) > l:
        raise WignerDomainError(f"order {m} exceeds degree {l}")


# ----------------------------------------------------------------------
# recursion kernels
# ----------------------------------------------------------------------


@numba.njit(cache=True, nogil=True)
def _coef_a(l1, l2, m3, l):
    # (l^2 - (l1-l2)^2) ((l1+l2+1)^2 - l^2) (l^2 - m3^2), all in float
    fl = float(l)
    d = float(l1 - l2)
    s = float(l1 + l2 + 1)
    fm = float(m3)
    return math.sqrt((fl * fl - d * d) * (s * s - fl * fl) * (fl * fl - fm * fm))


@numba.njit(cache=True, nogil=True)
def _coef_b(l1, l2, m1, m2, l):
    fl = float(l)
    return (2.0 * fl + 1.0) * (
        float(m1 + m2) * (float(l1) * (l1 + 1) - float(l2) * (l2 + 1))
        - float(m1 - m2) * fl * (fl + 1.0)
    )


@numba.njit(cache=True, nogil=True)
def _family_into(l1, l2, m1, m2, out):
    """Fill ``out[:n]`` with 3j(l1 l2 l; m1 m2 -m1-m2) for l = lmin..lmax.

    Returns lmin.  ``out`` must hold at least ``2*min(l1, l2) + 1`` entries.
    """
    m3 = -(m1 + m2)
    lmin = max(abs(l1 - l2), abs(m3))
    lmax = l1 + l2
    n = lmax - lmin + 1
    parity = 1.0 if (l1 - l2 - m3) % 2 == 0 else -1.0
    if n == 1:
        out[0] = parity / math.sqrt(2.0 * lmin + 1.0)
        return lmin

    # forward sweep while the solution keeps growing
    k = 0
    if lmin > 0:
        out[0] = 1.0
        prev = 0.0
        i = 0
        while i < n - 1:
            l = lmin + i
            num = _coef_b(l1, l2, m1, m2, l) * out[i]
            if i > 0:
                num += (l + 1.0) * _coef_a(l1, l2, m3, l) * prev
            nxt = -num / (l * _coef_a(l1, l2, m3, l + 1))
            prev = out[i]
            out[i + 1] = nxt
            i += 1
            if abs(nxt) > _BIG:
                for q in range(i + 1):
                    out[q] /= _BIG
                prev /= _BIG
            if abs(out[i]) <= abs(out[i - 1]):
                break
        k = i
        if k == n - 1 and abs(out[k]) > abs(out[k - 1]):
            # monotone growth over the whole range
            norm = 0.0
            peak = 0.0
            for q in range(n):
                peak = max(peak, abs(out[q]))
            for q in range(n):
                out[q] /= peak
                norm += (2.0 * (lmin + q) + 1.0) * out[q] * out[q]
            scale = 1.0 / math.sqrt(norm)
            if out[n - 1] * parity < 0.0:
                scale = -scale
            for q in range(n):
                out[q] *= scale
            return lmin

    # backward sweep from the top down to index k-1 (overlap k-1, k)
    g = np.empty(n)
    g[n - 1] = 1.0
    stop = k - 1 if k > 0 else 0
    i = n - 1
    while i > stop:
        l = lmin + i
        num = _coef_b(l1, l2, m1, m2, l) * g[i]
        if i < n - 1:
            num += l * _coef_a(l1, l2, m3, l + 1) * g[i + 1]
        g[i - 1] = -num / ((l + 1.0) * _coef_a(l1, l2, m3, l))
        i -= 1
        if abs(g[i]) > _BIG:
            for q in range(i, n):
                g[q] /= _BIG

    if k > 0:
        # least-squares match on the two overlap points, in rescaled units
        fs = max(abs(out[k - 1]), abs(out[k]))
        gs = max(abs(g[k - 1]), abs(g[k]))
        f0, f1 = out[k - 1] / fs, out[k] / fs
        g0, g1 = g[k - 1] / gs, g[k] / gs
        s = (f0 * g0 + f1 * g1) / (g0 * g0 + g1 * g1) * (fs / gs)
        for q in range(k, n):
            out[q] = s * g[q]
        sign_top = 1.0 if s > 0.0 else -1.0
    else:
        for q in range(n):
            out[q] = g[q]
        sign_top = 1.0

    peak = 0.0
    for q in range(n):
        peak = max(peak, abs(out[q]))
    norm = 0.0
    for q in range(n):
        out[q] /= peak
        norm += (2.0 * (lmin + q) + 1.0) * out[q] * out[q]
    scale = 1.0 / math.sqrt(norm)
    if sign_top * parity < 0.0:
        scale = -scale
    for q in range(n):
        out[q] *= scale
    return lmin


@numba.njit(cache=True, nogil=True)
def _gaunt_axial_into(l, j, m, kmax, f000, fm, out):
    """D_{l,m;k,0;j,m} for k = |l-j| .. min(l+j, kmax); returns (kmin, count).

    Entries with l+j+k odd are exact zeros and left in place.
    """
    kmin = abs(l - j)
    ktop = min(l + j, kmax)
    if ktop < kmin:
        return kmin, 0
    _family_into(l, j, 0, 0, f000)
    _family_into(l, j, m, -m, fm)
    sign = -1.0 if m % 2 else 1.0
    pref = (2.0 * l + 1.0) * (2.0 * j + 1.0) / _FOUR_PI
    cnt = ktop - kmin + 1
    for q in range(cnt):
        k = kmin + q
        if (l + j + k) % 2:
            out[q] = 0.0
        else:
            out[q] = sign * math.sqrt(pref * (2.0 * k + 1.0)) * f000[q] * fm[q]
    return kmin, cnt


# ----------------------------------------------------------------------
# public API
# ----------------------------------------------------------------------


@lru_cache(maxsize=4096)
def _cached_family(l1, l2, m1, m2):
    out = np.empty(2 * min(l1, l2) + 1)
    lmin = _family_into(l1, l2, m1, m2, out)
    vals = out[: l1 + l2 - lmin + 1].copy()
    vals.setflags(write=False)
    return lmin, vals


def wigner3j_family(l1, l2, m1, m2):
    """All 3j(l1 l2 l; m1 m2 -m1-m2) over the allowed range of l.

    Returns ``(lmin, values)`` where ``values[i]`` belongs to ``l = lmin + i``.
    The array is read-only and may be shared between callers.
    """
    l1, l2, m1, m2 = int(l1), int(l2), int(m1), int(m2)
    _check_index(l1, m1)
    _check_index(l2, m2)
    if abs(m1 + m2) > l1 + l2:
        return l1 + l2 + 1, np.empty(0)
    return _cached_family(l1, l2, m1, m2)


def wigner3j(l1, l2, l3, m1, m2, m3):
    """Wigner 3j symbol for integer degrees and orders.

    Returns an exact ``0.0`` whenever a selection rule fails.
    """
    l1, l2, l3 = int(l1), int(l2), int(l3)
    m1, m2, m3 = int(m1), int(m2), int(m3)
    _check_index(l1, m1)
    _check_index(l2, m2)
    _check_index(l3, m3)
    if m1 + m2 + m3 != 0:
        return 0.0
    if l3 < abs(l1 - l2) or l3 > l1 + l2:
        return 0.0
    if m1 == 0 and m2 == 0 and (l1 + l2 + l3) % 2:
        return 0.0
    lmin, vals = _cached_family(l1, l2, m1, m2)
    return float(vals[l3 - lmin])


@lru_cache(maxsize=None)
def _factorial(n):
    return math.factorial(n)


def wigner3j_oracle(l1, l2, l3, m1, m2, m3, max_degree=ORACLE_MAX_DEGREE):
    """Racah's closed-form sum evaluated in exact rational arithmetic.

    Only the final square root and conversion to float are inexact, so the
    result carries a relative error of a few ulp.
    """
    for l, m in ((l1, m1), (l2, m2), (l3, m3)):
        _check_index(l, m)
        if l > max_degree:
            raise OracleRangeError(f"degree {l} beyond oracle limit {max_degree}")
    if m1 + m2 + m3 != 0 or l3 < abs(l1 - l2) or l3 > l1 + l2:
        return 0.0
    f = _factorial
    tmin = max(0, l2 - l3 - m1, l1 - l3 + m2)
    tmax = min(l1 + l2 - l3, l1 - m1, l2 + m2)
    total = 0
    for t in range(tmin, tmax + 1):
        den = (f(t) * f(l3 - l2 + t + m1) * f(l3 - l1 + t - m2)
               * f(l1 + l2 - l3 - t) * f(l1 - t - m1) * f(l2 - t + m2))
        total += Fraction((-1) ** t, den)
    if total == 0:
        return 0.0
    pre = Fraction(
        f(l1 + l2 - l3) * f(l1 - l2 + l3) * f(-l1 + l2 + l3)
        * f(l1 + m1) * f(l1 - m1) * f(l2 + m2) * f(l2 - m2) * f(l3 + m3) * f(l3 - m3),
        f(l1 + l2 + l3 + 1),
    )
    sign = (-1) ** ((l1 - l2 - m3) % 2)
    if total < 0:
        sign = -sign
    return sign * math.sqrt(float(pre * total * total))


def gaunt(l, m, k, nu, j, mu):
    """Integral of Y_{l,m} Y_{k,nu} conj(Y_{j,mu}) over the sphere."""
    l, m, k, nu, j, mu = (int(x) for x in (l, m, k, nu, j, mu))
    _check_index(l, m)
    _check_index(k, nu)
    _check_index(j, mu)
    if (l + k + j) % 2 or k < abs(j - l) or k > j + l or m + nu != mu:
        return 0.0
    w0 = wigner3j(l, k, j, 0, 0, 0)
    wm = wigner3j(l, k, j, m, nu, -mu)
    sign = -1.0 if mu % 2 else 1.0
    return sign * math.sqrt((2 * l + 1) * (2 * k + 1) * (2 * j + 1) / _FOUR_PI) * w0 * wm


def gaunt_axial_range(l, j, m, k_max):
    """Nonzero-parity Gaunt coefficients D_{l,m;k,0;j,m} as ``[(k, value), ...]``.

    Covers ``|j-l| <= k <= min(j+l, k_max)`` with ``j+l+k`` even; the whole
    family comes from one pair of recursions in k.
    """
    l, j, m, k_max = int(l), int(j), int(m), int(k_max)
    _check_index(l, m)
    _check_index(j, m)
    size = 2 * min(l, j) + 1
    f000 = np.empty(size)
    fm = np.empty(size)
    out = np.empty(size)
    kmin, cnt = _gaunt_axial_into(l, j, m, k_max, f000, fm, out)
    return [(kmin + q, float(out[q])) for q in range(0, cnt, 2)]
