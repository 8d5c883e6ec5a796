"""Plain-text and binary formats shared by the library and the CLI."""
import re

import numpy as np

from .harmonics import FieldSamples, HarmonicCoeffs
from .mask import MaskCoeffs
from .operator import MaskOperatorBlock

__all__ = [
    "FormatError",
    "write_coeffs",
    "read_coeffs",
    "write_samples",
    "read_samples",
    "write_spectrum",
    "read_spectrum",
    "write_mask_coeffs",
    "read_mask_coeffs",
    "write_block",
    "read_block",
]

_HEADER_L = re.compile(r"#\s*L\s*=\s*(\d+)\s*$")
_HEADER_GRID = re.compile(r"#\s*ntheta\s*=\s*(\d+)\s+nphi\s*=\s*(\d+)\s*$")


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def _fmt(x):
    return "%.17g" % x


def _data_lines(lines):
    for ln in lines:
        ln = ln.strip()
        if ln and not ln.startswith("#"):
            yield ln


def write_coeffs(path, coeffs):
    """``# L=<L>`` then ``<ell> <m> <re> <im>`` for m >= 0, ordered by (ell, m)."""
    with open(path, "w") as fh:
        fh.write(f"# L={coeffs.lmax}\n")
        for l in range(coeffs.lmax + 1):
            for m in range(l + 1):
                v = coeffs[l, m]
                fh.write(f"{l} {m} {_fmt(v.real)} {_fmt(v.imag)}\n")


def read_coeffs(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not _HEADER_L.match(lines[0].strip()):
        raise FormatError(f"{path}: missing '# L=<int>' header")
    out = HarmonicCoeffs(int(_HEADER_L.match(lines[0].strip()).group(1)))
    for ln in _data_lines(lines[1:]):
        parts = ln.split()
        if len(parts) != 4:
            raise FormatError(f"{path}: bad coefficient line {ln!r}")
        l, m = int(parts[0]), int(parts[1])
        if m < 0 or m > l or l > out.lmax:
            raise FormatError(f"{path}: index ({l}, {m}) out of range")
        out[l, m] = complex(float(parts[2]), float(parts[3]))
    return out


def write_samples(path, samples):
    grid = samples.grid
    with open(path, "w") as fh:
        fh.write(f"# ntheta={grid.n_theta} nphi={grid.n_phi}\n")
        for v in samples.values.ravel():
            fh.write(_fmt(v) + "\n")


def read_samples(path, grid):
    """Read samples onto ``grid``; the header must agree with its shape."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    hdr = _HEADER_GRID.match(lines[0].strip()) if lines else None
    if hdr is None:
        raise FormatError(f"{path}: missing '# ntheta=<int> nphi=<int>' header")
    shape = (int(hdr.group(1)), int(hdr.group(2)))
    if shape != grid.shape:
        raise FormatError(f"{path}: shape {shape} does not match grid {grid.shape}")
    vals = np.array([float(ln) for ln in _data_lines(lines[1:])])
    if vals.size != shape[0] * shape[1]:
        raise FormatError(f"{path}: expected {shape[0] * shape[1]} values, got {vals.size}")
    return FieldSamples(grid, vals.reshape(shape))


def write_spectrum(path, values):
    with open(path, "w") as fh:
        for l, c in enumerate(values):
            fh.write(f"{l} {_fmt(c)}\n")


def read_spectrum(path):
    """Spectrum values indexed by ell; missing degrees are an error."""
    rows = {}
    with open(path) as fh:
        for ln in _data_lines(fh):
            parts = ln.split()
            if len(parts) != 2:
                raise FormatError(f"{path}: bad spectrum line {ln!r}")
            rows[int(parts[0])] = float(parts[1])
    if not rows or sorted(rows) != list(range(max(rows) + 1)):
        raise FormatError(f"{path}: degrees must run 0..L without gaps")
    return np.array([rows[l] for l in range(len(rows))])


def write_mask_coeffs(path, mask):
    """Mask coefficients in the coefficient format, order 0 only."""
    with open(path, "w") as fh:
        fh.write(f"# L={mask.degree}\n")
        for k, w in enumerate(mask.w):
            fh.write(f"{k} 0 {_fmt(w)} 0\n")


def read_mask_coeffs(path):
    c = read_coeffs(path)
    return MaskCoeffs(c.lmax, c.order(0).real.copy())


def write_block(path, block):
    """Header int64 (m, L, J), then the matrix as row-major float64."""
    with open(path, "wb") as fh:
        np.array([block.m, block.L, block.J], dtype="<i8").tofile(fh)
        np.ascontiguousarray(block.matrix, dtype="<f8").tofile(fh)


def read_block(path):
    with open(path, "rb") as fh:
        head = np.fromfile(fh, dtype="<i8", count=3)
        if head.size != 3:
            raise FormatError(f"{path}: truncated block header")
        m, L, J = (int(x) for x in head)
        if not 0 <= m <= L <= J:
            raise FormatError(f"{path}: bad block header {(m, L, J)}")
        n = (J - m + 1) * (L - m + 1)
        data = np.fromfile(fh, dtype="<f8", count=n + 1)
    if data.size != n:
        raise FormatError(f"{path}: expected {n} values, found {data.size}")
    return MaskOperatorBlock(m, L, J, data.reshape(J - m + 1, L - m + 1))
