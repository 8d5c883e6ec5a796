"""Error functionals for reconstructed fields."""
import math
from dataclasses import dataclass

import numpy as np

from .mask import mask_value

__all__ = [
    "RegionPartition",
    "partition_grid",
    "field_norm",
    "rms_error",
    "region_errors",
    "coeff_l2_error",
    "ErrorRow",
    "format_report",
]


@dataclass
class RegionPartition:
    """Grid points split into R0 (exact mask is 0) and R1 (mask positive)."""

    grid: object
    in_r0: np.ndarray

    @property
    def counts(self):
        n0 = int(self.in_r0.sum())
        return n0, self.in_r0.size - n0

    def weight_sums(self):
        w = self.grid.point_weights
        return float(w[self.in_r0].sum()), float(w[~self.in_r0].sum())


def partition_grid(grid, spec):
    """Label grid rows by the analytic mask, not its truncated series."""
    zero_rows = mask_value(grid.nodes_z, spec) == 0.0
    return RegionPartition(grid, np.repeat(zero_rows[:, None], grid.n_phi, axis=1))


def _check_same(a, b):
    if not a.grid.same_as(b.grid):
        raise ValueError("samples live on different grids")


def field_norm(samples, where=None):
    w = samples.grid.point_weights
    sq = w * samples.values ** 2
    return math.sqrt(float(sq.sum() if where is None else sq[where].sum()))


def rms_error(recon, truth):
    """sqrt(sum_i w_i (recon_i - truth_i)^2) with quadrature weights w_i."""
    _check_same(recon, truth)
    w = recon.grid.point_weights
    return math.sqrt(float(np.sum(w * (recon.values - truth.values) ** 2)))


def region_errors(recon, truth, partition):
    """(RMSerr0, rel0, RMSerr1, rel1).

    RMSerr_j = sqrt(4 pi / W_j * sum_{R_j} w |recon - truth|^2) with W_j the
    quadrature weight of region j, and rel_j = RMSerr_j / ||truth||_{R_j} in
    the same normalisation.
    """
    _check_same(recon, truth)
    w = recon.grid.point_weights
    diff2 = w * (recon.values - truth.values) ** 2
    true2 = w * truth.values ** 2
    out = []
    for region in (partition.in_r0, ~partition.in_r0):
        wsum = float(w[region].sum())
        if wsum == 0.0:
            raise ValueError("empty region")
        scale = 4.0 * math.pi / wsum
        err = math.sqrt(scale * float(diff2[region].sum()))
        ref = math.sqrt(scale * float(true2[region].sum()))
        out.extend([err, err / ref if ref > 0 else math.inf])
    return tuple(out)


def coeff_l2_error(a_hat, a):
    """||a_0 - a_hat_0||^2 + 2 sum_{m>0} ||a_m - a_hat_m||^2 (squared norm over all orders)."""
    if a_hat.lmax != a.lmax:
        raise ValueError("coefficient sets have different degree bounds")
    d2 = np.abs(a_hat.values - a.values) ** 2
    return float(np.sum(np.where(a.orders() == 0, 1.0, 2.0) * d2))


@dataclass
class ErrorRow:
    label: str
    rms: float
    rel: float
    rms0: float
    rel0: float
    rms1: float
    rel1: float
    l2: float

    COLUMNS = ("rms", "rel", "rms0", "rel0", "rms1", "rel1", "l2")


def format_report(rows, title=None):
    """Aligned table followed by ``metric,value`` lines (``<label>.<metric>``)."""
    head = ("case",) + ErrorRow.COLUMNS
    body = [(r.label,) + tuple(f"{getattr(r, c):.6e}" for c in ErrorRow.COLUMNS) for r in rows]
    widths = [max(len(str(x)) for x in col) for col in zip(head, *body)]
    lines = []
    if title:
        lines.append(f"# {title}")
    lines.append("  ".join(h.rjust(w) for h, w in zip(head, widths)))
    for b in body:
        lines.append("  ".join(x.rjust(w) for x, w in zip(b, widths)))
    lines.append("")
    lines.append("metric,value")
    for r in rows:
        for c in ErrorRow.COLUMNS:
            lines.append(f"{r.label}.{c},{getattr(r, c):.17g}")
    return "\n".join(lines) + "\n"
