"""Command-line driver: operator cache, experiments, diagnostics.

Settings come from a preset, then an optional ``key=value`` config file,
then command-line flags, later sources overriding earlier ones.
"""
import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import io
from .estimator import PAPER_NU_GRID, EstimatorConfig, RankError, grid_search_nu, reconstruct
from .field import NoiseModel, PowerSpectrum, Seed, masked_data_pixel, paper_spectrum, sample_field, sample_noise
from .harmonics import make_grid, synthesize
from .mask import AxialMaskSpec, mask_coeffs, mask_extrema
from .metrics import (ErrorRow, coeff_l2_error, field_norm, format_report, partition_grid,
                      region_errors, rms_error)
from .operator import build_axial_block, spectral_summary

log = logging.getLogger("sphrecon")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

PRESETS = {
    "paper": dict(L=100, K=900, J=1000),
    "desk": dict(L=32, K=96, J=128),
    "tiny": dict(L=8, K=16, J=24),
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    L: int = 100
    K: int = 900
    J: int = None
    mask_a_deg: float = 10.0
    mask_b_deg: float = 20.0
    tau: list = field(default_factory=lambda: [0.0])
    seed: int = 0
    method: str = "qr"
    nu: list = field(default_factory=lambda: list(PAPER_NU_GRID))
    spectrum: str = "paper"
    include_monopole_dipole: bool = False
    out: str = "sphrecon_out"
    workers: int = 0
    grid_exactness: int = None
    plot: bool = False

    def validate(self):
        if self.J is None:
            self.J = self.L + self.K
        if self.L < 1 or self.K < 1:
            raise ConfigError(f"L and K must be positive, got L={self.L}, K={self.K}")
        if not self.L <= self.J <= self.L + self.K:
            raise ConfigError(f"need L <= J <= L+K, got L={self.L}, J={self.J}, K={self.K}")
        if not 0 < self.mask_a_deg < self.mask_b_deg < 90:
            raise ConfigError(f"need 0 < mask-a-deg < mask-b-deg < 90, got "
                              f"{self.mask_a_deg}, {self.mask_b_deg}")
        if not self.tau or any(not t >= 0 for t in self.tau):
            raise ConfigError(f"tau values must be non-negative, got {self.tau}")
        if self.method not in ("qr", "regularized"):
            raise ConfigError(f"method must be qr or regularized, got {self.method!r}")
        if not self.nu or any(not v >= 0 for v in self.nu):
            raise ConfigError(f"nu values must be non-negative, got {self.nu}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError(f"seed must fit an unsigned 64-bit integer, got {self.seed}")
        need = self.L + self.K + self.J
        if self.grid_exactness is not None and self.grid_exactness < 0:
            raise ConfigError("grid-exactness must be non-negative")
        if self.grid_exactness is not None and self.grid_exactness < need:
            log.warning("grid exactness %d below %d: pixel route will not be exact",
                        self.grid_exactness, need)
        if self.workers < 0:
            raise ConfigError("workers must be non-negative")
        return self

    @property
    def mask_spec(self):
        return AxialMaskSpec.from_degrees(self.mask_a_deg, self.mask_b_deg, self.K)

    @property
    def n_workers(self):
        return self.workers or os.cpu_count() or 1


# ----------------------------------------------------------------------
# configuration parsing
# ----------------------------------------------------------------------


def _float_list(text):
    try:
        return [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"bad boolean {text!r}")


_CONVERT = {
    "L": int, "K": int, "J": int, "seed": int, "workers": int, "grid_exactness": int,
    "mask_a_deg": float, "mask_b_deg": float,
    "tau": _float_list, "nu": _float_list,
    "include_monopole_dipole": _bool, "plot": _bool,
    "method": str, "spectrum": str, "out": str,
}


def _convert(key, value):
    try:
        return _CONVERT[key](value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def read_config_file(path):
    """``key=value`` lines; ``#`` starts a comment; keys as the long flags."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in _CONVERT:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _convert(key, value)
    return out


def resolve_config(args):
    cfg = ExperimentConfig(**PRESETS[args.preset])
    updates = read_config_file(args.config) if args.config else {}
    for f in fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            updates[f.name] = _convert(f.name, v) if isinstance(v, str) else v
    cfg = replace(cfg, **updates)
    if "J" not in updates and ("L" in updates or "K" in updates):
        cfg.J = None
    return cfg.validate()


# ----------------------------------------------------------------------
# shared pipeline pieces
# ----------------------------------------------------------------------


def _spectrum(cfg):
    if cfg.spectrum == "paper":
        return paper_spectrum(cfg.L, cfg.include_monopole_dipole)
    values = io.read_spectrum(cfg.spectrum)
    if values.size < cfg.L + 1:
        raise ConfigError(f"spectrum file has degrees up to {values.size - 1}, need {cfg.L}")
    return PowerSpectrum(values[:cfg.L + 1])


def _mask_hash(mask, cfg):
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(mask.w, dtype="<f8").tobytes())
    h.update(f"{cfg.mask_a_deg!r},{cfg.mask_b_deg!r},{cfg.K}".encode())
    return h.hexdigest()


def _block_path(folder, m):
    return folder / f"block_m{m:04d}.bin"


def load_or_build_operator(cfg, mask, folder):
    """Blocks m = 0..L, reusing cached files when the manifest matches."""
    folder = Path(folder)
    manifest = dict(L=cfg.L, K=cfg.K, J=cfg.J, mask_hash=_mask_hash(mask, cfg), blocks=cfg.L + 1)
    man_path = folder / "manifest.json"
    cached = False
    if man_path.exists():
        try:
            cached = json.loads(man_path.read_text()) == manifest
        except ValueError:
            cached = False
    blocks, built = [], 0
    folder.mkdir(parents=True, exist_ok=True)
    todo = []
    for m in range(cfg.L + 1):
        p = _block_path(folder, m)
        if cached and p.exists():
            try:
                b = io.read_block(p)
                if (b.m, b.L, b.J) == (m, cfg.L, cfg.J):
                    blocks.append(b)
                    continue
            except io.FormatError:
                pass
        blocks.append(None)
        todo.append(m)
    if todo:
        if not cached and man_path.exists():
            man_path.unlink()
        from concurrent.futures import ThreadPoolExecutor

        def work(m):
            return build_axial_block(m, mask, cfg.L, cfg.J)

        with ThreadPoolExecutor(max_workers=cfg.n_workers) as pool:
            for b in pool.map(work, todo):
                io.write_block(_block_path(folder, b.m), b)
                blocks[b.m] = b
                built += 1
        man_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return blocks, built


def _tau_tag(tau):
    return f"{tau:g}"


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------


def cmd_build_operator(cfg):
    """Compute and cache the per-order operator blocks."""
    out = Path(cfg.out)
    mask = mask_coeffs(cfg.mask_spec)
    blocks, built = load_or_build_operator(cfg, mask, out / "operator")
    print(f"operator L={cfg.L} K={cfg.K} J={cfg.J}: {len(blocks)} blocks, "
          f"{built} built, {len(blocks) - built} cached")
    return EXIT_OK


def _solve(cfg, blocks, data, C, N, truth):
    """Reconstruct with the configured method; returns (result, label, nu)."""
    if cfg.method == "regularized":
        if len(cfg.nu) == 1:
            nu = cfg.nu[0]
        else:
            nu, _, _ = grid_search_nu(blocks, data, C, N, truth, cfg.nu)
        return reconstruct(blocks, data, C, N, EstimatorConfig("regularized", nu=nu)), "reg", nu
    try:
        return reconstruct(blocks, data, C, N, EstimatorConfig("qr")), "qr", None
    except RankError as exc:
        log.warning("QR rank failure at m=%s; switching to the regularized path", exc.m)
        nu, _, _ = grid_search_nu(blocks, data, C, N, truth, cfg.nu)
        return reconstruct(blocks, data, C, N, EstimatorConfig("regularized", nu=nu)), "reg", nu


def _ring_rms(recon, truth):
    d2 = (recon.values - truth.values) ** 2
    return np.sqrt(d2.mean(axis=1))


def cmd_experiment(cfg):
    """Simulate, mask, reconstruct and report errors for each tau."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    spec = cfg.mask_spec
    mask = mask_coeffs(spec)
    blocks, _ = load_or_build_operator(cfg, mask, out / "operator")
    C = _spectrum(cfg)
    grid = make_grid(cfg.grid_exactness if cfg.grid_exactness is not None else cfg.L + cfg.K + cfg.J)
    part = partition_grid(grid, spec)
    seed = Seed(cfg.seed)
    a = sample_field(C, seed.child("field"))
    truth = synthesize(a, grid)
    io.write_coeffs(out / "truth_coeffs.txt", a)
    io.write_samples(out / "truth_samples.txt", truth)

    rows, profiles = [], []
    lat = np.degrees(np.arcsin(grid.nodes_z))
    for tau in cfg.tau:
        N = NoiseModel(tau, C)
        # one noise stream for all tau, so runs differ only in amplitude
        eps = sample_noise(N, seed.child("noise"))
        bv = masked_data_pixel(a, eps, spec, cfg.J, grid=grid, mask=mask)
        data = [bv.order(m).copy() for m in range(cfg.L + 1)]
        res, method, nu = _solve(cfg, blocks, data, C, N, a)
        recon = synthesize(res.a_hat, grid)
        tag = _tau_tag(tau)
        io.write_coeffs(out / f"recon_coeffs_tau{tag}.txt", res.a_hat)
        io.write_coeffs(out / f"error_coeffs_tau{tag}.txt", res.a_hat - a)
        io.write_samples(out / f"recon_samples_tau{tag}.txt", recon)
        e0, r0, e1, r1 = region_errors(recon, truth, part)
        err = rms_error(recon, truth)
        rel = err / field_norm(truth)
        label = f"tau={tag}" + ("" if nu is None else f",nu={nu:g}")
        rows.append(ErrorRow(label, err, rel, e0, r0, e1, r1, coeff_l2_error(res.a_hat, a)))
        profiles.append((f"tau={tag}", _ring_rms(recon, truth)))
        log.info("%s method=%s rel1=%.3e symmetry=%.1e", label, method, r1, res.symmetry_residual)

    with open(out / "error_profile.csv", "w") as fh:
        fh.write("latitude_deg," + ",".join(p[0] for p in profiles) + "\n")
        for i in range(grid.n_theta):
            fh.write(f"{lat[i]:.17g}," + ",".join(f"{p[1][i]:.17g}" for p in profiles) + "\n")
    title = (f"L={cfg.L} K={cfg.K} J={cfg.J} mask=({cfg.mask_a_deg:g},{cfg.mask_b_deg:g}) "
             f"seed={cfg.seed} method={cfg.method}")
    report = format_report(rows, title)
    (out / "report.txt").write_text(report)
    sys.stdout.write(report)
    if cfg.plot:
        from .plotting import plot_error_profiles

        plot_error_profiles(lat, profiles, out / "error_profile.png")
    return EXIT_OK


def cmd_diagnose(cfg):
    """Singular values and condition numbers of every block."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mask = mask_coeffs(cfg.mask_spec)
    blocks, _ = load_or_build_operator(cfg, mask, out / "operator")
    vmin, vmax = mask_extrema(mask)
    rows = [(b.m,) + spectral_summary(b) for b in blocks]
    with open(out / "diagnose.csv", "w") as fh:
        fh.write("m,sigma_max,sigma_min,condition\n")
        for r in rows:
            fh.write(",".join([str(r[0])] + [f"{x:.17g}" for x in r[1:]]) + "\n")
    smax = max(r[1] for r in rows)
    ok = smax <= vmax + 1e-8
    lines = [
        f"# L={cfg.L} K={cfg.K} J={cfg.J}",
        "metric,value",
        f"mask_min,{vmin:.17g}",
        f"mask_max,{vmax:.17g}",
        f"sigma_max,{smax:.17g}",
        f"worst_condition_m,{max(rows, key=lambda r: r[3])[0]}",
        f"sigma_bound,{'pass' if ok else 'fail'}",
    ]
    text = "\n".join(lines) + "\n"
    (out / "diagnose.txt").write_text(text)
    sys.stdout.write(text)
    if cfg.plot:
        from .plotting import plot_conditioning

        plot_conditioning(rows, out / "conditioning.png")
    if not ok:
        print(f"sigma_max {smax:.6e} exceeds mask maximum {vmax:.6e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_mask_coeffs(cfg):
    """Write the mask's zonal coefficients and report its extrema."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mask = mask_coeffs(cfg.mask_spec)
    io.write_mask_coeffs(out / "mask_coeffs.txt", mask)
    vmin, vmax = mask_extrema(mask)
    print(f"mask K={cfg.K}: min {vmin:.6e}, max {vmax:.9f}")
    return EXIT_OK


def cmd_synth(cfg):
    """Draw one Gaussian random field and write its coefficients."""
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    C = _spectrum(cfg)
    a = sample_field(C, Seed(cfg.seed).child("field"))
    io.write_coeffs(out / "field_coeffs.txt", a)
    io.write_spectrum(out / "spectrum.txt", C.values)
    grid = make_grid(2 * cfg.L)
    io.write_samples(out / "field_samples.txt", synthesize(a, grid))
    print(f"field L={cfg.L} seed={cfg.seed} written to {out}")
    return EXIT_OK


COMMANDS = {
    "build-operator": cmd_build_operator,
    "experiment": cmd_experiment,
    "diagnose": cmd_diagnose,
    "mask-coeffs": cmd_mask_coeffs,
    "synth": cmd_synth,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--preset", choices=sorted(PRESETS), default="paper",
                        help="base sizes (default: paper, L=100 K=900 J=1000)")
    common.add_argument("--L", type=int)
    common.add_argument("--K", type=int)
    common.add_argument("--J", type=int, help="default L+K")
    common.add_argument("--mask-a-deg", dest="mask_a_deg", type=float)
    common.add_argument("--mask-b-deg", dest="mask_b_deg", type=float)
    common.add_argument("--tau", help="comma-separated noise levels")
    common.add_argument("--seed", type=int)
    common.add_argument("--method", choices=["qr", "regularized"])
    common.add_argument("--nu", help="comma-separated nu grid (one value: fixed nu)")
    common.add_argument("--spectrum", help="'paper' or a file of '<ell> <C_ell>' lines")
    common.add_argument("--include-monopole-dipole", dest="include_monopole_dipole",
                        action="store_const", const=True)
    common.add_argument("--out")
    common.add_argument("--workers", type=int, help="threads for operator assembly (0: all cores)")
    common.add_argument("--grid-exactness", dest="grid_exactness", type=int)
    common.add_argument("--plot", action="store_const", const=True,
                        help="also render line plots to PNG")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="sphrecon", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except np.linalg.LinAlgError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, io.FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
