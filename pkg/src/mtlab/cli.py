"""Command-line front end: subcommands, configuration, artifacts, exit codes.

Exit codes are mechanical.  0 when no report FAILs, 1 when at least
one does, 2 for usage problems (unknown flags, malformed values,
impossible geometry).  REJECTED-INPUT and SATURATED are recorded
outcomes, not failures, so they never make the exit code nonzero on
their own.

A run is configured in three layers: built-in defaults, then an
optional flat key=value config file (--config), then explicit flags.
The merged configuration round-trips losslessly through
``ExperimentConfig.to_text`` / ``from_text``: floats serialize via
repr, which parses back bit-exactly.

Artifacts land in --out: a JSON payload (run metadata plus the report
array), a report CSV, plot-data CSVs, and PNG figures next to them.
The JSON is byte-identical between runs with the same configuration
except for the meta timestamp; wall-clock block timings go to a
separate timings.csv because they never repeat.  Table subcommands
(eigs, weyl) print their CSV to stdout when no output directory is
given.

MTLAB_THREADS caps the BLAS pool by exporting the standard
thread-count variables before heavy work starts; the orchestrator
itself is single-threaded and runs blocks in declared order.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cutoff import CutoffSpec, check_lemma21_band, check_lemma21_low, cutoff_project, \
    rumin_layer_cake, save_heatmap_csv
from .density import MTParams, check_log_bound, check_point_bound, density_field, \
    sandwich_csv_rows, sandwich_table
from .family import family_from_eigenbasis, gradient_gram, hoffmann_ostenhof_report, save_family
from .fractional import run_d1_suite
from .grids import Domain, grid_for_disk, grid_for_rectangle, load_mask, load_values
from .plots import c_of_eps_figure, field_figure, sandwich_figure, spectrum_figure, \
    trend_figure, weyl_figure
from .presets import PRESETS, run_suite
from .report import FAIL, emit_csv, make_report, rejected_report, reports_csv, write_reports
from .schrodinger import assemble_schrodinger, check_simple_resolvent, check_sobolev_form_bound, \
    eta_gap, fit_resolvent_expansion, laplacian_operator, potential_fixture
from .spectral import disk_spectrum, eigenbasis_disk, eigenbasis_mask, eigenbasis_rectangle, \
    rectangle_spectrum, weyl_diagnostics

_RESOLVENT_EPS = (0.5, 0.25, 0.1)
_SOBOLEV_EPS = (0.5, 0.35, 0.2, 0.1)


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    """Every tunable of the command-line layer, with a default for each.

    ``seed`` drives the randomized fixtures (the mixing rotation of the
    suite) through the splitmix64 generator, so equal seeds reproduce
    runs bit-exactly.  ``out`` empty means no artifacts are written.
    """

    domain: str = "square"
    h: float = 1.0 / 32.0
    pad: int = 4
    N: int = 16
    alpha: float = 4.0 * math.pi
    eps: float = 0.25
    V: str = "zero"
    seed: int = 0
    out: str = ""
    preset: str = "quick"

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            text = repr(value) if isinstance(value, float) else str(value)
            lines.append(f"{f.name}={text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        return cls(**_parse_kv(text))


_FIELD_TYPES = {
    "domain": str,
    "h": float,
    "pad": int,
    "N": int,
    "alpha": float,
    "eps": float,
    "V": str,
    "seed": int,
    "out": str,
    "preset": str,
}


def _parse_kv(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or key not in _FIELD_TYPES:
            raise ValueError(f"config line {lineno}: expected key=value with a known key, got {raw!r}")
        try:
            values[key] = _FIELD_TYPES[key](value)
        except ValueError as exc:
            raise ValueError(f"config line {lineno}: {exc}") from exc
    return values


def write_config(path: str | Path, cfg: ExperimentConfig) -> None:
    Path(path).write_text(cfg.to_text())


def read_config(path: str | Path) -> ExperimentConfig:
    return ExperimentConfig.from_text(Path(path).read_text())


def _merge_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config is not None:
        values.update(_parse_kv(Path(args.config).read_text()))
    for name in _FIELD_TYPES:
        flag = getattr(args, name)
        if flag is not None:
            values[name] = flag
    return ExperimentConfig(**values)


# ---------------------------------------------------------------------------
# domains


def _parse_domain(spec: str):
    name, _, arg = spec.partition(":")
    if name == "square" and not arg:
        return "rectangle", {"a": 1.0, "b": 1.0}
    if name == "rect":
        parts = arg.split(",")
        if len(parts) != 2:
            raise ValueError(f"rect takes two sides, got {spec!r}")
        a, b = (float(p) for p in parts)
        return "rectangle", {"a": a, "b": b}
    if name == "disk":
        return "disk", {"R": float(arg) if arg else 1.0}
    if name == "mask":
        if not arg:
            raise ValueError("mask domain needs a file path")
        return "mask", {"path": arg}
    raise ValueError(f"unknown domain {spec!r}; use square | rect:a,b | disk:R | mask:FILE")


def _eigenvalues(cfg: ExperimentConfig):
    """(eigenvalues, measure) for the configured domain and mode count."""
    kind, p = _parse_domain(cfg.domain)
    if kind == "rectangle":
        lams = np.array([lam for lam, _, _ in rectangle_spectrum(p["a"], p["b"], cfg.N)])
        return lams, p["a"] * p["b"]
    if kind == "disk":
        lams = np.array([lam for lam, _, _, _ in disk_spectrum(p["R"], cfg.N)])
        return lams, math.pi * p["R"] ** 2
    domain, grid = load_mask(p["path"])
    basis = eigenbasis_mask(domain, grid, cfg.N)
    return basis.eigenvalues(), domain.measure


def _basis(cfg: ExperimentConfig):
    kind, p = _parse_domain(cfg.domain)
    if kind == "rectangle":
        return eigenbasis_rectangle(p["a"], p["b"], cfg.N, cfg.h)
    if kind == "disk":
        return eigenbasis_disk(p["R"], cfg.N, cfg.h)
    # mask files pin their own spacing; the --h flag does not apply
    domain, grid = load_mask(p["path"])
    return eigenbasis_mask(domain, grid, cfg.N)


def _out_dir(cfg: ExperimentConfig) -> Path | None:
    if not cfg.out:
        return None
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands


def _cmd_eigs(cfg: ExperimentConfig, cap: int):
    lams, measure = _eigenvalues(cfg)
    rows = [(n + 1, float(lam)) for n, lam in enumerate(lams)]
    out = _out_dir(cfg)
    if out is None:
        print("n,lambda")
        for n, lam in rows:
            print(f"{n},{'%.17g' % lam}")
    else:
        emit_csv(out / "eigs.csv", ["n", "lambda"], rows)
        spectrum_figure(lams, measure, out / "spectrum.png")
    return []


def _cmd_weyl(cfg: ExperimentConfig, cap: int):
    lams, measure = _eigenvalues(cfg)
    table = weyl_diagnostics(lams, measure)
    rows = list(zip(table.N.tolist(), table.ratio_point.tolist(), table.ratio_log.tolist()))
    out = _out_dir(cfg)
    if out is None:
        print("N,ratio1,ratio2")
        for N, r1, r2 in rows:
            print(f"{N},{'%.17g' % r1},{'%.17g' % r2}")
    else:
        emit_csv(out / "weyl.csv", ["N", "ratio1", "ratio2"], rows)
        weyl_figure(table, out / "weyl.png")
    return []


def _cmd_family(cfg: ExperimentConfig, cap: int):
    basis = _basis(cfg)
    fam = family_from_eigenbasis(basis, cfg.N)
    G = gradient_gram(fam)
    dev = float(np.max(np.abs(G - np.eye(cfg.N))))
    reports = [
        make_report("family.gram-identity", {"domain": cfg.domain, "N": cfg.N, "h": fam.grid.h},
                    dev, 1e-8),
        hoffmann_ostenhof_report(fam),
    ]
    out = _out_dir(cfg)
    if out is not None:
        save_family(out / "family.bin", fam)
        rho = fam.density()
        save_heatmap_csv(out / "density.csv", rho, fam.grid.h)
        field_figure(rho, fam.grid.h, out / "density.png")
    return reports


def _cmd_mt_verify(cfg: ExperimentConfig, cap: int):
    kind, p = _parse_domain(cfg.domain)
    params = MTParams(alpha=cfg.alpha, epsilon=cfg.eps, N=cfg.N)
    if kind == "rectangle":
        domain = Domain.rectangle(p["a"], p["b"])
        from .density import RectangleDensitySweep

        rho = RectangleDensitySweep(p["a"], p["b"], cfg.h, cfg.N).density_at(cfg.N)
        rho_c = RectangleDensitySweep(p["a"], p["b"], 2.0 * cfg.h, cfg.N).density_at(cfg.N)
        reports = [
            check_point_bound(rho, params, rho_c),
            check_log_bound(rho, cfg.alpha, cfg.N, rho_c),
        ]
        rows = sandwich_table(domain, cfg.alpha, [cfg.N], h=cfg.h)
    else:
        basis = _basis(cfg)
        fam = family_from_eigenbasis(basis, cfg.N)
        rho = density_field(fam)
        reports = [
            check_point_bound(rho, params),
            check_log_bound(rho, cfg.alpha, cfg.N),
        ]
        rows = sandwich_table(basis, cfg.alpha, [cfg.N])
    reports.extend(rows)
    out = _out_dir(cfg)
    if out is not None:
        emit_csv(out / "sandwich.csv",
                 ["N", "lower", "computed", "upper", "ln_computed", "status"],
                 sandwich_csv_rows(rows))
        sandwich_figure(rows, out / "sandwich.png")
    return reports


def _cmd_cutoff(cfg: ExperimentConfig, cap: int):
    basis = _basis(cfg)
    fam = family_from_eigenbasis(basis, cfg.N)
    # window defaults: half the ground eigenvalue up to a fixed ceiling
    delta = 0.5 * float(fam.lambdas[0])
    spec = CutoffSpec.for_grid(fam.grid, delta, 1e3, padding=cfg.pad)
    dens = cutoff_project(fam, spec)
    reports = [
        check_lemma21_band(fam, spec, dens=dens),
        check_lemma21_low(fam, spec, dens=dens),
    ]
    out = _out_dir(cfg)
    if out is not None:
        band = dens.band_interior()
        save_heatmap_csv(out / "band.csv", band, fam.grid.h)
        field_figure(band, fam.grid.h, out / "band.png", label="band density")
    return reports


def _cmd_rumin(cfg: ExperimentConfig, cap: int):
    basis = _basis(cfg)
    fam = family_from_eigenbasis(basis, cfg.N)
    return [rumin_layer_cake(fam, padding=cfg.pad)]


def _cmd_schrodinger(cfg: ExperimentConfig, cap: int):
    kind, p = _parse_domain(cfg.domain)
    if kind == "rectangle":
        grid = grid_for_rectangle(p["a"], p["b"], cfg.h)
    elif kind == "disk":
        grid = grid_for_disk(p["R"], cfg.h)
    else:
        _, grid = load_mask(p["path"])
    L0 = laplacian_operator(grid)
    name, _, arg = cfg.V.partition(":")
    if name == "file":
        V, vh = load_values(arg)
        if V.shape != grid.shape:
            raise ValueError(f"potential grid {V.shape} does not match domain grid {grid.shape}")
    else:
        V = potential_fixture(cfg.V, grid)
    LV = assemble_schrodinger(L0, V)
    params = {"domain": cfg.domain, "h": cfg.h, "V": cfg.V}
    if not LV.is_positive():
        return [rejected_report(
            "pencil.positive-gap", params,
            f"potential dominates: ground energy {LV.ground_energy():.6g} at the positivity floor",
        )]
    eta = eta_gap(LV, L0)
    fit = fit_resolvent_expansion(LV, L0, _RESOLVENT_EPS, q=2.0)
    reports = [
        make_report("pencil.positive-gap", params, 0.0, eta, extra={"eta": eta}),
        check_simple_resolvent(LV, L0, eta),
        make_report(
            "pencil.expansion-finite", {**params, "q": 2.0, "eps": list(_RESOLVENT_EPS)},
            float(fit.C.max()), 1e9, extra={"C": [float(c) for c in fit.C], "eta": fit.eta},
        ),
        check_sobolev_form_bound(L0, V, _SOBOLEV_EPS),
    ]
    out = _out_dir(cfg)
    if out is not None:
        emit_csv(out / "c_of_eps.csv", ["eps", "C"],
                 list(zip([float(e) for e in fit.eps], [float(c) for c in fit.C])))
        c_of_eps_figure(fit.eps, fit.C, out / "c_of_eps.png")
    return reports


def _cmd_fractional(cfg: ExperimentConfig, cap: int):
    # the transform length wants a power of two; quantize L/h to one,
    # with a floor that keeps the default family inside the budget
    target = max(2.0, 1.0 / cfg.h)
    m = max(256, 1 << round(math.log2(target)))
    return run_d1_suite(1.0, m, cfg.N, cfg.alpha, padding=cfg.pad)


def _cmd_suite(cfg: ExperimentConfig, cap: int):
    result = run_suite(cfg.preset, cfg.seed)
    for b in result.blocks:
        print(f"  block {b.name:<18} {b.seconds:8.2f}s  {b.n_reports} reports")
    out = _out_dir(cfg)
    if out is not None:
        meta = {
            "preset": result.preset,
            "seed": result.seed,
            "version": __version__,
            "thread_cap": cap,
            "timestamp": datetime.now(timezone.utc).isoformat(),
        }
        write_reports(out / "reports.json", result.reports, meta)
        reports_csv(out / "reports.csv", result.reports)
        emit_csv(out / "timings.csv", ["block", "seconds", "reports"],
                 [(b.name, b.seconds, b.n_reports) for b in result.blocks])
        art = result.artifacts
        table = art["weyl_table"]
        emit_csv(out / "weyl.csv", ["N", "ratio1", "ratio2"],
                 zip(table.N.tolist(), table.ratio_point.tolist(), table.ratio_log.tolist()))
        weyl_figure(table, out / "weyl.png")
        emit_csv(out / "sandwich.csv",
                 ["N", "lower", "computed", "upper", "ln_computed", "status"],
                 sandwich_csv_rows(art["sandwich_rows"]))
        sandwich_figure(art["sandwich_rows"], out / "sandwich.png")
        values, h = art["density_field"]
        field_figure(values, h, out / "density.png")
        band, bh = art["band_field"]
        field_figure(band, bh, out / "band.png", label="band density")
        eps, C = art["c_of_eps"]
        emit_csv(out / "c_of_eps.csv", ["eps", "C"], zip(eps.tolist(), C.tolist()))
        c_of_eps_figure(eps, C, out / "c_of_eps.png")
        Ns, Cs = art["trend"]
        emit_csv(out / "trend.csv", ["N", "minimal_C"], zip(Ns, Cs))
        trend_figure(Ns, Cs, out / "trend.png")
    return result.reports


_COMMANDS = {
    "eigs": (_cmd_eigs, "eigenvalue table for a domain"),
    "weyl": (_cmd_weyl, "spectral-sum ratios against their normalizers"),
    "family": (_cmd_family, "build a gradient-orthonormal family and check it"),
    "mt-verify": (_cmd_mt_verify, "exponential-moment bounds for one (N, alpha, eps)"),
    "cutoff": (_cmd_cutoff, "frequency-window density bounds"),
    "rumin": (_cmd_rumin, "layer-cake frequency identity and lower bound"),
    "schrodinger": (_cmd_schrodinger, "operator pencil and resolvent expansion"),
    "fractional": (_cmd_fractional, "interval half-Laplacian verification"),
    "suite": (_cmd_suite, "preset verification sweep with artifacts"),
}


# ---------------------------------------------------------------------------
# entry points


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mtlab",
        description="desk-scale verification of exponential-moment bounds for constrained families",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", default=None, metavar="FILE",
                        help="flat key=value configuration; flags override it")
        sp.add_argument("--domain", default=None,
                        help="square | rect:a,b | disk:R | mask:FILE")
        sp.add_argument("--h", type=float, default=None, help="grid spacing")
        sp.add_argument("--pad", type=int, default=None, help="zero-padding factor")
        sp.add_argument("--N", type=int, default=None, help="family size / mode count")
        sp.add_argument("--alpha", type=float, default=None, help="moment exponent")
        sp.add_argument("--eps", type=float, default=None, help="point-bound epsilon")
        sp.add_argument("--V", default=None,
                        help="zero | const:c | bump:c | checker:c | file:PATH")
        sp.add_argument("--seed", type=int, default=None, help="fixture seed")
        sp.add_argument("--out", default=None, metavar="DIR", help="artifact directory")
        sp.add_argument("--preset", choices=PRESETS, default=None)
    return parser


def _report_line(r) -> str:
    margin = "-" if r.margin is None else f"{r.margin:.6g}"
    return f"[{r.status}] {r.check}  margin={margin}"


def _thread_cap() -> int:
    """Export MTLAB_THREADS to the BLAS thread variables; 0 means unset."""
    raw = os.environ.get("MTLAB_THREADS")
    if raw is None:
        return 0
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"MTLAB_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"MTLAB_THREADS must be at least 1, got {n}")
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(n))
    return n


def cli_main(argv=None) -> int:
    try:
        cap = _thread_cap()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge_config(args)
        reports = _COMMANDS[args.command][0](cfg, cap)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for r in reports:
        print(_report_line(r))
    return 1 if any(r.status == FAIL for r in reports) else 0


def main() -> None:
    sys.exit(cli_main(sys.argv[1:]))


if __name__ == "__main__":
    main()
