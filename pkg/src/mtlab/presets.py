"""Preset verification sweeps behind the command-line suite.

Each block is a pure function of its parameters that returns reports
in a declared order; the runner times the blocks and hands back the
flat report list plus per-block wall-clock seconds.  Blocks never
touch the filesystem, and nothing here depends on the clock beyond the
timings, so two runs with the same seed produce identical report
arrays.  Rendering and serialization live in the command-line layer.

Two presets share one block sequence.  ``desk`` is the full sweep at
the resolutions the summary tables quote (minutes); ``quick`` is the
same shape at coarse resolution (seconds), meant for smoke runs and
the exit-code tests.  The seed only enters through the mixing block,
which draws its rotation from the splitmix64 generator.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .constants import Z01, bessel_zero, lambda_gn, mt_constant
from .cutoff import (
    CutoffSpec,
    check_lemma21_band,
    check_lemma21_low,
    cutoff_project,
    rumin_layer_cake,
)
from .density import (
    MTParams,
    RectangleDensitySweep,
    check_log_bound,
    check_point_bound,
    check_remainder_bound,
    sandwich_table,
)
from .family import family_from_eigenbasis, hoffmann_ostenhof_report, mix_family, verify_constraint
from .fractional import padding_refinement_report, run_d1_suite
from .grids import Domain, grid_for_rectangle
from .report import FAIL, PASS, Report, make_report
from .rng import orthogonal_matrix
from .schrodinger import (
    assemble_schrodinger,
    check_simple_resolvent,
    eta_gap,
    fit_resolvent_expansion,
    laplacian_operator,
    potential_fixture,
    scalar_resolvent_oracle,
)
from .spectral import eigenbasis_rectangle, rectangle_spectrum, weyl_diagnostics

PRESETS = ("desk", "quick")

_RESOLVENT_EPS = (0.5, 0.25, 0.1)


@dataclass(frozen=True)
class BlockTiming:
    name: str
    seconds: float
    n_reports: int


@dataclass
class SuiteResult:
    preset: str
    seed: int
    reports: list[Report] = field(default_factory=list)
    blocks: list[BlockTiming] = field(default_factory=list)
    artifacts: dict = field(default_factory=dict)

    def block_seconds(self, name: str) -> float:
        for b in self.blocks:
            if b.name == name:
                return b.seconds
        raise KeyError(name)


def _ground_form_energy(h: float) -> float:
    # discrete (1,1) mode energy on the unit square; the natural shift
    # scale for operator-dominated sweeps at this resolution
    return (8.0 / (h * h)) * math.sin(0.5 * math.pi * h) ** 2


# ---------------------------------------------------------------------------
# blocks


def _constants_block():
    closed = math.sqrt(2.0) * (4.0 * math.pi) ** -0.25
    reports = [
        make_report(
            "constants.lambda-gn",
            {"d": 2},
            abs(lambda_gn(2) - closed),
            1e-10,
            extra={"value": lambda_gn(2), "closed_form": closed},
        ),
        make_report(
            "constants.lambda-bound",
            {"d_max": 16},
            max(lambda_gn(d) for d in range(1, 17)),
            1.5,
            extra={"argmax_d": max(range(1, 17), key=lambda_gn)},
        ),
        make_report(
            "constants.bessel-zero",
            {"m": 0, "k": 1},
            abs(bessel_zero(0, 1) - 2.4048),
            1e-4,
            extra={"value": bessel_zero(0, 1), "reference": Z01},
        ),
    ]
    return reports, {}


def _weyl_block(n_modes: int):
    lams = np.array([lam for lam, _, _ in rectangle_spectrum(1.0, 1.0, n_modes)])
    table = weyl_diagnostics(lams, 1.0)
    dev_point = abs(table.ratio_point[n_modes - 1] - 1.0)
    dev_log3 = abs(table.ratio_log[999] - 1.0)
    dev_log2 = abs(table.ratio_log[99] - 1.0)
    reports = [
        make_report(
            "weyl.point-ratio",
            {"N": n_modes},
            dev_point,
            0.05,
            extra={"ratio": float(table.ratio_point[n_modes - 1])},
        ),
        make_report(
            "weyl.log-ratio",
            {"N": 1000},
            dev_log3,
            0.25,
            extra={"ratio": float(table.ratio_log[999])},
        ),
        # strictly closer to 1 at the larger N, not merely no worse
        Report(
            check="weyl.log-ratio-trend",
            params={"N_fine": 1000, "N_coarse": 100},
            lhs=dev_log3,
            rhs=dev_log2,
            margin=dev_log2 - dev_log3,
            disc_error=0.0,
            status=PASS if dev_log3 < dev_log2 else FAIL,
        ),
    ]
    return reports, {"weyl_table": table}


def _point_block(h: float, Ns, eps_list):
    fine = RectangleDensitySweep(1.0, 1.0, h, max(Ns))
    coarse = RectangleDensitySweep(1.0, 1.0, 2.0 * h, max(Ns))
    reports = []
    density_2d = None
    for N in sorted(Ns):
        rho = fine.density_at(N)
        rho_c = coarse.density_at(N)
        for eps in eps_list:
            params = MTParams(alpha=4.0 * math.pi, epsilon=eps, N=N)
            reports.append(check_point_bound(rho, params, rho_c))
        nx = fine.grid.shape[0]
        density_2d = rho.values.reshape(nx, nx)
    return reports, {"density_field": (density_2d, h)}


def _sandwich_block(h: float, alphas, Ns):
    reports = []
    rows_all = []
    fine = RectangleDensitySweep(1.0, 1.0, h, max(Ns))
    coarse = RectangleDensitySweep(1.0, 1.0, 2.0 * h, max(Ns))
    pairs = [(fine.density_at(N), coarse.density_at(N)) for N in sorted(Ns)]
    for alpha in alphas:
        for (rho, rho_c), N in zip(pairs, sorted(Ns)):
            reports.append(check_log_bound(rho, alpha, N, rho_c))
    for alpha in alphas:
        rows = sandwich_table(Domain.rectangle(1.0, 1.0), alpha, list(Ns), h=h)
        rows_all.extend(rows)
        reports.extend(rows)
    return reports, {"sandwich_rows": rows_all}


def _cutoff_block(h: float, N: int, delta: float, ell: float, paddings):
    basis = eigenbasis_rectangle(1.0, 1.0, N, h)
    fam = family_from_eigenbasis(basis, N)
    reports = []
    by_pad = {}
    band_field = None
    for pad in paddings:
        spec = CutoffSpec.for_grid(fam.grid, delta, ell, padding=pad)
        dens = cutoff_project(fam, spec)
        band = check_lemma21_band(fam, spec, dens=dens)
        low = check_lemma21_low(fam, spec, dens=dens)
        reports.extend([band, low])
        by_pad[pad] = (band.margin, low.margin)
        if band_field is None:
            band_field = (dens.band_interior().copy(), h)
        del dens  # padded boxes dominate memory; drop before the next pad
    p0, p1 = sorted(paddings)[:2]
    reports.append(
        make_report(
            "cutoff.band-refinement",
            {"h": h, "N": N, "padding_from": p0, "padding_to": p1},
            by_pad[p0][0],
            by_pad[p1][0],
            extra={"margins": {str(p): by_pad[p][0] for p in paddings}},
        )
    )
    reports.append(
        make_report(
            "cutoff.low-refinement",
            {"h": h, "N": N, "padding_from": p0, "padding_to": p1},
            by_pad[p0][1],
            by_pad[p1][1],
            extra={"margins": {str(p): by_pad[p][1] for p in paddings}},
        )
    )
    return reports, {"band_field": band_field}


def _cake_block(h: float, N: int):
    basis = eigenbasis_rectangle(1.0, 1.0, N, h)
    fam = family_from_eigenbasis(basis, N)
    return [rumin_layer_cake(fam)], {}


def _root_block(h_pair, Ns):
    h_coarse, h_fine = sorted(h_pair, reverse=True)
    reports = []
    excess = {}
    for h in (h_coarse, h_fine):
        basis = eigenbasis_rectangle(1.0, 1.0, max(Ns), h)
        for N in sorted(Ns):
            fam = family_from_eigenbasis(basis, N)
            rep = hoffmann_ostenhof_report(fam)
            reports.append(rep)
            excess[(h, N)] = rep.lhs - N
    for N in sorted(Ns):
        # one-sided differences put any excess over N at O(h): halving h
        # should roughly halve it, asserted with headroom at 0.6.  The
        # excess clips at zero: when the discrete form already sits
        # below N the clause is vacuously met (raw values kept for the
        # record).
        ex_c = max(0.0, excess[(h_coarse, N)])
        ex_f = max(0.0, excess[(h_fine, N)])
        reports.append(
            make_report(
                "family.root-gradient-refinement",
                {"N": N, "h_coarse": h_coarse, "h_fine": h_fine},
                ex_f,
                0.6 * ex_c,
                extra={
                    "excess_coarse": ex_c,
                    "excess_fine": ex_f,
                    "raw_coarse": excess[(h_coarse, N)],
                    "raw_fine": excess[(h_fine, N)],
                },
            )
        )
    return reports, {}


def _pencil_block(n_side: int):
    h = 1.0 / n_side
    grid = grid_for_rectangle(1.0, 1.0, h)
    L0 = laplacian_operator(grid)
    E0 = L0.ground_energy()
    c = 0.5 * E0
    LV = assemble_schrodinger(L0, np.full(grid.shape, c))
    eta = eta_gap(LV, L0)
    reports = [
        make_report(
            "pencil.constant-gap",
            {"n_side": n_side, "c": c},
            abs(eta - 0.5),
            1e-9,
            extra={"eta": eta, "ground_energy": E0},
        ),
        check_simple_resolvent(LV, L0, eta),
    ]
    fit = fit_resolvent_expansion(LV, L0, _RESOLVENT_EPS, q=2.0)
    mu = L0.spectrum()[0]
    oracle = np.array([scalar_resolvent_oracle(mu, c, e, 2.0) for e in fit.eps])
    rel = float(np.max(np.abs(fit.C - oracle) / oracle))
    reports.append(
        make_report(
            "pencil.commuting-oracle",
            {"n_side": n_side, "q": 2.0, "eps": list(fit.eps)},
            rel,
            1e-6,
            extra={"C": list(fit.C), "oracle": list(oracle), "eta": fit.eta},
        )
    )
    c_checker = 0.4 * E0
    LVc = assemble_schrodinger(L0, potential_fixture(f"checker:{c_checker}", grid))
    ground_c = LVc.ground_energy()
    reports.append(
        make_report(
            "pencil.sign-changing-psd",
            {"n_side": n_side, "c": c_checker},
            LVc.positivity_floor(),
            ground_c,
            extra={"ground_energy": ground_c},
        )
    )
    return reports, {"c_of_eps": (np.array(fit.eps), fit.C.copy())}


def _trend_block(h: float, Ns):
    fine = RectangleDensitySweep(1.0, 1.0, h, max(Ns), shift=0.5 * _ground_form_energy(h))
    coarse = RectangleDensitySweep(
        1.0, 1.0, 2.0 * h, max(Ns), shift=0.5 * _ground_form_energy(2.0 * h)
    )
    alpha = 4.0 * math.pi
    reports = []
    minimal = {}
    for N in sorted(Ns):
        rep = check_remainder_bound(
            fine.density_at(N), alpha, N, t=0.5, C=1.0, rho_coarse=coarse.density_at(N)
        )
        rep.params["h"] = h
        reports.append(rep)
        minimal[N] = rep.extra["minimal_C"]
    Ns_sorted = sorted(Ns)
    for N_prev, N_next in zip(Ns_sorted, Ns_sorted[1:]):
        reports.append(
            make_report(
                "density.remainder-trend",
                {"alpha": alpha, "t": 0.5, "N_from": N_prev, "N_to": N_next},
                minimal[N_next],
                minimal[N_prev],
                extra={"minimal_C": {str(N): minimal[N] for N in Ns_sorted}},
            )
        )
    return reports, {"trend": (Ns_sorted, [minimal[N] for N in Ns_sorted])}


def _interval_block(L: float, m: int, N: int, alpha: float):
    reports = run_d1_suite(L, m, N, alpha)
    reports.append(padding_refinement_report(L, m, padding=4))
    return reports, {}


def _mix_block(h: float, N: int, seed: int):
    basis = eigenbasis_rectangle(1.0, 1.0, N, h)
    fam = family_from_eigenbasis(basis, N)
    mixed = mix_family(fam, orthogonal_matrix(N, seed))
    rho, rho_mixed = fam.density(), mixed.density()
    rel = float(np.max(np.abs(rho - rho_mixed)) / np.max(rho))
    reports = [
        make_report(
            "family.mix-invariance",
            {"N": N, "h": h, "seed": seed},
            rel,
            1e-10,
        ),
        verify_constraint(mixed, laplacian_operator(fam.grid)),
    ]
    return reports, {}


# ---------------------------------------------------------------------------
# runner


def _block_plan(preset: str, seed: int):
    desk = preset == "desk"
    pi2 = math.pi * math.pi
    return [
        ("constants", lambda: _constants_block()),
        ("weyl", lambda: _weyl_block(10_000)),
        (
            "point-bound",
            lambda: _point_block(1 / 512 if desk else 1 / 128, (1, 25, 100), (0.25, 0.125)),
        ),
        (
            "log-sandwich",
            lambda: _sandwich_block(
                1 / 256 if desk else 1 / 128,
                (2.0 * math.pi, 4.0 * math.pi),
                (100, 1000, 10_000) if desk else (100, 1000),
            ),
        ),
        (
            "cutoff-window",
            # delta is half the ground eigenvalue of the unit square
            lambda: _cutoff_block(1 / 512 if desk else 1 / 64, 50, pi2, 1e3, (4, 8)),
        ),
        ("frequency-cake", lambda: _cake_block(1 / 128 if desk else 1 / 64, 25)),
        (
            "gradient-root",
            lambda: _root_block((1 / 256, 1 / 512) if desk else (1 / 64, 1 / 128), (10, 50)),
        ),
        ("operator-pencil", lambda: _pencil_block(65 if desk else 33)),
        ("remainder-trend", lambda: _trend_block(1 / 512 if desk else 1 / 128, (100, 1000))),
        (
            "interval-halflap",
            lambda: _interval_block(
                1.0, 1024 if desk else 512, 100 if desk else 64, math.pi
            ),
        ),
        ("mixing", lambda: _mix_block(1 / 32, 16, seed)),
    ]


def run_suite(preset: str = "desk", seed: int = 0) -> SuiteResult:
    """Run every block of the preset in declared order, single-threaded."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    result = SuiteResult(preset=preset, seed=int(seed))
    for name, fn in _block_plan(preset, int(seed)):
        t0 = time.perf_counter()
        reports, artifacts = fn()
        dt = time.perf_counter() - t0
        result.reports.extend(reports)
        result.blocks.append(BlockTiming(name, dt, len(reports)))
        result.artifacts.update(artifacts)
    return result
