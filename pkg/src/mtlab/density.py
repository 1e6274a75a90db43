"""One-body densities and exponential-moment bounds.

Discretization contract.  A density lives on interior lattice nodes with
quadrature weight h^d per node, plus a boundary "collar" of mass
|Omega| - h^d * (node count) on which Dirichlet fields vanish.  Summing
node weights and the collar reproduces |Omega| exactly, so the trivial
cases (rho identically 0, constant rho) and the discrete Jensen
inequality close to machine precision instead of drifting by O(h).

Exponential averages are guarded: whenever weight * max(rho) exceeds
``EXP_GUARD`` the linear value is unrepresentable and callers get a
saturated result whose log-space value (computed via logsumexp) is still
exact.  Reports therefore always carry ln(LHS) and ln(RHS) alongside the
linear fields.

Discretization error is estimated by a Richardson step: every check
accepts an optional companion density computed at twice the spacing and
attaches |ln LHS(h) - ln LHS(2h)| / 3 as a relative error, which the
margin formula credits to the bound side.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .constants import semiclassical_weight
from .family import Family
from .grids import Domain, Grid1D, Grid2D, collar_mass, grid_for_rectangle
from .report import Report, PASS, FAIL, make_report, rejected_report, saturated_report
from .spectral import SpectralBasis, rectangle_spectrum

EXP_GUARD = 700.0
# lnln/ln remainder coefficient of the planar log-weight bound; the
# general-d semiclassical bound instead uses 4 (2 pi)^d / omega_d.
PLANAR_REMAINDER = 14.0


class SaturationError(RuntimeError):
    """Raised when a requested linear exponential moment would overflow."""


# ---------------------------------------------------------------------------
# density fields


@dataclass(frozen=True)
class DensityField:
    """Nonnegative density samples at quadrature nodes of equal weight.

    ``values`` is flat: one entry per interior node, regardless of the
    original lattice shape.  ``collar`` is the quadrature mass assigned
    to the boundary strip where the density is zero; it may be 0 (mask
    domains measure themselves exactly by their cells).
    """

    values: np.ndarray
    family_size: int
    measure: float
    cell_weight: float
    collar: float
    source: str = ""

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        object.__setattr__(self, "values", v)
        if v.size == 0:
            raise ValueError("density field has no nodes")
        if v.min() < 0.0:
            raise ValueError("density must be nonnegative")
        if self.family_size < 1:
            raise ValueError("family size must be at least 1")
        if self.collar < 0.0:
            raise ValueError("collar mass must be nonnegative")
        budget = self.cell_weight * v.size + self.collar
        if not math.isclose(budget, self.measure, rel_tol=1e-12):
            raise ValueError(
                f"quadrature budget {budget!r} does not recover measure {self.measure!r}"
            )

    def mass(self) -> float:
        return float(self.cell_weight * self.values.sum())

    def mean(self) -> float:
        return self.mass() / self.measure

    def max(self) -> float:
        return float(self.values.max())


def density_field(f: Family) -> DensityField:
    """One-body density of a family, with the member-norm cross-check.

    The integral of the density must reproduce sum_n ||u_n||^2; both are
    the same lattice sum in different association orders, so agreement to
    1e-8 relative is demanded and any violation is an internal error.
    """
    rho = f.density()
    grid = f.grid
    if isinstance(grid, Grid2D):
        flat = rho[grid.mask] if grid.mask is not None else rho.ravel()
        collar = collar_mass(f.domain, grid)
    else:
        flat = rho
        collar = f.domain.measure - grid.h * grid.m
    out = DensityField(
        values=flat,
        family_size=f.size,
        measure=f.domain.measure,
        cell_weight=grid.weight,
        collar=collar,
        source=f.source,
    )
    member_mass = grid.weight * float((f.members.conj() * f.members).real.sum())
    if not math.isclose(out.mass(), member_mass, rel_tol=1e-8):
        raise ValueError("density mass disagrees with summed member norms")
    return out


def constant_density(level: float, nodes: int, cell_weight: float, family_size: int) -> DensityField:
    """Synthetic exactly-constant field (no collar) for equality cases."""
    return DensityField(
        values=np.full(nodes, float(level)),
        family_size=family_size,
        measure=cell_weight * nodes,
        cell_weight=cell_weight,
        collar=0.0,
        source="constant",
    )


# ---------------------------------------------------------------------------
# rectangle fast path: sampled sines are exact eigenvectors of the discrete
# form with exactly unit lattice norm, so the density of the first N scaled
# modes is a separable double sum and never needs materialized members.


def _discrete_sine_energy(j: int, k: int, h: float, a: float, b: float) -> float:
    sx = math.sin(0.5 * math.pi * j * h / a)
    sy = math.sin(0.5 * math.pi * k * h / b)
    return 4.0 / (h * h) * (sx * sx + sy * sy)


class RectangleDensitySweep:
    """Accumulates rho_N = sum_{n<=N} phi_n^2 / (E_n - shift) incrementally.

    Modes are the first ``n_max`` rectangle eigenfunctions in spectral
    order; energies are the discrete form energies, so the result is
    bit-for-bit the density a materialized, discretely normalized family
    would give.  ``shift`` subtracts a constant from every energy (the
    operator-dominated case with a constant potential); it must stay
    below the smallest energy.
    """

    def __init__(self, a: float, b: float, h: float, n_max: int, shift: float = 0.0):
        self.a, self.b, self.h, self.shift = a, b, h, shift
        self.grid = grid_for_rectangle(a, b, h)
        self.domain = Domain.rectangle(a, b)
        self.modes = rectangle_spectrum(a, b, n_max)
        energies = np.array(
            [_discrete_sine_energy(j, k, h, a, b) for _, j, k in self.modes]
        )
        if energies.min() - shift <= 0.0:
            raise ValueError("shift must stay below the smallest mode energy")
        self._inv = 1.0 / (energies - shift)
        jmax = max(j for _, j, _ in self.modes)
        kmax = max(k for _, _, k in self.modes)
        # beyond the node count per axis, sampled sines alias; refuse
        if jmax > self.grid.shape[0] or kmax > self.grid.shape[1]:
            raise ValueError(
                f"grid {self.grid.shape} cannot resolve mode indices "
                f"({jmax}, {kmax}); refine h"
            )
        x, y = self.grid.axes()
        self._s2x = np.sin(np.outer(np.arange(1, jmax + 1), x) * (math.pi / a)) ** 2
        self._s2y = np.sin(np.outer(np.arange(1, kmax + 1), y) * (math.pi / b)) ** 2
        self._W = np.zeros((jmax, kmax))
        self._done = 0

    def density_at(self, N: int) -> DensityField:
        if not self._done < N + 1:
            raise ValueError("sweep only moves forward; request N in increasing order")
        if N > len(self.modes):
            raise ValueError("sweep was sized for fewer modes")
        for n in range(self._done, N):
            _, j, k = self.modes[n]
            self._W[j - 1, k - 1] += self._inv[n]
        self._done = N
        values = (4.0 / (self.a * self.b)) * (self._s2x.T @ self._W @ self._s2y)
        return DensityField(
            values=values.ravel(),
            family_size=N,
            measure=self.domain.measure,
            cell_weight=self.grid.weight,
            collar=collar_mass(self.domain, self.grid),
            source=f"rectangle sweep shift={self.shift:g}",
        )


def rho_rectangle_spectrum(
    a: float, b: float, N: int, h: float, shift: float = 0.0
) -> DensityField:
    """Density of the first N rectangle modes without materializing them."""
    return RectangleDensitySweep(a, b, h, N, shift=shift).density_at(N)


# ---------------------------------------------------------------------------
# exponential moments


@dataclass(frozen=True)
class ExpAverage:
    value: float | None  # None once the exponent guard trips
    ln_value: float
    saturated: bool
    exponent_max: float


def exp_average(rho: DensityField, weight: float) -> ExpAverage:
    """(1/|Omega|) integral of exp(weight * rho), collar included.

    The log-space value comes from logsumexp and is finite for any
    weight; the linear value is withheld beyond the exponent guard.
    """
    if weight < 0.0:
        raise ValueError("exponent weight must be nonnegative")
    z = weight * rho.values
    zmax = float(z.max())
    if rho.collar > 0.0:
        args = np.append(z, 0.0)
        b = np.append(np.full(z.size, rho.cell_weight), rho.collar)
    else:
        args = z
        b = np.full(z.size, rho.cell_weight)
    ln_value = float(logsumexp(args, b=b) - math.log(rho.measure))
    saturated = zmax > EXP_GUARD
    if saturated:
        return ExpAverage(None, ln_value, True, zmax)
    value = float((rho.cell_weight * np.exp(z).sum() + rho.collar) / rho.measure)
    return ExpAverage(value, ln_value, False, zmax)


def mt_functional(rho: DensityField, weight: float) -> float:
    """Normalized exponential moment; raises once the guard trips."""
    r = exp_average(rho, weight)
    if r.saturated:
        raise SaturationError(
            f"exponent {r.exponent_max:.6g} exceeds guard {EXP_GUARD:g}; "
            f"ln of the moment is {r.ln_value:.6g}"
        )
    return r.value


def jensen_lower_bound(rho: DensityField, alpha: float, N: int) -> float:
    """exp(alpha * mean(rho) / ln N): the convexity floor of the moment."""
    if N < 2:
        raise ValueError("log weight needs N >= 2")
    return math.exp(alpha * rho.mean() / math.log(N))


def _richardson(fine: ExpAverage, rho_coarse: "DensityField | None", weight: float) -> float:
    if rho_coarse is None:
        return 0.0
    coarse = exp_average(rho_coarse, weight)
    # second order step; ln difference doubles as a relative error
    return abs(fine.ln_value - coarse.ln_value) / 3.0


def bound_threshold(alpha: float, d: int = 2) -> float:
    """Smallest admissible family size for the log-weighted bounds."""
    return max(math.exp(4.0), math.exp(alpha * semiclassical_weight(d) + 1.0))


# ---------------------------------------------------------------------------
# parameter bundle


@dataclass(frozen=True)
class MTParams:
    """Exponent/threshold bookkeeping shared by the bound checks.

    ``kappa`` is the band-splitting parameter 1 - (1-eps)^(1/4) used by
    the cutoff chain; ``beta`` is the Jensen exponent alpha / (4 pi (ln N - 1)).
    Both are derived, not stored.
    """

    alpha: float
    epsilon: float | None
    N: int

    def __post_init__(self):
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.epsilon is not None and not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")

    @property
    def kappa(self) -> float:
        if self.epsilon is None:
            raise ValueError("kappa needs epsilon")
        return 1.0 - (1.0 - self.epsilon) ** 0.25

    @property
    def beta(self) -> float:
        if self.N <= math.e:
            raise ValueError("beta needs ln N > 1")
        return self.alpha / (4.0 * math.pi * (math.log(self.N) - 1.0))


# ---------------------------------------------------------------------------
# checks


def check_point_bound(
    rho: DensityField, params: MTParams, rho_coarse: "DensityField | None" = None
) -> Report:
    """Planar point bound: moment of exp(4 pi (1-eps) rho) against e^8 N / eps^4.

    Requires eps in (0, 1/4]; anything else is input rejection, not
    failure.  N is taken from ``params`` and must match the family size
    recorded on the density.
    """
    check = "density.point-bound"
    echo = {"epsilon": params.epsilon, "N": params.N, "measure": rho.measure}
    if params.N != rho.family_size:
        raise ValueError("params.N must equal the density's family size")
    eps = params.epsilon
    if eps is None or not 0.0 < eps <= 0.25:
        return rejected_report(check, echo, f"requires 0 < epsilon <= 1/4, got {eps}")
    weight = 4.0 * math.pi * (1.0 - eps)
    fine = exp_average(rho, weight)
    ln_rhs = 8.0 + math.log(params.N) - 4.0 * math.log(eps)
    disc = _richardson(fine, rho_coarse, weight)
    if fine.saturated:
        return saturated_report(
            check, echo, f"exponent {fine.exponent_max:.6g} beyond guard",
            ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
        )
    return make_report(
        check, echo, fine.value, math.exp(ln_rhs),
        disc_error=disc, ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
    )


def check_log_bound(
    rho: DensityField, alpha: float, N: int, rho_coarse: "DensityField | None" = None
) -> Report:
    """Planar log-weighted bound with the 14 lnln N / ln N remainder."""
    check = "density.log-bound"
    echo = {"alpha": alpha, "N": N, "measure": rho.measure}
    if N != rho.family_size:
        raise ValueError("N must equal the density's family size")
    thr = bound_threshold(alpha, 2)
    if N < thr:
        return rejected_report(check, echo, f"requires N >= {thr:.6g}, got {N}")
    ln_n = math.log(N)
    weight = alpha / ln_n
    fine = exp_average(rho, weight)
    sw = semiclassical_weight(2)
    ln_rhs = alpha * sw * (1.0 + PLANAR_REMAINDER * math.log(ln_n) / ln_n)
    disc = _richardson(fine, rho_coarse, weight)
    if fine.saturated:
        return saturated_report(
            check, echo, f"exponent {fine.exponent_max:.6g} beyond guard",
            ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
        )
    return make_report(
        check, echo, fine.value, math.exp(ln_rhs),
        disc_error=disc, ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
    )


def check_semiclassical_bound(
    rho: DensityField,
    alpha: float,
    N: int,
    d: int = 2,
    rho_coarse: "DensityField | None" = None,
) -> Report:
    """General-d log-weighted bound with the 4 (2 pi)^d / omega_d remainder.

    At d = 2 the leading exponent is again alpha / 4 pi, but the
    remainder coefficient is 16 pi, weaker than the planar bound's 14;
    the planar check therefore dominates this one on shared inputs.
    """
    check = "density.semiclassical"
    echo = {"alpha": alpha, "N": N, "d": d, "measure": rho.measure}
    if N != rho.family_size:
        raise ValueError("N must equal the density's family size")
    sw = semiclassical_weight(d)
    thr = bound_threshold(alpha, d)
    if N < thr:
        return rejected_report(check, echo, f"requires N >= {thr:.6g}, got {N}")
    ln_n = math.log(N)
    weight = alpha / ln_n
    fine = exp_average(rho, weight)
    ln_rhs = alpha * sw * (1.0 + (4.0 / sw) * math.log(ln_n) / ln_n)
    disc = _richardson(fine, rho_coarse, weight)
    if fine.saturated:
        return saturated_report(
            check, echo, f"exponent {fine.exponent_max:.6g} beyond guard",
            ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
        )
    return make_report(
        check, echo, fine.value, math.exp(ln_rhs),
        disc_error=disc, ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
    )


def check_remainder_bound(
    rho: DensityField,
    alpha: float,
    N: int,
    t: float,
    C: float,
    d: int = 2,
    rho_coarse: "DensityField | None" = None,
) -> Report:
    """Bound with explicit remainder C / (ln N)^t; records the minimal C.

    Intended for operator-dominated densities: the caller proposes (t, C)
    and the report carries ``minimal_C``, the smallest constant that
    would close the bound at this t, so sweeps over N can track its
    trend.  Shares the semiclassical threshold.
    """
    check = "density.remainder"
    echo = {"alpha": alpha, "N": N, "t": t, "C": C, "d": d}
    if N != rho.family_size:
        raise ValueError("N must equal the density's family size")
    if t <= 0.0:
        raise ValueError("remainder exponent t must be positive")
    sw = semiclassical_weight(d)
    thr = bound_threshold(alpha, d)
    if N < thr:
        return rejected_report(check, echo, f"requires N >= {thr:.6g}, got {N}")
    ln_n = math.log(N)
    weight = alpha / ln_n
    fine = exp_average(rho, weight)
    ln_rhs = alpha * sw * (1.0 + C / ln_n**t)
    minimal_C = ln_n**t * max(0.0, fine.ln_value / (alpha * sw) - 1.0)
    disc = _richardson(fine, rho_coarse, weight)
    extra = {"minimal_C": minimal_C}
    if fine.saturated:
        return saturated_report(
            check, echo, f"exponent {fine.exponent_max:.6g} beyond guard",
            extra=extra, ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
        )
    return make_report(
        check, echo, fine.value, math.exp(ln_rhs),
        disc_error=disc, extra=extra, ln_lhs=fine.ln_value, ln_rhs=ln_rhs,
    )


# ---------------------------------------------------------------------------
# sandwich table


def _sandwich_row(
    rho: DensityField,
    alpha: float,
    N: int,
    rho_coarse: "DensityField | None",
) -> Report:
    check = "density.sandwich"
    echo = {"alpha": alpha, "N": N, "measure": rho.measure}
    thr = bound_threshold(alpha, 2)
    if N < thr:
        return rejected_report(check, echo, f"requires N >= {thr:.6g}, got {N}")
    ln_n = math.log(N)
    weight = alpha / ln_n
    fine = exp_average(rho, weight)
    sw = semiclassical_weight(2)
    target = alpha * sw
    band = target * PLANAR_REMAINDER * math.log(ln_n) / ln_n
    ln_upper = target + band
    ln_lower = alpha * rho.mean() / ln_n  # Jensen floor
    disc = _richardson(fine, rho_coarse, weight)
    extra = {
        "lower": math.exp(ln_lower),
        "ln_lower": ln_lower,
        "ln_computed": fine.ln_value,
        "two_sided_band": band,
        "ln_offset": fine.ln_value - target,
    }
    if fine.saturated:
        return saturated_report(
            check, echo, f"exponent {fine.exponent_max:.6g} beyond guard",
            extra=extra, ln_lhs=fine.ln_value, ln_rhs=ln_upper,
        )
    upper = math.exp(ln_upper)
    margin_upper = upper * (1.0 + disc) - fine.value
    margin_lower = fine.value - extra["lower"]
    two_sided = abs(fine.ln_value - target) <= band + disc
    status = PASS if (margin_upper >= 0.0 and margin_lower >= 0.0 and two_sided) else FAIL
    return Report(
        check=check,
        params=echo,
        lhs=fine.value,
        rhs=upper,
        margin=min(margin_upper, margin_lower),
        disc_error=disc,
        status=status,
        ln_lhs=fine.ln_value,
        ln_rhs=ln_upper,
        extra=extra,
    )


def sandwich_table(
    source: "Domain | SpectralBasis",
    alpha: float,
    N_list: list[int],
    h: float | None = None,
) -> list[Report]:
    """Jensen floor <= computed moment <= log-bound ceiling, one row per N.

    Rectangle domains take the separable sweep (two resolutions h and
    h/2, densities accumulated incrementally across the sorted N list);
    a materialized basis is accepted for the other geometries, at its
    own grid and without a Richardson companion.  N below threshold
    yields a rejected row, never an error.
    """
    Ns = sorted(set(int(N) for N in N_list))
    if not Ns or Ns[0] < 1:
        raise ValueError("N list must contain positive sizes")
    rows = []
    if isinstance(source, Domain):
        if source.kind != "rectangle":
            raise ValueError("domain fast path covers rectangles only")
        if h is None:
            raise ValueError("rectangle fast path needs a grid spacing")
        a, b = source.params["a"], source.params["b"]
        fine = RectangleDensitySweep(a, b, h, Ns[-1])
        coarse = RectangleDensitySweep(a, b, 2.0 * h, Ns[-1])
        for N in Ns:
            rows.append(_sandwich_row(fine.density_at(N), alpha, N, coarse.density_at(N)))
        return rows
    basis = source
    stack = basis.stack()
    if len(basis.pairs) < Ns[-1]:
        raise ValueError("basis holds fewer modes than the largest N requested")
    from .family import dirichlet_form_gram

    energies = np.real(np.diag(dirichlet_form_gram(stack, basis.grid)))
    running = np.zeros(stack.shape[1:])
    done = 0
    for N in Ns:
        for n in range(done, N):
            running += stack[n] ** 2 / energies[n]
        done = N
        rho = DensityField(
            values=running[basis.grid.mask] if basis.grid.mask is not None else running.ravel(),
            family_size=N,
            measure=basis.domain.measure,
            cell_weight=basis.grid.weight,
            collar=collar_mass(basis.domain, basis.grid),
            source="basis sweep",
        )
        rows.append(_sandwich_row(rho, alpha, N, None))
    return rows


def sandwich_csv_rows(rows: list[Report]):
    """(N, lower, computed, upper, ln_computed, status) tuples for CSV."""
    out = []
    for r in rows:
        out.append(
            (
                r.params["N"],
                r.extra.get("lower", ""),
                "" if r.lhs is None else r.lhs,
                "" if r.rhs is None else r.rhs,
                r.extra.get("ln_computed", "" if r.ln_lhs is None else r.ln_lhs),
                r.status,
            )
        )
    return out
