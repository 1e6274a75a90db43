"""Sharp momentum cutoffs on the zero-padded box and the density bounds.

Model.  Each member is extended by zero to a box ``padding`` times the
domain extent and transformed with a discrete Fourier transform of
power-of-two length per axis.  Frequencies are xi_k = k / S with S the
padded box length; the symbol weight is |2 pi xi|^(2s).  Sharp
indicators split every member into a low part (weight <= delta, ties
go low), a band (delta < weight <= ell), and the remainder, which is
reconstructed in real space so the three pieces sum to the member
exactly.  Discrete Plancherel then holds to roundoff and is enforced.

The uniform density bounds are checked with the max taken over the full
padded box, since the underlying estimates hold at every point of the
plane, not just on the domain.  Discretization allowances come from a
Richardson step against a companion run at twice the spacing.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigsh, spsolve

from .constants import bessel_zero, lambda_gn, semiclassical_weight
from .family import Family
from .grids import Grid1D, Grid2D
from .report import (
    FAIL,
    PASS,
    WARN,
    Report,
    emit_csv,
    make_report,
    rejected_report,
)
from .spectral import fd_laplacian

_PLANCHEREL_TOL = 1e-10


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class CutoffSpec:
    """Cutoff pair (delta, ell) in symbol units plus transform geometry."""

    delta: float
    ell: float
    s: float
    padding: int
    fft_size: int

    def __post_init__(self):
        if not 0.0 < self.delta < self.ell:
            raise ValueError("need 0 < delta < ell")
        if self.s <= 0.0:
            raise ValueError("symbol exponent must be positive")
        if int(self.padding) != self.padding or self.padding < 2:
            raise ValueError("insufficient padding: factor must be an integer >= 2")
        if not _is_pow2(self.fft_size) or self.fft_size < 4:
            raise ValueError("transform length must be a power of two >= 4")

    @classmethod
    def for_grid(
        cls,
        grid: "Grid2D | Grid1D",
        delta: float,
        ell: float,
        s: float | None = None,
        padding: int = 4,
    ) -> "CutoffSpec":
        # interval grids use padding*m, the transform convention of the
        # interval Galerkin model, so binary m keeps the length a power
        # of two; planar grids use padding*(n+1) = padding*extent/h
        n_axis = (grid.shape[0] + 1) if isinstance(grid, Grid2D) else grid.m
        if s is None:
            s = 1.0 if isinstance(grid, Grid2D) else 0.5
        size = int(padding) * n_axis
        if not _is_pow2(size):
            raise ValueError(
                f"padding {padding} times axis length {n_axis} gives transform "
                f"length {size}, not a power of two"
            )
        return cls(float(delta), float(ell), float(s), int(padding), size)


@dataclass(frozen=True)
class CutoffDensities:
    """Low/band/high densities on the full padded lattice.

    ``interior`` slices the original domain lattice out of the padded
    box; ``plancherel_defect`` is the worst per-member relative defect
    of the three-way norm split and is guaranteed <= 1e-10.
    """

    rho_low: np.ndarray
    rho_band: np.ndarray
    rho_high: np.ndarray
    spec: CutoffSpec
    h: float
    box_length: float
    interior: tuple
    plancherel_defect: float

    def low_interior(self) -> np.ndarray:
        return self.rho_low[self.interior]

    def band_interior(self) -> np.ndarray:
        return self.rho_band[self.interior]


def _symbol_weights(spec: CutoffSpec, h: float, dim: int) -> np.ndarray:
    """|2 pi xi|^(2s) on the rfft layout (last axis halved)."""
    P = spec.fft_size
    S = P * h
    full = np.fft.fftfreq(P, d=h)
    half = np.fft.rfftfreq(P, d=h)
    if dim == 1:
        mag2 = half**2
    else:
        mag2 = full[:, None] ** 2 + half[None, :] ** 2
    return (4.0 * math.pi**2 * mag2) ** spec.s


def _half_count_weights(P: int) -> np.ndarray:
    """Multiplicity of each rfft column in the full spectrum."""
    w = np.full(P // 2 + 1, 2.0)
    w[0] = 1.0
    w[-1] = 1.0  # Nyquist column, P even
    return w


def _pad_member(u: np.ndarray, P: int) -> np.ndarray:
    if u.ndim == 1:
        out = np.zeros(P)
        out[1 : u.shape[0] + 1] = u
    else:
        out = np.zeros((P, P))
        out[1 : u.shape[0] + 1, 1 : u.shape[1] + 1] = u
    return out


def cutoff_project(f: Family, spec: CutoffSpec) -> CutoffDensities:
    """Split every member at (delta, ell] and form the three densities.

    Ties |2 pi xi|^(2s) = delta count as low, matching the closed
    low-pass condition; the band is open at delta and closed at ell.
    The high piece is recovered in real space as u - low - band, so the
    split is exact by construction and Plancherel is a genuine check of
    the transform round-trip.
    """
    grid = f.grid
    dim = 2 if isinstance(grid, Grid2D) else 1
    n_axis = (grid.shape[0] + 1) if dim == 2 else grid.m
    if spec.fft_size != spec.padding * n_axis:
        raise ValueError("spec transform length does not match this grid")
    if f.members.dtype.kind == "c":
        raise ValueError("cutoff transforms expect real members")
    P = spec.fft_size
    h = grid.h
    W = _symbol_weights(spec, h, dim)
    mask_low = W <= spec.delta
    mask_band = (W > spec.delta) & (W <= spec.ell)
    shape = (P,) if dim == 1 else (P, P)
    axes = tuple(range(dim))
    rho_low = np.zeros(shape)
    rho_band = np.zeros(shape)
    rho_high = np.zeros(shape)
    cell = h**dim
    worst = 0.0
    for u in f.members:
        upad = _pad_member(np.asarray(u, dtype=float), P)
        c = np.fft.rfftn(upad)
        u_low = np.fft.irfftn(c * mask_low, s=shape, axes=axes)
        u_band = np.fft.irfftn(c * mask_band, s=shape, axes=axes)
        u_high = upad - u_low - u_band
        rho_low += u_low**2
        rho_band += u_band**2
        rho_high += u_high**2
        total = cell * float((upad * upad).sum())
        split = cell * float((u_low**2 + u_band**2 + u_high**2).sum())
        defect = abs(split - total) / total
        worst = max(worst, defect)
        if defect > _PLANCHEREL_TOL:
            raise RuntimeError(
                f"transform round-trip defect {defect:.3e} exceeds {_PLANCHEREL_TOL:g}"
            )
    if dim == 1:
        interior = (slice(1, grid.m + 1),)
    else:
        interior = (slice(1, grid.shape[0] + 1), slice(1, grid.shape[1] + 1))
    return CutoffDensities(
        rho_low=rho_low,
        rho_band=rho_band,
        rho_high=rho_high,
        spec=spec,
        h=h,
        box_length=P * h,
        interior=interior,
        plancherel_defect=worst,
    )


def _band_max_pair(
    f: Family,
    spec: CutoffSpec,
    dens: CutoffDensities | None,
    f_coarse: Family | None,
    spec_coarse: CutoffSpec | None,
    dens_coarse: CutoffDensities | None,
    which: str,
):
    if dens is None:
        dens = cutoff_project(f, spec)
    elif dens.spec != spec:
        raise ValueError("precomputed densities built for a different cutoff spec")
    field = dens.rho_band if which == "band" else dens.rho_low
    value = float(field.max())
    disc = 0.0
    if dens_coarse is None and f_coarse is not None:
        if spec_coarse is None:
            spec_coarse = CutoffSpec.for_grid(
                f_coarse.grid, spec.delta, spec.ell, spec.s, spec.padding
            )
        dens_coarse = cutoff_project(f_coarse, spec_coarse)
    if dens_coarse is not None:
        other_field = dens_coarse.rho_band if which == "band" else dens_coarse.rho_low
        other = float(other_field.max())
        if value > 0.0:
            disc = abs(value - other) / (3.0 * value)
    return dens, value, disc


def check_lemma21_band(
    f: Family,
    spec: CutoffSpec,
    f_coarse: Family | None = None,
    spec_coarse: CutoffSpec | None = None,
    dens: CutoffDensities | None = None,
    dens_coarse: CutoffDensities | None = None,
) -> Report:
    """max over the padded box of the band density against ln(ell/delta)/4pi."""
    if not isinstance(f.grid, Grid2D):
        raise ValueError("planar band bound needs a 2-d family")
    if f.kind != "gradient-orthonormal":
        raise ValueError("planar band bound needs a gradient-orthonormal family")
    dens, value, disc = _band_max_pair(
        f, spec, dens, f_coarse, spec_coarse, dens_coarse, "band"
    )
    rhs = math.log(spec.ell / spec.delta) / (4.0 * math.pi)
    return make_report(
        "cutoff.band-bound",
        {"delta": spec.delta, "ell": spec.ell, "N": f.size, "padding": spec.padding},
        value,
        rhs,
        disc_error=disc,
        extra={"plancherel_defect": dens.plancherel_defect},
    )


def _discrete_lambda1(f: Family) -> float:
    grid = f.grid
    dom = f.domain
    if dom.kind == "rectangle":
        a, b = dom.params["a"], dom.params["b"]
        sx = math.sin(0.5 * math.pi * grid.h / a)
        sy = math.sin(0.5 * math.pi * grid.h / b)
        return 4.0 / grid.h**2 * (sx * sx + sy * sy)
    A = fd_laplacian(grid)
    v0 = np.full(A.shape[0], 1.0 / math.sqrt(A.shape[0]))
    vals = eigsh(A, k=1, sigma=0.0, which="LM", v0=v0, return_eigenvectors=False)
    return float(vals[0])


def _lowpass_kernel(spec: CutoffSpec, h: float, x: np.ndarray) -> np.ndarray:
    """Real-space low-pass kernel centered at x, on the padded 2-d lattice."""
    P = spec.fft_size
    S = P * h
    freq = np.fft.fftfreq(P, d=h)
    W = (4.0 * math.pi**2) * (freq[:, None] ** 2 + freq[None, :] ** 2)
    M = (W**spec.s <= spec.delta).astype(float)
    phase = np.exp(-2j * math.pi * (freq[:, None] * x[0] + freq[None, :] * x[1]))
    field = np.fft.ifft2(M * phase) * (P * P / (S * S))
    return np.real(field)


def check_lemma21_low(
    f: Family,
    spec: CutoffSpec,
    measure: float | None = None,
    f_coarse: Family | None = None,
    spec_coarse: CutoffSpec | None = None,
    dens: CutoffDensities | None = None,
    dens_coarse: CutoffDensities | None = None,
) -> Report:
    """max low-pass density against |Omega| delta / (4 pi^2 z01^2).

    Also walks the intermediate chain at the interior argmax x*: the
    low-pass kernel restricted to the domain is fed to the discrete
    Dirichlet Poisson solve, whose form energy both dominates the
    density value there (a Bessel step, exact in the discrete model)
    and stays below delta / (4 pi lambda_1).  The lambda_1 route is the
    tighter diagnostic; the report carries every link.
    """
    if not isinstance(f.grid, Grid2D):
        raise ValueError("planar low bound needs a 2-d family")
    if f.kind != "gradient-orthonormal":
        raise ValueError("planar low bound needs a gradient-orthonormal family")
    if measure is None:
        measure = f.domain.measure
    dens, value, disc = _band_max_pair(
        f, spec, dens, f_coarse, spec_coarse, dens_coarse, "low"
    )
    z01 = bessel_zero(0, 1)
    rhs = measure * spec.delta / (4.0 * math.pi**2 * z01**2)

    grid = f.grid
    inner = dens.low_interior()
    flat_idx = int(np.argmax(inner))
    ij = np.unravel_index(flat_idx, inner.shape)
    x_star = np.array([(ij[0] + 1) * grid.h, (ij[1] + 1) * grid.h])
    kernel = _lowpass_kernel(spec, grid.h, x_star)
    ker_interior = kernel[1 : grid.shape[0] + 1, 1 : grid.shape[1] + 1]
    if grid.mask is not None:
        rhs_vec = ker_interior[grid.mask]
    else:
        rhs_vec = ker_interior.ravel()
    A = fd_laplacian(grid)
    phi = spsolve(A.tocsc(), rhs_vec)
    grad_energy = grid.weight * float(phi @ (A @ phi))
    lam1 = _discrete_lambda1(f)
    density_at_star = float(inner[ij])
    if density_at_star > grad_energy * (1.0 + 1e-8) + 1e-14:
        raise RuntimeError("Bessel step violated in the discrete model")
    S = dens.box_length
    # low-frequency cell count gives the discrete Plancherel value of
    # ||kernel||^2; the continuum value delta / 4 pi is its limit
    Wfull = (4.0 * math.pi**2) * (
        np.fft.fftfreq(spec.fft_size, d=grid.h)[:, None] ** 2
        + np.fft.fftfreq(spec.fft_size, d=grid.h)[None, :] ** 2
    ) ** spec.s
    count = int((Wfull <= spec.delta).sum())
    kernel_norm2 = count / (S * S)
    extra = {
        "plancherel_defect": dens.plancherel_defect,
        "diag_x": [float(x_star[0]), float(x_star[1])],
        "diag_density": density_at_star,
        "diag_grad_energy": grad_energy,
        "diag_lambda1": lam1,
        "diag_kernel_bound": spec.delta / (4.0 * math.pi * lam1),
        "diag_kernel_norm2": kernel_norm2,
        "diag_count_bound": kernel_norm2 / lam1,
    }
    return make_report(
        "cutoff.low-bound",
        {"delta": spec.delta, "ell": spec.ell, "N": f.size, "padding": spec.padding,
         "measure": measure},
        value,
        rhs,
        disc_error=disc,
        extra=extra,
    )


def check_lemma34(
    f: Family,
    spec: CutoffSpec,
    d: int | None = None,
    f_coarse: Family | None = None,
    spec_coarse: CutoffSpec | None = None,
    dens: CutoffDensities | None = None,
    dens_coarse: CutoffDensities | None = None,
    allowance: float = 0.0,
) -> Report:
    """General-d pair: band vs (omega_d/(2 pi)^d) ln(ell/delta) and low vs
    Lambda_d^4 (omega_d/(2 pi)^d) |Omega| delta.

    One report covers both clauses; the band pair sits in the lhs/rhs
    slots, the low pair in extra, the status requires both.  At d=2 the
    band constant equals the planar 1/4pi and the low constant is the
    Lambda_2^4-weakened version of the Bessel-zero constant; their ratio
    is recorded for reference.
    """
    if d is None:
        d = 2 if isinstance(f.grid, Grid2D) else 1
    if d not in (1, 2):
        raise ValueError("general-d checks cover d in {1, 2}")
    if not math.isclose(spec.s, d / 2.0, rel_tol=1e-12):
        raise ValueError("symbol exponent must equal d/2")
    sw = semiclassical_weight(d)
    if dens is None:
        dens = cutoff_project(f, spec)
    elif dens.spec != spec:
        raise ValueError("precomputed densities built for a different cutoff spec")
    if dens_coarse is None and f_coarse is not None:
        if spec_coarse is None:
            spec_coarse = CutoffSpec.for_grid(
                f_coarse.grid, spec.delta, spec.ell, spec.s, spec.padding
            )
        dens_coarse = cutoff_project(f_coarse, spec_coarse)
    band = float(dens.rho_band.max())
    low = float(dens.rho_low.max())
    disc_band = disc_low = 0.0
    if dens_coarse is not None:
        if band > 0.0:
            disc_band = abs(band - float(dens_coarse.rho_band.max())) / (3.0 * band)
        if low > 0.0:
            disc_low = abs(low - float(dens_coarse.rho_low.max())) / (3.0 * low)
    band_rhs = sw * math.log(spec.ell / spec.delta)
    low_rhs = lambda_gn(d) ** 4 * sw * f.domain.measure * spec.delta
    band_margin = band_rhs * (1.0 + disc_band + allowance) - band
    low_margin = low_rhs * (1.0 + disc_low + allowance) - low
    status = PASS if (band_margin >= 0.0 and low_margin >= 0.0) else FAIL
    extra = {
        "low_lhs": low,
        "low_rhs": low_rhs,
        "low_margin": low_margin,
        "low_disc_error": disc_low,
        "band_disc_error": disc_band,
        "allowance": allowance,
        "plancherel_defect": dens.plancherel_defect,
    }
    if d == 2:
        z01 = bessel_zero(0, 1)
        extra["low_constant_ratio"] = (
            lambda_gn(2) ** 4 * sw / (1.0 / (4.0 * math.pi**2 * z01**2))
        )
    return Report(
        check="cutoff.general-d",
        params={"delta": spec.delta, "ell": spec.ell, "N": f.size, "d": d,
                "padding": spec.padding},
        lhs=band,
        rhs=band_rhs,
        margin=min(band_margin, low_margin),
        disc_error=disc_band + allowance,
        status=status,
        extra=extra,
    )


# ---------------------------------------------------------------------------
# layer cake


def _frequency_energies(f: Family, padding: int):
    """Per-frequency symbol weights and summed spectral energies."""
    grid = f.grid
    dim = 2 if isinstance(grid, Grid2D) else 1
    n_axis = (grid.shape[0] + 1) if dim == 2 else grid.m
    P = padding * n_axis
    if not _is_pow2(P):
        raise ValueError("padding times axis length must be a power of two")
    h = grid.h
    S = P * h
    s = 1.0 if dim == 2 else 0.5
    geom = CutoffSpec(1.0, 2.0, s, padding, P)  # only geometry fields used
    W = _symbol_weights(geom, h, dim)
    counts = _half_count_weights(P)
    if dim == 2:
        counts = np.broadcast_to(counts[None, :], W.shape)
    E = np.zeros_like(W)
    cell = h**dim
    for u in f.members:
        upad = _pad_member(np.asarray(u, dtype=float), P)
        c = np.fft.rfftn(upad) * cell  # continuum-normalized coefficients
        E += np.abs(c) ** 2
    E *= counts / S**dim
    return W, E, P, S


def rumin_layer_cake(
    f: Family,
    ell_grid: np.ndarray | None = None,
    padding: int = 4,
    levels: int = 64,
) -> Report:
    """Layer-cake identity and the square-root lower bound for the energy sum.

    Identity: the symbol-weighted spectral sum must equal its layer-cake
    re-summation exactly (1e-8 relative demanded, roundoff observed).
    Inequality: the pointwise triangle step bounds the same quantity
    from below by integrating [sqrt(rho) - sqrt(rho^{<=ell})]_+^2 over
    log-spaced levels (trapezoid in ln ell, plus the left rectangle);
    the result may not exceed the constraint value N.  A level grid
    stopping short of the spectral support yields WARN with the
    truncated tail recorded.
    """
    W, E, P, S = _frequency_energies(f, padding)
    total = float((W * E).sum())

    order = np.argsort(W, axis=None)
    w_sorted = W.ravel()[order]
    e_sorted = E.ravel()[order]
    # exact layer cake: sum over levels of (residual energy above level)
    # times the level increment, telescoped per frequency
    tail = np.concatenate(([e_sorted.sum()], e_sorted.sum() - np.cumsum(e_sorted)))
    dw = np.diff(np.concatenate(([0.0], w_sorted)))
    cake = float((tail[:-1] * dw).sum())
    rel = abs(cake - total) / max(abs(total), 1e-300)
    identity_ok = rel <= 1e-8

    if ell_grid is None:
        if f.lambdas is None:
            raise ValueError("provide ell_grid; family carries no eigenvalue record")
        lam = np.asarray(f.lambdas, dtype=float)
        # cover the transform model's actual spectral content: the top
        # level sits past the point where the residual energy is < 1e-9
        idx = int(np.argmax(tail[1:] <= 1e-9 * total))
        support = float(w_sorted[idx])
        ell_grid = np.geomspace(0.5 * lam.min(), 10.0 * max(support, lam.max()), levels)
    ell_grid = np.asarray(ell_grid, dtype=float)
    if ell_grid.ndim != 1 or ell_grid.size < 2 or np.any(np.diff(ell_grid) <= 0):
        raise ValueError("ell grid must be strictly increasing")

    grid = f.grid
    dim = 2 if isinstance(grid, Grid2D) else 1
    h = grid.h
    cell = h**dim
    rho = f.density()
    sqrt_rho = np.sqrt(rho)
    lower_vals = np.empty(ell_grid.size)
    shape = (P,) if dim == 1 else (P, P)
    axes = tuple(range(dim))
    coeffs = []
    for u in f.members:
        coeffs.append(np.fft.rfftn(_pad_member(np.asarray(u, dtype=float), P)))
    # outside the domain sqrt(rho) = 0, so the clipped integrand vanishes
    # there and summing the interior slice already covers the whole plane
    for i, ell in enumerate(ell_grid):
        mask = W <= ell
        rho_ell = np.zeros(rho.shape)
        for c in coeffs:
            u_ell = np.fft.irfftn(c * mask, s=shape, axes=axes)
            piece = u_ell[1 : rho.shape[0] + 1] if dim == 1 else (
                u_ell[1 : rho.shape[0] + 1, 1 : rho.shape[1] + 1]
            )
            rho_ell += piece**2
        diff = sqrt_rho - np.sqrt(rho_ell)
        np.clip(diff, 0.0, None, out=diff)
        lower_vals[i] = cell * float((diff * diff).sum())
    ln_ell = np.log(ell_grid)
    lower = float(np.trapezoid(lower_vals * ell_grid, ln_ell))
    # integrand is nonincreasing, so a left rectangle under it is safe
    lower += float(ell_grid[0] * lower_vals[0])

    truncated = float(e_sorted[w_sorted > ell_grid[-1]].sum()) if w_sorted.size else 0.0
    warn = truncated > 1e-6 * max(total, 1e-300)
    N = float(f.size)
    status = PASS
    if not identity_ok or lower > N * (1.0 + 1e-12):
        status = FAIL
    elif warn:
        status = WARN
    return Report(
        check="cutoff.layer-cake",
        params={"N": f.size, "padding": padding, "levels": int(ell_grid.size)},
        lhs=lower,
        rhs=N,
        margin=N - lower,
        disc_error=0.0,
        status=status,
        extra={
            "identity_lhs": total,
            "identity_rhs": cake,
            "identity_rel_diff": rel,
            "constraint_value": N,
            "spectral_energy_offset": total - N,
            "truncated_tail": truncated,
            "gap": N - lower,
        },
    )


# ---------------------------------------------------------------------------
# proof chain


def pointwise_chain_ratio(
    rho_value: float, epsilon: float, delta: float, kappa: float
) -> float:
    """Quadrature check of the pointwise level-integral estimate.

    For rho(x) > 1 the derivation claims
    int_delta^inf [sqrt(rho) - kappa - sqrt(ln(ell/delta)/4pi)]_+^2 dl
    >= (delta kappa^2 / 2) exp(4 pi (1-eps) rho); returns the ratio of
    the trapezoid value to the claimed floor, so >= 1 means the step
    holds at this point.
    """
    sr = math.sqrt(rho_value)
    if sr <= kappa:
        return 0.0
    t_star = 4.0 * math.pi * (sr - kappa) ** 2
    t = np.linspace(0.0, t_star, 4096)
    integrand = np.exp(t) * np.clip(
        sr - kappa - np.sqrt(t / (4.0 * math.pi)), 0.0, None
    ) ** 2
    quad = delta * float(np.trapezoid(integrand, t))
    target = 0.5 * delta * kappa**2 * math.exp(
        4.0 * math.pi * (1.0 - epsilon) * rho_value
    )
    return quad / target


def proof_pipeline(f: Family, epsilon: float) -> Report:
    """Reproduces the point-bound derivation on a concrete family.

    Sets kappa = 1 - (1-eps)^(1/4) and delta from |Omega| delta /
    (4 pi^2 z01^2) = kappa^2, then asserts the intermediate moment bound
    over {rho > 1} and, at up to ten highest-density points, the
    pointwise chain that an ell-quadrature of
    [sqrt(rho) - kappa - sqrt(ln(ell/delta)/4pi)]_+^2 dominates
    (delta kappa^2 / 2) exp(4 pi (1-eps) rho).
    """
    check = "cutoff.proof-chain"
    echo = {"epsilon": epsilon, "N": f.size}
    if not 0.0 < epsilon <= 0.25:
        return rejected_report(check, echo, f"requires 0 < epsilon <= 1/4, got {epsilon}")
    if not isinstance(f.grid, Grid2D):
        raise ValueError("proof chain runs on planar families")
    kappa = 1.0 - (1.0 - epsilon) ** 0.25
    z01 = bessel_zero(0, 1)
    measure = f.domain.measure
    delta = 4.0 * math.pi**2 * z01**2 * kappa**2 / measure
    rho = f.density()
    grid = f.grid
    above = rho > 1.0
    lhs = grid.weight * float(np.exp(4.0 * math.pi * (1.0 - epsilon) * rho[above]).sum())
    rhs = 2.0 * f.size / (delta * kappa**2)

    flat = rho[grid.mask] if grid.mask is not None else rho.ravel()
    over = flat[flat > 1.0]
    chain_points = int(min(10, over.size))
    chain_ok = True
    min_ratio = math.inf
    if chain_points:
        samples = np.sort(over)[-chain_points:]
        for r in samples:
            ratio = pointwise_chain_ratio(float(r), epsilon, delta, kappa)
            min_ratio = min(min_ratio, ratio)
            if ratio < 1.0:
                chain_ok = False
    margin = rhs - lhs
    status = PASS if (margin >= 0.0 and chain_ok) else FAIL
    return Report(
        check=check,
        params=echo,
        lhs=lhs,
        rhs=rhs,
        margin=margin,
        disc_error=0.0,
        status=status,
        extra={
            "kappa": kappa,
            "delta": delta,
            "points_above_one": int(over.size),
            "chain_points": chain_points,
            "chain_min_ratio": None if not chain_points else min_ratio,
        },
    )


# ---------------------------------------------------------------------------
# delimited output


def save_heatmap_csv(path, values: np.ndarray, h: float, offset: float = 0.0) -> None:
    """Dump a sampled field as (x, y, value) rows, row-major."""
    vals = np.asarray(values)
    if vals.ndim == 2:
        rows = (
            (offset + (i + 1) * h, offset + (j + 1) * h, float(vals[i, j]))
            for i in range(vals.shape[0])
            for j in range(vals.shape[1])
        )
        emit_csv(path, ["x", "y", "value"], rows)
    else:
        rows = ((offset + (i + 1) * h, float(vals[i])) for i in range(vals.shape[0]))
        emit_csv(path, ["x", "value"], rows)
