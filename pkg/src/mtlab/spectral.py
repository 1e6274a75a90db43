"""Dirichlet Laplacian eigenbases on rectangles, disks, and raster masks.

Each basis is a list of (eigenvalue, sampled eigenfunction) pairs on an
interior-node lattice.  Rectangle and disk bases sample closed-form
modes and carry analytic eigenvalues; the mask basis diagonalizes the
5-point finite-difference Laplacian.  All sampled modes are normalized
to unit norm under the h^2 lattice quadrature (for the disk this means
the closed-form amplitude is corrected by a 1 + O(h^2) raster factor).
Spectrum-only enumeration, Weyl-law diagnostics, and a binary container
format live here as well.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import eigh

from .constants import BESSEL_M_MAX, bessel_j, bessel_zero
from .grids import Domain, Grid2D, grid_for_disk, grid_for_rectangle

# dense diagonalization below this many degrees of freedom, Lanczos above
_DENSE_LIMIT = 4096

_MAGIC_BASIS = b"MTEB"


@dataclass(frozen=True)
class EigenPair:
    """One mode: eigenvalue, grid samples, and a human-readable label."""

    lam: float
    phi: np.ndarray
    label: str = ""


@dataclass(frozen=True)
class SpectralBasis:
    domain: Domain
    grid: Grid2D
    pairs: list[EigenPair] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.pairs)

    def eigenvalues(self) -> np.ndarray:
        return np.array([p.lam for p in self.pairs])

    def stack(self) -> np.ndarray:
        """Modes as an (N, *grid.shape) array."""
        return np.stack([p.phi for p in self.pairs])

    def gram(self) -> np.ndarray:
        flat = self.stack().reshape(self.size, -1)
        return self.grid.weight * (flat @ flat.T)


def _check_ordering(pairs: list[EigenPair]) -> None:
    lams = [p.lam for p in pairs]
    if not lams or lams[0] <= 0:
        raise ValueError("first eigenvalue must be positive")
    if any(b < a for a, b in zip(lams, lams[1:])):
        raise ValueError("eigenvalues out of order")


# ---------------------------------------------------------------------------
# spectrum enumeration (no grid sampling; cheap even for N = 10^6)


def rectangle_spectrum(a: float, b: float, N: int) -> list[tuple[float, int, int]]:
    """N smallest (pi^2 (j^2/a^2 + k^2/b^2), j, k), ties toward smaller j."""
    if not 1 <= N <= 10**6:
        raise ValueError("mode count out of range")
    cap = 4.0 * np.pi * N / (a * b) + np.pi**2 * (1.0 / a**2 + 1.0 / b**2)
    while True:
        cap *= 2.0
        jmax = int(np.sqrt(cap) * a / np.pi) + 1
        j = np.arange(1, jmax + 1)
        kmax_j = np.sqrt(np.maximum(cap / np.pi**2 - j * j / a**2, 0.0)) * b
        modes = [
            (np.pi**2 * (jj * jj / a**2 + kk * kk / b**2), int(jj), kk)
            for jj, km in zip(j, kmax_j.astype(int))
            for kk in range(1, km + 1)
        ]
        if len(modes) >= N:
            break
    modes.sort()
    return modes[:N]


def disk_spectrum(R: float, N: int) -> list[tuple[float, int, int, int]]:
    """N smallest ((z_{m,k}/R)^2, m, parity, k); parity 0 = cos, 1 = sin.

    The zero table covers orders m <= 20, so the certified spectral
    range ends at z = 21: the first zero of J_21 exceeds its order, so
    no missing mode can undercut the listed ones.  Requests beyond the
    certified count raise instead of silently returning wrong modes.
    """
    if not 1 <= N <= 10**4:
        raise ValueError("mode count out of range")
    z_cert = float(BESSEL_M_MAX + 1)
    cands: list[tuple[float, int, int, int]] = []
    for m in range(0, BESSEL_M_MAX + 1):
        k = 1
        while True:
            z = bessel_zero(m, k)
            if z >= z_cert:
                break
            lam = (z / R) ** 2
            cands.append((lam, m, 0, k))
            if m >= 1:
                cands.append((lam, m, 1, k))
            k += 1
    cands.sort()
    if N > len(cands):
        raise ValueError(
            f"zero table certifies only {len(cands)} disk modes; {N} requested"
        )
    return cands[:N]


# ---------------------------------------------------------------------------
# sampled bases


def eigenbasis_rectangle(a: float, b: float, N: int, h: float) -> SpectralBasis:
    """First N modes (2/sqrt(ab)) sin(j pi x/a) sin(k pi y/b), sampled.

    The sampled sine vectors diagonalize the lattice exactly, so the
    discrete Gram matrix is the identity to rounding error.
    """
    grid = grid_for_rectangle(a, b, h)
    x, y = grid.axes()
    amp = 2.0 / np.sqrt(a * b)
    pairs = []
    for lam, j, k in rectangle_spectrum(a, b, N):
        phi = amp * np.outer(np.sin(j * np.pi * x / a), np.sin(k * np.pi * y / b))
        pairs.append(EigenPair(lam=lam, phi=phi, label=f"sine j={j} k={k}"))
    _check_ordering(pairs)
    return SpectralBasis(domain=Domain.rectangle(a, b), grid=grid, pairs=pairs)


def disk_radial_norm(m: int, z: float, R: float) -> float:
    """integral of J_m(z r/R)^2 r dr over (0, R), 2048-panel Simpson.

    Closed form for zeros z of J_m: (R^2/2) J_{m+1}(z)^2; kept as an
    independent quadrature so the closed form stays a cross-check.
    """
    rs, js = _radial_profile(m, z, R)
    rs, js = rs[::2], js[::2]  # 4097 points = 2048 Simpson panels
    f = js * js * rs
    w = np.ones_like(f)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    return float((rs[1] - rs[0]) / 3.0 * (w * f).sum())


def _radial_profile(m: int, z: float, R: float, panels: int = 4096):
    # dense radial table per mode; linear interpolation error ~ (z/n)^2
    rs = np.linspace(0.0, R, 2 * panels + 1)
    js = np.array([bessel_j(m, z * ri / R) for ri in rs])
    return rs, js


def eigenbasis_disk(R: float, N: int, h: float) -> SpectralBasis:
    """First N Dirichlet disk modes J_m(z_{m,k} r/R) {cos, sin}(m theta).

    Eigenvalues (z_{m,k}/R)^2 carry multiplicity 2 for m >= 1; ties list
    the cosine branch first.  Amplitudes start from the Simpson radial
    normalization and are then rescaled to unit lattice norm; the raster
    correction is 1 + O(h^2).  Off-diagonal lattice Gram entries remain
    O(h^2) because the raster boundary does not follow the circle.
    """
    grid = grid_for_disk(R, h)
    x, y = grid.axes()
    xg, yg = x[:, None] - R, y[None, :] - R
    r = np.hypot(xg, yg)
    theta = np.arctan2(yg, xg)
    inside = grid.mask
    pairs = []
    for lam, m, parity, k in disk_spectrum(R, N):
        z = np.sqrt(lam) * R
        ang_mass = 2.0 * np.pi if m == 0 else np.pi
        c = 1.0 / np.sqrt(ang_mass * disk_radial_norm(m, z, R))
        rs, js = _radial_profile(m, z, R)
        radial = np.interp(r.ravel(), rs, js).reshape(r.shape)
        ang = np.cos(m * theta) if parity == 0 else np.sin(m * theta)
        phi = np.where(inside, c * radial * ang, 0.0)
        phi /= np.sqrt(grid.weight * (phi * phi).sum())
        tag = "cos" if parity == 0 else "sin"
        pairs.append(EigenPair(lam=lam, phi=phi, label=f"disk m={m} k={k} {tag}"))
    _check_ordering(pairs)
    return SpectralBasis(domain=Domain.disk(R), grid=grid, pairs=pairs)


# ---------------------------------------------------------------------------
# finite-difference path for raster masks


def fd_laplacian(grid: Grid2D) -> sp.csr_matrix:
    """5-point Dirichlet Laplacian on the grid's interior nodes."""
    shape = grid.shape
    alive = grid.mask if grid.mask is not None else np.ones(shape, dtype=bool)
    idx = -np.ones(shape, dtype=np.int64)
    n = int(alive.sum())
    idx[alive] = np.arange(n)
    rows = [idx[alive]]
    cols = [idx[alive]]
    vals = [np.full(n, 4.0)]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        lo_i, hi_i = max(di, 0), shape[0] + min(di, 0)
        lo_j, hi_j = max(dj, 0), shape[1] + min(dj, 0)
        src = np.zeros(shape, dtype=bool)
        src[lo_i:hi_i, lo_j:hi_j] = (
            alive[lo_i:hi_i, lo_j:hi_j]
            & alive[lo_i - di : hi_i - di, lo_j - dj : hi_j - dj]
        )
        rows.append(idx[src])
        cols.append(np.roll(idx, (di, dj), axis=(0, 1))[src])
        vals.append(np.full(int(src.sum()), -1.0))
    data = np.concatenate(vals) / grid.h**2
    return sp.csr_matrix(
        (data, (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def _fix_phases(vecs: np.ndarray) -> None:
    # deterministic sign: largest-magnitude component positive
    for col in vecs.T:
        if col[np.argmax(np.abs(col))] < 0.0:
            col *= -1.0


def _orthonormalize_clusters(lams: np.ndarray, vecs: np.ndarray) -> None:
    """QR inside each numerical eigenspace (relative width 1e-6).

    Degenerate eigenvectors are only defined up to rotation; fixing an
    orthonormal frame per cluster keeps densities reproducible.
    """
    i, n = 0, len(lams)
    while i < n:
        j = i + 1
        while j < n and lams[j] - lams[i] <= 1e-6 * max(abs(lams[i]), 1.0):
            j += 1
        if j - i > 1:
            q, rr = np.linalg.qr(vecs[:, i:j])
            vecs[:, i:j] = q * np.where(np.diag(rr) < 0.0, -1.0, 1.0)
        i = j


def eigenbasis_mask(domain: Domain, grid: Grid2D, N: int) -> SpectralBasis:
    """First N modes of the finite-difference Laplacian on a masked grid.

    Small problems are solved densely; larger ones use shift-invert
    Lanczos with a fixed start vector so repeat runs are bit-identical.
    Every returned mode satisfies ||A phi - lam phi|| <= 1e-8 ||phi||;
    a non-converged iteration raises instead of truncating silently.
    """
    ndof = grid.interior_count
    if N < 1 or 4 * N > ndof:
        raise ValueError(f"need >= 4N interior cells, have {ndof} for N={N}")
    A = fd_laplacian(grid)
    if ndof <= _DENSE_LIMIT:
        lams, vecs = eigh(A.toarray())
        lams, vecs = lams[:N], vecs[:, :N].copy()
    else:
        try:
            lams, vecs = spla.eigsh(
                A, k=N, sigma=0.0, which="LM", v0=np.full(ndof, 1.0 / np.sqrt(ndof))
            )
        except spla.ArpackNoConvergence as exc:
            raise RuntimeError(f"mask eigensolve did not converge: {exc}") from exc
        order = np.argsort(lams)
        lams, vecs = lams[order], vecs[:, order]
    res = np.linalg.norm(A @ vecs - vecs * lams[None, :], axis=0)
    worst = float((res / np.linalg.norm(vecs, axis=0)).max())
    if worst > 1e-8:
        raise RuntimeError(f"eigen residual {worst:.2e} exceeds 1e-8")
    _orthonormalize_clusters(lams, vecs)
    _fix_phases(vecs)
    alive = grid.mask if grid.mask is not None else np.ones(grid.shape, dtype=bool)
    pairs = []
    for n in range(N):
        phi = np.zeros(grid.shape)
        phi[alive] = vecs[:, n] / grid.h  # unit lattice norm -> unit L2 norm
        pairs.append(EigenPair(lam=float(lams[n]), phi=phi, label=f"fd n={n + 1}"))
    _check_ordering(pairs)
    return SpectralBasis(domain=domain, grid=grid, pairs=pairs)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeylTable:
    """Per-N spectral sums against their semiclassical normalizers.

    ratio_point = lam_N |Omega| / (4 pi N); ratio_log = harmonic_sum
    over (|Omega|/4pi) ln N.  Both tend to 1.  The N=1 log normalizer
    vanishes, so that row divides by 1 instead: well-defined, finite,
    and reported for completeness rather than accuracy.
    """

    N: np.ndarray
    ratio_point: np.ndarray
    harmonic_sum: np.ndarray
    log_normalizer: np.ndarray
    ratio_log: np.ndarray


def weyl_diagnostics(lambdas: np.ndarray, measure: float) -> WeylTable:
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or len(lambdas) == 0 or lambdas[0] <= 0:
        raise ValueError("need a nonempty positive eigenvalue sequence")
    Ns = np.arange(1, len(lambdas) + 1)
    ratio_point = lambdas * measure / (4.0 * np.pi * Ns)
    harmonic = np.cumsum(1.0 / lambdas)
    log_norm = measure / (4.0 * np.pi) * np.log(Ns)
    denom = np.where(Ns == 1, 1.0, log_norm)
    return WeylTable(
        N=Ns,
        ratio_point=ratio_point,
        harmonic_sum=harmonic,
        log_normalizer=log_norm,
        ratio_log=harmonic / denom,
    )


# ---------------------------------------------------------------------------
# binary container: magic, dimension count, reserved byte, mode count,
# grid shape, then little-endian float64 payload (eigenvalues first,
# stacked row-major samples after).  Grid spacing is not stored; it
# travels with the run configuration.


def save_basis(path: str | Path, basis: SpectralBasis) -> None:
    shape = basis.grid.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC_BASIS)
        fh.write(struct.pack("<BB", len(shape), 0))
        fh.write(struct.pack("<I", basis.size))
        fh.write(struct.pack(f"<{len(shape)}I", *shape))
        fh.write(basis.eigenvalues().astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(basis.stack(), dtype="<f8").tobytes())


def load_basis(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """Read back (eigenvalues, stacked samples) from the container."""
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC_BASIS:
        raise ValueError(f"{path}: not an eigenbasis container")
    d, _ = struct.unpack_from("<BB", raw, 4)
    (N,) = struct.unpack_from("<I", raw, 6)
    dims = struct.unpack_from(f"<{d}I", raw, 10)
    off = 10 + 4 * d
    lams = np.frombuffer(raw, dtype="<f8", count=N, offset=off)
    count = N * int(np.prod(dims))
    vals = np.frombuffer(raw, dtype="<f8", count=count, offset=off + 8 * N)
    return lams.copy(), vals.reshape((N, *dims)).copy()
