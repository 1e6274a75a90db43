import math

import numpy as np
import pytest

from mtlab.constants import bessel_zero, lambda_gn
from mtlab.cutoff import (
    CutoffSpec,
    check_lemma21_band,
    check_lemma21_low,
    check_lemma34,
    cutoff_project,
    pointwise_chain_ratio,
    proof_pipeline,
    rumin_layer_cake,
    save_heatmap_csv,
)
from mtlab.family import Family, family_from_eigenbasis
from mtlab.spectral import eigenbasis_disk, eigenbasis_rectangle

Z01 = bessel_zero(0, 1)


def square_family(N, h, modes=None):
    basis = eigenbasis_rectangle(1.0, 1.0, modes or N, h)
    return family_from_eigenbasis(basis, N)


# ---------------------------------------------------------------------------
# spec validation


def test_spec_rejects_bad_window():
    with pytest.raises(ValueError, match="0 < delta < ell"):
        CutoffSpec(10.0, 10.0, 1.0, 4, 256)
    with pytest.raises(ValueError, match="0 < delta < ell"):
        CutoffSpec(-1.0, 10.0, 1.0, 4, 256)


def test_spec_rejects_thin_padding():
    with pytest.raises(ValueError, match="insufficient padding"):
        CutoffSpec(1.0, 10.0, 1.0, 1, 256)


def test_spec_rejects_non_power_of_two():
    with pytest.raises(ValueError, match="power of two"):
        CutoffSpec(1.0, 10.0, 1.0, 4, 96)
    f = square_family(1, 1.0 / 24, modes=2)
    with pytest.raises(ValueError, match="power of two"):
        CutoffSpec.for_grid(f.grid, 1.0, 10.0)  # 4 * 24 = 96


def test_spec_grid_mismatch():
    f32 = square_family(2, 1.0 / 32)
    f16 = square_family(2, 1.0 / 16)
    spec = CutoffSpec.for_grid(f32.grid, 5.0, 100.0)
    with pytest.raises(ValueError, match="does not match"):
        cutoff_project(f16, spec)


def test_precomputed_densities_must_match_spec():
    f = square_family(2, 1.0 / 32)
    spec_a = CutoffSpec.for_grid(f.grid, 5.0, 100.0)
    spec_b = CutoffSpec.for_grid(f.grid, 6.0, 100.0)
    dens = cutoff_project(f, spec_a)
    with pytest.raises(ValueError, match="different cutoff spec"):
        check_lemma21_band(f, spec_b, dens=dens)


# ---------------------------------------------------------------------------
# projection limits and exactness


def test_full_capture_limit():
    f = square_family(3, 1.0 / 32)
    spec = CutoffSpec.for_grid(f.grid, 1e9, 2e9)
    dens = cutoff_project(f, spec)
    rho = f.density()
    assert np.max(np.abs(dens.low_interior() - rho)) < 1e-10
    assert dens.rho_band.max() < 1e-20
    assert dens.rho_high.max() < 1e-20


def test_dc_only_low_limit():
    # delta below the first nonzero lattice frequency keeps only the mean
    f = square_family(1, 1.0 / 32)
    spec = CutoffSpec.for_grid(f.grid, 1e-10, 1e9)
    dens = cutoff_project(f, spec)
    rho = f.density()
    assert dens.rho_low.max() < 5e-3
    assert np.max(np.abs(dens.band_interior() - rho)) < 0.1 * rho.max()


def test_plancherel_split_within_tolerance():
    f = square_family(1, 1.0 / 32)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, 1e3)
    dens = cutoff_project(f, spec)
    assert dens.plancherel_defect <= 1e-10
    assert dens.rho_low.min() >= 0.0
    assert dens.rho_band.min() >= 0.0
    assert dens.rho_high.min() >= 0.0


def test_triangle_inequality_pointwise():
    f = square_family(6, 1.0 / 32, modes=8)
    lam1 = float(f.lambdas[0])
    dens = cutoff_project(f, CutoffSpec.for_grid(f.grid, lam1 / 2.0, 200.0))
    full = cutoff_project(f, CutoffSpec.for_grid(f.grid, 200.0, 400.0))
    lhs = np.sqrt(full.rho_low)  # sqrt of rho^{<= ell}
    rhs = np.sqrt(dens.rho_low) + np.sqrt(dens.rho_band)
    assert np.all(lhs <= rhs + 1e-12)


def test_band_energy_monotone_in_ell():
    # widening the band adds whole spectral shells, so the band energy is
    # ordered exactly; the pointwise values are not (sharp projections
    # interfere), and the counterexample below keeps that fact on record
    f = square_family(4, 1.0 / 32, modes=6)
    lam1 = float(f.lambdas[0])
    d1 = cutoff_project(f, CutoffSpec.for_grid(f.grid, lam1 / 2.0, 150.0))
    d2 = cutoff_project(f, CutoffSpec.for_grid(f.grid, lam1 / 2.0, 600.0))
    cell = f.grid.h**2
    assert cell * d1.rho_band.sum() <= cell * d2.rho_band.sum() + 1e-12
    assert np.any(d1.rho_band > d2.rho_band + 1e-12)


def test_threshold_tie_counts_as_low():
    f = square_family(1, 1.0 / 32)
    S = 4.0  # padding 4 on the unit square
    w_shell = (2.0 * math.pi / S) ** 2
    on_tie = cutoff_project(f, CutoffSpec.for_grid(f.grid, w_shell, 1e4))
    below = cutoff_project(f, CutoffSpec.for_grid(f.grid, w_shell * (1 - 1e-12), 1e4))
    mass_on = on_tie.rho_low.sum()
    mass_below = below.rho_low.sum()
    assert mass_on > mass_below * (1.0 + 1e-6)


def test_rejects_complex_members():
    f = square_family(2, 1.0 / 32)
    cf = Family(
        members=f.members.astype(complex),
        kind=f.kind,
        domain=f.domain,
        grid=f.grid,
        energies=f.energies,
        lambdas=f.lambdas,
    )
    with pytest.raises(ValueError, match="real"):
        cutoff_project(cf, CutoffSpec.for_grid(f.grid, 5.0, 100.0))


# ---------------------------------------------------------------------------
# band bound


def test_band_bound_passes_and_uses_box_max():
    f = square_family(50, 1.0 / 64, modes=55)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, 1e3)
    r = check_lemma21_band(f, spec)
    assert r.check == "cutoff.band-bound"
    assert r.status == "PASS"
    assert math.isclose(r.rhs, math.log(1e3 / (lam1 / 2.0)) / (4 * math.pi), rel_tol=1e-12)
    assert 0.0 < r.lhs < r.rhs
    assert r.disc_error == 0.0


def test_band_bound_richardson_companion():
    fine = square_family(10, 1.0 / 64, modes=12)
    coarse = square_family(10, 1.0 / 32, modes=12)
    lam1 = float(fine.lambdas[0])
    spec = CutoffSpec.for_grid(fine.grid, lam1 / 2.0, 500.0)
    r = check_lemma21_band(fine, spec, f_coarse=coarse)
    assert r.status == "PASS"
    assert 0.0 < r.disc_error < 0.05


def test_band_bound_value_one_window():
    f = square_family(1, 1.0 / 32)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1, lam1 * math.exp(4.0 * math.pi))
    r = check_lemma21_band(f, spec)
    assert math.isclose(r.rhs, 1.0, rel_tol=1e-12)
    assert r.status == "PASS"


def test_band_bound_narrow_window_limit():
    # window (delta, 1.0001 delta] holding no lattice frequency: band is 0
    f = square_family(1, 1.0 / 32)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, (lam1 / 2.0) * 1.0001)
    r = check_lemma21_band(f, spec)
    assert r.lhs == 0.0
    assert r.status == "PASS"


def test_band_bound_guards():
    f = square_family(2, 1.0 / 32)
    spec = CutoffSpec.for_grid(f.grid, 5.0, 100.0)
    mixed = Family(
        members=f.members,
        kind="operator-dominated",
        domain=f.domain,
        grid=f.grid,
        energies=f.energies,
        lambdas=f.lambdas,
    )
    with pytest.raises(ValueError, match="gradient-orthonormal"):
        check_lemma21_band(mixed, spec)


def test_pad_doubling_stability():
    f = square_family(10, 1.0 / 32, modes=12)
    lam1 = float(f.lambdas[0])
    m4 = cutoff_project(f, CutoffSpec.for_grid(f.grid, lam1 / 2.0, 500.0, padding=4))
    m8 = cutoff_project(f, CutoffSpec.for_grid(f.grid, lam1 / 2.0, 500.0, padding=8))
    b4, b8 = m4.rho_band.max(), m8.rho_band.max()
    assert abs(b4 - b8) / b8 < 0.05


# ---------------------------------------------------------------------------
# low bound


def test_low_bound_square_with_diagnostic_chain():
    f = square_family(50, 1.0 / 64, modes=55)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, 1e3)
    r = check_lemma21_low(f, spec)
    assert r.status == "PASS"
    assert math.isclose(
        r.rhs, (lam1 / 2.0) / (4.0 * math.pi**2 * Z01**2), rel_tol=1e-12
    )
    ex = r.extra
    # exact discrete chain: density <= form energy <= count bound
    assert ex["diag_density"] <= ex["diag_grad_energy"] * (1.0 + 1e-8)
    assert ex["diag_grad_energy"] <= ex["diag_count_bound"] * (1.0 + 1e-8)
    # lattice count bound sits near the continuum disk-area value
    assert abs(ex["diag_count_bound"] - ex["diag_kernel_bound"]) < 0.05 * ex["diag_kernel_bound"]
    assert ex["diag_density"] == r.lhs or ex["diag_density"] <= r.lhs


def test_low_bound_unit_rhs():
    f = square_family(50, 1.0 / 64, modes=55)
    spec = CutoffSpec.for_grid(f.grid, 4.0 * math.pi**2 * Z01**2, 1e4)
    r = check_lemma21_low(f, spec)
    assert math.isclose(r.rhs, 1.0, rel_tol=1e-12)
    assert r.status == "PASS"


def test_low_bound_disk_faber_krahn_tight():
    # unit-area disk: the Faber-Krahn step is an equality, so the
    # lambda_1 diagnostic route lands on the reported bound itself
    R = 1.0 / math.sqrt(math.pi)
    h = 2.0 * R / 64.0
    f = family_from_eigenbasis(eigenbasis_disk(R, 10, h), 10)
    lam1 = float(f.lambdas[0])
    assert math.isclose(lam1, math.pi * Z01**2, rel_tol=1e-12)
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, 500.0)
    r = check_lemma21_low(f, spec)
    assert r.status == "PASS"
    ratio = r.extra["diag_kernel_bound"] / r.rhs
    assert abs(ratio - 1.0) < 0.05  # discrete lambda_1 vs continuum only


# ---------------------------------------------------------------------------
# general-d pair


def test_general_d_reduces_to_planar_band():
    f = square_family(10, 1.0 / 32, modes=12)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, 300.0)
    dens = cutoff_project(f, spec)
    r2 = check_lemma34(f, spec, dens=dens)
    rb = check_lemma21_band(f, spec, dens=dens)
    assert r2.status == "PASS"
    assert math.isclose(r2.lhs, rb.lhs, rel_tol=1e-12)
    assert math.isclose(r2.rhs, rb.rhs, rel_tol=1e-12)
    # the low constant is the Lambda_2^4-weakened Bessel-zero constant
    expected = lambda_gn(2) ** 4 / (4.0 * math.pi) * (4.0 * math.pi**2 * Z01**2)
    assert math.isclose(r2.extra["low_constant_ratio"], expected, rel_tol=1e-12)
    assert r2.extra["low_constant_ratio"] > 1.0
    assert r2.extra["low_lhs"] <= r2.extra["low_rhs"]


def test_general_d_symbol_exponent_guard():
    f = square_family(2, 1.0 / 32)
    spec = CutoffSpec.for_grid(f.grid, 5.0, 100.0, s=0.5)
    with pytest.raises(ValueError, match="d/2"):
        check_lemma34(f, spec, d=2)


def test_general_d_allowance_folds_into_disc():
    f = square_family(10, 1.0 / 32, modes=12)
    lam1 = float(f.lambdas[0])
    spec = CutoffSpec.for_grid(f.grid, lam1 / 2.0, 300.0)
    r = check_lemma34(f, spec, allowance=0.05)
    assert r.disc_error == pytest.approx(0.05)
    assert r.extra["allowance"] == 0.05


# ---------------------------------------------------------------------------
# layer cake


def test_layer_cake_identity_and_lower_bound():
    f = square_family(25, 1.0 / 64, modes=30)
    r = rumin_layer_cake(f)
    assert r.status == "PASS"
    assert r.extra["identity_rel_diff"] <= 1e-10
    assert r.lhs <= r.rhs
    assert r.lhs > 0.2 * r.rhs
    # zero-extension transform energy runs slightly above the constraint
    assert 0.0 < r.extra["spectral_energy_offset"] < 1.0
    assert r.extra["truncated_tail"] == 0.0


def test_layer_cake_short_grid_warns():
    f = square_family(25, 1.0 / 64, modes=30)
    lam1 = float(f.lambdas[0])
    grid = np.geomspace(lam1 / 2.0, 50.0, 12)
    r = rumin_layer_cake(f, ell_grid=grid)
    assert r.status == "WARN"
    assert r.extra["truncated_tail"] > 0.0
    assert r.lhs <= r.rhs


def test_layer_cake_needs_levels_or_eigenvalues():
    f = square_family(4, 1.0 / 32, modes=6)
    anon = Family(
        members=f.members,
        kind=f.kind,
        domain=f.domain,
        grid=f.grid,
        energies=f.energies,
        lambdas=None,
    )
    with pytest.raises(ValueError, match="ell_grid"):
        rumin_layer_cake(anon)
    with pytest.raises(ValueError, match="strictly increasing"):
        rumin_layer_cake(f, ell_grid=np.array([10.0, 5.0]))


def test_layer_cake_level_grid_monotone_refinement():
    # more levels can only improve the trapezoid lower bound materially
    f = square_family(9, 1.0 / 32, modes=12)
    lam = np.asarray(f.lambdas)
    lo, hi = 0.5 * lam.min(), 1e5
    r16 = rumin_layer_cake(f, ell_grid=np.geomspace(lo, hi, 16))
    r64 = rumin_layer_cake(f, ell_grid=np.geomspace(lo, hi, 64))
    assert r64.lhs >= r16.lhs - 0.05 * abs(r16.lhs)


# ---------------------------------------------------------------------------
# Bessel spot check in the transform model


def test_bessel_spot_check_random_direction():
    from mtlab.rng import SplitMix64

    f = square_family(8, 1.0 / 32, modes=10)
    P = 128
    S = P * f.grid.h
    freq = np.fft.fftfreq(P, d=f.grid.h)
    W = (2.0 * math.pi) ** 2 * (freq[:, None] ** 2 + freq[None, :] ** 2)
    vecs = []
    for u in f.members:
        pad = np.zeros((P, P))
        pad[1:32, 1:32] = u
        c = np.fft.fft2(pad) * f.grid.h**2
        vecs.append((np.sqrt(W) * c / S).ravel())
    V = np.array(vecs)
    g = SplitMix64(2024)
    w = g.normals((V.shape[1],)) + 1j * g.normals((V.shape[1],))
    w /= np.linalg.norm(w)
    total = float(np.sum(np.abs(V.conj() @ w) ** 2))
    assert total <= 1.05  # near-orthonormal stack: Bessel up to model defect


# ---------------------------------------------------------------------------
# proof chain


def test_pointwise_chain_holds_on_synthetic_grid():
    for eps in (0.05, 0.1, 0.25):
        kappa = 1.0 - (1.0 - eps) ** 0.25
        for r in (1.01, 1.2, 1.5, 2.0, 3.0, 5.0):
            assert pointwise_chain_ratio(r, eps, 1.0, kappa) >= 1.0


def test_pointwise_chain_scales_linearly_in_delta():
    eps = 0.25
    kappa = 1.0 - (1.0 - eps) ** 0.25
    r1 = pointwise_chain_ratio(2.0, eps, 1.0, kappa)
    r2 = pointwise_chain_ratio(2.0, eps, 7.5, kappa)
    assert math.isclose(r1, r2, rel_tol=1e-12)  # ratio is delta-free


def test_proof_pipeline_pass():
    f = square_family(100, 1.0 / 64, modes=110)
    r = proof_pipeline(f, 0.25)
    assert r.status == "PASS"
    assert r.lhs <= r.rhs
    kappa = 1.0 - 0.75**0.25
    assert math.isclose(r.extra["kappa"], kappa, rel_tol=1e-12)
    delta = 4.0 * math.pi**2 * Z01**2 * kappa**2
    assert math.isclose(r.extra["delta"], delta, rel_tol=1e-12)


def test_proof_pipeline_empty_high_region():
    f = square_family(1, 1.0 / 32)
    r = proof_pipeline(f, 0.25)
    assert r.status == "PASS"
    assert r.lhs == 0.0
    assert r.extra["points_above_one"] == 0
    assert r.extra["chain_points"] == 0


def test_proof_pipeline_rejects_large_epsilon():
    f = square_family(1, 1.0 / 32)
    for eps in (0.3, 0.0, 1.0):
        r = proof_pipeline(f, eps)
        assert r.status == "REJECTED-INPUT"
        assert "1/4" in r.extra["reason"]


# ---------------------------------------------------------------------------
# delimited output


def test_heatmap_csv_roundtrip(tmp_path):
    vals = np.arange(6.0).reshape(2, 3)
    path = tmp_path / "field.csv"
    save_heatmap_csv(path, vals, 0.5)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 7
    first = lines[1].split(",")
    assert float(first[0]) == 0.5 and float(first[1]) == 0.5 and float(first[2]) == 0.0
    last = lines[-1].split(",")
    assert float(last[0]) == 1.0 and float(last[1]) == 1.5 and float(last[2]) == 5.0


def test_heatmap_csv_one_dimensional(tmp_path):
    path = tmp_path / "line.csv"
    save_heatmap_csv(path, np.array([1.0, 2.0]), 0.25)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,value"
    assert len(lines) == 3
