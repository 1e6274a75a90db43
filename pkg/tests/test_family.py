from dataclasses import replace

import numpy as np
import pytest

from mtlab.family import (
    family_from_eigenbasis,
    family_from_operator,
    gradient_gram,
    hoffmann_ostenhof_report,
    load_family,
    mix_family,
    save_family,
    sum_gradient_energies,
    verify_constraint,
)
from mtlab.grids import grid_for_rectangle
from mtlab.rng import orthogonal_matrix
from mtlab.schrodinger import assemble_schrodinger, laplacian_operator, potential_fixture
from mtlab.spectral import eigenbasis_rectangle


def square_family(N=25, n=64):
    basis = eigenbasis_rectangle(1.0, 1.0, N, h=1.0 / n)
    return family_from_eigenbasis(basis, N)


def test_gradient_gram_is_identity_for_sine_family():
    f = square_family()
    G = gradient_gram(f)
    # sampled sines diagonalize the discrete form: identity to rounding
    assert np.abs(G - np.eye(25)).max() < 1e-10
    assert sum_gradient_energies(f) == pytest.approx(25.0, abs=1e-10)


def test_single_member_energy_normalized():
    f = square_family(N=1, n=32)
    assert gradient_gram(f)[0, 0].real == pytest.approx(1.0, abs=1e-4)


def test_offdiagonals_small_at_two_resolutions():
    for n in (32, 64):
        f = square_family(N=16, n=n)
        G = gradient_gram(f) - np.eye(16)
        assert np.abs(G).max() < 1e-4


def test_discrete_energies_track_analytic_eigenvalues():
    f = square_family(N=25, n=256)
    rel = np.abs(f.energies - f.lambdas) / f.lambdas
    # energy defect lam h^2/12 at h=1/256
    assert rel.max() < 5e-4


def test_density_mass_identity():
    f = square_family(N=25, n=64)
    mass = f.grid.integrate(f.density())
    assert mass == pytest.approx(float(np.sum(1.0 / f.energies)), rel=1e-12)
    # against analytic eigenvalues the match carries the h^2 energy defect
    assert mass == pytest.approx(float(np.sum(1.0 / f.lambdas)), rel=5e-3)


def test_resolution_budget_enforced():
    basis = eigenbasis_rectangle(1.0, 1.0, 40, h=1.0 / 16)
    with pytest.raises(ValueError, match="resolution budget"):
        family_from_eigenbasis(basis, 40)  # 40*16 > 15^2


def test_operator_family_reduces_to_eigenbasis_family_for_V0():
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 24)
    op = laplacian_operator(grid)
    f_op = family_from_operator(op, 6)
    basis = eigenbasis_rectangle(1.0, 1.0, 6, h=1.0 / 24)
    f_eig = family_from_eigenbasis(basis, 6)
    assert np.allclose(f_op.energies, f_eig.energies, rtol=1e-10)
    # densities are rotation-invariant, so they agree even on the
    # degenerate level where individual members may differ by sign
    rho_gap = np.abs(f_op.density() - f_eig.density()).max()
    assert rho_gap < 1e-10 * f_eig.density().max()


def test_operator_family_constant_shift():
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 24)
    op = laplacian_operator(grid)
    mu1 = op.spectrum()[0][0]
    LV = assemble_schrodinger(op, potential_fixture(f"const:{0.5 * mu1}", grid))
    f = family_from_operator(LV, 4)
    base_mu = op.spectrum()[0][:4]
    assert np.allclose(f.energies, base_mu - 0.5 * mu1, rtol=1e-9)


def test_operator_family_refuses_closed_gap():
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 24)
    op = laplacian_operator(grid)
    mu1 = op.spectrum()[0][0]
    LV = assemble_schrodinger(op, potential_fixture(f"const:{mu1}", grid))
    with pytest.raises(ValueError, match="presumes L > 0"):
        family_from_operator(LV, 2)


def test_verify_constraint_eigen_family_saturates():
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 24)
    f = family_from_operator(laplacian_operator(grid), 8)
    r = verify_constraint(f, laplacian_operator(grid))
    assert r.status == "PASS"
    assert r.lhs == pytest.approx(1.0, abs=1e-8)


def test_verify_constraint_scaling_fails_quadratically():
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 24)
    f = family_from_operator(laplacian_operator(grid), 4)
    scaled = replace(f, members=1.1 * f.members)
    r = verify_constraint(scaled, laplacian_operator(grid))
    assert r.status == "FAIL"
    assert r.lhs == pytest.approx(1.21, abs=1e-8)


def test_verify_constraint_dimension_mismatch():
    f = square_family(N=4, n=32)
    with pytest.raises(ValueError, match="does not match"):
        verify_constraint(f, laplacian_operator(grid_for_rectangle(1.0, 1.0, 1.0 / 24)))


def test_mixing_preserves_density_and_constraint():
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 24)
    f = family_from_operator(laplacian_operator(grid), 10)
    mixed = mix_family(f, orthogonal_matrix(10, seed=3))
    gap = np.abs(mixed.density() - f.density()).max()
    assert gap < 1e-10 * f.density().max()
    assert verify_constraint(mixed, laplacian_operator(grid)).status == "PASS"


def test_mixing_rejects_nonorthogonal():
    f = square_family(N=3, n=32)
    with pytest.raises(ValueError, match="not orthogonal"):
        mix_family(f, np.ones((3, 3)))


def test_complex_rotation_block_smoke():
    # the only complex path exercised: a 2x2 unitary phase block
    f = square_family(N=2, n=32)
    U = np.array([[1.0, 1.0j], [1.0j, 1.0]]) / np.sqrt(2.0)
    mixed = mix_family(f, U)
    assert np.iscomplexobj(mixed.members)
    gap = np.abs(mixed.density() - f.density()).max()
    assert gap < 1e-12 * f.density().max()
    grid = grid_for_rectangle(1.0, 1.0, 1.0 / 32)
    assert verify_constraint(mixed, laplacian_operator(grid)).status == "PASS"


def test_hoffmann_ostenhof_bound_and_excess_trend():
    reports = {}
    for n in (64, 128):
        f = square_family(N=10, n=n)
        reports[n] = hoffmann_ostenhof_report(f)
    assert all(r.status == "PASS" for r in reports.values())
    e_coarse = reports[64].extra["excess_over_N"]
    e_fine = reports[128].extra["excess_over_N"]
    assert e_fine <= max(0.5 * e_coarse, 1e-12)


def test_family_container_roundtrip(tmp_path):
    f = square_family(N=5, n=32)
    p = tmp_path / "fam.mtfa"
    save_family(p, f)
    kind, energies, members = load_family(p)
    assert kind == f.kind
    assert np.array_equal(energies, f.energies)
    assert np.array_equal(members, f.members)


def test_family_container_rejects_complex_and_mixed(tmp_path):
    f = square_family(N=2, n=32)
    mixed = mix_family(f, orthogonal_matrix(2, seed=1))
    with pytest.raises(ValueError, match="no per-member record"):
        save_family(tmp_path / "m.mtfa", mixed)
    cplx = mix_family(f, np.array([[1.0, 1.0j], [1.0j, 1.0]]) / np.sqrt(2.0))
    with pytest.raises(ValueError, match="complex"):
        save_family(tmp_path / "c.mtfa", cplx)
