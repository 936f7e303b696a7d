"""Dilute-limit upper-bound pipeline and window-localization checks."""

import numpy as np
import pytest

from liqdrop.droplet import OPT_ENERGY_PER_VOLUME, OPT_MASS, OPT_RADIUS
from liqdrop.expansion import (
    build_trial_points,
    cell_pair_interaction,
    expansion_sweep,
    extract_coefficients,
    gs_coulomb_inequality_check,
    gs_perimeter_identity_check,
    lower_simplex_rhs,
    upper_bound_e,
)
from liqdrop.geom import Ball, BallUnion, Cube
from liqdrop.jellium import crystal_positions

# residual coefficient of the bcc crystal bracket (independently derived):
# per-particle convention equals (5/2)^(2/3) * (bcc lattice-sum value);
# the single-count convention differs at finite point count
RESIDUAL_PER_PARTICLE = -2.6602957899652124
RESIDUAL_SINGLE_N16 = -1.6880721776306877


# ---------------------------------------------------------------------------
# trial point construction
# ---------------------------------------------------------------------------


def test_build_trial_points_structure():
    tp = build_trial_points(16, cell=10.0, seed=1, restarts=2, hops=1)
    assert tp.optimized.shape == (16, 3)
    assert tp.lattice.shape == (16, 3)
    # both families are recentered
    np.testing.assert_allclose(tp.optimized.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(tp.lattice.mean(axis=0), 0.0, atol=1e-12)
    # the grid points stay away from the cube boundary and from each other
    assert tp.margin > 0.0
    assert np.abs(tp.lattice).max() <= 5.0 - tp.margin + 1e-12
    assert tp.separation > 0.0
    assert tp.warning is None


def test_build_trial_points_deterministic():
    a = build_trial_points(8, cell=4.0, seed=7, restarts=2, hops=1)
    b = build_trial_points(8, cell=4.0, seed=7, restarts=2, hops=1)
    assert a.optimized.tobytes() == b.optimized.tobytes()
    assert a.lattice.tobytes() == b.lattice.tobytes()


def test_build_trial_points_rejects_empty():
    with pytest.raises(ValueError):
        build_trial_points(0, cell=1.0)


# ---------------------------------------------------------------------------
# upper bound with frozen crystal residuals
# ---------------------------------------------------------------------------


def crystal_report(rho, convention):
    n = 16
    cell = (OPT_MASS * n / rho) ** (1.0 / 3.0)
    pts = crystal_positions("bcc", 2, cell)
    return upper_bound_e(rho, n=n, points=pts, convention=convention)


def test_upper_bound_crystal_residual_per_particle():
    rep = crystal_report(1e-3, "per-particle")
    assert rep.residual_coefficient_no_quadratic == pytest.approx(
        RESIDUAL_PER_PARTICLE, abs=1e-9
    )
    # the quadratic term is the analytic droplet-size correction
    assert rep.quadratic_term == pytest.approx(
        2.0 * np.pi * OPT_RADIUS**2 * 1e-6, rel=1e-12
    )
    assert rep.upper_bound == pytest.approx(
        OPT_ENERGY_PER_VOLUME * 1e-3
        + RESIDUAL_PER_PARTICLE * 1e-4
        + rep.quadratic_term,
        rel=1e-10,
    )


def test_upper_bound_crystal_residual_single_convention():
    rep = crystal_report(1e-3, "single")
    assert rep.residual_coefficient_no_quadratic == pytest.approx(
        RESIDUAL_SINGLE_N16, abs=1e-9
    )
    assert rep.convention == "single"


def test_upper_bound_validates_inputs():
    with pytest.raises(ValueError):
        upper_bound_e(0.5)  # too dense for the dilute pipeline
    with pytest.raises(ValueError):
        upper_bound_e(1e-3, n=1)
    with pytest.raises(ValueError):
        crystal_report(1e-3, "sideways")


# ---------------------------------------------------------------------------
# sweep: exact rescaling across the density grid
# ---------------------------------------------------------------------------


def test_expansion_sweep_scales_exactly():
    rhos = [1e-3, 1e-4, 1e-5]
    pp, single = expansion_sweep(rhos, n=8, seed=0, restarts=2, hops=1)
    assert len(pp) == len(single) == 3
    # the same unit-cell minimizer is rescaled, so the residual coefficient
    # (before the quadratic term) is exactly density-independent
    r0 = pp[0].residual_coefficient_no_quadratic
    for rep in pp[1:]:
        assert rep.residual_coefficient_no_quadratic == pytest.approx(r0, rel=1e-12)
    # conventions differ exactly by the (n-1) extra self-image shares
    for a, b in zip(pp, single):
        assert a.convention == "per-particle" and b.convention == "single"
        assert a.self_image_term == pytest.approx(8 * b.self_image_term, rel=1e-12)
        assert a.pair_energy == b.pair_energy
    # an 8-point optimized cell cannot beat the crystal residual by much
    assert r0 == pytest.approx(RESIDUAL_PER_PARTICLE, rel=0.05)


# ---------------------------------------------------------------------------
# coefficient extraction
# ---------------------------------------------------------------------------


def test_extract_coefficients_recovers_synthetic_data():
    rhos = np.array([1e-3, 3e-4, 1e-4, 3e-5])
    c1, c2 = OPT_ENERGY_PER_VOLUME, -2.66
    vals = c1 * rhos + c2 * rhos ** (4.0 / 3.0) + 2.0 * np.pi * OPT_RADIUS**2 * rhos**2
    got1, got2, resid = extract_coefficients(rhos, vals, quadratic="known")
    assert got1 == pytest.approx(c1, rel=1e-12)
    assert got2 == pytest.approx(c2, rel=1e-10)
    assert resid < 1e-16
    # "fit" mode identifies the quadratic column on its own
    got1f, got2f, _ = extract_coefficients(rhos, vals, quadratic="fit")
    assert got1f == pytest.approx(c1, rel=1e-9)
    assert got2f == pytest.approx(c2, rel=1e-6)
    # "ignore" mode biases the fit when a quadratic term is present
    vals_pure = c1 * rhos + c2 * rhos ** (4.0 / 3.0)
    got1i, got2i, residi = extract_coefficients(rhos, vals_pure, quadratic="ignore")
    assert got1i == pytest.approx(c1, rel=1e-12)
    assert got2i == pytest.approx(c2, rel=1e-10)
    assert residi < 1e-16


def test_extract_coefficients_guards():
    with pytest.raises(ValueError):
        extract_coefficients([1e-3, 1e-4], [1.0, 2.0])  # too few densities
    with pytest.raises(ValueError):
        extract_coefficients(
            [1e-3, 9e-4, 8e-4, 7e-4], [1.0, 2.0, 3.0, 4.0]
        )  # span under one decade
    with pytest.raises(ValueError):
        extract_coefficients([1e-3, 3e-4, 1e-4, 3e-5], [1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        extract_coefficients(
            [1e-3, 3e-4, 1e-4, 3e-5], [1.0, 2.0, 3.0, 4.0], quadratic="maybe"
        )


# ---------------------------------------------------------------------------
# window-localization spot checks (small samples; the acceptance suite
# runs the full-size versions)
# ---------------------------------------------------------------------------


def test_perimeter_identity_small_sample():
    omega = BallUnion(centers=np.zeros((1, 3)), radii=np.array([1.0]))
    rep = gs_perimeter_identity_check(omega, ell=3.0, samples=20_000, seed=1)
    assert rep.analytic == pytest.approx(4.0 * np.pi, rel=1e-14)
    assert 0.0 < rep.sigma < 0.6
    assert abs(rep.mc_value - rep.analytic) <= 5.0 * rep.sigma
    again = gs_perimeter_identity_check(omega, ell=3.0, samples=20_000, seed=1)
    assert again.mc_value == rep.mc_value  # bitwise deterministic


def test_coulomb_inequality_small_sample():
    omega = BallUnion(
        centers=np.array([[-1.2, 0.0, 0.0], [1.2, 0.3, 0.0]]),
        radii=np.array([0.5, 0.6]),
    )
    lam = Cube(side=8.0)
    rep = gs_coulomb_inequality_check(
        omega, lam, rho=0.05, ell=5.0, samples_per_pair=10_000, seed=2
    )
    assert rep.passed
    assert rep.margin_in_sigmas >= -3.0
    assert rep.sigma > 0.0


# ---------------------------------------------------------------------------
# lower-bound bracket and cell decay
# ---------------------------------------------------------------------------


def test_lower_simplex_rhs_smoke():
    rep = lower_simplex_rhs(1e-4, 3.0, depth=2, seed=0, starts=1)
    assert np.isfinite(rep.value)
    assert rep.cell == pytest.approx(3.0 * (1e-4) ** (-1.0 / 3.0), rel=1e-12)
    assert rep.rho == 1e-4
    assert rep.value == pytest.approx(
        rep.grand_canonical_value / ((1e-4) ** (1.0 / 3.0) * 27.0), rel=1e-12
    )
    with pytest.raises(ValueError):
        lower_simplex_rhs(1e-1, 3.0)
    with pytest.raises(ValueError):
        lower_simplex_rhs(1e-4, 10.0)


def test_lower_simplex_rhs_zero_density():
    rep = lower_simplex_rhs(0.0, 3.0)
    assert rep.value == 0.0
    assert "empty" in rep.note


def test_cell_pair_interaction_symmetry_and_decay():
    cell = 4.0
    pts = crystal_positions("bcc", 2, cell) - cell / 2.0
    e2 = cell_pair_interaction(pts, cell, (2.0 * cell, 0.0, 0.0))
    e2m = cell_pair_interaction(pts, cell, (-2.0 * cell, 0.0, 0.0))
    e4 = cell_pair_interaction(pts, cell, (4.0 * cell, 0.0, 0.0))
    assert e2 == pytest.approx(e2m, rel=1e-10)
    assert abs(e4) < abs(e2)
    # neutral cells: interaction is tiny compared to the raw charge scale
    raw = (len(pts) * OPT_MASS) ** 2 / (2.0 * cell)
    assert abs(e2) < 1e-3 * raw
