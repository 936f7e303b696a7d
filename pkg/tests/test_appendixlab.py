"""Boundary screening layers, ball-packing schedules, averaged limits."""

from fractions import Fraction

import numpy as np
import pytest

from liqdrop.appendixlab import (
    far_field_exponent,
    piece_diagnostics,
    piece_potential,
    quadrupole_layer,
    recursion_limit,
    swiss_cheese,
)
from liqdrop.geom import Ball, Cube

BALL = Ball(radius=1.0, center=(0.0, 0.0, 0.0))


@pytest.fixture(scope="module")
def small_layer():
    return quadrupole_layer(BALL, eps=0.125, subdiv=4, rho=0.2)


@pytest.fixture(scope="module")
def cube_layer():
    return quadrupole_layer(Cube(side=4.0), eps=0.25, subdiv=4, rho=0.3)


# ---------------------------------------------------------------------------
# construction invariants
# ---------------------------------------------------------------------------


def test_layer_counts_are_consistent(small_layer):
    counts = small_layer.counts()
    assert counts["merged"] + counts["exterior-cube"] + counts["subcell"] == len(
        small_layer
    )
    kinds = small_layer.kinds()
    assert len(kinds) == len(small_layer)
    for key in ("merged", "exterior-cube", "subcell"):
        assert int((kinds == key).sum()) == counts[key]
    assert counts["merged"] > 0
    assert counts["subcell"] > 0


def test_every_piece_is_charge_neutral(small_layer):
    assert np.abs(small_layer.charges()).max() < 1e-15


def test_every_piece_is_dipole_free(small_layer):
    eps = small_layer.eps
    assert np.abs(small_layer.dipoles()).max() < 1e-12 * eps**4


def test_inner_cubes_stay_inside_their_pieces(small_layer):
    assert small_layer.containment_margins().min() > 0.0


def test_perimeter_constant_is_uniform(small_layer):
    # Per(inner cube) <= C rho^(2/3) eps^2 for every piece with one C
    assert 0.0 < small_layer.perimeter_constant() <= 10.0
    sides = small_layer.inner_sides()
    vols = small_layer.volumes()
    np.testing.assert_allclose(sides**3, small_layer.rho * vols, rtol=1e-12)
    np.testing.assert_allclose(
        small_layer.inner_perimeters(), 6.0 * sides**2, rtol=1e-15
    )


def test_piece_count_scales_with_shell_volume(small_layer):
    # piece count stays proportional to (shell volume / tile volume)
    assert small_layer.piece_count_constant() < 20.0
    assert small_layer.total_volume() < small_layer.shell_volume()


def test_layer_build_is_deterministic():
    a = quadrupole_layer(BALL, eps=0.125, subdiv=4, rho=0.2)
    b = quadrupole_layer(BALL, eps=0.125, subdiv=4, rho=0.2)
    assert a.volumes().tobytes() == b.volumes().tobytes()
    assert a.dipoles().tobytes() == b.dipoles().tobytes()
    assert list(a.kinds()) == list(b.kinds())


def test_merged_pieces_decay_like_quadrupoles(small_layer):
    kinds = small_layer.kinds()
    for i in np.nonzero(kinds == "merged")[0][:3]:
        d = piece_diagnostics(small_layer[i])
        assert abs(d.charge) < 1e-15
        assert np.abs(d.dipole).max() < 1e-15
        assert 2.7 <= d.decay_exponent <= 3.3


def test_exterior_cubes_decay_faster(cube_layer):
    # a centered cube-in-box piece has no charge, dipole, or quadrupole and
    # its potential falls off one power faster than the quadrupole rate
    kinds = cube_layer.kinds()
    ext = np.nonzero(kinds == "exterior-cube")[0]
    assert len(ext) > 0
    d = piece_diagnostics(cube_layer[ext[0]])
    assert d.charge == 0.0
    assert np.abs(d.dipole).max() == 0.0
    assert np.abs(d.quadrupole).max() == 0.0
    assert d.decay_exponent > 4.0


def test_commensurate_cube_has_no_merged_pieces(cube_layer):
    counts = cube_layer.counts()
    assert counts["merged"] == 0
    assert counts["exterior-cube"] > 0


def test_piece_potential_matches_multipole_neutrality(small_layer):
    # far from a piece the potential of the signed density is orders of
    # magnitude below the bare inner-cube potential
    kinds = small_layer.kinds()
    i = int(np.nonzero(kinds == "merged")[0][0])
    piece = small_layer[i]
    r = 16.0 * small_layer.eps
    pt = piece.inner_center + np.array([r, 0.0, 0.0])
    signed = abs(piece_potential(piece, pt)[0])
    bare = piece.inner_side**3 / r
    assert signed < 1e-2 * bare


def test_far_field_exponent_accepts_custom_radii(small_layer):
    kinds = small_layer.kinds()
    i = int(np.nonzero(kinds == "merged")[0][0])
    eps = small_layer.eps
    p = far_field_exponent(small_layer[i], radii=np.geomspace(6 * eps, 24 * eps, 5))
    assert 2.5 <= p <= 3.5


# ---------------------------------------------------------------------------
# validation and the documented feasibility envelope
# ---------------------------------------------------------------------------


def test_quadrupole_layer_validates_inputs():
    with pytest.raises(ValueError):
        quadrupole_layer(BALL, eps=0.125, subdiv=4, rho=0.0)
    with pytest.raises(ValueError):
        quadrupole_layer(BALL, eps=0.125, subdiv=4, rho=0.6)
    with pytest.raises(ValueError):
        quadrupole_layer(BALL, eps=-0.1, subdiv=4, rho=0.2)
    with pytest.raises(ValueError):
        quadrupole_layer(BALL, eps=0.5, subdiv=4, rho=0.2)  # coarser than R/8
    with pytest.raises(ValueError):
        quadrupole_layer(BALL, eps=0.125, subdiv=1, rho=0.2)
    with pytest.raises(TypeError):
        quadrupole_layer(BALL, eps=0.125, subdiv=4.5, rho=0.2)


def test_absorption_failure_raises_with_remedy():
    # a 2x2x2 subdivision at the densest background cannot absorb the
    # crossing subcells; the error names the subcell and the way out
    with pytest.raises(ValueError, match="increase the subdivision"):
        quadrupole_layer(BALL, eps=0.125, subdiv=2, rho=0.5)


# ---------------------------------------------------------------------------
# recursive ball packing
# ---------------------------------------------------------------------------


def test_swiss_cheese_frozen_schedule():
    s = swiss_cheese(3)
    assert s.growth == 26
    assert s.keep_fraction == Fraction(26, 27)
    assert s.radii[0] == Fraction(1, 2)
    assert s.radii[1] == 27 - Fraction(1, 2)
    assert s.radii[2] == 27**2 - Fraction(1, 2)
    assert s.counts[0] == 1
    assert s.counts[1] == 729
    assert s.counts[2] == 26 * 27**4
    assert all(isinstance(c, int) for c in s.counts)
    assert s.depth == 3


def test_swiss_cheese_exact_leftover_identity():
    s = swiss_cheese(4)
    gamma = s.keep_fraction
    for bigk in (1, 2, 4):
        occupied = sum(
            s.counts[bigk - j] * s.radii[j] ** 3 for j in range(bigk)
        )
        vol = s.radii[bigk] ** 3
        assert s.leftover_ratios[bigk] == (vol - occupied) / (gamma**bigk * vol)
        assert s.leftover_ratios[bigk] > 0


def test_swiss_cheese_ratios_two_sided_bounded():
    s = swiss_cheese(12)
    for bigk in range(2, 13):
        assert Fraction(1, 50) <= s.leftover_ratios[bigk] <= 50
        assert Fraction(1, 50) <= s.perimeter_ratios[bigk] <= 50


def test_swiss_cheese_validates_inputs():
    with pytest.raises(ValueError):
        swiss_cheese(0)
    with pytest.raises(ValueError):
        swiss_cheese(15)
    with pytest.raises(ValueError):
        swiss_cheese(3, growth=1)


# ---------------------------------------------------------------------------
# averaged-sequence limit
# ---------------------------------------------------------------------------


def test_recursion_limit_geometric_example():
    gamma, c, n = 0.5, 3.0, 30
    values = np.full(n, c)
    allowances = c * gamma ** np.arange(n)
    cert = recursion_limit(values, gamma, allowances)
    # constant sequences have increments c * gamma^K exactly
    np.testing.assert_allclose(cert.increments, allowances, rtol=1e-12)
    assert cert.slack.min() >= -1e-12
    assert cert.limit == pytest.approx(c * (1.0 - gamma**n), rel=1e-12)
    assert cert.tail_bound < 1e-8
    assert cert.horizon == n - 1  # largest certified index


def test_recursion_limit_converging_sequence():
    gamma = 0.75
    n = 40
    target = -2.0
    values = target * (1.0 - gamma ** np.arange(1, n + 1))
    allowances = np.full(n, 1.0)
    cert = recursion_limit(values, gamma, allowances)
    assert cert.limit == pytest.approx(target, abs=1e-3)


def test_recursion_limit_detects_violation():
    values = [0.0, 0.0, 0.0, 10.0]
    allowances = [1.0, 1.0, 1.0, 1.0]
    with pytest.raises(ValueError, match="index 3"):
        recursion_limit(values, 0.5, allowances)


def test_recursion_limit_validates_inputs():
    with pytest.raises(ValueError):
        recursion_limit([1.0, 2.0], 1.5, [1.0, 1.0])
    with pytest.raises(ValueError):
        recursion_limit([1.0], 0.5, [1.0])
    with pytest.raises(ValueError):
        recursion_limit([1.0, 2.0], 0.5, [1.0])
