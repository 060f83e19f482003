import numpy as np
import pytest

from chamberflow.errors import NotTransverse
from chamberflow.flag_boundary import (
    Flag,
    act,
    boundary_margin_estimate,
    cell_margin,
    canonicalize_rep,
    flag_distance,
    flag_of,
    flags_equal,
    is_transverse,
    k_iota,
    minor_margin,
    opposite_flag,
    standard_flag,
)
from chamberflow.linalg_core import GroupElement, random_group_element, random_rotation


def test_canonical_representative_has_unit_determinant():
    rng = np.random.default_rng(0)
    rep = canonicalize_rep(random_rotation(rng, 3))
    assert np.isclose(np.linalg.det(rep), 1.0)


def test_flag_ignores_column_signs():
    rng = np.random.default_rng(1)
    k = random_rotation(rng, 3)
    flipped = k * np.array([-1.0, 1.0, -1.0])[np.newaxis, :]
    assert flags_equal(Flag(k), Flag(flipped))
    assert flag_distance(Flag(k), Flag(flipped)) < 1e-12


def test_flag_rejects_non_orthogonal_representative():
    with pytest.raises(ValueError):
        Flag(np.diag([2.0, 0.5, 1.0]))


def test_standard_and_opposite_are_transverse():
    for n in (2, 3, 4):
        assert is_transverse(standard_flag(n), opposite_flag(n))
    assert not is_transverse(standard_flag(3), standard_flag(3))


def test_k_iota_is_special_orthogonal():
    for n in (2, 3, 4, 5):
        j = k_iota(n)
        assert np.isclose(np.linalg.det(j), 1.0)
        assert np.allclose(j.T @ j, np.eye(n))


def test_action_on_flags_is_a_group_action():
    rng = np.random.default_rng(2)
    xi = Flag(random_rotation(rng, 3))
    g = random_group_element(rng, 3)
    h = random_group_element(rng, 3)
    lhs = act(GroupElement(g.entries @ h.entries), xi)
    rhs = act(g, act(h, xi))
    assert flag_distance(lhs, rhs) < 1e-9


def test_flag_of_diagonal_is_standard():
    g = GroupElement(np.diag([4.0, 1.0, 0.25]))
    assert flags_equal(flag_of(g), standard_flag(3))


def test_metric_axioms_and_invariance():
    rng = np.random.default_rng(3)
    xi, eta, zeta = (Flag(random_rotation(rng, 3)) for _ in range(3))
    assert abs(flag_distance(xi, eta) - flag_distance(eta, xi)) < 1e-12
    assert flag_distance(xi, eta) + flag_distance(eta, zeta) >= flag_distance(xi, zeta) - 1e-12
    k = random_rotation(rng, 3)
    d0 = flag_distance(xi, eta)
    d1 = flag_distance(Flag(k @ xi.rep), Flag(k @ eta.rep))
    assert abs(d0 - d1) < 1e-9


def test_cell_margin_exact_in_dimension_two():
    xi = standard_flag(2)
    eta = opposite_flag(2)
    assert np.isclose(cell_margin(xi, eta), flag_distance(xi, eta))


def test_cell_margin_requires_transversality():
    with pytest.raises(NotTransverse):
        cell_margin(standard_flag(3), standard_flag(3))


def test_cell_margin_certified_value_is_deflated():
    xi, eta = standard_flag(3), opposite_flag(3)
    certified = cell_margin(xi, eta, mesh=16, certified=True)
    raw = cell_margin(xi, eta, mesh=16, certified=False)
    assert 0 < certified < raw


def test_boundary_margin_estimate_zero_for_non_transverse():
    assert boundary_margin_estimate(standard_flag(3), standard_flag(3)) == 0.0
    assert boundary_margin_estimate(standard_flag(3), opposite_flag(3)) > 0.0


def test_minor_margin_positive_iff_transverse():
    assert minor_margin(standard_flag(3), opposite_flag(3)) > 1e-6
    assert minor_margin(standard_flag(3), standard_flag(3)) < 1e-12
