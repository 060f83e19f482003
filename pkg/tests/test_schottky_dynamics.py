import numpy as np
import pytest

from chamberflow.errors import BudgetExceeded, NotGeneric
from chamberflow.linalg_core import (
    AMElement,
    CartanVector,
    GroupElement,
    SignVector,
    jordan_projection,
)
from chamberflow.schottky_dynamics import (
    build_schottky,
    chamber_coords,
    component_label_transport,
    cone_contains,
    cone_interior,
    coset_index,
    decorrelation_discret_check,
    enumerate_words,
    jordan_line_density_probe,
    limit_cone,
    sign_group,
    stable_word_lambdas,
    word_matrices,
)
from chamberflow.sections_cocycles import BHCoordinates, best_section, covering_family

from conftest import conjugated, rotation2


def test_word_enumeration_is_breadth_first_and_complete():
    words = list(enumerate_words(2, 3))
    assert len(words) == 2 + 4 + 8
    lengths = [len(w) for w in words]
    assert lengths == sorted(lengths)
    assert words[:2] == [(0,), (1,)]


def test_word_enumeration_budget():
    with pytest.raises(BudgetExceeded):
        list(enumerate_words(10, 10, cap=1000))


def test_word_matrices_match_direct_products():
    rng = np.random.default_rng(0)
    gens = [rng.standard_normal((2, 2)) for _ in range(2)]
    for word, mat in word_matrices(gens, 3):
        direct = np.eye(2)
        for idx in word:
            direct = gens[idx] @ direct
        assert np.allclose(mat, direct)


def test_stable_word_lambdas_against_eigenvalues():
    # moderate strength so direct eigenvalue computation is trustworthy
    a = conjugated(11, [3.0, 1.0, 1 / 3.0])
    b = conjugated(12, [4.0, 0.8, 1 / 3.2])
    mats = [a, b]
    words, lams = stable_word_lambdas(mats, 2)
    for word, lam in zip(words, lams):
        direct = np.eye(3)
        for idx in word:
            direct = mats[idx] @ direct
        expected = jordan_projection(GroupElement(direct)).coords
        assert np.abs(lam - expected).max() < 1e-8


def test_build_schottky_selects_certified_powers(sl3_triple):
    fam = build_schottky([L.g for L in sl3_triple], 0.17, 0.17)
    assert len(fam.generators) == 3
    assert len(fam.certificates) == 3
    for cert in fam.certificates:
        assert cert.r == 0.17 and cert.eps == 0.17
    off_diag = fam.pairwise_margins[~np.eye(3, dtype=bool)]
    assert np.all(off_diag >= 6 * 0.17)


def test_build_schottky_rejects_shared_flags():
    g = np.diag([9.0, 1 / 9.0])
    with pytest.raises(NotGeneric):
        build_schottky([g, g], 0.18, 0.16)


def test_limit_cone_single_generator(cone_family):
    single = build_schottky([cone_family.generators[0].g], 0.15, 0.15)
    cone = limit_cone(single, 3)
    assert len(cone.hull) == 1
    lam = single.generators[0].lam.coords
    assert np.abs(cone.hull[0].coords - lam / np.linalg.norm(lam)).max() < 1e-9


def test_limit_cone_hull_contains_all_rays(cone_family):
    cone = limit_cone(cone_family, 4)
    for ray in cone.rays:
        assert cone_contains(cone, ray.coords)


def test_limit_cone_hulls_are_nested(cone_family):
    small = limit_cone(cone_family, 2)
    large = limit_cone(cone_family, 4)
    for h in small.hull:
        assert cone_contains(large, h.coords)


def test_cone_interior_and_exterior(cone_family):
    cone = limit_cone(cone_family, 4)
    mats = [L.g.entries for L in cone_family.generators]
    _, lams = stable_word_lambdas(mats, 2)
    interior_dir = lams[1] / np.linalg.norm(lams[1])  # a mixed word
    assert cone_interior(cone, interior_dir)
    exterior = np.array([1.0, 0.8, -1.8])
    assert not cone_interior(cone, exterior / np.linalg.norm(exterior))


def test_sign_group_of_engineered_pair(sign_family):
    report = sign_group(sign_family, 3)
    assert report.p == 2
    assert report.order == 4
    bits = {tuple(1 if s < 0 else 0 for s in b.signs) for b in report.basis}
    assert len(bits) == 2


def test_sign_group_stabilizes(sign_family):
    assert sign_group(sign_family, 3).order == sign_group(sign_family, 5).order


def test_sign_group_negative_trace_hyperbolic():
    # strong enough that the first power certifies, so the sign survives
    # (an even certified power would square the sign away)
    g1 = np.diag([-150.0, -1 / 150.0])
    g2 = rotation2(np.pi / 4) @ np.diag([150.0, 1 / 150.0]) @ rotation2(np.pi / 4).T
    fam = build_schottky([g1, g2], 0.18, 0.16)
    report = sign_group(fam, 3)
    assert report.order == 2  # the full sign group of SL(2, R)


def test_decorrelation_components(sign_family):
    report = sign_group(sign_family, 3)
    table = decorrelation_discret_check(sign_family, report, 1)
    assert len(table) == 4
    for nu, (attained, expected, match) in table.items():
        assert match, (nu, attained, expected)


def test_decorrelation_trivial_sign_group():
    a = conjugated(168, [150.0, 2.0, 1 / 300.0])
    b = conjugated(169, [150.0, 2.0, 1 / 300.0])
    fam = build_schottky([a, b], 0.15, 0.15)
    report = sign_group(fam, 3)
    assert report.p == 0
    assert decorrelation_discret_check(fam, report, 1) == {(): ((), (), True)}


def _start_coords(fam, m=None):
    n = fam.generators[0].g.n
    xi0 = fam.generators[0].attracting
    s0 = best_section(covering_family(n), xi0)
    x = AMElement.identity(n) if m is None else AMElement(CartanVector(np.zeros(n)), m)
    return BHCoordinates(xi=xi0, xi_check=fam.generators[0].repelling, x=x, section=s0)


def test_label_transport_identity_and_generators(single_sign_family):
    fam = single_sign_family
    report = sign_group(fam, 3)
    assert report.p == 1
    start = _start_coords(fam)
    trivial = component_label_transport((), fam, start, report)
    assert not any(trivial)
    for idx, L in enumerate(fam.generators):
        label = component_label_transport((idx,), fam, start, report)
        # generator sign patterns lie inside the sign group: trivial coset
        assert not any(label)


def test_label_transport_is_a_homomorphism(single_sign_family):
    fam = single_sign_family
    report = sign_group(fam, 3)
    start = _start_coords(fam)
    rng = np.random.default_rng(7)

    def mul(b1, b2):
        return tuple((x + y) % 2 for x, y in zip(b1, b2))

    for _ in range(15):
        w1 = tuple(rng.integers(0, 2, size=rng.integers(1, 4)))
        w2 = tuple(rng.integers(0, 2, size=rng.integers(1, 4)))
        l1 = component_label_transport(w1, fam, start, report)
        l2 = component_label_transport(w2, fam, start, report)
        l12 = component_label_transport(w1 + w2, fam, start, report)
        assert l12 == mul(l1, l2)


def test_label_transport_shifts_with_start_offset(single_sign_family):
    fam = single_sign_family
    report = sign_group(fam, 3)
    m = SignVector((-1, 1, -1))
    shift = coset_index(m, report)
    assert any(shift)  # m is outside the sign group of this family
    start = _start_coords(fam)
    start_m = _start_coords(fam, m)
    rng = np.random.default_rng(8)

    def mul(b1, b2):
        return tuple((x + y) % 2 for x, y in zip(b1, b2))

    for _ in range(5):
        w = tuple(rng.integers(0, 2, size=rng.integers(1, 4)))
        assert component_label_transport(w, fam, start_m, report) == mul(
            component_label_transport(w, fam, start, report), shift
        )


def test_line_density_probe_reports_gap_statistics(cone_family):
    mats = [L.g.entries for L in cone_family.generators]
    _, lams = stable_word_lambdas(mats, 2)
    theta = CartanVector(lams[1] / np.linalg.norm(lams[1]))
    stats = jordan_line_density_probe(cone_family, theta, (10.0, 60.0), 8, delta0=0.5)
    assert stats["theta_interior"]
    assert stats["hits"] > 0
    assert stats["words"] == 2 + 4 + 8 + 16 + 32 + 64 + 128 + 256
    assert stats["max_gap"] >= stats["mean_gap"]
    assert stats["t_values"] == sorted(stats["t_values"])


def test_line_density_probe_warns_off_cone(cone_family):
    theta = CartanVector(np.array([1.0, 0.8, -1.8]) / np.linalg.norm([1.0, 0.8, -1.8]))
    stats = jordan_line_density_probe(cone_family, theta, (10.0, 60.0), 6, delta0=0.5)
    assert not stats["theta_interior"]
    assert stats["warning"] == "theta-outside-cone"


def test_chamber_coords_are_isometric():
    v = np.array([2.0, -0.5, -1.5])
    w = chamber_coords(v)
    assert w.shape == (2,)
    assert np.isclose(np.linalg.norm(w), np.linalg.norm(v))
