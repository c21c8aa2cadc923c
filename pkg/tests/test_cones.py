import itertools

import numpy as np
import pytest

from diffpos.cones import (ConeFieldSpec, ConeSpec, check_cone_axioms, classify_margin,
                           cone_margin, contains, dual_extreme_rays, interior_direction,
                           interior_margin, project_onto_cone, sample_boundary_rays,
                           sample_interior_rays, semicontinuity_probe, surrounds)
from diffpos.constants import MembershipClass
from diffpos.exceptions import ArgumentError
from diffpos.geometry import TransportMap, chart_from_sym, sym_from_chart

SOC_DIAGONAL = ConeSpec.second_order([1.0, 1.0], np.pi / 3)


def _quarter_turn(x1, x2):
    angle = x2[0] - x1[0]
    return np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])


@pytest.mark.parametrize("v, expected", [
    ([1.0, 1.0], MembershipClass.INSIDE),
    ([1.0, -1.0], MembershipClass.OUTSIDE),
    ([1.0, 0.0], MembershipClass.BOUNDARY),
    ([0.0, 0.0], MembershipClass.BOUNDARY),
])
def test_orthant_membership(r2, orthant_field, v, expected):
    x = r2.point([0.3, -0.7])
    assert contains(orthant_field, x, x.tangent(v)).membership is expected


def test_orthant_margins(r2, orthant_field):
    x = r2.point([0.0, 0.0])
    assert interior_margin(orthant_field, x, x.tangent([3.0, 4.0])) == pytest.approx(0.6)
    assert interior_margin(orthant_field, x, x.tangent([1.0, 0.0])) == 0.0
    assert cone_margin(ConeSpec.orthant(2), [30.0, 40.0]) == pytest.approx(0.6)


def test_second_order_margin():
    cone = ConeSpec.second_order([1.0, 0.0], np.pi / 4)
    assert cone_margin(cone, [1.0, 0.0]) == pytest.approx(1 - np.sqrt(2) / 2)
    assert cone_margin(cone, [1.0, 1.0]) == pytest.approx(0.0, abs=1e-12)
    assert cone_margin(cone, [-1.0, 0.0]) < 0


def test_psd_margin(spd2):
    x = spd2.point([1.0, 0.0, 1.0])
    field = ConeFieldSpec.constant(ConeSpec.psd(2))
    verdict = contains(field, x, x.tangent(chart_from_sym(np.diag([-1.0, 1.0]))))
    assert verdict.membership is MembershipClass.OUTSIDE
    assert verdict.margin == pytest.approx(-1 / np.sqrt(2))
    assert cone_margin(ConeSpec.psd(2), chart_from_sym(np.eye(2))) == pytest.approx(1 / np.sqrt(2))


def test_halfspace_margin_uses_unit_normals():
    cone = ConeSpec.halfspaces([[2.0, 0.0], [1.0, 1.0]])
    assert cone_margin(cone, [1.0, 0.0]) == pytest.approx(np.sqrt(2) / 2)
    assert cone_margin(cone, [1.0, -2.0]) < 0


def test_generator_margin():
    cone = ConeSpec.from_generators([[1.0, 0.0], [1.0, 1.0]])
    assert cone_margin(cone, [1.0, 0.5]) > 0
    assert cone_margin(cone, [2.0, 0.0]) == pytest.approx(0.0, abs=1e-9)
    assert cone_margin(cone, [0.0, 1.0]) == pytest.approx(-np.sqrt(2) / 2)


def test_classify_margin_band():
    assert classify_margin(2e-9) is MembershipClass.INSIDE
    assert classify_margin(-2e-9) is MembershipClass.OUTSIDE
    assert classify_margin(-2e-9, tol=1e-8) is MembershipClass.BOUNDARY


@pytest.mark.parametrize("build", [
    lambda: ConeSpec.second_order([1.0, 0.0], 0.0),
    lambda: ConeSpec.second_order([1.0, 0.0], np.pi / 2),
    lambda: ConeSpec.second_order([1.0, 0.0, 0.0], np.pi / 4).linear_image(np.eye(2)),
    lambda: ConeSpec.halfspaces([[0.0, 0.0], [1.0, 0.0]]),
    lambda: ConeSpec.from_generators(np.zeros((0, 2))),
    lambda: ConeSpec.orthant(0),
    lambda: ConeSpec.orthant(2).linear_image(np.zeros((2, 2))),
])
def test_invalid_cones(build):
    with pytest.raises(ArgumentError):
        build()


def test_dimension_mismatches(r2):
    with pytest.raises(ArgumentError):
        cone_margin(ConeSpec.orthant(3), [1.0, 1.0])
    x, y = r2.point([0.0, 0.0]), r2.point([1.0, 0.0])
    with pytest.raises(ArgumentError):
        contains(ConeFieldSpec.constant(ConeSpec.orthant(2)), x, y.tangent([1.0, 1.0]))
    with pytest.raises(ArgumentError):
        ConeFieldSpec.constant(ConeSpec.orthant(3)).at(x)


def test_dual_extreme_rays_of_orthant_normals():
    rays = dual_extreme_rays(np.eye(2))
    assert sorted(map(tuple, np.round(rays, 12))) == [(0.0, 1.0), (1.0, 0.0)]


@pytest.mark.parametrize("cone", [
    ConeSpec.orthant(3),
    ConeSpec.halfspaces([[1.0, 0.0], [1.0, 1.0]]),
    ConeSpec.from_generators([[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0]]),
    ConeSpec.second_order([0.0, 0.0, 1.0], 0.4),
    ConeSpec.psd(2),
    ConeSpec.orthant(2).linear_image([[1.0, 0.5], [0.0, 1.0]]),
])
def test_interior_direction_is_interior(cone):
    assert cone_margin(cone, interior_direction(cone)) > 1e-6


def test_projection_orthant():
    assert project_onto_cone(ConeSpec.orthant(2), [1.0, -2.0]).tolist() == [1.0, 0.0]
    assert project_onto_cone(ConeSpec.orthant(2), [1.0, 2.0]).tolist() == [1.0, 2.0]


def test_projection_psd_clips_eigenvalues():
    projected = project_onto_cone(ConeSpec.psd(2), chart_from_sym(np.diag([-1.0, 1.0])))
    assert np.allclose(projected, [0.0, 0.0, 1.0])
    eigvals = np.linalg.eigvalsh(sym_from_chart(
        project_onto_cone(ConeSpec.psd(2), [1.0, 3.0, -2.0]), 2))
    assert eigvals.min() > -1e-12


def test_projection_second_order():
    cone = ConeSpec.second_order([1.0, 0.0], np.pi / 4)
    assert np.allclose(project_onto_cone(cone, [0.0, 1.0]), [0.5, 0.5])
    assert np.allclose(project_onto_cone(cone, [-1.0, 0.0]), [0.0, 0.0])


def test_projection_of_transported_cone():
    cone = ConeSpec.orthant(2).linear_image(_quarter_turn([0.0], [np.pi / 2]))
    projected = project_onto_cone(cone, [1.0, 1.0])
    assert np.allclose(projected, [0.0, 1.0], atol=1e-6)


def test_boundary_rays_orthant():
    assert sample_boundary_rays(ConeSpec.orthant(2), 2).tolist() == [[1.0, 0.0], [0.0, 1.0]]


def test_boundary_rays_second_order_edges():
    rays = sample_boundary_rays(ConeSpec.second_order([1.0, 0.0], np.pi / 4), 2)
    expected = [(np.sqrt(0.5), -np.sqrt(0.5)), (np.sqrt(0.5), np.sqrt(0.5))]
    assert np.allclose(sorted(map(tuple, rays), key=lambda r: r[1]), expected)


def test_boundary_rays_psd_are_rank_one():
    rays = sample_boundary_rays(ConeSpec.psd(2), 3, seed=3)
    assert rays.shape == (3, 3)
    for ray in rays:
        matrix = sym_from_chart(ray, 2)
        assert np.linalg.norm(matrix) == pytest.approx(1.0)
        assert np.linalg.matrix_rank(matrix, tol=1e-9) == 1
        assert np.linalg.eigvalsh(matrix).min() > -1e-12


@pytest.mark.parametrize("cone", [
    ConeSpec.orthant(3),
    ConeSpec.halfspaces([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 1.0]]),
    ConeSpec.second_order([1.0, 1.0, 1.0], 0.5),
    ConeSpec.psd(3),
    ConeSpec.orthant(2).linear_image([[2.0, 1.0], [0.0, 1.0]]),
])
def test_random_boundary_rays_are_on_the_boundary(cone):
    rays = sample_boundary_rays(cone, 12, seed=7)
    assert len(rays) == 12
    for ray in rays:
        assert abs(cone_margin(cone, ray)) <= 1e-8


def test_boundary_rays_are_seeded():
    cone = ConeSpec.second_order([1.0, 2.0, 2.0], 0.3)
    assert np.array_equal(sample_boundary_rays(cone, 9, seed=1), sample_boundary_rays(cone, 9, seed=1))


def test_boundary_rays_need_positive_k():
    with pytest.raises(ArgumentError):
        sample_boundary_rays(ConeSpec.orthant(2), 0)


def test_interior_rays_are_unit_and_inside():
    rays = sample_interior_rays(ConeSpec.psd(2), 20, seed=5)
    assert np.allclose(np.linalg.norm(rays, axis=1), 1.0)
    assert all(cone_margin(ConeSpec.psd(2), ray) > 0 for ray in rays)


@pytest.mark.parametrize("outer, inner, expected", [
    (SOC_DIAGONAL, ConeSpec.orthant(2), True),
    (ConeSpec.orthant(2), ConeSpec.orthant(2), False),
    (ConeSpec.orthant(2), SOC_DIAGONAL, False),
    (ConeSpec.orthant(2), ConeSpec.second_order([1.0, 1.0], 0.3), True),
])
def test_surrounds(outer, inner, expected):
    assert surrounds(outer, inner) is expected


def test_surrounds_rejects_mixed_dimensions():
    with pytest.raises(ArgumentError):
        surrounds(ConeSpec.orthant(2), ConeSpec.orthant(3))


@pytest.mark.parametrize("cone", [
    ConeSpec.orthant(3),
    ConeSpec.from_generators([[1.0, 0.0], [1.0, 1.0], [2.0, 1.0]]),
    ConeSpec.second_order([0.0, 1.0], np.pi / 6),
    ConeSpec.psd(2),
])
def test_cone_axioms(cone):
    report = check_cone_axioms(cone, n_samples=100, seed=2)
    assert report.passed
    assert report.solid


def test_transported_psd_field_is_psd_everywhere(spd2):
    base = spd2.point([1.0, 0.0, 1.0])
    field = ConeFieldSpec.transported(base, ConeSpec.psd(2))
    assert field.transport_map.rule.value == "spd_congruence"
    x = spd2.point([4.0, 0.5, 1.0])
    inside = x.tangent(chart_from_sym(np.diag([1.0, 2.0])))
    outside = x.tangent(chart_from_sym(np.diag([-1.0, 2.0])))
    assert field.contains(x, inside).membership is MembershipClass.INSIDE
    assert field.contains(x, outside).membership is MembershipClass.OUTSIDE


@pytest.mark.parametrize("matrix", [np.diag([1.0, 2.0]), np.diag([-1.0, 2.0]),
                                    np.array([[2.0, 1.0], [1.0, 3.0]])])
def test_transported_psd_margin_is_normalized_on_the_tangent_matrix(spd2, matrix):
    field = ConeFieldSpec.transported(spd2.point([1.0, 0.0, 1.0]), ConeSpec.psd(2))
    x = spd2.point([4.0, 0.5, 1.0])
    expected = np.linalg.eigvalsh(matrix)[0] / np.linalg.norm(matrix)
    assert interior_margin(field, x, x.tangent(chart_from_sym(matrix))) == pytest.approx(expected)


def test_custom_transport_rotates_the_cone(r2):
    base = r2.point([0.0, 0.0])
    field = ConeFieldSpec.transported(base, ConeSpec.orthant(2), TransportMap.custom(_quarter_turn))
    assert not field.is_constant
    x = r2.point([np.pi / 2, 0.0])
    assert interior_margin(field, x, x.tangent([1.0, 1.0])) == pytest.approx(-np.sqrt(0.5))
    assert interior_margin(field, x, x.tangent([-1.0, 1.0])) == pytest.approx(np.sqrt(0.5))
    assert field.at(base) is field.base_cone


def test_identity_transport_is_constant(r2):
    field = ConeFieldSpec.transported(r2.point([0.0, 0.0]), ConeSpec.orthant(2))
    assert field.is_constant


def test_custom_callback_must_return_cone(r2):
    field = ConeFieldSpec.custom(lambda coords: np.eye(2))
    with pytest.raises(ArgumentError):
        field.at(r2.point([0.0, 0.0]))
    with pytest.raises(ArgumentError):
        ConeFieldSpec.custom(None)


def test_semicontinuity_of_constant_field(r2, orthant_field):
    report = semicontinuity_probe(orthant_field, r2.point([0.4, -0.2]), 0.1, 20)
    assert report.passed
    assert report.worst_lower_distance == pytest.approx(0.0, abs=1e-12)


def test_semicontinuity_of_transported_psd_field(spd2):
    field = ConeFieldSpec.transported(spd2.point([1.0, 0.0, 1.0]), ConeSpec.psd(2))
    report = semicontinuity_probe(field, spd2.point([2.0, 0.3, 1.0]), 0.1, 10, n_rays=6)
    assert report.passed


def test_semicontinuity_detects_a_flip(r2):
    flipped = ConeSpec.halfspaces([[-1.0, 0.0], [0.0, 1.0]])
    field = ConeFieldSpec.custom(
        lambda coords: ConeSpec.orthant(2) if coords[0] >= 0 else flipped)
    report = semicontinuity_probe(field, r2.point([0.0, 0.5]), 0.1, 40, seed=4)
    assert report.upper_violations > 0
    assert report.worst_upper_margin <= -0.5
    assert report.worst_upper_point[0] < 0
    assert not report.passed


def test_semicontinuity_needs_positive_radius(r2, orthant_field):
    with pytest.raises(ArgumentError):
        semicontinuity_probe(orthant_field, r2.point([0.0, 0.0]), 0.0, 5)


def _caratheodory_member(generators, v, tol=1e-9):
    """Exhaustive search over linearly independent generator subsets."""
    dim = generators.shape[1]
    for size in range(1, dim + 1):
        for subset in itertools.combinations(range(len(generators)), size):
            basis = generators[list(subset)].T
            weights, *_ = np.linalg.lstsq(basis, v, rcond=None)
            if np.linalg.norm(basis @ weights - v) <= tol and np.all(weights >= -tol):
                return True
    return False


@pytest.mark.parametrize("dim, count, seed", [(2, 3, 0), (3, 5, 1), (3, 6, 2)])
def test_generator_margin_agrees_with_caratheodory(dim, count, seed):
    rng = np.random.default_rng(seed)
    generators = rng.standard_normal((count, dim))
    generators[:, 0] = np.abs(generators[:, 0]) + 0.5
    cone = ConeSpec.from_generators(generators)
    unit_generators = generators / np.linalg.norm(generators, axis=1)[:, None]
    disagreements = 0
    for _ in range(1000):
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        margin = cone_margin(cone, v)
        if abs(margin) <= 1e-8:
            continue
        if (margin > 0) != _caratheodory_member(unit_generators, v):
            disagreements += 1
    assert disagreements == 0
