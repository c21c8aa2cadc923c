import numpy as np
import pytest
from scipy.optimize import brentq  # type: ignore

from diffpos.cones import ConeFieldSpec, ConeSpec
from diffpos.constants import OmegaClass, Outcome
from diffpos.dynamics import IntegratorOptions, SystemSpec, find_equilibria
from diffpos.exceptions import ArgumentError
from diffpos.geometry import ManifoldSpec
from diffpos.limits import (PROPERTIES, OmegaBudget, OmegaEstimate, dichotomy_check,
                            intersection_check, monotone_flow_check, nonordering_check,
                            omega_estimate, omega_invariance_residual, order_openness_probe,
                            order_recurrence_check, run_property_suite)
from diffpos.order import sample_ordered_pairs
from diffpos.systems import get_system

X_STAR = brentq(lambda s: s - np.tanh(2.0 * s), 0.5, 1.5, xtol=1e-14)


@pytest.fixture(scope="module")
def decay():
    return get_system("decay")


@pytest.fixture(scope="module")
def rotation_omega(rotation):
    return omega_estimate(rotation, rotation.point([1.0, 0.0]))


@pytest.fixture(scope="module")
def bistable_omega(bistable):
    return omega_estimate(bistable, bistable.point([0.1, 0.1]))


def test_decay_converges(decay):
    estimate = omega_estimate(decay, decay.point([1.0]))
    assert estimate.omega_class is OmegaClass.CONVERGED_TO
    assert estimate.equilibrium.coords[0] == pytest.approx(0.0, abs=1e-10)
    assert estimate.converged and estimate.decided
    assert 0 < estimate.budget_used <= OmegaBudget().t_max


def test_bistable_converges_to_upper_equilibrium(bistable, bistable_omega):
    assert bistable_omega.omega_class is OmegaClass.CONVERGED_TO
    assert np.allclose(bistable_omega.equilibrium.coords, [X_STAR, X_STAR], atol=1e-9)
    assert np.max(np.linalg.norm(bistable_omega.samples - [X_STAR, X_STAR], axis=1)) < 1e-6
    assert np.linalg.norm(bistable.vector_field(bistable_omega.equilibrium.coords)) < 1e-10


def test_rotation_is_periodic(rotation_omega):
    assert rotation_omega.omega_class is OmegaClass.PERIODIC_ORBIT
    assert rotation_omega.period == pytest.approx(2 * np.pi, abs=1e-4)
    assert len(rotation_omega.samples) == OmegaBudget().n_tail
    assert np.allclose(np.linalg.norm(rotation_omega.samples, axis=1), 1.0, atol=1e-6)
    assert rotation_omega.to_dict()["class"] == "periodic_orbit"


def test_equilibrium_start_is_converged(bistable):
    equilibria = find_equilibria(bistable, seed=1)
    estimate = omega_estimate(bistable, bistable.point([0.0, 0.0]), equilibria=equilibria)
    assert estimate.converged
    assert estimate.budget_used == 0.0
    assert estimate.equilibrium_index == 1


def test_converged_equilibrium_is_labelled(bistable):
    equilibria = find_equilibria(bistable, seed=1)
    estimate = omega_estimate(bistable, bistable.point([0.1, 0.1]), equilibria=equilibria)
    assert estimate.equilibrium_index == 2


def test_escape_is_classified():
    blow_up = SystemSpec(name="blow_up", manifold=ManifoldSpec.euclidean(1),
                         cone_field=ConeFieldSpec.constant(ConeSpec.orthant(1)),
                         f=lambda x: x ** 2)
    estimate = omega_estimate(blow_up, blow_up.point([1.0]), OmegaBudget(t_max=5.0),
                              opts=IntegratorOptions(escape_radius=1e3))
    assert estimate.omega_class is OmegaClass.ESCAPED
    assert not estimate.decided
    assert estimate.limit_points().shape == (0, 1)


def test_short_budget_is_undecided(rotation):
    estimate = omega_estimate(rotation, rotation.point([1.0, 0.0]), OmegaBudget(t_max=4.0))
    assert estimate.omega_class is OmegaClass.UNDECIDED
    assert "t_max" in estimate.note
    assert len(estimate.samples) > 1


@pytest.mark.parametrize("options", [dict(t_max=0.0), dict(eps_conv=-1.0), dict(n_tail=1),
                                     dict(transient_fraction=1.0)])
def test_invalid_budget(options):
    with pytest.raises(ArgumentError):
        OmegaBudget(**options)


def test_doubling_the_horizon_keeps_the_limit(bistable):
    x = bistable.point([0.3, -0.2])
    short = omega_estimate(bistable, x, OmegaBudget(t_max=40.0))
    long = omega_estimate(bistable, x, OmegaBudget(t_max=40.0).doubled())
    assert short.converged and long.converged
    assert np.allclose(short.equilibrium.coords, long.equilibrium.coords, atol=1e-8)


@pytest.mark.parametrize("s", [0.5, 1.0, 2.0])
def test_omega_sets_are_invariant(bistable, bistable_omega, rotation, rotation_omega, s):
    assert omega_invariance_residual(bistable, bistable_omega, s) <= 1e-5
    assert omega_invariance_residual(rotation, rotation_omega, s) <= 1e-5


def test_monotonicity_detects_rotation(rotation):
    report = monotone_flow_check(rotation, [(rotation.point([0.0, 0.0]),
                                             rotation.point([0.0, 1.0]))], [np.pi / 2])
    assert report.failed == 1
    assert report.worst_witness["t"] == pytest.approx(np.pi / 2)
    assert report.worst_witness["relation"] == "incomparable"


def test_monotonicity_of_decay():
    decay = get_system("decay", n=2)
    report = monotone_flow_check(decay, [(decay.point([0.0, 0.0]), decay.point([1.0, 1.0]))],
                                 [0.5, 3.0])
    assert (report.passed, report.failed) == (1, 0)


def test_monotonicity_of_bistable(bistable):
    pairs = sample_ordered_pairs(bistable, bistable.region, 30, seed=5)
    report = monotone_flow_check(bistable, pairs)
    assert report.failed == 0
    assert report.tested == 30
    assert report.passed + report.undecided == 30


def test_unordered_pairs_are_undecided(bistable):
    report = monotone_flow_check(bistable, [(bistable.point([1.0, 0.0]),
                                             bistable.point([0.0, 1.0]))])
    assert report.undecided == 1


def test_monotonicity_needs_positive_times(bistable):
    with pytest.raises(ArgumentError):
        monotone_flow_check(bistable, [], [0.0])


def test_nonordering_of_converged_set(bistable, bistable_omega):
    report = nonordering_check(bistable, bistable_omega)
    assert (report.passed, report.tags) == (1, {"vacuous": 1})


def test_nonordering_fails_on_rotation_circle(rotation, rotation_omega):
    report = nonordering_check(rotation, rotation_omega)
    n = len(rotation_omega.samples)
    assert report.tested == n * (n - 1) // 2
    assert report.failed > 0
    assert report.passed > 0


@pytest.mark.parametrize("samples, failed, passed", [
    ([[0.0, 0.0], [1.0, 1.0]], 1, 0),
    ([[1.0, 0.0], [0.0, 1.0]], 0, 1),
    ([[0.0, 0.0], [1.0, 1.0], [2.0, -1.0]], 1, 2),
])
def test_nonordering_of_undecided_set(rotation, samples, failed, passed):
    estimate = OmegaEstimate(OmegaClass.UNDECIDED, np.array(samples), rotation.manifold, 1.0, 1.0)
    report = nonordering_check(rotation, estimate)
    assert (report.failed, report.passed, report.undecided) == (failed, passed, 0)


def test_nonordering_of_escaped_set(rotation):
    estimate = OmegaEstimate(OmegaClass.ESCAPED, np.empty((0, 2)), rotation.manifold, 1.0, 1.0)
    assert nonordering_check(rotation, estimate).undecided == 1


@pytest.mark.parametrize("x, y, tag", [
    ([0.1, 0.1], [0.2, 0.2], None),
    ([-0.5, -0.5], [0.5, 0.5], "vacuous"),
])
def test_intersection_on_bistable(bistable, x, y, tag):
    report = intersection_check(bistable, bistable.point(x), bistable.point(y))
    assert report.passed == 1
    assert report.tags.get("vacuous") == (1 if tag else None)


def test_intersection_on_decay(decay):
    report = intersection_check(decay, decay.point([0.1]), decay.point([0.2]))
    assert (report.passed, report.failed) == (1, 0)


def test_intersection_needs_ordered_pair(bistable):
    report = intersection_check(bistable, bistable.point([0.5, 0.0]), bistable.point([0.0, 0.5]))
    assert report.tags == {"precondition_unmet": 1}
    assert report.undecided == 1


@pytest.mark.parametrize("x, y, branch", [
    ([0.1, 0.1], [0.2, 0.2], "branch_a"),
    ([-0.2, -0.1], [0.1, 0.2], "branch_b"),
])
def test_dichotomy_on_bistable(bistable, x, y, branch):
    report = dichotomy_check(bistable, bistable.point(x), bistable.point(y))
    assert report.passed == 1
    assert report.tags == {branch: 1}


def test_dichotomy_on_decay(decay):
    report = dichotomy_check(decay, decay.point([1.0]), decay.point([2.0]))
    assert report.tags == {"branch_a": 1}


def test_dichotomy_fails_for_periodic_limits(rotation, rotation_omega):
    x, y = rotation.point([0.0, 0.0]), rotation.point([0.0, 1.0])
    origin = omega_estimate(rotation, x)
    report = dichotomy_check(rotation, x, y, omega_x=origin, omega_y=rotation_omega)
    assert report.failed == 1
    assert "relation" in report.worst_witness


@pytest.mark.parametrize("system_name, coords", [
    ("bistable_tanh", [0.1, 0.1]),
    ("decay", [-1.0]),
])
def test_order_recurrence_passes(system_name, coords):
    system = get_system(system_name)
    report = order_recurrence_check(system, system.point(coords), 1.0)
    assert report.passed == 1
    assert not report.tags


def test_order_recurrence_at_equilibrium(bistable):
    report = order_recurrence_check(bistable, bistable.point([0.0, 0.0]), 1.0)
    assert report.tags == {"vacuous": 1}


def test_order_recurrence_fails_on_rotation(rotation):
    report = order_recurrence_check(rotation, rotation.point([1.0, -1.0]), 1.0)
    assert report.failed == 1
    assert report.worst_witness["period"] == pytest.approx(2 * np.pi, abs=1e-4)


def test_order_recurrence_needs_positive_time(bistable):
    with pytest.raises(ArgumentError):
        order_recurrence_check(bistable, bistable.point([0.1, 0.1]), 0.0)


def test_openness_of_boundary_order(bistable):
    report = order_openness_probe(bistable, bistable.point([0.0, 0.0]),
                                  bistable.point([0.1, 0.0]), 0.01)
    assert report.passed == 1
    assert report.tags["t0"] <= 0.5


def test_openness_of_strict_order(metzler):
    x, y = metzler.point([0.0, 0.0]), metzler.point([1.0, 2.0])
    delta = (1 / np.sqrt(5.0)) / 8
    report = order_openness_probe(metzler, x, y, delta)
    assert report.passed == 1
    assert report.tags["t0"] == 0.05


def test_openness_fails_on_rotation(rotation):
    report = order_openness_probe(rotation, rotation.point([0.0, 0.0]),
                                  rotation.point([0.0, 1.0]), 0.01)
    assert report.failed == 1
    assert report.worst_witness["t"] == 20.0


def test_openness_arguments(bistable):
    with pytest.raises(ArgumentError):
        order_openness_probe(bistable, bistable.point([0.0, 0.0]), bistable.point([1.0, 1.0]), 0.0)


def test_property_suite(bistable):
    reports = run_property_suite(bistable, n_pairs=4, seed=2,
                                 properties=["monotonicity", "dichotomy", "order_recurrence"])
    assert list(reports) == ["monotonicity", "dichotomy", "order_recurrence"]
    for report in reports.values():
        assert report.failed == 0
        assert report.tested == report.passed + report.failed + report.undecided


def test_property_suite_rejects_unknown_properties(bistable):
    with pytest.raises(ArgumentError):
        run_property_suite(bistable, properties=["transitivity"])


def test_properties_constant():
    assert PROPERTIES[0] == "monotonicity"
    assert "dichotomy" in PROPERTIES


@pytest.mark.slow
def test_monotonicity_on_many_pairs(bistable):
    pairs = sample_ordered_pairs(bistable, [[-2.0, 2.0], [-2.0, 2.0]], 500, seed=11)
    report = monotone_flow_check(bistable, pairs, n_jobs=2)
    assert report.failed == 0
    assert report.passed >= 450


@pytest.mark.slow
def test_dichotomy_is_decided_and_exhaustive(bistable):
    report = run_property_suite(bistable, n_pairs=200, seed=7, properties=["dichotomy"])["dichotomy"]
    assert report.failed == 0
    assert report.passed + report.failed >= 0.9 * report.tested
    assert report.tags.get("branch_a", 0) >= 10
    assert report.tags.get("branch_b", 0) >= 10
