import numpy as np
import pytest

from diffpos.census import (CensusReport, LineCensus, build_foliation, classify_sample,
                            countability_probe, measure_estimate, run_line_census,
                            trace_stable_manifold)
from diffpos.cones import ConeFieldSpec, ConeSpec
from diffpos.constants import SampleClass, StabilityTag
from diffpos.dynamics import SystemSpec, find_equilibria
from diffpos.exceptions import ArgumentError, FoliationError
from diffpos.geometry import ManifoldSpec
from diffpos.limits import OmegaBudget
from diffpos.systems import get_system

C = SampleClass.CONVERGENT
S = SampleClass.SADDLE_CONVERGENT


@pytest.fixture(scope="module")
def tristable():
    return get_system("tristable_tanh")


@pytest.fixture(scope="module")
def bistable_foliation(bistable):
    return build_foliation(bistable, resolution=(5, 21))


@pytest.fixture(scope="module")
def bistable_lines(bistable, bistable_foliation):
    return run_line_census(bistable, bistable_foliation, order_fraction=1.0)


@pytest.fixture(scope="module")
def bistable_report(bistable, bistable_foliation, bistable_lines):
    return measure_estimate(bistable_lines, bistable_foliation, bistable, seed=3)


def _line(classes, omega_points=None, line_index=0):
    n = len(classes)
    return LineCensus(line_index, np.zeros(1), float(n - 1), np.zeros((n, 2)), list(classes),
                      [0 if c is C else None for c in classes], np.zeros(n), np.ones(n),
                      omega_points or {})


def test_bistable_foliation(bistable_foliation):
    assert np.allclose(bistable_foliation.direction, [np.sqrt(0.5), np.sqrt(0.5)])
    assert np.allclose(np.abs(bistable_foliation.complement), [[np.sqrt(0.5), np.sqrt(0.5)]])
    assert bistable_foliation.margin == pytest.approx(np.sqrt(0.5))
    assert bistable_foliation.shrinks == 0
    assert bistable_foliation.condition_number == pytest.approx(1.0)
    assert bistable_foliation.line_offsets().shape == (5, 1)
    assert bistable_foliation.cell_volume == pytest.approx(4 * np.sqrt(2.0) / 5)


def test_line_geometry(bistable_foliation):
    segment = bistable_foliation.line_segment(np.zeros(1))
    assert segment == pytest.approx((-2 * np.sqrt(2.0), 2 * np.sqrt(2.0)))
    coarse = bistable_foliation.line_points(np.array([0.5]), 5)
    fine = bistable_foliation.line_points(np.array([0.5]), 9)
    assert np.allclose(coarse, fine[::2])
    assert bistable_foliation.line_segment(np.array([10.0])) is None
    assert bistable_foliation.line_points(np.array([10.0])).shape == (0, 2)


def test_one_dimensional_foliation():
    decay = get_system("decay")
    foliation = build_foliation(decay, resolution=(3, 11))
    assert foliation.direction.tolist() == [1.0]
    assert foliation.complement.shape == (0, 1)
    assert foliation.line_offsets().shape == (1, 0)
    assert foliation.cell_volume == 1.0
    lines = run_line_census(decay, foliation, OmegaBudget(t_max=40.0))
    assert len(lines) == 1
    assert lines[0].n_non_convergent == 0
    assert lines[0].length == pytest.approx(4.0)


def test_second_order_foliation():
    system = SystemSpec(name="soc3", manifold=ManifoldSpec.euclidean(3),
                        cone_field=ConeFieldSpec.constant(ConeSpec.second_order([1, 0, 0], 0.5)),
                        f=lambda x: -x, region=np.tile([-1.0, 1.0], (3, 1)))
    foliation = build_foliation(system, resolution=(2, 3))
    assert np.allclose(foliation.direction, [1.0, 0.0, 0.0])
    assert np.allclose(foliation.complement @ [1.0, 0.0, 0.0], 0.0)
    assert foliation.line_offsets().shape == (4, 2)


def test_foliation_shrinks_until_interior(bistable):
    tilted = ConeSpec.halfspaces([[1.0, -3.0], [0.0, 1.0]])
    field = ConeFieldSpec.custom(
        lambda c: ConeSpec.orthant(2) if np.max(np.abs(c)) <= 0.6 else tilted)
    system = SystemSpec(name="tilted", manifold=bistable.manifold, cone_field=field,
                        f=bistable.f, jacobian=bistable.jacobian, region=bistable.region)
    foliation = build_foliation(system, resolution=(3, 5))
    assert foliation.shrinks == 2
    assert np.allclose(foliation.region, [[-0.5, 0.5], [-0.5, 0.5]])
    with pytest.raises(FoliationError):
        build_foliation(system, resolution=(3, 5), max_shrinks=1)


@pytest.mark.parametrize("x, kwargs", [(None, dict(resolution=(0, 5))),
                                       (None, dict(resolution=(3, 1))),
                                       ([0.0, 0.0], dict(region=[[0.0, 1.0], [0.0, 1.0]]))])
def test_foliation_arguments(bistable, x, kwargs):
    with pytest.raises(ArgumentError):
        build_foliation(bistable, None if x is None else bistable.point(x), **kwargs)


def test_bistable_lines_cross_the_stable_manifold_once(bistable_lines):
    assert [line.cluster_count for line in bistable_lines] == [1] * 5
    for line in bistable_lines:
        assert line.n_samples == 21
        assert line.classes[10] is S
        assert line.n_non_convergent == 1
        assert line.label_changes() == 1
        assert line.labels()[0] == "e0" and line.labels()[-1] == "e2"
        assert line.order_checked == 20
        assert line.order_violations == 0


def test_line_frame(bistable_lines):
    frame = bistable_lines[0].to_frame()
    assert list(frame.columns) == ["line_index", "point_index", "x0", "x1", "class",
                                   "equilibrium_index", "omega_residual"]
    assert len(frame) == 21
    assert frame["class"].iloc[10] == "saddle_convergent"


@pytest.mark.parametrize("system_name", ["decay", "linear_metzler"])
def test_globally_convergent_systems(system_name):
    system = get_system(system_name)
    foliation = build_foliation(system, resolution=(3, 5))
    lines = run_line_census(system, foliation, OmegaBudget(t_max=40.0))
    assert all(line.n_non_convergent == 0 for line in lines)
    report = measure_estimate(lines, foliation)
    assert report.fubini_estimate == 0.0
    assert report.non_convergent_fraction == 0.0


def test_classify_sample(bistable):
    equilibria = find_equilibria(bistable, seed=0)
    budget = OmegaBudget()
    assert classify_sample(bistable, np.array([0.5, 0.5]), budget, equilibria)[0] is C
    assert classify_sample(bistable, np.array([0.3, -0.3]), budget, equilibria)[0] is S


def test_classify_sample_outside_domain(spd_relax):
    cls, estimate = classify_sample(spd_relax, np.array([1.0, 2.0, 1.0]), OmegaBudget(),
                                    find_equilibria(spd_relax, n_seeds=4))
    assert cls is SampleClass.ESCAPED
    assert estimate.samples.shape == (0, 3)


def test_fubini_estimate(bistable_foliation, bistable_lines):
    report = measure_estimate(bistable_lines, bistable_foliation)
    assert isinstance(report, CensusReport)
    assert report.region_measure == pytest.approx(16.0, rel=0.1)
    assert report.fubini_estimate == pytest.approx(report.region_measure / 21)
    assert report.fubini_upper >= report.fubini_estimate
    assert 0 < report.fubini_sigma < report.fubini_estimate
    assert report.fubini_resolution == pytest.approx(report.region_measure / 20)
    assert report.system == "bistable_tanh"
    assert report.mc_estimate is None
    assert report.estimators_agree is None
    assert sum(report.basin_fractions.values()) == pytest.approx(1.0)
    assert report.basin_fractions["saddle_convergent"] == pytest.approx(1 / 21)


def _report(foliation, fubini, sigma, resolution, mc_interval, upper=None):
    return CensusReport("bistable_tanh", foliation, [], fubini, sigma,
                        fubini if upper is None else upper, 16.0, resolution,
                        mc_estimate=sum(mc_interval) / 2, mc_interval=mc_interval)


@pytest.mark.parametrize("fubini, sigma, resolution, mc_interval, upper, agree", [
    (1.0, 0.05, 0.1, (0.0, 0.05), None, False),
    (0.0, 0.0, 0.0, (0.2, 0.6), None, False),
    (1.0, 0.05, 0.1, (0.8, 1.2), None, True),
    (0.1, 0.01, 0.1, (0.0, 0.05), None, True),
    (0.0, 0.0, 0.0, (0.2, 0.6), 0.3, True),
])
def test_estimator_agreement(bistable_foliation, fubini, sigma, resolution, mc_interval, upper,
                             agree):
    report = _report(bistable_foliation, fubini, sigma, resolution, mc_interval, upper)
    assert report.estimators_agree is agree


def test_fubini_interval(bistable_foliation):
    report = _report(bistable_foliation, 1.0, 0.1, 0.2, (0.0, 1.0), upper=1.5)
    assert report.fubini_interval == pytest.approx((0.5, 2.0))
    assert report.to_dict()["fubini"]["interval"] == pytest.approx([0.5, 2.0])


def test_measure_estimate_with_monte_carlo_and_refinement(bistable_report):
    report = bistable_report
    assert report.mc_samples == 105
    assert report.mc_non_convergent == 0
    assert report.mc_estimate == 0.0
    assert report.mc_interval[0] == 0.0 and report.mc_interval[1] == pytest.approx(16 * 3 / 105)
    assert report.estimators_agree
    assert [level.factor for level in report.refinement] == [1, 2, 4]
    assert [level.n_points for level in report.refinement] == [21, 41, 81]
    assert [level.fraction for level in report.refinement] == pytest.approx([1 / 21, 1 / 41,
                                                                             1 / 81])
    assert report.refinement_non_increasing
    assert report.refinement_ratio >= 1.8
    assert report.refinement[1].agreement == pytest.approx(1.0)
    assert report.decay_constant > 0
    assert sorted(report.refined_censuses) == [1, 2, 4]
    assert [e["stability"] for e in report.equilibria] == ["stable", "saddle", "stable"]


def test_census_report_outputs(bistable_report):
    document = bistable_report.to_dict()
    assert document["n_lines"] == 5
    assert document["n_samples"] == 105
    assert document["cluster_counts"] == [1] * 5
    assert document["max_label_changes"] == 1
    assert len(document["lines"]) == 5
    assert len(bistable_report.to_frame()) == 105


def test_measure_estimate_needs_lines(bistable_foliation):
    with pytest.raises(ArgumentError):
        measure_estimate([], bistable_foliation)


def test_countability_of_bistable(bistable_report, bistable_lines):
    report = countability_probe(bistable_lines, bistable_report.refined_censuses[2])
    assert report.max_count == 1
    assert report.stable == [True] * 5
    assert report.passed
    assert report.to_dict()["shared_omega_violations"] == 0


def test_clusters():
    line = _line([C, S, S, C, SampleClass.PERIODIC, C, SampleClass.ESCAPED])
    assert line.clusters() == [(1, 2), (4, 4), (6, 6)]
    assert line.cluster_count == 3
    assert line.n_non_convergent == 4
    assert line.labels()[:2] == ["e0", "saddle_convergent"]
    assert line.mu == pytest.approx(4 / 7 * 6)
    undecided = _line([C, SampleClass.UNDECIDED, C])
    assert undecided.mu == 0.0
    assert undecided.mu_upper == pytest.approx(2 / 3)


def test_countability_detects_shared_limits():
    classes = [S] + [C] * 13 + [S]
    line = _line(classes, {0: np.array([[0.0, 0.0]]), 14: np.array([[0.0, 0.0]])})
    report = countability_probe([line])
    assert report.shared_omega_violations == 1
    assert report.witnesses == [{"line_index": 0, "samples": [0, 14]}]
    assert not report.passed


def test_countability_detects_splitting_clusters():
    coarse = _line([C, S, C])
    fine = _line([C, S, C, S, C])
    report = countability_probe([coarse], [fine])
    assert report.refined_counts == [2]
    assert report.stable == [False]
    assert not report.passed


def test_tristable_counts(tristable):
    foliation = build_foliation(tristable, resolution=(3, 21))
    lines = run_line_census(tristable, foliation)
    assert all(line.cluster_count in (0, 1, 2) for line in lines)


def test_trace_stable_manifold(bistable):
    saddle = find_equilibria(bistable, seed=0)[1]
    assert saddle.stability is StabilityTag.SADDLE
    branches = trace_stable_manifold(bistable, saddle)
    assert len(branches) == 2
    for branch in branches:
        assert np.all(np.abs(branch.states.sum(axis=1)) < 1e-6 * (1 + np.abs(branch.states[:, 0])))
        assert np.linalg.norm(branch.endpoint.coords) > 1.0


def test_trace_needs_a_stable_direction(bistable):
    stable = find_equilibria(bistable, seed=0)[2]
    with pytest.raises(ArgumentError):
        trace_stable_manifold(bistable, stable)


def test_tristable_saddles_are_traced(tristable):
    saddles = [e for e in find_equilibria(tristable, seed=0) if e.stability is StabilityTag.SADDLE]
    assert len(saddles) == 2
    for saddle in saddles:
        assert len(trace_stable_manifold(tristable, saddle, length=2.0)) == 2


@pytest.mark.slow
def test_desk_scale_census(bistable):
    foliation = build_foliation(bistable, resolution=(101, 201))
    lines = run_line_census(bistable, foliation, n_jobs=4)
    report = measure_estimate(lines, foliation, bistable, n_jobs=4)
    assert report.non_convergent_fraction <= 0.01
    assert report.refinement_ratio >= 1.8
    assert set(report.cluster_counts) <= {0, 1}
    assert report.estimators_agree
    assert countability_probe(lines, report.refined_censuses[2]).passed
