"""ω-limit estimation and the property suites built on it.

ω-sets are represented by finite tail samples; every property check is
three-valued and an undecided outcome never counts as a pass or a failure.
"""
import logging
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed  # type: ignore
from scipy.optimize import minimize_scalar  # type: ignore
from scipy.spatial.distance import directed_hausdorff  # type: ignore

from .constants import (EPS_CONV, EQUILIBRIUM_RESIDUAL_TOL, OMEGA_N_TAIL, OMEGA_T_MAX,
                        OMEGA_WINDOW, RECURRENCE_TOL, OmegaClass, OrderRelation, Outcome,
                        TrajectoryStatus)
from .dynamics import (EquilibriumSet, IntegratorOptions, SystemSpec, _Integration, _check_point,
                       _inside, damped_newton, find_equilibria, flow, flow_ensemble)
from .evaluation import PropertyReport
from .exceptions import ArgumentError, DomainError, StiffnessError
from .geometry import Point
from .order import SearchBudget, compare, sample_ordered_pairs

logger = logging.getLogger(__name__)

DEFAULT_T_GRID = (0.1, 1.0, 5.0, 20.0)
OPENNESS_T_GRID = (0.05, 0.1, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0)
PROPERTIES = ("monotonicity", "order_openness", "nonordering", "intersection", "dichotomy",
              "order_recurrence")


@dataclass(frozen=True)
class OmegaBudget:
    """Budget of :func:`omega_estimate`.

    Args:
        t_max (float): integration horizon.
        eps_conv (float): convergence radius around a refined equilibrium.
        recurrence_tol (float): near-return distance declaring a periodic orbit.
        window (float): length of the trailing window checked for convergence.
        n_tail (int): number of tail samples kept over one window.
        transient_fraction (float): share of ``t_max`` skipped before a recurrence
          reference state is chosen.
    """
    t_max: float = OMEGA_T_MAX
    eps_conv: float = EPS_CONV
    recurrence_tol: float = RECURRENCE_TOL
    window: float = OMEGA_WINDOW
    n_tail: int = OMEGA_N_TAIL
    transient_fraction: float = 0.25

    def __post_init__(self):
        if min(self.t_max, self.eps_conv, self.recurrence_tol, self.window) <= 0:
            raise ArgumentError("Omega budget tolerances and times must be > 0.")
        if self.n_tail < 2 or not 0 <= self.transient_fraction < 1:
            raise ArgumentError("Omega budget needs n_tail >= 2 and a transient fraction in [0, 1).")

    def doubled(self) -> "OmegaBudget":
        return OmegaBudget(2 * self.t_max, self.eps_conv, self.recurrence_tol, self.window,
                           self.n_tail, self.transient_fraction)

    def to_dict(self) -> Dict[str, float]:
        return {"t_max": self.t_max, "eps_conv": self.eps_conv,
                "recurrence_tol": self.recurrence_tol, "window": self.window,
                "n_tail": self.n_tail}


@dataclass
class OmegaEstimate:
    """Estimated ω-limit set of one point.

    ``equilibrium`` is set for ``CONVERGED_TO`` and ``equilibrium_index`` refers
    to the :obj:`~diffpos.dynamics.EquilibriumSet` passed to the estimator, if
    any. ``period`` is set for ``PERIODIC_ORBIT``, whose samples cover one period.
    """
    omega_class: OmegaClass
    samples: np.ndarray
    manifold: Any
    budget_used: float
    residual: float
    equilibrium: Optional[Point] = None
    equilibrium_index: Optional[int] = None
    period: Optional[float] = None
    note: str = ""

    @property
    def omega_samples(self) -> List[Point]:
        return [Point(sample, self.manifold) for sample in self.samples]

    @property
    def decided(self) -> bool:
        return self.omega_class in (OmegaClass.CONVERGED_TO, OmegaClass.PERIODIC_ORBIT)

    @property
    def converged(self) -> bool:
        return self.omega_class is OmegaClass.CONVERGED_TO

    def limit_points(self) -> np.ndarray:
        """Chart coordinates standing for the ω-set."""
        if self.omega_class is OmegaClass.CONVERGED_TO:
            return self.equilibrium.coords.reshape(1, -1)  # type: ignore
        if self.omega_class is OmegaClass.ESCAPED:
            return np.empty((0, self.manifold.dim))
        return self.samples

    def to_dict(self) -> Dict[str, Any]:
        return {"class": self.omega_class.value,
                "equilibrium": None if self.equilibrium is None else self.equilibrium.coords.tolist(),
                "equilibrium_index": self.equilibrium_index, "period": self.period,
                "omega_samples": self.samples.tolist(), "budget_used": self.budget_used,
                "residual": self.residual, "note": self.note}


def _match_equilibrium(equilibria: Optional[EquilibriumSet], coords: np.ndarray,
                       radius: float) -> Optional[int]:
    if equilibria is None or len(equilibria) == 0:
        return None
    return equilibria.index_of(coords, radius)


def _period_samples(sys: SystemSpec, start: np.ndarray, period: float, n: int,
                    opts: IntegratorOptions) -> np.ndarray:
    times = np.linspace(0.0, period, n, endpoint=False)
    trajectory = flow(sys, Point(start, sys.manifold), period, opts, t_eval=times)
    return trajectory.states


def _refine_return(dense: Callable[[float], np.ndarray], reference: np.ndarray, t_low: float,
                   t_high: float) -> Tuple[float, float]:
    result = minimize_scalar(lambda t: float(np.linalg.norm(dense(t) - reference)),
                             bounds=(t_low, t_high), method="bounded",
                             options={"xatol": 1e-10})
    return float(result.x), float(result.fun)


def omega_estimate(sys: SystemSpec, x: Point, budget: Optional[OmegaBudget] = None,
                   equilibria: Optional[EquilibriumSet] = None,
                   opts: Optional[IntegratorOptions] = None) -> OmegaEstimate:
    """Classify the forward orbit of ``x`` by its ω-limit set.

    The orbit is integrated up to ``budget.t_max`` while a ring buffer keeps
    ``n_tail`` samples of the trailing window. At every window boundary the
    tail is tested against a Newton-refined equilibrium. After the transient a
    reference state is fixed; a local minimum of the distance to it below
    ``recurrence_tol``, later than ten integrator steps, is a periodic orbit.

    Args:
        sys (:obj:`SystemSpec`): the system.
        x (:obj:`Point`): initial point.
        budget (:obj:`OmegaBudget`, optional): horizon and tolerances.
        equilibria (:obj:`EquilibriumSet`, optional): known equilibria used to
          label the limit.
        opts (:obj:`IntegratorOptions`, optional): integrator options.

    Returns:
        :obj:`OmegaEstimate`: integrator failures give ``UNDECIDED`` with a note.

    Examples:
        >>> from diffpos.systems import get_system
        >>> sys = get_system("decay")
        >>> omega_estimate(sys, sys.point([1.0])).omega_class.value
        'converged_to'
    """
    budget = budget or OmegaBudget()
    opts = opts or IntegratorOptions()
    _check_point(sys, x)
    y0 = np.array(x.coords)
    residual0 = float(np.linalg.norm(sys.vector_field(y0)))
    if residual0 < EQUILIBRIUM_RESIDUAL_TOL:
        return OmegaEstimate(OmegaClass.CONVERGED_TO, y0.reshape(1, -1), sys.manifold, 0.0,
                             residual0, equilibrium=Point(y0, sys.manifold),
                             equilibrium_index=_match_equilibrium(equilibria, y0,
                                                                  10 * budget.eps_conv))

    tail: deque = deque(maxlen=budget.n_tail)
    spacing = budget.window / budget.n_tail
    next_sample, next_window = 0.0, budget.window
    transient = budget.transient_fraction * budget.t_max
    reference: Optional[np.ndarray] = None
    t_reference = 0.0
    history: deque = deque(maxlen=3)
    t, y = 0.0, y0

    def undecided(note: str) -> OmegaEstimate:
        samples = np.array(tail) if tail else y.reshape(1, -1)
        return OmegaEstimate(OmegaClass.UNDECIDED, samples, sys.manifold, t,
                             float(np.linalg.norm(sys.vector_field(y))), note=note)

    try:
        run = _Integration(sys.vector_field, y0, budget.t_max, opts,
                           lambda state: _inside(sys.manifold, state, opts))
        while run.running:
            t_old, _, t, y = run.step()
            if run.status is TrajectoryStatus.ESCAPED:
                samples = np.array(tail) if tail else y0.reshape(1, -1)
                return OmegaEstimate(OmegaClass.ESCAPED, samples, sys.manifold, t, float("nan"),
                                     note="left the chart domain or the escape radius")
            while next_sample <= t:
                tail.append(run.dense(next_sample))
                next_sample += spacing

            if t >= next_window:
                next_window += budget.window
                states = np.array(tail)
                if len(tail) == budget.n_tail \
                        and np.max(np.linalg.norm(states - y, axis=1)) < budget.eps_conv:
                    try:
                        root = damped_newton(sys, y)
                    except DomainError:
                        root = None
                    if root is not None \
                            and np.max(np.linalg.norm(states - root, axis=1)) < budget.eps_conv:
                        return OmegaEstimate(
                            OmegaClass.CONVERGED_TO, states, sys.manifold, t,
                            float(np.linalg.norm(sys.vector_field(y))),
                            equilibrium=Point(root, sys.manifold),
                            equilibrium_index=_match_equilibrium(equilibria, root,
                                                                 10 * budget.eps_conv))

            if reference is None:
                if t >= transient and np.linalg.norm(sys.vector_field(y)) > budget.recurrence_tol:
                    reference, t_reference = y.copy(), t
                    history.append((t, 0.0, None))
                continue
            history.append((t, float(np.linalg.norm(y - reference)), run.solver.dense_output()))
            if len(history) < 3:
                continue
            (t0, d0, _), (t1, d1, dense1), (t2, d2, dense2) = history
            if d1 < d0 and d1 <= d2:
                # a step-end minimum brackets the closest return within the last two steps
                candidates = [(t1, d1), _refine_return(dense1, reference, t0, t1),
                              _refine_return(dense2, reference, t1, t2)]
                t_min, d_min = min(candidates, key=lambda pair: pair[1])
                floor = 10 * (t2 - t1)
                if d_min < budget.recurrence_tol and t_min - t_reference > floor:
                    period = t_min - t_reference
                    samples = _period_samples(sys, reference, period, budget.n_tail, opts)
                    logger.debug("Near-return after %.6g time units from %r.", period, x)
                    return OmegaEstimate(OmegaClass.PERIODIC_ORBIT, samples, sys.manifold, t,
                                         float(np.linalg.norm(sys.vector_field(y))),
                                         period=period)
    except StiffnessError as error:
        logger.warning("Integration from %r failed: %s", x, error)
        return undecided(f"integration failed: {error}")
    return undecided(f"no decision within t_max={budget.t_max!r}")


def omega_invariance_residual(sys: SystemSpec, estimate: OmegaEstimate, s: float = 1.0,
                              opts: Optional[IntegratorOptions] = None) -> float:
    """Distance between :math:`\\varphi_s` of the ω-samples and the ω-set.

    For periodic orbits each image is compared with the orbit near its closest
    sample (a short flow refined by :func:`scipy.optimize.minimize_scalar`);
    otherwise the symmetric Hausdorff distance of the two sample sets is used.
    """
    points = estimate.limit_points()
    if len(points) == 0:
        return float("nan")
    starts = [Point(p, sys.manifold) for p in points]
    images = np.array([trajectory.states[-1] for trajectory in
                       flow_ensemble(sys, starts, s, opts, t_eval=[s])])
    if estimate.omega_class is OmegaClass.PERIODIC_ORBIT and estimate.period:
        spacing = estimate.period / len(points)
        worst = 0.0
        for image in images:
            nearest = int(np.argmin(np.linalg.norm(points - image, axis=1)))

            def gap(tau: float) -> float:
                return float(np.linalg.norm(flow(sys, starts[nearest], tau, opts).states[-1] - image))

            result = minimize_scalar(gap, bounds=(-spacing, spacing), method="bounded",
                                     options={"xatol": 1e-10})
            worst = max(worst, float(result.fun))
        return worst
    return float(max(directed_hausdorff(images, points)[0],
                     directed_hausdorff(points, images)[0]))


def _resolution(budget: OmegaBudget) -> Dict[str, Any]:
    return {"n_tail": budget.n_tail, "eps_conv": budget.eps_conv, "t_max": budget.t_max}


def _pair_witness(x: Point, y: Point, **extra: Any) -> Dict[str, Any]:
    return {"x": x.coords.tolist(), "y": y.coords.tolist(), **extra}


def _monotone_pair(sys: SystemSpec, x: Point, y: Point, t_grid: np.ndarray,
                   opts: IntegratorOptions,
                   budget: Optional[SearchBudget]) -> Tuple[Outcome, Optional[dict], float]:
    if not compare(sys, x, y, budget).ordered:
        return Outcome.UNDECIDED, None, 0.0
    try:
        first, second = flow_ensemble(sys, [x, y], float(t_grid[-1]), opts, t_eval=t_grid)
    except StiffnessError:
        return Outcome.UNDECIDED, None, 0.0
    resolution = 10 * opts.atol
    undecided = first.escaped and len(first.times) < len(t_grid)
    for t, fx, fy in zip(first.times, first.states, second.states):
        if np.linalg.norm(fy - fx) <= resolution:
            undecided = True
            continue
        verdict = compare(sys, Point(fx, sys.manifold), Point(fy, sys.manifold), budget)
        if verdict.relation is OrderRelation.STRICTLY_LESS:
            continue
        if verdict.decided:
            margin = verdict.margin if verdict.margin is not None else 0.0
            return Outcome.FAIL, _pair_witness(x, y, t=float(t),
                                               relation=verdict.relation.value), margin
        undecided = True
    return (Outcome.UNDECIDED if undecided else Outcome.PASS), None, 0.0


def monotone_flow_check(sys: SystemSpec, pairs: Sequence[Tuple[Point, Point]],
                        t_grid: Sequence[float] = DEFAULT_T_GRID,
                        opts: Optional[IntegratorOptions] = None,
                        budget: Optional[SearchBudget] = None, n_jobs: int = 1) -> PropertyReport:
    """Check that ordered pairs become strictly ordered under the flow.

    A pair passes when :math:`\\varphi_t(x) \\ll \\varphi_t(y)` at every positive
    grid time. Pairs are integrated jointly; differences below ``10 * atol`` are
    undecided, and so are pairs not ordered at time zero.
    """
    opts = opts or IntegratorOptions()
    grid = np.unique(np.asarray(t_grid, dtype=float))
    grid = grid[grid > 0]
    if grid.size == 0:
        raise ArgumentError("t_grid needs at least one positive time.")
    results = Parallel(n_jobs=n_jobs)(delayed(_monotone_pair)(sys, x, y, grid, opts, budget)
                                      for x, y in pairs)
    report = PropertyReport("monotonicity", resolution={"t_grid": grid.tolist()})
    for outcome, witness, score in results:
        report.record(outcome, witness, score)
    logger.info("Monotonicity on %s: %d pass, %d fail, %d undecided.", sys.name,
                report.passed, report.failed, report.undecided)
    return report


def nonordering_check(sys: SystemSpec, omega: OmegaEstimate,
                      budget: Optional[SearchBudget] = None) -> PropertyReport:
    """No two ω-samples may be ordered; a singleton ω-set passes vacuously.

    Periodic and undecided estimates are compared pairwise over their samples.
    Escaped estimates, or fewer than two samples, give a single undecided record.
    """
    report = PropertyReport("nonordering", resolution={"n_samples": len(omega.samples)})
    if omega.omega_class is OmegaClass.CONVERGED_TO:
        report.record(Outcome.PASS, tag="vacuous")
        return report
    if omega.omega_class is OmegaClass.ESCAPED or len(omega.samples) < 2:
        report.record(Outcome.UNDECIDED)
        return report
    points = omega.omega_samples
    for i, p in enumerate(points):
        for q in points[i + 1:]:
            forward, backward = compare(sys, p, q, budget), compare(sys, q, p, budget)
            if forward.ordered or backward.ordered:
                ordered = forward if forward.ordered else backward
                report.record(Outcome.FAIL, _pair_witness(p, q, relation=ordered.relation.value),
                              -float(np.linalg.norm(q.coords - p.coords)))
            elif forward.decided and backward.decided:
                report.record(Outcome.PASS)
            else:
                report.record(Outcome.UNDECIDED)
    return report


def _ordered_precondition(sys: SystemSpec, x: Point, y: Point,
                          budget: Optional[SearchBudget]) -> bool:
    return compare(sys, x, y, budget).ordered


def intersection_check(sys: SystemSpec, x: Point, y: Point,
                       budget: Optional[OmegaBudget] = None,
                       opts: Optional[IntegratorOptions] = None,
                       order_budget: Optional[SearchBudget] = None,
                       omega_x: Optional[OmegaEstimate] = None,
                       omega_y: Optional[OmegaEstimate] = None) -> PropertyReport:
    """Common ω-points of an ordered pair must be equilibria (``|f| < 10 ε_conv``)."""
    budget = budget or OmegaBudget()
    report = PropertyReport("intersection", resolution=_resolution(budget))
    if not _ordered_precondition(sys, x, y, order_budget):
        report.record(Outcome.UNDECIDED, tag="precondition_unmet")
        return report
    omega_x = omega_x or omega_estimate(sys, x, budget, opts=opts)
    omega_y = omega_y or omega_estimate(sys, y, budget, opts=opts)
    if not (omega_x.decided and omega_y.decided):
        report.record(Outcome.UNDECIDED)
        return report
    others = omega_y.limit_points()
    common = [p for p in omega_x.limit_points()
              if np.min(np.linalg.norm(others - p, axis=1)) < budget.eps_conv]
    if not common:
        report.record(Outcome.PASS, tag="vacuous")
        return report
    residuals = [float(np.linalg.norm(sys.vector_field(p))) for p in common]
    worst = int(np.argmax(residuals))
    if residuals[worst] < 10 * budget.eps_conv:
        report.record(Outcome.PASS)
    else:
        report.record(Outcome.FAIL, _pair_witness(x, y, common_point=common[worst].tolist()),
                      -residuals[worst])
    return report


def dichotomy_check(sys: SystemSpec, x: Point, y: Point, budget: Optional[OmegaBudget] = None,
                    opts: Optional[IntegratorOptions] = None,
                    order_budget: Optional[SearchBudget] = None,
                    omega_x: Optional[OmegaEstimate] = None,
                    omega_y: Optional[OmegaEstimate] = None) -> PropertyReport:
    """Limit-set dichotomy for an ordered pair.

    Passes with tag ``branch_a`` when both points converge to the same
    equilibrium and with tag ``branch_b`` when every cross pair of ω-samples is
    strictly ordered. This also covers the absorption statements: distinct
    ω-sets of an ordered pair must be strictly ordered.
    """
    budget = budget or OmegaBudget()
    report = PropertyReport("dichotomy", resolution=_resolution(budget))
    if not _ordered_precondition(sys, x, y, order_budget):
        report.record(Outcome.UNDECIDED, tag="precondition_unmet")
        return report
    omega_x = omega_x or omega_estimate(sys, x, budget, opts=opts)
    omega_y = omega_y or omega_estimate(sys, y, budget, opts=opts)
    if not (omega_x.decided and omega_y.decided):
        report.record(Outcome.UNDECIDED)
        return report
    if omega_x.converged and omega_y.converged and np.linalg.norm(
            omega_x.equilibrium.coords - omega_y.equilibrium.coords) < 10 * budget.eps_conv:  # type: ignore
        report.record(Outcome.PASS, tag="branch_a")
        return report
    undecided = False
    for p in omega_x.limit_points():
        for q in omega_y.limit_points():
            verdict = compare(sys, Point(p, sys.manifold), Point(q, sys.manifold), order_budget)
            if verdict.relation is OrderRelation.STRICTLY_LESS:
                continue
            if verdict.decided:
                margin = verdict.margin if verdict.margin is not None else 0.0
                report.record(Outcome.FAIL,
                              _pair_witness(x, y, p=p.tolist(), q=q.tolist(),
                                            relation=verdict.relation.value), margin)
                return report
            undecided = True
    report.record(Outcome.UNDECIDED if undecided else Outcome.PASS,
                  tag=None if undecided else "branch_b")
    return report


def order_recurrence_check(sys: SystemSpec, x: Point, T: float = 1.0,
                           budget: Optional[OmegaBudget] = None,
                           opts: Optional[IntegratorOptions] = None,
                           order_budget: Optional[SearchBudget] = None,
                           omega: Optional[OmegaEstimate] = None) -> PropertyReport:
    """A point ordered with its own image :math:`\\varphi_T(x)` must converge.

    Either order direction counts. Equilibria pass as the reflexive case and a
    decidedly unordered pair passes vacuously.
    """
    if T <= 0:
        raise ArgumentError("T must be > 0.")
    budget = budget or OmegaBudget()
    opts = opts or IntegratorOptions()
    report = PropertyReport("order_recurrence", resolution=_resolution(budget))
    if np.linalg.norm(sys.vector_field(x.coords)) < EQUILIBRIUM_RESIDUAL_TOL:
        report.record(Outcome.PASS, tag="vacuous")
        return report
    try:
        image = flow(sys, x, T, opts)
    except StiffnessError:
        report.record(Outcome.UNDECIDED)
        return report
    if image.escaped:
        report.record(Outcome.UNDECIDED)
        return report
    forward = compare(sys, x, image.endpoint, order_budget)
    backward = compare(sys, image.endpoint, x, order_budget)
    if not (forward.ordered or backward.ordered):
        if forward.decided and backward.decided:
            report.record(Outcome.PASS, tag="vacuous")
        else:
            report.record(Outcome.UNDECIDED)
        return report
    omega = omega or omega_estimate(sys, x, budget, opts=opts)
    if omega.converged:
        report.record(Outcome.PASS)
    elif omega.omega_class is OmegaClass.PERIODIC_ORBIT:
        report.record(Outcome.FAIL, {"x": x.coords.tolist(), "T": T, "period": omega.period},
                      -1.0)
    else:
        report.record(Outcome.UNDECIDED)
    return report


def _ball(center: np.ndarray, radius: float, n: int, rng: np.random.Generator) -> np.ndarray:
    directions = rng.normal(size=(n, center.size))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.uniform(size=(n, 1)) ** (1.0 / center.size)
    return center + radii * directions


def order_openness_probe(sys: SystemSpec, x: Point, y: Point, delta: float, n: int = 16,
                         t_grid: Sequence[float] = OPENNESS_T_GRID, seed: int = 0,
                         opts: Optional[IntegratorOptions] = None,
                         budget: Optional[SearchBudget] = None) -> PropertyReport:
    """Find ``t0`` with :math:`\\varphi_t(x') \\ll \\varphi_t(y')` for all grid ``t >= t0``.

    ``x'`` and ``y'`` range over ``n`` perturbations drawn from the balls of
    radius ``delta``. The found ``t0`` is reported in ``tags["t0"]``; failing at
    the last grid time is a failure.
    """
    if delta <= 0 or n < 1:
        raise ArgumentError("order_openness_probe needs delta > 0 and n >= 1.")
    grid = np.unique(np.asarray(t_grid, dtype=float))
    grid = grid[grid > 0]
    if grid.size == 0:
        raise ArgumentError("t_grid needs at least one positive time.")
    report = PropertyReport("order_openness", resolution={"delta": delta, "n": n,
                                                          "t_grid": grid.tolist()})
    if not compare(sys, x, y, budget).ordered:
        report.record(Outcome.UNDECIDED, tag="precondition_unmet")
        return report
    rng = np.random.default_rng(seed)
    starts = [Point(c, sys.manifold) for c in _ball(x.coords, delta, n, rng)] \
        + [Point(c, sys.manifold) for c in _ball(y.coords, delta, n, rng)]
    try:
        trajectories = flow_ensemble(sys, starts, float(grid[-1]), opts, t_eval=grid)
    except (StiffnessError, DomainError):
        report.record(Outcome.UNDECIDED)
        return report
    reached = len(trajectories[0].times)
    strict = np.zeros(reached, dtype=bool)
    undecided = np.zeros(reached, dtype=bool)
    witness: Optional[dict] = None
    for k in range(reached):
        relations = [compare(sys, Point(trajectories[i].states[k], sys.manifold),
                             Point(trajectories[n + i].states[k], sys.manifold), budget)
                     for i in range(n)]
        strict[k] = all(r.relation is OrderRelation.STRICTLY_LESS for r in relations)
        undecided[k] = not strict[k] and all(r.relation is OrderRelation.STRICTLY_LESS
                                             or not r.decided for r in relations)
        if not strict[k]:
            failing = next(i for i, r in enumerate(relations)
                           if r.relation is not OrderRelation.STRICTLY_LESS)
            witness = _pair_witness(starts[failing], starts[n + failing], t=float(grid[k]))
    if reached < grid.size or undecided[-1]:
        report.record(Outcome.UNDECIDED)
        return report
    if not strict[-1]:
        report.record(Outcome.FAIL, witness, -float(grid[-1]))
        return report
    first = reached - 1
    while first > 0 and strict[first - 1]:
        first -= 1
    report.record(Outcome.PASS)
    report.tags["t0"] = float(grid[first])
    return report


def _merge(name: str, reports: Sequence[PropertyReport], resolution: Mapping[str, Any]
           ) -> PropertyReport:
    merged = PropertyReport(name, resolution=dict(resolution))
    for report in reports:
        if "t0" in report.tags:
            merged.tags.setdefault("t0", []).append(report.tags.pop("t0"))
        merged.merge(report)
    return merged


def run_property_suite(sys: SystemSpec, region: Optional[np.ndarray] = None,
                       properties: Optional[Sequence[str]] = None, n_pairs: int = 50,
                       t_grid: Sequence[float] = DEFAULT_T_GRID, seed: int = 0,
                       opts: Optional[IntegratorOptions] = None,
                       omega_budget: Optional[OmegaBudget] = None,
                       order_budget: Optional[SearchBudget] = None,
                       n_jobs: int = 1) -> Dict[str, PropertyReport]:
    """Run the selected properties on random ordered pairs of the region.

    ω-estimates are computed once per distinct point (in parallel with
    ``n_jobs`` workers) and shared between the ω-based properties.

    Returns:
        dict: property name to its :obj:`PropertyReport`, in :data:`PROPERTIES` order.
    """
    selected = list(properties) if properties else list(PROPERTIES)
    unknown = sorted(set(selected) - set(PROPERTIES))
    if unknown:
        raise ArgumentError(f"Unknown properties {unknown}; available: {', '.join(PROPERTIES)}.")
    opts = opts or IntegratorOptions()
    omega_budget = omega_budget or OmegaBudget()
    region = region if region is not None else sys.region
    pairs = sample_ordered_pairs(sys, region, n_pairs, seed, budget=order_budget)
    logger.info("Property suite on %s: %d ordered pairs, properties %s.", sys.name, len(pairs),
                ", ".join(selected))
    reports: Dict[str, PropertyReport] = {}

    if "monotonicity" in selected:
        reports["monotonicity"] = monotone_flow_check(sys, pairs, t_grid, opts, order_budget,
                                                      n_jobs)
    if "order_openness" in selected:
        results = Parallel(n_jobs=n_jobs)(
            delayed(order_openness_probe)(sys, x, y,
                                          min(0.01, 0.25 * float(np.linalg.norm(y.coords - x.coords))),
                                          8, OPENNESS_T_GRID, seed + k, opts, order_budget)
            for k, (x, y) in enumerate(pairs))
        reports["order_openness"] = _merge("order_openness", results,
                                           {"t_grid": list(OPENNESS_T_GRID), "n": 8})

    omega_based = [name for name in ("nonordering", "intersection", "dichotomy",
                                     "order_recurrence") if name in selected]
    if omega_based:
        equilibria = find_equilibria(sys, region, seed=seed)
        points = [p for pair in pairs for p in pair]
        estimates = Parallel(n_jobs=n_jobs)(delayed(omega_estimate)(sys, p, omega_budget,
                                                                    equilibria, opts)
                                            for p in points)
        omega_of = list(zip(estimates[0::2], estimates[1::2]))
        resolution = _resolution(omega_budget)
        if "nonordering" in selected:
            reports["nonordering"] = _merge(
                "nonordering", [nonordering_check(sys, omega, order_budget) for omega in estimates],
                resolution)
        if "intersection" in selected:
            reports["intersection"] = _merge(
                "intersection", [intersection_check(sys, x, y, omega_budget, opts, order_budget,
                                                    ox, oy)
                                 for (x, y), (ox, oy) in zip(pairs, omega_of)], resolution)
        if "dichotomy" in selected:
            reports["dichotomy"] = _merge(
                "dichotomy", [dichotomy_check(sys, x, y, omega_budget, opts, order_budget, ox, oy)
                              for (x, y), (ox, oy) in zip(pairs, omega_of)], resolution)
        if "order_recurrence" in selected:
            reports["order_recurrence"] = _merge(
                "order_recurrence", [order_recurrence_check(sys, x, 1.0, omega_budget, opts,
                                                            order_budget, ox)
                                     for (x, _), (ox, _) in zip(pairs, omega_of)], resolution)
    for report in reports.values():
        if report.failed:
            logger.warning("Property %s failed on %d of %d items.", report.name, report.failed,
                           report.tested)
    return {name: reports[name] for name in PROPERTIES if name in reports}
