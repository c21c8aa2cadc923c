"""Flows, variational flows, differential positivity and equilibria of a system.

Integration uses the Dormand-Prince 5(4) pair of :class:`scipy.integrate.RK45`,
stepped manually so that escape from the chart domain, step statistics and the
per-step defect can be observed between steps.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd  # type: ignore
from scipy.integrate import RK45  # type: ignore
from sklearn.cluster import DBSCAN  # type: ignore

from .cones import ConeFieldSpec, cone_margin, sample_boundary_rays, sample_interior_rays
from .constants import (DEFAULT_ATOL, DEFAULT_ESCAPE_RADIUS, DEFAULT_RTOL,
                        EQUILIBRIUM_RESIDUAL_TOL, FD_STEP_SCALE, MERGE_RADIUS, STRICT_TOL,
                        DPVerdict, StabilityTag, TrajectoryStatus)
from .exceptions import ArgumentError, DomainError, NumericError, StiffnessError
from .geometry import ManifoldSpec, Point, as_region, sample_points

logger = logging.getLogger(__name__)

VectorField = Callable[[np.ndarray], np.ndarray]
JacobianField = Callable[[np.ndarray], np.ndarray]

# RK45 spends six evaluations per attempted step (first-same-as-last).
_EVALS_PER_STEP = 6
DP_NOTE = ("Differential positivity is checked on sampled rays only: a violation refutes it, "
           "consistency confirms it on the sampled rays and times only.")


@dataclass(frozen=True)
class IntegratorOptions:
    """Tolerances and limits of the adaptive integrator."""
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    max_step: float = np.inf
    first_step: Optional[float] = None
    escape_radius: float = DEFAULT_ESCAPE_RADIUS
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.max_step <= 0 or self.escape_radius <= 0:
            raise ArgumentError("Integrator tolerances, max_step and escape_radius must be > 0.")
        if self.first_step is not None and self.first_step <= 0:
            raise ArgumentError("first_step must be > 0.")


@dataclass(frozen=True)
class DeclaredProperties:
    """Properties a system claims; claims are what the suites hold it to."""
    claims_dp: bool = False
    claims_sdp: bool = False
    claims_h1: bool = False
    claims_h2: bool = False
    claims_h3: bool = False


@dataclass(frozen=True)
class SystemSpec:
    """A system generated by a vector field in chart coordinates.

    Args:
        name (str): system name.
        manifold (:obj:`ManifoldSpec`): the state manifold.
        cone_field (:obj:`ConeFieldSpec`): the cone field of the system.
        f (callable): chart coordinates -> chart velocity.
        jacobian (callable, optional): chart coordinates -> Jacobian of ``f``.
          Central finite differences are used when absent.
        claims (:obj:`DeclaredProperties`): declared properties.
        region (:obj:`numpy.ndarray`, optional): default ``dim x 2`` coordinate box.
    """
    name: str
    manifold: ManifoldSpec
    cone_field: ConeFieldSpec
    f: VectorField = field(repr=False)
    jacobian: Optional[JacobianField] = field(default=None, repr=False)
    claims: DeclaredProperties = DeclaredProperties()
    region: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.region is not None:
            object.__setattr__(self, "region", as_region(self.region, self.manifold.dim))

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def vector_field(self, coords: np.ndarray) -> np.ndarray:
        velocity = np.asarray(self.f(np.asarray(coords, dtype=float)), dtype=float).reshape(-1)
        if velocity.size != self.dim:
            raise ArgumentError(f"Vector field of {self.name} returned {velocity.size} "
                                f"components, expected {self.dim}.")
        return velocity

    def jacobian_at(self, coords: np.ndarray) -> np.ndarray:
        coords = np.asarray(coords, dtype=float)
        if self.jacobian is not None:
            matrix = np.asarray(self.jacobian(coords), dtype=float)
            if matrix.shape != (self.dim, self.dim):
                raise ArgumentError(f"Jacobian of {self.name} has shape {matrix.shape}.")
            return matrix
        step = FD_STEP_SCALE * (1.0 + np.linalg.norm(coords))
        columns = [(self.vector_field(coords + step * e) - self.vector_field(coords - step * e))
                   / (2.0 * step) for e in np.eye(self.dim)]
        return np.column_stack(columns)

    def point(self, coords: Sequence[float]) -> Point:
        return self.manifold.point(coords)


@dataclass
class StepDiagnostics:
    accepted_steps: int = 0
    rejected_steps: int = 0
    n_evaluations: int = 0
    min_step: float = np.inf
    max_step: float = 0.0
    max_defect: float = 0.0

    def to_dict(self) -> dict:
        return {"accepted_steps": self.accepted_steps, "rejected_steps": self.rejected_steps,
                "n_evaluations": self.n_evaluations, "min_step": self.min_step,
                "max_step": self.max_step, "max_defect": self.max_defect}


@dataclass
class Trajectory:
    """A sampled orbit segment.

    ``times`` are strictly monotone in the direction of integration (decreasing
    for backward flows). ``max_defect`` in the diagnostics is the largest
    difference between the secant slope of a step and the Simpson average of
    the field over it, relative to the tolerance scale; it is recorded, not
    enforced.
    """
    times: np.ndarray
    states: np.ndarray
    manifold: ManifoldSpec
    status: TrajectoryStatus = TrajectoryStatus.FINISHED
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)

    @property
    def points(self) -> List[Point]:
        return [Point(state, self.manifold) for state in self.states]

    @property
    def endpoint(self) -> Point:
        return Point(self.states[-1], self.manifold)

    @property
    def escaped(self) -> bool:
        return self.status is TrajectoryStatus.ESCAPED

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.states, columns=[f"x{i}" for i in range(self.manifold.dim)])
        frame.insert(0, "t", self.times)
        return frame


@dataclass(frozen=True)
class FlowLinearization:
    """The tangent map dφ_t(x) as a chart matrix."""
    base: Point
    t: float
    matrix: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.matrix)):
            raise NumericError("Variational matrix is not finite.")

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))


def _check_point(sys: SystemSpec, x: Point) -> None:
    if x.manifold != sys.manifold:
        raise ArgumentError(f"Point lives on {x.manifold.name}, system {sys.name} on "
                            f"{sys.manifold.name}.")


def _inside(manifold: ManifoldSpec, state: np.ndarray, opts: IntegratorOptions) -> bool:
    return bool(np.all(np.isfinite(state)) and np.linalg.norm(state) <= opts.escape_radius
                and manifold.contains_coords(state))


def _check_t_eval(t_eval: Optional[Sequence[float]], T: float) -> Optional[np.ndarray]:
    if t_eval is None:
        return None
    samples = np.asarray(t_eval, dtype=float)
    direction = np.sign(T) if T != 0 else 1.0
    if np.any(np.diff(samples) * direction <= 0):
        raise ArgumentError("t_eval must be strictly monotone in the direction of integration.")
    if np.any(samples * direction < 0) or np.any((samples - T) * direction > 0):
        raise ArgumentError("t_eval must lie between 0 and T.")
    return samples


class _Integration:
    """Manual RK45 stepping with escape detection and step statistics."""

    def __init__(self, rhs: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, T: float,
                 opts: IntegratorOptions, inside: Callable[[np.ndarray], bool]):
        self.rhs = rhs
        self.opts = opts
        self.inside = inside
        self.direction = 1.0 if T >= 0 else -1.0
        self.diagnostics = StepDiagnostics()
        self.status = TrajectoryStatus.FINISHED
        self._base_evals = 1 if opts.first_step is not None else 2
        self.solver = RK45(lambda t, y: rhs(y), 0.0, y0, T, rtol=opts.rtol, atol=opts.atol,
                           max_step=opts.max_step, first_step=opts.first_step)

    @property
    def running(self) -> bool:
        return self.solver.status == "running" and self.status is TrajectoryStatus.FINISHED

    def step(self, track_defect: bool = False) -> Tuple[float, np.ndarray, float, np.ndarray]:
        """Advance one accepted step; returns ``(t_old, y_old, t_new, y_new)``."""
        solver = self.solver
        t_old, y_old, f_old = solver.t, solver.y.copy(), np.array(solver.f)
        try:
            message = solver.step()
        except DomainError:
            self.status = TrajectoryStatus.ESCAPED
            return t_old, y_old, t_old, y_old
        if solver.status == "failed":
            raise StiffnessError(f"Integration failed at t={solver.t!r}: {message}")
        diag = self.diagnostics
        size = abs(solver.t - t_old)
        diag.accepted_steps += 1
        diag.min_step = min(diag.min_step, size)
        diag.max_step = max(diag.max_step, size)
        diag.n_evaluations = solver.nfev
        diag.rejected_steps = max(0, (solver.nfev - self._base_evals) // _EVALS_PER_STEP
                                  - diag.accepted_steps)
        if not self.inside(solver.y):
            self.status = TrajectoryStatus.ESCAPED
        elif track_defect and size > 0:
            middle = solver.dense_output()(0.5 * (t_old + solver.t))
            simpson = (f_old + 4.0 * self.rhs(middle) + np.asarray(solver.f)) / 6.0
            slope = (solver.y - y_old) / (solver.t - t_old)
            scale = self.opts.atol + self.opts.rtol * np.abs(solver.y)
            diag.max_defect = max(diag.max_defect, float(np.max(np.abs(slope - simpson) / scale)))
        if diag.accepted_steps >= self.opts.max_steps and solver.status == "running":
            raise StiffnessError(f"Step budget of {self.opts.max_steps} exhausted at "
                                 f"t={solver.t!r}.")
        return t_old, y_old, solver.t, solver.y.copy()

    def dense(self, t: float) -> np.ndarray:
        return self.solver.dense_output()(t)


def _integrate(rhs: Callable[[np.ndarray], np.ndarray], y0: np.ndarray, T: float,
               opts: IntegratorOptions, inside: Callable[[np.ndarray], bool],
               t_eval: Optional[np.ndarray] = None,
               track_defect: bool = False) -> Tuple[np.ndarray, np.ndarray, TrajectoryStatus,
                                                    StepDiagnostics]:
    times: List[float] = []
    states: List[np.ndarray] = []
    pending = 0
    if t_eval is None:
        times.append(0.0)
        states.append(y0.copy())
    else:
        while pending < len(t_eval) and t_eval[pending] == 0.0:
            times.append(0.0)
            states.append(y0.copy())
            pending += 1
    if T == 0:
        return np.array(times), np.array(states), TrajectoryStatus.FINISHED, StepDiagnostics()
    run = _Integration(rhs, y0, T, opts, inside)
    try:
        while run.running:
            _, _, t_new, y_new = run.step(track_defect)
            escaped = run.status is TrajectoryStatus.ESCAPED
            if t_eval is None:
                if not escaped or inside(y_new):
                    times.append(t_new)
                    states.append(y_new)
                continue
            while pending < len(t_eval) and (t_eval[pending] - t_new) * run.direction <= 0:
                sample = run.dense(t_eval[pending])
                if escaped and not inside(sample):
                    break
                times.append(float(t_eval[pending]))
                states.append(sample)
                pending += 1
    except StiffnessError as error:
        error.trajectory = (np.array(times), np.array(states))
        raise
    return np.array(times), np.array(states), run.status, run.diagnostics


def flow(sys: SystemSpec, x0: Point, T: float, opts: Optional[IntegratorOptions] = None,
         t_eval: Optional[Sequence[float]] = None) -> Trajectory:
    """Integrate :math:`x' = f(x)` from ``x0`` for time ``T``.

    Args:
        sys (:obj:`SystemSpec`): the system.
        x0 (:obj:`Point`): initial point.
        T (float): final time; negative values integrate backward.
        opts (:obj:`IntegratorOptions`, optional): integrator options.
        t_eval (:obj:`list` of float, optional): sample times (dense output). When
          absent every accepted step is recorded.

    Returns:
        :obj:`Trajectory`: the orbit segment. Leaving the chart domain or the
        escape radius ends it with status ``ESCAPED``.

    Raises:
        StiffnessError: on step-size underflow; ``error.trajectory`` holds the
          partial :obj:`Trajectory`.
    """
    opts = opts or IntegratorOptions()
    _check_point(sys, x0)
    if not np.isfinite(T):
        raise ArgumentError("T must be finite.")
    samples = _check_t_eval(t_eval, T)
    y0 = np.array(x0.coords)
    try:
        times, states, status, diagnostics = _integrate(
            sys.vector_field, y0, T, opts, lambda y: _inside(sys.manifold, y, opts), samples,
            track_defect=True)
    except StiffnessError as error:
        times, states = error.trajectory
        error.trajectory = Trajectory(times, states.reshape(-1, sys.dim), sys.manifold)
        raise
    return Trajectory(times, states.reshape(-1, sys.dim), sys.manifold, status, diagnostics)


def flow_ensemble(sys: SystemSpec, states: Sequence[Point], T: float,
                  opts: Optional[IntegratorOptions] = None,
                  t_eval: Optional[Sequence[float]] = None) -> List[Trajectory]:
    """Integrate several initial points jointly, with one shared step sequence.

    Differences between members are then not blurred by independent step
    choices. If one member escapes, every returned trajectory is marked escaped.
    """
    opts = opts or IntegratorOptions()
    if not states:
        return []
    for x in states:
        _check_point(sys, x)
    samples = _check_t_eval(t_eval, T)
    dim, count = sys.dim, len(states)

    def rhs(y: np.ndarray) -> np.ndarray:
        return np.concatenate([sys.vector_field(block) for block in y.reshape(count, dim)])

    def inside(y: np.ndarray) -> bool:
        return all(_inside(sys.manifold, block, opts) for block in y.reshape(count, dim))

    y0 = np.concatenate([x.coords for x in states])
    try:
        times, joint, status, diagnostics = _integrate(rhs, y0, T, opts, inside, samples)
    except StiffnessError as error:
        times, joint = error.trajectory
        joint = joint.reshape(len(times), count, dim)
        error.trajectory = [Trajectory(times, joint[:, k, :], sys.manifold)
                            for k in range(count)]
        raise
    joint = joint.reshape(len(times), count, dim)
    return [Trajectory(times, joint[:, k, :], sys.manifold, status, diagnostics)
            for k in range(count)]


def _variational_samples(sys: SystemSpec, x0: Point, t_grid: Sequence[float],
                         opts: Optional[IntegratorOptions] = None
                         ) -> List[Tuple[Point, FlowLinearization]]:
    opts = opts or IntegratorOptions()
    _check_point(sys, x0)
    grid = np.asarray(t_grid, dtype=float)
    if np.any(grid < 0) or not np.all(np.isfinite(grid)):
        raise ArgumentError("Variational flow needs finite times >= 0.")
    dim = sys.dim

    def rhs(y: np.ndarray) -> np.ndarray:
        x, jac = y[:dim], y[dim:].reshape(dim, dim)
        return np.concatenate([sys.vector_field(x), (sys.jacobian_at(x) @ jac).ravel()])

    def inside(y: np.ndarray) -> bool:
        return _inside(sys.manifold, y[:dim], opts) and bool(np.all(np.isfinite(y)))

    y0 = np.concatenate([x0.coords, np.eye(dim).ravel()])
    unique = np.unique(grid)
    times, states, status, _ = _integrate(rhs, y0, float(unique[-1]), opts, inside, unique)
    if status is TrajectoryStatus.ESCAPED or len(times) < len(unique):
        raise NumericError(f"Trajectory of {sys.name} from {x0!r} escaped before "
                           f"t={unique[-1]!r}.")
    by_time = {float(t): (Point(state[:dim], sys.manifold),
                          FlowLinearization(x0, float(t), state[dim:].reshape(dim, dim)))
               for t, state in zip(times, states)}
    return [by_time[float(t)] for t in grid]


def variational_flow(sys: SystemSpec, x0: Point, T: float,
                     opts: Optional[IntegratorOptions] = None) -> Tuple[Point, FlowLinearization]:
    """Jointly integrate :math:`x' = f(x)` and :math:`J' = Df(x) J`, :math:`J(0) = I`.

    Returns:
        tuple: the endpoint :math:`\\varphi_T(x_0)` and the :obj:`FlowLinearization`
        :math:`d\\varphi_T(x_0)`.

    Raises:
        NumericError: if the trajectory escapes before ``T``.
    """
    if T < 0:
        raise ArgumentError("Variational flow needs T >= 0.")
    return _variational_samples(sys, x0, [T], opts)[0]


def cocycle_check(sys: SystemSpec, x0: Point, t: float, s: float,
                  opts: Optional[IntegratorOptions] = None) -> float:
    """Frobenius residual of :math:`d\\varphi_{t+s}(x) - d\\varphi_s(\\varphi_t(x)) d\\varphi_t(x)`."""
    if t < 0 or s < 0:
        raise ArgumentError("cocycle_check needs t, s >= 0.")
    x_t, lin_t = variational_flow(sys, x0, t, opts)
    _, lin_ts = variational_flow(sys, x0, t + s, opts)
    _, lin_s = variational_flow(sys, x_t, s, opts)
    return float(np.linalg.norm(lin_ts.matrix - lin_s.matrix @ lin_t.matrix))


@dataclass
class DPReport:
    """Margins of pushed-forward rays and the differential positivity verdict."""
    system: str
    x0: List[float]
    t_grid: List[float]
    n_rays: int
    rows: List[dict]
    min_margin: float
    verdict: DPVerdict
    witness: Optional[dict] = None
    note: str = DP_NOTE

    @property
    def margins(self) -> np.ndarray:
        return np.array([row["margin"] for row in self.rows])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=["t", "kind", "ray_index", "margin"])


def check_dp(sys: SystemSpec, x0: Point, t_grid: Sequence[float], n_rays: Optional[int] = None,
             seed: int = 0, opts: Optional[IntegratorOptions] = None,
             tol: float = STRICT_TOL) -> DPReport:
    """Push boundary rays and interior samples of C(x0) through dφ_t(x0).

    Args:
        sys (:obj:`SystemSpec`): the system.
        x0 (:obj:`Point`): base point.
        t_grid (:obj:`list` of float): positive times.
        n_rays (int, optional): boundary rays and interior samples each; at least
          ``dim``, ``2 * dim`` by default.
        seed (int): ray sampling seed.
        opts (:obj:`IntegratorOptions`, optional): integrator options.
        tol (float): boundary band half-width.

    Returns:
        :obj:`DPReport`: Violated iff some margin is below ``-tol``; SDP-consistent
        iff every margin exceeds ``tol``; DP-consistent otherwise.
    """
    grid = sorted(float(t) for t in t_grid)
    if not grid or grid[0] <= 0 or not np.all(np.isfinite(grid)):
        raise ArgumentError("t_grid must hold finite times > 0.")
    n_rays = 2 * sys.dim if n_rays is None else n_rays
    if n_rays < sys.dim:
        raise ArgumentError(f"n_rays must be >= dim = {sys.dim}.")
    cone = sys.cone_field.at(x0)
    samples = {"boundary": sample_boundary_rays(cone, n_rays, seed, tol),
               "interior": sample_interior_rays(cone, n_rays, seed + 1)}
    rows: List[dict] = []
    witness = None
    for point, linearization in _variational_samples(sys, x0, grid, opts):
        cone_t = sys.cone_field.at(point)
        for kind, rays in samples.items():
            for index, ray in enumerate(rays):
                image = linearization.matrix @ ray
                margin = cone_margin(cone_t, image)
                rows.append({"t": linearization.t, "kind": kind, "ray_index": index,
                             "margin": margin})
                if margin < -tol and (witness is None or margin < witness["margin"]):
                    witness = {"t": linearization.t, "ray": ray.tolist(),
                               "image": image.tolist(), "margin": margin}
    margins = np.array([row["margin"] for row in rows])
    if witness is not None:
        verdict = DPVerdict.VIOLATED
    elif np.all(margins > tol):
        verdict = DPVerdict.SDP_CONSISTENT
    else:
        verdict = DPVerdict.DP_CONSISTENT
    logger.info("DP check of %s at %s: %s (min margin %.3e)", sys.name, x0, verdict.value,
                margins.min())
    return DPReport(system=sys.name, x0=x0.coords.tolist(), t_grid=grid, n_rays=n_rays,
                    rows=rows, min_margin=float(margins.min()), verdict=verdict, witness=witness)


@dataclass(frozen=True)
class Equilibrium:
    point: Point
    eigenvalues: np.ndarray
    stability: StabilityTag
    residual: float

    @property
    def is_stable(self) -> bool:
        return self.stability is StabilityTag.STABLE


@dataclass
class EquilibriumSet:
    """Equilibria sorted lexicographically by chart coordinates."""
    equilibria: List[Equilibrium] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.equilibria)

    def __iter__(self) -> Iterator[Equilibrium]:
        return iter(self.equilibria)

    def __getitem__(self, index: int) -> Equilibrium:
        return self.equilibria[index]

    @property
    def coords(self) -> np.ndarray:
        return np.array([e.point.coords for e in self.equilibria])

    def nearest(self, coords: np.ndarray) -> Tuple[Optional[int], float]:
        if not self.equilibria:
            return None, np.inf
        distances = np.linalg.norm(self.coords - np.asarray(coords), axis=1)
        index = int(np.argmin(distances))
        return index, float(distances[index])

    def index_of(self, coords: np.ndarray, radius: float) -> Optional[int]:
        index, distance = self.nearest(coords)
        return index if distance <= radius else None


def damped_newton(sys: SystemSpec, x0: np.ndarray, tol: float = EQUILIBRIUM_RESIDUAL_TOL,
                  max_iter: int = 50) -> Optional[np.ndarray]:
    """Damped Newton iteration on :math:`f(x) = 0` with backtracking.

    Returns:
        :obj:`numpy.ndarray` or None: a root with :math:`|f| < tol`, or None when the
        iteration stalls.
    """
    x = np.array(x0, dtype=float)
    residual_vector = sys.vector_field(x)
    residual = np.linalg.norm(residual_vector)
    for _ in range(max_iter):
        if residual < tol:
            return x
        step = np.linalg.lstsq(sys.jacobian_at(x), -residual_vector, rcond=None)[0]
        damping = 1.0
        while damping > 1e-4:
            candidate = x + damping * step
            if sys.manifold.contains_coords(candidate):
                candidate_vector = sys.vector_field(candidate)
                candidate_residual = np.linalg.norm(candidate_vector)
                if candidate_residual < (1.0 - 1e-4 * damping) * residual:
                    break
            damping *= 0.5
        else:
            return None
        x, residual_vector, residual = candidate, candidate_vector, candidate_residual
    return x if residual < tol else None


def classify_equilibrium(sys: SystemSpec, coords: np.ndarray) -> Equilibrium:
    """Stability tag of an equilibrium from the eigenvalues of its linearization."""
    eigenvalues = np.linalg.eigvals(sys.jacobian_at(coords))
    real = eigenvalues.real
    tol = 1e-8 * max(1.0, float(np.max(np.abs(eigenvalues))))
    if np.all(real < -tol):
        tag = StabilityTag.STABLE
    elif np.all(real > tol):
        tag = StabilityTag.UNSTABLE
    elif np.any(np.abs(real) <= tol):
        centre = np.all(np.abs(real) <= tol) and np.all(np.abs(eigenvalues.imag) > tol)
        tag = StabilityTag.CENTER if centre else StabilityTag.DEGENERATE
    else:
        tag = StabilityTag.SADDLE
    residual = float(np.linalg.norm(sys.vector_field(coords)))
    return Equilibrium(Point(coords, sys.manifold), eigenvalues, tag, residual)


def find_equilibria(sys: SystemSpec, region: Optional[np.ndarray] = None, n_seeds: int = 64,
                    seed: int = 0, merge_radius: float = MERGE_RADIUS) -> EquilibriumSet:
    """Equilibria of ``sys`` in a coordinate box.

    Damped Newton runs from the box centre and ``n_seeds`` uniform starts; roots
    within ``merge_radius`` of each other are merged (DBSCAN with one sample per
    core point). Non-convergent seeds are dropped.
    """
    if n_seeds < 1:
        raise ArgumentError("n_seeds must be >= 1.")
    box = as_region(region if region is not None else sys.region, sys.dim)
    rng = np.random.default_rng(seed)
    starts = [box.mean(axis=1)] + [p.coords for p in sample_points(sys.manifold, box, n_seeds, rng)]
    roots = []
    for start in starts:
        try:
            root = damped_newton(sys, start)
        except (DomainError, FloatingPointError):
            root = None
        if root is not None and np.all(root >= box[:, 0] - merge_radius) \
                and np.all(root <= box[:, 1] + merge_radius):
            roots.append(root)
    if not roots:
        logger.info("No equilibria of %s found in the region.", sys.name)
        return EquilibriumSet()
    labels = DBSCAN(eps=merge_radius, min_samples=1).fit_predict(np.array(roots))
    equilibria = []
    for label in sorted(set(labels)):
        members = [root for root, own in zip(roots, labels) if own == label]
        best = min(members, key=lambda r: np.linalg.norm(sys.vector_field(r)))
        equilibria.append(classify_equilibrium(sys, best))
    equilibria.sort(key=lambda e: tuple(e.point.coords))
    logger.info("Found %d equilibria of %s: %s", len(equilibria), sys.name,
                ", ".join(e.stability.value for e in equilibria))
    return EquilibriumSet(equilibria)
