"""Manifolds in chart coordinates, their metric and the transport between tangent spaces.

Two instantiations are built in: Euclidean space and the cone of symmetric
positive-definite (SPD) matrices with the affine-invariant metric

.. math:: (U, V)_X = \\operatorname{tr}(X^{-1} U X^{-1} V).

SPD points are stored as the upper-triangular flattening of the matrix, so an
``n x n`` matrix lives in a chart of dimension ``n(n+1)/2``. Custom manifolds
supply a single global chart and a metric callback returning the Gram matrix.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss

from .constants import PD_FLOOR, ManifoldKind, MembershipClass, TransportRule
from .exceptions import ArgumentError, DomainError

logger = logging.getLogger(__name__)

MetricCallback = Callable[[np.ndarray], np.ndarray]
TransportCallback = Callable[[np.ndarray, np.ndarray], np.ndarray]
PointSampler = Callable[[np.random.Generator], "Point"]


def spd_chart_dim(n: int) -> int:
    """Chart dimension of ``n x n`` symmetric matrices.

    Examples:
        >>> spd_chart_dim(2)
        3
    """
    return n * (n + 1) // 2


def matrix_size_from_chart_dim(dim: int) -> int:
    n = int(round((np.sqrt(8 * dim + 1) - 1) / 2))
    if spd_chart_dim(n) != dim:
        raise ArgumentError(f"{dim} is not the chart dimension of a symmetric matrix space.")
    return n


def sym_from_chart(coords: Sequence[float], n: int) -> np.ndarray:
    """Rebuild the symmetric matrix from its upper-triangular flattening."""
    rows, cols = np.triu_indices(n)
    sym = np.zeros((n, n))
    sym[rows, cols] = coords
    sym[cols, rows] = coords
    return sym


def chart_from_sym(sym: np.ndarray) -> np.ndarray:
    """Upper-triangular flattening of a symmetric matrix."""
    sym = np.asarray(sym, dtype=float)
    return sym[np.triu_indices(sym.shape[0])].copy()


def spd_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Symmetric eigendecomposition with the positive-definiteness floor.

    Raises:
        DomainError: if the smallest eigenvalue is below :data:`PD_FLOOR`.
    """
    eigvals, eigvecs = np.linalg.eigh(matrix)
    if not np.all(np.isfinite(eigvals)) or eigvals[0] <= PD_FLOOR:
        raise DomainError(f"Matrix is not positive-definite (smallest eigenvalue {eigvals[0]!r}).")
    return eigvals, eigvecs


def spd_power(matrix: np.ndarray, exponent: float) -> np.ndarray:
    eigvals, eigvecs = spd_eigh(matrix)
    return (eigvecs * eigvals ** exponent) @ eigvecs.T


def spd_log(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = spd_eigh(matrix)
    return (eigvecs * np.log(eigvals)) @ eigvecs.T


def _symmetrize(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.T)


@dataclass(frozen=True)
class ManifoldSpec:
    """Chart description of a manifold.

    Args:
        kind (:obj:`ManifoldKind`): representation of the manifold.
        dim (int): chart dimension.
        matrix_size (int, optional): matrix size ``n`` for the SPD kind.
        metric (callable, optional): Gram matrix callback of a custom chart. The
          identity metric is used when absent.
        name (str): label used in reports.
    """
    kind: ManifoldKind
    dim: int
    matrix_size: Optional[int] = None
    metric: Optional[MetricCallback] = field(default=None, compare=False, repr=False)
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ArgumentError(f"Manifold dimension must be >= 1, got {self.dim}.")
        if self.kind is ManifoldKind.SPD:
            if self.matrix_size is None or spd_chart_dim(self.matrix_size) != self.dim:
                raise ArgumentError("SPD manifolds need matrix_size with dim = n(n+1)/2.")

    @classmethod
    def euclidean(cls, n: int) -> "ManifoldSpec":
        return cls(ManifoldKind.EUCLIDEAN, n, name=f"R^{n}")

    @classmethod
    def spd(cls, n: int) -> "ManifoldSpec":
        return cls(ManifoldKind.SPD, spd_chart_dim(n), matrix_size=n, name=f"SPD({n})")

    @classmethod
    def custom_chart(cls, n: int, metric: Optional[MetricCallback] = None,
                     name: str = "custom") -> "ManifoldSpec":
        return cls(ManifoldKind.CUSTOM_CHART, n, metric=metric, name=name)

    def point(self, coords: Sequence[float]) -> "Point":
        return Point(np.asarray(coords, dtype=float), self)

    def point_from_matrix(self, matrix: np.ndarray) -> "Point":
        if self.kind is not ManifoldKind.SPD:
            raise ArgumentError("Only SPD manifolds have matrix points.")
        return Point(chart_from_sym(matrix), self)

    def contains_coords(self, coords: np.ndarray) -> bool:
        """Whether chart coordinates lie in the chart domain."""
        if not np.all(np.isfinite(coords)):
            return False
        if self.kind is ManifoldKind.SPD:
            eigvals = np.linalg.eigvalsh(sym_from_chart(coords, self.matrix_size))  # type: ignore
            return bool(eigvals[0] > PD_FLOOR)
        return True


@dataclass(frozen=True, eq=False)
class Point:
    """A point of a manifold in chart coordinates. Coordinates are read-only."""
    coords: np.ndarray
    manifold: ManifoldSpec

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float).reshape(-1)
        if coords.size != self.manifold.dim:
            raise ArgumentError(
                f"Point has {coords.size} coordinates, manifold dimension is {self.manifold.dim}.")
        if not np.all(np.isfinite(coords)):
            raise DomainError("Point coordinates must be finite.")
        if self.manifold.kind is ManifoldKind.SPD:
            spd_eigh(sym_from_chart(coords, self.manifold.matrix_size))  # type: ignore
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)

    @property
    def matrix(self) -> np.ndarray:
        if self.manifold.kind is not ManifoldKind.SPD:
            raise ArgumentError("Only SPD points have a matrix form.")
        return sym_from_chart(self.coords, self.manifold.matrix_size)  # type: ignore

    def same_as(self, other: "Point") -> bool:
        return self.manifold == other.manifold and np.array_equal(self.coords, other.coords)

    def tangent(self, components: Sequence[float]) -> "TangentVector":
        return TangentVector(self, np.asarray(components, dtype=float))

    def __repr__(self) -> str:
        return f"Point({self.coords.tolist()!r}, {self.manifold.name or self.manifold.kind.value})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector ``v`` in the tangent space at ``base``."""
    base: Point
    components: np.ndarray

    def __post_init__(self):
        components = np.array(self.components, dtype=float).reshape(-1)
        if components.size != self.base.manifold.dim:
            raise ArgumentError(f"Tangent vector has {components.size} components, manifold "
                                f"dimension is {self.base.manifold.dim}.")
        components.setflags(write=False)
        object.__setattr__(self, "components", components)

    @property
    def matrix(self) -> np.ndarray:
        return sym_from_chart(self.components, self.base.manifold.matrix_size)  # type: ignore


def _check_same_manifold(*points: Point) -> None:
    manifolds = {p.manifold for p in points}
    if len(manifolds) > 1:
        raise ArgumentError("Points live on different manifolds.")


def _check_base(x: Point, *vectors: TangentVector) -> None:
    for v in vectors:
        if not (v.base is x or v.base.same_as(x)):
            raise ArgumentError("Tangent vector is not based at the given point.")


def gram_matrix(x: Point) -> np.ndarray:
    """Gram matrix of the metric at ``x`` in chart coordinates."""
    manifold = x.manifold
    if manifold.kind is ManifoldKind.SPD:
        n = manifold.matrix_size
        inv = spd_power(x.matrix, -1.0)
        basis = [inv @ sym_from_chart(e, n) for e in np.eye(manifold.dim)]  # type: ignore
        return np.array([[np.trace(a @ b) for b in basis] for a in basis])
    if manifold.kind is ManifoldKind.CUSTOM_CHART and manifold.metric is not None:
        gram = np.asarray(manifold.metric(np.array(x.coords)), dtype=float)
        if gram.shape != (manifold.dim, manifold.dim):
            raise ArgumentError(f"Metric callback returned shape {gram.shape}.")
        return _symmetrize(gram)
    return np.eye(manifold.dim)


def _inner_components(x: Point, u: np.ndarray, v: np.ndarray) -> float:
    manifold = x.manifold
    if manifold.kind is ManifoldKind.EUCLIDEAN:
        return float(np.dot(u, v))
    if manifold.kind is ManifoldKind.SPD:
        n = manifold.matrix_size
        inv = spd_power(x.matrix, -1.0)
        return float(np.trace(inv @ sym_from_chart(u, n) @ inv @ sym_from_chart(v, n)))  # type: ignore
    return float(u @ gram_matrix(x) @ v)


def inner(x: Point, u: TangentVector, v: TangentVector) -> float:
    """Riemannian inner product :math:`(u, v)_x`.

    Args:
        x (:obj:`Point`): base point.
        u (:obj:`TangentVector`): first vector, based at ``x``.
        v (:obj:`TangentVector`): second vector, based at ``x``.

    Returns:
        float: the inner product.

    Raises:
        ArgumentError: if ``u`` or ``v`` is based elsewhere.

    Examples:
        >>> spd1 = ManifoldSpec.spd(1)
        >>> x = spd1.point([4.0])
        >>> round(inner(x, x.tangent([4.0]), x.tangent([4.0])), 12)
        1.0
    """
    _check_base(x, u, v)
    return _inner_components(x, u.components, v.components)


def norm(x: Point, v: TangentVector) -> float:
    return float(np.sqrt(max(inner(x, v, v), 0.0)))


def distance(x: Point, y: Point) -> float:
    """Riemannian distance.

    Euclidean and SPD distances are exact. For custom charts the metric length of
    the straight chart segment is returned, which bounds the distance from above.
    """
    _check_same_manifold(x, y)
    if x.manifold.kind is ManifoldKind.EUCLIDEAN:
        return float(np.linalg.norm(y.coords - x.coords))
    if x.manifold.kind is ManifoldKind.SPD:
        inv_sqrt = spd_power(x.matrix, -0.5)
        eigvals, _ = spd_eigh(_symmetrize(inv_sqrt @ y.matrix @ inv_sqrt))
        return float(np.linalg.norm(np.log(eigvals)))
    nodes, weights = leggauss(8)
    delta = y.coords - x.coords
    length = 0.0
    for node, weight in zip(nodes, weights):
        p = Point(x.coords + 0.5 * (node + 1.0) * delta, x.manifold)
        length += 0.5 * weight * np.sqrt(max(delta @ gram_matrix(p) @ delta, 0.0))
    return float(length)


def volume_density(x: Point) -> float:
    """Riemannian volume density :math:`\\sqrt{\\det g(x)}` relative to chart Lebesgue measure."""
    return float(np.sqrt(np.linalg.det(gram_matrix(x))))


def geodesic(x: Point, y: Point, t: float) -> Point:
    """Point at parameter ``t`` of the geodesic from ``x`` to ``y``.

    Euclidean and custom charts use the straight chart segment; SPD uses
    :math:`X^{1/2} (X^{-1/2} Y X^{-1/2})^t X^{1/2}`.

    Examples:
        >>> r2 = ManifoldSpec.euclidean(2)
        >>> geodesic(r2.point([0, 0]), r2.point([2, 2]), 0.5).coords.tolist()
        [1.0, 1.0]
    """
    _check_same_manifold(x, y)
    if t == 0:
        return x
    if t == 1:
        return y
    if x.manifold.kind is ManifoldKind.SPD:
        sqrt_x = spd_power(x.matrix, 0.5)
        inv_sqrt_x = spd_power(x.matrix, -0.5)
        inner_power = spd_power(_symmetrize(inv_sqrt_x @ y.matrix @ inv_sqrt_x), t)
        return x.manifold.point_from_matrix(_symmetrize(sqrt_x @ inner_power @ sqrt_x))
    return Point((1.0 - t) * x.coords + t * y.coords, x.manifold)


@dataclass(frozen=True)
class TransportMap:
    """Linear invertible transport Γ(x1, x2) between tangent spaces.

    Args:
        rule (:obj:`TransportRule`): how the map is computed.
        callback (callable, optional): for ``CUSTOM_LINEAR``, maps the chart
          coordinates ``(x1, x2)`` to the ``dim x dim`` matrix of Γ(x1, x2).
    """
    rule: TransportRule
    callback: Optional[TransportCallback] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.rule is TransportRule.CUSTOM_LINEAR and self.callback is None:
            raise ArgumentError("Custom linear transport needs a callback.")

    @classmethod
    def identity(cls) -> "TransportMap":
        return cls(TransportRule.IDENTITY)

    @classmethod
    def spd_congruence(cls) -> "TransportMap":
        return cls(TransportRule.SPD_CONGRUENCE)

    @classmethod
    def custom(cls, callback: TransportCallback) -> "TransportMap":
        return cls(TransportRule.CUSTOM_LINEAR, callback)

    def apply(self, x1: Point, x2: Point, components: np.ndarray) -> np.ndarray:
        """Apply Γ(x1, x2) to chart components of a vector at ``x1``."""
        components = np.asarray(components, dtype=float)
        if self.rule is TransportRule.IDENTITY:
            return components.copy()
        if self.rule is TransportRule.SPD_CONGRUENCE:
            if x1.manifold.kind is not ManifoldKind.SPD:
                raise ArgumentError("SPD congruence transport needs SPD points.")
            factor = self._congruence_factor(x1, x2)
            n = x1.manifold.matrix_size
            return chart_from_sym(factor @ sym_from_chart(components, n) @ factor.T)  # type: ignore
        return self.matrix(x1, x2) @ components

    def matrix(self, x1: Point, x2: Point) -> np.ndarray:
        """Chart matrix of Γ(x1, x2)."""
        dim = x1.manifold.dim
        if self.rule is TransportRule.IDENTITY:
            return np.eye(dim)
        if self.rule is TransportRule.CUSTOM_LINEAR:
            matrix = np.asarray(self.callback(np.array(x1.coords), np.array(x2.coords)),  # type: ignore
                                dtype=float)
            if matrix.shape != (dim, dim):
                raise ArgumentError(f"Transport callback returned shape {matrix.shape}.")
            return matrix
        return np.column_stack([self.apply(x1, x2, e) for e in np.eye(dim)])

    @staticmethod
    def _congruence_factor(x1: Point, x2: Point) -> np.ndarray:
        # Y^{1/2} X^{-1/2}, so that Γ V = A V A^T
        return spd_power(x2.matrix, 0.5) @ spd_power(x1.matrix, -0.5)


def default_transport(manifold: ManifoldSpec) -> TransportMap:
    if manifold.kind is ManifoldKind.SPD:
        return TransportMap.spd_congruence()
    return TransportMap.identity()


def transport(x1: Point, x2: Point, v: TangentVector,
              transport_map: Optional[TransportMap] = None) -> TangentVector:
    """Transport ``v`` from the tangent space at ``x1`` to the one at ``x2``.

    Args:
        x1 (:obj:`Point`): source point.
        x2 (:obj:`Point`): target point.
        v (:obj:`TangentVector`): vector based at ``x1``.
        transport_map (:obj:`TransportMap`, optional): the rule to use. Defaults to
          the built-in invariant transport of the manifold.

    Returns:
        :obj:`TangentVector`: Γ(x1, x2) v based at ``x2``.

    Examples:
        >>> spd1 = ManifoldSpec.spd(1)
        >>> x1, x2 = spd1.point([1.0]), spd1.point([4.0])
        >>> np.round(transport(x1, x2, x1.tangent([1.0])).components, 12).tolist()
        [4.0]
    """
    _check_same_manifold(x1, x2)
    _check_base(x1, v)
    rule = transport_map or default_transport(x1.manifold)
    return TangentVector(x2, rule.apply(x1, x2, v.components))


def transport_composition_residual(x1: Point, x2: Point, x3: Point, v: TangentVector,
                                   transport_map: Optional[TransportMap] = None) -> float:
    """Euclidean size of Γ(x2,x3)Γ(x1,x2)v − Γ(x1,x3)v in chart components."""
    rule = transport_map or default_transport(x1.manifold)
    two_legs = rule.apply(x2, x3, rule.apply(x1, x2, v.components))
    direct = rule.apply(x1, x3, v.components)
    return float(np.linalg.norm(two_legs - direct))


def as_region(region: Sequence[Sequence[float]], dim: int) -> np.ndarray:
    """Validate a coordinate box given as ``dim`` rows of ``(low, high)``.

    Examples:
        >>> as_region([[-2, 2], [-2, 2]], 2).shape
        (2, 2)
    """
    box = np.asarray(region, dtype=float)
    if box.shape != (dim, 2):
        raise ArgumentError(f"Region must have shape ({dim}, 2), got {box.shape}.")
    if not np.all(np.isfinite(box)) or np.any(box[:, 1] <= box[:, 0]):
        raise ArgumentError("Region must be a finite, non-degenerate coordinate box.")
    return box


def random_spd(n: int, rng: np.random.Generator, spread: float = 1.0) -> np.ndarray:
    """Random SPD matrix with log-eigenvalues uniform in ``[-spread, spread]``."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return _symmetrize((q * np.exp(rng.uniform(-spread, spread, size=n))) @ q.T)


def sample_points(manifold: ManifoldSpec, region: np.ndarray, n: int,
                  rng: np.random.Generator, max_tries: int = 100) -> List[Point]:
    """Uniform samples of the chart box ``region`` (shape ``dim x 2``).

    SPD candidates that are not positive-definite are rejected and redrawn.
    """
    region = as_region(region, manifold.dim)
    points: List[Point] = []
    for _ in range(n * max_tries):
        if len(points) == n:
            break
        coords = rng.uniform(region[:, 0], region[:, 1])
        if manifold.contains_coords(coords):
            points.append(Point(coords, manifold))
    if len(points) < n:
        raise DomainError(f"Could not sample {n} points of {manifold.name} in the given region.")
    return points


def _default_sampler(manifold: ManifoldSpec) -> PointSampler:
    if manifold.kind is ManifoldKind.SPD:
        return lambda rng: manifold.point_from_matrix(random_spd(manifold.matrix_size, rng))  # type: ignore
    return lambda rng: Point(rng.uniform(-2.0, 2.0, size=manifold.dim), manifold)


@dataclass
class InvarianceReport:
    """Residuals of the Γ-invariance checks of metric and cone field."""
    n_trials: int
    max_metric_residual: float = 0.0
    max_norm_residual: float = 0.0
    max_identity_residual: float = 0.0
    max_inverse_residual: float = 0.0
    cone_mismatches: int = 0
    worst_mismatch: Optional[dict] = None

    def passed(self, tol: float = 1e-9) -> bool:
        return (self.max_metric_residual <= tol and self.max_norm_residual <= tol
                and self.cone_mismatches == 0)


def verify_transport_invariance(manifold: ManifoldSpec,
                                transport_map: Optional[TransportMap] = None,
                                cone_field: Optional[Any] = None,
                                sampler: Optional[PointSampler] = None,
                                n_trials: int = 1000,
                                seed: int = 0) -> InvarianceReport:
    """Sample the invariance of metric and cone field under the transport.

    For each trial two points and two tangent vectors are drawn and the
    residual :math:`|(u,v)_{x_1} - (\\Gamma u, \\Gamma v)_{x_2}|` is recorded, together
    with the relative norm residual, Γ(x,x) = Id and Γ(x2,x1)Γ(x1,x2) = Id. When a
    cone field is given, membership of ``v`` in C(x1) is compared with membership
    of Γv in C(x2); half of the vectors are drawn from the interior of C(x1).

    Args:
        manifold (:obj:`ManifoldSpec`): the manifold.
        transport_map (:obj:`TransportMap`, optional): transport under test. Defaults to
          the manifold's built-in transport.
        cone_field (:obj:`diffpos.cones.ConeFieldSpec`, optional): cone field under test.
        sampler (callable, optional): draws a point from a ``numpy`` generator.
        n_trials (int): number of sampled pairs.
        seed (int): random seed.

    Returns:
        :obj:`InvarianceReport`: recorded residuals; failures are never raised.
    """
    if n_trials < 1:
        raise ArgumentError("n_trials must be >= 1.")
    rule = transport_map or default_transport(manifold)
    draw = sampler or _default_sampler(manifold)
    rng = np.random.default_rng(seed)
    report = InvarianceReport(n_trials=n_trials)
    for trial in range(n_trials):
        x1, x2 = draw(rng), draw(rng)
        u = rng.standard_normal(manifold.dim)
        v = rng.standard_normal(manifold.dim)
        if cone_field is not None and trial % 2 == 0:
            v = cone_field.sample_interior(x1, rng)
        gu, gv = rule.apply(x1, x2, u), rule.apply(x1, x2, v)
        metric_residual = abs(_inner_components(x1, u, v) - _inner_components(x2, gu, gv))
        norm_before = np.sqrt(_inner_components(x1, v, v))
        norm_after = np.sqrt(max(_inner_components(x2, gv, gv), 0.0))
        report.max_metric_residual = max(report.max_metric_residual, metric_residual)
        report.max_norm_residual = max(report.max_norm_residual,
                                       abs(norm_after - norm_before) / max(norm_before, 1e-300))
        report.max_identity_residual = max(report.max_identity_residual,
                                           float(np.linalg.norm(rule.apply(x1, x1, v) - v)))
        report.max_inverse_residual = max(report.max_inverse_residual,
                                          float(np.linalg.norm(rule.apply(x2, x1, gv) - v)))
        if cone_field is None:
            continue
        before = cone_field.contains(x1, TangentVector(x1, v)).membership
        after = cone_field.contains(x2, TangentVector(x2, gv)).membership
        if (before is MembershipClass.OUTSIDE) != (after is MembershipClass.OUTSIDE):
            report.cone_mismatches += 1
            if report.worst_mismatch is None:
                report.worst_mismatch = {"x1": x1.coords.tolist(), "x2": x2.coords.tolist(),
                                         "v": v.tolist(), "transported": gv.tolist()}
    logger.debug("Transport invariance on %s: metric residual %.3e, %d cone mismatches",
                 manifold.name, report.max_metric_residual, report.cone_mismatches)
    return report
