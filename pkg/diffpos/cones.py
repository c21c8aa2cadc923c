"""Closed convex cones, cone fields and membership margins.

Margins are normalized so that they do not depend on the length of the tested
vector:

- orthant: :math:`\\min_i v_i / |v|`;
- halfspaces :math:`\\{v: \\langle a_i, v\\rangle \\ge 0\\}`: :math:`\\min_i \\langle a_i, v\\rangle / |v|`
  with unit normals;
- generators: non-negative least squares feasibility of :math:`v = \\sum_j \\lambda_j g_j`;
  infeasible vectors get the negative relative residual, feasible ones the
  smallest facet margin;
- second-order cone: :math:`\\cos\\angle(v, a) - \\cos\\alpha`;
- PSD cone: :math:`\\lambda_{min}(V) / \\|V\\|_F`.

A margin inside ``[-tol, tol]`` is classified as Boundary.
"""
import dataclasses
import itertools
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterator, List, Optional, Sequence

import numpy as np
from scipy.linalg import null_space  # type: ignore
from scipy.optimize import linprog, minimize, nnls  # type: ignore

from .constants import (BOUNDARY_MAX_ITER, NNLS_RESIDUAL_TOL, SEMICONTINUITY_SLACK, STRICT_TOL,
                        ConeFieldVariant, ConeVariant, MembershipClass, TransportRule)
from .exceptions import ArgumentError, NumericError
from .geometry import (ManifoldSpec, Point, TangentVector, TransportMap, chart_from_sym,
                       default_transport, matrix_size_from_chart_dim, sym_from_chart)

logger = logging.getLogger(__name__)

POLYHEDRAL = (ConeVariant.ORTHANT, ConeVariant.POLYHEDRAL_HALFSPACES,
              ConeVariant.POLYHEDRAL_GENERATORS)


def classify_margin(margin: float, tol: float = STRICT_TOL) -> MembershipClass:
    """Map a normalized margin to its membership class.

    Examples:
        >>> classify_margin(0.5).value
        'inside'
        >>> classify_margin(-1e-12).value
        'boundary'
    """
    if margin > tol:
        return MembershipClass.INSIDE
    if margin < -tol:
        return MembershipClass.OUTSIDE
    return MembershipClass.BOUNDARY


def _unit_rows(rows: np.ndarray, what: str) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    lengths = np.linalg.norm(rows, axis=1)
    if np.any(lengths == 0):
        raise ArgumentError(f"Cone {what} must be nonzero.")
    return rows / lengths[:, None]


def _unit(v: np.ndarray) -> np.ndarray:
    length = np.linalg.norm(v)
    if length == 0:
        raise NumericError("Cannot normalize the zero vector.")
    return v / length


def _dedupe_rays(rays: Sequence[np.ndarray], tol: float = 1e-9) -> np.ndarray:
    unique: List[np.ndarray] = []
    for ray in rays:
        ray = _unit(ray)
        if all(np.linalg.norm(ray - kept) > tol for kept in unique):
            unique.append(ray)
    return np.array(unique)


def dual_extreme_rays(rows: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Extreme rays of :math:`\\{u : \\langle r, u\\rangle \\ge 0 \\; \\forall r \\in rows\\}`.

    Used both for the extreme rays of a halfspace cone (rows = normals) and the
    facet normals of a generator cone (rows = generators). Rays are found by
    enumerating the null spaces of ``dim - 1`` rows.
    """
    rows = np.atleast_2d(rows)
    dim = rows.shape[1]
    if dim == 1:
        return np.array([r for r in (np.ones(1), -np.ones(1)) if np.all(rows @ r >= -tol)])
    candidates = []
    for subset in itertools.combinations(range(rows.shape[0]), dim - 1):
        basis = null_space(rows[list(subset)])
        if basis.shape[1] != 1:
            continue
        ray = basis[:, 0]
        for signed in (ray, -ray):
            if np.all(rows @ signed >= -tol):
                candidates.append(signed)
                break
    if not candidates:
        return np.zeros((0, dim))
    return _dedupe_rays(candidates)


def orthonormal_complement(v: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis (rows) of the complement of ``span(v)`` by Gram-Schmidt.

    Examples:
        >>> np.abs(np.round(orthonormal_complement(np.ones(2)) * np.sqrt(2), 12)).tolist()
        [[1.0, 1.0]]
    """
    basis = [_unit(np.asarray(v, dtype=float))]
    for e in np.eye(basis[0].size):
        w = e - sum((e @ b) * b for b in basis)
        w = w - sum((w @ b) * b for b in basis)
        if np.linalg.norm(w) > tol:
            basis.append(w / np.linalg.norm(w))
        if len(basis) == basis[0].size:
            break
    return np.array(basis[1:]).reshape(len(basis) - 1, basis[0].size)


@dataclass(frozen=True)
class MembershipVerdict:
    """Membership class and normalized margin of a tangent vector."""
    membership: MembershipClass
    margin: float


@dataclass(frozen=True, eq=False)
class ConeSpec:
    """A closed convex cone in a tangent space, in chart components.

    ``image`` is an optional invertible matrix ``L``: the described cone is then
    ``L K`` where ``K`` is the cone given by the other fields. This is how
    Γ-transported cones are represented.
    """
    variant: ConeVariant
    dim: int
    normals: Optional[np.ndarray] = None
    generators: Optional[np.ndarray] = None
    axis: Optional[np.ndarray] = None
    aperture: Optional[float] = None
    image: Optional[np.ndarray] = None
    base: Optional["ConeSpec"] = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ArgumentError("Cone dimension must be >= 1.")
        if self.variant is ConeVariant.POLYHEDRAL_HALFSPACES:
            object.__setattr__(self, "normals", self._check_rows(self.normals, "normals"))
        elif self.variant is ConeVariant.POLYHEDRAL_GENERATORS:
            object.__setattr__(self, "generators",
                               self._check_rows(self.generators, "generators"))
        elif self.variant is ConeVariant.SECOND_ORDER:
            if self.axis is None or self.aperture is None:
                raise ArgumentError("Second-order cones need an axis and an aperture.")
            axis = _unit(np.asarray(self.axis, dtype=float).reshape(-1))
            if axis.size != self.dim:
                raise ArgumentError("Axis dimension does not match the cone dimension.")
            if not 0.0 < self.aperture < np.pi / 2:
                raise ArgumentError("Second-order aperture must lie in (0, pi/2).")
            object.__setattr__(self, "axis", axis)
        elif self.variant is ConeVariant.PSD:
            matrix_size_from_chart_dim(self.dim)
        if self.image is not None:
            image = np.asarray(self.image, dtype=float)
            if image.shape != (self.dim, self.dim) or np.linalg.cond(image) > 1e12:
                raise ArgumentError("Cone image map must be an invertible dim x dim matrix.")
            object.__setattr__(self, "image", image)

    def _check_rows(self, rows: Optional[np.ndarray], what: str) -> np.ndarray:
        if rows is None or len(rows) == 0:
            raise ArgumentError(f"Polyhedral cone needs at least one of its {what}.")
        rows = _unit_rows(rows, what)
        if rows.shape[1] != self.dim:
            raise ArgumentError(f"Cone {what} do not match the cone dimension {self.dim}.")
        return rows

    @classmethod
    def orthant(cls, n: int) -> "ConeSpec":
        return cls(ConeVariant.ORTHANT, n)

    @classmethod
    def halfspaces(cls, normals: Sequence[Sequence[float]]) -> "ConeSpec":
        normals = np.atleast_2d(np.asarray(normals, dtype=float))
        return cls(ConeVariant.POLYHEDRAL_HALFSPACES, normals.shape[1], normals=normals)

    @classmethod
    def from_generators(cls, generators: Sequence[Sequence[float]]) -> "ConeSpec":
        generators = np.atleast_2d(np.asarray(generators, dtype=float))
        return cls(ConeVariant.POLYHEDRAL_GENERATORS, generators.shape[1], generators=generators)

    @classmethod
    def second_order(cls, axis: Sequence[float], aperture: float) -> "ConeSpec":
        axis = np.asarray(axis, dtype=float)
        return cls(ConeVariant.SECOND_ORDER, axis.size, axis=axis, aperture=float(aperture))

    @classmethod
    def psd(cls, n: int) -> "ConeSpec":
        return cls(ConeVariant.PSD, n * (n + 1) // 2)

    @property
    def root(self) -> "ConeSpec":
        return self.base if self.base is not None else self

    @property
    def is_polyhedral(self) -> bool:
        return self.variant in POLYHEDRAL

    @property
    def matrix_size(self) -> int:
        return matrix_size_from_chart_dim(self.dim)

    @cached_property
    def pullback(self) -> Optional[np.ndarray]:
        return None if self.image is None else np.linalg.inv(self.image)

    @cached_property
    def extreme_rays(self) -> np.ndarray:
        """Unit extreme rays of a polyhedral cone, before the image map."""
        if self.variant is ConeVariant.ORTHANT:
            return np.eye(self.dim)
        if self.variant is ConeVariant.POLYHEDRAL_HALFSPACES:
            return dual_extreme_rays(self.normals)  # type: ignore
        if self.variant is ConeVariant.POLYHEDRAL_GENERATORS:
            return self._extreme_generators()
        raise ArgumentError(f"{self.variant.value} cones have no finite set of extreme rays.")

    def _extreme_generators(self) -> np.ndarray:
        generators = self.generators
        keep = []
        for j, g in enumerate(generators):  # type: ignore
            others = np.delete(generators, j, axis=0)  # type: ignore
            if len(others) == 0:
                keep.append(g)
                continue
            _, residual = nnls(others.T, g)
            if residual > NNLS_RESIDUAL_TOL:
                keep.append(g)
        return _dedupe_rays(keep)

    @cached_property
    def facet_normals(self) -> np.ndarray:
        """Unit inward facet normals of a generator cone, before the image map."""
        if self.variant is not ConeVariant.POLYHEDRAL_GENERATORS:
            raise ArgumentError("Facet normals are only derived for generator cones.")
        return dual_extreme_rays(self.generators)  # type: ignore

    def linear_image(self, matrix: np.ndarray) -> "ConeSpec":
        """The cone ``matrix @ K``."""
        matrix = np.asarray(matrix, dtype=float)
        composed = matrix if self.image is None else matrix @ self.image
        return dataclasses.replace(self, image=composed, base=self.root)


def _psd_matrix(cone: ConeSpec, v: np.ndarray) -> np.ndarray:
    return sym_from_chart(v, cone.matrix_size)


def _base_margin(cone: ConeSpec, v: np.ndarray, length: float) -> float:
    root = cone.root
    if cone.variant is ConeVariant.ORTHANT:
        return float(np.min(v) / length)
    if cone.variant is ConeVariant.POLYHEDRAL_HALFSPACES:
        return float(np.min(cone.normals @ v) / length)  # type: ignore
    if cone.variant is ConeVariant.POLYHEDRAL_GENERATORS:
        _, residual = nnls(cone.generators.T, v)  # type: ignore
        if residual / length > NNLS_RESIDUAL_TOL:
            return float(-residual / length)
        facets = root.facet_normals
        if len(facets) == 0:
            return 0.0
        return float(max(np.min(facets @ v) / length, 0.0))
    if cone.variant is ConeVariant.SECOND_ORDER:
        return float(v @ cone.axis / length - np.cos(cone.aperture))  # type: ignore
    matrix = _psd_matrix(cone, v)
    return float(np.linalg.eigvalsh(matrix)[0] / np.linalg.norm(matrix))


def cone_margin(cone: ConeSpec, components: Sequence[float]) -> float:
    """Normalized signed margin of chart components in ``cone``.

    Examples:
        >>> cone_margin(ConeSpec.orthant(2), [3.0, 4.0])
        0.6
    """
    v = np.asarray(components, dtype=float).reshape(-1)
    if v.size != cone.dim:
        raise ArgumentError(f"Vector of dimension {v.size} tested against a cone of "
                            f"dimension {cone.dim}.")
    if cone.pullback is not None:
        v = cone.pullback @ v
    length = np.linalg.norm(v)
    if length == 0:
        return 0.0
    return _base_margin(cone, v, float(length))


def _map_rays(cone: ConeSpec, rays: np.ndarray) -> np.ndarray:
    if cone.image is None or len(rays) == 0:
        return rays
    return np.array([_unit(cone.image @ r) for r in rays])


def _chebyshev_direction(rows: np.ndarray) -> Optional[np.ndarray]:
    """Direction of the largest ball in {u : rows u >= 0, |u|_inf <= 1}."""
    count, dim = rows.shape
    objective = np.zeros(dim + 1)
    objective[-1] = -1.0
    constraints = np.hstack([-rows, np.ones((count, 1))])
    result = linprog(objective, A_ub=constraints, b_ub=np.zeros(count),
                     bounds=[(-1.0, 1.0)] * dim + [(0.0, None)], method="highs")
    if not result.success or result.x[-1] <= 0 or np.linalg.norm(result.x[:-1]) == 0:
        return None
    return _unit(result.x[:-1])


def _base_interior(cone: ConeSpec) -> np.ndarray:
    root = cone.root
    if cone.variant is ConeVariant.ORTHANT:
        return np.ones(cone.dim) / np.sqrt(cone.dim)
    if cone.variant is ConeVariant.SECOND_ORDER:
        return np.array(cone.axis)
    if cone.variant is ConeVariant.PSD:
        return _unit(chart_from_sym(np.eye(cone.matrix_size)))
    rows = cone.normals if cone.variant is ConeVariant.POLYHEDRAL_HALFSPACES \
        else root.facet_normals
    direction = _chebyshev_direction(rows) if len(rows) else None  # type: ignore
    if direction is None:
        spanning = root.extreme_rays if len(root.extreme_rays) else np.eye(cone.dim)
        direction = _unit(np.sum(spanning, axis=0))
    return direction


def interior_direction(cone: ConeSpec) -> np.ndarray:
    """Unit interior direction: analytic when available, else the Chebyshev-centre direction.

    Examples:
        >>> np.round(interior_direction(ConeSpec.orthant(2)) ** 2, 12).tolist()
        [0.5, 0.5]
    """
    direction = _base_interior(cone)
    if cone.image is not None:
        direction = _unit(cone.image @ direction)
    return direction


def _nnls_projection(rays: np.ndarray, d: np.ndarray) -> np.ndarray:
    weights, _ = nnls(rays.T, d)
    return rays.T @ weights


def _soc_projection(axis: np.ndarray, aperture: float, d: np.ndarray) -> np.ndarray:
    height = d @ axis
    radial = d - height * axis
    radius = np.linalg.norm(radial)
    slope = np.tan(aperture)
    if radius <= slope * height:
        return d.copy()
    if slope * radius <= -height:
        return np.zeros_like(d)
    edge = np.cos(aperture) * axis + np.sin(aperture) * radial / radius
    return (d @ edge) * edge


def _generic_projection(cone: ConeSpec, d: np.ndarray) -> np.ndarray:
    start = interior_direction(cone) * max(np.linalg.norm(d), 1.0)
    result = minimize(lambda u: 0.5 * np.sum((u - d) ** 2), start, jac=lambda u: u - d,
                      method="SLSQP",
                      constraints=[{"type": "ineq",
                                    "fun": lambda u: cone_margin(cone, u) * np.linalg.norm(u)}])
    if cone_margin(cone, result.x) < -1e-6:
        return np.zeros_like(d)
    return result.x


def project_onto_cone(cone: ConeSpec, d: Sequence[float]) -> np.ndarray:
    """Euclidean projection of ``d`` onto the cone (chart components).

    The normalized projection maximizes :math:`\\langle d, u \\rangle` over unit ``u``
    in the cone, which is what conal steering needs.
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    if cone_margin(cone, d) >= 0:
        return d.copy()
    if cone.is_polyhedral:
        return _nnls_projection(_map_rays(cone, cone.root.extreme_rays), d)
    if cone.image is not None:
        return _generic_projection(cone, d)
    if cone.variant is ConeVariant.SECOND_ORDER:
        return _soc_projection(cone.axis, cone.aperture, d)  # type: ignore
    eigvals, eigvecs = np.linalg.eigh(_psd_matrix(cone, d))
    return chart_from_sym((eigvecs * np.maximum(eigvals, 0.0)) @ eigvecs.T)


def _seed_boundary_rays(cone: ConeSpec) -> np.ndarray:
    """Deterministic boundary rays listed before random ones."""
    root = cone.root
    if cone.is_polyhedral:
        return _map_rays(cone, root.extreme_rays)
    if cone.variant is ConeVariant.SECOND_ORDER:
        complement = orthonormal_complement(cone.axis)  # type: ignore
        rays = [np.cos(cone.aperture) * cone.axis + sign * np.sin(cone.aperture) * w  # type: ignore
                for w in complement for sign in (1.0, -1.0)]
        return _map_rays(cone, np.array(rays))
    n = cone.matrix_size
    if n == 1:
        return np.zeros((0, 1))
    rays = [chart_from_sym(np.outer(e, e)) for e in np.eye(n)]
    return _map_rays(cone, np.array(rays))


def _outside_vector(cone: ConeSpec, rng: np.random.Generator, tol: float) -> np.ndarray:
    w = rng.standard_normal(cone.dim)
    center = interior_direction(cone)
    shift = np.linalg.norm(w)
    for _ in range(60):
        if cone_margin(cone, w) < -tol:
            return w
        w = w - shift * center
        shift *= 2.0
    raise NumericError("Could not find a vector outside the cone; is it pointed?")


def _bisect_to_boundary(cone: ConeSpec, inside: np.ndarray, outside: np.ndarray,
                        tol: float) -> np.ndarray:
    low, high = 0.0, 1.0
    for _ in range(BOUNDARY_MAX_ITER):
        middle = 0.5 * (low + high)
        point = (1.0 - middle) * inside + middle * outside
        margin = cone_margin(cone, point)
        if abs(margin) <= tol:
            return _unit(point)
        if margin > 0:
            low = middle
        else:
            high = middle
    raise NumericError(f"Boundary projection did not converge in {BOUNDARY_MAX_ITER} steps.")


def _random_boundary_ray(cone: ConeSpec, rng: np.random.Generator, tol: float) -> np.ndarray:
    if cone.image is None:
        if cone.variant is ConeVariant.PSD and cone.matrix_size > 1:
            w = _unit(rng.standard_normal(cone.matrix_size))
            return chart_from_sym(np.outer(w, w))
        if cone.variant is ConeVariant.SECOND_ORDER and cone.dim > 1:
            w = orthonormal_complement(cone.axis).T @ rng.standard_normal(cone.dim - 1)  # type: ignore
            return np.cos(cone.aperture) * cone.axis + np.sin(cone.aperture) * _unit(w)  # type: ignore
        if cone.variant is ConeVariant.ORTHANT and cone.dim > 1:
            w = np.abs(rng.standard_normal(cone.dim))
            w[rng.integers(cone.dim)] = 0.0
            return _unit(w)
    if cone.dim == 1:
        return interior_direction(cone)
    return _bisect_to_boundary(cone, interior_direction(cone), _outside_vector(cone, rng, tol), tol)


def sample_boundary_rays(cone: ConeSpec, k: int, seed: int = 0,
                         tol: float = STRICT_TOL) -> np.ndarray:
    """Sample ``k`` boundary rays of the cone.

    Polyhedral cones list their extreme rays first, second-order cones their
    edges along the complement axes and PSD cones the rank-one matrices
    :math:`e_i e_i^T`; the remaining rays are random (seeded). PSD rays are
    rank-one matrices of unit Frobenius norm, all others are unit vectors. In
    dimension one the cone is a single ray, which is returned.

    Args:
        cone (:obj:`ConeSpec`): the cone.
        k (int): number of rays.
        seed (int): random seed.
        tol (float): boundary band half-width.

    Returns:
        :obj:`numpy.ndarray`: ``k x dim`` array of rays.

    Raises:
        NumericError: if the projection onto the boundary does not converge.

    Examples:
        >>> sample_boundary_rays(ConeSpec.orthant(2), 2).tolist()
        [[1.0, 0.0], [0.0, 1.0]]
    """
    if k < 1:
        raise ArgumentError("k must be >= 1.")
    rng = np.random.default_rng(seed)
    rays = list(_seed_boundary_rays(cone))[:k]
    while len(rays) < k:
        rays.append(_random_boundary_ray(cone, rng, tol))
    return np.array(rays)


def _interior_sample(cone: ConeSpec, rng: np.random.Generator, tol: float = STRICT_TOL) -> np.ndarray:
    center = interior_direction(cone)
    if cone.dim == 1:
        return center * rng.uniform(0.5, 2.0)
    boundary = _random_boundary_ray(cone, rng, tol)
    weight = rng.uniform(0.05, 0.9)
    return _unit((1.0 - weight) * center + weight * _unit(boundary)) * rng.uniform(0.5, 2.0)


def sample_interior_rays(cone: ConeSpec, k: int, seed: int = 0) -> np.ndarray:
    """``k`` unit vectors from the interior of the cone (seeded)."""
    rng = np.random.default_rng(seed)
    return np.array([_unit(_interior_sample(cone, rng)) for _ in range(k)])


def surrounds(outer: ConeSpec, inner: ConeSpec, n_rays: int = 64, seed: int = 0,
              tol: float = STRICT_TOL) -> bool:
    """Whether ``inner`` minus the origin lies in the interior of ``outer``.

    Examples:
        >>> surrounds(ConeSpec.orthant(2), ConeSpec.orthant(2))
        False
    """
    if outer.dim != inner.dim:
        raise ArgumentError("Cones live in different dimensions.")
    if cone_margin(outer, interior_direction(outer)) <= tol:
        logger.warning("Outer cone is not solid; it surrounds nothing.")
        return False
    rays = sample_boundary_rays(inner, n_rays, seed, tol)
    return bool(all(cone_margin(outer, ray) > tol for ray in rays))


@dataclass
class ConeAxiomReport:
    """Sampled pointedness, convexity and solidness of a cone."""
    n_samples: int
    pointedness_violations: int = 0
    convexity_violations: int = 0
    interior_margin: float = 0.0

    @property
    def solid(self) -> bool:
        return self.interior_margin > STRICT_TOL

    @property
    def passed(self) -> bool:
        return self.pointedness_violations == 0 and self.convexity_violations == 0


def check_cone_axioms(cone: ConeSpec, n_samples: int = 200, seed: int = 0,
                      tol: float = STRICT_TOL) -> ConeAxiomReport:
    """Brute-force sampling check of the cone invariants."""
    rng = np.random.default_rng(seed)
    report = ConeAxiomReport(n_samples=n_samples,
                             interior_margin=cone_margin(cone, interior_direction(cone)))
    members = [_interior_sample(cone, rng, tol) for _ in range(n_samples)]
    members += list(sample_boundary_rays(cone, min(n_samples, 8), seed, tol))
    for _ in range(n_samples):
        v = rng.standard_normal(cone.dim)
        if cone_margin(cone, v) > tol and cone_margin(cone, -v) > tol:
            report.pointedness_violations += 1
    for v in members[:n_samples]:
        if cone_margin(cone, -v) > tol:
            report.pointedness_violations += 1
    for _ in range(n_samples):
        i, j = rng.integers(len(members), size=2)
        if cone_margin(cone, 0.5 * (members[i] + members[j])) < -tol:
            report.convexity_violations += 1
    return report


ConeCallback = Callable[[np.ndarray], ConeSpec]


@dataclass(frozen=True)
class ConeFieldSpec:
    """A cone field x -> C(x).

    Args:
        variant (:obj:`ConeFieldVariant`): constant, Γ-transported or chart callback.
        cone (:obj:`ConeSpec`, optional): the constant cone or the cone at ``base_point``.
        base_point (:obj:`Point`, optional): base point of a transported field.
        transport_map (:obj:`TransportMap`, optional): transport of a transported field.
        callback (callable, optional): chart coordinates -> :obj:`ConeSpec`.
        solid (bool): whether every cone of the field is declared solid.
    """
    variant: ConeFieldVariant
    cone: Optional[ConeSpec] = None
    base_point: Optional[Point] = None
    transport_map: Optional[TransportMap] = None
    callback: Optional[ConeCallback] = field(default=None, repr=False)
    solid: bool = True

    def __post_init__(self):
        if self.variant is ConeFieldVariant.CUSTOM_CHART:
            if self.callback is None:
                raise ArgumentError("Custom cone fields need a callback.")
            return
        if self.cone is None:
            raise ArgumentError("Constant and transported fields need a cone.")
        if self.variant is ConeFieldVariant.TRANSPORTED:
            if self.base_point is None:
                raise ArgumentError("Transported fields need a base point.")
            if self.transport_map is None:
                object.__setattr__(self, "transport_map",
                                   default_transport(self.base_point.manifold))

    @classmethod
    def constant(cls, cone: ConeSpec) -> "ConeFieldSpec":
        return cls(ConeFieldVariant.CONSTANT, cone=cone)

    @classmethod
    def transported(cls, base_point: Point, cone: ConeSpec,
                    transport_map: Optional[TransportMap] = None) -> "ConeFieldSpec":
        return cls(ConeFieldVariant.TRANSPORTED, cone=cone, base_point=base_point,
                   transport_map=transport_map)

    @classmethod
    def custom(cls, callback: ConeCallback, solid: bool = True) -> "ConeFieldSpec":
        return cls(ConeFieldVariant.CUSTOM_CHART, callback=callback, solid=solid)

    @property
    def is_constant(self) -> bool:
        """Whether C(x) is the same cone in chart components at every x."""
        if self.variant is ConeFieldVariant.CONSTANT:
            return True
        return (self.variant is ConeFieldVariant.TRANSPORTED
                and self.transport_map.rule is TransportRule.IDENTITY)  # type: ignore

    @property
    def base_cone(self) -> Optional[ConeSpec]:
        return self.cone

    @property
    def _congruent_psd(self) -> bool:
        return (self.variant is ConeFieldVariant.TRANSPORTED
                and self.transport_map.rule is TransportRule.SPD_CONGRUENCE  # type: ignore
                and self.cone.variant is ConeVariant.PSD and self.cone.image is None)  # type: ignore

    def at(self, x: Point) -> ConeSpec:
        """The cone C(x) in chart components.

        Congruence maps the PSD cone onto itself, so a PSD cone transported by
        congruence is the PSD cone at every point and its margin is
        :math:`\\lambda_{min}(V) / \\|V\\|_F` of the tangent matrix itself.
        """
        if self.variant is ConeFieldVariant.CUSTOM_CHART:
            cone = self.callback(np.array(x.coords))  # type: ignore
            if not isinstance(cone, ConeSpec):
                raise ArgumentError("Cone field callback must return a ConeSpec.")
        elif self.is_constant or x.same_as(self.base_point) or self._congruent_psd:  # type: ignore
            cone = self.cone
        else:
            cone = self.cone.linear_image(  # type: ignore
                self.transport_map.matrix(self.base_point, x))  # type: ignore
        if cone.dim != x.manifold.dim:  # type: ignore
            raise ArgumentError(f"Cone of dimension {cone.dim} at a point of a manifold of "  # type: ignore
                                f"dimension {x.manifold.dim}.")
        return cone  # type: ignore

    def contains(self, x: Point, v: TangentVector, tol: float = STRICT_TOL) -> MembershipVerdict:
        return contains(self, x, v, tol)

    def sample_interior(self, x: Point, rng: np.random.Generator) -> np.ndarray:
        return _interior_sample(self.at(x), rng)


def contains(field: ConeFieldSpec, x: Point, v: TangentVector,
             tol: float = STRICT_TOL) -> MembershipVerdict:
    """Membership verdict of ``v`` in C(x).

    Args:
        field (:obj:`ConeFieldSpec`): cone field.
        x (:obj:`Point`): base point.
        v (:obj:`TangentVector`): vector based at ``x``; the zero vector is Boundary.
        tol (float): half-width of the boundary band.

    Returns:
        :obj:`MembershipVerdict`: class and normalized margin.

    Raises:
        ArgumentError: if ``v`` is based elsewhere or dimensions differ.
    """
    if not (v.base is x or v.base.same_as(x)):
        raise ArgumentError("Tangent vector is not based at the given point.")
    margin = cone_margin(field.at(x), v.components)
    return MembershipVerdict(classify_margin(margin, tol), margin)


def interior_margin(field: ConeFieldSpec, x: Point, v: TangentVector) -> float:
    """Normalized margin of ``v`` in C(x)."""
    return contains(field, x, v).margin


@dataclass
class SemicontinuityReport:
    """Worst violations of upper and lower semicontinuity around a point."""
    n_samples: int
    slack: float
    upper_violations: int = 0
    lower_violations: int = 0
    worst_upper_margin: float = np.inf
    worst_lower_distance: float = 0.0
    worst_upper_point: Optional[List[float]] = None

    @property
    def passed(self) -> bool:
        return self.upper_violations == 0 and self.lower_violations == 0


def _ball_samples(x: Point, radius: float, n: int, rng: np.random.Generator) -> Iterator[Point]:
    manifold: ManifoldSpec = x.manifold
    produced = 0
    for _ in range(100 * n):
        if produced == n:
            return
        direction = _unit(rng.standard_normal(manifold.dim))
        coords = x.coords + radius * rng.uniform() ** (1.0 / manifold.dim) * direction
        if manifold.contains_coords(coords):
            produced += 1
            yield Point(coords, manifold)


def semicontinuity_probe(field: ConeFieldSpec, x: Point, radius: float, n_samples: int,
                         slack: float = SEMICONTINUITY_SLACK, n_rays: int = 16,
                         seed: int = 0) -> SemicontinuityReport:
    """Probe upper and lower semicontinuity of the cone field at ``x``.

    Upper: every sampled boundary ray of C(y) must have margin above ``-slack`` in
    C(x), i.e. C(y) lies in the widened cone C'. Lower: every sampled interior
    direction of C(x) must lie within ``slack`` of C(y). Points ``y`` are drawn
    from the chart ball of the given radius.
    """
    if radius <= 0:
        raise ArgumentError("radius must be > 0.")
    rng = np.random.default_rng(seed)
    cone_x = field.at(x)
    directions = sample_interior_rays(cone_x, n_rays, seed)
    report = SemicontinuityReport(n_samples=n_samples, slack=slack)
    for index, y in enumerate(_ball_samples(x, radius, n_samples, rng)):
        cone_y = field.at(y)
        rays = sample_boundary_rays(cone_y, n_rays, seed + index + 1)
        worst_margin = min(cone_margin(cone_x, ray) for ray in rays)
        if worst_margin < report.worst_upper_margin:
            report.worst_upper_margin = worst_margin
            report.worst_upper_point = y.coords.tolist()
        if worst_margin <= -slack:
            report.upper_violations += 1
        worst_distance = max(float(np.linalg.norm(u - project_onto_cone(cone_y, u)))
                             for u in directions)
        report.worst_lower_distance = max(report.worst_lower_distance, worst_distance)
        if worst_distance >= slack:
            report.lower_violations += 1
    logger.debug("Semicontinuity probe: %d upper and %d lower violations",
                 report.upper_violations, report.lower_violations)
    return report
