"""Conal order x ≤ y and strict order x ≪ y.

:func:`compare` runs an oracle chain:

1. constant cone fields: ``y - x`` is classified in the cone, which decides the
   order exactly (a straight chart segment is conal iff its direction is);
2. SPD manifolds with the congruence-transported PSD field: the Loewner test
   on ``Y - X`` (congruence maps the PSD cone onto itself, so the field is the
   constant PSD cone in chart components);
3. otherwise a greedy conal-curve search, whose failure only yields
   ``UNDECIDED``.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .cones import (ConeFieldSpec, classify_margin, cone_margin, interior_direction,
                    project_onto_cone, sample_boundary_rays)
from .constants import (SEARCH_MAX_STEPS, SEARCH_TARGET_RADIUS, STRICT_TOL, ConeFieldVariant,
                        ConeVariant, ManifoldKind, MembershipClass, OracleKind, OrderRelation,
                        TransportRule)
from .dynamics import SystemSpec
from .exceptions import ArgumentError, DomainError
from .geometry import ManifoldSpec, Point, TangentVector, as_region, distance, sample_points

logger = logging.getLogger(__name__)

FieldLike = Union[SystemSpec, ConeFieldSpec]
ORDERED = (OrderRelation.LESS, OrderRelation.STRICTLY_LESS)


@dataclass(frozen=True)
class SearchBudget:
    """Budget of the conal-curve search; ``step`` defaults to half the target radius."""
    max_steps: int = SEARCH_MAX_STEPS
    target_radius: float = SEARCH_TARGET_RADIUS
    step: Optional[float] = None

    def __post_init__(self):
        if self.max_steps < 1 or self.target_radius <= 0 or (self.step is not None
                                                             and self.step <= 0):
            raise ArgumentError("Search budget needs max_steps >= 1 and positive radii.")

    @property
    def h(self) -> float:
        return self.step if self.step is not None else 0.5 * self.target_radius


@dataclass
class ConalCurve:
    """Piecewise linear chart curve; ``tangents[k]`` is the right-hand derivative at ``nodes[k]``."""
    nodes: List[Point]
    tangents: List[TangentVector]
    steps: List[float]
    min_margin: float

    @property
    def strict(self) -> bool:
        return self.min_margin >= STRICT_TOL

    @property
    def length(self) -> float:
        return float(sum(self.steps))

    def check(self, field: ConeFieldSpec, tol: float = STRICT_TOL) -> bool:
        """Re-verify conal tangents and node continuity."""
        for node, following, tangent, step in zip(self.nodes, self.nodes[1:], self.tangents,
                                                  self.steps):
            if cone_margin(field.at(node), tangent.components) < -tol:
                return False
            gap = following.coords - node.coords - step * tangent.components
            if np.linalg.norm(gap) > 1e-9 * (1.0 + np.linalg.norm(node.coords)):
                return False
        return True

    def to_dict(self) -> dict:
        return {"nodes": [node.coords.tolist() for node in self.nodes],
                "min_margin": self.min_margin, "length": self.length}


@dataclass
class OrderVerdict:
    """Result of an order query.

    ``margin`` is the normalized cone margin of ``y - x`` for the analytic
    oracles and the smallest tangent margin of the witness for the search.
    """
    relation: OrderRelation
    oracle: OracleKind
    margin: Optional[float] = None
    witness: Optional[ConalCurve] = None
    equality: bool = False

    @property
    def ordered(self) -> bool:
        return self.relation in ORDERED

    @property
    def decided(self) -> bool:
        return self.relation is not OrderRelation.UNDECIDED

    def to_dict(self, include_curve: bool = True) -> dict:
        result = {"relation": self.relation.value, "oracle": self.oracle.value,
                  "min_margin": self.margin, "equality": self.equality}
        if include_curve and self.witness is not None:
            result["curve_nodes"] = [node.coords.tolist() for node in self.witness.nodes]
        return result


def _field_of(sys_or_field: FieldLike) -> ConeFieldSpec:
    return sys_or_field.cone_field if isinstance(sys_or_field, SystemSpec) else sys_or_field


def is_loewner_field(field: ConeFieldSpec, manifold: ManifoldSpec) -> bool:
    return (manifold.kind is ManifoldKind.SPD
            and field.variant is ConeFieldVariant.TRANSPORTED
            and field.transport_map.rule is TransportRule.SPD_CONGRUENCE  # type: ignore
            and field.cone.variant is ConeVariant.PSD  # type: ignore
            and field.cone.image is None)  # type: ignore


def oracle_for(field: ConeFieldSpec, manifold: ManifoldSpec) -> OracleKind:
    if field.is_constant:
        return OracleKind.ANALYTIC_CONSTANT
    if is_loewner_field(field, manifold):
        return OracleKind.LOEWNER
    return OracleKind.CURVE_SEARCH


_RELATION_OF = {MembershipClass.INSIDE: OrderRelation.STRICTLY_LESS,
                MembershipClass.BOUNDARY: OrderRelation.LESS,
                MembershipClass.OUTSIDE: OrderRelation.INCOMPARABLE}


def compare(sys_or_field: FieldLike, x: Point, y: Point, budget: Optional[SearchBudget] = None,
            tol: float = STRICT_TOL) -> OrderVerdict:
    """Decide ``x ≤ y`` and ``x ≪ y``.

    Args:
        sys_or_field (:obj:`SystemSpec` or :obj:`ConeFieldSpec`): the cone field, or
          a system carrying one.
        x (:obj:`Point`): lower point.
        y (:obj:`Point`): upper point.
        budget (:obj:`SearchBudget`, optional): budget of the curve search.
        tol (float): boundary band half-width.

    Returns:
        :obj:`OrderVerdict`: ``x = y`` gives ``LESS`` with the equality flag.
        ``INCOMPARABLE`` only comes from the analytic oracles.

    Raises:
        ArgumentError: if the points live on different manifolds.

    Examples:
        >>> from diffpos.cones import ConeSpec
        >>> from diffpos.geometry import ManifoldSpec
        >>> r2 = ManifoldSpec.euclidean(2)
        >>> field = ConeFieldSpec.constant(ConeSpec.orthant(2))
        >>> compare(field, r2.point([0, 0]), r2.point([1, 2])).relation.value
        'strictly_less'
    """
    if x.manifold != y.manifold:
        raise ArgumentError("Cannot compare points of different manifolds.")
    field = _field_of(sys_or_field)
    oracle = oracle_for(field, x.manifold)
    if x.same_as(y):
        return OrderVerdict(OrderRelation.LESS, oracle, margin=0.0, equality=True)
    if oracle is not OracleKind.CURVE_SEARCH:
        margin = cone_margin(field.cone, y.coords - x.coords)  # type: ignore
        return OrderVerdict(_RELATION_OF[classify_margin(margin, tol)], oracle, margin=margin)
    curve = conal_curve_search(field, x, y, budget, tol)
    if curve is None:
        logger.debug("Curve search from %s to %s failed; order undecided.", x, y)
        return OrderVerdict(OrderRelation.UNDECIDED, oracle)
    relation = OrderRelation.STRICTLY_LESS if curve.min_margin >= tol else OrderRelation.LESS
    return OrderVerdict(relation, oracle, margin=curve.min_margin, witness=curve)


def conal_curve_search(field: ConeFieldSpec, x: Point, y: Point,
                       budget: Optional[SearchBudget] = None,
                       tol: float = STRICT_TOL) -> Optional[ConalCurve]:
    """Greedy steering from ``x`` toward ``y`` along cone directions.

    At each node the chart difference ``d = y - p`` is projected onto the cone;
    the normalized projection maximizes :math:`\\langle d, u\\rangle` over unit cone
    directions. Without progress a constant field fails at once, while a varying
    field drifts along the cone's interior direction. The search succeeds when
    the chart distance to ``y`` drops below the target radius.

    Returns:
        :obj:`ConalCurve` or None: the witnessing curve, or None when the budget
        runs out or the path leaves the chart domain.
    """
    budget = budget or SearchBudget()
    if x.manifold != y.manifold:
        raise ArgumentError("Cannot search between points of different manifolds.")
    manifold = x.manifold
    constant = field.is_constant
    nodes, tangents, steps = [x], [], []
    min_margin = np.inf
    position = np.array(x.coords)
    for _ in range(budget.max_steps):
        offset = y.coords - position
        gap = float(np.linalg.norm(offset))
        if gap < budget.target_radius:
            return ConalCurve(nodes, tangents, steps, float(min_margin if tangents else 0.0))
        node = nodes[-1]
        cone = field.at(node)
        projected = project_onto_cone(cone, offset)
        progress = float(offset @ projected)
        if progress <= 1e-15 * gap ** 2:
            if constant:
                return None
            direction, size = interior_direction(cone), budget.h
        else:
            direction, size = projected / np.linalg.norm(projected), min(budget.h, gap)
        margin = cone_margin(cone, direction)
        if margin < -tol:
            return None
        position = position + size * direction
        if not manifold.contains_coords(position):
            return None
        tangents.append(TangentVector(node, direction))
        steps.append(size)
        nodes.append(Point(position, manifold))
        min_margin = min(min_margin, margin)
    return None


def _pair_region(region: Sequence[Sequence[float]], manifold: Optional[ManifoldSpec],
                 sys_or_field: FieldLike) -> Tuple[np.ndarray, ManifoldSpec]:
    if isinstance(sys_or_field, SystemSpec):
        manifold = sys_or_field.manifold
    box = np.asarray(region, dtype=float)
    manifold = manifold or ManifoldSpec.euclidean(box.shape[0])
    return as_region(box, manifold.dim), manifold


def antisymmetry_diagnostic(sys_or_field: FieldLike, region: Sequence[Sequence[float]],
                            n_samples: int = 500, seed: int = 0,
                            manifold: Optional[ManifoldSpec] = None,
                            budget: Optional[SearchBudget] = None) -> List[Tuple[Point, Point]]:
    """Pairs ordered both ways while more than ten target radii apart.

    An empty list means no antisymmetry violation was seen at this resolution.
    """
    budget = budget or SearchBudget()
    box, manifold = _pair_region(region, manifold, sys_or_field)
    rng = np.random.default_rng(seed)
    points = sample_points(manifold, box, 2 * n_samples, rng)
    violations = []
    for x, y in zip(points[::2], points[1::2]):
        if distance(x, y) <= 10.0 * budget.target_radius:
            continue
        if compare(sys_or_field, x, y, budget).ordered and compare(sys_or_field, y, x,
                                                                    budget).ordered:
            violations.append((x, y))
    logger.info("Antisymmetry diagnostic: %d of %d pairs ordered both ways.", len(violations),
                n_samples)
    return violations


@dataclass
class PairSequence:
    """Chart coordinates of sequences ``x_n``, ``y_n`` and of their limits."""
    xs: Sequence[Sequence[float]]
    ys: Sequence[Sequence[float]]
    x_limit: Sequence[float]
    y_limit: Sequence[float]


@dataclass
class QuasiClosednessReport:
    n_sequences: int = 0
    holds: int = 0
    violations: int = 0
    undecided: int = 0
    domain_exits: int = 0
    precondition_unmet: int = 0
    witnesses: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0


def quasi_closedness_probe(sys_or_field: FieldLike, pair_sequences: Sequence[PairSequence],
                           manifold: Optional[ManifoldSpec] = None,
                           budget: Optional[SearchBudget] = None) -> QuasiClosednessReport:
    """Check that limits of strictly ordered sequences are ordered.

    Limits outside the chart domain are domain exits and count as undecided.
    Sequence members that are not strictly ordered are counted in
    ``precondition_unmet``; their limits are still checked.
    """
    if isinstance(sys_or_field, SystemSpec):
        manifold = sys_or_field.manifold
    report = QuasiClosednessReport()
    for sequence in pair_sequences:
        report.n_sequences += 1
        space = manifold or ManifoldSpec.euclidean(len(sequence.x_limit))
        try:
            unmet = any(compare(sys_or_field, space.point(xn), space.point(yn), budget).relation
                        is not OrderRelation.STRICTLY_LESS
                        for xn, yn in zip(sequence.xs, sequence.ys))
            report.precondition_unmet += int(unmet)
            x, y = space.point(sequence.x_limit), space.point(sequence.y_limit)
        except DomainError:
            report.domain_exits += 1
            report.undecided += 1
            continue
        verdict = compare(sys_or_field, x, y, budget)
        if verdict.ordered:
            report.holds += 1
        elif verdict.decided:
            report.violations += 1
            report.witnesses.append({"x": x.coords.tolist(), "y": y.coords.tolist(),
                                     "relation": verdict.relation.value})
        else:
            report.undecided += 1
    return report


def sample_ordered_pairs(sys_or_field: FieldLike, region: Sequence[Sequence[float]], n: int,
                         seed: int = 0, manifold: Optional[ManifoldSpec] = None,
                         boundary_fraction: float = 0.2,
                         budget: Optional[SearchBudget] = None) -> List[Tuple[Point, Point]]:
    """Random pairs ``x ≤ y`` inside the region.

    ``y = x + λu`` with ``u`` an interior cone sample at ``x`` (a boundary ray
    with probability ``boundary_fraction``); each pair is confirmed by
    :func:`compare`.
    """
    field = _field_of(sys_or_field)
    box, manifold = _pair_region(region, manifold, sys_or_field)
    rng = np.random.default_rng(seed)
    widths = box[:, 1] - box[:, 0]
    pairs: List[Tuple[Point, Point]] = []
    for _ in range(100 * n):
        if len(pairs) == n:
            break
        x = sample_points(manifold, box, 1, rng)[0]
        cone = field.at(x)
        if rng.uniform() < boundary_fraction:
            rays = sample_boundary_rays(cone, cone.dim, int(rng.integers(2 ** 31)))
            direction = rays[rng.integers(len(rays))]
        else:
            direction = field.sample_interior(x, rng)
        direction = direction / np.linalg.norm(direction)
        coords = x.coords + rng.uniform(0.05, 0.5) * float(np.min(widths)) * direction
        if np.any(coords < box[:, 0]) or np.any(coords > box[:, 1]) \
                or not manifold.contains_coords(coords):
            continue
        y = Point(coords, manifold)
        if compare(sys_or_field, x, y, budget).ordered:
            pairs.append((x, y))
    logger.debug("Sampled %d ordered pairs.", len(pairs))
    return pairs
