"""Foliation census of the non-convergent set.

The census region is cut into parallel lines along an interior cone direction
``v``; points on such a line are strictly ordered, so each line meets the
non-convergent set in few places. Classifying samples on every line and
integrating the per-line lengths over the complement ``F`` of ``v`` (Fubini)
estimates the measure of the non-convergent set, which is compared with a
direct Monte-Carlo estimate and with finer line resolutions.
"""
import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd  # type: ignore
from joblib import Parallel, delayed  # type: ignore
from scipy.stats import binomtest  # type: ignore

from .cones import cone_margin, interior_direction, orthonormal_complement
from .constants import (DEFAULT_N_LINES, DEFAULT_N_POINTS, FOLIATION_SHRINK, MAX_CONDITION_NUMBER,
                        MAX_FOLIATION_SHRINKS, ORDER_SUBSAMPLE, REFINEMENT_LEVELS,
                        REFINEMENT_STRIDE, STRICT_TOL, ManifoldKind, OmegaClass, OrderRelation,
                        SampleClass, StabilityTag)
from .dynamics import (Equilibrium, EquilibriumSet, IntegratorOptions, SystemSpec, Trajectory,
                       classify_equilibrium, find_equilibria, flow)
from .evaluation import label_agreement
from .exceptions import ArgumentError, DomainError, FoliationError, NumericError
from .geometry import ManifoldSpec, Point, as_region, sample_points, volume_density
from .limits import OmegaBudget, OmegaEstimate, omega_estimate
from .order import compare

logger = logging.getLogger(__name__)

NON_CONVERGENT = (SampleClass.SADDLE_CONVERGENT, SampleClass.PERIODIC, SampleClass.ESCAPED)


@dataclass(frozen=True)
class FoliationSpec:
    """Lines ``x + F^T c + s v`` through the census region.

    Args:
        region (:obj:`numpy.ndarray`): chart box ``V`` (``dim x 2``), possibly shrunk.
        base_point (:obj:`Point`): point ``x`` the lines are laid out around.
        direction (:obj:`numpy.ndarray`): unit interior direction ``v``.
        margin (float): normalized cone margin of ``v`` at ``x``.
        complement (:obj:`numpy.ndarray`): orthonormal basis of ``F`` (rows).
        n_lines (int): lines per ``F`` axis; lines sit at cell centres.
        n_points (int): samples per line, endpoints included.
        shrinks (int): how often the region was halved.
        system (str): name of the system the lines were laid out for.
    """
    region: np.ndarray
    base_point: Point
    direction: np.ndarray
    margin: float
    complement: np.ndarray
    n_lines: int
    n_points: int
    shrinks: int = 0
    system: str = ""

    @property
    def manifold(self) -> ManifoldSpec:
        return self.base_point.manifold

    @property
    def dim(self) -> int:
        return self.direction.size

    @property
    def condition_number(self) -> float:
        return float(np.linalg.cond(np.vstack([self.direction, self.complement])))

    def f_extent(self) -> np.ndarray:
        """Range of ``F`` coordinates covered by the region, one row per axis."""
        if self.complement.shape[0] == 0:
            return np.empty((0, 2))
        corners = np.array(list(itertools.product(*self.region)))
        projected = (corners - self.base_point.coords) @ self.complement.T
        return np.column_stack([projected.min(axis=0), projected.max(axis=0)])

    @property
    def cell_volume(self) -> float:
        extent = self.f_extent()
        return float(np.prod((extent[:, 1] - extent[:, 0]) / self.n_lines))

    def line_offsets(self) -> np.ndarray:
        """Cell-centred ``F`` coordinates of every line, in row-major order."""
        extent = self.f_extent()
        if extent.shape[0] == 0:
            return np.zeros((1, 0))
        axes = [low + (np.arange(self.n_lines) + 0.5) * (high - low) / self.n_lines
                for low, high in extent]
        return np.array(list(itertools.product(*axes)))

    def line_segment(self, offset: np.ndarray) -> Optional[Tuple[float, float]]:
        """Parameter range ``(s_low, s_high)`` of the line inside the region."""
        origin = self.base_point.coords + offset @ self.complement
        s_low, s_high = -np.inf, np.inf
        for (low, high), o, v in zip(self.region, origin, self.direction):
            if abs(v) < 1e-15:
                if not low <= o <= high:
                    return None
                continue
            bounds = sorted(((low - o) / v, (high - o) / v))
            s_low, s_high = max(s_low, bounds[0]), min(s_high, bounds[1])
        return (float(s_low), float(s_high)) if s_high > s_low else None

    def line_points(self, offset: np.ndarray, n_points: Optional[int] = None) -> np.ndarray:
        """Node-aligned samples of one line; ``n -> 2(n-1)+1`` nests the grids."""
        n = n_points or self.n_points
        segment = self.line_segment(offset)
        if segment is None:
            return np.empty((0, self.dim))
        middle, half = 0.5 * (segment[0] + segment[1]), 0.5 * (segment[1] - segment[0])
        s = middle + half * (2.0 * np.arange(n) / (n - 1) - 1.0) if n > 1 else np.array([middle])
        origin = self.base_point.coords + offset @ self.complement
        return origin + s[:, None] * self.direction

    def to_dict(self) -> Dict[str, Any]:
        return {"region": self.region.tolist(), "base_point": self.base_point.coords.tolist(),
                "direction": self.direction.tolist(), "margin": self.margin,
                "complement": self.complement.tolist(), "n_lines": self.n_lines,
                "n_points": self.n_points, "shrinks": self.shrinks,
                "condition_number": self.condition_number, "system": self.system}


def _interior_everywhere(sys: SystemSpec, box: np.ndarray, direction: np.ndarray,
                         n_checks: int, rng: np.random.Generator) -> bool:
    if sys.cone_field.is_constant:
        return True
    corners = [c for c in itertools.product(*box) if sys.manifold.contains_coords(np.array(c))]
    points = [Point(np.array(c), sys.manifold) for c in corners] \
        + sample_points(sys.manifold, box, n_checks, rng)
    return all(cone_margin(sys.cone_field.at(p), direction) > STRICT_TOL for p in points)


def build_foliation(sys: SystemSpec, x: Optional[Point] = None,
                    region: Optional[Sequence[Sequence[float]]] = None,
                    resolution: Tuple[int, int] = (DEFAULT_N_LINES, DEFAULT_N_POINTS),
                    max_shrinks: int = MAX_FOLIATION_SHRINKS, n_checks: int = 256,
                    seed: int = 0) -> FoliationSpec:
    """Choose ``v``, the complement ``F`` and a region where ``v`` is interior everywhere.

    Args:
        sys (:obj:`SystemSpec`): the system.
        x (:obj:`Point`, optional): base point, defaulting to the region centre.
        region (array-like, optional): chart box, defaulting to ``sys.region``.
        resolution (tuple): ``(n_lines, n_points)``.
        max_shrinks (int): how often the region may be halved around ``x``.
        n_checks (int): sampled points per interior check.
        seed (int): seed of the interior check.

    Raises:
        ArgumentError: if ``x`` is not inside the region or the resolution is invalid.
        NumericError: if the cone at ``x`` is not solid or ``E + F`` is ill-conditioned.
        FoliationError: if ``v`` is still not interior everywhere after ``max_shrinks``.
    """
    n_lines, n_points = resolution
    if n_lines < 1 or n_points < 2:
        raise ArgumentError("Resolution needs >= 1 line and >= 2 points per line.")
    box = as_region(region if region is not None else sys.region, sys.dim)
    x = x or sys.point(box.mean(axis=1))
    if np.any(x.coords <= box[:, 0]) or np.any(x.coords >= box[:, 1]):
        raise ArgumentError(f"Base point {x!r} is not interior to the region.")
    cone = sys.cone_field.at(x)
    direction = interior_direction(cone)
    margin = cone_margin(cone, direction)
    if margin <= STRICT_TOL:
        raise NumericError(f"The cone at {x!r} is not solid.")
    complement = orthonormal_complement(direction)
    condition = np.linalg.cond(np.vstack([direction, complement]))
    if condition >= MAX_CONDITION_NUMBER:
        raise NumericError(f"Line basis is ill-conditioned (condition number {condition:.3g}).")
    rng = np.random.default_rng(seed)
    shrinks = 0
    while not _interior_everywhere(sys, box, direction, n_checks, rng):
        if shrinks == max_shrinks:
            raise FoliationError(f"Direction {direction.tolist()} is not interior on the region "
                                 f"after {max_shrinks} shrinks.")
        box = x.coords[:, None] + FOLIATION_SHRINK * (box - x.coords[:, None])
        shrinks += 1
        logger.warning("Shrinking the census region around %r (shrink %d).", x, shrinks)
    logger.debug("Foliation direction %s with margin %.3g.", direction.tolist(), margin)
    return FoliationSpec(box, x, direction, float(margin), complement, n_lines, n_points, shrinks,
                         sys.name)


@dataclass
class LineCensus:
    """Classified samples of one foliation line.

    ``omega_points`` keeps the ω-limit points of non-convergent samples, keyed
    by sample index. ``weights`` are volume densities (all ones off SPD).
    """
    line_index: int
    offset: np.ndarray
    length: float
    coords: np.ndarray
    classes: List[SampleClass]
    equilibrium_indices: List[Optional[int]]
    residuals: np.ndarray
    weights: np.ndarray
    omega_points: Dict[int, np.ndarray] = field(default_factory=dict)
    order_checked: int = 0
    order_violations: int = 0

    @property
    def n_samples(self) -> int:
        return len(self.classes)

    @property
    def non_convergent(self) -> np.ndarray:
        return np.array([c in NON_CONVERGENT for c in self.classes], dtype=bool)

    @property
    def undecided(self) -> np.ndarray:
        return np.array([c is SampleClass.UNDECIDED for c in self.classes], dtype=bool)

    @property
    def n_non_convergent(self) -> int:
        return int(self.non_convergent.sum())

    @property
    def n_undecided(self) -> int:
        return int(self.undecided.sum())

    def clusters(self) -> List[Tuple[int, int]]:
        """Maximal runs ``(first, last)`` of adjacent non-convergent samples."""
        runs: List[Tuple[int, int]] = []
        start = None
        for k, flag in enumerate(self.non_convergent):
            if flag and start is None:
                start = k
            elif not flag and start is not None:
                runs.append((start, k - 1))
                start = None
        if start is not None:
            runs.append((start, self.n_samples - 1))
        return runs

    @property
    def cluster_count(self) -> int:
        return len(self.clusters())

    def _weighted(self, mask: np.ndarray) -> float:
        if self.n_samples == 0:
            return 0.0
        return float(np.sum(self.weights[mask]) / self.n_samples * self.length)

    @property
    def mu(self) -> float:
        """Non-convergent length of the line."""
        return self._weighted(self.non_convergent)

    @property
    def mu_upper(self) -> float:
        return self._weighted(self.non_convergent | self.undecided)

    @property
    def measure(self) -> float:
        return self._weighted(np.ones(self.n_samples, dtype=bool))

    @property
    def cell(self) -> float:
        return self.length / (self.n_samples - 1) if self.n_samples > 1 else self.length

    def labels(self) -> List[str]:
        """Basin labels: ``e<k>`` for convergent samples, the class name otherwise."""
        return [f"e{index}" if cls is SampleClass.CONVERGENT and index is not None else cls.value
                for cls, index in zip(self.classes, self.equilibrium_indices)]

    def label_changes(self) -> int:
        basins = [label for label, cls in zip(self.labels(), self.classes)
                  if cls is SampleClass.CONVERGENT]
        return sum(a != b for a, b in zip(basins, basins[1:]))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.coords, columns=[f"x{i}" for i in range(self.coords.shape[1])])
        frame.insert(0, "point_index", np.arange(self.n_samples))
        frame.insert(0, "line_index", self.line_index)
        frame["class"] = [c.value for c in self.classes]
        frame["equilibrium_index"] = pd.array(self.equilibrium_indices, dtype="Int64")
        frame["omega_residual"] = self.residuals
        return frame

    def to_dict(self) -> Dict[str, Any]:
        return {"line_index": self.line_index, "offset": self.offset.tolist(),
                "length": self.length, "n_samples": self.n_samples,
                "non_convergent": self.n_non_convergent, "undecided": self.n_undecided,
                "clusters": self.cluster_count, "mu": self.mu,
                "order_checked": self.order_checked, "order_violations": self.order_violations}


def _sample_class(sys: SystemSpec, estimate: OmegaEstimate,
                  equilibria: EquilibriumSet) -> SampleClass:
    if estimate.omega_class is OmegaClass.CONVERGED_TO:
        if estimate.equilibrium_index is not None:
            stable = equilibria[estimate.equilibrium_index].is_stable
        else:
            stable = classify_equilibrium(sys, estimate.equilibrium.coords).is_stable  # type: ignore
        return SampleClass.CONVERGENT if stable else SampleClass.SADDLE_CONVERGENT
    if estimate.omega_class is OmegaClass.PERIODIC_ORBIT:
        return SampleClass.PERIODIC
    if estimate.omega_class is OmegaClass.ESCAPED:
        return SampleClass.ESCAPED
    return SampleClass.UNDECIDED


def classify_sample(sys: SystemSpec, coords: np.ndarray, budget: OmegaBudget,
                    equilibria: EquilibriumSet,
                    opts: Optional[IntegratorOptions] = None) -> Tuple[SampleClass, OmegaEstimate]:
    """Census class of one chart point, with the ω-estimate behind it."""
    if not sys.manifold.contains_coords(coords):
        empty = OmegaEstimate(OmegaClass.ESCAPED, np.empty((0, sys.dim)), sys.manifold, 0.0,
                              float("nan"), note="sample outside the chart domain")
        return SampleClass.ESCAPED, empty
    estimate = omega_estimate(sys, Point(coords, sys.manifold), budget, equilibria, opts)
    return _sample_class(sys, estimate, equilibria), estimate


def _weights(sys: SystemSpec, coords: np.ndarray) -> np.ndarray:
    if sys.manifold.kind is not ManifoldKind.SPD:
        return np.ones(len(coords))
    return np.array([volume_density(Point(c, sys.manifold))
                     if sys.manifold.contains_coords(c) else 0.0 for c in coords])


def _census_line(sys: SystemSpec, foliation: FoliationSpec, line_index: int, offset: np.ndarray,
                 n_points: int, budget: OmegaBudget, opts: Optional[IntegratorOptions],
                 equilibria: EquilibriumSet, seed: int, order_fraction: float) -> LineCensus:
    coords = foliation.line_points(offset, n_points)
    segment = foliation.line_segment(offset)
    length = segment[1] - segment[0] if segment is not None else 0.0
    classes, indices, residuals = [], [], []
    omega_points: Dict[int, np.ndarray] = {}
    for k, c in enumerate(coords):
        cls, estimate = classify_sample(sys, c, budget, equilibria, opts)
        classes.append(cls)
        indices.append(estimate.equilibrium_index)
        residuals.append(estimate.residual)
        if cls in NON_CONVERGENT:
            omega_points[k] = estimate.limit_points()
    census = LineCensus(line_index, offset, float(length), coords, classes, indices,
                        np.array(residuals, dtype=float), _weights(sys, coords), omega_points)
    for k in range(len(coords) - 1):
        # per-sample streams keep the subsample independent of scheduling
        if np.random.default_rng([seed, line_index, k]).uniform() >= order_fraction:
            continue
        if not (sys.manifold.contains_coords(coords[k])
                and sys.manifold.contains_coords(coords[k + 1])):
            continue
        census.order_checked += 1
        verdict = compare(sys, Point(coords[k], sys.manifold), Point(coords[k + 1], sys.manifold))
        if verdict.relation is not OrderRelation.STRICTLY_LESS:
            census.order_violations += 1
    if census.order_violations:
        logger.warning("Line %d: %d of %d consecutive sample pairs not strictly ordered.",
                       line_index, census.order_violations, census.order_checked)
    return census


def run_line_census(sys: SystemSpec, foliation: FoliationSpec,
                    budget: Optional[OmegaBudget] = None, seed: int = 0,
                    opts: Optional[IntegratorOptions] = None, n_jobs: int = 1,
                    equilibria: Optional[EquilibriumSet] = None,
                    line_indices: Optional[Sequence[int]] = None,
                    n_points: Optional[int] = None,
                    order_fraction: float = ORDER_SUBSAMPLE) -> List[LineCensus]:
    """Classify every sample of every (selected) line by its ω-limit set.

    Lines are independent work items run with ``n_jobs`` joblib workers.
    Integration failures degrade samples to ``UNDECIDED``. Consecutive samples
    of a line are checked to be strictly ordered on an ``order_fraction``
    subsample.
    """
    budget = budget or OmegaBudget()
    if equilibria is None:
        equilibria = find_equilibria(sys, foliation.region, seed=seed)
    offsets = foliation.line_offsets()
    selected = list(range(len(offsets))) if line_indices is None else list(line_indices)
    n = n_points or foliation.n_points
    logger.info("Census of %s: %d lines x %d points.", sys.name, len(selected), n)
    censuses = Parallel(n_jobs=n_jobs)(
        delayed(_census_line)(sys, foliation, index, offsets[index], n, budget, opts, equilibria,
                              seed, order_fraction)
        for index in selected)
    undecided = sum(c.n_undecided for c in censuses)
    if undecided:
        logger.warning("%d census samples remained undecided.", undecided)
    return list(censuses)


@dataclass
class RefinementLevel:
    factor: int
    n_points: int
    line_indices: List[int]
    fraction: float
    upper_fraction: float
    cluster_counts: List[int]
    agreement: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"factor": self.factor, "n_points": self.n_points,
                "line_indices": list(self.line_indices), "fraction": self.fraction,
                "upper_fraction": self.upper_fraction,
                "cluster_counts": list(self.cluster_counts), "agreement": self.agreement}


@dataclass
class CensusReport:
    """Measure estimates of the non-convergent set.

    ``fubini_sigma`` is the binomial error of the per-line fractions.
    ``fubini_resolution`` is one sample cell per cluster, the amount by which a
    cluster's extent is unknown at the sampling resolution. Monte-Carlo intervals
    are Clopper-Pearson, or the rule of three ``[0, 3/N]`` when no sample is
    non-convergent.
    """
    system: str
    foliation: FoliationSpec
    censuses: List[LineCensus]
    fubini_estimate: float
    fubini_sigma: float
    fubini_upper: float
    region_measure: float
    fubini_resolution: float = 0.0
    mc_estimate: Optional[float] = None
    mc_interval: Optional[Tuple[float, float]] = None
    mc_sigma: Optional[float] = None
    mc_samples: int = 0
    mc_non_convergent: int = 0
    mc_undecided: int = 0
    refinement: List[RefinementLevel] = field(default_factory=list)
    decay_constant: Optional[float] = None
    basin_fractions: Dict[str, float] = field(default_factory=dict)
    equilibria: List[Dict[str, Any]] = field(default_factory=list)
    refined_censuses: Dict[int, List[LineCensus]] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return sum(c.n_samples for c in self.censuses)

    @property
    def non_convergent_fraction(self) -> float:
        total = self.n_samples
        return sum(c.n_non_convergent for c in self.censuses) / total if total else 0.0

    @property
    def undecided_fraction(self) -> float:
        total = self.n_samples
        return sum(c.n_undecided for c in self.censuses) / total if total else 0.0

    @property
    def cluster_counts(self) -> List[int]:
        return [c.cluster_count for c in self.censuses]

    @property
    def max_label_changes(self) -> int:
        return max((c.label_changes() for c in self.censuses), default=0)

    @property
    def fubini_interval(self) -> Tuple[float, float]:
        """Three binomial sigmas widened by the resolution bound; undecided samples count high."""
        spread = 3 * self.fubini_sigma + self.fubini_resolution
        return max(0.0, self.fubini_estimate - spread), self.fubini_upper + spread

    @property
    def estimators_agree(self) -> Optional[bool]:
        """Whether the Fubini interval meets the Monte-Carlo interval."""
        if self.mc_estimate is None or self.mc_interval is None:
            return None
        low, high = self.fubini_interval
        return bool(self.mc_interval[0] <= high and low <= self.mc_interval[1])

    @property
    def refinement_non_increasing(self) -> bool:
        fractions = [level.fraction for level in self.refinement]
        return all(b <= a + 1e-15 for a, b in zip(fractions, fractions[1:]))

    @property
    def refinement_ratio(self) -> Optional[float]:
        """Fraction at 1x over the fraction at 2x resolution."""
        if len(self.refinement) < 2 or self.refinement[1].fraction == 0:
            return None
        return self.refinement[0].fraction / self.refinement[1].fraction

    def to_dict(self) -> Dict[str, Any]:
        return {"system": self.system, "foliation": self.foliation.to_dict(),
                "n_lines": len(self.censuses), "n_samples": self.n_samples,
                "non_convergent_fraction": self.non_convergent_fraction,
                "undecided_fraction": self.undecided_fraction,
                "fubini": {"estimate": self.fubini_estimate, "sigma": self.fubini_sigma,
                           "upper_bound": self.fubini_upper,
                           "resolution_bound": self.fubini_resolution,
                           "interval": list(self.fubini_interval)},
                "monte_carlo": {"estimate": self.mc_estimate,
                                "interval": None if self.mc_interval is None
                                else list(self.mc_interval),
                                "sigma": self.mc_sigma, "samples": self.mc_samples,
                                "non_convergent": self.mc_non_convergent,
                                "undecided": self.mc_undecided},
                "estimators_agree": self.estimators_agree,
                "region_measure": self.region_measure,
                "refinement": [level.to_dict() for level in self.refinement],
                "refinement_non_increasing": self.refinement_non_increasing,
                "refinement_ratio": self.refinement_ratio,
                "decay_constant": self.decay_constant,
                "cluster_counts": self.cluster_counts,
                "max_label_changes": self.max_label_changes,
                "basin_fractions": dict(self.basin_fractions),
                "equilibria": list(self.equilibria),
                "lines": [c.to_dict() for c in self.censuses]}

    def to_frame(self) -> pd.DataFrame:
        """CSV grid: one row per sample."""
        frames = [c.to_frame() for c in self.censuses if c.n_samples]
        if not frames:
            return pd.DataFrame(columns=["line_index", "point_index", "class",
                                         "equilibrium_index", "omega_residual"])
        return pd.concat(frames, ignore_index=True)


def _fubini(censuses: Sequence[LineCensus],
            cell_volume: float) -> Tuple[float, float, float, float]:
    estimate = sum(c.mu for c in censuses) * cell_volume
    upper = sum(c.mu_upper for c in censuses) * cell_volume
    binomial = 0.0
    resolution = 0.0
    for c in censuses:
        if c.n_samples == 0:
            continue
        p = c.n_non_convergent / c.n_samples
        binomial += p * (1 - p) / c.n_samples * (c.measure * cell_volume) ** 2
        resolution += c.cluster_count * c.cell * float(np.max(c.weights, initial=0.0))
    return estimate, float(np.sqrt(binomial)), upper, resolution * cell_volume


def _monte_carlo(sys: SystemSpec, region: np.ndarray, n: int, budget: OmegaBudget,
                 opts: Optional[IntegratorOptions], equilibria: EquilibriumSet, seed: int,
                 n_jobs: int) -> Dict[str, Any]:
    rng = np.random.default_rng([seed, 1])
    points = sample_points(sys.manifold, region, n, rng)
    coords = np.array([p.coords for p in points])
    results = Parallel(n_jobs=n_jobs)(delayed(classify_sample)(sys, c, budget, equilibria, opts)
                                      for c in coords)
    classes = [cls for cls, _ in results]
    weights = _weights(sys, coords)
    flags = np.array([cls in NON_CONVERGENT for cls in classes])
    volume = float(np.prod(region[:, 1] - region[:, 0]))
    count = int(flags.sum())
    mean_weight = float(np.mean(weights))
    estimate = volume * float(np.mean(weights * flags))
    if count == 0:
        low, high = 0.0, 3.0 / n
    else:
        interval = binomtest(count, n).proportion_ci(confidence_level=0.95, method="exact")
        low, high = interval.low, interval.high
    p = count / n
    sigma = volume * mean_weight * max(np.sqrt(p * (1 - p) / n), 1.0 / n)
    return {"estimate": estimate, "interval": (volume * mean_weight * low,
                                               volume * mean_weight * high),
            "sigma": float(sigma), "samples": n, "non_convergent": count,
            "undecided": sum(cls is SampleClass.UNDECIDED for cls in classes)}


def _shared_labels(coarse: LineCensus, fine: LineCensus, ratio: int) -> Tuple[List[str], List[str]]:
    coarse_labels = coarse.labels()
    fine_labels = fine.labels()[::ratio]
    size = min(len(coarse_labels), len(fine_labels))
    return coarse_labels[:size], fine_labels[:size]


def measure_estimate(censuses: Sequence[LineCensus], foliation: FoliationSpec,
                     sys: Optional[SystemSpec] = None, budget: Optional[OmegaBudget] = None,
                     opts: Optional[IntegratorOptions] = None, seed: int = 0,
                     refinement_levels: Sequence[int] = REFINEMENT_LEVELS,
                     refinement_stride: int = REFINEMENT_STRIDE,
                     mc_samples: Optional[int] = None, n_jobs: int = 1,
                     equilibria: Optional[EquilibriumSet] = None) -> CensusReport:
    """Fubini and Monte-Carlo estimates of the non-convergent measure.

    Without ``sys`` only the Fubini estimate is formed. With it, a direct
    Monte-Carlo estimate over the same region (as many samples as the line
    census, unless ``mc_samples`` is given) and the refinement series over
    every ``refinement_stride``-th line are added. On SPD manifolds samples are
    weighted by the volume density.

    Raises:
        ArgumentError: without lines.
    """
    if not censuses:
        raise ArgumentError("measure_estimate needs at least one line census.")
    cell_volume = foliation.cell_volume
    estimate, sigma, upper, resolution = _fubini(censuses, cell_volume)
    region_measure = sum(c.measure for c in censuses) * cell_volume
    total = sum(c.n_samples for c in censuses)
    labels = [label for c in censuses for label in c.labels()]
    basin_fractions = {label: labels.count(label) / total for label in sorted(set(labels))} \
        if total else {}
    report = CensusReport(sys.name if sys is not None else foliation.system, foliation,
                          list(censuses),
                          estimate, sigma, upper, region_measure, resolution,
                          basin_fractions=basin_fractions)
    if sys is None:
        return report

    budget = budget or OmegaBudget()
    if equilibria is None:
        equilibria = find_equilibria(sys, foliation.region, seed=seed)
    report.equilibria = [{"index": k, "point": e.point.coords.tolist(),
                          "stability": e.stability.value} for k, e in enumerate(equilibria)]
    monte_carlo = _monte_carlo(sys, foliation.region, mc_samples or total, budget, opts,
                               equilibria, seed, n_jobs)
    report.mc_estimate = monte_carlo["estimate"]
    report.mc_interval = monte_carlo["interval"]
    report.mc_sigma = monte_carlo["sigma"]
    report.mc_samples = monte_carlo["samples"]
    report.mc_non_convergent = monte_carlo["non_convergent"]
    report.mc_undecided = monte_carlo["undecided"]

    by_index = {c.line_index: c for c in censuses}
    subset = sorted(by_index)[::max(1, refinement_stride)]
    previous: Optional[Tuple[int, List[LineCensus]]] = None
    for factor in sorted(refinement_levels):
        n_points = (foliation.n_points - 1) * factor + 1
        if factor == 1:
            level_lines = [by_index[i] for i in subset]
        else:
            logger.info("Refinement level %dx: %d lines x %d points.", factor, len(subset),
                        n_points)
            level_lines = run_line_census(sys, foliation, budget, seed, opts, n_jobs, equilibria,
                                          subset, n_points)
        samples = sum(c.n_samples for c in level_lines)
        fraction = sum(c.n_non_convergent for c in level_lines) / samples if samples else 0.0
        upper_fraction = sum(c.n_non_convergent + c.n_undecided
                             for c in level_lines) / samples if samples else 0.0
        agreement = None
        if previous is not None:
            ratio = factor // previous[0]
            coarse, fine = [], []
            for coarse_line, fine_line in zip(previous[1], level_lines):
                a, b = _shared_labels(coarse_line, fine_line, ratio)
                coarse.extend(a)
                fine.extend(b)
            agreement = label_agreement(coarse, fine)
        report.refinement.append(RefinementLevel(factor, n_points, list(subset), fraction,
                                                 upper_fraction,
                                                 [c.cluster_count for c in level_lines],
                                                 agreement))
        report.refined_censuses[factor] = level_lines
        previous = (factor, level_lines)

    resolutions = np.array([level.n_points for level in report.refinement], dtype=float)
    fractions = np.array([level.fraction for level in report.refinement])
    if resolutions.size:
        report.decay_constant = float(np.sum(fractions / resolutions)
                                      / np.sum(1.0 / resolutions ** 2))
    logger.info("Census of %s: Fubini %.6g +- %.3g, Monte-Carlo %.6g, fraction %.4g.", sys.name,
                estimate, sigma, report.mc_estimate, report.non_convergent_fraction)
    return report


@dataclass
class CountabilityReport:
    cluster_counts: List[int]
    refined_counts: Optional[List[int]] = None
    shared_omega_violations: int = 0
    witnesses: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def max_count(self) -> int:
        return max(self.cluster_counts, default=0)

    @property
    def stable(self) -> Optional[List[bool]]:
        """Per line: refinement splits clusters into at most as many clusters."""
        if self.refined_counts is None:
            return None
        return [fine <= coarse for coarse, fine in zip(self.cluster_counts, self.refined_counts)]

    @property
    def passed(self) -> bool:
        return self.shared_omega_violations == 0 and all(self.stable or [True])

    def to_dict(self) -> Dict[str, Any]:
        return {"cluster_counts": list(self.cluster_counts),
                "refined_counts": self.refined_counts, "stable": self.stable,
                "max_count": self.max_count,
                "shared_omega_violations": self.shared_omega_violations,
                "witnesses": list(self.witnesses), "passed": self.passed}


def countability_probe(censuses: Sequence[LineCensus],
                       refined: Optional[Sequence[LineCensus]] = None,
                       eps_conv: float = OmegaBudget().eps_conv) -> CountabilityReport:
    """Finite-resolution consequences of a countable non-convergent set per line.

    ``refined`` holds the same lines at twice the resolution, matched by
    ``line_index``. Non-convergent samples of one line more than ten cells apart
    must not share ω-limit points within ``eps_conv``.
    """
    report = CountabilityReport([c.cluster_count for c in censuses])
    if refined is not None:
        by_index = {c.line_index: c for c in refined}
        report.refined_counts = [by_index[c.line_index].cluster_count
                                 if c.line_index in by_index else c.cluster_count
                                 for c in censuses]
    for census in censuses:
        keys = sorted(census.omega_points)
        for i, first in enumerate(keys):
            for second in keys[i + 1:]:
                if second - first <= 10:
                    continue
                a, b = census.omega_points[first], census.omega_points[second]
                if len(a) == 0 or len(b) == 0:
                    continue
                gaps = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
                if np.min(gaps) < eps_conv:
                    report.shared_omega_violations += 1
                    report.witnesses.append({"line_index": census.line_index,
                                             "samples": [first, second]})
    return report


def trace_stable_manifold(sys: SystemSpec, saddle: Equilibrium, length: float = 5.0,
                          eps: float = 1e-6,
                          opts: Optional[IntegratorOptions] = None) -> List[Trajectory]:
    """Branches of the stable manifold of a saddle by backward integration.

    Each real stable eigenvector ``w`` gives two branches started at
    ``e +- eps w`` and integrated backward for time ``length``.

    Raises:
        ArgumentError: if the equilibrium has no real stable direction.
    """
    if length <= 0 or eps <= 0:
        raise ArgumentError("length and eps must be > 0.")
    eigenvalues, vectors = np.linalg.eig(sys.jacobian_at(saddle.point.coords))
    stable = [np.real(vectors[:, k]) for k in range(len(eigenvalues))
              if eigenvalues[k].real < 0 and abs(eigenvalues[k].imag) < 1e-12]
    if not stable or saddle.stability is StabilityTag.STABLE:
        raise ArgumentError("Equilibrium has no real stable direction to trace.")
    branches = []
    for w in stable:
        w = w / np.linalg.norm(w)
        for sign in (1.0, -1.0):
            start = saddle.point.coords + sign * eps * w
            try:
                branches.append(flow(sys, Point(start, sys.manifold), -length, opts))
            except DomainError:
                logger.debug("Stable branch start %s outside the chart domain.", start.tolist())
    return branches
