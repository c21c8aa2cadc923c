"""Run configuration loaded from a YAML file.

Example::

    system:
      name: bistable_tanh
      parameters: {gain: 2.0}
    region: [[-2, 2], [-2, 2]]
    seed: 42
    output_dir: runs/bistable
    census: {n_lines: 101, n_points: 201}

Inline systems replace ``name`` by ``variables``, ``equations`` and an
optional ``cone`` table (``type`` one of orthant, halfspaces, generators,
second_order, psd). With ``manifold: spd`` the variables are the
upper-triangular entries of a symmetric matrix and the cone, PSD unless
given, is transported by congruence from the ``cone.base`` matrix
(identity by default).
"""
import logging
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import yaml  # type: ignore

from .cones import ConeSpec
from .constants import (DEFAULT_ATOL, DEFAULT_ESCAPE_RADIUS, DEFAULT_N_LINES, DEFAULT_N_POINTS,
                        DEFAULT_RTOL, EPS_CONV, OMEGA_N_TAIL, OMEGA_T_MAX, OMEGA_WINDOW,
                        RECURRENCE_TOL, REFINEMENT_LEVELS, REFINEMENT_STRIDE, SEARCH_MAX_STEPS,
                        SEARCH_TARGET_RADIUS)
from .dynamics import IntegratorOptions, SystemSpec
from .exceptions import ArgumentError, ConfigError
from .files import read_text
from .geometry import as_region, matrix_size_from_chart_dim
from .limits import DEFAULT_T_GRID, PROPERTIES, OmegaBudget
from .order import SearchBudget
from .systems import get_system, inline_system

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SystemConfig:
    name: Optional[str] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    variables: Optional[List[str]] = None
    equations: Optional[List[str]] = None
    manifold: str = "euclidean"
    cone: Optional[Dict[str, Any]] = None

    def build(self, region: Optional[np.ndarray] = None) -> SystemSpec:
        """Built-in system by name, or an inline system from expressions."""
        if self.name is not None and self.variables is None:
            return get_system(self.name, **self.parameters)
        variables = self.variables or []
        return inline_system(self.name or "inline", variables, self.equations or [],
                             self.parameters,
                             _cone(self.cone, len(variables),
                                   "psd" if self.manifold == "spd" else "orthant"), region,
                             manifold=self.manifold, base=(self.cone or {}).get("base"))


def _cone(table: Optional[Mapping[str, Any]], dim: int,
          default: str = "orthant") -> Optional[ConeSpec]:
    if table is None:
        return None
    kind = table.get("type", default)
    try:
        if kind == "orthant":
            return ConeSpec.orthant(dim)
        if kind == "halfspaces":
            return ConeSpec.halfspaces(table["normals"])
        if kind == "generators":
            return ConeSpec.from_generators(table["generators"])
        if kind == "second_order":
            return ConeSpec.second_order(table["axis"], table["aperture"])
        if kind == "psd":
            return ConeSpec.psd(matrix_size_from_chart_dim(dim))
    except KeyError as error:
        raise ConfigError(f"Cone of type {kind!r} needs key {error}.") from error
    except ArgumentError as error:
        raise ConfigError(f"Invalid cone: {error}") from error
    raise ConfigError(f"Unknown cone type {kind!r}.")


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = DEFAULT_RTOL
    atol: float = DEFAULT_ATOL
    max_step: float = float("inf")
    escape_radius: float = DEFAULT_ESCAPE_RADIUS

    def to_options(self) -> IntegratorOptions:
        return IntegratorOptions(rtol=self.rtol, atol=self.atol, max_step=self.max_step,
                                 escape_radius=self.escape_radius)


@dataclass(frozen=True)
class OrderConfig:
    max_steps: int = SEARCH_MAX_STEPS
    step: Optional[float] = None
    target_radius: float = SEARCH_TARGET_RADIUS

    def to_budget(self) -> SearchBudget:
        return SearchBudget(self.max_steps, self.target_radius, self.step)


@dataclass(frozen=True)
class OmegaConfig:
    t_max: float = OMEGA_T_MAX
    eps_conv: float = EPS_CONV
    recurrence_tol: float = RECURRENCE_TOL
    window: float = OMEGA_WINDOW
    n_tail: int = OMEGA_N_TAIL

    def to_budget(self) -> OmegaBudget:
        return OmegaBudget(self.t_max, self.eps_conv, self.recurrence_tol, self.window,
                           self.n_tail)


@dataclass(frozen=True)
class CensusConfig:
    n_lines: int = DEFAULT_N_LINES
    n_points: int = DEFAULT_N_POINTS
    refinement_levels: Tuple[int, ...] = REFINEMENT_LEVELS
    refinement_stride: int = REFINEMENT_STRIDE
    mc_samples: Optional[int] = None


@dataclass(frozen=True)
class SuiteConfig:
    properties: Tuple[str, ...] = PROPERTIES
    n_pairs: int = 50
    t_grid: Tuple[float, ...] = DEFAULT_T_GRID


@dataclass(frozen=True)
class PointsConfig:
    x: Optional[List[float]] = None
    y: Optional[List[float]] = None


@dataclass(frozen=True)
class DPConfig:
    t_grid: Tuple[float, ...] = (0.1, 1.0, 10.0)
    n_rays: Optional[int] = None


@dataclass(frozen=True)
class TrackingConfig:
    uri: Optional[str] = None
    experiment: str = "diffpos"


@dataclass(frozen=True)
class RunConfig:
    """Validated run configuration; CLI flags are applied with :meth:`with_overrides`."""
    system: SystemConfig
    region: Optional[List[List[float]]] = None
    seed: Optional[int] = None
    output_dir: str = "diffpos-output"
    threads: int = 1
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    order: OrderConfig = field(default_factory=OrderConfig)
    omega: OmegaConfig = field(default_factory=OmegaConfig)
    census: CensusConfig = field(default_factory=CensusConfig)
    suite: SuiteConfig = field(default_factory=SuiteConfig)
    points: PointsConfig = field(default_factory=PointsConfig)
    dp: DPConfig = field(default_factory=DPConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)

    def build_system(self) -> SystemSpec:
        region = np.asarray(self.region, dtype=float) if self.region is not None else None
        return self.system.build(region)

    def region_for(self, sys: SystemSpec) -> np.ndarray:
        try:
            return as_region(self.region if self.region is not None else sys.region, sys.dim)
        except ArgumentError as error:
            raise ConfigError(f"region: {error}") from error

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None,
                       threads: Optional[int] = None,
                       resolution: Optional[Tuple[int, int]] = None,
                       budget_t: Optional[float] = None) -> "RunConfig":
        config = self
        if seed is not None:
            config = replace(config, seed=seed)
        if output_dir is not None:
            config = replace(config, output_dir=output_dir)
        if threads is not None:
            config = replace(config, threads=threads)
        if resolution is not None:
            config = replace(config, census=replace(config.census, n_lines=resolution[0],
                                                    n_points=resolution[1]))
        if budget_t is not None:
            config = replace(config, omega=replace(config.omega, t_max=budget_t))
        config.validate()
        return config

    def validate(self) -> None:
        """Check tolerances, budgets, region and seed.

        Raises:
            ConfigError: naming the offending key.
        """
        if self.seed is None:
            raise ConfigError("seed: a seed is required (config key or --seed).")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed: must be a non-negative integer, got {self.seed!r}.")
        if self.threads == 0 or not isinstance(self.threads, int):
            raise ConfigError(f"threads: must be a non-zero integer, got {self.threads!r}.")
        checks = [("integrator", self.integrator.to_options), ("order", self.order.to_budget),
                  ("omega", self.omega.to_budget)]
        for key, build in checks:
            try:
                build()
            except (ArgumentError, TypeError) as error:
                raise ConfigError(f"{key}: {error}") from error
        census = self.census
        if census.n_lines < 1 or census.n_points < 2:
            raise ConfigError("census: needs n_lines >= 1 and n_points >= 2.")
        if not census.refinement_levels or min(census.refinement_levels) < 1 \
                or census.refinement_stride < 1:
            raise ConfigError("census: refinement levels and stride must be >= 1.")
        unknown = sorted(set(self.suite.properties) - set(PROPERTIES))
        if unknown:
            raise ConfigError(f"suite.properties: unknown {unknown}.")
        if self.suite.n_pairs < 1 or not self.suite.t_grid or min(self.suite.t_grid) <= 0:
            raise ConfigError("suite: needs n_pairs >= 1 and positive t_grid values.")
        if self.region is not None:
            box = np.asarray(self.region, dtype=float)
            if box.ndim != 2 or box.shape[1] != 2 or not np.all(np.isfinite(box)) \
                    or np.any(box[:, 1] <= box[:, 0]):
                raise ConfigError("region: must be rows of finite (low, high) with low < high.")


def _section(cls: Any, data: Any, key: str) -> Any:
    if data is None:
        return cls()
    if not isinstance(data, Mapping):
        raise ConfigError(f"{key}: expected a table, got {type(data).__name__}.")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{key}: unknown keys {unknown}.")
    values = {name: tuple(value) if isinstance(value, list) and name in
              ("refinement_levels", "properties", "t_grid") else value
              for name, value in data.items()}
    try:
        return cls(**values)
    except (TypeError, ArgumentError) as error:
        raise ConfigError(f"{key}: {error}") from error


_SECTIONS = {"integrator": IntegratorConfig, "order": OrderConfig, "omega": OmegaConfig,
             "census": CensusConfig, "suite": SuiteConfig, "points": PointsConfig,
             "dp": DPConfig, "tracking": TrackingConfig}
_TOP_LEVEL = {"system", "region", "seed", "output_dir", "threads", *_SECTIONS}


def config_from_dict(data: Mapping[str, Any]) -> RunConfig:
    """Build a :obj:`RunConfig` from parsed YAML; the seed may still be missing.

    Raises:
        ConfigError: for unknown keys, malformed sections or a missing system.
    """
    if not isinstance(data, Mapping):
        raise ConfigError("Configuration must be a table.")
    unknown = sorted(set(data) - _TOP_LEVEL)
    if unknown:
        raise ConfigError(f"Unknown configuration keys {unknown}.")
    system = _section(SystemConfig, data.get("system"), "system")
    if system.name is None and system.variables is None:
        raise ConfigError("system: needs a built-in name or inline variables and equations.")
    sections = {key: _section(cls, data.get(key), key) for key, cls in _SECTIONS.items()}
    return RunConfig(system=system, region=data.get("region"), seed=data.get("seed"),
                     output_dir=str(data.get("output_dir", "diffpos-output")),
                     threads=data.get("threads", 1), **sections)


def load_config(path: str) -> RunConfig:
    """Load a YAML configuration file (local or s3)."""
    try:
        data = yaml.safe_load(read_text(path))
    except yaml.YAMLError as error:
        raise ConfigError(f"Cannot parse {path!r}: {error}") from error
    logger.debug("Loaded configuration from %s", path)
    return config_from_dict(data or {})


def parse_resolution(text: str) -> Tuple[int, int]:
    """Parse ``<lines>x<points>``.

    Examples:
        >>> parse_resolution("101x201")
        (101, 201)
    """
    try:
        lines, points = (int(part) for part in text.lower().split("x"))
    except ValueError as error:
        raise ConfigError(f"Resolution {text!r} is not of the form <lines>x<points>.") from error
    return lines, points


def point_coords(values: Optional[Sequence[float]], key: str) -> List[float]:
    if values is None:
        raise ConfigError(f"points.{key}: required for this subcommand.")
    return [float(v) for v in values]
