"""Built-in systems, selectable by name.

Every builder returns a :obj:`~diffpos.dynamics.SystemSpec` with its manifold,
cone field, analytic Jacobian (when cheap) and a default region.
"""
import logging
from typing import Callable, Dict, List, Mapping, Optional, Sequence

import numpy as np

from .cones import ConeFieldSpec, ConeSpec
from .constants import ManifoldKind
from .dynamics import DeclaredProperties, SystemSpec
from .exceptions import ArgumentError, ConfigError
from .expressions import compile_field
from .geometry import (ManifoldSpec, chart_from_sym, matrix_size_from_chart_dim, spd_log,
                       spd_power, sym_from_chart)

logger = logging.getLogger(__name__)

SystemBuilder = Callable[..., SystemSpec]
SYSTEM_BUILDERS: Dict[str, SystemBuilder] = {}


def register_system(name: str) -> Callable[[SystemBuilder], SystemBuilder]:
    def decorator(builder: SystemBuilder) -> SystemBuilder:
        SYSTEM_BUILDERS[name] = builder
        return builder
    return decorator


def list_systems() -> List[str]:
    return sorted(SYSTEM_BUILDERS)


def get_system(name: str, **parameters) -> SystemSpec:
    """Build a registered system.

    Raises:
        ConfigError: for unknown names or parameters the builder rejects.

    Examples:
        >>> get_system("decay").name
        'decay'
    """
    try:
        builder = SYSTEM_BUILDERS[name]
    except KeyError:
        raise ConfigError(f"Unknown system {name!r}; available: {', '.join(list_systems())}.")
    try:
        return builder(**parameters)
    except (TypeError, ArgumentError) as error:
        raise ConfigError(f"Invalid parameters for system {name!r}: {error}") from error


def is_irreducible_metzler(matrix: np.ndarray) -> bool:
    """Nonnegative off-diagonal entries and a strongly connected influence graph."""
    matrix = np.asarray(matrix, dtype=float)
    off_diagonal = matrix - np.diag(np.diag(matrix))
    if np.any(off_diagonal < 0):
        return False
    n = matrix.shape[0]
    reach = np.linalg.matrix_power(np.eye(n) + (off_diagonal > 0), max(n - 1, 1))
    return bool(np.all(reach > 0))


def _box(n: int, low: float, high: float) -> np.ndarray:
    return np.tile([low, high], (n, 1)).astype(float)


def _spd_box(n: int) -> np.ndarray:
    low = chart_from_sym(0.4 * np.eye(n) - 0.3 * (1 - np.eye(n)))
    high = chart_from_sym(2.5 * np.eye(n) + 0.3 * (1 - np.eye(n)))
    return np.column_stack([low, high])


@register_system("decay")
def decay(n: int = 1) -> SystemSpec:
    """:math:`x' = -x` with the orthant cone field."""
    return SystemSpec(name="decay", manifold=ManifoldSpec.euclidean(n),
                      cone_field=ConeFieldSpec.constant(ConeSpec.orthant(n)),
                      f=lambda x: -x, jacobian=lambda x: -np.eye(n),
                      claims=DeclaredProperties(claims_dp=True, claims_h1=True, claims_h2=True,
                                                claims_h3=True),
                      region=_box(n, -2.0, 2.0))


@register_system("linear_metzler")
def linear_metzler(A: Optional[Sequence[Sequence[float]]] = None) -> SystemSpec:
    """:math:`x' = Ax` with the orthant cone field, ``A`` defaulting to ``[[-2, 1], [1, -2]]``."""
    matrix = np.array(A if A is not None else [[-2.0, 1.0], [1.0, -2.0]], dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ArgumentError("A must be a square matrix.")
    n = matrix.shape[0]
    strongly = is_irreducible_metzler(matrix)
    metzler = bool(np.all(matrix - np.diag(np.diag(matrix)) >= 0))
    return SystemSpec(name="linear_metzler", manifold=ManifoldSpec.euclidean(n),
                      cone_field=ConeFieldSpec.constant(ConeSpec.orthant(n)),
                      f=lambda x: matrix @ x, jacobian=lambda x: matrix,
                      claims=DeclaredProperties(claims_dp=metzler, claims_sdp=strongly,
                                                claims_h1=True, claims_h2=True, claims_h3=True),
                      region=_box(n, -2.0, 2.0))


@register_system("rotation")
def rotation(omega: float = 1.0) -> SystemSpec:
    """Harmonic oscillator :math:`(x, y)' = \\omega (-y, x)`; not differentially positive."""
    generator = np.array([[0.0, -omega], [omega, 0.0]])
    return SystemSpec(name="rotation", manifold=ManifoldSpec.euclidean(2),
                      cone_field=ConeFieldSpec.constant(ConeSpec.orthant(2)),
                      f=lambda x: generator @ x, jacobian=lambda x: generator,
                      region=_box(2, -2.0, 2.0))


@register_system("bistable_tanh")
def bistable_tanh(gain: float = 2.0) -> SystemSpec:
    """:math:`x' = -x + \\tanh(g y)`, :math:`y' = -y + \\tanh(g x)`.

    For ``g > 1`` the stable equilibria are :math:`\\pm(x^*, x^*)` with
    :math:`x^* = \\tanh(g x^*)` and the origin is a saddle whose stable manifold
    is the anti-diagonal.
    """
    def f(x: np.ndarray) -> np.ndarray:
        return np.array([-x[0] + np.tanh(gain * x[1]), -x[1] + np.tanh(gain * x[0])])

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.array([[-1.0, gain / np.cosh(gain * x[1]) ** 2],
                         [gain / np.cosh(gain * x[0]) ** 2, -1.0]])

    strongly = gain > 0
    return SystemSpec(name="bistable_tanh", manifold=ManifoldSpec.euclidean(2),
                      cone_field=ConeFieldSpec.constant(ConeSpec.orthant(2)),
                      f=f, jacobian=jacobian,
                      claims=DeclaredProperties(claims_dp=strongly, claims_sdp=strongly,
                                                claims_h1=True, claims_h2=True, claims_h3=True),
                      region=_box(2, -2.0, 2.0))


@register_system("tristable_tanh")
def tristable_tanh(gain: float = 4.0, offset: float = 1.0) -> SystemSpec:
    """:math:`x' = -x + h(y)`, :math:`y' = -y + h(x)`, :math:`h(s) = \\tanh(g(s-c)) + \\tanh(g(s+c))`.

    With the defaults the equilibria lie on the diagonal: three stable ones near
    0 and :math:`\\pm 2`, and two saddles near :math:`\\pm(1, 1)`.
    """
    def h(s: float) -> float:
        return np.tanh(gain * (s - offset)) + np.tanh(gain * (s + offset))

    def dh(s: float) -> float:
        return gain * (1.0 / np.cosh(gain * (s - offset)) ** 2
                       + 1.0 / np.cosh(gain * (s + offset)) ** 2)

    return SystemSpec(name="tristable_tanh", manifold=ManifoldSpec.euclidean(2),
                      cone_field=ConeFieldSpec.constant(ConeSpec.orthant(2)),
                      f=lambda x: np.array([-x[0] + h(x[1]), -x[1] + h(x[0])]),
                      jacobian=lambda x: np.array([[-1.0, dh(x[1])], [dh(x[0]), -1.0]]),
                      claims=DeclaredProperties(claims_dp=True, claims_sdp=True, claims_h1=True,
                                                claims_h2=True, claims_h3=True),
                      region=_box(2, -3.0, 3.0))


@register_system("coop_lotka_volterra")
def coop_lotka_volterra(r: Sequence[float] = (1.0, 1.0),
                        a: Sequence[Sequence[float]] = ((1.0, 0.5), (0.5, 1.0))) -> SystemSpec:
    """Mutualistic Lotka-Volterra :math:`x_i' = x_i (r_i - a_{ii} x_i + \\sum_{j \\ne i} a_{ij} x_j)`.

    ``a`` holds self-limitation on its diagonal and (nonnegative) mutualism off it.
    With the defaults the coexistence equilibrium is ``(2, 2)``.
    """
    rates = np.asarray(r, dtype=float)
    interaction = np.asarray(a, dtype=float)
    n = rates.size
    if interaction.shape != (n, n):
        raise ArgumentError("a must be an n x n matrix matching r.")
    signed = interaction - 2.0 * np.diag(np.diag(interaction))

    def f(x: np.ndarray) -> np.ndarray:
        return x * (rates + signed @ x)

    def jacobian(x: np.ndarray) -> np.ndarray:
        return np.diag(rates + signed @ x) + x[:, None] * signed

    return SystemSpec(name="coop_lotka_volterra", manifold=ManifoldSpec.euclidean(n),
                      cone_field=ConeFieldSpec.constant(ConeSpec.orthant(n)),
                      f=f, jacobian=jacobian,
                      claims=DeclaredProperties(claims_dp=True,
                                                claims_sdp=is_irreducible_metzler(signed),
                                                claims_h1=True, claims_h2=True, claims_h3=True),
                      region=_box(n, 0.1, 4.0))


@register_system("spd_geodesic_relax")
def spd_geodesic_relax(n: int = 2, rate: float = 1.0,
                       target: Optional[Sequence[Sequence[float]]] = None) -> SystemSpec:
    """Relaxation of an SPD matrix toward ``P`` along affine-invariant geodesics.

    :math:`X' = r X^{1/2} \\log(X^{-1/2} P X^{-1/2}) X^{1/2}`, whose flow is
    :math:`P^{1/2} (P^{-1/2} X_0 P^{-1/2})^{e^{-rt}} P^{1/2}`. The cone field is the
    PSD cone transported by congruence from ``P``, i.e. the Loewner order.
    """
    manifold = ManifoldSpec.spd(n)
    goal = np.array(target if target is not None else np.eye(n), dtype=float)
    base = manifold.point_from_matrix(goal)

    def f(coords: np.ndarray) -> np.ndarray:
        root = spd_power(sym_from_chart(coords, n), 0.5)
        inv_root = spd_power(sym_from_chart(coords, n), -0.5)
        log_term = spd_log(0.5 * (inv_root @ goal @ inv_root + (inv_root @ goal @ inv_root).T))
        velocity = rate * root @ log_term @ root
        return chart_from_sym(0.5 * (velocity + velocity.T))

    return SystemSpec(name="spd_geodesic_relax", manifold=manifold,
                      cone_field=ConeFieldSpec.transported(base, ConeSpec.psd(n)), f=f,
                      claims=DeclaredProperties(claims_dp=True, claims_h1=True, claims_h2=True,
                                                claims_h3=True),
                      region=_spd_box(n))


def inline_system(name: str, variables: Sequence[str], equations: Sequence[str],
                  parameters: Optional[Mapping[str, float]] = None,
                  cone: Optional[ConeSpec] = None,
                  region: Optional[np.ndarray] = None,
                  manifold: str = "euclidean",
                  base: Optional[Sequence[Sequence[float]]] = None) -> SystemSpec:
    """System from expression strings.

    On the euclidean manifold the cone field is constant (orthant by default).
    On ``spd`` the variables are the upper-triangular entries of an ``n x n``
    matrix and the cone (PSD by default) is transported by congruence from
    ``base``, the identity unless given.
    """
    f, jacobian = compile_field(variables, equations, parameters or {})
    n = len(variables)
    if manifold == ManifoldKind.EUCLIDEAN.value:
        cone = cone or ConeSpec.orthant(n)
        if cone.dim != n:
            raise ConfigError(f"Cone dimension {cone.dim} does not match {n} variables.")
        logger.debug("Compiled inline system %s with variables %s", name, list(variables))
        return SystemSpec(name=name, manifold=ManifoldSpec.euclidean(n),
                          cone_field=ConeFieldSpec.constant(cone), f=f, jacobian=jacobian,
                          region=region if region is not None else _box(n, -2.0, 2.0))
    if manifold != ManifoldKind.SPD.value:
        raise ConfigError(f"Inline systems live on the euclidean or spd manifold, "
                          f"not {manifold!r}.")
    try:
        size = matrix_size_from_chart_dim(n)
    except ArgumentError as error:
        raise ConfigError(f"SPD inline system: {error}") from error
    spd = ManifoldSpec.spd(size)
    cone = cone or ConeSpec.psd(size)
    if cone.dim != n:
        raise ConfigError(f"Cone dimension {cone.dim} does not match {n} variables.")
    base_matrix = np.eye(size) if base is None else np.array(base, dtype=float)
    if base_matrix.shape != (size, size) or not spd.contains_coords(chart_from_sym(base_matrix)):
        raise ConfigError(f"Cone base must be a {size}x{size} SPD matrix.")
    logger.debug("Compiled inline SPD(%d) system %s with variables %s", size, name,
                 list(variables))
    field = ConeFieldSpec.transported(spd.point_from_matrix(base_matrix), cone)
    return SystemSpec(name=name, manifold=spd, cone_field=field,
                      f=f, jacobian=jacobian,
                      region=region if region is not None else _spd_box(size))
