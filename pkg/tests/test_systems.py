import numpy as np
import pytest
from scipy.optimize import brentq

from diffpos.exceptions import ConfigError
from diffpos.geometry import sym_from_chart
from diffpos.systems import get_system, list_systems, is_irreducible_metzler

BUILT_IN = ["bistable_tanh", "coop_lotka_volterra", "decay", "linear_metzler", "rotation",
            "spd_geodesic_relax", "tristable_tanh"]


def test_list_systems():
    assert list_systems() == BUILT_IN


@pytest.mark.parametrize("name", BUILT_IN)
def test_analytic_jacobian_matches_finite_differences(name):
    system = get_system(name)
    rng = np.random.default_rng(1)
    region = system.region
    for _ in range(5):
        coords = rng.uniform(region[:, 0], region[:, 1])
        if system.manifold.kind.value == "spd":
            coords = system.manifold.point_from_matrix(
                sym_from_chart(coords, system.manifold.matrix_size) @
                sym_from_chart(coords, system.manifold.matrix_size).T
                + np.eye(system.manifold.matrix_size)).coords
        h = 1e-6
        numeric = np.column_stack([(system.vector_field(coords + h * e)
                                    - system.vector_field(coords - h * e)) / (2 * h)
                                   for e in np.eye(system.dim)])
        assert np.allclose(system.jacobian_at(coords), numeric, atol=1e-5)


@pytest.mark.parametrize("name, point",
                         [("decay", [0.0]),
                          ("linear_metzler", [0.0, 0.0]),
                          ("rotation", [0.0, 0.0]),
                          ("bistable_tanh", [0.0, 0.0]),
                          ("coop_lotka_volterra", [2.0, 2.0]),
                          ("spd_geodesic_relax", [1.0, 0.0, 1.0])])
def test_known_equilibria(name, point):
    system = get_system(name)
    assert np.allclose(system.vector_field(np.array(point)), 0.0, atol=1e-12)


def test_bistable_nonzero_equilibria():
    system = get_system("bistable_tanh", gain=2.0)
    x_star = brentq(lambda s: np.tanh(2.0 * s) - s, 0.5, 1.5, xtol=1e-15)
    for sign in (1.0, -1.0):
        assert np.allclose(system.vector_field(sign * np.array([x_star, x_star])), 0.0,
                           atol=1e-10)


@pytest.mark.parametrize("matrix, expected_result",
                         [([[-2, 1], [1, -2]], True),
                          ([[-1, 0], [0, -1]], False),
                          ([[-1, 1], [0, -1]], False),
                          ([[-1, -1], [1, -1]], False)])
def test_is_irreducible_metzler(matrix, expected_result):
    assert is_irreducible_metzler(np.array(matrix)) is expected_result


def test_claims_follow_metzler_structure():
    assert get_system("linear_metzler").claims.claims_sdp
    diagonal = get_system("linear_metzler", A=[[-1.0, 0.0], [0.0, -1.0]])
    assert diagonal.claims.claims_dp and not diagonal.claims.claims_sdp


@pytest.mark.parametrize("name, parameters",
                         [("lorenz", {}),
                          ("bistable_tanh", {"gain": 2.0, "colour": "red"}),
                          ("linear_metzler", {"A": [1.0, 2.0]})])
def test_get_system_errors(name, parameters):
    with pytest.raises(ConfigError):
        get_system(name, **parameters)
