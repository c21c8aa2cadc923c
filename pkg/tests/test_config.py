import numpy as np
import pytest
import yaml

from diffpos.config import (RunConfig, SystemConfig, config_from_dict, load_config,
                            parse_resolution, point_coords)
from diffpos.constants import (EPS_CONV, ConeFieldVariant, ManifoldKind, OracleKind,
                               OrderRelation)
from diffpos.exceptions import ConfigError
from diffpos.order import compare

BISTABLE = {"system": {"name": "bistable_tanh", "parameters": {"gain": 2.0}},
            "region": [[-2, 2], [-2, 2]], "seed": 42, "output_dir": "runs/bistable",
            "census": {"n_lines": 11, "n_points": 21, "refinement_levels": [1, 2]},
            "suite": {"properties": ["monotonicity"], "t_grid": [0.5, 1.0]}}


def test_config_from_dict_builds_sections():
    config = config_from_dict(BISTABLE)
    config.validate()
    assert config.census.n_lines == 11
    assert config.census.refinement_levels == (1, 2)
    assert config.suite.properties == ("monotonicity",)
    assert config.omega.eps_conv == EPS_CONV
    system = config.build_system()
    assert system.name == "bistable_tanh"
    assert np.array_equal(config.region_for(system), [[-2.0, 2.0], [-2.0, 2.0]])


def test_load_config(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(BISTABLE))
    config = load_config(str(path))
    assert isinstance(config, RunConfig)
    assert config.seed == 42


def test_load_config_rejects_broken_yaml(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text("system: [unclosed")
    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize("data, key",
                         [({"system": {"name": "bistable_tanh"}, "seeed": 1}, "seeed"),
                          ({"system": {"name": "bistable_tanh", "colour": 1}}, "colour"),
                          ({"system": {}}, "system"),
                          ({"system": {"name": "bistable_tanh"}, "omega": [1, 2]}, "omega"),
                          ({"system": {"name": "bistable_tanh"}, "census": {"lines": 3}},
                           "lines")])
def test_config_from_dict_errors_name_the_key(data, key):
    with pytest.raises(ConfigError, match=key):
        config_from_dict(data)


@pytest.mark.parametrize("overrides, key",
                         [({"seed": None}, "seed"),
                          ({"seed": -1}, "seed"),
                          ({"threads": 0}, "threads"),
                          ({"region": [[1, -1], [-2, 2]]}, "region"),
                          ({"suite": {"properties": ["telepathy"]}}, "suite.properties"),
                          ({"integrator": {"rtol": -1.0}}, "integrator"),
                          ({"omega": {"eps_conv": 0.0}}, "omega"),
                          ({"census": {"n_lines": 0}}, "census")])
def test_validate_errors_name_the_key(overrides, key):
    data = dict(BISTABLE, **overrides)
    with pytest.raises(ConfigError, match=key):
        config_from_dict(data).validate()


def test_with_overrides_applies_flags():
    config = config_from_dict(dict(BISTABLE, seed=None))
    updated = config.with_overrides(seed=7, output_dir="s3://bucket/run", threads=4,
                                    resolution=(101, 201), budget_t=50.0)
    assert updated.seed == 7
    assert updated.output_dir == "s3://bucket/run"
    assert updated.threads == 4
    assert (updated.census.n_lines, updated.census.n_points) == (101, 201)
    assert updated.omega.t_max == 50.0
    assert config.seed is None


def test_with_overrides_requires_seed():
    with pytest.raises(ConfigError, match="seed"):
        config_from_dict(dict(BISTABLE, seed=None)).with_overrides()


def test_unknown_system_is_config_error():
    config = config_from_dict({"system": {"name": "lorenz"}, "seed": 1})
    with pytest.raises(ConfigError, match="lorenz"):
        config.build_system()


def test_inline_system_with_generator_cone():
    system = SystemConfig(name="toggle", variables=["x", "y"],
                          equations=["a / (1 + y^2) - x", "a / (1 + x^2) - y"],
                          parameters={"a": 3.0},
                          cone={"type": "generators", "generators": [[1, 0], [0, -1]]}).build()
    assert system.dim == 2
    assert np.allclose(system.f(np.array([0.0, 0.0])), [3.0, 3.0])
    assert np.allclose(system.jacobian_at(np.array([0.0, 0.0])), [[-1.0, 0.0], [0.0, -1.0]])


@pytest.mark.parametrize("cone", [{"type": "ice_cream"}, {"type": "halfspaces"}])
def test_inline_system_bad_cone(cone):
    with pytest.raises(ConfigError):
        SystemConfig(variables=["x"], equations=["-x"], cone=cone).build()


def test_inline_system_on_spd_manifold():
    config = config_from_dict({"system": {"name": "relax", "manifold": "spd",
                                          "variables": ["a", "b", "c"],
                                          "equations": ["1 - a", "-b", "1 - c"]},
                               "seed": 1})
    system = config.build_system()
    assert system.manifold.kind is ManifoldKind.SPD
    assert system.manifold.matrix_size == 2
    assert system.cone_field.variant is ConeFieldVariant.TRANSPORTED
    assert np.allclose(system.f(np.array([2.0, 0.0, 2.0])), [-1.0, 0.0, -1.0])
    verdict = compare(system, system.point([1.0, 0.0, 1.0]), system.point([2.0, 0.0, 2.0]))
    assert verdict.relation is OrderRelation.STRICTLY_LESS
    assert verdict.oracle is OracleKind.LOEWNER


def test_inline_spd_system_with_base_matrix():
    system = SystemConfig(manifold="spd", variables=["a", "b", "c"],
                          equations=["1 - a", "-b", "1 - c"],
                          cone={"base": [[2.0, 0.5], [0.5, 1.0]]}).build()
    assert np.allclose(system.cone_field.base_point.coords, [2.0, 0.5, 1.0])


@pytest.mark.parametrize("system", [
    {"manifold": "spd", "variables": ["a", "b"], "equations": ["-a", "-b"]},
    {"manifold": "spd", "variables": ["a", "b", "c"], "equations": ["-a", "-b", "-c"],
     "cone": {"base": [[1.0, 2.0], [2.0, 1.0]]}},
    {"manifold": "sphere", "variables": ["a"], "equations": ["-a"]},
])
def test_inline_system_bad_manifold(system):
    with pytest.raises(ConfigError):
        SystemConfig(**system).build()


@pytest.mark.parametrize("text, expected_result",
                         [("101x201", (101, 201)), ("11X21", (11, 21))])
def test_parse_resolution(text, expected_result):
    assert parse_resolution(text) == expected_result


@pytest.mark.parametrize("text", ["101", "axb", "1x2x3"])
def test_parse_resolution_rejects(text):
    with pytest.raises(ConfigError):
        parse_resolution(text)


def test_point_coords():
    assert point_coords([1, 2], "x") == [1.0, 2.0]
    with pytest.raises(ConfigError, match="points.y"):
        point_coords(None, "y")
