import json
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
import pytest

from diffpos.constants import SCHEMA_VERSION, OmegaClass
from diffpos.evaluation import PropertyReport
from diffpos.exceptions import ConfigError, SchemaError
from diffpos.geometry import ManifoldSpec
from diffpos.serialization import (TIMESTAMP_FIELD, to_jsonable, envelope, dumps, dump_report,
                                   load_report, reports_equal, write_csv)


class Colour(Enum):
    RED = "red"


@dataclass
class Holder:
    point: object
    values: np.ndarray
    colour: Colour


def test_to_jsonable_handles_numpy_enums_points_and_dataclasses():
    r2 = ManifoldSpec.euclidean(2)
    holder = Holder(r2.point([1.0, 2.0]), np.array([np.inf, 0.25]), Colour.RED)
    result = to_jsonable({"holder": holder, "flag": np.bool_(True), "count": np.int64(3),
                          "class": OmegaClass.CONVERGED_TO, "pair": (1, 2.5)})
    assert result == {"holder": {"point": [1.0, 2.0], "values": [None, 0.25], "colour": "red"},
                      "flag": True, "count": 3, "class": "converged_to", "pair": [1, 2.5]}
    assert json.loads(json.dumps(result)) == result


def test_to_jsonable_prefers_to_dict():
    report = PropertyReport("monotonicity", 1, 1)
    assert to_jsonable(report)["passed"] == 1


def test_to_jsonable_rejects_unknown_types():
    with pytest.raises(TypeError):
        to_jsonable(object())


def test_envelope_fields():
    document = envelope("order", {"relation": "less"}, {"seed": 4})
    assert document["schema_version"] == SCHEMA_VERSION
    assert document["kind"] == "order"
    assert TIMESTAMP_FIELD in document
    assert document["config"] == {"seed": 4}


def test_dumps_round_trips_floats():
    value = 0.1 + 0.2
    document = json.loads(dumps({"x": value, "tiny": 5e-324}))
    assert document["x"] == value
    assert document["tiny"] == 5e-324


def test_dump_and_load_report(tmp_path):
    path = str(tmp_path / "suite.json")
    dump_report(path, "suite", {"properties": {"dichotomy": PropertyReport("dichotomy", 2, 2)}})
    document = load_report(path)
    assert document["kind"] == "suite"
    assert document["payload"]["properties"]["dichotomy"]["tested"] == 2


def test_load_report_rejects_other_schema(tmp_path):
    path = tmp_path / "old.json"
    path.write_text(json.dumps({"schema_version": "0", "kind": "suite", "payload": {}}))
    with pytest.raises(SchemaError):
        load_report(str(path))


def test_load_report_rejects_invalid_json(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_report(str(path))


def test_reports_equal_ignores_timestamp():
    first = envelope("census", {"fraction": 0.005})
    second = dict(first, **{TIMESTAMP_FIELD: "2000-01-01T00:00:00+00:00"})
    assert reports_equal(first, second)
    third = envelope("census", {"fraction": 0.006})
    assert not reports_equal(first, third)


def test_write_csv_has_header_and_rows(tmp_path):
    path = str(tmp_path / "census.csv")
    frame = pd.DataFrame({"line_index": [0, 0], "point_index": [0, 1],
                          "class": ["convergent", "saddle_convergent"]})
    write_csv(path, frame)
    lines = (tmp_path / "census.csv").read_text().splitlines()
    assert lines[0] == "line_index,point_index,class"
    assert len(lines) == 3
