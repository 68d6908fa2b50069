import json

import numpy as np

from utils.json_utils import convert_numpy_to_builtin


def test_nested_numpy_values_become_builtins():
    payload = {"window": (np.float64(15.0), 20.0), "dofs": np.array([2, 3]),
               "checks": [{"value": np.float32(0.5), "passed": np.bool_(True)}]}
    out = convert_numpy_to_builtin(payload)
    assert out == {"window": [15.0, 20.0], "dofs": [2, 3], "checks": [{"value": 0.5, "passed": True}]}
    assert type(out["dofs"][0]) is int
    json.dumps(out)


def test_non_finite_floats_become_null():
    out = convert_numpy_to_builtin({"a": float("nan"), "b": np.array([np.inf, 1.0])})
    assert out == {"a": None, "b": [None, 1.0]}
    assert json.dumps(out, allow_nan=False) == '{"a": null, "b": [null, 1.0]}'
