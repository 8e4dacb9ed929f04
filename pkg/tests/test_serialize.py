import json

import numpy as np
import pytest

from gridid.errors import InvalidArgument
from gridid.gridsim import CircuitParams, grid_model
from gridid.response import FrequencyResponse, read_response_csv, write_response_csv
from gridid.statespace import DiscreteStateSpace
from gridid.sysid import ArxModel, load_model, model_from_dict, model_to_dict, save_model


def same(a, b, names):
    return all(np.array_equal(getattr(a, n), getattr(b, n)) for n in names)


def test_arx_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    m = ArxModel(2, 3, rng.normal(size=(2, 2, 2)), rng.normal(size=(3, 2, 2)), 2e-4,
                 np.eye(2) * 1e-5, nk=0, meta={"minimal_order": 4})
    path = save_model(m, tmp_path / "m.json", {"config_sha256": "ab", "seeds": [1, 2]})
    back = load_model(path)
    assert same(back, m, ("na", "nb", "A_coeffs", "B_coeffs", "dt", "residual_covariance"))
    assert back.nk == 0 and back.meta["minimal_order"] == 4
    assert json.loads(path.read_text())["provenance"]["seeds"] == [1, 2]


def test_state_space_round_trip():
    d = DiscreteStateSpace(np.diag([0.5, 0.1]), np.ones((2, 2)), np.eye(2), np.zeros((2, 2)), 1e-3,
                           meta={"singular_values": np.array([3.0, 1.0])})
    back = model_from_dict(json.loads(json.dumps(model_to_dict(d))))
    assert same(back, d, "ABCD") and back.dt == d.dt
    assert back.meta["singular_values"] == [3.0, 1.0]
    c = grid_model(CircuitParams())
    back = model_from_dict(json.loads(json.dumps(model_to_dict(c))))
    assert np.array_equal(back.A, c.A) and back.input_labels == c.input_labels


def test_unknown_type():
    with pytest.raises(InvalidArgument):
        model_from_dict({"type": "armax"})


def test_response_csv_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    fr = FrequencyResponse([1.0, 2.5, 1000.0], rng.normal(size=(3, 2, 2)) + 1j * rng.normal(size=(3, 2, 2)), "sweep")
    path = write_response_csv(fr, tmp_path / "z.csv")
    assert path.read_text().splitlines()[0] == "f_hz,re_dd,im_dd,re_dq,im_dq,re_qd,im_qd,re_qq,im_qq"
    back = read_response_csv(path, "sweep")
    assert np.array_equal(back.Z, fr.Z) and np.array_equal(back.freqs, fr.freqs)


def test_response_validation():
    with pytest.raises(InvalidArgument):
        FrequencyResponse([2.0, 1.0], np.zeros((2, 2, 2)), "arx")
    with pytest.raises(InvalidArgument):
        FrequencyResponse([1.0], np.zeros((2, 2, 2)), "arx")
