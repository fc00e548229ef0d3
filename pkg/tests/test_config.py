import json

import numpy as np
import pytest

from margulis import config
from margulis.errors import ConfigError, NotHyperbolic
from margulis.minkowski import flow_matrix


def test_bundled_standard(standard_cfg):
    assert standard_cfg.rank == 2 and standard_cfg.certified
    assert standard_cfg.path_names == ["v_scale", "rotate_a", "rotate_b"]


def test_roundtrip(standard_cfg):
    again = config.loads(standard_cfg.dumps())
    for a, b in zip(again.generators, standard_cfg.generators):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
    for a, b in zip(again.translations, standard_cfg.translations):
        np.testing.assert_array_equal(a, b)
    assert again.to_dict() == standard_cfg.to_dict()


def base():
    return {
        "rank": 2,
        "generators": [{"axis": [-np.pi / 2, np.pi / 2], "length": 4}, {"axis": [np.pi, 0], "length": 4}],
        "translations": [[1, 0, 0], [0, 1, 0]],
    }


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.pop("rank"),
        lambda d: d.update(rank=3),
        lambda d: d.update(schema_version=99),
        lambda d: d["translations"].pop(),
        lambda d: d["translations"].__setitem__(0, [1, 2]),
        lambda d: d["generators"].__setitem__(0, {"matrix": np.eye(3).ravel().tolist()[:8]}),
        lambda d: d["generators"].__setitem__(0, {"matrix": (2 * np.eye(3)).ravel().tolist()}),
        lambda d: d["generators"].__setitem__(0, {"matrix": flow_matrix(2).ravel().tolist()}),
        lambda d: d["generators"].__setitem__(0, {"foo": 1}),
        lambda d: d.update(campaign=[1]),
        lambda d: d.update(paths=[{"linear_variation": [np.eye(3).ravel().tolist()] * 2, "translation_variation": [[0, 0, 0]] * 2}]),
    ],
)
def test_invalid_configs(mutate):
    d = base()
    mutate(d)
    with pytest.raises(ConfigError):
        config.from_dict(d)


def test_non_hyperbolic_generator():
    d = base()
    d["rank"] = 1
    d["generators"] = [{"matrix": np.eye(3).ravel().tolist()}]
    d["translations"] = [[0, 0, 0]]
    with pytest.raises(NotHyperbolic):
        config.from_dict(d)


def test_matrix_form_certifies(standard_cfg):
    d = standard_cfg.to_dict()
    assert config.from_dict(d).certified


def test_bad_json():
    with pytest.raises(ConfigError):
        config.loads("{")
    with pytest.raises(ConfigError):
        config.load("/nonexistent/config.json")


def test_tolerances(tmp_path, monkeypatch):
    tol = config.tolerances({"pressure.lambda_min": "1e-3"})
    assert tol["pressure.lambda_min"] == 1e-3
    with pytest.raises(ConfigError):
        config.tolerances({"nope": 1})
    f = tmp_path / "tol.json"
    f.write_text(json.dumps({"dcr.relative": 2e-5}))
    monkeypatch.setenv(config.ENV_TOLERANCE_FILE, str(f))
    assert config.tolerances()["dcr.relative"] == 2e-5
    monkeypatch.setenv(config.ENV_THREADS, "3")
    assert config.default_threads() == 3
    monkeypatch.setenv(config.ENV_THREADS, "x")
    with pytest.raises(ConfigError):
        config.default_threads()
