import json

import numpy as np
import pytest
import yaml

from src.exceptions.errors import ConfigurationError, InvalidInputError
from src.schemas.config import ExperimentConfig, ParamsSchema


def config_data(kind: str = "cone-count", **params) -> dict:
    a = np.diag([np.exp(2.0), np.exp(-2.0)])
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    k = np.array([[c, -s], [s, c]])
    return {
        "group": {
            "factors": [{"dim": 2}],
            "generators": [
                {"label": "a", "matrices": [a.tolist()]},
                {"label": "b", "matrices": [(k @ a @ k.T).tolist()]},
            ],
        },
        "experiment": {"kind": kind, "params": params},
        "seed": 5,
    }


def test_json_and_yaml_load_the_same_config(tmp_path):
    data = config_data(depth=4, direction=[1.0, -1.0], aperture=0.3)
    (tmp_path / "c.json").write_text(json.dumps(data))
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(data))
    from_json = ExperimentConfig.load(tmp_path / "c.json")
    from_yaml = ExperimentConfig.load(tmp_path / "c.yaml")
    assert from_json == from_yaml
    assert from_json.experiment.params.depth == 4
    assert from_json.seed == 5


def test_generator_system_from_config():
    config = ExperimentConfig.parse(config_data())
    gens = config.group.generator_system()
    assert gens.p == 2
    assert gens.labels == ("a", "b")
    assert gens.descriptor.factor_dims == (2,)
    assert gens.descriptor.projective == (True,)


def test_params_defaults():
    params = ParamsSchema()
    assert params.depth == 8
    assert params.resolution == 12
    assert params.norm == "trace"
    assert params.s == 1.0
    assert params.samples == 200
    assert params.plot and params.compare_growth and params.conformality
    assert params.omega_h.center is None


@pytest.mark.parametrize("name, text", [("missing.json", None), ("broken.json", "{"), ("broken.yaml", "a: [")])
def test_unreadable_files(tmp_path, name, text):
    path = tmp_path / name
    if text is not None:
        path.write_text(text)
    with pytest.raises(ConfigurationError):
        ExperimentConfig.load(path)


def test_unknown_kind():
    with pytest.raises(ConfigurationError, match="experiment.kind"):
        ExperimentConfig.parse(config_data(kind="orbit-dance"))


@pytest.mark.parametrize("kind", ["bisector-count", "symmetric-count"])
def test_symmetric_experiments_need_a_pair(kind):
    with pytest.raises(ConfigurationError, match="symmetric pair"):
        ExperimentConfig.parse(config_data(kind=kind))
    data = config_data(kind=kind)
    data["pair"] = {"kind": "riemannian"}
    assert ExperimentConfig.parse(data).pair.kind == "riemannian"


@pytest.mark.parametrize(
    "params",
    [
        {"window": [5.0, 2.0]},
        {"window": [0.0, 2.0]},
        {"norm": "adapted", "theta": [1.0, -1.0]},
        {"depth": -1},
        {"aperture": 0.0},
        {"s": 0.0},
        {"dedup": "frobenius"},
    ],
)
def test_invalid_params(params):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.parse(config_data(**params))


def test_generator_shape_must_match_the_factors():
    data = config_data()
    data["group"]["factors"] = [{"dim": 3}]
    with pytest.raises(ConfigurationError, match="matrix sizes"):
        ExperimentConfig.parse(data)


def test_generator_matrices_must_be_square_and_finite():
    data = config_data()
    data["group"]["generators"][0]["matrices"] = [[[1.0, 0.0]]]
    with pytest.raises(ConfigurationError, match="square"):
        ExperimentConfig.parse(data)
    data = config_data()
    data["group"]["generators"][0]["matrices"][0][0][0] = float("inf")
    with pytest.raises(ConfigurationError, match="finite"):
        ExperimentConfig.parse(data)


def test_one_generator_is_not_enough():
    data = config_data()
    data["group"]["generators"] = data["group"]["generators"][:1]
    with pytest.raises(ConfigurationError):
        ExperimentConfig.parse(data)


def test_negative_seed():
    data = config_data()
    data["seed"] = -1
    with pytest.raises(ConfigurationError, match="seed"):
        ExperimentConfig.parse(data)


def test_determinant_is_checked_when_building_generators():
    data = config_data()
    data["group"]["generators"][0]["matrices"] = [[[2.0, 0.0], [0.0, 1.0]]]
    config = ExperimentConfig.parse(data)
    with pytest.raises(InvalidInputError):
        config.group.generator_system()
    assert config.group.generator_system(strict=False).p == 2
