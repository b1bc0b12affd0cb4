import json

import numpy as np
import pytest
from pydantic import ValidationError

from metrics.report import MeasureConfig
from models.params import Attachment, GenParams
from utils.config import (
    SCHEMA_VERSION,
    TOOL_NAME,
    ConfigError,
    load_config_file,
    parse_param_overrides,
    provenance,
    provenance_header,
    resolve,
    write_json,
)


@pytest.fixture()
def env_file(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("# generator\nT=300\nP=0.4\nATTACHMENT=papa\nATTRIBUTE_TYPES=School,City\n")
    return path


def test_load_config_file(env_file):
    values = load_config_file(str(env_file))
    assert values["T"] == "300"
    assert load_config_file(None) == {}
    with pytest.raises(ConfigError):
        load_config_file(str(env_file.parent / "missing.env"))


def test_config_file_ignores_the_process_environment(env_file, monkeypatch):
    monkeypatch.setenv("SEED", "5")
    monkeypatch.setenv("T", "999")
    assert load_config_file(str(env_file)) == {
        "T": "300", "P": "0.4", "ATTACHMENT": "papa", "ATTRIBUTE_TYPES": "School,City",
    }


def test_parse_param_overrides():
    assert parse_param_overrides(["T=10", " seed = 3 "]) == {"T": "10", "seed": "3"}
    assert parse_param_overrides(None) == {}
    with pytest.raises(ConfigError):
        parse_param_overrides(["T"])


def test_file_values_are_case_insensitive(env_file):
    params = resolve(GenParams, load_config_file(str(env_file)))
    assert params.T == 300
    assert params.p == pytest.approx(0.4)
    assert params.attachment == Attachment.PAPA
    assert tuple(params.attribute_types) == ("School", "City")


def test_overrides_win_and_none_is_ignored(env_file):
    params = resolve(GenParams, load_config_file(str(env_file)), {"T": "20", "seed": None})
    assert params.T == 20
    assert params.seed == GenParams().seed


def test_unknown_keys():
    with pytest.raises(ConfigError, match="unknown GenParams setting"):
        resolve(GenParams, {"colour": "blue"})
    assert resolve(GenParams, {"colour": "blue"}, strict=False) == GenParams()


def test_invalid_values_raise_validation_error():
    with pytest.raises(ValidationError):
        resolve(GenParams, {"p": "2"})
    with pytest.raises(ConfigError):
        resolve(MeasureConfig, {"metrics": "[not json"})


def test_json_and_list_values():
    config = resolve(MeasureConfig, {"metrics": '["reciprocity"]', "source_sample": "none"})
    assert config.metrics == ["reciprocity"]
    assert config.source_sample is None
    assert resolve(MeasureConfig, {"metrics": "reciprocity, knn_social"}).metrics == ["reciprocity", "knn_social"]


def test_provenance_and_header():
    prov = provenance(GenParams(T=5).model_dump(mode="json"), seed=np.int64(9))
    assert prov["tool"] == TOOL_NAME
    assert prov["schema_version"] == SCHEMA_VERSION
    assert prov["seed"] == 9
    header = provenance_header(prov)
    assert list(header) == sorted(header)
    assert json.loads(header["config"])["T"] == 5


def test_write_json_is_stable(tmp_path):
    path = write_json({"b": np.float64(1.5), "a": [np.int32(2)], "c": float("nan")}, tmp_path / "x" / "out.json")
    text = path.read_text()
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [2], "b": 1.5, "c": None}
    assert text.index('"a"') < text.index('"b"')
