import json

import numpy as np
import pytest

from bogoexp.errors import ConfigError
from bogoexp.io import FIXTURES, dumps, load_model, model_from_doc, model_hash, model_to_doc
from bogoexp.model import random_positive_model


def test_model_document_roundtrip():
    model = random_positive_model(3, np.random.default_rng(4))
    back = model_from_doc(json.loads(json.dumps(model_to_doc(model))))
    assert np.array_equal(back.T, model.T) and np.array_equal(back.V, model.V)
    assert model_hash(back) == model_hash(model)


def test_torus_document_roundtrip():
    model = load_model("torus")
    doc = model_to_doc(model)
    assert doc["torus"]["Kcut"] == 1
    assert np.array_equal(model_from_doc(doc).V, model.V)


def test_fixtures_load():
    for name in FIXTURES:
        assert load_model(name).M == 3
    assert np.max(np.abs(load_model("free").V)) == 0


def test_inline_and_file_sources(tmp_path):
    doc = model_to_doc(random_positive_model(2, np.random.default_rng(1)))
    text = json.dumps(doc)
    assert load_model(text).M == 2
    path = tmp_path / "m.json"
    path.write_text(text)
    assert load_model(str(path)).M == 2


@pytest.mark.parametrize("bad", ["nope.json", "{not json", '{"M": 2}', '{"torus": {"d": 1}}'])
def test_bad_sources(bad):
    with pytest.raises(ConfigError):
        load_model(bad)


def test_dumps_is_deterministic():
    obj = {"b": 0.1 + 0.2, "a": [1j, np.float64(2.5)], "c": np.arange(3)}
    assert dumps(obj) == dumps(obj)
    assert json.loads(dumps(obj))["a"][0] == [0.0, 1.0]
