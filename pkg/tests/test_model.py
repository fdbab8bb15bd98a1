import copy
import json

import pytest

from gibbs1d.errors import ModelError
from gibbs1d.lattice import Interval, SpinConfig
from gibbs1d.model import ModelNotFoundError, load_model, model_from_document, shipped_model_path
from gibbs1d.potential import evaluate, nearest_neighbor_ising
from gibbs1d.transform import DetMap, SiteKernel

SHIPPED = ["exponential", "exponential_weak", "fuzzy_potts", "independent", "ising_nn",
           "power_law", "power_law_fit", "power_law_weak"]

BASE = {
    "alphabet": ["+", "-"],
    "terms": [{"family": "exponential-pair", "coupling": 1.0, "rate": 0.5}],
    "channel": {"type": "kernel", "target": ["+", "-"], "matrix": [[0.9, 0.1], [0.1, 0.9]]},
}


@pytest.mark.parametrize("name", SHIPPED)
def test_shipped_models_load(name):
    m = load_model(shipped_model_path(name))
    assert m.name == name
    assert "identity" in m.channels
    assert m.channel() is not None
    assert m.truncation().radius >= 1
    assert len(m.digest) == 64


def test_ising_document_matches_constructor():
    m = load_model(shipped_model_path("ising_nn"))
    ref = nearest_neighbor_ising(0.4)
    sigma = SpinConfig.from_symbols(ref.alphabet, Interval(0, 1), "+-")
    assert evaluate(m.potential, Interval(0, 1), sigma) == evaluate(ref, Interval(0, 1), sigma)
    assert isinstance(m.channel("flip01"), SiteKernel)


def test_fuzzy_potts_channel_is_a_map():
    m = load_model(shipped_model_path("fuzzy_potts"))
    assert isinstance(m.channel(), DetMap)
    assert m.potential.alphabet.size == 3


@pytest.mark.parametrize("where", ["top", "term", "channel"])
def test_unknown_fields_rejected(where):
    doc = copy.deepcopy(BASE)
    {"top": doc, "term": doc["terms"][0], "channel": doc["channel"]}[where]["extra"] = 1
    with pytest.raises(ModelError, match="invalid model document"):
        model_from_document(doc)


def test_bad_values_rejected():
    doc = copy.deepcopy(BASE)
    doc["terms"][0]["rate"] = 0.0
    with pytest.raises(ModelError):
        model_from_document(doc)
    doc = copy.deepcopy(BASE)
    doc["alphabet"] = ["+"]
    with pytest.raises(ModelError):
        model_from_document(doc)


def test_incomplete_map_rejected():
    doc = {"alphabet": ["1", "2", "3"], "terms": [],
           "channel": {"type": "map", "target": ["a", "b"], "map": {"1": "a", "2": "b"}}}
    with pytest.raises(ModelError):
        model_from_document(doc)


def test_unknown_channel_name():
    m = model_from_document(copy.deepcopy(BASE))
    with pytest.raises(ModelError, match="unknown channel"):
        m.channel("nope")


def test_digest_is_order_independent():
    a = model_from_document(copy.deepcopy(BASE))
    b = model_from_document(json.loads(json.dumps(BASE, sort_keys=True)))
    assert a.digest == b.digest


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ModelNotFoundError, match="model not found"):
        load_model(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ModelError):
        load_model(bad)
