import json
from dataclasses import asdict

import pytest

from liquidstate.config import PROVENANCE, REPORTED, REPORTED_VALUES, RunConfig


def test_reported_defaults_hold():
    doc = RunConfig().to_dict()
    for (section, key), value in REPORTED_VALUES.items():
        assert doc[section][key] == value, (section, key)
        assert PROVENANCE[section][key] == REPORTED


def test_every_field_has_provenance():
    doc = RunConfig().to_dict()
    for section, values in doc.items():
        assert set(values) == set(PROVENANCE[section]), section
        for key, tag in PROVENANCE[section].items():
            assert tag == REPORTED or tag.startswith("chosen: ")


def test_load_and_override(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"topology": {"grid_dims": [10, 5, 10], "n_excitatory": 400, "n_inhibitory": 100},
                                "encoding": {"n": 1}}))
    cfg = RunConfig.load(path)
    assert cfg.topology.grid_dims == (10, 5, 10)
    assert cfg.encoding.n == 1
    assert cfg.override("encoding", n=None) is cfg
    assert cfg.override("encoding", n=3).encoding.n == 3
    assert RunConfig.from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


@pytest.mark.parametrize("doc", [{"encoder": {}}, {"encoding": {"amplitude": 30}}, {"neuron": {"tau": 3}}])
def test_unknown_keys_rejected(doc):
    with pytest.raises(ValueError, match="unknown"):
        RunConfig.from_dict(doc)


def test_invalid_values_rejected():
    with pytest.raises(ValueError):
        RunConfig.from_dict({"encoding": {"A": 1}}).encoding.encoding()
    with pytest.raises(ValueError):
        RunConfig.from_dict({"neuron": {"tau_m": -1}})


def test_neuron_section_matches_dataclass():
    assert RunConfig().to_dict()["neuron"] == asdict(RunConfig().neuron)
