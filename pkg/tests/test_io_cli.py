import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from condmap.cli import main
from condmap.io import (FormatError, _unzigzag, _zigzag, decode_varints, dumps_bin, dumps_json,
                       encode_varints, loads_bin, loads_json)
from condmap.labels import label_process, sample_mobile
from condmap.bijections import bdg_inverse
from condmap.rng import replicate_rng
from condmap.trees import sample_tree
from condmap.weights import WeightSequence


@pytest.fixture(scope="module")
def objects():
    w = WeightSequence.power_law(3)
    m = sample_mobile(200, w, replicate_rng(1))
    return [sample_tree(200, w, replicate_rng(2)), m, bdg_inverse(m), label_process(m)]


def _same(a, b):
    if hasattr(a, "values"):
        return (np.array_equal(a.values, b.values) and a.kind == b.kind
                and a.index_scale == b.index_scale and a.amplitude_scale == b.amplitude_scale)
    return a == b


def test_json_roundtrip(objects):
    for o in objects:
        text = dumps_json(o)
        assert _same(loads_json(text), o)
        assert json.loads(text)["schema_version"] == 1


def test_bin_roundtrip(objects):
    for o in objects:
        assert _same(loads_bin(dumps_bin(o)), o)


def test_format_errors(objects):
    with pytest.raises(FormatError):
        loads_bin(b"XXXX\x01\x01")
    with pytest.raises(FormatError):
        loads_bin(dumps_bin(objects[0])[:-1])
    with pytest.raises(FormatError):
        loads_json('{"schema_version": 2, "type": "tree"}')
    with pytest.raises(TypeError):
        dumps_json(object())


@given(st.lists(st.integers(0, 2**63 - 1), max_size=40))
def test_varint_roundtrip(xs):
    buf = encode_varints(np.array(xs, dtype=np.uint64))
    out, pos = decode_varints(buf, len(xs))
    assert out.tolist() == xs and pos == len(buf)


@given(st.lists(st.integers(-2**62, 2**62), max_size=40))
def test_zigzag_roundtrip(xs):
    assert _unzigzag(_zigzag(np.array(xs, dtype=np.int64))).tolist() == xs


def _sample(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["sample", "--family", "powerlaw:beta=3", "--n", "100", "--reps", "3",
                 "--seed", "5", "--out", str(out), *extra])
    return code, out


@pytest.mark.parametrize("kind,fmt", [("map", "json"), ("mobile", "bin"), ("tree", "json"),
                                      ("trace", "bin")])
def test_cli_sample_deterministic(tmp_path, kind, fmt):
    c1, a = _sample(tmp_path, "a", "--kind", kind, "--format", fmt)
    c2, b = _sample(tmp_path, "b", "--kind", kind, "--format", fmt, "--threads", "2")
    assert c1 == c2 == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and "manifest.json" in names
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    man = json.loads((a / "manifest.json").read_text())
    assert man["seed"] == 5 and len(man["files"]) == 3 and "rng" in man


def test_cli_sample_refuses_overwrite(tmp_path):
    assert _sample(tmp_path, "a")[0] == 0
    assert _sample(tmp_path, "a")[0] == 1
    assert _sample(tmp_path, "a", "--overwrite")[0] == 0


def test_cli_cap_error_writes_nothing(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("CONDMAP_CAP_N", "50")
    code, out = _sample(tmp_path, "capped")
    assert code == 1 and not out.exists()
    assert "cap" in capsys.readouterr().err
    assert list(tmp_path.iterdir()) == []


def test_cli_usage_errors():
    with pytest.raises(SystemExit) as e:
        main(["experiment", "no-such", "--family", "powerlaw:beta=3", "--seed", "0"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["sample", "--family", "bad", "--n", "5", "--seed", "0"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["sample", "--family", "powerlaw:beta=3", "--n", "0", "--seed", "0"])
    assert e.value.code == 2


def test_cli_verify_subset(tmp_path):
    rep = tmp_path / "r.json"
    assert main(["verify", "--checks", "catalan", "gn", "solve-z", "--report", str(rep),
                 "--quiet"]) == 0
    d = json.loads(rep.read_text())
    assert d["ok"] and [c["name"] for c in d["checks"]] == ["catalan_counts", "gn_roundtrip",
                                                            "solve_z"]


def test_cli_experiment(tmp_path):
    args = ["experiment", "lemma-dis", "--family", "factorial:alpha=1", "--n", "30",
            "--reps", "4", "--seed", "3", "--out", str(tmp_path)]
    assert main(args) == 0
    first = (tmp_path / "lemma-dis_3.json").read_text()
    assert main(args) == 0
    assert (tmp_path / "lemma-dis_3.json").read_text() == first
    assert (tmp_path / "lemma-dis_3.csv").exists()


def test_cli_experiment_regime_error(tmp_path):
    assert main(["experiment", "prop-super", "--family", "powerlaw:beta=3", "--seed", "0",
                 "--out", str(tmp_path)]) == 1


def test_cli_stats(capsys):
    assert main(["stats", "--family", "powerlaw:beta=3", "--gw"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["galton_watson"]["Z"] == pytest.approx(2.2020569, abs=1e-6)
    assert d["galton_watson"]["xi0_mean"] == pytest.approx(0.4429, abs=1e-3)
    assert main(["stats", "--family", "factorial:alpha=1", "--gw"]) == 0
    assert "error" in json.loads(capsys.readouterr().out)["galton_watson"]
