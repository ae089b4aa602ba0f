import json

import pytest

from graspbench import __version__
from graspbench.codecs import header_record, write_json, write_jsonl
from graspbench.config import default_settings
from graspbench.errors import SchemaError, ValidationError
from graspbench.manifest import RunManifest, load_manifest, sha256_file, sidecar_path, strip_config_flag, write_sidecar


@pytest.mark.parametrize("argv,expected", [
    (["--config", "a.ini", "report", "--sim", "s.json"], ["report", "--sim", "s.json"]),
    (["--config=a.ini", "--seed", "3", "ik-solve"], ["--seed", "3", "ik-solve"]),
    (["validate-scene", "s.json"], ["validate-scene", "s.json"]),
])
def test_strip_config_flag(argv, expected):
    assert strip_config_flag(argv) == expected


def test_create_hashes_inputs(tmp_path):
    src = tmp_path / "scene.json"
    src.write_text("{}\n", encoding="utf-8")
    man = RunManifest.create("validate-scene", ["--config", "x.ini", "validate-scene", str(src)], [src], 4,
                             default_settings())
    data = man.to_dict()
    assert data["tool"] == "graspbench"
    assert data["tool_version"] == __version__
    assert data["argv"] == ["validate-scene", str(src)]
    assert data["inputs"] == {str(src): sha256_file(src)}
    assert data["seed"] == 4
    assert data["config"]["verify"]["closing_force"] == "40"
    assert "timings" not in data


def test_sidecar_carries_timings(tmp_path):
    man = RunManifest("report", ["report"])
    with man.timed("evaluate"):
        pass
    out = tmp_path / "report.json"
    target = write_sidecar(out, man)
    assert target == sidecar_path(out) == tmp_path / "report.json.manifest.json"
    data = json.loads(target.read_text(encoding="utf-8"))
    assert data["output"] == "report.json"
    assert data["timings"]["evaluate"] >= 0.0
    assert load_manifest(target).timings.keys() == {"evaluate"}


def test_load_embedded_manifests(tmp_path):
    man = RunManifest("ik-solve", ["ik-solve", "planar2r", "t.json"], seed=1)
    as_json = tmp_path / "solutions.json"
    write_json({"schema_version": 1, "manifest": man.to_dict(), "solutions": []}, as_json)
    assert load_manifest(as_json).argv == man.argv

    as_jsonl = tmp_path / "grasps.jsonl"
    write_jsonl([header_record(man.to_dict(), {}, {}), {"kind": "grasp"}], as_jsonl)
    loaded = load_manifest(as_jsonl)
    assert loaded.command == "ik-solve"
    assert loaded.seed == 1


def test_load_manifest_errors(tmp_path):
    plain = tmp_path / "plain.json"
    plain.write_text('{"results": {}}\n', encoding="utf-8")
    with pytest.raises(ValidationError, match="no manifest"):
        load_manifest(plain)
    broken = tmp_path / "broken.json"
    broken.write_text('{"manifest": {"argv": []}}\n', encoding="utf-8")
    with pytest.raises(SchemaError):
        load_manifest(broken)


def test_stale_inputs(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text("1", encoding="utf-8")
    b.write_text("2", encoding="utf-8")
    man = RunManifest.create("report", ["report"], [a, b], 0, default_settings())
    assert man.stale_inputs() == []
    b.write_text("3", encoding="utf-8")
    a.unlink()
    assert man.stale_inputs() == [str(a), str(b)]


def test_stale_inputs_resolve_relative_to_base(tmp_path, monkeypatch):
    (tmp_path / "run").mkdir()
    src = tmp_path / "run" / "scene.json"
    src.write_text("{}", encoding="utf-8")
    man = RunManifest("validate-scene", [], {"scene.json": sha256_file(src)})
    monkeypatch.chdir(tmp_path)
    assert man.stale_inputs() == ["scene.json"]
    assert man.stale_inputs(tmp_path / "run") == []
