import json

import pytest

from graspbench.bench.episode import EpisodeState, Snapshot, TaskObjects
from graspbench.cli import main
from graspbench.codecs import episode_to_dict, scene_to_dict, targets_to_dict, write_json
from graspbench.geometry.mesh import write_obj
from graspbench.geometry.transforms import Pose

SMALL_INI = """\
[grasp]
samples = 300
pair_budget = 40
rolls = 4
pad_depth_samples = 2
max_grasps = 3

[verify]
hold_duration = 0.05
move_duration = 0.05

[qa]
settle_duration = 0.5
jitter_window = 0.2
lift_duration = 0.5
"""


@pytest.fixture
def small_ini(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_INI, encoding="utf-8")
    return path


def rates(tmp_path, name, values):
    path = tmp_path / name
    write_json({"schema_version": 1, "results": values}, path)
    return path


@pytest.fixture
def rate_files(tmp_path):
    sim = rates(tmp_path, "sim.json", {"a": 0.1, "b": 0.4, "c": 0.7, "d": {"successes": 9, "trials": 10}})
    real = rates(tmp_path, "real.json", {"a": 0.0, "b": 0.5, "c": 0.6, "d": {"successes": 8, "trials": 10}})
    return sim, real


# ---------- exit codes ----------

def test_no_subcommand_prints_help(capsys):
    assert main([]) == 2
    assert "usage: graspbench" in capsys.readouterr().out


def test_bad_threads_is_invalid_input(capsys):
    assert main(["--threads", "0", "gripper", "list"]) == 2
    assert "--threads" in capsys.readouterr().err


def test_missing_explicit_config(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.ini"), "gripper", "list"]) == 2
    assert "does not exist" in capsys.readouterr().err


def test_missing_input_is_io_error(tmp_path, capsys):
    assert main(["eval-episode", str(tmp_path / "ep.json"), str(tmp_path / "task.json")]) == 1
    assert capsys.readouterr().err.startswith("graspbench: ")


def test_schema_error_exit_code(tmp_path, capsys):
    scene = tmp_path / "scene.json"
    write_json({"schema_version": 1, "bodies": [{"id": "x", "mobility": "free", "colliders": [], "mas": 1}]},
               scene)
    assert main(["validate-scene", str(scene), "--out", str(tmp_path / "qa.json")]) == 2
    assert "bodies[0].mas: unknown field" in capsys.readouterr().err


def test_sample_grasps_rejects_other_formats(tmp_path, capsys):
    mesh = tmp_path / "cube.ply"
    mesh.write_text("ply\n", encoding="utf-8")
    assert main(["sample-grasps", str(mesh), "--out", str(tmp_path / "g.jsonl")]) == 2
    assert main(["sample-grasps", "--out", str(tmp_path / "g.jsonl")]) == 2


# ---------- gripper / config ----------

def test_gripper_commands(capsys):
    assert main(["gripper", "list"]) == 0
    assert capsys.readouterr().out.split() == ["franka-hand", "robotiq-2f85"]
    assert main(["gripper", "show", "--name", "robotiq-2f85"]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["gripper"]["max_opening"] == 0.085
    assert main(["gripper", "show", "--name", "nope"]) == 2


def test_config_commands(tmp_path, capsys, small_ini):
    assert main(["config", "show-paths", "--json"]) == 0
    paths = json.loads(capsys.readouterr().out)
    assert paths["config_dir"] == str(tmp_path / "config" / "graspbench")
    assert main(["--config", str(small_ini), "config", "dump"]) == 0
    dumped = capsys.readouterr().out
    assert "samples = 300" in dumped
    assert "[physics]" in dumped


# ---------- kinematics ----------

def test_ik_solve_builtin_chain(tmp_path, capsys):
    targets = tmp_path / "targets.json"
    write_json(targets_to_dict([Pose.from_translation([1.0, 1.0, 0.0])], seeds=[[0.3, 0.5]]), targets)
    out = tmp_path / "solutions.json"
    assert main(["ik-solve", "planar2r", str(targets), "--out", str(out), "--position-only"]) == 0
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["chain"] == "planar2r"
    assert data["summary"] == {"targets": 1, "converged": 1}
    assert data["manifest"]["inputs"] == {str(targets): data["manifest"]["inputs"][str(targets)]}
    assert (tmp_path / "solutions.json.manifest.json").is_file()
    assert "1/1 converged" in capsys.readouterr().out


# ---------- benchmark ----------

def test_eval_episode_prints_result(tmp_path, capsys, table_scene):
    start = {"table": Pose.from_translation([0.0, 0.0, -0.02]), "cube": Pose.from_translation([0.0, 0.0, 0.025])}
    snaps = (Snapshot(0.0, start), Snapshot(1.0, dict(start, cube=Pose.from_translation([0.0, 0.0, 0.2]))))
    ep = EpisodeState(table_scene, TaskObjects("cube"), snaps, declared_done=True)
    ep_file = tmp_path / "episode.json"
    task_file = tmp_path / "task.json"
    write_json(episode_to_dict(ep), ep_file)
    write_json({"schema_version": 1, "kind": "pick"}, task_file)
    assert main(["eval-episode", str(ep_file), str(task_file)]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["task"] == "pick"
    assert set(data["result"]) == {"success", "measured", "violated"}
    assert "manifest" not in data
    assert data["grasp_transitions"] is None


def test_report_and_replay(tmp_path, capsys, rate_files):
    sim, real = rate_files
    out = tmp_path / "report.json"
    assert main(["report", "--sim", str(sim), "--real", str(real), "--out", str(out)]) == 0
    assert capsys.readouterr().out.startswith("R=")
    data = json.loads(out.read_text(encoding="utf-8"))
    assert data["keys"] == ["a", "b", "c", "d"]
    assert data["n"] == 4
    assert [row["key"] for row in data["rates"]["sim"]] == ["d"]
    first = out.read_bytes()

    assert main(["replay", str(out) + ".manifest.json"]) == 0
    assert out.read_bytes() == first

    rates(tmp_path, "sim.json", {"a": 0.2, "b": 0.4, "c": 0.7, "d": 0.9})
    assert main(["replay", str(out)]) == 2
    assert "inputs changed" in capsys.readouterr().err
    assert main(["replay", str(out), "--force"]) == 0


def test_report_needs_matching_keys(tmp_path, capsys, rate_files):
    sim, _ = rate_files
    real = rates(tmp_path, "other.json", {"a": 0.1, "b": 0.2, "z": 0.3})
    assert main(["report", "--sim", str(sim), "--real", str(real)]) == 2
    assert "keys differ" in capsys.readouterr().err


# ---------- scene QA and grasps ----------

@pytest.mark.slow
def test_validate_scene(tmp_path, capsys, small_ini, table_scene):
    scene = tmp_path / "scene.json"
    write_json(scene_to_dict(table_scene), scene)
    out = tmp_path / "qa.json"
    cleaned = tmp_path / "cleaned.json"
    csv = tmp_path / "qa.csv"
    argv = ["--config", str(small_ini), "validate-scene", str(scene), "--out", str(out),
            "--cleaned", str(cleaned), "--csv", str(csv)]
    assert main(argv) == 0
    assert capsys.readouterr().out.startswith("PASS; removed: none")
    report = json.loads(out.read_text(encoding="utf-8"))["report"]
    assert all(report["passed"].values())
    assert json.loads(cleaned.read_text(encoding="utf-8"))["bodies"][1]["id"] == "cube"
    assert csv.read_text(encoding="utf-8").splitlines()[0] == "scene,Stab.,Lift,Inter.,Artic."


@pytest.mark.slow
def test_sample_then_verify_isolated(tmp_path, capsys, small_ini, cube_mesh):
    mesh = tmp_path / "cube.obj"
    write_obj(cube_mesh, mesh)
    grasps = tmp_path / "grasps.jsonl"
    argv = ["--config", str(small_ini), "--seed", "7", "sample-grasps", str(mesh), "--out", str(grasps)]
    assert main(argv) == 0
    lines = [json.loads(line) for line in grasps.read_text(encoding="utf-8").splitlines()]
    assert lines[0]["kind"] == "header"
    assert lines[0]["manifest"]["seed"] == 7
    assert lines[0]["metadata"]["mesh_source"] == str(mesh)
    assert 1 <= len(lines) - 1 <= 3
    assert all(rec["object_id"] == "cube" for rec in lines[1:])
    first = grasps.read_bytes()
    assert main(argv) == 0
    assert grasps.read_bytes() == first

    verified = tmp_path / "verified.jsonl"
    assert main(["--config", str(small_ini), "verify-grasps", str(grasps), "--out", str(verified)]) == 0
    out = [json.loads(line) for line in verified.read_text(encoding="utf-8").splitlines()]
    assert out[0]["metadata"]["mode"] == "isolated"
    assert out[0]["counters"]["grasps"] == len(lines) - 1
    assert all(isinstance(rec["success"], bool) for rec in out[1:])
    assert "cube:" in capsys.readouterr().out


def test_verify_grasps_settles_scene_on_request(tmp_path, monkeypatch, table_scene):
    scene = tmp_path / "scene.json"
    write_json(scene_to_dict(table_scene), scene)
    grasps = tmp_path / "grasps.jsonl"
    grasps.write_text(json.dumps({"kind": "header", "schema_version": 1, "manifest": {}, "metadata": {}}) + "\n",
                      encoding="utf-8")
    settled = []

    def fake_settle(graph, backend, cfg):
        settled.append(cfg.settle_duration)
        return graph

    monkeypatch.setattr("graspbench.cli.qa_settle", fake_settle)
    argv = ["verify-grasps", str(grasps), "--scene", str(scene), "--out", str(tmp_path / "v.jsonl")]
    assert main(argv) == 0
    assert settled == []
    assert main(argv + ["--settle"]) == 0
    assert settled == [20.0]
