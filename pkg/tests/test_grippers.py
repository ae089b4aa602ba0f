import json

import pytest

from graspbench.errors import SchemaError, ValidationError
from graspbench.grasping.gripper import GripperSpec, default_gripper
from graspbench.grippers import list_builtin_profiles, load_gripper, show_profile


def test_builtin_profiles():
    assert list_builtin_profiles() == ["franka-hand", "robotiq-2f85"]


def test_default_profile_matches_default_gripper():
    spec = load_gripper("robotiq-2f85")
    assert spec.to_dict() == default_gripper().to_dict()


def test_franka_palm_from_profile():
    spec = load_gripper("franka-hand")
    assert spec.max_opening == 0.08
    assert len(spec.palm) == 1
    assert spec.palm[0].frame.translation[2] == pytest.approx(-0.075)


def test_show_profile():
    res = show_profile("franka-hand")
    assert res["ok"] is True
    assert res["meta"]["name"] == "franka-hand"
    assert res["gripper"]["pad"] == {"width": 0.02, "height": 0.018}
    missing = show_profile("pinch-9000")
    assert missing["ok"] is False
    assert "not found" in missing["error"]
    assert show_profile("../robotiq-2f85")["ok"] is False


def test_load_gripper_from_file(tmp_path):
    path = tmp_path / "narrow.json"
    doc = default_gripper().to_dict()
    doc.update(name="narrow", max_opening=0.04)
    path.write_text(json.dumps(doc), encoding="utf-8")
    spec = load_gripper(path)
    assert spec.name == "narrow"
    assert spec.max_opening == 0.04
    assert GripperSpec.from_dict(spec.to_dict()).to_dict() == spec.to_dict()


def test_load_gripper_errors(tmp_path):
    with pytest.raises(ValidationError, match="unknown gripper 'pinch-9000'"):
        load_gripper("pinch-9000")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"name": "bad", "stroke": 0.1}), encoding="utf-8")
    with pytest.raises(SchemaError) as err:
        load_gripper(bad)
    assert err.value.field == "stroke"
    cone = tmp_path / "cone.json"
    cone.write_text(json.dumps({"name": "cone", "palm": [{"type": "cone"}]}), encoding="utf-8")
    with pytest.raises(SchemaError) as err:
        load_gripper(cone)
    assert err.value.field == "palm[0].type"
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{name: 1}", encoding="utf-8")
    with pytest.raises(ValidationError, match="invalid JSON"):
        load_gripper(garbage)
