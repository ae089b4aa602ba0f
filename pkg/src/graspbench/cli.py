#!/usr/bin/env python3
"""
graspbench CLI

Subcommands:
  - sample-grasps / verify-grasps
  - validate-scene
  - ik-solve
  - eval-episode / report
  - replay MANIFEST
  - gripper list/show, config show-paths/dump

Exit codes:
  0: success
  1: I/O error
  2: invalid arguments or input
  3: internal error
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import sys
import tempfile
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from . import __version__
from .bench import BenchConfig, correlation_summary, evaluate, grasp_transitions, oracle_success, rate_table
from .bench.stats import paired_rates
from .codecs import (
    dumps,
    grasp_to_record,
    header_record,
    load_chain,
    load_episode,
    load_scene,
    rate_counts_from_dict,
    rates_from_dict,
    read_grasp_file,
    read_json,
    scene_to_dict,
    targets_from_dict,
    task_from_dict,
    verification_record,
    write_json,
    write_jsonl,
)
from .config import Settings, load_settings, settings_from_mapping, write_settings, write_text_atomic
from .errors import GraspbenchError, PreconditionError, ValidationError, exit_code_for
from .geometry.convex import ConvexPiece
from .geometry.mesh import load_mesh
from .grasping import (
    ArticulatedTarget,
    GraspConfig,
    VerifyConfig,
    generate_articulated_grasps,
    generate_grasps,
    in_situ_test,
    verify_articulated,
    verify_rigid,
)
from .grasping.verify import summarize_by_category
from .grippers import list_builtin_profiles, load_gripper, show_profile
from .kinematics import IkParams, builtin_chain, ik_solve_batch
from .logging_setup import setup_logging
from .manifest import RunManifest, load_manifest, write_sidecar
from .physics.backend import get_backend
from .physics.engine import PhysicsConfig
from .physics.scene import BodySpec, SceneGraph
from .platform import log_path, settings_path, xdg_config_dir, xdg_state_dir
from .qa import BatchReport, QAConfig, qa_run_all, qa_run_batch, qa_settle


logger = logging.getLogger("graspbench.cli")

MESH_SUFFIXES = (".obj", ".stl")


def _print_json(data: Any) -> None:
    sys.stdout.write(dumps(data))


def _manifest(args: argparse.Namespace, command: str, inputs: Sequence[Path]) -> RunManifest:
    return RunManifest.create(command, args.argv, inputs, args.seed, args.settings)


def _backend(settings: Settings):
    return get_backend("builtin", PhysicsConfig.from_settings(settings))


# ---------- grasps ----------

def cmd_sample_grasps(args: argparse.Namespace) -> int:
    settings: Settings = args.settings
    if bool(args.object) == bool(args.articulated):
        raise ValidationError("give either an object mesh or --articulated SCENE")
    cfg = GraspConfig.from_settings(settings)
    gripper = load_gripper(args.gripper or cfg.gripper)
    vcfg = VerifyConfig.from_settings(settings)

    if args.articulated:
        scene_file = Path(args.articulated)
        if not args.leaf:
            raise ValidationError("--articulated needs --leaf BODY")
        man = _manifest(args, "sample-grasps", [scene_file])
        with man.timed("load"):
            scene = load_scene(scene_file)
            joint_id = args.joint or _owning_joint_id(scene, args.leaf)
            target = ArticulatedTarget(scene, scene.joint(joint_id), args.leaf)
        with man.timed("generate"):
            result = generate_articulated_grasps(target, gripper, cfg, args.seed)
    else:
        mesh_file = Path(args.object)
        if mesh_file.suffix.lower() not in MESH_SUFFIXES:
            raise ValidationError(f"{mesh_file}: expected an .obj or .stl mesh")
        man = _manifest(args, "sample-grasps", [mesh_file])
        with man.timed("load"):
            mesh = load_mesh(mesh_file)
        with man.timed("generate"):
            result = generate_grasps(mesh, gripper, cfg, args.seed, object_id=args.object_id or mesh_file.stem,
                                     mass=args.mass, friction=args.friction, verify_config=vcfg)

    records = [header_record(man.to_dict(), result.metadata, result.counters)]
    records += [grasp_to_record(c, result.object_id, i) for i, c in enumerate(result.grasps)]
    out = Path(args.out)
    with man.timed("write"):
        write_jsonl(records, out)
    write_sidecar(out, man)
    print(f"{len(result.grasps)} grasps for {result.object_id} -> {out}")
    return 0


def _owning_joint_id(scene: SceneGraph, body_id: str) -> str:
    scene.body(body_id)
    joint = scene.parent_joint.get(body_id)
    if joint is None:
        raise PreconditionError(f"body '{body_id}' is not moved by any joint; pass --joint")
    return joint.id


def _isolated_body(object_id: str, metadata: Dict[str, Any], mesh_file: Path) -> BodySpec:
    mesh = load_mesh(mesh_file)
    return BodySpec(object_id, "free", (ConvexPiece.hull(mesh.vertices),),
                    mass=float(metadata.get("mass", 0.2)), friction=float(metadata.get("friction", 0.8)),
                    mesh=mesh)


def cmd_verify_grasps(args: argparse.Namespace) -> int:
    settings: Settings = args.settings
    grasp_file = Path(args.grasps)
    vcfg = VerifyConfig.from_settings(settings)
    cfg = GraspConfig.from_settings(settings)
    gripper = load_gripper(args.gripper or cfg.gripper)
    backend = _backend(settings)

    inputs: List[Path] = [grasp_file]
    header, grasps = read_grasp_file(grasp_file)
    metadata = header.get("metadata", {})
    scene: Optional[SceneGraph] = None
    mesh_file: Optional[Path] = None
    if args.scene:
        inputs.append(Path(args.scene))
        scene = load_scene(Path(args.scene))
        if args.settle:
            scene = qa_settle(scene, backend, QAConfig.from_settings(settings))
        for object_id, gid, _ in grasps:
            if not scene.has_body(object_id):
                raise ValidationError(f"grasp {gid}: object '{object_id}' is not in the scene")
    elif "joint" in metadata:
        raise ValidationError("articulated grasps need --scene, or use verify-articulated")
    else:
        src = args.object or metadata.get("mesh_source")
        if not src:
            raise ValidationError("isolated verification needs --object MESH (no mesh_source in the grasp header)")
        mesh_file = Path(src)
        if not mesh_file.is_absolute() and not mesh_file.exists():
            mesh_file = grasp_file.parent / mesh_file
        inputs.append(mesh_file)
    man = _manifest(args, "verify-grasps", inputs)

    records: List[Dict[str, Any]] = []
    outcomes: List[Tuple[str, bool]] = []
    with man.timed("verify"):
        if scene is not None:
            state = backend.initial_state(scene)
            for object_id, gid, cand in grasps:
                mode = "articulate" if object_id in scene.parent_joint else "lift"
                res = in_situ_test(cand, scene, object_id, backend, mode=mode, state=state,
                                   gripper=gripper, config=vcfg, grasp_id=gid)
                records.append(verification_record(cand, object_id, gid, res))
                outcomes.append((scene.body(object_id).category or object_id, res.success))
        else:
            bodies: Dict[str, BodySpec] = {}
            for object_id, gid, cand in grasps:
                body = bodies.get(object_id)
                if body is None:
                    body = bodies[object_id] = _isolated_body(object_id, metadata, mesh_file)
                res = verify_rigid(cand, body, backend, gripper=gripper, config=vcfg, grasp_id=gid)
                records.append(verification_record(cand, object_id, gid, res))
                outcomes.append((metadata.get("category") or object_id, res.success))

    level = settings.getfloat("bench", "credible_level")
    summary = [asdict(row) for row in summarize_by_category(outcomes, level)]
    counters = {"grasps": len(records), "successes": sum(1 for r in records if r["success"])}
    head = header_record(man.to_dict(), {"summary": summary, "mode": "in_situ" if scene is not None else "isolated"},
                         counters)
    out = Path(args.out)
    with man.timed("write"):
        write_jsonl([head] + records, out)
    write_sidecar(out, man)
    for row in summary:
        print(f"{row['category']}: {row['successes']}/{row['trials']} "
              f"({row['rate']:.3f}, {level:.0%} CI [{row['ci_low']:.3f}, {row['ci_high']:.3f}])")
    return 0


def cmd_verify_articulated(args: argparse.Namespace) -> int:
    """Free-floating articulation check of leaf grasps against their source object."""
    settings: Settings = args.settings
    grasp_file = Path(args.grasps)
    scene_file = Path(args.articulated)
    vcfg = VerifyConfig.from_settings(settings)
    gripper = load_gripper(args.gripper or GraspConfig.from_settings(settings).gripper)
    backend = _backend(settings)
    header, grasps = read_grasp_file(grasp_file)
    metadata = header.get("metadata", {})
    man = _manifest(args, "verify-articulated", [grasp_file, scene_file])
    scene = load_scene(scene_file)
    joint_id = metadata.get("joint")
    records = []
    outcomes = []
    with man.timed("verify"):
        for object_id, gid, cand in grasps:
            jid = joint_id or _owning_joint_id(scene, object_id)
            target = ArticulatedTarget(scene, scene.joint(jid), object_id)
            res = verify_articulated(cand, target, backend, gripper=gripper, config=vcfg, grasp_id=gid)
            records.append(verification_record(cand, object_id, gid, res))
            outcomes.append((scene.body(object_id).category or object_id, res.success))
    level = settings.getfloat("bench", "credible_level")
    summary = [asdict(row) for row in summarize_by_category(outcomes, level)]
    counters = {"grasps": len(records), "successes": sum(1 for r in records if r["success"])}
    out = Path(args.out)
    write_jsonl([header_record(man.to_dict(), {"summary": summary, "mode": "articulated"}, counters)] + records, out)
    write_sidecar(out, man)
    print(f"{counters['successes']}/{counters['grasps']} grasps actuate -> {out}")
    return 0


# ---------- scene QA ----------

def cmd_validate_scene(args: argparse.Namespace) -> int:
    settings: Settings = args.settings
    cfg = QAConfig.from_settings(settings)
    backend = _backend(settings)
    src = Path(args.scene)
    out = Path(args.out)

    if src.is_dir():
        files = sorted(p for p in src.glob("*.json") if not p.name.endswith(".manifest.json"))
        if not files:
            raise ValidationError(f"{src}: no scene files")
        man = _manifest(args, "validate-scene", files)
        scenes = [(p.stem, load_scene(p)) for p in files]
        with man.timed("qa"):
            batch = qa_run_batch(scenes, backend, cfg, threads=args.threads)
        data = {
            "schema_version": 1,
            "manifest": man.to_dict(),
            "scenes": {name: rep.to_dict() for name, rep in zip(batch.names, batch.reports)},
            "pass_rates": batch.pass_rates,
        }
        write_json(data, out)
        if args.csv:
            write_text_atomic(Path(args.csv), batch.to_csv())
        write_sidecar(out, man)
        rates = batch.pass_rates
        print(" ".join(f"{k}={v:.3f}" for k, v in rates.items()))
        return 0

    man = _manifest(args, "validate-scene", [src])
    scene = load_scene(src)
    with man.timed("qa"):
        report, cleaned = qa_run_all(scene, backend, cfg)
    data = {"schema_version": 1, "manifest": man.to_dict(), "report": report.to_dict()}
    write_json(data, out)
    if args.cleaned:
        write_json(scene_to_dict(cleaned), Path(args.cleaned))
    if args.csv:
        write_text_atomic(Path(args.csv), BatchReport([src.stem], [report]).to_csv())
    write_sidecar(out, man)
    removed = ", ".join(f"{r.body_id} ({r.test}: {r.reason})" for r in report.removed) or "none"
    print(f"{'PASS' if report.all_passed else 'FAIL'}; removed: {removed}")
    for flag in report.scene_flags:
        print(f"flag: {flag}")
    return 0


# ---------- kinematics ----------

def _chain(spec: str):
    p = Path(spec)
    if p.suffix == ".json" or p.exists():
        return load_chain(p), [p]
    return builtin_chain(spec), []


def cmd_ik_solve(args: argparse.Namespace) -> int:
    settings: Settings = args.settings
    chain, chain_inputs = _chain(args.chain)
    targets_file = Path(args.targets)
    man = _manifest(args, "ik-solve", chain_inputs + [targets_file])
    params = IkParams.from_settings(settings)
    if args.position_only:
        params = params.position_only
    targets, seeds = targets_from_dict(read_json(targets_file))
    if seeds is None:
        seeds = [chain.rest] * len(targets)
    with man.timed("solve"):
        sols = ik_solve_batch(chain, targets, seeds, params, threads=args.threads)
    n_ok = sum(1 for s in sols if s.converged)
    data = {
        "schema_version": 1,
        "manifest": man.to_dict(),
        "chain": chain.name,
        "params": params.as_dict(),
        "solutions": [s.as_dict() for s in sols],
        "summary": {"targets": len(sols), "converged": n_ok},
    }
    out = Path(args.out)
    write_json(data, out)
    write_sidecar(out, man)
    print(f"{n_ok}/{len(sols)} converged -> {out}")
    return 0


# ---------- benchmark ----------

def cmd_eval_episode(args: argparse.Namespace) -> int:
    settings: Settings = args.settings
    ep_file = Path(args.episode)
    task_file = Path(args.task)
    man = _manifest(args, "eval-episode", [ep_file, task_file])
    ep = load_episode(ep_file)
    task = task_from_dict(read_json(task_file))
    base = BenchConfig.from_settings(settings)
    with man.timed("evaluate"):
        result = evaluate(ep, task, base)
        oracle = oracle_success(ep, task, base)
        holders = list(ep.objects.holders)
        transitions = None
        if holders:
            transitions = grasp_transitions(ep, ep.objects.object, holders, until=oracle.first_success)
    data = {
        "schema_version": 1,
        "manifest": man.to_dict(),
        "task": task.kind,
        "result": result.as_dict(),
        "oracle": oracle.as_dict(),
        "grasp_transitions": transitions,
    }
    if args.out:
        out = Path(args.out)
        write_json(data, out)
        write_sidecar(out, man)
    else:
        _print_json({k: v for k, v in data.items() if k != "manifest"})
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    settings: Settings = args.settings
    sim_file, real_file = Path(args.sim), Path(args.real)
    man = _manifest(args, "report", [sim_file, real_file])
    sim_data, real_data = read_json(sim_file), read_json(real_file)
    keys, x, y = paired_rates(rates_from_dict(sim_data), rates_from_dict(real_data))
    corr = correlation_summary(x, y)
    level = settings.getfloat("bench", "credible_level")
    tables = {}
    for label, raw in (("sim", sim_data), ("real", real_data)):
        rows = rate_table(rate_counts_from_dict(raw), level)
        tables[label] = [{"key": r.key, "successes": r.successes, "trials": r.trials,
                          "rate": r.rate, "ci_low": r.lo, "ci_high": r.hi} for r in rows]
    data = {
        "schema_version": 1,
        "manifest": man.to_dict(),
        "keys": keys,
        "pearson": corr.pearson,
        "spearman": corr.spearman,
        "r_squared": corr.r_squared,
        "n": corr.n,
        "credible_level": level,
        "rates": tables,
    }
    if args.out:
        out = Path(args.out)
        write_json(data, out)
        write_sidecar(out, man)
    print(f"R={corr.pearson:.4f} rho={corr.spearman:.4f} R2={corr.r_squared:.4f} n={corr.n}")
    return 0


# ---------- replay ----------

def cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.manifest)
    man = load_manifest(path)
    if man.tool_version and man.tool_version != __version__:
        logger.warning("manifest written by graspbench %s, running %s", man.tool_version, __version__)
    stale = man.stale_inputs(path.parent)
    if stale:
        if not args.force:
            raise PreconditionError(f"inputs changed since the recorded run: {', '.join(stale)}")
        logger.warning("replaying with changed inputs: %s", ", ".join(stale))
    with tempfile.TemporaryDirectory(prefix="graspbench-replay-") as tmp:
        cfg = Path(tmp) / "settings.ini"
        write_settings(settings_from_mapping(man.config), cfg)
        logger.info("replaying: graspbench %s", " ".join(man.argv))
        return main(["--config", str(cfg)] + list(man.argv))


# ---------- gripper / config ----------

def cmd_gripper_list(_args: argparse.Namespace) -> int:
    for name in list_builtin_profiles():
        print(name)
    return 0


def cmd_gripper_show(args: argparse.Namespace) -> int:
    res = show_profile(args.name)
    if not res.get("ok"):
        print(res.get("error") or "profile not found", file=sys.stderr)
        return 2
    _print_json(res)
    return 0


def _config_paths(args: argparse.Namespace) -> Dict[str, str]:
    return {
        "config_dir": str(xdg_config_dir()),
        "state_dir": str(xdg_state_dir()),
        "settings": str(settings_path(args.config)),
        "log": str(log_path()),
    }


def cmd_config_show_paths(args: argparse.Namespace) -> int:
    paths = _config_paths(args)
    if args.json:
        print(json.dumps(paths, ensure_ascii=False, indent=2))
    else:
        for k, v in paths.items():
            print(f"{k}: {v}")
    return 0


def cmd_config_dump(args: argparse.Namespace) -> int:
    buf = io.StringIO()
    args.settings.config.write(buf)
    sys.stdout.write(buf.getvalue())
    return 0


# ---------- parser ----------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graspbench", description="Grasp generation, scene QA and benchmark tooling")
    p.add_argument("--version", action="version", version=f"graspbench {__version__}")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker threads for batch stages")
    p.add_argument("--config", help="settings.ini to use instead of the default location")
    verbosity = p.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")
    sub = p.add_subparsers(dest="sub")

    p_sg = sub.add_parser("sample-grasps", help="generate antipodal grasps for a mesh or an articulated leaf")
    p_sg.add_argument("object", nargs="?", help="object mesh (.obj or .stl)")
    p_sg.add_argument("--gripper", help="built-in gripper profile or gripper JSON (default from [grasp])")
    p_sg.add_argument("--out", required=True, help="grasp file (JSON Lines)")
    p_sg.add_argument("--object-id", help="object id written into the records (default: mesh file stem)")
    p_sg.add_argument("--mass", type=float, default=0.2, help="object mass for the robustness pre-check (kg)")
    p_sg.add_argument("--friction", type=float, default=0.8, help="object friction for the robustness pre-check")
    p_sg.add_argument("--articulated", metavar="SCENE", help="articulated object scene file")
    p_sg.add_argument("--leaf", help="leaf body id of the articulated object")
    p_sg.add_argument("--joint", help="joint id (default: the joint moving the leaf)")
    p_sg.set_defaults(func=cmd_sample_grasps)

    p_vg = sub.add_parser("verify-grasps", help="verify grasps in isolation or inside a scene")
    p_vg.add_argument("grasps", help="grasp file")
    p_vg.add_argument("--scene", help="scene file for in-situ tests, taken as already settled "
                      "(omit for isolated-object mode)")
    p_vg.add_argument("--settle", action="store_true",
                      help="settle the scene first (qa settle_duration) instead of trusting its poses")
    p_vg.add_argument("--object", help="object mesh for isolated mode (default: mesh_source of the grasp header)")
    p_vg.add_argument("--gripper", help="built-in gripper profile or gripper JSON")
    p_vg.add_argument("--out", required=True, help="verification file (JSON Lines)")
    p_vg.set_defaults(func=cmd_verify_grasps)

    p_va = sub.add_parser("verify-articulated", help="check leaf grasps actuate their joint")
    p_va.add_argument("grasps", help="grasp file produced with --articulated")
    p_va.add_argument("--articulated", metavar="SCENE", required=True, help="articulated object scene file")
    p_va.add_argument("--gripper", help="built-in gripper profile or gripper JSON")
    p_va.add_argument("--out", required=True, help="verification file (JSON Lines)")
    p_va.set_defaults(func=cmd_verify_articulated)

    p_vs = sub.add_parser("validate-scene", help="run the scene QA tests on a scene file or a directory of scenes")
    p_vs.add_argument("scene", help="scene file, or a directory of scene files for batch mode")
    p_vs.add_argument("--out", required=True, help="QA report (JSON)")
    p_vs.add_argument("--csv", help="per-test pass rates as CSV")
    p_vs.add_argument("--cleaned", help="write the cleaned scene here (single-scene mode)")
    p_vs.set_defaults(func=cmd_validate_scene)

    p_ik = sub.add_parser("ik-solve", help="batched inverse kinematics")
    p_ik.add_argument("chain", help="chain JSON or built-in chain name (panda7, planar2r)")
    p_ik.add_argument("targets", help="targets JSON")
    p_ik.add_argument("--out", required=True, help="solutions (JSON)")
    p_ik.add_argument("--position-only", action="store_true", help="ignore target orientation")
    p_ik.set_defaults(func=cmd_ik_solve)

    p_ev = sub.add_parser("eval-episode", help="evaluate a task success predicate on an episode")
    p_ev.add_argument("episode", help="episode JSON")
    p_ev.add_argument("task", help="task JSON")
    p_ev.add_argument("--out", help="write the result with its manifest instead of printing it")
    p_ev.set_defaults(func=cmd_eval_episode)

    p_rep = sub.add_parser("report", help="sim/real success-rate correlation")
    p_rep.add_argument("--sim", required=True, help="simulated success rates (JSON)")
    p_rep.add_argument("--real", required=True, help="real-world success rates (JSON)")
    p_rep.add_argument("--out", help="write the full report (JSON)")
    p_rep.set_defaults(func=cmd_report)

    p_rp = sub.add_parser("replay", help="re-run a recorded command from its manifest")
    p_rp.add_argument("manifest", help="sidecar manifest, or an output that embeds one")
    p_rp.add_argument("--force", action="store_true", help="replay even if inputs changed")
    p_rp.set_defaults(func=cmd_replay)

    p_gr = sub.add_parser("gripper", help="gripper profiles")
    sub_gr = p_gr.add_subparsers(dest="sub_gripper")
    p_gr_list = sub_gr.add_parser("list", help="list built-in gripper profiles")
    p_gr_list.set_defaults(func=cmd_gripper_list)
    p_gr_show = sub_gr.add_parser("show", help="show a gripper profile")
    p_gr_show.add_argument("--name", required=True, help="profile name (e.g., robotiq-2f85)")
    p_gr_show.set_defaults(func=cmd_gripper_show)

    p_cfg = sub.add_parser("config", help="configuration utilities")
    sub_cfg = p_cfg.add_subparsers(dest="sub_cfg")
    p_cfg_paths = sub_cfg.add_parser("show-paths", help="print important file paths")
    p_cfg_paths.add_argument("--json", action="store_true", help="print as JSON")
    p_cfg_paths.set_defaults(func=cmd_config_show_paths)
    p_cfg_dump = sub_cfg.add_parser("dump", help="print the effective settings as INI")
    p_cfg_dump.set_defaults(func=cmd_config_dump)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)

    if not hasattr(args, "func"):
        parser.print_help()
        return 2

    level = "DEBUG" if args.verbose else "WARNING" if args.quiet else None
    setup_logging(level)
    args.argv = argv

    try:
        if args.threads < 1:
            raise ValidationError("--threads must be >= 1")
        args.settings = load_settings(args.config)
        return args.func(args)
    except KeyboardInterrupt:
        return 1
    except (GraspbenchError, OSError) as e:
        print(f"graspbench: {e}", file=sys.stderr)
        return exit_code_for(e)
    except Exception:
        logger.exception("internal error")
        return 3


if __name__ == "__main__":
    sys.exit(main())
