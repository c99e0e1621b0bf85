"""Command-line pipeline: generate data, build the model, run the AST, analyze.

Subcommands: gen, pipeline, ast, analyze, export-stimuli. Every command is
deterministic under a fixed config and seed; artifacts carry the hash of the
resolved configuration. Set KINPRIM_LOG=DEBUG|INFO|WARNING for verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, ast_harness, classifier, kinematics, primitives, segmentation
from .errors import KinprimError

log = logging.getLogger("kinprim")

# nonzero exit code per pipeline stage
STAGE_EXIT = {"ingest": 2, "segment": 3, "dictionary": 4, "encode": 5,
              "train": 6, "ast": 7, "analyze": 8}


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def stage_seed(root_seed: int, stage: str) -> int:
    """Expand the root seed into an independent per-stage seed."""
    digest = hashlib.sha256(f"{root_seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


class StageError(KinprimError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.exit_code = STAGE_EXIT.get(stage, 1)


# ---------------------------------------------------------------------------
# gen

def cmd_gen(args) -> int:
    spec_doc = json.loads(Path(args.spec).read_text())
    classes = spec_doc["classes"]
    root_seed = args.seed if args.seed is not None else spec_doc.get("seed", 0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    manifest = {"seed": root_seed, "format": args.format, "classes": {}}
    for entry in classes:
        entry = dict(entry)
        instances = int(entry.pop("instances", 1))
        files = []
        for i in range(instances):
            fields = dict(entry)
            fields["seed"] = stage_seed(root_seed,
                                        f"gen:{entry['class_name']}:{i}")
            spec = kinematics.SynthSpec.from_dict(fields)
            traj = kinematics.generate_action(spec)
            ext = "json" if args.format == "json" else "csv"
            name = f"{spec.class_name}_{i:03d}.{ext}"
            kinematics.save_trajectory(traj, out / name, format=args.format)
            files.append(name)
        manifest["classes"][entry["class_name"]] = files
        log.info("generated %d instance(s) of %s", instances,
                 entry["class_name"])
    manifest["config_hash"] = config_hash(
        {"spec": spec_doc, "seed": root_seed, "format": args.format})
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    print(f"wrote {sum(len(v) for v in manifest['classes'].values())} "
          f"trajectory file(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# pipeline

_PIPELINE_DEFAULTS = {
    "format": "json",
    "marker_select": "all_mean",
    "smooth_window": 5,
    "prominence_frac": 0.05,
    "min_duration": 0.1,
    "resample_length": 50,
    "k": 15,
    "sparsity": 3,
    "max_iters": 100,
    "sigma": None,
    "lambda": 1e-3,
    "seed": 0,
}


def _resolve_pipeline_config(args) -> dict:
    cfg = dict(_PIPELINE_DEFAULTS)
    if args.config:
        cfg.update(json.loads(Path(args.config).read_text()))
    # flags win over the config file
    for flag in ("seed", "k", "sparsity", "format"):
        v = getattr(args, flag, None)
        if v is not None:
            cfg[flag] = v
    cfg["data_dir"] = args.data or cfg.get("data_dir")
    cfg["out_dir"] = args.out or cfg.get("out_dir")
    if not cfg["data_dir"] or not cfg["out_dir"]:
        raise KinprimError("pipeline needs --data and --out (or config entries)")
    return cfg


def _ingest(cfg: dict) -> list:
    data_dir = Path(cfg["data_dir"])
    ext = "json" if cfg["format"] == "json" else "csv"
    manifest_path = data_dir / "manifest.json"
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        paths = [data_dir / name for files in manifest["classes"].values()
                 for name in files]
    else:
        paths = sorted(p for p in data_dir.glob(f"*.{ext}")
                       if not p.name.endswith(".meta.json")
                       and p.name != "manifest.json")
    if not paths:
        raise KinprimError(f"no .{ext} trajectory files in {data_dir}")
    return [kinematics.load_trajectory(p, format=cfg["format"]) for p in paths]


def run_pipeline(cfg: dict):
    """Ingest -> segment -> dictionary -> encode -> train. Returns artifacts."""
    try:
        trajectories = _ingest(cfg)
    except Exception as e:
        raise StageError("ingest", e) from e

    params = segmentation.SegmentationParams(
        prominence_frac=cfg["prominence_frac"],
        min_duration=cfg["min_duration"],
        resample_length=cfg["resample_length"])
    try:
        subs_by_recording = {}
        skipped = 0
        for traj in trajectories:
            vp = kinematics.tangential_velocity(
                traj, marker_select=cfg["marker_select"],
                smooth_window=cfg["smooth_window"])
            result = segmentation.segment_profile(
                vp, params, action_label=traj.action_label)
            skipped += result.skipped
            if result.submovements:
                subs_by_recording[traj.recording_id] = result.submovements
    except Exception as e:
        raise StageError("segment", e) from e

    all_subs = [s for subs in subs_by_recording.values() for s in subs]
    try:
        dictionary = primitives.learn_dictionary(
            all_subs, k=cfg["k"],
            seed=stage_seed(cfg["seed"], "kmeans"),
            max_iters=cfg["max_iters"])
    except Exception as e:
        raise StageError("dictionary", e) from e

    try:
        reps = [primitives.encode_action(subs, dictionary,
                                         sparsity=cfg["sparsity"])
                for subs in subs_by_recording.values()]
    except Exception as e:
        raise StageError("encode", e) from e

    dataset = {}
    for rep in reps:
        dataset.setdefault(rep.action_label, []).append(rep)
    try:
        model = classifier.train_one_vs_all(
            dataset, sigma=cfg["sigma"], lam=cfg["lambda"],
            dictionary_fingerprint=dictionary.fingerprint)
    except Exception as e:
        raise StageError("train", e) from e

    return trajectories, all_subs, dictionary, reps, model, skipped


def cmd_pipeline(args) -> int:
    cfg = _resolve_pipeline_config(args)
    # hash the parameters, not the storage locations
    chash = config_hash({k: v for k, v in cfg.items()
                         if k not in ("data_dir", "out_dir")})
    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    _, all_subs, dictionary, reps, model, skipped = run_pipeline(cfg)

    dictionary.save(out / "dictionary.json")
    model.save(out / "model.json")
    reps_doc = [{"recording_id": r.recording_id, "action": r.action_label,
                 "codes": [c.to_dict() for c in r.codes]} for r in reps]
    (out / "representations.json").write_text(json.dumps(reps_doc))
    summary = {
        "config": cfg,
        "config_hash": chash,
        "n_recordings": len(reps),
        "n_submovements": len(all_subs),
        "n_skipped_segments": skipped,
        "n_actions": len(model.classifiers),
        "dictionary_fingerprint": dictionary.fingerprint,
    }
    (out / "pipeline_summary.json").write_text(json.dumps(summary, indent=2))
    print(f"pipeline ok: {len(reps)} recordings, {len(all_subs)} sub-movements, "
          f"{len(model.classifiers)} classifiers (config {chash})")
    return 0


def _load_representations(path) -> list:
    docs = json.loads(Path(path).read_text())
    return [primitives.ActionRepresentation(
                recording_id=d["recording_id"], action_label=d["action"],
                codes=tuple(primitives.SparseCode.from_dict(c)
                            for c in d["codes"]))
            for d in docs]


def _pool_from_reps(reps) -> dict:
    pool = {}
    for rep in reps:
        pool.setdefault(rep.action_label, []).extend(rep.codes)
    return pool


# ---------------------------------------------------------------------------
# ast

def cmd_ast(args) -> int:
    model = classifier.OneVsAllModel.load(args.model)
    reps = _load_representations(args.representations)
    pool = _pool_from_reps(reps)
    actions = sorted(pool)
    cfg = ast_harness.ASTConfig(repetitions=args.reps,
                                instances_per_trial=args.instances,
                                seed=args.seed if args.seed is not None else 0)
    try:
        result = ast_harness.run_experiment(model, pool, actions, cfg)
    except Exception as e:
        raise StageError("ast", e) from e

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash({"reps": cfg.repetitions,
                         "instances": cfg.instances_per_trial,
                         "seed": cfg.seed, "actions": actions})
    matrix_doc = {
        "actions": result.actions,
        "counts": result.counts.tolist(),
        "trials_per_cell": result.trials_per_cell.tolist(),
        "n_trials": len(result.log),
        "config_hash": chash,
    }
    (out / "matrix.json").write_text(json.dumps(matrix_doc, indent=2))
    ast_harness.write_trial_log(result, out / "trials.csv")
    cm = analysis.to_percentage(result.counts, result.trials_per_cell,
                                result.actions)
    cm.to_csv(out / "confusion_matrix.csv")
    report = analysis.compute_metrics(cm)
    (out / "metrics.json").write_text(json.dumps(report.to_json(), indent=2))
    print(f"{len(result.log)} trials; overall accuracy "
          f"{report.summary['accuracy_mean']:.2f}% (config {chash})")
    return 0


# ---------------------------------------------------------------------------
# analyze

def _matrix_from_file(path) -> analysis.ConfusionMatrix:
    doc = json.loads(Path(path).read_text())
    if "counts" in doc:
        return analysis.to_percentage(np.array(doc["counts"]),
                                      np.array(doc["trials_per_cell"]),
                                      doc["actions"])
    return analysis.ConfusionMatrix.from_json(doc)


def cmd_analyze(args) -> int:
    out = Path(args.out) if args.out else None
    if out:
        out.mkdir(parents=True, exist_ok=True)

    if args.human_logs:
        logs = [analysis.load_response_log(p) for p in args.human_logs]
        bundle = analysis.analyze_human_logs(logs)
        text = json.dumps(bundle, indent=2)
        print(text)
        if out:
            (out / "human_metrics.json").write_text(text)
        return 0

    if not args.matrix:
        raise KinprimError("analyze needs --matrix or --human-logs")
    reports = []
    for path in args.matrix:
        cm = _matrix_from_file(path)
        report = analysis.compute_metrics(cm)
        reports.append(report)
        print(f"== {path}")
        print(report.to_table())
        if out:
            name = Path(path).stem
            (out / f"metrics_{name}.json").write_text(
                json.dumps(report.to_json(), indent=2))
    if len(reports) == 2:
        comparison = analysis.compare_reports(reports[0], reports[1])
        print("== independent t-tests (matrix 1 vs matrix 2)")
        for metric, r in comparison.items():
            print(f"{metric:>15}: t({r['df']}) = {r['t']:.3f}, p = {r['p']:.4f}")
        if out:
            (out / "comparison.json").write_text(json.dumps(comparison, indent=2))
    elif len(reports) > 2:
        raise KinprimError("compare at most two matrices")
    return 0


# ---------------------------------------------------------------------------
# export-stimuli

def _resample_frames(traj: kinematics.Trajectory, fps: float) -> np.ndarray:
    """Linear time-resampling of (T, M, D) positions onto the target rate."""
    t_src = np.arange(traj.n_frames) / traj.fps
    duration = t_src[-1]
    n_out = max(2, int(round(duration * fps)) + 1)
    t_out = np.minimum(np.arange(n_out) / fps, duration)
    flat = traj.positions.reshape(traj.n_frames, -1)
    resampled = np.stack([np.interp(t_out, t_src, flat[:, j])
                          for j in range(flat.shape[1])], axis=1)
    return resampled.reshape(n_out, traj.n_markers, -1)


def cmd_export_stimuli(args) -> int:
    paths = [Path(p) for p in args.data]
    if len(paths) == 1 and paths[0].is_dir():
        paths = sorted(p for p in paths[0].glob(f"*.{args.format}")
                       if not p.name.endswith(".meta.json")
                       and p.name != "manifest.json")
    stimuli = []
    seen = set()
    for p in paths:
        traj = kinematics.load_trajectory(p, format=args.format)
        if traj.action_label in seen and not args.all_recordings:
            continue
        seen.add(traj.action_label)
        frames = _resample_frames(traj, args.fps)[:, :, :2]  # frontal 2-D view
        center = frames.reshape(-1, 2).mean(axis=0)
        frames = frames - center
        extent = np.abs(frames).max()
        if extent > 0:
            frames = frames / extent  # normalized display units in [-1, 1]
        stimuli.append({
            "action": traj.action_label,
            "fps": args.fps,
            "dots": [[[float(x), float(y)] for x, y in frame]
                     for frame in frames],
            "orientation_transforms": {
                "UP": "identity",
                "INV": "vertical_flip",
                "INV_mirror": "horizontal_mirror",
            },
        })
    Path(args.out).write_text(json.dumps({"stimuli": stimuli}))
    print(f"exported {len(stimuli)} stimulus sequence(s) to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kinprim",
        description="Kinematic-primitive action model and similarity experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate synthetic trajectory files")
    p.add_argument("--spec", required=True, help="JSON synthesis spec file")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("pipeline", help="ingest, segment, learn, encode, train")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--data", default=None, help="trajectory directory")
    p.add_argument("--out", default=None, help="artifact directory")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--k", type=int, default=None, help="dictionary atoms")
    p.add_argument("--sparsity", type=int, default=None, help="OMP budget")
    p.add_argument("--format", choices=["json", "csv"], default=None)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("ast", help="run the action similarity experiment")
    p.add_argument("--model", required=True)
    p.add_argument("--representations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reps", type=int, default=24)
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_ast)

    p = sub.add_parser("analyze", help="metrics, comparisons, human logs")
    p.add_argument("--matrix", nargs="*", default=[],
                   help="one or two matrix JSON files")
    p.add_argument("--human-logs", nargs="*", default=[],
                   help="ResponseLog JSON files (one task)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("export-stimuli", help="write the UI stimulus package")
    p.add_argument("--data", nargs="+", required=True,
                   help="trajectory files or one directory")
    p.add_argument("--out", required=True)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--all-recordings", action="store_true",
                   help="export every recording, not one per action")
    p.set_defaults(func=cmd_export_stimuli)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("KINPRIM_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except StageError as e:
        log.error("%s", e)
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except KinprimError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
