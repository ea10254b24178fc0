"""Command-line entry point: reproducible experiment pipelines.

Subcommands: bisim, empirical-bisim, collect, train, analyze, verify. Every
run writes a manifest.json with the resolved config, seed, and sha256 hashes
of the artifacts it produced. Exit codes: 0 success, 2 validation error,
3 verification failed, 4 divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from bisimlab import analysis, bisim
from bisimlab.counting_env import CollectedData, CountingEnvConfig, collect_dataset
from bisimlab.dataset import load_dataset, load_frame_sidecar, parse_ppm, save_dataset, save_frame_sidecar
from bisimlab.mdp import counting_abstract_mdp, load_mdp_json, validate_mdp
from bisimlab.nn import encode
from bisimlab.presets import PRESET_NAMES, preset_data, preset_env_config, preset_train_config
from bisimlab.relation import write_partition_csv, write_relation_csv
from bisimlab.train import (
    DivergenceError,
    TrainConfig,
    collected_train_data,
    load_checkpoint,
    model_config_echo,
    save_checkpoint,
    train,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_VERIFY_FAILED = 3
EXIT_DIVERGENCE = 4


def _cap_threads() -> None:
    cap = os.environ.get("BISIMLAB_THREADS")
    if cap:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, cap)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_manifest(out_dir: Path, config: dict, artifacts: list[Path]) -> None:
    manifest = {
        "config": config,
        "artifacts": {p.name: _sha256(p) for p in sorted(artifacts)},
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def _load_mdp(args) -> "bisim.DeterministicMDP":
    if args.counting:
        max_count, target_n = args.counting
        return counting_abstract_mdp(max_count, target_n)
    mdp = load_mdp_json(args.mdp)
    errors = validate_mdp(mdp)
    if errors:
        raise ValueError("; ".join(errors))
    return mdp


def cmd_bisim(args) -> int:
    if args.mdp is None and not args.counting:
        print("error: one of --mdp / --counting is required", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        mdp = _load_mdp(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.engine == "naive":
        rel, iterations, _ = bisim.least_fixed_point(mdp, args.aux_tol)
        part = bisim.quotient(rel, mdp, args.aux_tol)
    else:
        part, iterations = bisim.partition_refine_with_rounds(mdp, args.aux_tol)
        rel = bisim.partition_to_relation(part)
    verified = bisim.apply_F(mdp, rel, args.aux_tol) == rel
    rel_path, part_path = out / "relation.csv", out / "partition.csv"
    write_relation_csv(rel, str(rel_path))
    write_partition_csv(part, str(part_path))
    summary = {
        "num_blocks": part.num_blocks,
        "iterations": iterations,
        "fixed_point_verified": bool(verified),
        "num_pairs": rel.count(),
        "engine": args.engine,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2))
    _write_manifest(out, {"command": "bisim", "engine": args.engine, "aux_tol": args.aux_tol,
                          "counting": args.counting, "mdp": args.mdp},
                    [rel_path, part_path, summary_path])
    print(json.dumps(summary))
    return EXIT_OK


def cmd_empirical_bisim(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        ds = load_dataset(args.dataset)
        r_star_d, b_star_d, index = bisim.empirical_lfp(ds, args.aux_tol)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    rel_path = out / "relation.csv"
    with open(rel_path, "w") as fh:
        fh.write("i,j\n")
        for i, j in r_star_d.pairs():
            fh.write(f"{index.obs_ids[i]},{index.obs_ids[j]}\n")
    summary = {
        "num_sources": index.num_sources,
        "pairs_in_R": r_star_d.count(),
        "transitive_complement": r_star_d.complement_is_transitive(),
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2))
    _write_manifest(out, {"command": "empirical-bisim", "dataset": args.dataset,
                          "aux_tol": args.aux_tol}, [rel_path, summary_path])
    print(json.dumps(summary))
    return EXIT_OK


def _env_config(args) -> CountingEnvConfig:
    return CountingEnvConfig(
        max_count=args.max_count,
        target_n=args.target_n,
        image_size=args.image_size,
        channels=args.channels,
        seed=args.seed,
    )


def cmd_collect(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = _env_config(args)
    collected = collect_dataset(config, steps=args.steps, action_repeat=args.action_repeat,
                                rng=np.random.default_rng(args.seed))
    ds_path, frames_path = out / "dataset.bslb", out / "frames.bsli"
    save_dataset(collected.dataset, str(ds_path))
    save_frame_sidecar(collected.ppm_frames(), str(frames_path))
    _write_manifest(out, {"command": "collect", "env": dataclasses.asdict(config),
                          "steps": args.steps, "action_repeat": args.action_repeat,
                          "seed": args.seed}, [ds_path, frames_path])
    print(json.dumps({"records": len(collected.dataset)}))
    return EXIT_OK


def _load_collected(dataset_path: str, channels: int) -> CollectedData:
    ds = load_dataset(dataset_path)
    frames_path = str(Path(dataset_path).with_name("frames.bsli"))
    blobs = load_frame_sidecar(frames_path)
    src = np.stack([parse_ppm(blobs[2 * k], channels) for k in range(len(ds))])
    succ = np.stack([parse_ppm(blobs[2 * k + 1], channels) for k in range(len(ds))])
    return CollectedData(dataset=ds, source_frames=src, successor_frames=succ)


def cmd_train(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config_fields = {f.name for f in dataclasses.fields(TrainConfig)}
    overrides = {
        k: v for k, v in getattr(args, "config_extras", {}).items() if k in config_fields
    }
    if args.steps is not None:
        overrides["steps"] = args.steps
    if args.c_p is not None:
        overrides["c_p"] = args.c_p
    if args.latent_dim is not None:
        overrides["latent_dim"] = args.latent_dim
    if args.aux is not None:
        overrides["aux_mode"] = args.aux
    if args.no_dyn_loss:
        overrides["dyn_loss_enabled"] = False
    config = preset_train_config(args.preset, args.seed, **overrides)
    if args.dataset is not None:
        env = preset_env_config(args.preset, args.seed)
        data = collected_train_data(_load_collected(args.dataset, env.channels))
    else:
        data = preset_data(args.preset, args.seed, collect_steps=args.collect_steps).train_data
    try:
        result = train(config, data)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    ckpt_path, metrics_path = out / "checkpoint.pjpa", out / "metrics.jsonl"
    save_checkpoint(result.best_params, model_config_echo(result.best_params, config), str(ckpt_path))
    result.write_metrics_jsonl(str(metrics_path))
    _write_manifest(out, {"command": "train", "preset": args.preset, "seed": args.seed,
                          "train_config": model_config_echo(result.best_params, config)["train_config"]},
                    [ckpt_path, metrics_path])
    print(json.dumps({"best_centroid_acc": result.best_centroid_acc,
                      "final": result.metrics[-1] if result.metrics else None}))
    return EXIT_OK


def _embeddings_for_checkpoint(args, params) -> analysis.EmbeddingSet:
    if params.config.obs_kind == "onehot":
        n = params.config.obs_shape[0]
        obs = np.eye(n)
        labels = np.arange(n)
        source_ids = np.arange(n)
    else:
        collected = _load_collected(args.dataset, params.config.obs_shape[0])
        rng = np.random.default_rng(args.seed)
        idx = rng.choice(len(collected.dataset), size=min(args.sample_size, len(collected.dataset)),
                         replace=False)
        obs = collected.source_frames[idx].astype(np.float64) / 255.0
        labels = collected.dataset.sources[idx]
        source_ids = labels
    vectors = encode(params, obs).data
    return analysis.EmbeddingSet(vectors=vectors, labels=labels, source_ids=source_ids)


def cmd_analyze(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params, _ = load_checkpoint(args.checkpoint)
    if params.config.obs_kind == "image" and args.dataset is None:
        print("error: image checkpoints need --dataset", file=sys.stderr)
        return EXIT_VALIDATION
    embs = _embeddings_for_checkpoint(args, params)
    dm = analysis.pairwise_distances(embs)
    proj, fractions, _ = analysis.pca_2d(embs, seed=args.seed)
    pca_path, dist_path, heat_path = out / "pca.csv", out / "distances.csv", out / "heatmap.ppm"
    analysis.write_pca_csv(proj, embs.labels, str(pca_path))
    analysis.write_distance_csv(dm, str(dist_path))
    analysis.write_heatmap_ppm(dm, str(heat_path))
    summary = {
        "nearest_centroid_accuracy": analysis.nearest_centroid_accuracy(embs.vectors, embs.labels),
        "collapse_ratio": analysis.collapse_ratio(embs.vectors, embs.labels),
        "explained_variance": fractions.tolist(),
    }
    summary_path = out / "analysis.json"
    summary_path.write_text(json.dumps(summary, indent=2))
    _write_manifest(out, {"command": "analyze", "checkpoint": args.checkpoint,
                          "dataset": args.dataset, "seed": args.seed},
                    [pca_path, dist_path, heat_path, summary_path])
    print(json.dumps(summary))
    return EXIT_OK


def cmd_verify(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if args.mdp is None and not args.counting:
        print("error: one of --mdp / --counting is required", file=sys.stderr)
        return EXIT_VALIDATION
    params, _ = load_checkpoint(args.checkpoint)
    try:
        mdp = _load_mdp(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    if params.config.obs_kind == "image" and args.dataset is None:
        print("error: image checkpoints need --dataset", file=sys.stderr)
        return EXIT_VALIDATION
    embs = _embeddings_for_checkpoint(args, params)
    r_star, _, _ = bisim.least_fixed_point(mdp)
    if args.eps_collapse == "auto":
        eps = 1e-3 * analysis.median_pairwise_distance(embs.vectors)
    else:
        eps = float(args.eps_collapse)
    report = analysis.verify_no_collapse(embs, r_star, eps)
    report_path = out / "collapse_report.json"
    report_path.write_text(report.to_json())
    _write_manifest(out, {"command": "verify", "checkpoint": args.checkpoint,
                          "eps_collapse": args.eps_collapse, "counting": args.counting,
                          "mdp": args.mdp, "seed": args.seed}, [report_path])
    print(report.to_json())
    return EXIT_OK if report.verdict == "pass" else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bisimlab")
    parser.add_argument("--config", help="JSON config file; flags override its values")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out-dir", default="out")

    p = sub.add_parser("bisim", help="exact largest bisimulation of a tabular MDP")
    add_common(p)
    p.add_argument("--mdp", help="MDP JSON file")
    p.add_argument("--counting", nargs=2, type=int, metavar=("MAX_COUNT", "TARGET_N"))
    p.add_argument("--engine", choices=("naive", "refine"), default="refine")
    p.add_argument("--aux-tol", type=float, default=0.0)
    p.add_argument("--skip-fixed-point-check", action="store_true")
    p.set_defaults(func=cmd_bisim)

    p = sub.add_parser("empirical-bisim", help="empirical largest bisimulation of a dataset")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--aux-tol", type=float, default=0.0)
    p.set_defaults(func=cmd_empirical_bisim)

    p = sub.add_parser("collect", help="roll a random policy in the counting environment")
    add_common(p)
    p.add_argument("--steps", type=int, default=6000)
    p.add_argument("--action-repeat", type=int, default=4)
    p.add_argument("--max-count", type=int, default=8)
    p.add_argument("--target-n", type=int, default=4)
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--channels", type=int, default=3)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("train", help="train a preset")
    add_common(p)
    p.add_argument("--preset", choices=PRESET_NAMES, default="tabular_counting")
    p.add_argument("--steps", type=int)
    p.add_argument("--c-p", type=float)
    p.add_argument("--latent-dim", type=int)
    p.add_argument("--aux", help="reward | random:<dim> | none")
    p.add_argument("--no-dyn-loss", action="store_true")
    p.add_argument("--dataset", help="pre-collected dataset.bslb (frames.bsli beside it)")
    p.add_argument("--collect-steps", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("analyze", help="embedding diagnostics for a checkpoint")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset")
    p.add_argument("--sample-size", type=int, default=256)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("verify", help="no-collapse check against a computed bisimulation")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mdp")
    p.add_argument("--counting", nargs=2, type=int, metavar=("MAX_COUNT", "TARGET_N"))
    p.add_argument("--dataset")
    p.add_argument("--sample-size", type=int, default=256)
    p.add_argument("--eps-collapse", default="auto")
    p.set_defaults(func=cmd_verify)
    return parser


def _collect_defaults(parser: argparse.ArgumentParser) -> dict:
    defaults = {}
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            for sub in action.choices.values():
                defaults.update(_collect_defaults(sub))
        elif action.dest != "help":
            defaults[action.dest] = action.default
    return defaults


def main(argv: list[str] | None = None) -> int:
    _cap_threads()
    parser = build_parser()
    args = parser.parse_args(argv)
    args.config_extras = {}
    if args.config:
        flag_defaults = _collect_defaults(parser)
        for key, value in json.loads(Path(args.config).read_text()).items():
            attr = key.replace("-", "_")
            if attr in flag_defaults:
                # flags given on the command line win over the config file
                if getattr(args, attr, flag_defaults[attr]) == flag_defaults[attr]:
                    setattr(args, attr, value)
            else:
                args.config_extras[attr] = value
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
