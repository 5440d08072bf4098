"""Command-line interface.

Exit codes: 0 on success, 2 on usage errors, 1 on runtime failures.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import default_config, load_config
from .errors import BridgeQAError
from .gradcheck import gradcheck_config, model_gradient_report
from .model import mask_names
from .synth import SPLITS, TaskSpec, generate, spec_from_config
from .tensorfile import load_dataset, load_params, save_dataset, save_params
from .train import (ablate, analyze_scales, evaluate, sweep_alpha, train,
                    write_ablation_csv, write_metrics_jsonl, write_scales_csv,
                    write_sweep_csv)

GRADCHECK_THRESHOLD = 1e-4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bridgeqa",
                                     description="Temporal sequence question answering toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--kind", choices=("trend", "event", "mixed"), required=True)
    synth.add_argument("--seed", type=int, default=1)
    synth.add_argument("--out", default="dataset")
    synth.add_argument("--frames", type=int, default=16)
    synth.add_argument("--dim", type=int, default=32)
    synth.add_argument("--question-len", type=int, default=4)
    synth.add_argument("--candidates", type=int, default=None,
                       help="defaults to 2 (trend), 3 (event), or 5 (mixed)")
    synth.add_argument("--train", type=int, default=2000)
    synth.add_argument("--val", type=int, default=500)
    synth.add_argument("--test", type=int, default=500)
    synth.add_argument("--noise", type=float, default=0.1)
    synth.add_argument("--jump", type=float, default=1.0)
    synth.add_argument("--drift", type=float, default=0.75)
    synth.add_argument("--trend-fraction", type=float, default=0.5)

    tr = sub.add_parser("train", help="train a model and save metrics plus parameters")
    tr.add_argument("--config", required=True)
    tr.add_argument("--data", default=None, help="dataset directory; generated from the config if omitted")
    tr.add_argument("--out", required=True)
    tr.add_argument("--seed", type=int, default=None)
    tr.add_argument("--epochs", type=int, default=None)

    ev = sub.add_parser("eval", help="evaluate saved parameters on a dataset split")
    ev.add_argument("--params", required=True)
    ev.add_argument("--data", default=None)
    ev.add_argument("--split", choices=SPLITS, default="test")

    ab = sub.add_parser("ablate", help="train one model variant per mask")
    ab.add_argument("--config", required=True)
    ab.add_argument("--masks", required=True, help=f"comma-separated names from: {', '.join(mask_names())}")
    ab.add_argument("--data", default=None)
    ab.add_argument("--out", required=True)

    sw = sub.add_parser("sweep-alpha", help="train across a grid of blend weights")
    sw.add_argument("--config", required=True)
    sw.add_argument("--grid", default=None, help="comma-separated weights; default 0,0.1,...,1")
    sw.add_argument("--data", default=None)
    sw.add_argument("--out", required=True)

    an = sub.add_parser("analyze", help="per-frame scale profile of the temporal branches")
    an.add_argument("--params", required=True)
    an.add_argument("--data", default=None)
    an.add_argument("--split", choices=SPLITS, default="test")
    an.add_argument("--out", required=True)

    gc = sub.add_parser("gradcheck", help="compare tape gradients against finite differences")
    gc.add_argument("--seed", type=int, default=7)
    gc.add_argument("--d", type=int, default=8)
    gc.add_argument("--n", type=int, default=6)
    gc.add_argument("--l", type=int, default=3)
    gc.add_argument("--m", type=int, default=3)
    gc.add_argument("--heads", type=int, default=4)
    gc.add_argument("--h", type=float, default=1e-5)
    return parser


def _splits_for(cfg, data_dir):
    if data_dir is None:
        return generate(spec_from_config(cfg))
    spec, splits = load_dataset(data_dir)
    mismatches = [name for name in ("n_frames", "feature_dim", "question_len", "num_candidates")
                  if getattr(spec, name) != getattr(cfg, name)]
    if mismatches:
        raise BridgeQAError(f"dataset does not match the config on: {', '.join(mismatches)}")
    return splits


def _cmd_synth(args) -> int:
    candidates = args.candidates
    if candidates is None:
        candidates = {"trend": 2, "event": 3, "mixed": 5}[args.kind]
    spec = TaskSpec(kind=args.kind, n_frames=args.frames, feature_dim=args.dim,
                    question_len=args.question_len, num_candidates=candidates,
                    train_count=args.train, val_count=args.val, test_count=args.test,
                    noise=args.noise, jump=args.jump, drift=args.drift,
                    trend_fraction=args.trend_fraction, seed=args.seed)
    splits = generate(spec)
    save_dataset(args.out, spec, splits)
    counts = ", ".join(f"{name}={len(samples)}" for name, samples in splits.items())
    print(f"wrote {args.kind} dataset to {args.out} ({counts})")
    return 0


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.epochs is not None:
        cfg = replace(cfg, epochs=args.epochs)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    data = _splits_for(cfg, args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    result = train(cfg, data)
    write_metrics_jsonl(out / "metrics.jsonl", result.history)
    save_params(out / "params", result.model)
    print(f"test accuracy {result.test.accuracy:.4f} (loss {result.test.loss:.4f})")
    return 0


def _cmd_eval(args) -> int:
    model = load_params(args.params)
    data = _splits_for(model.cfg, args.data)
    samples = data.get(args.split, [])
    metrics = evaluate(model, samples, split=args.split)
    print(f"{args.split} accuracy {metrics.accuracy:.4f} (loss {metrics.loss:.4f}, "
          f"{len(samples)} samples)")
    return 0


def _cmd_ablate(args) -> int:
    cfg = load_config(args.config)
    masks = [token for token in (part.strip() for part in args.masks.split(",")) if token]
    data = _splits_for(cfg, args.data)
    rows = ablate(cfg, masks, data)
    write_ablation_csv(args.out, cfg, rows)
    for row in rows:
        print(f"{row.mask}: accuracy {row.metrics.accuracy:.4f}")
    return 0


def _cmd_sweep_alpha(args) -> int:
    cfg = load_config(args.config)
    if args.grid is None:
        grid = [round(0.1 * i, 1) for i in range(11)]
    else:
        grid = [float(part) for part in args.grid.split(",") if part.strip()]
    data = _splits_for(cfg, args.data)
    rows, best = sweep_alpha(cfg, grid, data)
    write_sweep_csv(args.out, cfg, rows)
    for row in rows:
        print(f"alpha {row.alpha:g}: accuracy {row.metrics.accuracy:.4f}")
    print(f"best alpha for task {cfg.task}: {best:g}")
    return 0


def _cmd_analyze(args) -> int:
    model = load_params(args.params)
    data = _splits_for(model.cfg, args.data)
    analysis = analyze_scales(model, data.get(args.split, []))
    write_scales_csv(args.out, analysis)
    print(f"wrote per-frame scale profile for {analysis.smooth_dev.shape[0]} samples to {args.out}")
    return 0


def _cmd_gradcheck(args) -> int:
    cfg = gradcheck_config(n_frames=args.n, feature_dim=args.d, question_len=args.l,
                           num_candidates=args.m, heads=args.heads)
    report = model_gradient_report(cfg, seed=args.seed, h=args.h)
    worst = 0.0
    for group in sorted(report):
        print(f"{group:8s} max rel err {report[group]:.3e}")
        worst = max(worst, report[group])
    if worst > GRADCHECK_THRESHOLD:
        print(f"gradcheck FAILED: {worst:.3e} > {GRADCHECK_THRESHOLD:.0e}")
        return 1
    print(f"gradcheck passed: {worst:.3e} <= {GRADCHECK_THRESHOLD:.0e}")
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
    "sweep-alpha": _cmd_sweep_alpha,
    "analyze": _cmd_analyze,
    "gradcheck": _cmd_gradcheck,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (BridgeQAError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
