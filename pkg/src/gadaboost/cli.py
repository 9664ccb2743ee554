"""Command-line front end: train, detect, eval, bench, enumerate.

Configuration is a flat ``key = value`` text file (unknown keys are
rejected); the ``GADABOOST_SEED`` environment variable overrides the
configured seed and ``--seed`` overrides both. Exit codes: 0 success,
1 usage error, 2 data/configuration error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boost import StageGoal
from .cascade import (
    TrainConfig,
    TrainingDataError,
    load_cascade,
    save_cascade,
    train_cascade,
)
from .detect import detect, group_detections
from .evaluate import aggregate_runs, roc_points
from .ga import GaConfig
from .haar import feature_space_size
from .imgio import (
    AnnotationRecord,
    ImageFormatError,
    load_annotations,
    normalize_window,
    read_detections_csv,
    read_gray,
    write_detections_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

SEED_ENV = "GADABOOST_SEED"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage problems, not argparse's 2
        raise _UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """Everything a training run needs, parse-validated up front."""

    window_width: int = 24
    window_height: int = 24
    num_stages: int = 17
    pos_per_stage: int = 500
    neg_per_stage: int = 500
    min_hit_rate: float = 0.9
    max_false_alarm: float = 0.5
    max_weak_count: int = 100
    mode: str = "baseline"
    population_size: int = 1000
    max_iterations: int = 50
    dummy_weak_count: int = 3
    dedup_iou_threshold: float = 0.4
    saturation_epsilon: float = 0.005
    saturation_patience: int = 3
    crossover_fraction: float = 0.8
    mutation_probability: float = 0.2
    carry_weights_between_dummies: bool = True
    carry_weights_into_real_stage: bool = False
    seed: int = 0
    threads: int = 1
    max_harvest_attempts: int = 200_000
    pos_dir: str = ""
    neg_dir: str = ""
    scale_factor: float = 1.25
    step: int = 2
    min_neighbors: int = 2

    def train_config(self) -> TrainConfig:
        ga = None
        if self.mode == "ga":
            ga = GaConfig(
                population_size=self.population_size,
                max_iterations=self.max_iterations,
                dummy_weak_count=self.dummy_weak_count,
                dedup_iou_threshold=self.dedup_iou_threshold,
                saturation_epsilon=self.saturation_epsilon,
                saturation_patience=self.saturation_patience,
                crossover_fraction=self.crossover_fraction,
                mutation_probability=self.mutation_probability,
                carry_weights_between_dummies=self.carry_weights_between_dummies,
                carry_weights_into_real_stage=self.carry_weights_into_real_stage,
                rng_seed=self.seed,
            )
        return TrainConfig(
            window_w=self.window_width,
            window_h=self.window_height,
            num_stages=self.num_stages,
            pos_per_stage=self.pos_per_stage,
            neg_per_stage=self.neg_per_stage,
            stage_goal=StageGoal(self.min_hit_rate, self.max_false_alarm,
                                 self.max_weak_count),
            mode=self.mode,
            ga=ga,
            rng_seed=self.seed,
            max_harvest_attempts=self.max_harvest_attempts,
        )


def _parse_value(raw: str, target_type: type):
    raw = raw.strip()
    if target_type is bool:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    return target_type(raw)


def load_config(path: str) -> RunConfig:
    """Parse a flat key=value config file; unknown keys are errors."""
    spec = {f.name: f.type for f in fields(RunConfig)}
    types = {"int": int, "float": float, "str": str, "bool": bool}
    cfg = RunConfig()
    base = os.path.dirname(os.path.abspath(path))
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in spec:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            t = types[spec[key]] if isinstance(spec[key], str) else spec[key]
            try:
                value = _parse_value(raw, t)
            except ValueError as e:
                raise ValueError(f"{path}:{lineno}: {e}") from e
            setattr(cfg, key, value)
    if env_seed := os.environ.get(SEED_ENV):
        cfg.seed = int(env_seed)
    if cfg.mode not in ("baseline", "ga"):
        raise ValueError(f"{path}: mode must be 'baseline' or 'ga'")
    for attr in ("pos_dir", "neg_dir"):
        if (value := getattr(cfg, attr)) and not os.path.isabs(value):
            setattr(cfg, attr, os.path.join(base, value))
    return cfg


def _list_images(directory: str) -> List[str]:
    exts = (".pgm", ".png", ".jpg", ".jpeg", ".bmp")
    try:
        names = sorted(os.listdir(directory))
    except OSError as e:
        raise ValueError(f"cannot list {directory}: {e}") from e
    return [os.path.join(directory, n) for n in names
            if n.lower().endswith(exts)]


def _ingest_training_data(cfg: RunConfig) -> Tuple[List[np.ndarray], List[np.ndarray]]:
    if not cfg.pos_dir or not cfg.neg_dir:
        raise ValueError("config must set pos_dir and neg_dir")
    pos = []
    for p in _list_images(cfg.pos_dir):
        img = read_gray(p)
        if img.shape != (cfg.window_height, cfg.window_width):
            raise ValueError(
                f"{p}: expected {cfg.window_width}x{cfg.window_height} window, "
                f"got {img.shape[1]}x{img.shape[0]}"
            )
        pos.append(normalize_window(img))
    neg = [read_gray(p) for p in _list_images(cfg.neg_dir)]
    if not pos or not neg:
        raise ValueError("positive or negative directory is empty")
    return pos, neg


def _write_trace_csv(path: str, report) -> None:
    with open(path, "w") as fh:
        fh.write("stage,generation,best_fitness,mean_fitness,dedup_dropped,refill_count\n")
        for sr in report.stages:
            for t in sr.ga_trace or ():
                fh.write(f"{sr.index},{t.generation},{t.best_fitness!r},"
                         f"{t.mean_fitness!r},{t.dedup_dropped},{t.refill_count}\n")


def _run_train(cfg: RunConfig, out_path: str) -> Tuple[object, object]:
    pos, neg = _ingest_training_data(cfg)
    cascade, report = train_cascade(pos, neg, cfg.train_config())
    save_cascade(cascade, out_path)
    with open(out_path + ".report.json", "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    _write_trace_csv(out_path + ".trace.csv", report)
    return cascade, report


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.threads is not None:
        cfg.threads = args.threads
    _, report = _run_train(cfg, args.out)
    d = report.to_dict()
    print(f"trained {len(d['stages'])} stage(s) in {d['wall_clock_s']:.2f}s, "
          f"{d['features_evaluated']} feature evaluations"
          + (" (stopped early: negatives exhausted)" if d["early_stopped"] else ""))
    print(f"model written to {args.out}")
    return EXIT_OK


def cmd_detect(args) -> int:
    cascade = load_cascade(args.model)
    paths = _list_images(args.images)
    rows = []
    skipped = 0

    def one(path: str):
        img = read_gray(path)
        dets = group_detections(
            detect(img, cascade, args.scale_factor, args.step),
            args.min_neighbors,
        )
        return [(os.path.basename(path), *d.box, d.score) for d in dets]

    threads = max(1, args.threads or 1)
    if threads == 1:
        results = []
        for p in paths:
            try:
                results.append(one(p))
            except ImageFormatError as e:
                print(f"warning: skipping {p}: {e}", file=sys.stderr)
                skipped += 1
    else:
        # per-image work is independent; ordered collection keeps output stable
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as ex:
            futures = [ex.submit(one, p) for p in paths]
            results = []
            for p, fut in zip(paths, futures):
                try:
                    results.append(fut.result())
                except ImageFormatError as e:
                    print(f"warning: skipping {p}: {e}", file=sys.stderr)
                    skipped += 1
    for r in results:
        rows.extend(r)
    write_detections_csv(args.out, rows)
    print(f"{len(rows)} detection(s) over {len(paths) - skipped} image(s), "
          f"{skipped} skipped")
    return EXIT_OK


def _detections_by_image(rows) -> Dict[str, List[Tuple[tuple, float]]]:
    out: Dict[str, List[Tuple[tuple, float]]] = {}
    for image, x, y, w, h, score in rows:
        out.setdefault(image, []).append(((x, y, w, h), score))
    return out


def cmd_eval(args) -> int:
    records = load_annotations(args.annotations, check_files=not args.no_check_files)
    gts = {r.image: list(r.boxes) for r in records}
    curves = []
    for det_path in args.detections:
        rows = read_detections_csv(det_path)
        dets = _detections_by_image(rows)
        missing = set(dets) - set(gts)
        if missing:
            raise ValueError(
                f"{det_path}: detections for unannotated image(s): {sorted(missing)[:3]}"
            )
        curves.append(roc_points(dets, gts))

    out = args.out
    for i, curve in enumerate(curves):
        path = out if len(curves) == 1 else f"{out}.run{i}.csv"
        with open(path, "w") as fh:
            fh.write("threshold,false_positives,true_positive_rate\n")
            for p in curve:
                fh.write(f"{p.score_threshold!r},{p.false_positive_count},"
                         f"{p.true_positive_rate!r}\n")
    if len(curves) > 1:
        grid = sorted({p.false_positive_count for c in curves for p in c})
        with open(out + ".aggregate.csv", "w") as fh:
            fh.write("fp,min_tpr,mean_tpr,max_tpr\n")
            for fp, lo, mean, hi in aggregate_runs(curves, grid):
                fh.write(f"{fp},{lo!r},{mean!r},{hi!r}\n")

    total_gt = sum(len(b) for b in gts.values())
    for i, curve in enumerate(curves):
        best = curve[-1] if curve else None
        tpr = best.true_positive_rate if best else 0.0
        fp = best.false_positive_count if best else 0
        print(f"run {i}: {total_gt} ground truth, final tpr {tpr:.3f} at {fp} fp")
    return EXIT_OK


_CELL_KEYS = {"pop": "population_size", "iters": "max_iterations",
              "dummy": "dummy_weak_count"}


def _parse_cells(spec: str) -> List[Tuple[str, Dict[str, int]]]:
    cells = []
    for token in spec.split(","):
        token = token.strip()
        if not token:
            continue
        parts = token.split(":")
        mode = parts[0]
        if mode not in ("baseline", "ga"):
            raise ValueError(f"unknown bench cell {token!r}")
        overrides = {}
        for p in parts[1:]:
            key, _, val = p.partition("=")
            if key not in _CELL_KEYS:
                raise ValueError(f"unknown cell parameter {key!r} in {token!r}")
            overrides[_CELL_KEYS[key]] = int(val)
        cells.append((token, {"mode": mode, **overrides}))
    if not cells:
        raise ValueError("no bench cells given")
    return cells


def cmd_bench(args) -> int:
    base = load_config(args.config)
    if args.seed is not None:
        base.seed = args.seed
    cells = _parse_cells(args.cells)
    pos, neg = _ingest_training_data(base)

    os.makedirs(args.out, exist_ok=True)
    rows = []
    baseline_time = None
    baseline_evals = None
    for name, overrides in cells:
        cfg = RunConfig(**{**base.__dict__, **overrides})
        t0 = time.perf_counter()
        cascade, report = train_cascade(pos, neg, cfg.train_config())
        wall = time.perf_counter() - t0
        save_cascade(cascade, os.path.join(args.out, f"model_{name.replace(':', '_')}.txt"))
        if overrides["mode"] == "baseline" and baseline_time is None:
            baseline_time = wall
            baseline_evals = report.features_evaluated
        rows.append((name, wall, report.features_evaluated, len(cascade.stages),
                     report.early_stopped))

    table_path = os.path.join(args.out, "bench.csv")
    with open(table_path, "w") as fh:
        fh.write("cell,wall_clock_s,features_evaluated,stages,early_stopped,"
                 "time_vs_baseline,evals_vs_baseline\n")
        for name, wall, evals, n_stages, early in rows:
            tr = wall / baseline_time if baseline_time else float("nan")
            er = evals / baseline_evals if baseline_evals else float("nan")
            fh.write(f"{name},{wall!r},{evals},{n_stages},{int(early)},{tr!r},{er!r}\n")
            print(f"{name:24s} {wall:9.2f}s  {evals:12d} evals  "
                  f"x{tr:.3f} time  x{er:.3f} evals")
    print(f"bench table written to {table_path}")
    return EXIT_OK


def cmd_enumerate(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        w, h = cfg.window_width, cfg.window_height
    else:
        w, h = args.width, args.height
    if w < 1 or h < 1:
        raise ValueError("window dimensions must be >= 1")
    print(feature_space_size(w, h))
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="gadaboost",
                     description="Haar cascade training with genetic feature search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a cascade from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="run a model over a directory of images")
    p.add_argument("--model", required=True)
    p.add_argument("--images", required=True, help="directory of input images")
    p.add_argument("--out", required=True, help="detections CSV to write")
    p.add_argument("--scale-factor", type=float, default=1.25)
    p.add_argument("--step", type=int, default=2)
    p.add_argument("--min-neighbors", type=int, default=2)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="score detections against annotations")
    p.add_argument("--detections", required=True, nargs="+")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", required=True, help="ROC CSV to write")
    p.add_argument("--no-check-files", action="store_true",
                   help="skip existence checks on annotated image paths")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="train a matrix of configurations and compare")
    p.add_argument("--config", required=True)
    p.add_argument("--cells", default="baseline,ga",
                   help="comma list, e.g. baseline,ga:pop=500:iters=10")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("enumerate", help="print the feature-space size of a window")
    p.add_argument("--width", type=int, default=24)
    p.add_argument("--height", type=int, default=24)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_enumerate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        print(str(e), file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, OSError, TrainingDataError, ImageFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
