"""Command-line interface.

Subcommands:
  synth         generate a synthetic CFS1 stream + manifest
  run           run the incremental pipeline over a stream
  eval          score a saved checkpoint on a stream's eval split
  bench         time the update kernels (and optionally backends)
  export-check  validate CFS1 files in a directory

Every command accepts --config MANIFEST.json; explicit flags
override file values.  Exit codes: 0 ok, 2 config error, 3 data
error, 4 numeric failure.
"""

import argparse
import csv
import dataclasses
import json
import os
import sys

from .errors import ConfigError, DataError, NumericError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _add_config_flags(p):
    from .protocol import MODALITIES, SETTINGS, UPDATE_MODES

    p.add_argument("--config", help="JSON manifest; flags override its values")
    p.add_argument("--setting", choices=SETTINGS)
    p.add_argument("--modality", choices=MODALITIES)
    p.add_argument("--n-classes", type=int, dest="n_classes")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--d-encoder", type=int, dest="d_encoder")
    p.add_argument("--d-expanded", type=int, dest="d_expanded")
    p.add_argument("--points-per-class", type=int, dest="points_per_class")
    p.add_argument("--cluster-spread", type=float, dest="cluster_spread")
    p.add_argument("--seed", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--k-neighbors", type=int, dest="k_neighbors")
    p.add_argument("--scale", type=float)
    p.add_argument("--chunk-rows", type=int, dest="chunk_rows")
    p.add_argument("--mode", choices=UPDATE_MODES)
    p.add_argument("--threads", type=int)
    p.add_argument("--stream-dir", dest="stream_dir")
    p.add_argument("--checkpoint", dest="checkpoint_path")
    p.add_argument("--metrics-out", dest="metrics_path")


def _build_config(args):
    from .protocol import RunConfig

    data = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as f:
            data = json.load(f)
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown manifest keys: {sorted(unknown)}")
    for f in dataclasses.fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            data[f.name] = v
    return RunConfig(**data)


def _limit_threads(config):
    if config.threads and config.threads > 0:
        try:
            from threadpoolctl import threadpool_limits
        except ImportError as err:
            raise ConfigError(
                "--threads requires the threadpoolctl package"
            ) from err
        return threadpool_limits(limits=config.threads)
    import contextlib

    return contextlib.nullcontext()


def _require(config, field_name):
    value = getattr(config, field_name)
    if not value:
        raise ConfigError(f"{field_name} must be set (flag or manifest)")
    return value


def cmd_synth(args):
    from . import stream as cfs
    from .protocol import synth_generate

    config = _build_config(args)
    out_dir = _require(config, "stream_dir")
    batches, (eval_feats, eval_labels, eval_coords) = synth_generate(config)
    os.makedirs(out_dir, exist_ok=True)
    for batch in batches:
        cfs.write_step(
            out_dir, batch.step_index, batch.features, batch.raw_labels, batch.coords
        )
    cfs.write_step(out_dir, 0, eval_feats, eval_labels, eval_coords)
    config.save(os.path.join(out_dir, "manifest.json"))
    print(f"wrote {len(batches)} step files + eval split to {out_dir}")
    return EXIT_OK


def _load_batches(config):
    from . import stream as cfs
    from .protocol import StepBatch, class_schedule

    stream_dir = _require(config, "stream_dir")
    schedule = class_schedule(config.n_classes, config.m, config.n)
    steps = cfs.list_steps(stream_dir)
    if steps != list(range(1, len(schedule) + 1)):
        raise DataError(
            f"stream has steps {steps}, schedule expects 1..{len(schedule)}"
        )
    batches = []
    for t in steps:
        feats, labels, coords, sidecar = cfs.read_step(stream_dir, t)
        if sidecar["d_encoder"] != config.d_encoder:
            raise DataError(
                f"step {t}: d_encoder {sidecar['d_encoder']} != config {config.d_encoder}"
            )
        batches.append(
            StepBatch(
                features=feats,
                raw_labels=labels,
                step_index=t,
                new_classes=schedule[t - 1],
                coords=coords,
            )
        )
    eval_feats, eval_labels, eval_coords, _ = cfs.read_step(stream_dir, 0)
    return batches, (eval_feats, eval_labels, eval_coords)


def _write_metrics(path, per_step):
    rows = []
    for step, metrics, wall in per_step:
        row = {"step": step}
        row.update(metrics.row())
        rows.append((row, wall))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["step", "miou_base", "miou_incremental", "miou_all", "miou_all_no_bg",
             "wall_time_s"]
        )
        for row, wall in rows:
            writer.writerow(
                [row["step"], f"{row['miou_base']:.17g}",
                 f"{row['miou_incremental']:.17g}", f"{row['miou_all']:.17g}",
                 f"{row['miou_all_no_bg']:.17g}", f"{wall:.6f}"]
            )
    json_path = os.path.splitext(path)[0] + ".json"
    payload = []
    for step, metrics, _ in per_step:
        payload.append(
            {
                "step": step,
                **metrics.row(),
                "per_class_iou": {str(k): v for k, v in metrics.per_class_iou.items()},
            }
        )
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return json_path


def cmd_run(args):
    from .analytic import save_checkpoint
    from .protocol import run_from_config

    config = _build_config(args)
    stream_dir = _require(config, "stream_dir")
    if not config.checkpoint_path:
        config.checkpoint_path = os.path.join(stream_dir, "final.ckpt")
    if not config.metrics_path:
        config.metrics_path = os.path.join(stream_dir, "metrics.csv")
    batches, eval_data = _load_batches(config)
    with _limit_threads(config):
        state, per_step = run_from_config(config, batches, eval_data)
    save_checkpoint(state, config.checkpoint_path)
    config.save(os.path.join(stream_dir, "manifest.json"))
    json_path = _write_metrics(config.metrics_path, per_step)
    final = per_step[-1][1]
    print(
        f"final step {state.step_index}: miou_all={final.miou_all:.4f} "
        f"(base={final.miou_base:.4f}, incremental={final.miou_incremental:.4f})"
    )
    print(f"checkpoint: {config.checkpoint_path}")
    print(f"metrics: {config.metrics_path}, {json_path}")
    return EXIT_OK


def cmd_eval(args):
    from . import stream as cfs
    from .analytic import load_checkpoint
    from .expansion import build_projector, expand
    from .protocol import class_schedule, evaluate_state

    config = _build_config(args)
    stream_dir = _require(config, "stream_dir")
    ckpt = _require(config, "checkpoint_path")
    state = load_checkpoint(ckpt)
    eval_feats, eval_labels, _, _ = cfs.read_step(stream_dir, 0)
    projector = build_projector(config.seed, config.d_encoder, config.d_expanded, config.scale)
    with _limit_threads(config):
        expanded = expand(projector, eval_feats, config.chunk_rows)
        base_ids = class_schedule(config.n_classes, config.m, config.n)[0]
        metrics = evaluate_state(state, expanded, eval_labels, base_ids, config.background_id)
    payload = {**metrics.row(),
               "per_class_iou": {str(k): v for k, v in metrics.per_class_iou.items()}}
    print(json.dumps(payload, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_bench(args):
    from .bench import run_bench

    config = _build_config(args)
    sizes = tuple(int(s) for s in args.sizes.split(","))
    with _limit_threads(config):
        report = run_bench(
            sizes=sizes,
            n_rows=args.rows,
            seed=config.seed,
            single_pass=args.single_pass,
            kernels_section=args.kernels,
            sp_rows=args.single_pass_rows,
        )
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)
    return EXIT_OK


def cmd_export_check(args):
    from .stream import check_stream

    report = check_stream(args.stream_dir)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if report["ok"] else EXIT_DATA


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rlseg",
        description="class-incremental segmentation engine with closed-form updates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic CFS1 stream")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the incremental pipeline over a stream")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a checkpoint on a stream's eval split")
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="time update kernels")
    _add_config_flags(p)
    p.add_argument("--sizes", default="256,512,1024", help="comma-separated d_expanded list")
    p.add_argument("--rows", type=int, default=128, help="batch rows per timed update")
    p.add_argument("--single-pass", action="store_true",
                   help="compare one update against a 10-epoch SGD reference at d=4096")
    p.add_argument("--single-pass-rows", type=int, default=8192)
    p.add_argument("--kernels", action="store_true", help="compare numba vs numpy kernels")
    p.add_argument("--out", help="write the JSON report here as well as stdout")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-check", help="validate CFS1 files in a directory")
    p.add_argument("--stream-dir", required=True)
    p.set_defaults(func=cmd_export_check)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
