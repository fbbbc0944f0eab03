"""Command-line entry point: ``hsmatch {synth,detect,eval,gradcheck}``.

Exit status is 0 on success, 2 for usage errors (bad flags, missing input
files, invalid configuration) and 1 when a stage fails at runtime.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import embednet, evaluation, io, pipeline, synth

EXIT_RUNTIME = 1
EXIT_USAGE = 2

log = logging.getLogger("hsmatch")


class UsageError(Exception):
    pass


def _flag(name):
    return "--" + name.replace("_", "-")


# --------------------------------------------------------------------------
# synth


_SCENE_FLAGS = {
    "width": int, "height": int, "bands": int, "endmembers": int, "target_index": int,
    "targets": int, "confusers": int, "noise": float, "dirichlet": float,
    "n_priors": int, "smoothing": int, "seed": int,
}


def cmd_synth(args) -> int:
    kw = {k: getattr(args, k) for k in _SCENE_FLAGS if getattr(args, k) is not None}
    if args.abundance is not None:
        kw["abundance"] = tuple(args.abundance)
    if args.no_confuser:
        kw["confuser_correlation"] = None
    elif args.confuser_correlation is not None:
        kw["confuser_correlation"] = args.confuser_correlation
    try:
        spec = synth.SceneSpec(**kw)
    except ValueError as exc:
        raise UsageError(f"invalid scene: {exc}") from exc
    scene = synth.generate_scene(spec)
    out = io.ensure_dir(args.out)
    io.write_envi(scene.cube, out / "scene.hdr")
    io.write_mask(scene.truth, out / "mask.txt")
    io.write_prior_spectra(scene.priors, out / "priors.csv")
    # coordinates of randomly chosen true targets, the alternative prior input
    rng = np.random.default_rng(spec.seed)
    tgt = np.flatnonzero(scene.truth.labels)
    pick = np.sort(rng.choice(tgt, size=min(spec.n_priors, tgt.size), replace=False))
    np.savetxt(out / "prior_coords.txt", np.c_[pick // spec.width, pick % spec.width],
               fmt="%d", delimiter=",")
    print(f"wrote {spec.width}x{spec.height}x{spec.bands} scene to {out}")
    return 0


# --------------------------------------------------------------------------
# detect


def _config_from_args(args) -> io.PipelineConfig:
    overrides = {f.name: getattr(args, "cfg_" + f.name) for f in fields(io.PipelineConfig)}
    if args.config and not Path(args.config).is_file():
        raise UsageError(f"config file not found: {args.config}")
    try:
        return io.load_config(args.config, **overrides)
    except io.ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _write_trace(trace: embednet.TrainTrace, path):
    with open(path, "w") as fh:
        fh.write("epoch,loss,accuracy\n")
        for i, loss in enumerate(trace.loss):
            acc = repr(float(trace.accuracy[i])) if i < len(trace.accuracy) else ""
            fh.write(f"{i},{float(loss)!r},{acc}\n")


def cmd_detect(args) -> int:
    cfg = _config_from_args(args)
    if not cfg.cube:
        raise UsageError("no input cube (--cube)")
    if not cfg.priors and not cfg.prior_coords:
        raise UsageError("no priors given (--priors or --prior-coords)")
    for key in ("cube", "priors", "prior_coords", "mask"):
        path = getattr(cfg, key)
        if path and not Path(path).is_file():
            raise UsageError(f"{key.replace('_', '-')} file not found: {path}")
    out = io.ensure_dir(cfg.output_dir or "out")

    cube = io.load_envi(cfg.cube)
    if cfg.priors:
        priors = io.load_prior_spectra(cfg.priors)
    else:
        priors = io.load_prior_coords(cfg.prior_coords, cube)
    result = pipeline.run(cube, priors, cfg, detector=args.detector, threads=args.threads)

    ext = "pgm" if args.format == "pgm16" else "csv"
    outputs = {}

    def emit(key, name, writer, *payload):
        writer(*payload, out / name)
        outputs[key] = name

    emit("score_map", f"score_{args.detector}.{ext}",
         lambda m, p: io.write_score_map(m, p, args.format), result.score_map)
    if result.detector == "learned":
        emit("cem_map", f"score_cem.{ext}",
             lambda m, p: io.write_score_map(m, p, args.format), result.cem_map)
        emit("checkpoint", "encoder.ckpt", embednet.save_checkpoint, result.params)
        emit("pretext_trace", "pretext_trace.csv", _write_trace, result.pretext_trace)
        emit("npair_trace", "npair_trace.csv", _write_trace, result.npair_trace)
    emit("config", "config.txt", io.write_config, cfg)

    aucs = {}
    if cfg.mask:
        truth = io.load_mask(cfg.mask, cube.width, cube.height)
        aucs[result.detector] = evaluation.roc_curve(result.score_map, truth).auc
        if result.detector == "learned":
            aucs["cem"] = evaluation.roc_curve(result.cem_map, truth).auc

    manifest = {
        "detector": result.detector,
        "seed": cfg.seed,
        "config": cfg.as_dict(),
        "outputs": outputs,
        "auc": aucs,
        "timings": result.timings,
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    for name, auc in aucs.items():
        print(f"AUC {name}: {auc:.6f}")
    print(f"wrote {out / outputs['score_map']}")
    return 0


# --------------------------------------------------------------------------
# eval


def cmd_eval(args) -> int:
    maps = {}
    for item in args.map:
        name, sep, path = item.partition("=")
        if not sep:
            name, path = Path(item).stem, item
        if not Path(path).is_file():
            raise UsageError(f"score map not found: {path}")
        maps[name] = io.read_score_map(path)
    if not Path(args.truth).is_file():
        raise UsageError(f"ground truth not found: {args.truth}")
    first = next(iter(maps.values()))
    for name, m in maps.items():
        if (m.width, m.height) != (first.width, first.height):
            raise ValueError(f"map '{name}' is {m.width}x{m.height}, "
                             f"expected {first.width}x{first.height}")
    truth = io.load_mask(args.truth, first.width, first.height)
    out = io.ensure_dir(args.out) if args.out else None
    results = {}
    for name, m in maps.items():
        curve = evaluation.roc_curve(m, truth)
        results[name] = {args.scene: curve.auc}
        if out is not None:
            evaluation.write_roc_csv(curve, out / f"roc_{name}.csv")
    table = evaluation.comparison_table(results)
    if out is not None:
        (out / "auc_table.txt").write_text(table)
    sys.stdout.write(table)
    return 0


# --------------------------------------------------------------------------
# gradcheck


def cmd_gradcheck(args) -> int:
    reports = embednet.gradient_suite(range(args.seeds), bands=args.bands, step=args.step,
                                      max_params=args.max_params)
    worst = {}
    for loss, seed, rep in reports:
        worst[loss] = max(worst.get(loss, 0.0), rep.max_rel_error)
        if args.verbose:
            print(f"{loss:14s} seed {seed:3d}  max rel err {rep.max_rel_error:.3e}  "
                  f"checked {rep.checked}  kinks skipped {rep.skipped_kinks}")
    for loss, err in worst.items():
        print(f"{loss}: max relative error {err:.3e}")
    overall = max(worst.values())
    print(f"max relative error {overall:.3e}")
    return 0 if overall < args.tolerance else EXIT_RUNTIME


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hsmatch", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic scene")
    sp.add_argument("--out", required=True, help="output directory")
    for name, typ in _SCENE_FLAGS.items():
        sp.add_argument(_flag(name), type=typ, dest=name)
    sp.add_argument("--abundance", type=float, nargs=2, metavar=("LO", "HI"))
    sp.add_argument("--confuser-correlation", type=float)
    sp.add_argument("--no-confuser", action="store_true")
    sp.set_defaults(func=cmd_synth)

    dp = sub.add_parser(
        "detect", help="run a detector on an ENVI cube",
        description="Every configuration key can be given as a flag; flags override --config.")
    dp.add_argument("--detector", choices=pipeline.DETECTORS, default="learned")
    dp.add_argument("--config", help="key = value configuration file")
    dp.add_argument("--threads", type=int, default=1, help="inference worker threads")
    dp.add_argument("--format", choices=("csv", "pgm16"), default="csv",
                    help="score map file format")
    grp = dp.add_argument_group("configuration overrides")
    for f in fields(io.PipelineConfig):
        alias = {"output_dir": ["--out"]}.get(f.name, [])
        grp.add_argument(_flag(f.name), *alias, dest="cfg_" + f.name, metavar="VALUE")
    dp.set_defaults(func=cmd_detect)

    ep = sub.add_parser("eval", help="ROC curves and AUC table for score maps")
    ep.add_argument("--truth", required=True, help="ground-truth mask")
    ep.add_argument("--map", action="append", required=True, metavar="[NAME=]PATH",
                    help="score map (repeatable)")
    ep.add_argument("--scene", default="scene", help="column label in the AUC table")
    ep.add_argument("--out", help="directory for ROC CSVs and the AUC table")
    ep.set_defaults(func=cmd_eval)

    gp = sub.add_parser("gradcheck", help="finite-difference check of the encoder gradients")
    gp.add_argument("--seeds", type=int, default=20)
    gp.add_argument("--bands", type=int, default=16)
    gp.add_argument("--step", type=float, default=1e-4)
    gp.add_argument("--max-params", type=int, default=300,
                    help="parameters sampled per check, spread over layers")
    gp.add_argument("--tolerance", type=float, default=1e-4)
    gp.set_defaults(func=cmd_gradcheck)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"hsmatch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (pipeline.StageError, ValueError, OSError, embednet.TrainingDiverged) as exc:
        print(f"hsmatch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
