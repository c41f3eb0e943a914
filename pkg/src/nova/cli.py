"""Command-line front end: data synthesis, training, editing, evaluation.

Subcommands: ``synth-source``, ``synth-anchor``, ``make-dataset``,
``train``, ``infer``, ``eval``, ``ablate``. Configuration is plain
key=value text (``--config`` file plus repeatable ``--set`` overrides);
an explicit ``--seed`` beats the config seed, and the ``NOVA_SEED``
environment variable fills in when nothing else sets one. Every run
directory receives the resolved config (``config.txt``), a manifest
(``manifest.json``) whose recorded argv re-runs the command
bit-identically, and a plain log (``log.txt``; no timestamps, so re-runs
match byte for byte). Exit codes: 0 success, 2 config error, 3 data
error, 4 numeric failure, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import torch

from . import __version__
from .ablation import anchored_editing_study, dense_branch_study, interval_study
from .config import RunConfig, parse_assignment, parse_assignments
from .core import (
    KeyframeSet,
    Rng,
    load_frame,
    load_mask_sequence,
    load_video,
    save_frame,
    save_mask_sequence,
    save_tensor,
    save_video,
)
from .dataset import make_clip, training_backgrounds
from .editors import get_editor
from .errors import ConfigError, DataError, NovaError, NumericError
from .inference import EditRequest, run_edit
from .metrics import GridEmbedder, evaluate, has_background
from .model import DualBranchDenoiser, load_checkpoint, save_checkpoint

__all__ = ["main", "build_parser", "manifest_argv"]

# The dense-branch study compares matched seeds; the offsets keep its
# fixture clips disjoint from the anchored-editing fixtures below.
_DENSE_SEED_OFFSETS = tuple(range(101, 106))
_ANCHOR_SEED_OFFSETS = tuple(range(201, 211))
_STUDIES = ("dense", "anchored", "interval")


# ---- plumbing --------------------------------------------------------


class _RunLog:
    """Prints progress lines and mirrors them into the run's log.txt."""

    def __init__(self, out: Path):
        out.mkdir(parents=True, exist_ok=True)
        self.path = out / "log.txt"
        self.path.write_text("")

    def say(self, message: str) -> None:
        print(message)
        with open(self.path, "a") as f:
            f.write(message + "\n")


def _json_default(value):
    if isinstance(value, (np.integer, np.floating, np.bool_)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON-serializable: {type(value).__name__}")


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    )


def _resolve_config(args, extra: dict | None = None) -> RunConfig:
    """File < --set < --seed/NOVA_SEED < values forced by the inputs."""
    found = {}
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        found.update(parse_assignments(text))
    for item in getattr(args, "overrides", []) or []:
        key, value = parse_assignment(item, where="--set ")
        found[key] = value
    seed_flag = getattr(args, "seed", None)
    if seed_flag is not None:
        if seed_flag < 0:
            raise ConfigError(f"--seed must be non-negative, got {seed_flag}")
        found["seed"] = seed_flag
    elif "seed" not in found and os.environ.get("NOVA_SEED"):
        _, found["seed"] = parse_assignment(
            f"seed={os.environ['NOVA_SEED']}", where="NOVA_SEED: "
        )
    if extra:
        found.update(extra)
    return RunConfig(found)


def _dims_from(video) -> dict:
    """Config keys forced by an input clip's geometry."""
    return {
        "data.frames": video.num_frames,
        "data.height": video.height,
        "data.width": video.width,
        "data.channels": video.channels,
    }


def _dims_from_net(cfg) -> dict:
    """Config keys forced by a loaded checkpoint's architecture."""
    return {
        "model.dim": cfg.dim,
        "model.layers": cfg.layers,
        "model.heads": cfg.heads,
        "model.patch": cfg.patch_spatial,
        "model.patch_time": cfg.patch_time,
        "model.timesteps": cfg.timesteps,
        "model.mlp_ratio": cfg.mlp_ratio,
        "model.sparse_mode": cfg.sparse_mode,
        "model.dense_weights": cfg.dense_weights,
        "model.posenc_scale": cfg.posenc_scale,
        "model.embed_gain": cfg.embed_gain,
    }


def _finish_run(out: Path, cfg: RunConfig, command: str, inputs: dict,
                flags: list, extra: dict | None = None) -> None:
    """Write the resolved config snapshot and the re-runnable manifest.

    The recorded argv points at the snapshot itself (which carries the
    resolved seed), so replaying it does not depend on the original
    config file or on NOVA_SEED.
    """
    (out / "config.txt").write_text(cfg.snapshot())
    argv = [command]
    for name, value in inputs.items():
        argv += [f"--{name}", str(Path(value).resolve())]
    argv += list(flags)
    argv += ["--config", str((out / "config.txt").resolve()), "--out", str(out.resolve())]
    manifest = {
        "command": command,
        "argv": argv,
        "inputs": {k: str(Path(v).resolve()) for k, v in inputs.items()},
        "seed": cfg["seed"],
        "version": __version__,
    }
    if extra:
        manifest.update(extra)
    _write_json(out / "manifest.json", manifest)


def manifest_argv(manifest_path, out=None) -> list:
    """Rebuild the argv recorded in a run manifest.

    Passing ``out`` redirects the re-run into a fresh directory so the
    original outputs can be compared against the replay.
    """
    manifest = json.loads(Path(manifest_path).read_text())
    argv = list(manifest["argv"])
    if out is not None:
        position = argv.index("--out")
        argv[position + 1] = str(out)
    return argv


def _load_pool(path) -> list:
    """A filler pool: one clip, or a directory of clip dirs / containers."""
    root = Path(path)
    if root.is_file():
        return [load_video(root)]
    if not root.is_dir():
        raise DataError(f"no such pool: {root}")
    if any(root.glob("*.png")):
        return [load_video(root)]
    entries = sorted(
        entry
        for entry in root.iterdir()
        if entry.suffix == ".nvt" or (entry.is_dir() and any(entry.glob("*.png")))
    )
    if not entries:
        raise DataError(f"pool {root} contains no clips (PNG dirs or .nvt files)")
    return [load_video(entry) for entry in entries]


def _clip_seed(seed: int, index: int) -> int:
    return int(Rng(seed).fork(("clip", index)).integers(0, 2**31 - 1))


def _dataset_clips(cfg: RunConfig, with_masks: bool = False) -> list:
    kinds = training_backgrounds(cfg["data.background"], cfg["data.clips"])
    out = []
    for i, kind in enumerate(kinds):
        out.append(
            make_clip(
                cfg.scene(background=kind),
                seed=_clip_seed(cfg["seed"], i),
                return_masks=with_masks,
            )
        )
    return out


def _load_clips_dir(path) -> list:
    root = Path(path)
    if (root / "clips").is_dir():
        root = root / "clips"
    if not root.is_dir():
        raise DataError(f"no such dataset: {root}")
    entries = sorted(
        entry
        for entry in root.iterdir()
        if entry.suffix == ".nvt" or (entry.is_dir() and any(entry.glob("*.png")))
    )
    if not entries:
        raise DataError(f"dataset {root} contains no clips")
    return [load_video(entry) for entry in entries]


def _sweep_fixtures(scene, seed: int, count: int = 2) -> list:
    """Fixture clips for the keyframe-interval sweep.

    81 frames so every interval in {8, 10, 16, 20} divides the span, and
    one small shape so its mask leaves BG-SSIM defined; candidate seeds
    whose masks cover every window of every frame are skipped.
    """
    scene = replace(scene, num_frames=81, num_shapes=1, shape_size_range=(0.15, 0.25))
    fixtures = []
    for attempt in range(50 * count):
        if len(fixtures) == count:
            break
        clip, masks = make_clip(scene, seed=seed + 301 + attempt, return_masks=True)
        if any(has_background(masks.mask(t)) for t in range(masks.num_frames)):
            fixtures.append((clip, masks))
    if len(fixtures) < count:
        raise DataError(
            "could not generate sweep fixtures whose masks leave background windows"
        )
    return fixtures


def _attach_model(checkpoint, threads: int) -> DualBranchDenoiser:
    net, frozen, _meta = load_checkpoint(checkpoint)
    model = DualBranchDenoiser(single_thread=(threads <= 1))
    model.freeze = frozen
    model.attach(net)
    return model


# ---- subcommands -----------------------------------------------------


def _cmd_synth_source(args) -> int:
    target = load_video(args.target)
    pool = _load_pool(args.pool)
    cfg = _resolve_config(args, _dims_from(target))
    out = Path(args.out)
    log = _RunLog(out)

    pipeline = cfg.fidelity()
    pipeline.fit(pool)
    pseudo = pipeline.transform(target)

    save_video(pseudo.video, out / "frames")
    save_video(pseudo.video, out / "video.nvt", format="container")
    save_mask_sequence(pseudo.masks, out / "masks")
    save_tensor(out / "masks.nvt", pseudo.masks.masks)
    params_text = "".join(
        f"{key}={json.dumps(value, default=_json_default)}\n"
        for key, value in sorted(pseudo.params.items())
    )
    (out / "params.txt").write_text(params_text)

    log.say(
        f"pseudo-source: {target.num_frames} frames from pool of {len(pool)}, "
        f"shape {pseudo.params.get('shape', '?')}"
    )
    _finish_run(
        out,
        cfg,
        "synth-source",
        {"target": args.target, "pool": args.pool},
        [],
        {"params": pseudo.params,
         "outputs": ["frames", "masks", "video.nvt", "masks.nvt", "params.txt"]},
    )
    return 0


def _cmd_synth_anchor(args) -> int:
    target = load_video(args.target)
    extra = _dims_from(target)
    if args.interval is not None:
        extra["keyframe.mode"] = "fixed"
        extra["keyframe.interval"] = args.interval
    else:
        extra["keyframe.mode"] = "random"
        extra["keyframe.interior"] = args.n_interior
    cfg = _resolve_config(args, extra)
    out = Path(args.out)
    log = _RunLog(out)

    pipeline = cfg.anchor()
    degraded = pipeline.fit().transform(target)

    save_video(degraded.video, out / "frames")
    save_video(degraded.video, out / "video.nvt", format="container")

    keys = list(degraded.keyframes)
    log.say(f"degraded reference: keyframes {keys} over {target.num_frames} frames")
    for entry in degraded.log:
        log.say(
            f"  keyframe {entry['index']}: geometric={entry['geometric']} "
            f"appearance={entry['appearance']}"
        )
    _finish_run(
        out,
        cfg,
        "synth-anchor",
        {"target": args.target},
        [],
        {"keyframes": keys, "degradations": list(degraded.log),
         "outputs": ["frames", "video.nvt"]},
    )
    return 0


def _cmd_make_dataset(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    log = _RunLog(out)

    count = cfg["data.clips"]
    for i, (clip, masks) in enumerate(_dataset_clips(cfg, with_masks=True)):
        save_video(clip, out / "clips" / f"{i:05d}")
        save_mask_sequence(masks, out / "masks" / f"{i:05d}")
    log.say(
        f"dataset: {count} clips of {cfg['data.frames']} frames "
        f"at {cfg['data.height']}x{cfg['data.width']}"
    )
    _finish_run(
        out, cfg, "make-dataset", {}, [],
        {"clips": count, "outputs": ["clips", "masks"]},
    )
    return 0


def _cmd_train(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    log = _RunLog(out)

    if args.data:
        clips = _load_clips_dir(args.data)
        log.say(f"training on {len(clips)} clips from {args.data}")
    else:
        clips = _dataset_clips(cfg)
        log.say(f"training on {len(clips)} generated clips")

    model = cfg.denoiser()
    model.set_params(single_thread=(args.threads <= 1))
    try:
        model.fit(clips)
    except NumericError as exc:
        # Leave a diagnostic trail: the manifest of the offending sample.
        _write_json(out / "failure.json", {
            "error": str(exc),
            "sample": getattr(exc, "manifest", None),
        })
        raise

    final_loss = model.loss_curve_[-1][1]
    save_checkpoint(
        out / "checkpoint",
        model.net_,
        model.frozen_groups(),
        meta={"config": cfg.snapshot(), "final_loss": final_loss},
    )
    with open(out / "loss.csv", "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        for step, loss in model.loss_curve_:
            writer.writerow([step, repr(loss)])

    log.say(
        f"trained {cfg['train.steps']} steps; "
        f"final loss {final_loss:.4f}; checkpoint in checkpoint/"
    )
    inputs = {"data": args.data} if args.data else {}
    _finish_run(
        out, cfg, "train", inputs, [],
        {"outputs": ["checkpoint", "loss.csv"], "final_loss": final_loss},
    )
    return 0


def _cmd_infer(args) -> int:
    if args.editor == "sprite":
        raise ConfigError(
            "the sprite editor needs a with/without scene pair and is only "
            "available through the ablation API, not this subcommand"
        )
    source = load_video(args.source)
    net, _frozen, _meta = load_checkpoint(args.checkpoint)
    extra = _dims_from(source) | _dims_from_net(net.cfg)
    extra["keyframe.mode"] = "fixed"
    if args.interval is not None:
        extra["keyframe.interval"] = args.interval
    if args.steps is not None:
        extra["sample.steps"] = args.steps
    cfg = _resolve_config(args, extra)
    out = Path(args.out)
    log = _RunLog(out)

    keys = KeyframeSet.from_interval(source.last_index, cfg["keyframe.interval"])
    masks = load_mask_sequence(args.mask, binary=True) if args.mask else None
    editor_kwargs = {"seed": cfg["seed"]} if args.editor == "recolor" else {}
    editor = get_editor(args.editor, **editor_kwargs)

    model = DualBranchDenoiser(single_thread=(args.threads <= 1))
    model.attach(net)

    request = EditRequest(
        source=source,
        keyframes=keys,
        prompt=args.prompt,
        masks=masks,
        editor_id=args.editor,
    )
    log.say(
        f"editing {source.num_frames} frames at keyframes {list(keys)} "
        f"with editor {args.editor!r}"
    )
    result = run_edit(
        request,
        editor,
        model,
        steps=cfg["sample.steps"],
        seed=cfg["seed"],
        anchored=not args.independent,
    )

    save_video(result.video, out / "frames")
    save_video(result.video, out / "video.nvt", format="container")
    save_video(result.reference, out / "reference")
    for k, frame in sorted(result.edited_keyframes.items()):
        save_frame(frame, out / "keyframes" / f"{k:05d}.png")
    log.say(f"sampled {cfg['sample.steps']} steps; wrote frames/ and video.nvt")

    flags = ["--editor", args.editor, "--prompt", args.prompt]
    if args.mask:
        flags += ["--mask", str(Path(args.mask).resolve())]
    if args.independent:
        flags += ["--independent"]
    _finish_run(
        out,
        cfg,
        "infer",
        {"source": args.source, "checkpoint": args.checkpoint},
        flags,
        {"edit": result.manifest,
         "outputs": ["frames", "video.nvt", "reference", "keyframes"]},
    )
    return 0


def _cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    gen = load_video(args.gen)
    src = load_video(args.src)
    masks = load_mask_sequence(args.mask, binary=True) if args.mask else None
    first = load_frame(args.first_edit) if args.first_edit else None

    report = evaluate(
        gen,
        src,
        edit_mask=masks,
        edited_first=first,
        embedder=GridEmbedder(cfg["eval.embedder_grid"]),
        mask_source="file" if masks is not None else "none",
    )
    payload = report.to_json()
    _write_json(Path(args.out), payload)
    summary = ", ".join(
        f"{key}={payload[key]:.4f}" if isinstance(payload[key], float) else f"{key}={payload[key]}"
        for key in ("tc", "fc", "bg_ssim", "psnr_db")
    )
    print(f"eval: {summary} -> {args.out}")
    return 0


def _study_rows(log, study, builder):
    """Run one ablation study; a failure is reported, not fatal."""
    try:
        return builder(), None
    except NovaError as exc:
        log.say(f"{study} study failed: {exc}")
        return [], {"study": study, "error": str(exc)}


def _summarize_ablation(rows: list) -> list:
    """Pass/fail lines against the expected directions, per study."""
    lines = []
    dense = [r for r in rows if r.get("study") == "dense-branch"]
    if dense:
        by_seed = {}
        for row in dense:
            by_seed.setdefault(row["seed"], {})[row["variant"]] = row["background_psnr_db"]
        gaps = [pair["full"] - pair["no-dense"] for pair in by_seed.values() if len(pair) == 2]
        wins = sum(gap >= 1.0 for gap in gaps)
        verdict = "PASS" if wins >= 4 and len(gaps) >= 5 else "FAIL"
        lines.append(
            f"{verdict} dense-branch: full beats no-dense by >= 1 dB in "
            f"{wins}/{len(gaps)} seeds (mean gap {np.mean(gaps):+.2f} dB)"
        )
    anchored = [r for r in rows if r.get("study") == "anchored-editing"]
    if anchored:
        wins = sum(r["anchored_variance"] < r["independent_variance"] for r in anchored)
        verdict = "PASS" if wins == len(anchored) else "FAIL"
        lines.append(
            f"{verdict} anchored-editing: anchored variance below independent on "
            f"{wins}/{len(anchored)} clips"
        )
    sweep = [r for r in rows if r.get("study") == "interval"]
    if sweep:
        baseline = {r["clip"]: r["bg_ssim"] for r in sweep if r["interval"] == 10}
        drift = max(
            abs(r["bg_ssim"] - baseline[r["clip"]]) for r in sweep if r["clip"] in baseline
        )
        verdict = "PASS" if drift <= 0.05 else "FAIL"
        lines.append(
            f"{verdict} interval: BG-SSIM within {drift:.3f} of the interval-10 value "
            f"(limit 0.05) across intervals {sorted({r['interval'] for r in sweep})}"
        )
    return lines


def _cmd_ablate(args) -> int:
    cfg = _resolve_config(args)
    out = Path(args.out)
    log = _RunLog(out)
    studies = tuple(s.strip() for s in args.studies.split(",") if s.strip())
    unknown = [s for s in studies if s not in _STUDIES]
    if unknown:
        raise ConfigError(f"unknown studies {unknown}; choose from {list(_STUDIES)}")

    model = None
    if {"dense", "interval"} & set(studies):
        if args.checkpoint:
            model = _attach_model(args.checkpoint, args.threads)
            log.say(f"loaded checkpoint {args.checkpoint}")
        else:
            log.say(f"no checkpoint given; training from config ({cfg['train.steps']} steps)")
            model = cfg.denoiser()
            model.set_params(single_thread=(args.threads <= 1))
            model.fit(_dataset_clips(cfg))

    # "mix" is a training-set recipe; each study fixes the fixture kind
    # that makes its direction measurable (noise backgrounds for the
    # dense study, smooth ones elsewhere). A concrete user choice wins.
    def study_scene(default_background: str):
        kind = cfg["data.background"]
        return cfg.scene(background=default_background if kind == "mix" else kind)

    steps = cfg["sample.steps"]
    rows, failures = [], []

    if "dense" in studies:
        seeds = [cfg["seed"] + offset for offset in _DENSE_SEED_OFFSETS]
        got, failure = _study_rows(
            log, "dense-branch",
            lambda: dense_branch_study(
                model, seeds, study_scene("noise"), interval=8, steps=steps
            ),
        )
        rows += got
        failures += [failure] if failure else []

    if "anchored" in studies:
        fixtures = [
            make_clip(study_scene("scroll"), seed=cfg["seed"] + offset, return_masks=True)
            for offset in _ANCHOR_SEED_OFFSETS
        ]
        got, failure = _study_rows(
            log, "anchored-editing",
            lambda: anchored_editing_study(fixtures, interval=4),
        )
        rows += got
        failures += [failure] if failure else []

    if "interval" in studies:
        # The sweep intervals {8,10,16,20} all divide a span of 80 frames.
        fixtures = _sweep_fixtures(study_scene("scroll"), cfg["seed"])
        got, failure = _study_rows(
            log, "interval",
            lambda: interval_study(model, fixtures, steps=steps, seed=cfg["seed"]),
        )
        rows += got
        failures += [failure] if failure else []

    all_rows = rows + failures
    if all_rows:
        fieldnames = []
        for row in all_rows:
            fieldnames += [key for key in row if key not in fieldnames]
        with open(out / "ablation.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fieldnames, restval="")
            writer.writeheader()
            for row in all_rows:
                writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})

    summary = _summarize_ablation(rows)
    summary += [f"FAIL {f['study']}: {f['error']}" for f in failures]
    (out / "summary.txt").write_text("".join(line + "\n" for line in summary))
    for line in summary:
        log.say(line)

    inputs = {"checkpoint": args.checkpoint} if args.checkpoint else {}
    _finish_run(
        out, cfg, "ablate", inputs, ["--studies", args.studies],
        {"outputs": ["ablation.csv", "summary.txt"], "summary": summary},
    )
    return 0


# ---- parser ----------------------------------------------------------


def _add_common(parser, seed: bool = True, out: bool = True) -> None:
    parser.add_argument("--config", metavar="FILE", help="key=value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=1,
        metavar="N",
        help="torch thread count (1 keeps runs bit-reproducible)",
    )
    if seed:
        parser.add_argument(
            "--seed", type=int, default=None, metavar="N",
            help="root seed (beats the config seed and NOVA_SEED)",
        )
    if out:
        parser.add_argument("--out", required=True, metavar="DIR", help="run directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nova",
        description="Keyframe-guided video editing: synthesize training data, "
        "train the dual-branch denoiser, edit clips, and evaluate results.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser(
        "synth-source",
        help="paste a moving patch of a filler clip onto a target clip",
    )
    p.add_argument("--target", required=True, metavar="DIR", help="target clip")
    p.add_argument("--pool", required=True, metavar="DIR", help="filler clip pool")
    _add_common(p)

    p = sub.add_parser(
        "synth-anchor",
        help="degrade keyframes of a clip and interpolate a reference",
    )
    p.add_argument("--target", required=True, metavar="DIR", help="target clip")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--interval", type=int, metavar="N", help="fixed keyframe spacing")
    group.add_argument(
        "--n-interior", type=int, dest="n_interior", metavar="N",
        help="number of randomly placed interior keyframes",
    )
    _add_common(p)

    p = sub.add_parser("make-dataset", help="pre-generate procedural training clips")
    _add_common(p)

    p = sub.add_parser("train", help="train the denoiser on procedural clips")
    p.add_argument("--data", metavar="DIR", help="pre-generated dataset (default: generate)")
    _add_common(p)

    p = sub.add_parser("infer", help="edit a clip through keyframes and resample it")
    p.add_argument("--source", required=True, metavar="DIR", help="clip to edit")
    p.add_argument("--checkpoint", required=True, metavar="DIR", help="trained model")
    p.add_argument("--interval", type=int, metavar="N", help="keyframe spacing (default: config)")
    p.add_argument("--editor", default="identity", metavar="ID", help="keyframe editor id")
    p.add_argument("--prompt", default="", metavar="TEXT", help="editor instruction")
    p.add_argument("--mask", metavar="DIR", help="edit-region mask sequence")
    p.add_argument("--steps", type=int, metavar="N", help="sampling steps (default: config)")
    p.add_argument(
        "--independent", action="store_true",
        help="edit keyframes independently instead of anchored to the first",
    )
    _add_common(p)

    p = sub.add_parser("eval", help="score a generated clip against its source")
    p.add_argument("--gen", required=True, metavar="DIR", help="generated clip")
    p.add_argument("--src", required=True, metavar="DIR", help="source clip")
    p.add_argument("--mask", metavar="DIR", help="edit-region mask sequence")
    p.add_argument(
        "--first-edit", dest="first_edit", metavar="FILE",
        help="edited first frame (PNG or .nvt) for temporal consistency",
    )
    _add_common(p, seed=False, out=False)
    p.add_argument("--out", required=True, metavar="FILE", help="JSON report path")

    p = sub.add_parser("ablate", help="run the paired ablation studies")
    p.add_argument("--checkpoint", metavar="DIR", help="trained model (default: train from config)")
    p.add_argument(
        "--studies", default=",".join(_STUDIES), metavar="LIST",
        help=f"comma-separated subset of {list(_STUDIES)}",
    )
    _add_common(p)

    return parser


_HANDLERS = {
    "synth-source": _cmd_synth_source,
    "synth-anchor": _cmd_synth_anchor,
    "make-dataset": _cmd_make_dataset,
    "train": _cmd_train,
    "infer": _cmd_infer,
    "eval": _cmd_eval,
    "ablate": _cmd_ablate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return 0
    torch.set_num_threads(max(1, args.threads))
    try:
        return _HANDLERS[args.command](args)
    except NovaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
