"""Command-line front end.

    backscatter-rti simulate --scene configs/lab_scene.cfg --out run/
    backscatter-rti reconstruct --scene configs/lab_scene.cfg --log run/walk.csv \\
        --baseline run/baseline.csv --out run/recon --render-weights
    backscatter-rti material-sweep --scene configs/lab_scene.cfg --out run/

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numeric failure.
Every run writes ``manifest.json`` listing its artifacts with SHA-256 hashes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

import numpy as np
import scipy.linalg as la

from . import __version__, _accel, pipeline
from .config import load_run_config
from .detect import extract_trajectory, read_detections_csv, write_detections_csv
from .errors import ConfigError, LogFormatError, NumericError
from .geometry import Point3
from .ingest import assemble_frames, read_rssi_log, write_rssi_log
from .render import read_matrix_csv, read_pgm, write_matrix_csv, write_pgm
from .simulator import material_sweep
from .weight_model import link_membership_field, read_weight_csv

log = logging.getLogger("backscatter_rti")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4
SWEEP_HEADER = ("material", "scenario", "mean_rss_dbm", "missing_fraction", "reported_dbm")


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


# helpers ---------------------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: Path, command: str, cfg, artifacts, extra=None):
    entries = [{"path": str(p.relative_to(out)), "sha256": _sha256(p), "bytes": p.stat().st_size}
               for p in sorted(artifacts)]
    manifest = {
        "tool": "backscatter-rti",
        "version": __version__,
        "command": command,
        "seed": cfg.sim.seed,
        "config_sources": list(cfg.sources),
        "artifacts": entries,
    }
    manifest.update(extra or {})
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _prepare_out(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _overrides(args):
    o = {}
    if getattr(args, "seed", None) is not None:
        o["seed"] = args.seed
    if getattr(args, "frame_rate", None) is not None:
        o["frame_rate_hz"] = args.frame_rate
    if getattr(args, "window", None) is not None:
        o["window_s"] = args.window
    if getattr(args, "imputation", None) is not None:
        o["imputation"] = args.imputation
    return o


def _load_cfg(args):
    return load_run_config(args.scene, args.params, overrides=_overrides(args))


# simulate --------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_cfg(args)
    out = _prepare_out(args.out)
    tag_ids = cfg.scene.tag_ids
    written = []
    model = None
    window = 1.0 / cfg.sim.frame_rate_hz
    jobs = []
    if args.scenario in ("baseline", "both"):
        jobs.append(("baseline.csv", pipeline.simulate_baseline_frames(cfg)))
    if args.scenario in ("walk", "both"):
        model = pipeline.build_model(cfg)
        jobs.append(("walk.csv", pipeline.simulate_walk_frames(cfg, model)))
    for name, frames in jobs:
        path = out / name
        with open(path, "w", newline="", encoding="utf-8") as fh:
            rows = write_rssi_log(frames, tag_ids, fh)
        parsed = read_rssi_log(path)
        back = assemble_frames(parsed.records, tag_ids, window, "mean_in_window",
                               t0=0.0, n_frames=len(frames))
        if parsed.error_count or back != frames:
            raise NumericError(f"{path} failed the re-parse check")
        missing = int(sum(f.missing.sum() for f in frames))
        print(f"{name}: {len(frames)} frames x {len(tag_ids)} links, {rows} reads, "
              f"{missing} missing, seed {cfg.sim.seed}")
        written.append(path)
    _write_manifest(out, "simulate", cfg, written, {"scenario": args.scenario,
                                                    "backend": _accel.backend()})
    return EXIT_OK


# reconstruct -----------------------------------------------------------------

def _frames_from_log(path, cfg):
    parsed = read_rssi_log(path)
    if parsed.error_count:
        log.warning("%s: %d malformed line(s) skipped", path, parsed.error_count)
    return assemble_frames(parsed.records, cfg.scene.tag_ids, cfg.window_s, cfg.policy)


def _render_weights(model, cfg, out: Path):
    wdir = out / "weights"
    wdir.mkdir(exist_ok=True)
    written = []
    triplets = wdir / "weights.csv"
    model.weights.to_csv(triplets)
    read_weight_csv(triplets, (model.weights.q, model.weights.n))
    written.append(triplets)
    for link, (tag_id, _) in zip(model.links, cfg.scene.tags):
        field = link_membership_field(link, cfg.grid, cfg.weight).astype(float)
        path = wdir / f"link_{link.link_id:02d}_{tag_id}.pgm"
        write_pgm(field, path, vmin=0.0, vmax=1.0, scale=4)
        written.append(path)
    return written


def cmd_reconstruct(args) -> int:
    cfg = _load_cfg(args)
    if args.baseline is None and args.baseline_seconds is None:
        raise ConfigError("no baseline period: pass --baseline <quiet log> (or "
                          "--baseline-seconds N to use the first N s of --log)")
    out = _prepare_out(args.out)
    model = pipeline.build_model(cfg)
    written = []
    if args.render_weights:
        written += _render_weights(model, cfg, out)

    frames = _frames_from_log(args.log, cfg)
    if not frames:
        raise ConfigError(f"{args.log} holds no reads for the scene's tags")
    if args.baseline is not None:
        quiet = _frames_from_log(args.baseline, cfg)
    else:
        cutoff = frames[0].timestamp + args.baseline_seconds
        quiet = [f for f in frames if f.timestamp < cutoff]
        frames = [f for f in frames if f.timestamp >= cutoff]
    if not quiet:
        raise ConfigError("baseline period holds no frames; pass --baseline <quiet log>")

    run = pipeline.run_detection(cfg, model, quiet, frames)
    idir = out / "images"
    idir.mkdir(exist_ok=True)
    fixed = None
    if args.fixed_scale:
        stack = np.concatenate([im.values for im in run.images])
        fixed = (float(stack.min()), float(stack.max()))
    for k, im in enumerate(run.images):
        stem = idir / f"frame_{k:04d}"
        write_matrix_csv(im.as_2d(), stem.with_suffix(".csv"))
        if fixed:
            write_pgm(im.as_2d(), stem.with_suffix(".pgm"), *fixed, scale=args.pgm_scale)
        else:
            write_pgm(im.as_2d(), stem.with_suffix(".pgm"), scale=args.pgm_scale)
        written += [stem.with_suffix(".csv"), stem.with_suffix(".pgm")]

    det_path = out / "detections.csv"
    write_detections_csv(run.detections, det_path)
    written.append(det_path)
    traj = extract_trajectory(run.detections, smooth=cfg.smooth)
    traj_path = out / "trajectory.csv"
    with open(traj_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "x_m", "y_m", "z_m", "u_m", "v_m"])
        for t, p in traj:
            u, v = cfg.grid.to_uv(p)
            writer.writerow([repr(float(x)) for x in (t, p.x, p.y, p.z, u, v)])
    written.append(traj_path)

    # re-parse everything before claiming success
    if len(read_detections_csv(det_path)) != len(run.detections):
        raise NumericError("detections CSV failed the re-parse check")
    for k in range(len(run.images)):
        stem = idir / f"frame_{k:04d}"
        if read_matrix_csv(stem.with_suffix(".csv")).shape != (cfg.grid.n_v, cfg.grid.n_u):
            raise NumericError(f"{stem}.csv failed the re-parse check")
        read_pgm(stem.with_suffix(".pgm"))

    present = [d for d in run.detections if d.present]
    ends = "none"
    if traj:
        (t_a, p_a), (t_b, p_b) = traj[0], traj[-1]
        ends = (f"({p_a.x:.2f}, {p_a.z:.2f}) m at {t_a:.1f} s -> "
                f"({p_b.x:.2f}, {p_b.z:.2f}) m at {t_b:.1f} s")
    print(f"frames: {len(run.detections)}, present: {len(present)}, "
          f"threshold: {run.threshold:.4g}, track: {ends}")
    _write_manifest(out, "reconstruct", cfg, written,
                    {"threshold": run.threshold, "backend": _accel.backend(),
                     "projection": model.projection.provenance})
    return EXIT_OK


# material sweep --------------------------------------------------------------

def cmd_material_sweep(args) -> int:
    cfg = _load_cfg(args)
    out = _prepare_out(args.out)
    reader = cfg.scene.reader_pos
    tag = cfg.scene.tags[args.tag_index][1] if args.tag_index is not None else None
    if tag is None:
        # single tag straight ahead of the antenna at the top-row height
        top = max(p.z for _, p in cfg.scene.tags)
        depth = cfg.scene.tags[0][1].y
        tag = Point3(reader.x, depth, top)
    cells = material_sweep(cfg.rf, reader, tag, n_seeds=args.seeds,
                           reads_per_seed=args.reads, noise_db_std=cfg.sim.noise_db_std,
                           material_offsets=cfg.material_offsets,
                           threshold_dbm=cfg.missing_read_dbm, seed=cfg.sim.seed)
    path = out / "material_sweep.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_HEADER)
        for c in cells:
            writer.writerow([c.material, c.scenario, f"{c.mean_dbm:.4f}",
                             f"{c.missing_fraction:.4f}",
                             "missing" if c.missing else f"{c.mean_dbm:.4f}"])
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != len(cells) or tuple(rows[0].keys()) != SWEEP_HEADER:
        raise NumericError(f"{path} failed the re-parse check")
    scenarios = list(dict.fromkeys(c.scenario for c in cells))
    print("material  " + "  ".join(f"{s:>15}" for s in scenarios))
    for material in dict.fromkeys(c.material for c in cells):
        row = [c for c in cells if c.material == material]
        print(f"{material:<9} " + "  ".join(
            f"{'missing' if c.missing else f'{c.mean_dbm:.2f}':>15}" for c in row))
    _write_manifest(out, "material-sweep", cfg, [path],
                    {"seeds": args.seeds, "reads_per_seed": args.reads})
    return EXIT_OK


# entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", required=True, help="scene/run config file")
    common.add_argument("--params", help="extra config file layered over --scene "
                                         "(typically the imaging parameters)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="backscatter-rti", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[common], help="write synthetic RSSI logs")
    p.add_argument("--frame-rate", type=float, help="frames per second")
    p.add_argument("--scenario", choices=("baseline", "walk", "both"), default="both")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", parents=[common], help="image and track a logged walk")
    p.add_argument("--log", required=True, help="RSSI log to reconstruct")
    p.add_argument("--baseline", help="quiet-room RSSI log")
    p.add_argument("--baseline-seconds", type=float,
                   help="use the first N seconds of --log as the quiet period")
    p.add_argument("--window", type=float, help="frame window in seconds")
    p.add_argument("--imputation", choices=("floor", "zero", "drop"))
    p.add_argument("--render-weights", action="store_true",
                   help="also write one membership graymap per link")
    p.add_argument("--fixed-scale", action="store_true",
                   help="one gray scale for all frames instead of per-frame min/max")
    p.add_argument("--pgm-scale", type=int, default=8, help="pixels per cell in graymaps")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("material-sweep", parents=[common],
                       help="mean RSS per substrate material and channel condition")
    p.add_argument("--seeds", type=int, default=100)
    p.add_argument("--reads", type=int, default=20, help="reads per seed")
    p.add_argument("--tag-index", type=int,
                   help="use this scene tag instead of one straight ahead of the reader")
    p.set_defaults(func=cmd_material_sweep)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _ArgError as exc:
        print(f"backscatter-rti: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (OSError, LogFormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, la.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
