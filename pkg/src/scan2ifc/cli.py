"""Command-line interface: convert, calibrate, synth, eval."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import Config, load_config
from .errors import Scan2IfcError


def _setup_logging():
    level = os.environ.get("SCAN2IFC_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")


def _load_config_arg(path) -> Config:
    if path is None:
        return Config()
    return load_config(path)


def cmd_convert(args) -> int:
    cfg = _load_config_arg(args.config)
    from .pipeline import run_pipeline

    manifest = run_pipeline(
        args.cloud,
        cfg,
        args.out,
        seed=args.seed,
        deterministic=args.deterministic,
        dilute=args.dilute,
    )
    log = logging.getLogger("convert")
    log.info("wrote %s", manifest.ifc_path)
    log.info("counts: %s", manifest.counts)
    log.info("points/minute: %s", manifest.points_per_minute)
    for w in manifest.warnings:
        log.warning("%s", w)
    return 0


def cmd_calibrate(args) -> int:
    import uvicorn

    from .service.app import create_app
    from .service.state import CalibrationSession

    session = CalibrationSession.from_path(args.cloud)
    if args.config:
        session.cfg = load_config(args.config)
    frontend = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    app = create_app(session, frontend_dir=frontend if frontend.is_dir() else None)
    # loopback only: single-user local tool, no auth
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_synth(args) -> int:
    from .cloud_io import write_cache
    from .synth import generate, load_building_spec

    spec = load_building_spec(args.spec)
    cloud, truth = generate(spec)
    out = Path(args.out)
    if out.suffix.lower() == ".c2m":
        write_cache(cloud, out)
    else:
        with open(out, "w") as fh:
            for x, y, z in cloud.points:
                fh.write(f"{x:.6f} {y:.6f} {z:.6f}\n")
    logging.getLogger("synth").info("wrote %s points to %s", cloud.count, out)
    if args.truth:
        import json

        Path(args.truth).write_text(json.dumps(_truth_summary(truth), indent=2, sort_keys=True))
    return 0


def _truth_summary(truth) -> dict:
    return {
        "slabs": [{"z_bottom": z, "thickness": t} for z, t in truth.slabs],
        "storeys": [{"floor_top": a, "ceiling_bottom": b} for a, b in truth.storeys],
        "walls": [
            [
                {
                    "a": w.a.tolist(),
                    "b": w.b.tolist(),
                    "thickness": w.thickness,
                    "exterior": w.exterior,
                }
                for w in group
            ]
            for group in truth.walls
        ],
        "openings": [
            {
                "storey": o.storey,
                "wall": o.wall_index,
                "x_offset": o.x_offset,
                "width": o.width,
                "sill": o.sill,
                "height": o.height,
                "kind": o.kind,
            }
            for o in truth.openings
        ],
        "zones": [{"storey": z.storey, "area": z.area} for z in truth.zones],
    }


def cmd_eval(args) -> int:
    from .cloud_io import load_cloud
    from .ifc.validate import extract_solids
    from .metrics import deviation
    from .previews import heatmap_png
    from .synth import HPolyFace, RectFace

    cloud = load_cloud(args.cloud)
    solids = extract_solids(args.ifc)
    faces = []
    for rec in solids:
        if rec.type_name == "IFCSPACE" or rec.type_name == "IFCOPENINGELEMENT":
            continue
        if rec.type_name == "IFCSLAB":
            faces.append(HPolyFace(rec.footprint, rec.z_bottom))
            faces.append(HPolyFace(rec.footprint, rec.z_top))
        elif rec.type_name == "IFCWALL" and rec.axis_start is not None:
            d3 = np.append(rec.axis_end - rec.axis_start, 0.0)
            length = float(np.linalg.norm(d3))
            d3 /= length
            nrm = np.array([-d3[1], d3[0], 0.0])
            voids_by_face = []
            for op in rec.openings:
                # opening extent along the wall axis, sill relative to wall base
                rel = np.append(op.footprint.mean(axis=0) - rec.axis_start, 0.0)
                u_mid = float(rel @ d3)
                du = max(np.ptp(op.footprint @ d3[:2]), 0.0)
                voids_by_face.append(
                    (u_mid - du / 2, u_mid + du / 2, op.z_bottom - rec.z_bottom, op.z_top - rec.z_bottom)
                )
            for sign in (1.0, -1.0):
                off = np.append(rec.axis_start, rec.z_bottom) + sign * nrm * (rec.thickness / 2.0)
                faces.append(
                    RectFace(
                        origin=off,
                        udir=d3,
                        vdir=np.array([0.0, 0.0, 1.0]),
                        ulen=length,
                        vlen=rec.z_top - rec.z_bottom,
                        voids=list(voids_by_face),
                    )
                )
    if not faces:
        raise Scan2IfcError("no faces in the IFC model")
    stats = deviation(cloud.points, faces)
    out = Path(args.out)
    with open(out, "w") as fh:
        fh.write("x,y,z,distance\n")
        for (x, y, z), d in zip(cloud.points, stats.distances):
            fh.write(f"{x:.6f},{y:.6f},{z:.6f},{d:.6f}\n")
    log = logging.getLogger("eval")
    log.info("p50=%.4f m p95=%.4f m p99=%.4f m max=%.4f m over-50mm=%d",
             stats.p50, stats.p95, stats.p99, stats.max, stats.count_over(0.05))
    if args.png:
        Path(args.png).write_bytes(heatmap_png(cloud.points[:, :2], stats.distances))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scan2ifc",
        description="Convert indoor point clouds (ASCII XYZ or .c2m cache) into IFC4 models. "
        "E57 input is not supported; convert to XYZ upstream.",
    )
    parser.add_argument("--version", action="version", version=f"scan2ifc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="run the full pipeline and write an IFC file")
    p.add_argument("cloud", help="input cloud (.xyz or .c2m)")
    p.add_argument("--config", help="TOML config with [input] and [calibration]")
    p.add_argument("--out", required=True, help="output IFC path")
    p.add_argument("--seed", type=int, default=0, help="GUID seed for deterministic mode")
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                   help="reproducible GUIDs and zeroed timestamps (default on)")
    p.add_argument("--dilute", choices=["none", "rows", "spatial"], default="none",
                   help="pre-thinning: row skipping (dilution_factor) or spatial (pc_resolution)")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("calibrate", help="serve the interactive calibration API/UI")
    p.add_argument("cloud", help="input cloud (.xyz or .c2m)")
    p.add_argument("--config", help="initial parameter file")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("synth", help="generate a synthetic building cloud from a spec")
    p.add_argument("spec", help="building spec (TOML)")
    p.add_argument("--out", required=True, help="output cloud (.xyz or .c2m)")
    p.add_argument("--truth", help="optional ground-truth JSON path")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="point-to-model distances for a cloud against an IFC file")
    p.add_argument("cloud", help="input cloud (.xyz or .c2m)")
    p.add_argument("ifc", help="IFC file produced by convert/export")
    p.add_argument("--out", required=True, help="output CSV (x,y,z,distance)")
    p.add_argument("--png", help="optional heat-map PNG (0-50 mm color scale)")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Scan2IfcError as exc:
        logging.getLogger("scan2ifc").error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
