"""Operator command line: compile scenes, serve live sessions, multiply
recorded episodes, reproject cameras, and report dataset statistics.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.
stdout carries data (JSON); diagnostics go to stderr. LUCIDFORGE_SEED
provides the default seed for the randomized commands.
"""

from __future__ import annotations

import argparse
import glob as globmod
import json
import os
import shutil
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import WarpBounds, multiply, reproject, warp_image
from .augment.depthio import read_depth, write_flow
from .augment.reproject import CameraModel
from .episodes import load as load_episode
from .episodes import save as save_episode
from .kinematics import RetargetMap
from .scene import SceneError, collect_assets, emit_mjcf, parse_scene, resolve
from .server.session import TickConfig, pose_from_wire
from .server.ws import SessionServer

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _err(msg: str):
    print(msg, file=sys.stderr)


def _default_seed() -> int:
    return int(os.environ.get("LUCIDFORGE_SEED", "0"))


# ---------------------------------------------------------------------------
# compile
# ---------------------------------------------------------------------------


def cmd_compile(args) -> int:
    try:
        text = Path(args.scene).read_text(encoding="utf-8")
    except OSError as e:
        _err(f"cannot read {args.scene}: {e}")
        return EXIT_IO
    try:
        doc = resolve(parse_scene(text))
        xml = emit_mjcf(doc)
    except SceneError as e:
        _err(f"{type(e).__name__}: {e}")
        return EXIT_VALIDATION
    try:
        Path(args.out).write_text(xml, encoding="utf-8")
    except OSError as e:
        _err(f"cannot write {args.out}: {e}")
        return EXIT_IO
    if args.assets:
        base = Path(args.scene).parent
        paths, missing = collect_assets(xml, base)
        dest_dir = Path(args.out).parent
        copied = []
        for p in paths:
            if p in missing:
                continue
            dest = dest_dir / p.name
            if p.resolve() != dest.resolve():
                shutil.copy(p, dest)
            copied.append(str(dest))
        print(json.dumps({"out": args.out, "assets": copied, "missing": [str(p) for p in missing]}))
        if missing:
            _err(f"{len(missing)} referenced asset(s) missing")
    return EXIT_OK


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def cmd_serve(args) -> int:
    try:
        xml = Path(args.model).read_text(encoding="utf-8")
    except OSError as e:
        _err(f"cannot read {args.model}: {e}")
        return EXIT_IO
    rmap = None
    if args.retarget:
        try:
            rmap = RetargetMap.from_json(Path(args.retarget).read_text(encoding="utf-8"))
        except OSError as e:
            _err(f"cannot read {args.retarget}: {e}")
            return EXIT_IO
    try:
        cfg = TickConfig(decimation=args.decimation, grasp_radius=args.grasp_radius)
    except ValueError as e:
        _err(str(e))
        return EXIT_USAGE
    server = SessionServer(
        xml, cfg=cfg, host=args.host, port=args.port, record_dir=args.record_dir, retarget_map=rmap
    )
    _err(f"serving {args.model} on ws://{args.host}:{args.port} (decimation {cfg.decimation})")
    server.run_forever()
    return EXIT_OK


# ---------------------------------------------------------------------------
# augment
# ---------------------------------------------------------------------------


def cmd_augment(args) -> int:
    files = sorted(globmod.glob(args.episodes))
    if not files:
        print(json.dumps({"inputs": 0, "outputs": 0}))
        return EXIT_OK
    episodes = []
    for f in files:
        try:
            episodes.append(load_episode(Path(f).read_bytes()))
        except OSError as e:
            _err(f"cannot read {f}: {e}")
            return EXIT_IO
        except ValueError as e:
            _err(f"{f}: {e}")
            return EXIT_VALIDATION
    bounds = WarpBounds(max_trans=args.max_trans, max_rot=args.max_rot)
    out = multiply(episodes, args.multiplier, bounds, seed=args.seed, n_keypoints=args.keypoints)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, src in enumerate(files):
        stem = Path(src).stem
        for j in range(args.multiplier):
            dest = out_dir / f"{stem}_{j:03d}.jsonl"
            dest.write_bytes(save_episode(out[i * args.multiplier + j]))
            written.append(str(dest))
    print(json.dumps({"inputs": len(files), "outputs": len(written), "files": written}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# warp-camera
# ---------------------------------------------------------------------------


def _load_camera(path) -> CameraModel:
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    return CameraModel(
        fx=float(d["fx"]),
        fy=float(d["fy"]),
        cx=float(d["cx"]),
        cy=float(d["cy"]),
        width=int(d["width"]),
        height=int(d["height"]),
        pose=pose_from_wire(d["pose"]),
    )


def cmd_warp_camera(args) -> int:
    try:
        ep = load_episode(Path(args.episode).read_bytes())
    except OSError as e:
        _err(f"cannot read {args.episode}: {e}")
        return EXIT_IO
    except ValueError as e:
        _err(f"{args.episode}: {e}")
        return EXIT_VALIDATION
    try:
        cam_a = _load_camera(args.cam_a)
        cam_b = _load_camera(args.cam_b)
    except (OSError, KeyError, ValueError) as e:
        _err(f"bad camera file: {e}")
        return EXIT_VALIDATION if isinstance(e, (KeyError, ValueError)) else EXIT_IO
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    depth_dir = Path(args.depth_dir)
    images_dir = Path(args.images_dir) if args.images_dir else None

    du_sum = dv_sum = cov_sum = 0.0
    n_frames = len(ep.frames)
    for i in range(n_frames):
        dpath = depth_dir / f"{i:06d}.lfd"
        if not dpath.exists():
            _err(f"missing depth file: {dpath}")
            return EXIT_IO
        depth = read_depth(dpath)
        flow = reproject(depth, cam_a, cam_b)
        write_flow(out_dir / f"{i:06d}.lff", flow)
        n_valid = int(flow.valid.sum())
        if n_valid:
            du_sum += float(np.abs(flow.du[flow.valid]).mean())
            dv_sum += float(np.abs(flow.dv[flow.valid]).mean())
        cov_sum += n_valid / flow.valid.size
        if images_dir is not None:
            from PIL import Image

            ipath = images_dir / f"{i:06d}.png"
            if not ipath.exists():
                _err(f"missing image file: {ipath}")
                return EXIT_IO
            img = np.asarray(Image.open(ipath).convert("RGB"))
            warped, coverage = warp_image(img, flow, depth=depth)
            Image.fromarray(warped).save(out_dir / f"{i:06d}_warped.png")
            Image.fromarray((coverage * 255).astype(np.uint8)).save(out_dir / f"{i:06d}_coverage.png")
    stats = {
        "frames": n_frames,
        "mean_abs_du": du_sum / n_frames if n_frames else 0.0,
        "mean_abs_dv": dv_sum / n_frames if n_frames else 0.0,
        "mean_coverage": cov_sum / n_frames if n_frames else 0.0,
    }
    print(json.dumps(stats))
    return EXIT_OK


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def cmd_stats(args) -> int:
    files = sorted(globmod.glob(args.episodes))
    total_frames = 0
    total_duration = 0.0
    boxes: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    for f in files:
        try:
            ep = load_episode(Path(f).read_bytes())
        except OSError as e:
            _err(f"cannot read {f}: {e}")
            return EXIT_IO
        except ValueError as e:
            _err(f"corrupt episode {f}: {e}")
            return EXIT_VALIDATION
        total_frames += len(ep)
        total_duration += ep.duration
        for frame in ep.frames:
            for site, pose in frame.mocap.items():
                if site not in boxes:
                    boxes[site] = (pose.position.copy(), pose.position.copy())
                else:
                    lo, hi = boxes[site]
                    np.minimum(lo, pose.position, out=lo)
                    np.maximum(hi, pose.position, out=hi)
    print(
        json.dumps(
            {
                "episodes": len(files),
                "frames": total_frames,
                "duration_s": total_duration,
                "workspace": {s: {"min": lo.tolist(), "max": hi.tolist()} for s, (lo, hi) in sorted(boxes.items())},
            }
        )
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lucidforge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"lucidforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a scene description to MJCF XML")
    c.add_argument("scene")
    c.add_argument("out")
    c.add_argument("--assets", action="store_true", help="collect file= assets next to the output")
    c.set_defaults(func=cmd_compile)

    s = sub.add_parser("serve", help="run the live teleoperation server")
    s.add_argument("model", help="MJCF model file")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8765)
    s.add_argument("--decimation", type=int, default=10, help="IK substeps per tick, 5..20")
    s.add_argument("--grasp-radius", type=float, default=0.05)
    s.add_argument("--record-dir", default=None)
    s.add_argument("--retarget", default=None, help="retarget map JSON")
    s.set_defaults(func=cmd_serve)

    a = sub.add_parser("augment", help="multiply episodes by keypoint warping")
    a.add_argument("episodes", help="glob of episode files")
    a.add_argument("out_dir")
    a.add_argument("--multiplier", "-k", type=int, default=5)
    a.add_argument("--max-trans", type=float, default=0.05)
    a.add_argument("--max-rot", type=float, default=0.2)
    a.add_argument("--keypoints", type=int, default=5)
    a.add_argument("--seed", type=int, default=_default_seed())
    a.set_defaults(func=cmd_augment)

    w = sub.add_parser("warp-camera", help="reproject an episode's views into a new camera")
    w.add_argument("episode")
    w.add_argument("--depth-dir", required=True, help="per-frame NNNNNN.lfd depth files")
    w.add_argument("--cam-a", required=True)
    w.add_argument("--cam-b", required=True)
    w.add_argument("--out-dir", required=True)
    w.add_argument("--images-dir", default=None, help="optional per-frame NNNNNN.png images to warp")
    w.set_defaults(func=cmd_warp_camera)

    st = sub.add_parser("stats", help="dataset statistics as JSON")
    st.add_argument("episodes", help="glob of episode files")
    st.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
