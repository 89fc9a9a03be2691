#!/usr/bin/env python3
"""End-to-end pipeline demo against a live server.

Compiles a scene, serves the gripper model over websockets, drives a
scripted 4-second teleop session that grasps and relocates a cube while
recording, then multiplies the recorded episode and prints dataset stats.

Usage: python3 scripts/run_demo.py [--workdir DIR]
"""

import argparse
import asyncio
import json
import math
import subprocess
import sys
import tempfile
from pathlib import Path

import websockets

from lucidforge.models import gripper_scene

DEMO_SCENE = """
; tabletop demo: a table with a named surface anchor and two props on it
(scene "demo"
  (light "key" pos=[0.0, 0.0, 2.0])
  (camera "front" pos=[1.2, 0.0, 0.9])
  (body "table" pos=[0.0, 0.0, 0.0] anchor_surface=[0.0, 0.0, 0.75]
    (box "top" size=[0.5, 0.4, 0.02] pos=[0.0, 0.0, 0.74]))
  (body "cube" pos=[0.0, 0.1, 0.02] + table.surface mocap="false"
    (box "cube_geom" size=[0.01, 0.01, 0.01]))
)
"""


def hand(t, pos, curl):
    pose = {"p": list(pos), "q": [1.0, 0.0, 0.0, 0.0]}
    return {"type": "hand_frame", "t": t, "wrist": pose, "tips": [pose] * 5, "curl": [curl] * 5}


async def drive(url: str):
    async with websockets.connect(url) as ws:
        hello = json.loads(await ws.recv())
        print(f"connected: model {hello['model_hash'][:12]}..., record rate {hello['rate_hz']} Hz")

        async def send(msg):
            await ws.send(json.dumps(msg))

        await send(hand(0.0, (0.45, 0.15, 0.12), 0.0))
        await send({"type": "select_site", "site": "grip"})
        await send({"type": "record_start"})
        t0 = asyncio.get_event_loop().time()
        t = 0.0
        while t < 4.0:
            t = asyncio.get_event_loop().time() - t0
            # swing the hand; close the lower fingers for the middle 2 seconds
            pos = (0.45 + 0.08 * math.sin(1.5 * t), 0.15 - 0.05 * t, 0.12 + 0.04 * math.sin(3 * t))
            await send(hand(t, pos, 1.0 if 1.0 < t < 3.0 else 0.0))
            # drain broadcasts so the socket buffer stays shallow
            try:
                while True:
                    json.loads(await asyncio.wait_for(ws.recv(), timeout=0.001))
            except (asyncio.TimeoutError, TimeoutError):
                pass
            await asyncio.sleep(1 / 60)
        await send({"type": "record_stop"})
        await send({"type": "reset"})
        await asyncio.sleep(0.2)


async def main_async(workdir: Path):
    scene_path = workdir / "demo_scene.lfs"
    scene_path.write_text(DEMO_SCENE)
    compiled = workdir / "demo_scene.xml"
    rc = subprocess.run(
        [sys.executable, "-m", "lucidforge.cli", "compile", str(scene_path), str(compiled)]
    ).returncode
    print(f"compiled scene -> {compiled} (exit {rc})")

    model_path = workdir / "gripper.xml"
    model_path.write_text(gripper_scene())
    record_dir = workdir / "recordings"

    from lucidforge.server.ws import SessionServer

    server = SessionServer(model_path.read_text(), record_dir=str(record_dir))
    async with websockets.asyncio.server.serve(server._handle, "127.0.0.1", 0) as ws_server:
        port = ws_server.sockets[0].getsockname()[1]
        await drive(f"ws://127.0.0.1:{port}")

    episodes = sorted(record_dir.glob("*.jsonl"))
    print(f"recorded {len(episodes)} episode(s): {[p.name for p in episodes]}")

    aug_dir = workdir / "augmented"
    subprocess.run(
        [
            sys.executable, "-m", "lucidforge.cli", "augment",
            str(record_dir / "*.jsonl"), str(aug_dir),
            "-k", "3", "--max-trans", "0.03", "--max-rot", "0.15", "--seed", "7",
        ],
        check=True,
    )
    subprocess.run(
        [sys.executable, "-m", "lucidforge.cli", "stats", str(aug_dir / "*.jsonl")], check=True
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--workdir", default=None)
    args = ap.parse_args()
    workdir = Path(args.workdir) if args.workdir else Path(tempfile.mkdtemp(prefix="lucidforge_demo_"))
    workdir.mkdir(parents=True, exist_ok=True)
    print(f"working in {workdir}")
    asyncio.run(main_async(workdir))


if __name__ == "__main__":
    main()
