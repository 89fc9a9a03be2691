#!/usr/bin/env python3
"""Tick latency experiment: retarget + decimation-10 IK substeps + attachment
update on a 30-joint model, reporting mean and p99 wall time per tick.

Usage: python3 scripts/bench_tick.py [--ticks 900] [--decimation 10]
"""

import argparse
import json
import math
import time

import numpy as np

from lucidforge.kinematics import Binding, RetargetMap
from lucidforge.models import branched_rig
from lucidforge.server.session import Session, TickConfig


def hand_msg(t, pos, curl, quat=(1.0, 0.0, 0.0, 0.0)):
    pose = {"p": list(pos), "q": list(quat)}
    return {"type": "hand_frame", "t": t, "wrist": pose, "tips": [pose] * 5, "curl": [curl] * 5}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--ticks", type=int, default=900)
    ap.add_argument("--decimation", type=int, default=10)
    args = ap.parse_args()

    xml = branched_rig(trunk_joints=18, finger_segments=3)  # 18 + 3*(1+3) = 30 joints
    rmap = RetargetMap(
        bindings=[Binding("wrist", "wrist")] + [Binding(f"tip_{f}", f"tip_{f}") for f in range(3)],
        scale=1.0,
    )
    session = Session.from_xml("bench", xml, retarget_map=rmap)
    assert session.tree.nq == 30, session.tree.nq
    cfg = TickConfig(decimation=args.decimation)

    # anchor on the wrist, engage, then wave the hand on a lissajous path
    session.handle_message(hand_msg(0.0, (0.5, 0.0, 0.5), curl=0.0))
    session.handle_message({"type": "select_site", "site": "wrist"})
    session.handle_message(hand_msg(0.01, (0.5, 0.0, 0.5), curl=1.0))

    times = []
    for i in range(args.ticks):
        t = 0.02 + i / cfg.input_rate_hz
        pos = (0.5 + 0.1 * math.sin(2 * t), 0.1 * math.sin(3 * t), 0.5 + 0.08 * math.cos(2 * t))
        session.handle_message(hand_msg(t, pos, curl=1.0))
        t0 = time.perf_counter()
        session.tick(cfg)
        times.append(time.perf_counter() - t0)

    times_ms = np.array(times) * 1e3
    report = {
        "joints": session.tree.nq,
        "decimation": cfg.decimation,
        "ticks": len(times_ms),
        "mean_ms": float(times_ms.mean()),
        "p50_ms": float(np.percentile(times_ms, 50)),
        "p99_ms": float(np.percentile(times_ms, 99)),
        "max_ms": float(times_ms.max()),
        "budget_ms": 12.0,
        "within_budget": bool(times_ms.mean() <= 12.0),
    }
    print(json.dumps(report, indent=2))


if __name__ == "__main__":
    main()
