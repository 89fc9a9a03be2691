"""25 Hz episode recording: append-only frames of poses, on-disk JSON-lines
with 6-number rotations, plus replay pacing and downsampling.

File layout (UTF-8, LF): line 1 is the header
``{"lucidforge_episode": 1, "rate_hz": 25, "scene_hash": ..., "model_hash": ...}``;
each further line is one frame with keys in the order
``t, mocap, q, action, attachments``. Poses are 9-number arrays
``[x, y, z, r1..r6]`` (position + first two rotation-matrix columns); floats
are shortest round-trip decimals; site keys are sorted.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .se3 import Pose, lerp_pose, rot_from_6d, rot_to_6d

FORMAT_VERSION = 1


class NonMonotoneTimeError(ValueError):
    pass


class PacingViolationError(ValueError):
    pass


class SchemaMismatchError(ValueError):
    pass


class UnsupportedVersionError(ValueError):
    pass


class UpsampleUnsupportedError(ValueError):
    pass


class CorruptFrameError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class Frame:
    t: float
    mocap: dict[str, Pose]
    q: np.ndarray
    action: dict[str, Pose]
    attachments: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=np.float64).reshape(-1)
        self.attachments = [(str(a), str(b)) for a, b in self.attachments]


@dataclass
class EpisodeMeta:
    version: int = FORMAT_VERSION
    rate_hz: float = 25.0
    scene_hash: str = ""
    model_hash: str = ""
    created: str = ""  # in-memory only; not persisted


@dataclass
class Episode:
    meta: EpisodeMeta = field(default_factory=EpisodeMeta)
    frames: list[Frame] = field(default_factory=list)

    def __len__(self):
        return len(self.frames)

    @property
    def duration(self) -> float:
        return self.frames[-1].t - self.frames[0].t if self.frames else 0.0

    def append(self, f: Frame):
        """Add a frame, enforcing monotone time, frame pacing, and a fixed
        key schema across the episode."""
        if self.frames:
            last = self.frames[-1]
            if f.t <= last.t:
                raise NonMonotoneTimeError(f"t={f.t} not after t={last.t}")
            period = 1.0 / self.meta.rate_hz
            if abs((f.t - last.t) - period) > 0.5 * period + 1e-12:
                raise PacingViolationError(f"frame gap {f.t - last.t:.6f}s vs period {period:.6f}s")
            first = self.frames[0]
            if set(f.mocap) != set(first.mocap) or set(f.action) != set(first.action):
                raise SchemaMismatchError("mocap/action key set changed mid-episode")
            if f.q.shape != first.q.shape:
                raise SchemaMismatchError("q length changed mid-episode")
        self.frames.append(f)


def _encode_pose(p: Pose) -> list[float]:
    return [*p.position.tolist(), *rot_to_6d(p.quat).tolist()]


def _decode_pose(v) -> Pose:
    if not isinstance(v, list) or len(v) != 9:
        raise ValueError("pose must be a 9-number array")
    return Pose(position=np.array(v[:3], dtype=np.float64), quat=rot_from_6d(np.array(v[3:], dtype=np.float64)))


def _rate_json(rate: float):
    return int(rate) if float(rate).is_integer() else rate


def save(ep: Episode) -> bytes:
    """Serialize to the JSON-lines container; deterministic bytes."""
    out = [
        json.dumps(
            {
                "lucidforge_episode": ep.meta.version,
                "rate_hz": _rate_json(ep.meta.rate_hz),
                "scene_hash": ep.meta.scene_hash,
                "model_hash": ep.meta.model_hash,
            },
            separators=(", ", ": "),
        )
    ]
    for f in ep.frames:
        rec = {
            "t": f.t,
            "mocap": {k: _encode_pose(f.mocap[k]) for k in sorted(f.mocap)},
            "q": f.q.tolist(),
            "action": {k: _encode_pose(f.action[k]) for k in sorted(f.action)},
            "attachments": [list(a) for a in f.attachments],
        }
        out.append(json.dumps(rec, separators=(",", ":")))
    return ("\n".join(out) + "\n").encode("utf-8")


def load(data: bytes) -> Episode:
    """Parse and validate a serialized episode; per-line failures report the
    offending 1-based line number."""
    text = data.decode("utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise CorruptFrameError(1, "empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise CorruptFrameError(1, f"bad header: {e}") from None
    if not isinstance(header, dict) or "lucidforge_episode" not in header:
        raise UnsupportedVersionError("not an episode file")
    if header["lucidforge_episode"] != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported version {header['lucidforge_episode']!r}")
    ep = Episode(
        meta=EpisodeMeta(
            version=FORMAT_VERSION,
            rate_hz=float(header.get("rate_hz", 25.0)),
            scene_hash=str(header.get("scene_hash", "")),
            model_hash=str(header.get("model_hash", "")),
        )
    )
    if len(lines) < 2:
        raise CorruptFrameError(2, "episode has no frames")
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            rec = json.loads(line)
            frame = Frame(
                t=float(rec["t"]),
                mocap={k: _decode_pose(v) for k, v in rec["mocap"].items()},
                q=np.array(rec["q"], dtype=np.float64),
                action={k: _decode_pose(v) for k, v in rec["action"].items()},
                attachments=[(a[0], a[1]) for a in rec["attachments"]],
            )
            ep.append(frame)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as e:
            raise CorruptFrameError(lineno, str(e)) from None
    return ep


def replay(ep: Episode, rate_multiplier: float = math.inf):
    """Yield (t, frame) in order; finite multipliers pace delivery at
    1/(rate*multiplier) seconds per frame, math.inf streams immediately."""
    if rate_multiplier <= 0:
        raise ValueError("rate_multiplier must be > 0")
    if math.isinf(rate_multiplier):
        for f in ep.frames:
            yield f.t, f
        return
    period = 1.0 / (ep.meta.rate_hz * rate_multiplier)
    start = time.monotonic()
    for i, f in enumerate(ep.frames):
        deadline = start + i * period
        delay = deadline - time.monotonic()
        if delay > 0:
            time.sleep(delay)
        yield f.t, f


def resample(ep: Episode, new_rate_hz: float) -> Episode:
    """Downsample onto a uniform new_rate_hz grid: poses via lerp_pose between
    bracketing frames, q linearly interpolated, attachments held from the
    earlier bracketing frame."""
    if new_rate_hz > ep.meta.rate_hz:
        raise UpsampleUnsupportedError(f"cannot resample {ep.meta.rate_hz} Hz to {new_rate_hz} Hz")
    meta = EpisodeMeta(
        version=ep.meta.version,
        rate_hz=new_rate_hz,
        scene_hash=ep.meta.scene_hash,
        model_hash=ep.meta.model_hash,
        created=ep.meta.created,
    )
    out = Episode(meta=meta)
    if new_rate_hz == ep.meta.rate_hz:
        for f in ep.frames:
            out.append(
                Frame(
                    t=f.t,
                    mocap={k: p.copy() for k, p in f.mocap.items()},
                    q=f.q.copy(),
                    action={k: p.copy() for k, p in f.action.items()},
                    attachments=list(f.attachments),
                )
            )
        return out
    ts = np.array([f.t for f in ep.frames])
    t0, t_end = ts[0], ts[-1]
    n = int(math.floor((t_end - t0) * new_rate_hz + 1e-9)) + 1
    for k in range(n):
        t = t0 + k / new_rate_hz
        i = int(np.searchsorted(ts, t, side="right")) - 1
        i = min(max(i, 0), len(ts) - 1)
        a = ep.frames[i]
        if i == len(ts) - 1 or t <= ts[i]:
            f = Frame(
                t=t,
                mocap={k2: p.copy() for k2, p in a.mocap.items()},
                q=a.q.copy(),
                action={k2: p.copy() for k2, p in a.action.items()},
                attachments=list(a.attachments),
            )
        else:
            b = ep.frames[i + 1]
            s = (t - ts[i]) / (ts[i + 1] - ts[i])
            f = Frame(
                t=t,
                mocap={k2: lerp_pose(a.mocap[k2], b.mocap[k2], s) for k2 in a.mocap},
                q=(1.0 - s) * a.q + s * b.q,
                action={k2: lerp_pose(a.action[k2], b.action[k2], s) for k2 in a.action},
                attachments=list(a.attachments),
            )
        out.append(f)
    return out
