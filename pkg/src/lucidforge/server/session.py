"""The per-connection session kernel: ordered message handling, fixed-rate
ticking with IK substeps, a kinematic grasp surrogate, 25 Hz recording, and
single-message reset.

The kernel is synchronous and deterministic: given the same message trace
and tick schedule it produces identical state broadcasts and identical
recorded episodes. Wall-clock scheduling lives in the websocket layer;
tests drive virtual time through run_trace.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from ..episodes import Episode, EpisodeMeta, Frame
from ..hitchhike import Anchor, GestureParams, activate, apply_delta, gesture_state
from ..kinematics import (
    HandFrame,
    IkOptions,
    NonFiniteResidualError,
    RetargetMap,
    WeldTarget,
    forward_kinematics,
    rest_config,
    retarget,
    solve_ik,
)
from ..scene.mjcf import KinematicTree, parse_mjcf
from ..se3 import Pose

_DEFAULT_WEIGHTS = (1.0, 0.3)


@dataclass
class TickConfig:
    input_rate_hz: float = 90.0
    record_rate_hz: float = 25.0
    decimation: int = 10  # IK substeps per tick
    grasp_radius: float = 0.05  # m

    def __post_init__(self):
        if not 5 <= self.decimation <= 20:
            raise ValueError("decimation must lie in [5, 20]")
        if self.record_rate_hz > self.input_rate_hz:
            raise ValueError("record rate cannot exceed input rate")


def pose_to_wire(p: Pose) -> dict:
    return {"p": p.position.tolist(), "q": p.quat.tolist()}


def pose_from_wire(d) -> Pose:
    return Pose(position=np.asarray(d["p"], dtype=np.float64), quat=np.asarray(d["q"], dtype=np.float64))


def _error(code: str, detail: str = "") -> dict:
    return {"type": "error", "code": code, "detail": detail}


class Session:
    """State of one connected operator driving one scene."""

    def __init__(
        self,
        session_id: str,
        tree: KinematicTree,
        model_hash: str = "",
        scene_hash: str = "",
        retarget_map: RetargetMap | None = None,
        gesture: GestureParams | None = None,
        ik: IkOptions | None = None,
    ):
        self.id = session_id
        self.tree = tree
        self.model_hash = model_hash
        self.scene_hash = scene_hash
        self.retarget_map = retarget_map
        if retarget_map is not None:
            retarget_map.validate_sites(tree)
        self.gesture = gesture or GestureParams()
        self.ik = ik or IkOptions()
        self._site_names = sorted(s.name for s in tree.sites if s.name)
        self._free_names = [tree.bodies[i].name for i in tree.free_body_indices()]

        self.q = rest_config(tree)
        rest_poses = forward_kinematics(tree, self.q)
        self.free_poses: dict[str, Pose] = {n: rest_poses[n].copy() for n in self._free_names}
        self._initial_q = self.q.copy()
        self._initial_free = {n: p.copy() for n, p in self.free_poses.items()}

        self.mocap_targets: dict[str, Pose] = {}
        self.target_weights: dict[str, tuple[float, float]] = {}
        self.anchor: Anchor | None = None
        self.engaged = False
        self._attach_engaged = False
        self.attachments: list[tuple[str, str, Pose]] = []  # (object body, gripper site, grasp-local)
        self.latest_hand: HandFrame | None = None

        self.recording: Episode | None = None
        self._next_record_t: float | None = None
        self.finished: list[Episode] = []

        self.tick_count = 0
        self.t = 0.0

    @classmethod
    def from_xml(cls, session_id: str, xml: str, **kwargs) -> "Session":
        tree = parse_mjcf(xml)
        digest = hashlib.sha256(xml.encode("utf-8")).hexdigest()
        return cls(session_id, tree, model_hash=digest, scene_hash=kwargs.pop("scene_hash", digest), **kwargs)

    # -- message handling ---------------------------------------------------

    def handle_message(self, msg) -> list[dict]:
        """Apply one inbound message; malformed input yields an error message,
        never an exception."""
        if not isinstance(msg, dict) or not isinstance(msg.get("type"), str):
            return [_error("bad_message", "expected an object with a string 'type'")]
        kind = msg["type"]
        if kind == "hand_frame":
            return self._on_hand_frame(msg)
        if kind == "select_site":
            return self._on_select_site(msg)
        if kind == "reset":
            self.reset()
            return []
        if kind == "record_start":
            if self.recording is not None:
                return [_error("already_recording")]
            self.recording = Episode(
                meta=EpisodeMeta(rate_hz=25.0, scene_hash=self.scene_hash, model_hash=self.model_hash)
            )
            self._next_record_t = None  # capture at the next tick
            return []
        if kind == "record_stop":
            if self.recording is None:
                return [_error("not_recording")]
            ep, self.recording = self.recording, None
            if not ep.frames:
                return [_error("empty_episode", "stopped before any frame was captured")]
            self.finished.append(ep)
            return []
        return [_error("unknown_type", kind)]

    def _on_hand_frame(self, msg) -> list[dict]:
        try:
            hand = HandFrame(
                wrist=pose_from_wire(msg["wrist"]),
                fingertips=tuple(pose_from_wire(p) for p in msg["tips"]),
                curl=np.asarray(msg["curl"], dtype=np.float64),
            )
        except (KeyError, TypeError, ValueError) as e:
            return [_error("bad_hand_frame", str(e))]
        self.latest_hand = hand
        self.engaged = gesture_state(self.engaged, hand, self.gesture)
        if self.anchor is not None:
            self.anchor.engaged = self.engaged
        if not self.engaged:
            return []
        if self.anchor is not None:
            wrist_target = apply_delta(self.anchor, hand.wrist)
            self.mocap_targets[self.anchor.site] = wrist_target
            self.target_weights.setdefault(self.anchor.site, _DEFAULT_WEIGHTS)
        else:
            wrist_target = hand.wrist
        if self.retarget_map is not None:
            for wt in retarget(hand, self.retarget_map, wrist_target):
                self.mocap_targets[wt.site] = wt.target
                self.target_weights[wt.site] = (wt.pos_weight, wt.rot_weight)
        return []

    def _on_select_site(self, msg) -> list[dict]:
        site = msg.get("site")
        if site not in self._site_names:
            return [_error("unknown_site", str(site))]
        if self.latest_hand is None:
            return [_error("no_hand_frame", "select_site needs a hand pose; send a hand_frame first")]
        poses = self._world_poses()
        self.anchor = activate(site, self.latest_hand.wrist, poses[site])
        return []

    # -- ticking ------------------------------------------------------------

    def tick(self, cfg: TickConfig) -> list[dict]:
        """One broadcast step: decimation IK substeps toward the current
        targets, rigid attachment tracking, optional 25 Hz frame capture."""
        self.tick_count += 1
        self.t += 1.0 / cfg.input_rate_hz
        out: list[dict] = []

        if self.mocap_targets:
            targets = [
                WeldTarget(site=s, target=p, pos_weight=self.target_weights.get(s, _DEFAULT_WEIGHTS)[0],
                           rot_weight=self.target_weights.get(s, _DEFAULT_WEIGHTS)[1])
                for s, p in sorted(self.mocap_targets.items())
            ]
            # tracking mode: hold at the workspace boundary rather than
            # teleporting through random restarts
            opts = IkOptions(
                damping=self.ik.damping,
                max_iters=cfg.decimation,
                tol=self.ik.tol,
                step_clamp=self.ik.step_clamp,
                restarts=False,
            )
            try:
                self.q = solve_ik(self.tree, self.q, targets, opts).q
            except NonFiniteResidualError:
                self.reset()
                out.append(_error("non_finite_state", "solver diverged; session was reset"))

        poses = None
        if np.all(np.isfinite(self.q)):
            try:
                poses = self._world_poses()
                if not self._finite(poses):
                    poses = None
            except ValueError:  # overflowed transforms reject pose construction
                poses = None
        if poses is None:
            self.reset()
            out.append(_error("non_finite_state", "state diverged; session was reset"))
            poses = self._world_poses()

        self._update_attachments(cfg, poses)
        if self.attachments:
            poses = self._world_poses()

        if self.recording is not None and (self._next_record_t is None or self.t >= self._next_record_t - 1e-9):
            self.recording.append(
                Frame(
                    t=self.t,
                    mocap={s: poses[s].copy() for s in self._site_names},
                    q=self.q.copy(),
                    action={s: self.mocap_targets.get(s, poses[s]).copy() for s in self._site_names},
                    attachments=[(b, s) for b, s, _ in self.attachments],
                )
            )
            base = self.t if self._next_record_t is None else self._next_record_t
            self._next_record_t = base + 1.0 / cfg.record_rate_hz

        out.append(self._state_msg(poses))
        return out

    def _update_attachments(self, cfg: TickConfig, poses: dict[str, Pose]):
        """Grasp surrogate: weld the nearest free body on engage, drop welds
        on release (objects keep their pose), track welded bodies rigidly."""
        if self.engaged != self._attach_engaged:
            if self.engaged and self.anchor is not None:
                grip = poses[self.anchor.site]
                taken = {b for b, _, _ in self.attachments}
                best_name, best_d = None, cfg.grasp_radius
                for name in self._free_names:
                    if name in taken:
                        continue
                    d = float(np.linalg.norm(self.free_poses[name].position - grip.position))
                    if d <= best_d:
                        best_name, best_d = name, d
                if best_name is not None:
                    local = grip.inverse().compose(self.free_poses[best_name])
                    self.attachments.append((best_name, self.anchor.site, local))
            elif not self.engaged:
                self.attachments = []  # released objects keep their last pose
            self._attach_engaged = self.engaged
        for body, site, local in self.attachments:
            self.free_poses[body] = poses[site].compose(local)

    # -- state --------------------------------------------------------------

    def reset(self):
        """Restore the scene's initial state and clear the anchor; an active
        recording continues across the reset."""
        self.q = self._initial_q.copy()
        self.free_poses = {n: p.copy() for n, p in self._initial_free.items()}
        self.mocap_targets = {}
        self.target_weights = {}
        self.anchor = None
        self.engaged = False
        self._attach_engaged = False
        self.attachments = []
        self.latest_hand = None

    def _world_poses(self) -> dict[str, Pose]:
        return forward_kinematics(self.tree, self.q, free_poses=self.free_poses)

    def _finite(self, poses: dict[str, Pose]) -> bool:
        if not np.all(np.isfinite(self.q)):
            return False
        return all(np.all(np.isfinite(p.position)) and np.all(np.isfinite(p.quat)) for p in poses.values())

    def _state_msg(self, poses: dict[str, Pose]) -> dict:
        body_names = sorted(b.name for b in self.tree.bodies if b.name)
        body_names += sorted(m.name for m in self.tree.mocap_bodies if m.name)
        return {
            "type": "state",
            "tick": self.tick_count,
            "t": self.t,
            "q": self.q.tolist(),
            "bodies": {n: pose_to_wire(poses[n]) for n in body_names},
            "sites": {n: pose_to_wire(poses[n]) for n in self._site_names},
            "engaged": self.engaged,
            "recording": self.recording is not None,
        }

    def snapshot(self) -> dict:
        """Comparable view of the mutable scene state (tests, reset checks)."""
        return {
            "q": self.q.copy(),
            "free": {n: (p.position.copy(), p.quat.copy()) for n, p in self.free_poses.items()},
            "targets": {s: (p.position.copy(), p.quat.copy()) for s, p in self.mocap_targets.items()},
            "attachments": [(b, s) for b, s, _ in self.attachments],
            "anchor_site": self.anchor.site if self.anchor else None,
            "engaged": self.engaged,
        }


def run_trace(session: Session, cfg: TickConfig, trace, duration: float) -> list[dict]:
    """Virtual-time driver: deliver messages by their 't' field (untimed
    messages ride with the previous one) and tick at the input rate until
    `duration` seconds of session time have elapsed. Returns all outbound
    messages in order."""
    period = 1.0 / cfg.input_rate_hz
    queue = list(trace)
    out: list[dict] = []
    last_t = 0.0
    while session.t < duration - 1e-12:
        next_tick_t = session.t + period
        while queue:
            msg_t = queue[0].get("t", last_t) if isinstance(queue[0], dict) else last_t
            if msg_t > next_tick_t + 1e-12:
                break
            last_t = msg_t
            out.extend(session.handle_message(queue.pop(0)))
        out.extend(session.tick(cfg))
    return out
