"""Trajectory multiplication by keypoint warping: perturb selected frames
with sampled pose deltas and interpolate the perturbation across the episode
(linear for position, spherical for rotation), yielding new demonstrations.

Deltas pre-compose in the world frame (p -> D o p) so objects and robots move
coherently through the workspace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..episodes import Episode, EpisodeMeta, Frame
from ..se3 import Pose, lerp_pose, quat_angle, quat_from_axis_angle

_IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])


class EpisodeTooShortError(ValueError):
    pass


class SpecMismatchError(ValueError):
    pass


@dataclass
class WarpBounds:
    max_trans: float = 0.05  # m
    max_rot: float = 0.2  # rad

    def __post_init__(self):
        if self.max_trans < 0 or self.max_rot < 0:
            raise ValueError("bounds must be >= 0")


@dataclass
class WarpSpec:
    keypoints: list[int]  # strictly increasing, includes 0 and the last frame
    deltas: list[Pose]
    seed: int
    bounds: WarpBounds

    def __post_init__(self):
        if len(self.keypoints) < 2:
            raise ValueError("need at least 2 keypoints")
        if any(b <= a for a, b in zip(self.keypoints, self.keypoints[1:])):
            raise ValueError("keypoints must be strictly increasing")
        if self.keypoints[0] != 0:
            raise ValueError("first keypoint must be frame 0")
        if len(self.deltas) != len(self.keypoints):
            raise ValueError("one delta per keypoint required")
        for d in self.deltas:
            if np.linalg.norm(d.position) > self.bounds.max_trans * (1 + 1e-9) + 1e-12:
                raise ValueError("translation delta exceeds bounds")
            if quat_angle(d.quat) > self.bounds.max_rot * (1 + 1e-9) + 1e-12:
                raise ValueError("rotation delta exceeds bounds")


def _unit_vector(rng) -> np.ndarray:
    v = rng.normal(size=3)
    n = np.linalg.norm(v)
    while n < 1e-12:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
    return v / n


def sample_warp(ep: Episode, n_keypoints: int, bounds: WarpBounds, seed: int) -> WarpSpec:
    """Evenly spaced keypoints (endpoints always included) with deltas drawn
    uniformly: translation in the max_trans ball, rotation about a uniform
    axis with angle uniform in [0, max_rot]. Deterministic given seed."""
    if n_keypoints < 2:
        raise EpisodeTooShortError("need at least 2 keypoints")
    if len(ep) < n_keypoints:
        raise EpisodeTooShortError(f"episode has {len(ep)} frames, needs >= {n_keypoints}")
    keypoints = np.round(np.linspace(0, len(ep) - 1, n_keypoints)).astype(int).tolist()
    rng = np.random.default_rng(seed)
    deltas = []
    for _ in keypoints:
        direction = _unit_vector(rng)
        radius = bounds.max_trans * rng.random() ** (1.0 / 3.0)
        axis = _unit_vector(rng)
        angle = float(rng.uniform(0.0, bounds.max_rot)) if bounds.max_rot > 0 else 0.0
        deltas.append(Pose(position=radius * direction, quat=quat_from_axis_angle(axis, angle)))
    return WarpSpec(keypoints=keypoints, deltas=deltas, seed=seed, bounds=bounds)


def _is_identity(p: Pose) -> bool:
    return bool(np.all(p.position == 0.0) and np.array_equal(p.quat, _IDENTITY_QUAT))


def warp_trajectory(ep: Episode, spec: WarpSpec) -> Episode:
    """Apply interpolated deltas to every mocap and action pose.

    At keypoint frames the exact keypoint delta applies; between keypoints
    k_a <= i <= k_b the delta is lerp_pose(delta_a, delta_b, (i-k_a)/(k_b-k_a)).
    Timestamps, joint values, and attachments pass through untouched.
    """
    if spec.keypoints[-1] != len(ep) - 1:
        raise SpecMismatchError(f"last keypoint {spec.keypoints[-1]} != last frame {len(ep) - 1}")
    kp = np.asarray(spec.keypoints)
    out = Episode(
        meta=EpisodeMeta(
            version=ep.meta.version,
            rate_hz=ep.meta.rate_hz,
            scene_hash=ep.meta.scene_hash,
            model_hash=ep.meta.model_hash,
            created=ep.meta.created,
        )
    )
    for i, f in enumerate(ep.frames):
        seg = int(np.searchsorted(kp, i, side="right")) - 1
        if kp[seg] == i:
            delta = spec.deltas[seg]
        else:
            s = (i - kp[seg]) / (kp[seg + 1] - kp[seg])
            delta = lerp_pose(spec.deltas[seg], spec.deltas[seg + 1], s)
        if _is_identity(delta):
            mocap = {k: p.copy() for k, p in f.mocap.items()}
            action = {k: p.copy() for k, p in f.action.items()}
        else:
            mocap = {k: delta.compose(p) for k, p in f.mocap.items()}
            action = {k: delta.compose(p) for k, p in f.action.items()}
        out.append(Frame(t=f.t, mocap=mocap, q=f.q.copy(), action=action, attachments=list(f.attachments)))
    return out


def multiply(
    eps: list[Episode], k: int, bounds: WarpBounds, seed: int, n_keypoints: int = 5
) -> list[Episode]:
    """k x |eps| episodes: each original followed by k-1 warped variants,
    deterministic given seed."""
    if k < 1:
        raise ValueError("k must be >= 1")
    out: list[Episode] = []
    for idx, ep in enumerate(eps):
        out.append(ep)
        for j in range(1, k):
            sub_seed = int(np.random.SeedSequence([seed & 0xFFFFFFFF, idx, j]).generate_state(1)[0])
            spec = sample_warp(ep, min(n_keypoints, len(ep)), bounds, sub_seed)
            out.append(warp_trajectory(ep, spec))
    return out
