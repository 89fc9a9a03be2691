"""Camera repositioning geometry: per-pixel optical flow from ground-truth
depth and two camera models, and forward-splat image warping along a flow.

Camera convention: right-handed, x right, y up, looking down -z; pixel u
grows right, v grows down; depth is measured along -z (positive in front).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..se3 import Pose, quat_to_matrix


class DimensionMismatchError(ValueError):
    pass


@dataclass
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose  # camera-to-world

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be > 0")
        if not (0 < self.cx < self.width and 0 < self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    def same_view(self, other: "CameraModel") -> bool:
        return (
            (self.fx, self.fy, self.cx, self.cy, self.width, self.height)
            == (other.fx, other.fy, other.cx, other.cy, other.width, other.height)
            and np.array_equal(self.pose.position, other.pose.position)
            and np.array_equal(self.pose.quat, other.pose.quat)
        )


@dataclass
class DepthMap:
    values: np.ndarray  # (H, W) depth along -z, meters
    validity: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("depth must be a 2-D array")
        if self.validity is None:
            self.validity = np.isfinite(self.values) & (self.values > 0)
        else:
            self.validity = np.asarray(self.validity, dtype=bool)
            if self.validity.shape != self.values.shape:
                raise DimensionMismatchError("validity shape differs from depth shape")
            bad = self.validity & ~(np.isfinite(self.values) & (self.values > 0))
            if np.any(bad):
                raise ValueError("valid depth entries must be finite and > 0")

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass
class FlowField:
    du: np.ndarray
    dv: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.du = np.asarray(self.du, dtype=np.float64)
        self.dv = np.asarray(self.dv, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if not (self.du.shape == self.dv.shape == self.valid.shape):
            raise DimensionMismatchError("flow component shapes differ")
        if np.any(~np.isfinite(self.du[self.valid])) or np.any(~np.isfinite(self.dv[self.valid])):
            raise ValueError("flow must be finite where valid")

    @property
    def width(self) -> int:
        return self.du.shape[1]

    @property
    def height(self) -> int:
        return self.du.shape[0]


def reproject(depth: DepthMap, cam_a: CameraModel, cam_b: CameraModel) -> FlowField:
    """Per-pixel displacement moving cam_a's image into cam_b's view.

    Back-projects each valid pixel through cam_a's depth, lifts to world,
    and projects into cam_b; pixels landing behind cam_b or outside its
    frame are invalid. Identical cameras short-circuit to an exactly zero
    field.
    """
    H, W = cam_a.height, cam_a.width
    if depth.values.shape != (H, W):
        raise DimensionMismatchError(f"depth is {depth.values.shape}, camera expects {(H, W)}")
    if cam_a.same_view(cam_b):
        zeros = np.zeros((H, W))
        return FlowField(du=zeros, dv=zeros.copy(), valid=depth.validity.copy())

    u = np.arange(W, dtype=np.float64)[None, :]
    v = np.arange(H, dtype=np.float64)[:, None]
    d = depth.values
    X = (u - cam_a.cx) * d / cam_a.fx
    Y = -(v - cam_a.cy) * d / cam_a.fy
    Z = -d

    Ra = quat_to_matrix(cam_a.pose.quat)
    Rb = quat_to_matrix(cam_b.pose.quat)
    P = np.stack([X, Y, Z], axis=-1)
    Pw = P @ Ra.T + cam_a.pose.position
    Pb = (Pw - cam_b.pose.position) @ Rb

    db = -Pb[..., 2]
    front = db > 1e-12
    safe_db = np.where(front, db, 1.0)
    u2 = cam_b.cx + cam_b.fx * Pb[..., 0] / safe_db
    v2 = cam_b.cy - cam_b.fy * Pb[..., 1] / safe_db
    inside = (u2 >= 0) & (u2 <= cam_b.width - 1) & (v2 >= 0) & (v2 <= cam_b.height - 1)
    valid = depth.validity & front & inside
    du = np.where(valid, u2 - u, 0.0)
    dv = np.where(valid, v2 - v, 0.0)
    return FlowField(du=du, dv=dv, valid=valid)


def warp_image(
    img: np.ndarray, flow: FlowField, depth: DepthMap | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Forward-splat img along flow with bilinear weights.

    When depth is given, overlapping splats are resolved front-to-back
    (nearest source depth wins); output pixels no source reaches are masked
    out in the returned coverage array. Output pixel values are convex
    combinations of source pixels.
    """
    img = np.asarray(img)
    H, W = flow.du.shape
    if img.shape[:2] != (H, W):
        raise DimensionMismatchError(f"image is {img.shape[:2]}, flow is {(H, W)}")
    if depth is not None and depth.values.shape != (H, W):
        raise DimensionMismatchError("depth shape differs from flow shape")
    channels = img.reshape(H, W, -1)
    nc = channels.shape[2]

    src_v, src_u = np.nonzero(flow.valid)
    tu = src_u + flow.du[src_v, src_u]
    tv = src_v + flow.dv[src_v, src_u]
    i0 = np.floor(tu).astype(np.int64)
    j0 = np.floor(tv).astype(np.int64)
    fu = tu - i0
    fv = tv - j0

    corner_idx = []
    corner_w = []
    for di, dj, w in (
        (0, 0, (1 - fu) * (1 - fv)),
        (1, 0, fu * (1 - fv)),
        (0, 1, (1 - fu) * fv),
        (1, 1, fu * fv),
    ):
        ci = i0 + di
        cj = j0 + dj
        ok = (ci >= 0) & (ci < W) & (cj >= 0) & (cj < H) & (w > 0)
        corner_idx.append((cj[ok] * W + ci[ok], ok))
        corner_w.append(w[ok])

    if depth is not None:
        src_d = depth.values[src_v, src_u]
        zbuf = np.full(H * W, np.inf)
        for (flat, ok), _ in zip(corner_idx, corner_w):
            np.minimum.at(zbuf, flat, src_d[ok])
        # keep contributions within a relative band of the front surface
        keep_band = zbuf * (1.0 + 1e-6) + 1e-9

    acc = np.zeros((H * W, nc))
    wacc = np.zeros(H * W)
    vals = channels[src_v, src_u].astype(np.float64)
    for (flat, ok), w in zip(corner_idx, corner_w):
        if depth is not None:
            near = depth.values[src_v, src_u][ok] <= keep_band[flat]
            flat, w, sel = flat[near], w[near], np.nonzero(ok)[0][near]
        else:
            sel = np.nonzero(ok)[0]
        np.add.at(acc, flat, vals[sel] * w[:, None])
        np.add.at(wacc, flat, w)

    coverage = wacc > 1e-8
    out = np.zeros((H * W, nc))
    out[coverage] = acc[coverage] / wacc[coverage, None]
    out = out.reshape(H, W, nc)
    if np.issubdtype(img.dtype, np.integer):
        info = np.iinfo(img.dtype)
        out = np.clip(np.rint(out), info.min, info.max)
    out = out.astype(img.dtype).reshape(img.shape)
    return out, coverage.reshape(H, W)
