"""Binary file formats for depth maps and flow fields.

Depth: magic ``LFDEPTH1``, little-endian u32 width and height, then
row-major float32 depths (invalid pixels written as 0). Flow: magic
``LFFLOW01``, u32 width/height, float32 du then dv row-major, then one u8
validity byte per pixel.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .reproject import DepthMap, FlowField

DEPTH_MAGIC = b"LFDEPTH1"
FLOW_MAGIC = b"LFFLOW01"


class BadFileError(ValueError):
    pass


def depth_to_bytes(depth: DepthMap) -> bytes:
    vals = np.where(depth.validity, depth.values, 0.0).astype("<f4")
    h, w = vals.shape
    return DEPTH_MAGIC + struct.pack("<II", w, h) + vals.tobytes()


def depth_from_bytes(data: bytes) -> DepthMap:
    if data[:8] != DEPTH_MAGIC:
        raise BadFileError("not a depth file (bad magic)")
    w, h = struct.unpack_from("<II", data, 8)
    need = 16 + 4 * w * h
    if len(data) < need:
        raise BadFileError(f"truncated depth file: {len(data)} < {need} bytes")
    vals = np.frombuffer(data, dtype="<f4", count=w * h, offset=16).reshape(h, w).astype(np.float64)
    return DepthMap(values=vals)  # validity derived: finite and > 0


def write_depth(path, depth: DepthMap):
    Path(path).write_bytes(depth_to_bytes(depth))


def read_depth(path) -> DepthMap:
    return depth_from_bytes(Path(path).read_bytes())


def flow_to_bytes(flow: FlowField) -> bytes:
    h, w = flow.du.shape
    return (
        FLOW_MAGIC
        + struct.pack("<II", w, h)
        + flow.du.astype("<f4").tobytes()
        + flow.dv.astype("<f4").tobytes()
        + flow.valid.astype(np.uint8).tobytes()
    )


def flow_from_bytes(data: bytes) -> FlowField:
    if data[:8] != FLOW_MAGIC:
        raise BadFileError("not a flow file (bad magic)")
    w, h = struct.unpack_from("<II", data, 8)
    n = w * h
    need = 16 + 9 * n
    if len(data) < need:
        raise BadFileError(f"truncated flow file: {len(data)} < {need} bytes")
    du = np.frombuffer(data, dtype="<f4", count=n, offset=16).reshape(h, w).astype(np.float64)
    dv = np.frombuffer(data, dtype="<f4", count=n, offset=16 + 4 * n).reshape(h, w).astype(np.float64)
    valid = np.frombuffer(data, dtype=np.uint8, count=n, offset=16 + 8 * n).reshape(h, w).astype(bool)
    return FlowField(du=du, dv=dv, valid=valid)


def write_flow(path, flow: FlowField):
    Path(path).write_bytes(flow_to_bytes(flow))


def read_flow(path) -> FlowField:
    return flow_from_bytes(Path(path).read_bytes())
