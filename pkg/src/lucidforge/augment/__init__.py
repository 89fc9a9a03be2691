from .reproject import (
    CameraModel,
    DepthMap,
    DimensionMismatchError,
    FlowField,
    reproject,
    warp_image,
)
from .warp import (
    EpisodeTooShortError,
    SpecMismatchError,
    WarpBounds,
    WarpSpec,
    multiply,
    sample_warp,
    warp_trajectory,
)

__all__ = [
    "WarpBounds",
    "WarpSpec",
    "sample_warp",
    "warp_trajectory",
    "multiply",
    "EpisodeTooShortError",
    "SpecMismatchError",
    "CameraModel",
    "DepthMap",
    "FlowField",
    "DimensionMismatchError",
    "reproject",
    "warp_image",
]
