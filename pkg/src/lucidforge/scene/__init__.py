from .dsl import (
    CyclicAnchorError,
    DslSyntaxError,
    DuplicateNameError,
    SceneDoc,
    SceneError,
    SceneNode,
    UnknownAnchorError,
    UnknownKindError,
    parse_scene,
    resolve,
)
from .mjcf import (
    Body,
    Joint,
    KinematicTree,
    MalformedXMLError,
    MocapBody,
    OrphanBodyError,
    Site,
    UnresolvedAnchorError,
    UnsupportedJointTypeError,
    collect_assets,
    emit_mjcf,
    parse_mjcf,
)

__all__ = [
    "SceneDoc",
    "SceneNode",
    "SceneError",
    "DslSyntaxError",
    "DuplicateNameError",
    "UnknownKindError",
    "UnknownAnchorError",
    "CyclicAnchorError",
    "UnresolvedAnchorError",
    "parse_scene",
    "resolve",
    "emit_mjcf",
    "parse_mjcf",
    "collect_assets",
    "KinematicTree",
    "Body",
    "Joint",
    "Site",
    "MocapBody",
    "MalformedXMLError",
    "OrphanBodyError",
    "UnsupportedJointTypeError",
]
