"""MJCF XML emission from scene documents, and parsing of the MJCF subset
(body / joint / geom / site / mocap) into an articulated KinematicTree.

Emission is deterministic: fixed attribute order, shortest round-trip
decimals, LF line endings — the same document always yields identical bytes.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..se3 import Pose
from .dsl import SceneDoc, SceneError, SceneNode


class UnresolvedAnchorError(SceneError):
    pass


class MalformedXMLError(SceneError):
    pass


class UnsupportedJointTypeError(SceneError):
    pass


class OrphanBodyError(SceneError):
    pass


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

_KIND_ELEMENT = {
    "body": "body",
    "box": "geom",
    "mesh": "geom",
    "site": "site",
    "camera": "camera",
    "light": "light",
    "include": "include",
}

_DEFAULT_POS = (0.0, 0.0, 0.0)
_DEFAULT_QUAT = (1.0, 0.0, 0.0, 0.0)


def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_vec(v) -> str:
    return " ".join(_fmt(x) for x in v)


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def emit_mjcf(doc: SceneDoc) -> str:
    """Emit a resolved scene document as MJCF XML text."""
    root = doc.root
    if root.kind != "scene":
        raise SceneError(f"document root must be a scene, got {root.kind!r}")
    for n in doc.walk():
        if n.pos_anchor is not None:
            raise UnresolvedAnchorError(
                f"node {n.name or n.kind!r} still references {n.pos_anchor[0]}.{n.pos_anchor[1]}; run resolve first"
            )
    lines: list[str] = []
    model = f' model="{_xml_escape(root.name)}"' if root.name else ""
    lines.append(f"<mujoco{model}>")
    if root.children:
        lines.append("  <worldbody>")
        for c in root.children:
            _emit_node(c, lines, indent=2)
        lines.append("  </worldbody>")
    else:
        lines.append("  <worldbody/>")
    lines.append("</mujoco>")
    return "\n".join(lines) + "\n"


def _emit_node(node: SceneNode, lines: list[str], indent: int):
    if node.kind == "scene":
        raise SceneError("nested scene nodes are not allowed")
    elem = _KIND_ELEMENT[node.kind]
    parts = [elem]
    if node.kind == "box":
        parts.append('type="box"')
    elif node.kind == "mesh":
        parts.append('type="mesh"')
    if node.name is not None:
        parts.append(f'name="{_xml_escape(node.name)}"')
    if node.pos != _DEFAULT_POS:
        parts.append(f'pos="{_fmt_vec(node.pos)}"')
    if node.quat != _DEFAULT_QUAT:
        parts.append(f'quat="{_fmt_vec(node.quat)}"')
    if node.size:
        parts.append(f'size="{_fmt_vec(node.size)}"')
    for k, v in node.attrs.items():
        parts.append(f'{k}="{_xml_escape(v)}"')
    pad = " " * indent
    if node.children:
        if node.kind != "body":
            raise SceneError(f"{node.kind!r} nodes cannot contain children")
        lines.append(f"{pad}<{' '.join(parts)}>")
        for c in node.children:
            _emit_node(c, lines, indent + 2)
        lines.append(f"{pad}</{elem}>")
    else:
        lines.append(f"{pad}<{' '.join(parts)}/>")


# ---------------------------------------------------------------------------
# kinematic tree
# ---------------------------------------------------------------------------


@dataclass
class Body:
    name: str
    parent: int | None  # index into bodies; None = world
    rest: Pose


@dataclass
class Joint:
    name: str
    body: int
    kind: str  # "hinge" | "slide" | "free"
    axis: np.ndarray
    range: tuple[float, float]


@dataclass
class Site:
    name: str
    body: int  # -1 = world
    local: Pose


@dataclass
class MocapBody:
    name: str
    pose: Pose


@dataclass
class KinematicTree:
    bodies: list[Body] = field(default_factory=list)
    joints: list[Joint] = field(default_factory=list)
    sites: list[Site] = field(default_factory=list)
    mocap_bodies: list[MocapBody] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def actuated_joints(self) -> list[Joint]:
        """Joints that carry a generalized coordinate (hinge/slide, not free)."""
        return [j for j in self.joints if j.kind != "free"]

    @property
    def nq(self) -> int:
        return len(self.actuated_joints())

    def joint_ranges(self) -> np.ndarray:
        return np.array([j.range for j in self.actuated_joints()], dtype=np.float64).reshape(-1, 2)

    def site_index(self, name: str) -> int:
        for i, s in enumerate(self.sites):
            if s.name == name:
                return i
        raise KeyError(f"no site named {name!r}")

    def body_index(self, name: str) -> int:
        for i, b in enumerate(self.bodies):
            if b.name == name:
                return i
        raise KeyError(f"no body named {name!r}")

    def free_body_indices(self) -> list[int]:
        """Bodies carrying a free joint (movable objects)."""
        return sorted({j.body for j in self.joints if j.kind == "free"})


_TREE_DEFAULTS = {"pos": "0 0 0", "quat": "1 0 0 0"}
_KNOWN_ELEMENTS = {"body", "joint", "freejoint", "geom", "site"}


def _parse_vec(s: str, n: int, what: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in s.split()], dtype=np.float64)
    except ValueError:
        raise MalformedXMLError(f"bad {what} value {s!r}") from None
    if v.shape != (n,):
        raise MalformedXMLError(f"{what} needs {n} numbers, got {s!r}")
    return v


def _elem_pose(e: ET.Element) -> Pose:
    pos = _parse_vec(e.get("pos", _TREE_DEFAULTS["pos"]), 3, "pos")
    quat = _parse_vec(e.get("quat", _TREE_DEFAULTS["quat"]), 4, "quat")
    return Pose(position=pos, quat=quat)


def parse_mjcf(xml: str) -> KinematicTree:
    """Parse the supported MJCF subset into a topologically sorted tree.

    Only body, joint/freejoint, geom, site and the body-level ``mocap``
    attribute are interpreted; every other element is skipped and noted in
    ``tree.warnings``. Ball joints are rejected.
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as e:
        raise MalformedXMLError(str(e)) from None
    if root.tag != "mujoco":
        raise MalformedXMLError(f"root element must be <mujoco>, got <{root.tag}>")
    tree = KinematicTree()
    worldbody = None
    for child in root:
        if child.tag == "worldbody":
            if worldbody is not None:
                raise MalformedXMLError("multiple <worldbody> elements")
            worldbody = child
        elif child.tag == "body":
            raise OrphanBodyError("<body> outside <worldbody>")
        else:
            tree.warnings.append(f"skipped <{child.tag}>")
    if worldbody is None:
        return tree
    _walk_body_children(worldbody, None, tree)
    return tree


def _walk_body_children(parent_elem: ET.Element, parent_idx: int | None, tree: KinematicTree):
    for e in parent_elem:
        if e.tag == "body":
            if e.get("mocap", "false").lower() == "true":
                if parent_idx is not None:
                    tree.warnings.append(f"mocap body {e.get('name', '')!r} not at top level; treated as top level")
                name = e.get("name", "")
                tree.mocap_bodies.append(MocapBody(name=name, pose=_elem_pose(e)))
                for sub in e:
                    if sub.tag in ("joint", "freejoint", "body"):
                        tree.warnings.append(f"skipped <{sub.tag}> under mocap body {name!r}")
                continue
            idx = len(tree.bodies)
            tree.bodies.append(Body(name=e.get("name", ""), parent=parent_idx, rest=_elem_pose(e)))
            _walk_body_children(e, idx, tree)
        elif e.tag in ("joint", "freejoint"):
            if parent_idx is None:
                raise OrphanBodyError(f"<{e.tag}> directly under <worldbody>")
            tree.joints.append(_parse_joint(e, parent_idx))
        elif e.tag == "site":
            tree.sites.append(Site(name=e.get("name", ""), body=-1 if parent_idx is None else parent_idx, local=_elem_pose(e)))
        elif e.tag == "geom":
            continue  # geometry carries no kinematic state
        else:
            tree.warnings.append(f"skipped <{e.tag}>")


def _parse_joint(e: ET.Element, body_idx: int) -> Joint:
    kind = "free" if e.tag == "freejoint" else e.get("type", "hinge")
    if kind not in ("hinge", "slide", "free"):
        raise UnsupportedJointTypeError(f"joint type {kind!r} is not supported")
    name = e.get("name", "")
    if kind == "free":
        return Joint(name=name, body=body_idx, kind=kind, axis=np.array([0.0, 0.0, 1.0]), range=(0.0, 0.0))
    axis = _parse_vec(e.get("axis", "0 0 1"), 3, "axis")
    norm = float(np.linalg.norm(axis))
    if norm == 0.0:
        raise MalformedXMLError(f"joint {name!r} has zero axis")
    axis = axis / norm
    rng_attr = e.get("range")
    if rng_attr is None:
        rng = (-np.inf, np.inf)
    else:
        lo, hi = _parse_vec(rng_attr, 2, "range")
        if lo == 0.0 and hi == 0.0:
            rng = (-np.inf, np.inf)  # MJCF: "0 0" means unlimited
        elif lo > hi:
            raise MalformedXMLError(f"joint {name!r} range lo > hi")
        else:
            rng = (float(lo), float(hi))
    return Joint(name=name, body=body_idx, kind=kind, axis=axis, range=rng)


# ---------------------------------------------------------------------------
# asset collection
# ---------------------------------------------------------------------------


def collect_assets(xml: str, base_dir) -> tuple[list[Path], list[Path]]:
    """All ``file=`` attribute values, deduplicated, resolved against base_dir.

    Returns (paths in document order, subset that does not exist on disk).
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as e:
        raise MalformedXMLError(str(e)) from None
    base = Path(base_dir)
    seen: set[str] = set()
    paths: list[Path] = []
    for e in root.iter():
        f = e.get("file")
        if f is not None and f not in seen:
            seen.add(f)
            paths.append(base / f)
    missing = [p for p in paths if not p.exists()]
    return paths, missing
