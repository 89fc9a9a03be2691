"""Forward kinematics, numerical Jacobians, damped-least-squares IK, and
hand-to-robot retargeting (scale calibration + wrist-relative fingertip welds).

Joint values are a flat vector `q`, one entry per hinge (rad) or slide (m)
joint in tree order; free joints carry no coordinate and are driven by
explicit world-pose overrides. The rotational parts of errors and Jacobians
use axis-angle expressed in the site's body frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .scene.mjcf import KinematicTree
from .se3 import Pose, Twist, quat_to_matrix, rotvec_from_matrix

FINGER_LANDMARKS = ("tip_0", "tip_1", "tip_2", "tip_3", "tip_4")
LANDMARKS = ("wrist",) + FINGER_LANDMARKS


class DimensionMismatchError(ValueError):
    pass


class UnknownSiteError(KeyError):
    pass


class NoTargetsError(ValueError):
    pass


class NonFiniteResidualError(ArithmeticError):
    """IK diverged into non-finite state; the caller should reset."""


class DegenerateHandError(ValueError):
    pass


@dataclass
class WeldTarget:
    """Pin a site's world pose to a target, with per-part weights."""

    site: str
    target: Pose
    pos_weight: float = 1.0
    rot_weight: float = 0.3

    def __post_init__(self):
        if self.pos_weight < 0 or self.rot_weight < 0 or self.pos_weight + self.rot_weight <= 0:
            raise ValueError("weights must be >= 0 and not both zero")


@dataclass
class HandFrame:
    """One tracked-hand sample: wrist, 5 fingertip poses, per-finger curl."""

    wrist: Pose
    fingertips: tuple[Pose, Pose, Pose, Pose, Pose]
    curl: np.ndarray  # 5 values in [0, 1]; 0 = fully open

    def __post_init__(self):
        self.fingertips = tuple(self.fingertips)
        if len(self.fingertips) != 5:
            raise ValueError("exactly 5 fingertip poses required")
        self.curl = np.asarray(self.curl, dtype=np.float64)
        if self.curl.shape != (5,):
            raise ValueError("curl must have 5 entries")
        if np.any(self.curl < 0) or np.any(self.curl > 1):
            raise ValueError("curl values must lie in [0, 1]")


@dataclass
class Binding:
    landmark: str  # "wrist" or "tip_0".."tip_4"
    site: str
    pos_weight: float = 1.0
    rot_weight: float = 0.3

    def __post_init__(self):
        if self.landmark not in LANDMARKS:
            raise ValueError(f"unknown landmark {self.landmark!r}")


@dataclass
class RetargetMap:
    """Declarative hand-landmark -> robot-site bindings plus a size scale."""

    bindings: list[Binding]
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")
        seen = set()
        for b in self.bindings:
            if b.landmark in seen:
                raise ValueError(f"duplicate binding for landmark {b.landmark!r}")
            seen.add(b.landmark)

    def validate_sites(self, tree: KinematicTree):
        names = {s.name for s in tree.sites}
        for b in self.bindings:
            if b.site not in names:
                raise UnknownSiteError(b.site)

    def to_json(self) -> str:
        return json.dumps(
            {
                "scale": self.scale,
                "bindings": [
                    {"landmark": b.landmark, "site": b.site, "pos_weight": b.pos_weight, "rot_weight": b.rot_weight}
                    for b in self.bindings
                ],
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "RetargetMap":
        d = json.loads(text)
        return cls(
            bindings=[
                Binding(
                    landmark=b["landmark"],
                    site=b["site"],
                    pos_weight=float(b.get("pos_weight", 1.0)),
                    rot_weight=float(b.get("rot_weight", 0.3)),
                )
                for b in d["bindings"]
            ],
            scale=float(d.get("scale", 1.0)),
        )


@dataclass
class IkOptions:
    # 0.01 suits centimeter-scale fingertip welds (Jacobian entries ~ link
    # length); raise toward 0.05 for meter-scale arms if steps oscillate.
    damping: float = 0.01
    max_iters: int = 200
    tol: float = 1e-4  # combined weighted residual norm
    step_clamp: float = 0.2  # max |dq_i| per iteration (rad or m)
    # escape local minima by restarting from random configurations within the
    # same iteration budget; right for cold solves, wrong for live tracking
    # (a tracking loop should hold at the workspace boundary instead)
    restarts: bool = True


@dataclass
class IkResult:
    q: np.ndarray
    residual: float
    iters: int


# ---------------------------------------------------------------------------
# batched forward kinematics over 4x4 matrices
# ---------------------------------------------------------------------------


class _FkPlan:
    """Per-tree precomputation; trees are treated as immutable once planned."""

    def __init__(self, tree: KinematicTree):
        nb = len(tree.bodies)
        self.nb = nb
        self.rest = (
            np.stack([b.rest.to_matrix() for b in tree.bodies]) if nb else np.zeros((0, 4, 4))
        )
        self.parent = [b.parent for b in tree.bodies]
        acts = tree.actuated_joints()
        self.nq = len(acts)
        qidx = {id(j): k for k, j in enumerate(acts)}
        self.body_joints: list[list[tuple[str, np.ndarray, int]]] = [[] for _ in range(nb)]
        for j in tree.joints:
            if j.kind != "free":
                self.body_joints[j.body].append((j.kind, j.axis, qidx[id(j)]))
        self.free_bodies = sorted({j.body for j in tree.joints if j.kind == "free"})
        self.lo = np.array([j.range[0] for j in acts], dtype=np.float64)
        self.hi = np.array([j.range[1] for j in acts], dtype=np.float64)
        self.site_body = [s.body for s in tree.sites]
        self.site_local = (
            np.stack([s.local.to_matrix() for s in tree.sites]) if tree.sites else np.zeros((0, 4, 4))
        )
        self.site_names = [s.name for s in tree.sites]
        self.body_names = [b.name for b in tree.bodies]
        # skew matrices per hinge axis, for Rodrigues
        self._skew = {}
        for jl in self.body_joints:
            for kind, axis, qi in jl:
                if kind == "hinge":
                    a = axis
                    self._skew[qi] = np.array(
                        [[0, -a[2], a[1]], [a[2], 0, -a[0]], [-a[1], a[0], 0]], dtype=np.float64
                    )


def _plan(tree: KinematicTree) -> _FkPlan:
    plan = tree.__dict__.get("_fk_plan")
    if plan is None:
        plan = _FkPlan(tree)
        tree.__dict__["_fk_plan"] = plan
    return plan


def _hinge_mats(plan: _FkPlan, qi: int, angles: np.ndarray) -> np.ndarray:
    K = plan._skew[qi]
    K2 = K @ K
    s = np.sin(angles)[:, None, None]
    c = (1.0 - np.cos(angles))[:, None, None]
    M = np.zeros((angles.shape[0], 4, 4))
    M[:, :3, :3] = np.eye(3) + s * K + c * K2
    M[:, 3, 3] = 1.0
    return M


def _body_world_mats(tree: KinematicTree, Q: np.ndarray, free_poses: dict[int, np.ndarray] | None = None) -> np.ndarray:
    """World transforms for every body, for a batch of configurations.

    Q: (B, nq). free_poses maps body index -> 4x4 world matrix override.
    Returns (nb, B, 4, 4).
    """
    plan = _plan(tree)
    B = Q.shape[0]
    if Q.shape != (B, plan.nq):
        raise DimensionMismatchError(f"q has shape {Q.shape[1:]}, model needs {plan.nq} joint values")
    world = np.empty((plan.nb, B, 4, 4))
    for i in range(plan.nb):
        p = plan.parent[i]
        M = np.broadcast_to(plan.rest[i], (B, 4, 4)) if p is None else world[p] @ plan.rest[i]
        for kind, axis, qi in plan.body_joints[i]:
            if kind == "hinge":
                M = M @ _hinge_mats(plan, qi, Q[:, qi])
            else:  # slide
                T = np.zeros((B, 4, 4))
                T[:] = np.eye(4)
                T[:, :3, 3] = Q[:, qi, None] * axis
                M = M @ T
        if free_poses is not None and i in free_poses:
            M = np.broadcast_to(free_poses[i], (B, 4, 4))
        world[i] = M
    return world


def _site_mats(tree: KinematicTree, body_world: np.ndarray) -> np.ndarray:
    """(ns, B, 4, 4) site world transforms given body world transforms."""
    plan = _plan(tree)
    B = body_world.shape[1] if plan.nb else 1
    out = np.empty((len(plan.site_body), B, 4, 4))
    for k, bi in enumerate(plan.site_body):
        if bi < 0:
            out[k] = np.broadcast_to(plan.site_local[k], (B, 4, 4))
        else:
            out[k] = body_world[bi] @ plan.site_local[k]
    return out


def forward_kinematics(
    tree: KinematicTree, q, free_poses: dict[str, Pose] | None = None
) -> dict[str, Pose]:
    """World pose of every named body, mocap body, and site.

    free_poses optionally overrides the world pose of free-jointed bodies
    (keyed by body name); their subtrees follow the override.
    """
    plan = _plan(tree)
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if q.shape[0] != plan.nq:
        raise DimensionMismatchError(f"expected {plan.nq} joint values, got {q.shape[0]}")
    overrides = None
    if free_poses:
        overrides = {}
        for name, pose in free_poses.items():
            overrides[tree.body_index(name)] = pose.to_matrix()
    body_world = _body_world_mats(tree, q[None], overrides)
    out: dict[str, Pose] = {}
    for i, name in enumerate(plan.body_names):
        if name:
            out[name] = Pose.from_matrix(body_world[i, 0])
    for m in tree.mocap_bodies:
        out[m.name] = m.pose.copy()
    site_world = _site_mats(tree, body_world)
    for k, name in enumerate(plan.site_names):
        if name:
            out[name] = Pose.from_matrix(site_world[k, 0])
    return out


def rest_config(tree: KinematicTree) -> np.ndarray:
    """All-zero joint vector, clamped into joint ranges."""
    plan = _plan(tree)
    return np.clip(np.zeros(plan.nq), plan.lo, plan.hi)


def _site_pose_batch(tree: KinematicTree, Q: np.ndarray, site_idxs: list[int], free_poses=None):
    """Positions (m, B, 3) and rotations (m, B, 3, 3) for chosen sites."""
    plan = _plan(tree)
    body_world = _body_world_mats(tree, Q, free_poses)
    pos = np.empty((len(site_idxs), Q.shape[0], 3))
    rot = np.empty((len(site_idxs), Q.shape[0], 3, 3))
    for out_i, k in enumerate(site_idxs):
        bi = plan.site_body[k]
        if bi < 0:
            M = np.broadcast_to(plan.site_local[k], (Q.shape[0], 4, 4))
        else:
            M = body_world[bi] @ plan.site_local[k]
        pos[out_i] = M[:, :3, 3]
        rot[out_i] = M[:, :3, :3]
    return pos, rot


def jacobian(tree: KinematicTree, q, site: str, h: float = 1e-6) -> np.ndarray:
    """6 x nq site Jacobian by central differences (rows: linear, angular).

    Angular columns are axis-angle rates of R(q-h)^T R(q+h), i.e. expressed
    in the site's body frame.
    """
    plan = _plan(tree)
    try:
        k = tree.site_index(site)
    except KeyError:
        raise UnknownSiteError(site) from None
    q = np.asarray(q, dtype=np.float64).reshape(-1)
    if q.shape[0] != plan.nq:
        raise DimensionMismatchError(f"expected {plan.nq} joint values, got {q.shape[0]}")
    return _jacobians(tree, q, [k], h)[0]


def _jacobians(tree: KinematicTree, q: np.ndarray, site_idxs: list[int], h: float = 1e-6) -> np.ndarray:
    """(m, 6, nq) Jacobians for several sites from one batched FK pass."""
    plan = _plan(tree)
    nq = plan.nq
    Q = np.repeat(q[None], 2 * nq, axis=0)
    for j in range(nq):
        Q[2 * j, j] += h
        Q[2 * j + 1, j] -= h
    pos, rot = _site_pose_batch(tree, Q, site_idxs)
    inv_2h = 1.0 / (2.0 * h)
    J = np.zeros((len(site_idxs), 6, nq))
    J[:, :3, :] = ((pos[:, 0::2] - pos[:, 1::2]) * inv_2h).transpose(0, 2, 1)
    # batched axis-angle of R(q-h)^T R(q+h); the angles are O(h), far from pi
    dR = np.einsum("mjba,mjbc->mjac", rot[:, 1::2], rot[:, 0::2])
    skew = np.stack(
        [dR[..., 2, 1] - dR[..., 1, 2], dR[..., 0, 2] - dR[..., 2, 0], dR[..., 1, 0] - dR[..., 0, 1]], axis=-1
    )
    cos_a = np.clip((dR[..., 0, 0] + dR[..., 1, 1] + dR[..., 2, 2] - 1.0) * 0.5, -1.0, 1.0)
    angle = np.arccos(cos_a)
    sin_a = np.sin(angle)
    factor = np.where(sin_a > 1e-12, angle / np.where(sin_a > 1e-12, 2.0 * sin_a, 1.0), 0.5)
    J[:, 3:, :] = (skew * factor[..., None] * inv_2h).transpose(0, 2, 1)
    return J


def weld_error(current: Pose, target: Pose) -> Twist:
    """Discrepancy between two poses as a twist: linear offset (m) plus the
    body-frame axis-angle taking current to target (rad). The IK residual
    stacks weighted copies of exactly these components."""
    dR = quat_to_matrix(current.quat).T @ quat_to_matrix(target.quat)
    return Twist(linear=target.position - current.position, angular=rotvec_from_matrix(dR))


def _errors_batch(
    tree: KinematicTree, Q: np.ndarray, targets: list[WeldTarget], site_idxs: list[int], free_poses=None
) -> np.ndarray:
    """Stacked weighted errors, (B, 6m), for a batch of configurations."""
    pos, rot = _site_pose_batch(tree, Q, site_idxs, free_poses)
    B = Q.shape[0]
    e = np.zeros((B, 6 * len(targets)))
    for m, t in enumerate(targets):
        e[:, 6 * m : 6 * m + 3] = t.pos_weight * (t.target.position - pos[m])
        Rt = t.target.to_matrix()[:3, :3]
        for b in range(B):
            dR = rot[m, b].T @ Rt
            e[b, 6 * m + 3 : 6 * m + 6] = t.rot_weight * rotvec_from_matrix(dR)
    return e


def _stack_errors(
    tree: KinematicTree, q: np.ndarray, targets: list[WeldTarget], site_idxs: list[int], free_poses=None
) -> np.ndarray:
    return _errors_batch(tree, q[None], targets, site_idxs, free_poses)[0]


def solve_ik(
    tree: KinematicTree,
    q0,
    targets: list[WeldTarget],
    opts: IkOptions | None = None,
) -> IkResult:
    """Damped least squares: dq = J^T (J J^T + damping^2 I)^-1 e.

    Accepts a step only if the weighted residual decreases (halving the step
    on increase, falling back to the raw gradient direction if the damped
    step keeps failing); joints are clamped to their ranges after every
    step. A configuration where neither direction makes progress is a local
    minimum: the solver restarts from a deterministic perturbation and keeps
    the best configuration seen, spending the same iteration budget. Stops
    at the first residual <= tol, else returns best-so-far at max_iters.
    """
    if not targets:
        raise NoTargetsError("at least one weld target required")
    opts = opts or IkOptions()
    plan = _plan(tree)
    q = np.clip(np.asarray(q0, dtype=np.float64).reshape(-1), plan.lo, plan.hi)
    if q.shape[0] != plan.nq:
        raise DimensionMismatchError(f"expected {plan.nq} joint values, got {q.shape[0]}")
    try:
        site_idxs = [tree.site_index(t.site) for t in targets]
    except KeyError as e:
        raise UnknownSiteError(str(e)) from None

    lam2 = opts.damping * opts.damping
    weights = np.concatenate([[t.pos_weight] * 3 + [t.rot_weight] * 3 for t in targets])

    def residual_of(qv: np.ndarray) -> tuple[float, np.ndarray]:
        e = _stack_errors(tree, qv, targets, site_idxs)
        r = float(np.linalg.norm(e))
        if not math.isfinite(r):
            raise NonFiniteResidualError("IK residual is not finite")
        return r, e

    res, e = residual_of(q)
    best_q, best_res = q.copy(), res
    if res <= opts.tol:
        return IkResult(q=q, residual=res, iters=0)

    def try_direction(dq: np.ndarray) -> bool:
        """Accept the largest 2^-k scaling of dq that lowers the residual."""
        nonlocal q, res, e
        peak = float(np.max(np.abs(dq))) if dq.size else 0.0
        if peak == 0.0:
            return False
        if peak > opts.step_clamp:
            dq = dq * (opts.step_clamp / peak)
        q_try = np.clip(q + dq, plan.lo, plan.hi)
        res_try, e_try = residual_of(q_try)
        if res_try < res:
            q, res, e = q_try, res_try, e_try
            return True
        # full step failed: evaluate the halved candidates in one batch
        scales = 0.5 ** np.arange(1, 8)
        Q = np.clip(q[None] + scales[:, None] * dq[None], plan.lo, plan.hi)
        E = _errors_batch(tree, Q, targets, site_idxs)
        R = np.linalg.norm(E, axis=1)
        if not np.all(np.isfinite(R)):
            raise NonFiniteResidualError("IK residual is not finite")
        for k in range(len(scales)):
            if R[k] < res:
                q, res, e = Q[k], float(R[k]), E[k]
                return True
        return False

    restart_rng = np.random.default_rng(0)
    window_res, window_it = res, 0
    for it in range(1, opts.max_iters + 1):
        J = _jacobians(tree, q, site_idxs).reshape(-1, plan.nq) * weights[:, None]
        JJt = J @ J.T
        JJt[np.diag_indices_from(JJt)] += lam2
        try:
            y = np.linalg.solve(JJt, e)
        except np.linalg.LinAlgError:
            raise NonFiniteResidualError("singular damped system") from None
        accepted = try_direction(J.T @ y)
        if res < best_res:
            best_q, best_res = q.copy(), res
        if res <= opts.tol:
            return IkResult(q=q, residual=res, iters=it)
        # restart when rejected outright or when 20 iterations shaved off
        # less than 5%: both indicate a (near-)stationary non-solution
        stalled = not accepted
        if it - window_it >= 20:
            stalled = stalled or res > 0.95 * window_res
            window_res, window_it = res, it
        if stalled:
            if not opts.restarts:
                return IkResult(q=best_q, residual=best_res, iters=it)
            span_lo = np.where(np.isfinite(plan.lo), plan.lo, best_q - math.pi)
            span_hi = np.where(np.isfinite(plan.hi), plan.hi, best_q + math.pi)
            q = restart_rng.uniform(span_lo, span_hi)
            res, e = residual_of(q)
            window_res, window_it = res, it
    return IkResult(q=best_q, residual=best_res, iters=opts.max_iters)


# ---------------------------------------------------------------------------
# hand retargeting
# ---------------------------------------------------------------------------


def _tip_index(landmark: str) -> int:
    return FINGER_LANDMARKS.index(landmark)


def calibrate_scale(human: HandFrame, tree: KinematicTree, rmap: RetargetMap) -> float:
    """Hand-size scale: mean robot wrist-to-site rest distance over the mean
    human wrist-to-fingertip distance, across the bound fingers."""
    tips = [b for b in rmap.bindings if b.landmark != "wrist"]
    if len(tips) < 2:
        raise ValueError("calibration needs at least 2 fingertip bindings")
    wrist_b = next((b for b in rmap.bindings if b.landmark == "wrist"), None)
    if wrist_b is None:
        raise ValueError("calibration needs a wrist binding")
    poses = forward_kinematics(tree, rest_config(tree))
    wrist_pos = poses[wrist_b.site].position
    robot_d = float(np.mean([np.linalg.norm(poses[b.site].position - wrist_pos) for b in tips]))
    human_d = float(
        np.mean(
            [np.linalg.norm(human.fingertips[_tip_index(b.landmark)].position - human.wrist.position) for b in tips]
        )
    )
    if human_d < 1e-4:
        raise DegenerateHandError("fingertips coincide with the wrist")
    return robot_d / human_d


def retarget(human: HandFrame, rmap: RetargetMap, robot_wrist: Pose) -> list[WeldTarget]:
    """Weld targets mapping the hand onto the robot.

    Fingertips are taken relative to the human wrist, their offsets scaled by
    rmap.scale, and re-expressed relative to robot_wrist; a wrist binding (if
    present) targets robot_wrist itself.
    """
    wrist_inv = human.wrist.inverse()
    out: list[WeldTarget] = []
    for b in rmap.bindings:
        if b.landmark == "wrist":
            out.append(WeldTarget(site=b.site, target=robot_wrist.copy(), pos_weight=b.pos_weight, rot_weight=b.rot_weight))
            continue
        local = wrist_inv.compose(human.fingertips[_tip_index(b.landmark)])
        scaled = Pose(position=local.position * rmap.scale, quat=local.quat)
        out.append(
            WeldTarget(site=b.site, target=robot_wrist.compose(scaled), pos_weight=b.pos_weight, rot_weight=b.rot_weight)
        )
    return out
