"""At-a-distance gripper control: anchor a hand pose to a mocap site, then
replay incremental hand motion onto the gripper in its own local frame.

The applied motion magnitude equals the hand motion magnitude regardless of
how far the user stands from the gripper, and wrist rotations rotate the
gripper about its own origin (no lever arm).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kinematics import HandFrame
from .se3 import Pose


@dataclass
class GestureParams:
    """Hysteresis thresholds on the mean lower-three-finger curl."""

    engage_threshold: float = 0.7
    release_threshold: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.release_threshold < self.engage_threshold <= 1.0:
            raise ValueError("need 0 <= release < engage <= 1")


@dataclass
class Anchor:
    """Reference poses captured when a site was activated."""

    site: str
    hand0: Pose
    grip0: Pose
    engaged: bool = False


def activate(site: str, hand: Pose, grip: Pose) -> Anchor:
    """Start a new hitchhike interaction; any previous anchor is superseded."""
    return Anchor(site=site, hand0=hand.copy(), grip0=grip.copy(), engaged=False)


def gesture_state(prev_engaged: bool, hand: HandFrame, params: GestureParams | None = None) -> bool:
    """Grasp gesture with hysteresis: mean curl of middle/ring/pinky fingers."""
    params = params or GestureParams()
    c = float(np.mean(hand.curl[2:5]))
    if c >= params.engage_threshold:
        return True
    if c <= params.release_threshold:
        return False
    return prev_engaged


def apply_delta(anchor: Anchor, hand_now: Pose) -> Pose:
    """New gripper target: hand motion since activation, applied in the
    gripper's local frame (grip0 o (hand0^-1 o hand_now)); identity while
    disengaged."""
    if not anchor.engaged:
        return anchor.grip0.copy()
    return anchor.grip0.compose(anchor.hand0.inverse().compose(hand_now))
