"""Procedural MJCF model builders used by the tests, benchmarks, and demos."""

from __future__ import annotations


def planar_arm(n_links: int, link_length: float = 1.0, limit: float = 3.1) -> str:
    """Serial chain of hinge-about-z links along +x with an `ee` tip site."""
    lines = ["<mujoco>", "  <worldbody>"]
    indent = "    "
    for i in range(n_links):
        pos = "0 0 0" if i == 0 else f"{link_length} 0 0"
        lines.append(f'{indent}<body name="link{i}" pos="{pos}">')
        lines.append(f'{indent}  <joint name="j{i}" type="hinge" axis="0 0 1" range="{-limit} {limit}"/>')
        lines.append(f'{indent}  <geom type="box" size="0.05 0.02 0.02"/>')
        indent += "  "
    lines.append(f'{indent}<site name="ee" pos="{link_length} 0 0"/>')
    for i in range(n_links):
        indent = indent[:-2]
        lines.append(f"{indent}</body>")
    lines.append("  </worldbody>")
    lines.append("</mujoco>")
    return "\n".join(lines) + "\n"


def _finger(f: int, base_pos: str, n_segments: int, seg_len: float) -> list[str]:
    """One finger: abduction hinge at the base, flex hinges down the chain."""
    lines = [f'    <body name="f{f}_seg0" pos="{base_pos}">']
    lines.append(f'      <joint name="f{f}_abduct" type="hinge" axis="0 0 1" range="-0.6 0.6"/>')
    lines.append(f'      <joint name="f{f}_flex0" type="hinge" axis="0 1 0" range="-0.2 1.8"/>')
    indent = "      "
    for s in range(1, n_segments):
        lines.append(f'{indent}<body name="f{f}_seg{s}" pos="{seg_len} 0 0">')
        lines.append(f'{indent}  <joint name="f{f}_flex{s}" type="hinge" axis="0 1 0" range="-0.2 1.8"/>')
        indent += "  "
    lines.append(f'{indent}<site name="tip_{f}" pos="{seg_len} 0 0"/>')
    for _ in range(n_segments):
        indent = indent[:-2]
        lines.append(f"{indent}</body>")
    return lines


def three_finger_hand(n_segments: int = 3, seg_len: float = 0.04) -> str:
    """Fixed-palm hand with 3 fingers x (1 abduction + n_segments flex) joints.

    n_segments=3 gives the 12-DoF test hand; sites: `wrist`, `tip_0..tip_2`.
    """
    lines = ["<mujoco>", "  <worldbody>", '    <site name="wrist" pos="0 0 0"/>']
    offsets = ["0.05 -0.04 0", "0.05 0 0", "0.05 0.04 0"]
    for f, off in enumerate(offsets):
        lines.extend(_finger(f, off, n_segments, seg_len))
    lines.append("  </worldbody>")
    lines.append("</mujoco>")
    return "\n".join(lines) + "\n"


def branched_rig(trunk_joints: int = 18, finger_segments: int = 3, with_objects: bool = True) -> str:
    """A trunk chain ending in a 3-finger hand; each finger carries one
    abduction joint plus finger_segments flex joints.

    Defaults give 18 + 3*(1+3) = 30 actuated joints, a `wrist` site at the
    trunk end, `tip_0..tip_2` fingertip sites, and (optionally) free-jointed
    graspable objects nearby.
    """
    lines = ["<mujoco>", "  <worldbody>"]
    indent = "    "
    axes = ["0 0 1", "0 1 0", "1 0 0"]
    for i in range(trunk_joints):
        pos = "0 0 0.2" if i == 0 else "0.08 0 0"
        lines.append(f'{indent}<body name="trunk{i}" pos="{pos}">')
        lines.append(f'{indent}  <joint name="t{i}" type="hinge" axis="{axes[i % 3]}" range="-2.9 2.9"/>')
        indent += "  "
    lines.append(f'{indent}<site name="wrist" pos="0.08 0 0"/>')
    palm = indent
    for f, off in enumerate(["0.12 -0.04 0", "0.12 0 0", "0.12 0.04 0"]):
        finger = _finger(f, off, finger_segments, 0.04)
        lines.extend(palm[4:] + ln for ln in finger)
    for _ in range(trunk_joints):
        indent = indent[:-2]
        lines.append(f"{indent}</body>")
    if with_objects:
        for k, pos in enumerate(["0.6 0 0.05", "0.5 0.3 0.05"]):
            lines.append(f'    <body name="obj{k}" pos="{pos}">')
            lines.append(f'      <freejoint name="obj{k}_free"/>')
            lines.append('      <geom type="box" size="0.02 0.02 0.02"/>')
            lines.append("    </body>")
    lines.append("  </worldbody>")
    lines.append("</mujoco>")
    return "\n".join(lines) + "\n"


def gripper_scene() -> str:
    """Small teleop scene: a 6-DoF arm with a grip site plus two free cubes."""
    return (
        "<mujoco>\n"
        "  <worldbody>\n"
        '    <body name="base" pos="0 0 0.1">\n'
        '      <joint name="waist" type="hinge" axis="0 0 1" range="-3.1 3.1"/>\n'
        '      <body name="shoulder" pos="0 0 0.1">\n'
        '        <joint name="shoulder_pitch" type="hinge" axis="0 1 0" range="-1.8 1.8"/>\n'
        '        <body name="upper_arm" pos="0.25 0 0">\n'
        '          <joint name="elbow" type="hinge" axis="0 1 0" range="-2.4 2.4"/>\n'
        '          <body name="forearm" pos="0.25 0 0">\n'
        '            <joint name="wrist_pitch" type="hinge" axis="0 1 0" range="-1.8 1.8"/>\n'
        '            <body name="wrist_roll_link" pos="0.08 0 0">\n'
        '              <joint name="wrist_roll" type="hinge" axis="1 0 0" range="-3.1 3.1"/>\n'
        '              <body name="palm" pos="0.06 0 0">\n'
        '                <joint name="wrist_yaw" type="hinge" axis="0 0 1" range="-1.5 1.5"/>\n'
        '                <site name="grip" pos="0.05 0 0"/>\n'
        "              </body>\n"
        "            </body>\n"
        "          </body>\n"
        "        </body>\n"
        "      </body>\n"
        "    </body>\n"
        '    <body name="cube_a" pos="0.45 0.15 0.02">\n'
        '      <freejoint name="cube_a_free"/>\n'
        '      <geom type="box" size="0.02 0.02 0.02"/>\n'
        "    </body>\n"
        '    <body name="cube_b" pos="0.45 -0.15 0.02">\n'
        '      <freejoint name="cube_b_free"/>\n'
        '      <geom type="box" size="0.02 0.02 0.02"/>\n'
        "    </body>\n"
        "  </worldbody>\n"
        "</mujoco>\n"
    )
