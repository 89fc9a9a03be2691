import json
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lucidforge.episodes import (
    CorruptFrameError,
    Episode,
    EpisodeMeta,
    Frame,
    NonMonotoneTimeError,
    PacingViolationError,
    SchemaMismatchError,
    UnsupportedVersionError,
    UpsampleUnsupportedError,
    load,
    replay,
    resample,
    save,
)
from lucidforge.se3 import Pose, quat_from_axis_angle


def make_frame(t, pos=(0, 0, 0), quat=(1, 0, 0, 0), attachments=()):
    p = Pose(position=np.asarray(pos, dtype=float), quat=np.asarray(quat, dtype=float))
    return Frame(t=t, mocap={"grip": p}, q=np.array([0.1, 0.2]), action={"grip": p.copy()}, attachments=list(attachments))


def make_episode(n=5, rate=25.0, start=0.0):
    ep = Episode(meta=EpisodeMeta(rate_hz=rate, scene_hash="abc", model_hash="def"))
    for i in range(n):
        ep.append(make_frame(start + i / rate, pos=(0.01 * i, 0, 0)))
    return ep


def random_episode(rng, n=12):
    ep = Episode(meta=EpisodeMeta(scene_hash="s", model_hash="m"))
    t = 0.0
    for i in range(n):
        p = Pose(position=rng.uniform(-1, 1, 3), quat=rng.normal(size=4))
        a = Pose(position=rng.uniform(-1, 1, 3), quat=rng.normal(size=4))
        ep.append(
            Frame(
                t=t,
                mocap={"grip": p, "tip_0": a},
                q=rng.uniform(-2, 2, 4),
                action={"grip": a.copy(), "tip_0": p.copy()},
                attachments=[("cube", "grip")] if i % 3 else [],
            )
        )
        t += 1 / 25 + rng.uniform(-0.01, 0.01)
    return ep


def episodes_equal(a: Episode, b: Episode, tol=1e-9) -> bool:
    if len(a) != len(b) or a.meta.rate_hz != b.meta.rate_hz:
        return False
    if (a.meta.scene_hash, a.meta.model_hash) != (b.meta.scene_hash, b.meta.model_hash):
        return False
    for fa, fb in zip(a.frames, b.frames):
        if fa.t != fb.t or fa.attachments != fb.attachments:
            return False
        if not np.array_equal(fa.q, fb.q):
            return False
        for d_a, d_b in ((fa.mocap, fb.mocap), (fa.action, fb.action)):
            if set(d_a) != set(d_b):
                return False
            for k in d_a:
                if not d_a[k].approx_equal(d_b[k], tol=tol):
                    return False
    return True


class TestAppend:
    def test_append_to_empty(self):
        ep = Episode()
        ep.append(make_frame(0.0))
        assert len(ep) == 1

    def test_non_monotone_rejected(self):
        ep = make_episode(2)
        with pytest.raises(NonMonotoneTimeError):
            ep.append(make_frame(ep.frames[-1].t))

    def test_pacing_gap_rejected(self):
        ep = make_episode(2)
        with pytest.raises(PacingViolationError):
            ep.append(make_frame(ep.frames[-1].t + 3 / 25))

    def test_schema_change_rejected(self):
        ep = make_episode(1)
        bad = Frame(t=1 / 25, mocap={"other": Pose.identity()}, q=np.array([0.1, 0.2]), action={"grip": Pose.identity()})
        with pytest.raises(SchemaMismatchError):
            ep.append(bad)


class TestSaveLoad:
    def test_single_frame_round_trip(self):
        ep = make_episode(1)
        assert episodes_equal(load(save(ep)), ep)

    def test_rotz90_is_documented_columns(self):
        ep = Episode()
        p = Pose(quat=quat_from_axis_angle([0, 0, 1], math.pi / 2))
        ep.append(Frame(t=0.0, mocap={"g": p}, q=np.zeros(1), action={"g": p}, attachments=[]))
        line = save(ep).decode().splitlines()[1]
        rec = json.loads(line)
        np.testing.assert_allclose(rec["mocap"]["g"][3:], [0, 1, 0, -1, 0, 0], atol=1e-15)
        again = load(save(ep)).frames[0].mocap["g"]
        assert again.approx_equal(p, tol=1e-9)

    def test_header_fields(self):
        header = json.loads(save(make_episode(1)).decode().splitlines()[0])
        assert header == {"lucidforge_episode": 1, "rate_hz": 25, "scene_hash": "abc", "model_hash": "def"}

    def test_truncated_file_names_last_line(self):
        raw = save(make_episode(3))
        cut = raw[: len(raw) - 20]
        with pytest.raises(CorruptFrameError) as ei:
            load(cut)
        assert ei.value.line == 4  # header + 2 good frames, frame 3 mangled

    def test_unsupported_version(self):
        raw = save(make_episode(1)).decode().splitlines()
        raw[0] = '{"lucidforge_episode": 99, "rate_hz": 25, "scene_hash": "", "model_hash": ""}'
        with pytest.raises(UnsupportedVersionError):
            load(("\n".join(raw) + "\n").encode())

    def test_not_an_episode(self):
        with pytest.raises(UnsupportedVersionError):
            load(b'{"something": 1}\n')

    def test_deterministic_bytes(self):
        ep = random_episode(np.random.default_rng(5))
        assert save(ep) == save(ep)

    @given(st.integers(0, 2**31 - 1))
    @settings(max_examples=50, deadline=None)
    def test_random_round_trip(self, seed):
        ep = random_episode(np.random.default_rng(seed))
        assert episodes_equal(load(save(ep)), ep)

    def test_stored_orientations_decode_to_rotations(self):
        from lucidforge.se3 import quat_to_matrix, rot_from_6d

        ep = random_episode(np.random.default_rng(3))
        for line in save(ep).decode().splitlines()[1:]:
            rec = json.loads(line)
            for v in rec["mocap"].values():
                R = quat_to_matrix(rot_from_6d(np.array(v[3:])))
                np.testing.assert_allclose(R.T @ R, np.eye(3), atol=1e-9)
                assert abs(np.linalg.det(R) - 1) < 1e-9


class TestReplay:
    def test_batch_mode_preserves_order(self):
        ep = make_episode(7)
        ts = [t for t, _ in replay(ep, math.inf)]
        assert ts == [f.t for f in ep.frames]

    def test_wall_clock_pacing(self):
        ep = make_episode(51)  # 2 s at 25 Hz
        t0 = time.monotonic()
        n = sum(1 for _ in replay(ep, rate_multiplier=4.0))
        elapsed = time.monotonic() - t0
        assert n == 51
        assert abs(elapsed - 0.5) <= 0.06  # 2 s / 4x +- ~1 frame period

    def test_bad_multiplier(self):
        with pytest.raises(ValueError):
            list(replay(make_episode(1), 0.0))


class TestResample:
    def test_same_rate_identical(self):
        ep = make_episode(6)
        assert episodes_equal(resample(ep, 25.0), ep, tol=0)

    def test_upsample_rejected(self):
        with pytest.raises(UpsampleUnsupportedError):
            resample(make_episode(3), 50.0)

    def test_constant_pose_stays_constant(self):
        ep = Episode()
        for i in range(10):
            ep.append(make_frame(i / 25, pos=(1, 2, 3)))
        out = resample(ep, 5.0)
        assert out.meta.rate_hz == 5.0
        for f in out.frames:
            np.testing.assert_array_equal(f.mocap["grip"].position, [1, 2, 3])

    def test_linear_motion_stays_on_line(self):
        # 1 m along x over 1 s at 25 Hz, halved rate: same line within 1e-12
        ep = Episode()
        for i in range(26):
            ep.append(make_frame(i / 25, pos=(i / 25, 0, 0)))
        out = resample(ep, 12.5)
        for f in out.frames:
            np.testing.assert_allclose(f.mocap["grip"].position, [f.t, 0, 0], atol=1e-12)

    def test_attachments_from_earlier_frame(self):
        ep = Episode()
        for i in range(6):
            ep.append(make_frame(i / 25, attachments=[("cube", "grip")] if i >= 3 else []))
        out = resample(ep, 12.5)
        # sample at t=0.08 brackets frames 2 and 3 -> uses frame 2 (empty)
        assert out.frames[1].attachments == []
        assert out.frames[2].attachments == [("cube", "grip")]

    def test_idempotent_at_target_rate(self):
        ep = make_episode(9)
        once = resample(ep, 12.5)
        again = resample(once, 12.5)
        assert episodes_equal(once, again, tol=0)

    def test_commutes_with_time_shift(self):
        ep = random_episode(np.random.default_rng(12), n=14)
        shift = 3.75

        def shifted(e, dt):
            out = Episode(meta=e.meta)
            for f in e.frames:
                out.append(Frame(t=f.t + dt, mocap=f.mocap, q=f.q, action=f.action, attachments=f.attachments))
            return out

        a = shifted(resample(ep, 10.0), shift)
        b = resample(shifted(ep, shift), 10.0)
        assert len(a) == len(b)
        for fa, fb in zip(a.frames, b.frames):
            assert abs(fa.t - fb.t) < 1e-9
            for k in fa.mocap:
                assert fa.mocap[k].approx_equal(fb.mocap[k], tol=1e-9)
