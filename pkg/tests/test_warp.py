import math

import numpy as np
import pytest

from lucidforge.augment import (
    EpisodeTooShortError,
    WarpBounds,
    WarpSpec,
    multiply,
    sample_warp,
    warp_trajectory,
)
from lucidforge.episodes import save
from lucidforge.se3 import Pose, quat_angle, quat_from_axis_angle, quat_mul, quat_conj

from .test_episodes import make_episode, random_episode

ZERO = WarpBounds(max_trans=0.0, max_rot=0.0)


class TestSampleWarp:
    def test_zero_bounds_all_identity(self):
        spec = sample_warp(make_episode(10), 4, ZERO, seed=1)
        for d in spec.deltas:
            assert np.all(d.position == 0.0)
            np.testing.assert_array_equal(d.quat, [1, 0, 0, 0])

    def test_deterministic(self):
        ep = make_episode(10)
        b = WarpBounds(0.05, 0.3)
        s1 = sample_warp(ep, 4, b, seed=7)
        s2 = sample_warp(ep, 4, b, seed=7)
        assert s1.keypoints == s2.keypoints
        for d1, d2 in zip(s1.deltas, s2.deltas):
            np.testing.assert_array_equal(d1.position, d2.position)
            np.testing.assert_array_equal(d1.quat, d2.quat)

    def test_every_frame_keypoint(self):
        ep = make_episode(6)
        spec = sample_warp(ep, 6, ZERO, seed=0)
        assert spec.keypoints == list(range(6))

    def test_too_short(self):
        with pytest.raises(EpisodeTooShortError):
            sample_warp(make_episode(3), 4, ZERO, seed=0)

    def test_deltas_within_bounds(self):
        b = WarpBounds(0.02, 0.1)
        for seed in range(20):
            spec = sample_warp(make_episode(20), 5, b, seed=seed)
            for d in spec.deltas:
                assert np.linalg.norm(d.position) <= 0.02 + 1e-12
                assert quat_angle(d.quat) <= 0.1 + 1e-12

    def test_endpoints_always_present(self):
        spec = sample_warp(make_episode(17), 3, ZERO, seed=2)
        assert spec.keypoints[0] == 0 and spec.keypoints[-1] == 16


class TestWarpTrajectory:
    def test_identity_bit_exact(self):
        ep = random_episode(np.random.default_rng(2))
        spec = sample_warp(ep, 4, ZERO, seed=3)
        assert save(warp_trajectory(ep, spec)) == save(ep)

    def test_endpoint_translation_interpolates(self):
        ep = make_episode(5)  # frames 0..4
        spec = WarpSpec(
            keypoints=[0, 4],
            deltas=[Pose.identity(), Pose.from_translation(0, 0, 0.1)],
            seed=0,
            bounds=WarpBounds(0.1, 0.0),
        )
        out = warp_trajectory(ep, spec)
        np.testing.assert_allclose(out.frames[0].mocap["grip"].position, ep.frames[0].mocap["grip"].position, atol=0)
        np.testing.assert_allclose(
            out.frames[4].mocap["grip"].position - ep.frames[4].mocap["grip"].position, [0, 0, 0.1], atol=1e-15
        )
        np.testing.assert_allclose(
            out.frames[2].mocap["grip"].position - ep.frames[2].mocap["grip"].position, [0, 0, 0.05], atol=1e-15
        )

    def test_rotation_only_midpoint(self):
        ep = make_episode(5)
        rot = Pose(quat=quat_from_axis_angle([0, 0, 1], math.radians(40)))
        spec = WarpSpec(
            keypoints=[0, 4],
            deltas=[Pose.identity(), rot],
            seed=0,
            bounds=WarpBounds(0.0, math.radians(40)),
        )
        out = warp_trajectory(ep, spec)
        d_mid = quat_mul(out.frames[2].mocap["grip"].quat, quat_conj(ep.frames[2].mocap["grip"].quat))
        assert abs(quat_angle(d_mid) - math.radians(20)) < 1e-12

    def test_keypoint_exactness(self):
        ep = random_episode(np.random.default_rng(8), n=15)
        spec = sample_warp(ep, 5, WarpBounds(0.05, 0.3), seed=5)
        out = warp_trajectory(ep, spec)
        for kp, delta in zip(spec.keypoints, spec.deltas):
            for key in ep.frames[kp].mocap:
                expected = delta.compose(ep.frames[kp].mocap[key])
                assert out.frames[kp].mocap[key].approx_equal(expected, tol=1e-12)

    def test_continuity(self):
        # warped inter-frame motion <= original motion + bound from deltas
        ep = random_episode(np.random.default_rng(4), n=20)
        b = WarpBounds(0.05, 0.3)
        spec = sample_warp(ep, 4, b, seed=9)
        out = warp_trajectory(ep, spec)
        max_p = max(np.linalg.norm(f.mocap[k].position) for f in ep.frames for k in f.mocap)
        slack = 2 * b.max_trans + 2 * math.sin(b.max_rot / 2) * max_p + 1e-9
        for i in range(len(ep) - 1):
            for k in ep.frames[i].mocap:
                orig = np.linalg.norm(ep.frames[i + 1].mocap[k].position - ep.frames[i].mocap[k].position)
                warped = np.linalg.norm(out.frames[i + 1].mocap[k].position - out.frames[i].mocap[k].position)
                assert warped <= orig + slack

    def test_untouched_fields(self):
        ep = random_episode(np.random.default_rng(6))
        spec = sample_warp(ep, 3, WarpBounds(0.05, 0.2), seed=1)
        out = warp_trajectory(ep, spec)
        for fo, fw in zip(ep.frames, out.frames):
            assert fw.t == fo.t
            np.testing.assert_array_equal(fw.q, fo.q)
            assert fw.attachments == fo.attachments


class TestMultiply:
    def test_k1_returns_originals(self):
        eps = [make_episode(8), make_episode(8, start=10.0)]
        out = multiply(eps, 1, ZERO, seed=0)
        assert out == eps

    def test_five_fold(self):
        eps = [random_episode(np.random.default_rng(i), n=10) for i in range(10)]
        out = multiply(eps, 5, WarpBounds(0.05, 0.2), seed=42)
        assert len(out) == 50
        for ep in out:
            raw = save(ep)  # save() re-validates invariants via load-side checks
            assert raw.startswith(b'{"lucidforge_episode": 1')

    def test_zero_bounds_reproduces_bit_exact(self):
        eps = [random_episode(np.random.default_rng(i), n=8) for i in range(3)]
        out = multiply(eps, 5, ZERO, seed=11)
        for i, ep in enumerate(eps):
            original = save(ep)
            for j in range(5):
                assert save(out[5 * i + j]) == original

    def test_distinct_seeds_differ(self):
        ep = random_episode(np.random.default_rng(0), n=10)
        a = multiply([ep], 2, WarpBounds(0.05, 0.2), seed=1)[1]
        b = multiply([ep], 2, WarpBounds(0.05, 0.2), seed=2)[1]
        pa = a.frames[-1].mocap["grip"].position
        pb = b.frames[-1].mocap["grip"].position
        assert np.linalg.norm(pa - pb) > 1e-6

    def test_k_below_one(self):
        with pytest.raises(ValueError):
            multiply([make_episode(5)], 0, ZERO, seed=0)


class TestWarpSpecValidation:
    def test_non_increasing_keypoints(self):
        with pytest.raises(ValueError):
            WarpSpec(keypoints=[0, 3, 3], deltas=[Pose.identity()] * 3, seed=0, bounds=ZERO)

    def test_delta_exceeding_bounds(self):
        with pytest.raises(ValueError):
            WarpSpec(
                keypoints=[0, 4],
                deltas=[Pose.identity(), Pose.from_translation(1, 0, 0)],
                seed=0,
                bounds=WarpBounds(0.05, 0.1),
            )

    def test_mismatched_episode(self):
        from lucidforge.augment import SpecMismatchError

        spec = WarpSpec(keypoints=[0, 4], deltas=[Pose.identity()] * 2, seed=0, bounds=ZERO)
        with pytest.raises(SpecMismatchError):
            warp_trajectory(make_episode(9), spec)
