"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line
(run with `pytest tests/test_acceptance.py -v -s` to see them)."""

import json
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from pointbrush import (
    IcpParams,
    KdTree,
    LabelMask,
    PointCloud,
    PropagationParams,
    estimate_rigid_transform,
    find_correspondences_color,
    find_correspondences_spatial,
    generate_synthetic_sequence,
    icp,
    open_session,
    propagate_sequence,
    read_frame,
    read_mask,
    write_frame,
    write_mask,
)
from pointbrush.core import transform_positions
from pointbrush.synthetic import BackgroundSpec, MotionSpec, ObjectSpec, SceneSpec

from conftest import brute_force_knn, brute_force_radius, random_transform, rotation_angle_deg


@contextmanager
def criterion(name: str):
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE FAIL: {name}")
        raise
    print(f"\nACCEPTANCE PASS: {name}")


def test_rigid_estimation_exactness():
    with criterion("rigid estimation: 1000 noiseless trials within 1e-9, under 5 s"):
        rng = np.random.default_rng(101)
        start = time.perf_counter()
        worst = 0.0
        for _ in range(1000):
            n = int(rng.integers(3, 1001))
            src = rng.normal(size=(n, 3))
            gen = random_transform(rng)
            tgt = transform_positions(src, gen)
            est = estimate_rigid_transform(src, tgt)
            worst = max(
                worst,
                float(np.max(np.abs(est.rotation - gen.rotation))),
                float(np.max(np.abs(est.translation - gen.translation))),
            )
        elapsed = time.perf_counter() - start
        assert worst <= 1e-9, f"worst entry error {worst:.3e}"
        assert elapsed < 5.0, f"took {elapsed:.2f} s"


def icp_recovery_scene(tmp_path, seed=211):
    obj = ObjectSpec(
        label=1, points=500, center=(0.0, 0.0, 1.0), color=(200, 40, 40), radius=0.12,
        motion=MotionSpec(translation=(0.05, 0.02, 0.0), rotation_axis=(0, 0, 1), rotation_deg=10.0),
    )
    bg = BackgroundSpec(points=5000, center=(0.0, 0.0, 1.8), size=(3.0, 3.0, 1.2))
    return generate_synthetic_sequence(SceneSpec(objects=(obj,), background=bg), 2, seed, tmp_path)


def test_icp_recovery(tmp_path):
    with criterion("ICP recovery: 10 deg / 0.05 m motion within 0.5 deg / 1e-3 m, under 1 s"):
        result = icp_recovery_scene(tmp_path)
        cloud0 = result.sequence.load_cloud(0)
        cloud1 = result.sequence.load_cloud(1)
        idx = np.nonzero(result.masks[0].labels == 1)[0]
        truth = result.step_motion(1, 0, 1)

        start = time.perf_counter()
        tree = KdTree.build(cloud1)
        res = icp(
            cloud0, idx, cloud1, tree,
            IcpParams(mode="spatial", max_correspondence_distance=0.2),
        )
        elapsed = time.perf_counter() - start

        assert res.iterations_run <= 50
        angle_err = rotation_angle_deg(res.transform.rotation @ truth.rotation.T)
        trans_err = float(np.linalg.norm(res.transform.translation - truth.translation))
        assert angle_err <= 0.5, f"rotation error {angle_err:.4f} deg"
        assert trans_err <= 1e-3, f"translation error {trans_err:.2e} m"
        assert elapsed < 1.0, f"took {elapsed:.2f} s"


def test_color_mode_discrimination(rng):
    with criterion("color mode: >= 95% same-color correspondences, spatial strictly lower"):
        n = 300
        shape = rng.uniform(-0.25, 0.25, size=(n, 3)) + [0.0, 0.0, 1.0]
        offset = np.array([0.01, 0.0, 0.0])
        motion = np.array([-0.01, 0.0, 0.0])
        colors = np.vstack(
            [np.tile((200, 30, 40), (n, 1)), np.tile((30, 60, 200), (n, 1))]
        ).astype(np.uint8)
        src = PointCloud(np.vstack([shape, shape + offset]), colors)
        tgt = PointCloud(np.vstack([shape + motion, shape + offset + motion]), colors)
        tree = KdTree.build(tgt)
        idx = np.arange(n)

        def same_color_fraction(mode: str) -> float:
            params = IcpParams(mode=mode, k_neighbors=8, max_correspondence_distance=0.1)
            res = icp(src, idx, tgt, tree, params)
            moved = transform_positions(src.positions[idx], res.transform)
            if mode == "color":
                corrs = find_correspondences_color(
                    PointCloud(moved, src.colors[idx]), np.arange(n), tgt, tree, 8, 0.1
                )
            else:
                corrs = find_correspondences_spatial(moved, tree, 0.1)
            return sum(1 for c in corrs if c.target_index < n) / len(corrs)

        color_frac = same_color_fraction("color")
        spatial_frac = same_color_fraction("spatial")
        assert color_frac >= 0.95, f"color mode same-color fraction {color_frac:.3f}"
        assert spatial_frac < color_frac, (
            f"spatial {spatial_frac:.3f} not strictly below color {color_frac:.3f}"
        )


def test_kdtree_exactness():
    with criterion("k-d tree: 100 clouds x 100 queries identical to brute force incl. ties"):
        rng = np.random.default_rng(404)
        for trial in range(100):
            n = int(rng.integers(1, 10_001))
            pos = rng.uniform(-1, 1, (n, 3))
            if trial % 3 == 0:
                pos = np.round(pos * 4) / 4  # quantize to force distance ties
            tree = KdTree.build(pos)
            queries = rng.uniform(-1.1, 1.1, (100, 3))
            if trial % 3 == 0:
                queries = np.round(queries * 4) / 4
            for q in queries:
                nearest = tree.nearest(q)
                assert nearest == brute_force_knn(pos, q, 1)[0]
                assert tree.knn(q, 8) == brute_force_knn(pos, q, 8)
                assert np.array_equal(
                    tree.radius_query(q, 0.25), brute_force_radius(pos, q, 0.25)
                )


def test_sequence_propagation_three_pins(tmp_path):
    with criterion("propagation: 3 pins, 10 frames, per-frame per-label IoU >= 0.9, under 10 s"):
        pins = [
            ObjectSpec(label=1, points=300, center=(-0.5, 0.0, 1.0), color=(220, 40, 40),
                       shape="cylinder", radius=0.05, height=0.3,
                       motion=MotionSpec(translation=(0.04, 0.0, 0.01))),
            ObjectSpec(label=2, points=300, center=(0.0, 0.3, 1.2), color=(40, 220, 40),
                       shape="cylinder", radius=0.05, height=0.3,
                       motion=MotionSpec(translation=(0.0, -0.04, 0.02),
                                         rotation_axis=(1, 0, 0), rotation_deg=4.0)),
            ObjectSpec(label=3, points=300, center=(0.5, -0.3, 1.4), color=(40, 40, 220),
                       shape="cylinder", radius=0.05, height=0.3,
                       motion=MotionSpec(translation=(-0.03, 0.02, -0.015),
                                         rotation_axis=(0, 0, 1), rotation_deg=5.0)),
        ]
        bg = BackgroundSpec(points=3000, center=(0.0, 0.0, 2.5), size=(3.0, 3.0, 1.0))
        scene = SceneSpec(objects=tuple(pins), background=bg)
        result = generate_synthetic_sequence(scene, 10, seed=505, out_dir=tmp_path)

        params = PropagationParams(
            icp=IcpParams(mode="spatial", max_correspondence_distance=0.2), assign_radius=0.02
        )
        start = time.perf_counter()
        store, reports = propagate_sequence(result.sequence, {0: result.masks[0]}, 0, 9, params)
        elapsed = time.perf_counter() - start

        assert len(reports) == 9
        for k in range(1, 10):
            truth = result.masks[k].labels
            got = store[k].labels
            for label in (1, 2, 3):
                t = set(np.nonzero(truth == label)[0].tolist())
                g = set(np.nonzero(got == label)[0].tolist())
                score = len(t & g) / len(t | g)
                assert score >= 0.9, f"frame {k} label {label} IoU {score:.3f}"
        assert elapsed < 10.0, f"took {elapsed:.2f} s"


def test_format_round_trip():
    with criterion("format: 100 random frames+masks bit-exact, sizes 24+16n / 24+2n"):
        rng = np.random.default_rng(606)
        for _ in range(100):
            n = int(rng.integers(0, 2000))
            pos = rng.uniform(-10, 10, (n, 3)).astype(np.float32).astype(np.float64)
            col = rng.integers(0, 256, (n, 3), dtype=np.int64)
            cloud = PointCloud(pos, col)
            ts = int(rng.integers(0, 2**40))
            data = write_frame(cloud, ts)
            assert len(data) == 24 + 16 * n
            back, back_ts = read_frame(data)
            assert back_ts == ts
            assert np.array_equal(back.positions, cloud.positions)
            assert np.array_equal(back.colors, cloud.colors)
            assert write_frame(back, back_ts) == data

            mask = LabelMask(rng.integers(0, 65536, n, dtype=np.int64))
            mdata = write_mask(mask)
            assert len(mdata) == 24 + 2 * n
            assert read_mask(mdata) == mask
            assert write_mask(read_mask(mdata)) == mdata


def test_session_journal(tmp_path):
    with criterion("journal: 50 random brush/propagate ops fully reversed by undo"):
        obj = ObjectSpec(
            label=1, points=150, center=(0.0, 0.0, 1.0), color=(220, 40, 40), radius=0.1,
            motion=MotionSpec(translation=(0.05, 0.0, 0.0)),
        )
        bg = BackgroundSpec(points=500, center=(0.0, 0.0, 2.0), size=(2.0, 2.0, 0.5))
        generate_synthetic_sequence(SceneSpec(objects=(obj,), background=bg), 5, 707, tmp_path)
        session = open_session(tmp_path)
        rng = np.random.default_rng(708)

        initial = {k: session.mask(k).copy() for k in range(5)}
        for _ in range(50):
            if rng.random() < 0.8:
                frame = int(rng.integers(0, 5))
                center = rng.uniform(-0.4, 0.4, 3) + [0, 0, rng.uniform(0.8, 2.2)]
                session.apply_brush(
                    frame, center, float(rng.uniform(0.02, 0.3)), int(rng.integers(0, 4))
                )
            else:
                start, end = int(rng.integers(0, 5)), int(rng.integers(0, 5))
                try:
                    session.run_propagation(start, end)
                except ValueError:
                    session.apply_brush(start, (0, 0, 1.0), 0.12, 1)
        while session.undo_stack:
            session.undo()
        for k in range(5):
            assert np.array_equal(session.mask(k), initial[k]), f"frame {k} not restored"


def test_primary_runs_standalone_via_cli(tmp_path):
    with criterion("primary stands alone: CLI gen/info/propagate/export succeed headless"):
        scene = tmp_path / "scene.json"
        out = tmp_path / "seq"
        scene.write_text(
            json.dumps(
                SceneSpec(
                    objects=(
                        ObjectSpec(label=1, points=200, center=(0, 0, 1), color=(200, 30, 40),
                                   radius=0.1, motion=MotionSpec(translation=(0.04, 0, 0))),
                    ),
                    background=BackgroundSpec(points=800, center=(0, 0, 2), size=(2, 2, 0.5)),
                ).to_dict()
            ),
            encoding="utf-8",
        )

        def run(*args):
            proc = subprocess.run(
                [sys.executable, "-m", "pointbrush.cli", *args],
                capture_output=True, text=True, timeout=120,
            )
            assert proc.returncode == 0, proc.stderr
            return proc.stdout

        run("gen", str(scene), str(out), "--frames", "3", "--seed", "1")
        info = run("info", str(out))
        assert "frames:      3" in info
        run("propagate", str(out), "--from", "0", "--to", "2")
        export = run("export", str(out))
        payload = json.loads(export)
        assert all(f["labels"] is not None for f in payload["frames"])
