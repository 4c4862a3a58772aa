import numpy as np
import pytest

from pointbrush import KdTree, generate_synthetic_sequence, open_session, save_session
from pointbrush.frameio import LabelMask, write_mask
from pointbrush.session import LabelPalette, PaletteEntry, Session, select_sphere
from pointbrush.synthetic import BackgroundSpec, MotionSpec, ObjectSpec, SceneSpec

from conftest import brute_force_radius


@pytest.fixture
def seq_dir(tmp_path):
    obj = ObjectSpec(
        label=1, points=150, center=(0.0, 0.0, 1.0), color=(220, 40, 40), radius=0.1,
        motion=MotionSpec(translation=(0.05, 0.0, 0.0)),
    )
    bg = BackgroundSpec(points=600, center=(0.0, 0.0, 2.0), size=(2.0, 2.0, 0.5))
    generate_synthetic_sequence(SceneSpec(objects=(obj,), background=bg), 4, 21, tmp_path)
    return tmp_path


@pytest.fixture
def session(seq_dir):
    return open_session(seq_dir)


class TestSelectSphere:
    def test_superset_radius(self, session):
        cloud, tree = session.cloud(0), session.tree(0)
        assert len(select_sphere(cloud, tree, (0, 0, 1.5), 50.0)) == len(cloud)

    def test_empty_location(self, session):
        cloud, tree = session.cloud(0), session.tree(0)
        assert select_sphere(cloud, tree, (99.0, 99.0, 99.0), 0.0).size == 0

    def test_matches_brute_force(self, session, rng):
        cloud, tree = session.cloud(0), session.tree(0)
        for _ in range(10):
            center = rng.uniform(-1, 1, 3) + [0, 0, 1.5]
            got = select_sphere(cloud, tree, center, 0.05)
            assert np.array_equal(got, brute_force_radius(cloud.positions, center, 0.05))

    def test_negative_radius(self, session):
        with pytest.raises(ValueError, match="negative radius"):
            select_sphere(session.cloud(0), session.tree(0), (0, 0, 0), -1.0)


class TestBrush:
    def test_brush_is_idempotent(self, session):
        changed1 = session.apply_brush(0, (0.0, 0.0, 1.0), 0.2, 1)
        assert changed1 > 0
        changed2 = session.apply_brush(0, (0.0, 0.0, 1.0), 0.2, 1)
        assert changed2 == 0

    def test_brush_then_eraser_restores(self, session):
        before = session.mask(0).copy()
        changed = session.apply_brush(0, (0.0, 0.0, 1.0), 0.15, 2)
        erased = session.apply_brush(0, (0.0, 0.0, 1.0), 0.15, 0)
        assert changed == erased
        assert np.array_equal(session.mask(0), before)

    def test_brush_on_known_object_sphere(self, seq_dir, session):
        # the object is a ball of radius 0.1 at (0,0,1): a covering brush
        # stroke must label exactly its generator point count
        changed = session.apply_brush(0, (0.0, 0.0, 1.0), 0.100001, 3)
        assert changed == 150

    def test_unknown_label_rejected(self, session):
        with pytest.raises(ValueError, match="label not in palette"):
            session.apply_brush(0, (0, 0, 1), 0.1, 999)

    def test_eraser_always_allowed(self, session):
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.1, 0)  # no-op erase, no error


class TestUndo:
    def test_brush_then_undo_bit_identical(self, session):
        before = session.mask(0).copy()
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.2, 1)
        frame = session.undo()
        assert frame == 0
        assert np.array_equal(session.mask(0), before)

    def test_two_brushes_two_undos(self, session):
        before = session.mask(0).copy()
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.1, 1)
        session.apply_brush(0, (0.05, 0.0, 1.0), 0.1, 2)
        session.undo()
        session.undo()
        assert np.array_equal(session.mask(0), before)

    def test_undo_fresh_session_errors(self, session):
        with pytest.raises(ValueError, match="nothing to undo"):
            session.undo()

    def test_noop_brush_pushes_nothing(self, session):
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.1, 1)
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.1, 1)  # zero changes
        session.undo()
        with pytest.raises(ValueError, match="nothing to undo"):
            session.undo()


class TestFrameValidation:
    def test_negative_frame_rejected(self, session):
        with pytest.raises(ValueError, match="out of range"):
            session.apply_brush(-1, (0, 0, 1), 0.1, 1)

    def test_past_end_rejected(self, session):
        with pytest.raises(ValueError, match="out of range"):
            session.cloud(4)


class TestStepFrame:
    def test_clamp_low(self, session):
        assert session.step_frame(-1) == 0

    def test_step_forward(self, session):
        assert session.step_frame(+1) == 1

    def test_clamp_high(self, session):
        assert session.step_frame(10**6) == 3


class TestRunPropagation:
    def test_propagate_through_session(self, session):
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.11, 1)
        reports = session.run_propagation(0, 3)
        assert len(reports) == 3
        for k in (1, 2, 3):
            assert np.count_nonzero(session.mask(k)) > 0

    def test_propagate_then_undo_restores(self, session):
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.11, 1)
        before = {k: session.mask(k).copy() for k in range(4)}
        session.run_propagation(0, 3)
        for _ in range(3):
            session.undo()
        for k in range(4):
            assert np.array_equal(session.mask(k), before[k])

    def test_empty_start_mask_errors(self, session):
        with pytest.raises(ValueError, match="no labels at start frame"):
            session.run_propagation(0, 2)

    def test_mode_override(self, session):
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.11, 1)
        reports = session.run_propagation(0, 1, mode="color")
        assert len(reports) == 1
        assert session.params.icp.mode == "spatial"  # override does not stick


class TestPersistence:
    def test_save_open_round_trip(self, seq_dir, session):
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.11, 1)
        session.apply_brush(1, (0.05, 0.0, 1.0), 0.08, 2)
        session.cursor = 2
        session.brush_radius = 0.07
        session.active_label = 2
        save_session(session)
        again = open_session(seq_dir)
        assert again.cursor == 2
        assert again.brush_radius == 0.07
        assert again.active_label == 2
        assert again.palette.to_list() == session.palette.to_list()
        for k in (0, 1):
            assert np.array_equal(again.mask(k), session.mask(k))

    def test_open_without_session_json_gets_defaults(self, seq_dir):
        session = open_session(seq_dir)
        assert len(session.palette) == 8
        assert session.cursor == 0
        assert session.brush_radius == 0.05

    def test_orphan_mask_of_wrong_length_rejected(self, seq_dir):
        bad = LabelMask(np.zeros(3, dtype=np.uint16))
        (seq_dir / "frame_000001.lbl").write_bytes(write_mask(bad))
        with pytest.raises(ValueError, match=r"mask misaligned.*frame_000001"):
            open_session(seq_dir)

    def test_orphan_mask_with_unknown_label_extends_palette(self, seq_dir, session):
        n = session.sequence.frames[0].point_count
        labels = np.zeros(n, dtype=np.uint16)
        labels[:5] = 42
        (seq_dir / "frame_000000.lbl").write_bytes(write_mask(LabelMask(labels)))
        again = open_session(seq_dir)
        assert 42 in again.palette

    def test_save_never_touches_frame_files(self, seq_dir, session):
        frames_before = {
            p.name: p.read_bytes() for p in seq_dir.glob("*.pcb")
        }
        session.apply_brush(0, (0.0, 0.0, 1.0), 0.2, 1)
        save_session(session)
        for p in seq_dir.glob("*.pcb"):
            assert p.read_bytes() == frames_before[p.name]


class TestJournalProperty:
    def test_random_operation_sequence_fully_reversible(self, session, rng):
        shadow = {k: session.mask(k).copy() for k in range(4)}
        ops = 0
        while ops < 50:
            kind = rng.random()
            if kind < 0.8:
                frame = int(rng.integers(0, 4))
                center = rng.uniform(-0.3, 0.3, 3) + [0, 0, rng.uniform(0.8, 2.2)]
                label = int(rng.integers(0, 4))
                session.apply_brush(frame, center, float(rng.uniform(0.02, 0.25)), label)
            else:
                start = int(rng.integers(0, 4))
                end = int(rng.integers(0, 4))
                try:
                    session.run_propagation(start, end)
                except ValueError:
                    session.apply_brush(start, (0, 0, 1.0), 0.12, 1)
            ops += 1
        while session.undo_stack:
            session.undo()
        for k in range(4):
            assert np.array_equal(session.mask(k), shadow[k]), f"frame {k} not restored"


class TestPalette:
    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            LabelPalette([PaletteEntry(1, "a", (0, 0, 0)), PaletteEntry(1, "b", (1, 1, 1))])

    def test_zero_id_rejected(self):
        with pytest.raises(ValueError, match="reserved"):
            LabelPalette([PaletteEntry(0, "none", (0, 0, 0))])

    def test_default_palette_distinct(self):
        palette = LabelPalette.default()
        colors = {e.color for e in palette.entries}
        assert len(palette) == 8 and len(colors) == 8
