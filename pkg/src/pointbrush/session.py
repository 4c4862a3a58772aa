"""Labeling session: frame navigation, sphere-brush edits, undo journal,
palette management, and mask persistence.

Masks live in memory as mutable uint16 arrays, created all-zero on first
touch. Every mutating operation records an undo delta (indices + previous
values), so replaying undos restores the initial mask state bit-exactly.
Frame (.pcb) files are never written here; only .lbl sidecars and
session.json.
"""

from __future__ import annotations

import json
import threading
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PointCloud
from .frameio import (
    SESSION_FILE_NAME,
    FrameSequence,
    LabelMask,
    load_sequence,
    read_mask,
    write_mask,
)
from .kdtree import KdTree
from .propagation import PropagationParams, PropagationReport, TreeCache, propagate_sequence

DEFAULT_BRUSH_RADIUS = 0.05  # meters
UNDO_DEPTH = 256

_DEFAULT_PALETTE = (
    (1, "red", (220, 50, 47)),
    (2, "green", (64, 170, 60)),
    (3, "blue", (38, 110, 220)),
    (4, "yellow", (235, 200, 40)),
    (5, "magenta", (200, 60, 180)),
    (6, "cyan", (60, 190, 200)),
    (7, "orange", (235, 130, 35)),
    (8, "purple", (125, 70, 200)),
)


@dataclass(frozen=True)
class PaletteEntry:
    label: int
    name: str
    color: tuple[int, int, int]

    def to_dict(self) -> dict:
        return {"label": self.label, "name": self.name, "color": list(self.color)}

    @classmethod
    def from_dict(cls, d: dict) -> "PaletteEntry":
        return cls(int(d["label"]), str(d["name"]), tuple(int(c) for c in d["color"]))


class LabelPalette:
    """Ordered label definitions; id 0 is reserved for "unlabeled"."""

    def __init__(self, entries):
        self.entries: list[PaletteEntry] = list(entries)
        ids = [e.label for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate label id in palette")
        if any(i < 1 for i in ids):
            raise ValueError("label ids must be >= 1 (0 is reserved)")

    @classmethod
    def default(cls) -> "LabelPalette":
        return cls(PaletteEntry(i, n, c) for i, n, c in _DEFAULT_PALETTE)

    def __contains__(self, label: int) -> bool:
        return any(e.label == label for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, entry: PaletteEntry):
        if entry.label in self:
            raise ValueError("duplicate label id in palette")
        self.entries.append(entry)

    def to_list(self) -> list[dict]:
        return [e.to_dict() for e in self.entries]

    @classmethod
    def from_list(cls, items) -> "LabelPalette":
        return cls(PaletteEntry.from_dict(d) for d in items)


@dataclass
class UndoEntry:
    frame: int
    indices: np.ndarray  # points whose labels changed
    previous: np.ndarray  # their prior label values


def select_sphere(cloud: PointCloud, tree: KdTree, center, radius: float) -> np.ndarray:
    """Indices of the cloud's points inside the brush sphere (ascending)."""
    if radius < 0:
        raise ValueError("negative radius")
    return tree.radius_query(center, radius)


class Session:
    """One labeling session over one sequence.

    Mutations are serialized through `lock` (a single-writer discipline the
    HTTP service relies on); reads of fully applied state are safe.
    """

    def __init__(
        self,
        sequence: FrameSequence,
        palette: LabelPalette | None = None,
        params: PropagationParams | None = None,
    ):
        self.sequence = sequence
        self.palette = palette or LabelPalette.default()
        self.params = params or PropagationParams()
        self.masks: dict[int, np.ndarray] = {}
        self.cursor = 0
        self.brush_radius = DEFAULT_BRUSH_RADIUS
        self.active_label = self.palette.entries[0].label if len(self.palette) else 0
        self.undo_stack: deque[UndoEntry] = deque(maxlen=UNDO_DEPTH)
        self.lock = threading.RLock()
        self._cache = TreeCache()

    @property
    def directory(self) -> Path:
        return self.sequence.directory

    @property
    def frame_count(self) -> int:
        return len(self.sequence)

    def cloud(self, frame: int) -> PointCloud:
        self._check_frame(frame)
        return self._cache.get(self.sequence, frame)[0]

    def tree(self, frame: int) -> KdTree:
        self._check_frame(frame)
        return self._cache.get(self.sequence, frame)[1]

    def mask(self, frame: int) -> np.ndarray:
        """The frame's mutable mask array, created all-zero on first touch."""
        self._check_frame(frame)
        if frame not in self.masks:
            self.masks[frame] = np.zeros(self.sequence.frames[frame].point_count, dtype=np.uint16)
        return self.masks[frame]

    def label_mask(self, frame: int) -> LabelMask:
        return LabelMask(self.mask(frame))

    def _check_frame(self, frame: int):
        if frame < 0 or frame >= self.frame_count:
            raise ValueError(f"frame {frame} out of range [0, {self.frame_count})")

    def step_frame(self, delta: int) -> int:
        """Move the cursor by delta, clamped to the sequence bounds."""
        self.cursor = max(0, min(self.frame_count - 1, self.cursor + delta))
        return self.cursor

    def apply_brush(self, frame: int, center, radius: float, label: int) -> int:
        """Set every point inside the sphere to `label` (0 erases).

        Returns the number of entries that actually changed; a no-op stroke
        records no undo entry.
        """
        if label != 0 and label not in self.palette:
            raise ValueError("label not in palette")
        selected = select_sphere(self.cloud(frame), self.tree(frame), center, radius)
        mask = self.mask(frame)
        changed = selected[mask[selected] != label]
        if changed.size:
            self.undo_stack.append(
                UndoEntry(frame=frame, indices=changed.copy(), previous=mask[changed].copy())
            )
            mask[changed] = label
        return int(changed.size)

    def undo(self) -> int:
        """Revert the most recent mask delta; returns the affected frame."""
        if not self.undo_stack:
            raise ValueError("nothing to undo")
        entry = self.undo_stack.pop()
        mask = self.mask(entry.frame)
        mask[entry.indices] = entry.previous
        return entry.frame

    def run_propagation(
        self, start: int, end: int, mode: str | None = None
    ) -> list[PropagationReport]:
        """Propagate labels stepwise from `start` to `end` (either direction),
        replacing the masks of the frames along the way.

        Records one undo entry per overwritten frame, so |end - start| undos
        restore the prior masks.
        """
        self._check_frame(start)
        self._check_frame(end)
        start_mask = self.mask(start)
        if not np.any(start_mask):
            raise ValueError("no labels at start frame")
        params = self.params
        if mode is not None:
            params = PropagationParams(
                icp=params.icp.with_mode(mode),
                assign_radius=params.assign_radius,
                min_points_per_label=params.min_points_per_label,
            )
        store = {i: LabelMask(m) for i, m in self.masks.items()}
        new_store, reports = propagate_sequence(
            self.sequence, store, start, end, params, cache=self._cache
        )
        step = 1 if end >= start else -1
        for frame in range(start + step, end + step, step):
            old = self.mask(frame)
            new = new_store[frame].labels
            diff = np.nonzero(old != new)[0]
            self.undo_stack.append(
                UndoEntry(frame=frame, indices=diff, previous=old[diff].copy())
            )
            old[diff] = new[diff]
        return reports


def save_session(session: Session, directory=None) -> Path:
    """Write materialized masks as .lbl sidecars plus session.json."""
    directory = Path(directory) if directory is not None else session.directory
    directory.mkdir(parents=True, exist_ok=True)
    for frame, mask in sorted(session.masks.items()):
        path = directory / session.sequence.frames[frame].mask_name
        path.write_bytes(write_mask(LabelMask(mask)))
    payload = {
        "version": 1,
        "cursor": session.cursor,
        "brush_radius": session.brush_radius,
        "active_label": session.active_label,
        "palette": session.palette.to_list(),
        "propagation": session.params.to_dict(),
    }
    path = directory / SESSION_FILE_NAME
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path


def open_session(directory) -> Session:
    """Load a sequence directory into a fresh session.

    session.json restores palette, cursor, and params when present; otherwise
    defaults apply. Existing .lbl sidecars are loaded and must match their
    frame's point count. Mask labels missing from the palette are added to it
    (auto-named) so third-party masks stay editable.
    """
    directory = Path(directory)
    sequence = load_sequence(directory)
    palette = None
    params = None
    state = None
    session_path = directory / SESSION_FILE_NAME
    if session_path.is_file():
        state = json.loads(session_path.read_text(encoding="utf-8"))
        palette = LabelPalette.from_list(state.get("palette", []))
        if "propagation" in state:
            params = PropagationParams.from_dict(state["propagation"])
    session = Session(sequence, palette=palette, params=params)
    if state is not None:
        session.cursor = max(0, min(len(sequence) - 1, int(state.get("cursor", 0))))
        session.brush_radius = float(state.get("brush_radius", DEFAULT_BRUSH_RADIUS))
        session.active_label = int(state.get("active_label", session.active_label))

    for i, ref in enumerate(sequence.frames):
        lbl_path = directory / ref.mask_name
        if not lbl_path.is_file():
            continue
        mask = read_mask(lbl_path.read_bytes())
        if len(mask) != ref.point_count:
            raise ValueError(
                f"mask misaligned: {ref.name} has {ref.point_count} points, "
                f"{lbl_path.name} holds {len(mask)} labels"
            )
        session.masks[i] = mask.labels.copy()
        for label in mask.label_ids():
            if label not in session.palette:
                session.palette.add(
                    PaletteEntry(label, f"label-{label}", _auto_color(label))
                )
    return session


def _auto_color(label: int) -> tuple[int, int, int]:
    base = _DEFAULT_PALETTE[(label - 1) % len(_DEFAULT_PALETTE)][2]
    return base
