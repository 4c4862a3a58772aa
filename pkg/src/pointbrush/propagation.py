"""Transfer label masks from frame to frame by per-label rigid tracking.

Each nonzero label is registered to the target frame independently (ICP over
its labeled subset), the subset is moved by the result, and every moved point
claims its nearest target point within the assign radius. Conflicting claims
are resolved by smaller distance, then lower label id. Labels that fail
(too few points, or ICP loses its correspondences) transfer nothing and are
flagged in the report.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .core import PointCloud, transform_positions
from .frameio import FrameSequence, LabelMask
from .kdtree import KdTree
from .registration import IcpParams, IcpResult, RegistrationLostError, icp


@dataclass(frozen=True)
class PropagationParams:
    icp: IcpParams = field(default_factory=IcpParams)
    assign_radius: float = 0.02  # meters
    min_points_per_label: int = 3

    def __post_init__(self):
        if not self.assign_radius > 0:
            raise ValueError("assign_radius must be positive")
        if self.min_points_per_label < 3:
            raise ValueError("min_points_per_label must be at least 3")

    def to_dict(self) -> dict:
        return {
            "icp": self.icp.to_dict(),
            "assign_radius": self.assign_radius,
            "min_points_per_label": self.min_points_per_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PropagationParams":
        return cls(
            icp=IcpParams.from_dict(d.get("icp", {})),
            assign_radius=float(d.get("assign_radius", 0.02)),
            min_points_per_label=int(d.get("min_points_per_label", 3)),
        )


@dataclass
class LabelReport:
    """Outcome of tracking one label across one frame step."""

    label: int
    transferred: int = 0
    lost: int = 0
    failed: bool = False
    reason: str | None = None
    icp: IcpResult | None = None

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "icp_rmse": None if self.icp is None else self.icp.final_rmse,
            "iterations": 0 if self.icp is None else self.icp.iterations_run,
            "converged": False if self.icp is None else self.icp.converged,
            "transferred": self.transferred,
            "lost": self.lost,
            "failed": self.failed,
            "reason": self.reason,
        }


@dataclass
class PropagationReport:
    """Per-label outcomes for one frame step."""

    frame_from: int
    frame_to: int
    labels: list[LabelReport] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "frame_from": self.frame_from,
            "frame_to": self.frame_to,
            "labels": [r.to_dict() for r in self.labels],
        }

    def by_label(self, label: int) -> LabelReport:
        for r in self.labels:
            if r.label == label:
                return r
        raise KeyError(label)


class TreeCache:
    """LRU cache of (cloud, tree) per frame; propagation and interactive
    brushing hit the same few frames repeatedly."""

    def __init__(self, capacity: int = 8):
        self.capacity = capacity
        self._entries: OrderedDict[int, tuple[PointCloud, KdTree]] = OrderedDict()

    def get(self, seq: FrameSequence, i: int) -> tuple[PointCloud, KdTree]:
        if i in self._entries:
            self._entries.move_to_end(i)
            return self._entries[i]
        cloud = seq.load_cloud(i)
        tree = KdTree.build(cloud)
        self._entries[i] = (cloud, tree)
        if len(self._entries) > self.capacity:
            self._entries.popitem(last=False)
        return cloud, tree


def propagate_labels(
    cloud_i: PointCloud,
    mask_i: LabelMask,
    cloud_j: PointCloud,
    tree_j: KdTree,
    params: PropagationParams,
) -> tuple[LabelMask, PropagationReport]:
    """Predict cloud_j's mask from cloud_i's by tracking each label rigidly."""
    if len(mask_i) != len(cloud_i):
        raise ValueError("mask misaligned")
    report = PropagationReport(frame_from=-1, frame_to=-1)
    out = np.zeros(len(cloud_j), dtype=np.uint16)

    claim_targets: list[np.ndarray] = []
    claim_d2: list[np.ndarray] = []
    claim_labels: list[np.ndarray] = []
    source_counts: dict[int, int] = {}

    for label in mask_i.label_ids():
        idx = np.nonzero(mask_i.labels == label)[0]
        source_counts[label] = idx.size
        entry = LabelReport(label=label, lost=idx.size)
        report.labels.append(entry)
        if idx.size < params.min_points_per_label:
            entry.failed = True
            entry.reason = f"too few points: {idx.size}"
            continue
        try:
            result = icp(cloud_i, idx, cloud_j, tree_j, params.icp)
        except RegistrationLostError as err:
            entry.failed = True
            entry.reason = str(err)
            continue
        entry.icp = result
        moved = transform_positions(cloud_i.positions[idx], result.transform)
        ti, d2 = tree_j.nearest_batch(moved)
        ok = d2 <= params.assign_radius * params.assign_radius
        claim_targets.append(ti[ok])
        claim_d2.append(d2[ok])
        claim_labels.append(np.full(int(ok.sum()), label, dtype=np.int64))

    if claim_targets:
        tgt = np.concatenate(claim_targets)
        d2 = np.concatenate(claim_d2)
        lab = np.concatenate(claim_labels)
        # Winner per target point: smallest distance, then lowest label id.
        order = np.lexsort((lab, d2, tgt))
        tgt, d2, lab = tgt[order], d2[order], lab[order]
        first = np.ones(tgt.size, dtype=bool)
        first[1:] = tgt[1:] != tgt[:-1]
        out[tgt[first]] = lab[first]

    for entry in report.labels:
        if not entry.failed:
            entry.transferred = int(np.count_nonzero(out == entry.label))
            entry.lost = source_counts[entry.label] - entry.transferred
    return LabelMask(out), report


def propagate_sequence(
    seq: FrameSequence,
    masks: dict[int, LabelMask],
    start: int,
    end: int,
    params: PropagationParams,
    cache: TreeCache | None = None,
) -> tuple[dict[int, LabelMask], list[PropagationReport]]:
    """Chain propagate_labels stepwise from `start` toward `end`, each step
    consuming the mask the previous one produced.

    `end < start` walks backward. Returns a new mask store (the input is not
    mutated) and one report per step; start == end is a no-op.
    """
    n = len(seq)
    for name, value in (("start", start), ("end", end)):
        if value < 0 or value >= n:
            raise ValueError(f"{name} frame {value} out of range [0, {n})")
    store = dict(masks)
    if start == end:
        return store, []
    if start not in store:
        raise ValueError("no labels at start frame")
    cache = cache or TreeCache()
    step = 1 if end > start else -1
    reports: list[PropagationReport] = []
    for i in range(start, end, step):
        j = i + step
        cloud_i, _ = cache.get(seq, i)
        cloud_j, tree_j = cache.get(seq, j)
        mask_j, report = propagate_labels(cloud_i, store[i], cloud_j, tree_j, params)
        report.frame_from = i
        report.frame_to = j
        store[j] = mask_j
        reports.append(report)
    return store, reports
