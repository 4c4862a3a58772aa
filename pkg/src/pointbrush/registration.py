"""Rigid alignment of a labeled point subset to the next frame.

`estimate_rigid_transform` is the closed-form SVD (Kabsch) least-squares
solution with reflection correction. `icp` alternates correspondence search
and estimation until the RMSE over matched pairs converges; correspondences
come either from plain nearest neighbors (spatial mode) or from picking the
most similar color among the k nearest neighbors (color mode). Color only
decides which neighbor is matched; the transform estimate itself is always
the spatial least-squares fit.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import PointCloud, RigidTransform
from .kdtree import KdTree

SPATIAL = "spatial"
COLOR = "color"

# Singular-value ratio below which the matched set is treated as rank <= 1
# and the iteration applies a pure translation.
_DEGENERATE_SV_RATIO = 1e-9
_REL_EPS = 1e-12


class RegistrationLostError(RuntimeError):
    """ICP could not find enough correspondences to continue."""

    def __init__(self, count: int):
        super().__init__(f"registration lost: {count} correspondences")
        self.count = count


@dataclass(frozen=True)
class IcpParams:
    max_iterations: int = 50
    rel_tolerance: float = 1e-6
    abs_tolerance: float = 1e-8
    max_correspondence_distance: float = 0.1  # meters
    mode: str = SPATIAL
    k_neighbors: int = 8  # color mode only
    subsample_limit: int = 20000
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.rel_tolerance < 0 or self.abs_tolerance < 0:
            raise ValueError("tolerances must be nonnegative")
        if not self.max_correspondence_distance > 0:
            raise ValueError("max_correspondence_distance must be positive")
        if self.k_neighbors < 1:
            raise ValueError("k_neighbors must be at least 1")
        if self.subsample_limit < 1:
            raise ValueError("subsample_limit must be at least 1")
        if self.mode not in (SPATIAL, COLOR):
            raise ValueError(f"unknown mode: {self.mode}")

    def to_dict(self) -> dict:
        return {
            "max_iterations": self.max_iterations,
            "rel_tolerance": self.rel_tolerance,
            "abs_tolerance": self.abs_tolerance,
            "max_correspondence_distance": self.max_correspondence_distance,
            "mode": self.mode,
            "k_neighbors": self.k_neighbors,
            "subsample_limit": self.subsample_limit,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "IcpParams":
        return cls(**{k: d[k] for k in cls().to_dict() if k in d})

    def with_mode(self, mode: str) -> "IcpParams":
        return replace(self, mode=mode)


@dataclass(frozen=True)
class Correspondence:
    source_index: int
    target_index: int
    squared_distance: float  # meters^2


@dataclass(frozen=True)
class IcpResult:
    transform: RigidTransform  # maps original source positions into the target frame
    final_rmse: float  # meters, over the last iteration's correspondences
    iterations_run: int
    converged: bool
    correspondence_count: int


def _estimate(src: np.ndarray, tgt: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Kabsch fit; returns (rotation, translation, singular values)."""
    p_bar = src.mean(axis=0)
    q_bar = tgt.mean(axis=0)
    h = (src - p_bar).T @ (tgt - q_bar)
    u, s, vt = np.linalg.svd(h)
    v = vt.T
    d = 1.0 if np.linalg.det(v @ u.T) > 0 else -1.0
    rot = v @ np.diag([1.0, 1.0, d]) @ u.T
    return rot, q_bar - rot @ p_bar, s


def estimate_rigid_transform(source, target) -> RigidTransform:
    """Least-squares rigid transform mapping index-aligned source points onto
    target points (reflections corrected to a proper rotation)."""
    src = np.asarray(source, dtype=np.float64).reshape(-1, 3)
    tgt = np.asarray(target, dtype=np.float64).reshape(-1, 3)
    if src.shape[0] != tgt.shape[0]:
        raise ValueError("pair count mismatch")
    if src.shape[0] < 3:
        raise ValueError("insufficient correspondences")
    rot, tra, _ = _estimate(src, tgt)
    return RigidTransform(rot, tra)


def _match_spatial(positions: np.ndarray, tree: KdTree, max_dist: float):
    """(source rows, target indices, squared distances) of accepted matches."""
    ti, d2 = tree.nearest_batch(positions)
    ok = d2 <= max_dist * max_dist
    rows = np.nonzero(ok)[0]
    return rows, ti[ok], d2[ok]

def _match_color(
    positions: np.ndarray,
    colors01: np.ndarray,
    tree: KdTree,
    target_colors01: np.ndarray,
    k: int,
    max_dist: float,
):
    """Pick, per source point, the most similar color among its k nearest
    target points within max_dist; ties fall back to the smaller spatial
    distance, then the lower index (the knn column order)."""
    ti, d2 = tree.knn_batch(positions, k)
    valid = d2 <= max_dist * max_dist
    cd = ((target_colors01[ti] - colors01[:, None, :]) ** 2).sum(axis=2)
    cd[~valid] = np.inf
    j = np.argmin(cd, axis=1)  # first minimum: knn columns are (distance, index) sorted
    rows = np.nonzero(valid.any(axis=1))[0]
    j = j[rows]
    return rows, ti[rows, j], d2[rows, j]


def find_correspondences_spatial(
    source_points, target_tree: KdTree, max_dist: float
) -> list[Correspondence]:
    """One correspondence per source point whose nearest target lies within
    max_dist; other source points are omitted."""
    if not max_dist > 0:
        raise ValueError("max_dist must be positive")
    pos = np.asarray(source_points, dtype=np.float64).reshape(-1, 3)
    rows, ti, d2 = _match_spatial(pos, target_tree, max_dist)
    return [
        Correspondence(int(s), int(t), float(d))
        for s, t, d in zip(rows, ti, d2)
    ]


def find_correspondences_color(
    source: PointCloud,
    source_indices,
    target: PointCloud,
    target_tree: KdTree,
    k: int,
    max_dist: float,
) -> list[Correspondence]:
    """Color-augmented matching over the k nearest spatial neighbors.

    Color distance is squared Euclidean over channels scaled to [0, 1].
    Returned source_index values refer to positions in `source_indices`.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if not max_dist > 0:
        raise ValueError("max_dist must be positive")
    idx = np.asarray(source_indices, dtype=np.int64).reshape(-1)
    pos = source.positions[idx]
    col = source.colors[idx].astype(np.float64) / 255.0
    tcol = target.colors.astype(np.float64) / 255.0
    rows, ti, d2 = _match_color(pos, col, target_tree, tcol, k, max_dist)
    return [
        Correspondence(int(s), int(t), float(d))
        for s, t, d in zip(rows, ti, d2)
    ]


def icp(
    source: PointCloud,
    source_indices,
    target: PointCloud,
    target_tree: KdTree,
    params: IcpParams,
) -> IcpResult:
    """Align the labeled subset of `source` to `target`.

    Each iteration matches the moved subset against the target (mode-dependent),
    measures the RMSE over accepted matches, then estimates and accumulates a
    rigid increment. Stops on max_iterations, on RMSE <= abs_tolerance, or when
    |RMSE_prev - RMSE| <= rel_tolerance * max(RMSE_prev, 1e-12); `converged`
    records whether a tolerance (not the iteration cap) stopped it. The RMSE
    reported for an iteration is measured before that iteration's update.

    Raises RegistrationLostError if any iteration finds fewer than 3
    correspondences.
    """
    idx = np.asarray(source_indices, dtype=np.int64).reshape(-1)
    if params.subsample_limit < idx.size:
        rng = np.random.default_rng(params.seed)
        idx = np.sort(rng.choice(idx, size=params.subsample_limit, replace=False))
    src0 = source.positions[idx]
    colors01 = source.colors[idx].astype(np.float64) / 255.0
    target_colors01 = (
        target.colors.astype(np.float64) / 255.0 if params.mode == COLOR else None
    )
    tgt_pos = target.positions
    max_dist = params.max_correspondence_distance

    rot = np.eye(3)
    tra = np.zeros(3)
    cur = src0.copy()
    prev_rmse = None
    rmse = np.inf
    ncorr = 0
    converged = False
    iterations = 0

    for it in range(1, params.max_iterations + 1):
        iterations = it
        if params.mode == COLOR:
            rows, ti, d2 = _match_color(
                cur, colors01, target_tree, target_colors01, params.k_neighbors, max_dist
            )
        else:
            rows, ti, d2 = _match_spatial(cur, target_tree, max_dist)
        ncorr = rows.size
        if ncorr < 3:
            raise RegistrationLostError(ncorr)
        rmse = float(np.sqrt(d2.mean()))
        if rmse <= params.abs_tolerance:
            converged = True
            break
        if prev_rmse is not None and abs(prev_rmse - rmse) <= params.rel_tolerance * max(
            prev_rmse, _REL_EPS
        ):
            converged = True
            break
        d_rot, d_tra, sv = _estimate(cur[rows], tgt_pos[ti])
        if sv[0] == 0.0 or sv[1] <= sv[0] * _DEGENERATE_SV_RATIO:
            # Rank <= 1 match set: any rotation about the degenerate axis is
            # arbitrary, so move by the centroid difference only.
            d_rot = np.eye(3)
            d_tra = tgt_pos[ti].mean(axis=0) - cur[rows].mean(axis=0)
        rot = d_rot @ rot
        tra = d_rot @ tra + d_tra
        cur = cur @ d_rot.T + d_tra
        prev_rmse = rmse

    return IcpResult(
        transform=RigidTransform(rot, tra),
        final_rmse=rmse,
        iterations_run=iterations,
        converged=converged,
        correspondence_count=ncorr,
    )
