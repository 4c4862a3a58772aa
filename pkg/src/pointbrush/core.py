"""Geometric value types shared by every module: colored points, point clouds,
and rigid (rotation + translation) transforms.

All types are immutable after construction and safe to share between threads.
Positions are float64 meters; colors are 8-bit RGB channels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ORTHONORMAL_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Point:
    """One colored 3D point."""

    position: np.ndarray  # (3,) float64
    color: tuple[int, int, int]

    def __post_init__(self):
        pos = _readonly(np.array(self.position, dtype=np.float64).reshape(3))
        if not np.all(np.isfinite(pos)):
            raise ValueError("non-finite coordinate")
        color = tuple(int(c) for c in self.color)
        if len(color) != 3 or any(c < 0 or c > 255 for c in color):
            raise ValueError("color channel out of range")
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "color", color)


class PointCloud:
    """An index-ordered set of colored points; one frame of a sequence.

    Point order is stable after construction and is the identity key that
    label masks reference, so the arrays are exposed read-only.
    """

    __slots__ = ("_positions", "_colors")

    def __init__(self, positions, colors=None):
        pos = np.array(positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must have shape (n, 3)")
        if not np.all(np.isfinite(pos)):
            raise ValueError("non-finite coordinate")
        n = pos.shape[0]
        if colors is None:
            col = np.zeros((n, 3), dtype=np.uint8)
        else:
            col = np.asarray(colors)
            if col.shape != (n, 3):
                raise ValueError("colors must have shape (n, 3)")
            if col.dtype != np.uint8:
                if np.any((col < 0) | (col > 255)):
                    raise ValueError("color channel out of range")
                col = col.astype(np.uint8)
            else:
                col = col.copy()
        self._positions = _readonly(np.ascontiguousarray(pos))
        self._colors = _readonly(np.ascontiguousarray(col))

    @classmethod
    def from_points(cls, points) -> "PointCloud":
        pts = list(points)
        pos = np.array([p.position for p in pts], dtype=np.float64).reshape(len(pts), 3)
        col = np.array([p.color for p in pts], dtype=np.uint8).reshape(len(pts), 3)
        return cls(pos, col)

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def colors(self) -> np.ndarray:
        return self._colors

    def point(self, i: int) -> Point:
        return Point(self._positions[i], tuple(int(c) for c in self._colors[i]))

    def __len__(self) -> int:
        return self._positions.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return np.array_equal(self._positions, other._positions) and np.array_equal(
            self._colors, other._colors
        )

    def __repr__(self) -> str:
        return f"PointCloud({len(self)} points)"


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Proper rigid motion: position' = rotation @ position + translation."""

    rotation: np.ndarray  # (3, 3) float64, orthonormal, det +1
    translation: np.ndarray  # (3,) float64

    def __post_init__(self):
        rot = _readonly(np.array(self.rotation, dtype=np.float64).reshape(3, 3))
        tra = _readonly(np.array(self.translation, dtype=np.float64).reshape(3))
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(tra))):
            raise ValueError("non-finite transform")
        err = np.max(np.abs(rot.T @ rot - np.eye(3)))
        if err > ORTHONORMAL_TOL:
            raise ValueError(f"rotation not orthonormal (error {err:.3e})")
        det = np.linalg.det(rot)
        if abs(det - 1.0) > ORTHONORMAL_TOL:
            raise ValueError(f"rotation is not proper (det {det!r})")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tra)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(3), np.zeros(3))

    def apply(self, positions: np.ndarray) -> np.ndarray:
        """Transform an (n, 3) position array (returns a new array)."""
        return transform_positions(np.asarray(positions, dtype=np.float64), self)

    def __repr__(self) -> str:
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def axis_angle_rotation(axis, radians: float) -> np.ndarray:
    """Rotation matrix about `axis` by `radians` (Rodrigues formula)."""
    a = np.asarray(axis, dtype=np.float64).reshape(3)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise ValueError("zero rotation axis")
    x, y, z = a / norm
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(radians) * k + (1.0 - np.cos(radians)) * (k @ k)


def rotation_about(axis, radians: float, pivot) -> RigidTransform:
    """Rigid rotation about an axis through `pivot` (a fixed point)."""
    rot = axis_angle_rotation(axis, radians)
    p = np.asarray(pivot, dtype=np.float64).reshape(3)
    return RigidTransform(rot, p - rot @ p)


def translation_of(offset) -> RigidTransform:
    return RigidTransform(np.eye(3), np.asarray(offset, dtype=np.float64).reshape(3))


def transform_positions(positions: np.ndarray, t: RigidTransform) -> np.ndarray:
    return positions @ t.rotation.T + t.translation


def apply_transform(cloud: PointCloud, t: RigidTransform) -> PointCloud:
    """Transform every point position; count, order, and colors are unchanged."""
    return PointCloud(transform_positions(cloud.positions, t), cloud.colors)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Transform equivalent to applying `b` first, then `a`."""
    return RigidTransform(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(t: RigidTransform) -> RigidTransform:
    rt = t.rotation.T
    return RigidTransform(rt, -(rt @ t.translation))


def centroid(points) -> np.ndarray:
    """Arithmetic mean of a nonempty (n, 3) point array."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise ValueError("empty point set")
    return pts.reshape(-1, 3).mean(axis=0)
