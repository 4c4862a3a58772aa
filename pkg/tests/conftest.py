"""Shared test helpers: random geometry and brute-force oracles."""

from __future__ import annotations

import numpy as np
import pytest

from pointbrush import PointCloud, RigidTransform
from pointbrush.core import axis_angle_rotation


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    axis = rng.normal(size=3)
    angle = rng.uniform(-np.pi, np.pi)
    return axis_angle_rotation(axis, angle)


def random_transform(rng: np.random.Generator, max_shift: float = 2.0) -> RigidTransform:
    return RigidTransform(random_rotation(rng), rng.uniform(-max_shift, max_shift, 3))


def random_cloud(rng: np.random.Generator, n: int, scale: float = 1.0) -> PointCloud:
    return PointCloud(
        rng.uniform(-scale, scale, (n, 3)),
        rng.integers(0, 256, (n, 3), dtype=np.int64),
    )


def brute_force_knn(positions: np.ndarray, query: np.ndarray, k: int) -> list[tuple[int, float]]:
    """Independent oracle: full scan sorted by (squared distance, index)."""
    d2 = ((positions - query) ** 2).sum(axis=1)
    order = np.lexsort((np.arange(len(positions)), d2))[:k]
    return [(int(i), float(np.sqrt(d2[i]))) for i in order]


def brute_force_radius(positions: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d2 = ((positions - center) ** 2).sum(axis=1)
    return np.nonzero(d2 <= radius * radius)[0]


def rotation_angle_deg(r: np.ndarray) -> float:
    return float(np.degrees(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0))))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
