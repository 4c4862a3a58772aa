"""Exact k-d tree over one frame's points.

Split rule: axes cycle with depth (x, y, z), split at the median by partial
selection, leaves hold up to 16 points scanned linearly. Queries are exact:
results match a brute-force linear scan, with distance ties broken by the
lower point index. Distances are squared internally and square-rooted only
at the API boundary.

Besides the per-query methods there are batch variants (`nearest_batch`,
`knn_batch`) that run one pruned traversal vectorized across all queries;
registration uses those in its inner loop.
"""

from __future__ import annotations

import heapq
import math

import numpy as np

from .core import PointCloud

LEAF_SIZE = 16
_NO_AXIS = -1


class KdTree:
    """Immutable spatial index; build once per frame, query freely."""

    def __init__(self, positions: np.ndarray):
        pos = np.ascontiguousarray(np.asarray(positions, dtype=np.float64))
        if pos.ndim != 2 or pos.shape[1] != 3:
            raise ValueError("positions must have shape (n, 3)")
        if pos.shape[0] == 0:
            raise ValueError("cannot index empty cloud")
        self._pos = pos
        n = pos.shape[0]
        self._perm = np.arange(n, dtype=np.int64)
        # Parallel node arrays, filled by the recursive build.
        self._axis: list[int] = []
        self._split: list[float] = []
        self._left: list[int] = []
        self._right: list[int] = []
        self._start: list[int] = []
        self._end: list[int] = []
        self._build(0, n, 0)
        self._axis_arr = np.asarray(self._axis, dtype=np.int64)
        self._split_arr = np.asarray(self._split, dtype=np.float64)

    @classmethod
    def build(cls, cloud) -> "KdTree":
        """Index a PointCloud (or a bare (n, 3) position array)."""
        if isinstance(cloud, PointCloud):
            return cls(cloud.positions)
        return cls(cloud)

    @property
    def size(self) -> int:
        return self._pos.shape[0]

    @property
    def node_count(self) -> int:
        return len(self._axis)

    def _build(self, start: int, end: int, depth: int) -> int:
        node = len(self._axis)
        self._axis.append(_NO_AXIS)
        self._split.append(0.0)
        self._left.append(-1)
        self._right.append(-1)
        self._start.append(start)
        self._end.append(end)
        count = end - start
        if count <= LEAF_SIZE:
            # Ascending leaf order makes first-minimum scans tie-correct.
            self._perm[start:end] = np.sort(self._perm[start:end])
            return node
        axis = depth % 3
        seg = self._perm[start:end]
        coords = self._pos[seg, axis]
        mid = count // 2
        order = np.argpartition(coords, mid)
        self._perm[start:end] = seg[order]
        split = self._pos[self._perm[start + mid], axis]
        self._axis[node] = axis
        self._split[node] = split
        self._left[node] = self._build(start, start + mid, depth + 1)
        self._right[node] = self._build(start + mid, end, depth + 1)
        return node

    # -- scalar queries ------------------------------------------------

    def nearest(self, query) -> tuple[int, float]:
        """Index and Euclidean distance of the closest indexed point."""
        q = np.asarray(query, dtype=np.float64).reshape(3)
        (idx, d2), _ = self._nearest_impl(q)
        return idx, math.sqrt(d2)

    def _nearest_impl(self, q: np.ndarray) -> tuple[tuple[int, float], int]:
        pos, perm = self._pos, self._perm
        best_d2 = math.inf
        best_i = self.size
        visits = 0
        stack = [(0, 0.0)]
        while stack:
            node, gate = stack.pop()
            if gate > best_d2:
                continue
            visits += 1
            axis = self._axis[node]
            if axis == _NO_AXIS:
                idxs = perm[self._start[node] : self._end[node]]
                d2 = ((pos[idxs] - q) ** 2).sum(axis=1)
                j = int(np.argmin(d2))  # first minimum = lowest index (leaf sorted)
                d, i = float(d2[j]), int(idxs[j])
                if d < best_d2 or (d == best_d2 and i < best_i):
                    best_d2, best_i = d, i
                continue
            delta = q[axis] - self._split[node]
            if delta <= 0:
                near, far = self._left[node], self._right[node]
            else:
                near, far = self._right[node], self._left[node]
            stack.append((far, delta * delta))
            stack.append((near, gate))
        return (best_i, best_d2), visits

    def knn(self, query, k: int) -> list[tuple[int, float]]:
        """The min(k, n) nearest points as (index, distance), sorted by
        (distance, index) ascending."""
        q = np.asarray(query, dtype=np.float64).reshape(3)
        pairs, _ = self._knn_impl(q, k)
        return [(i, math.sqrt(d2)) for d2, i in pairs]

    def _knn_impl(self, q: np.ndarray, k: int) -> tuple[list[tuple[float, int]], int]:
        if k < 1:
            raise ValueError("k must be at least 1")
        k = min(k, self.size)
        pos, perm = self._pos, self._perm
        # Max-heap of the current k best as (-d2, -idx); root is the worst.
        heap: list[tuple[float, float]] = []
        visits = 0
        stack = [(0, 0.0)]
        while stack:
            node, gate = stack.pop()
            if len(heap) == k and gate > -heap[0][0]:
                continue
            visits += 1
            axis = self._axis[node]
            if axis == _NO_AXIS:
                idxs = perm[self._start[node] : self._end[node]]
                d2 = ((pos[idxs] - q) ** 2).sum(axis=1)
                for dv, iv in zip(d2.tolist(), idxs.tolist()):
                    if len(heap) < k:
                        heapq.heappush(heap, (-dv, -iv))
                    else:
                        wd, wi = -heap[0][0], -heap[0][1]
                        if dv < wd or (dv == wd and iv < wi):
                            heapq.heapreplace(heap, (-dv, -iv))
                continue
            delta = q[axis] - self._split[node]
            if delta <= 0:
                near, far = self._left[node], self._right[node]
            else:
                near, far = self._right[node], self._left[node]
            stack.append((far, delta * delta))
            stack.append((near, gate))
        pairs = sorted((-nd, -ni) for nd, ni in heap)
        return [(d, int(i)) for d, i in pairs], visits

    def radius_query(self, center, radius: float) -> np.ndarray:
        """Indices of all points within `radius` of `center`, ascending."""
        if radius < 0:
            raise ValueError("negative radius")
        q = np.asarray(center, dtype=np.float64).reshape(3)
        r2 = radius * radius
        pos, perm = self._pos, self._perm
        hits: list[np.ndarray] = []
        stack = [(0, 0.0)]
        while stack:
            node, gate = stack.pop()
            if gate > r2:
                continue
            axis = self._axis[node]
            if axis == _NO_AXIS:
                idxs = perm[self._start[node] : self._end[node]]
                d2 = ((pos[idxs] - q) ** 2).sum(axis=1)
                sel = idxs[d2 <= r2]
                if sel.size:
                    hits.append(sel)
                continue
            delta = q[axis] - self._split[node]
            if delta <= 0:
                near, far = self._left[node], self._right[node]
            else:
                near, far = self._right[node], self._left[node]
            stack.append((far, delta * delta))
            stack.append((near, gate))
        if not hits:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(hits))

    # -- batch queries -------------------------------------------------

    def nearest_batch(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Nearest indexed point for each query row.

        Returns (indices (m,), squared distances (m,)). One traversal is
        shared by all queries, with far subtrees re-checked against each
        query's current best at pop time.
        """
        Q = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 3))
        m = Q.shape[0]
        best_d2 = np.full(m, np.inf)
        best_i = np.full(m, self.size, dtype=np.int64)
        if m == 0:
            return best_i, best_d2
        pos, perm = self._pos, self._perm
        stack: list[tuple[int, np.ndarray, np.ndarray | None]] = [
            (0, np.arange(m, dtype=np.int64), None)
        ]
        while stack:
            node, qs, gate = stack.pop()
            if gate is not None:
                keep = gate <= best_d2[qs]
                if not keep.all():
                    qs = qs[keep]
                    if qs.size == 0:
                        continue
            axis = self._axis[node]
            if axis == _NO_AXIS:
                idxs = perm[self._start[node] : self._end[node]]
                d2 = ((Q[qs, None, :] - pos[idxs][None, :, :]) ** 2).sum(axis=2)
                j = np.argmin(d2, axis=1)  # first minimum = lowest index
                dmin = d2[np.arange(qs.size), j]
                imin = idxs[j]
                cur_d, cur_i = best_d2[qs], best_i[qs]
                upd = (dmin < cur_d) | ((dmin == cur_d) & (imin < cur_i))
                sel = qs[upd]
                best_d2[sel] = dmin[upd]
                best_i[sel] = imin[upd]
                continue
            delta = Q[qs, axis] - self._split[node]
            go_left = delta <= 0
            d2p = delta * delta
            ql, qr = qs[go_left], qs[~go_left]
            left, right = self._left[node], self._right[node]
            # Far entries first so both near sides are processed before
            # any far side is re-checked.
            if ql.size:
                stack.append((right, ql, d2p[go_left]))
            if qr.size:
                stack.append((left, qr, d2p[~go_left]))
            if qr.size:
                stack.append((right, qr, None))
            if ql.size:
                stack.append((left, ql, None))
        return best_i, best_d2

    def knn_batch(self, queries, k: int) -> tuple[np.ndarray, np.ndarray]:
        """k nearest points for each query row, columns sorted by
        (distance, index).

        Returns (indices (m, kk), squared distances (m, kk)) with
        kk = min(k, n); rows are never padded since kk <= n.
        """
        if k < 1:
            raise ValueError("k must be at least 1")
        Q = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 3))
        m = Q.shape[0]
        kk = min(k, self.size)
        D = np.full((m, kk), np.inf)
        I = np.full((m, kk), self.size, dtype=np.int64)
        if m == 0:
            return I, D
        pos, perm = self._pos, self._perm
        stack: list[tuple[int, np.ndarray, np.ndarray | None]] = [
            (0, np.arange(m, dtype=np.int64), None)
        ]
        while stack:
            node, qs, gate = stack.pop()
            if gate is not None:
                keep = gate <= D[qs, kk - 1]
                if not keep.all():
                    qs = qs[keep]
                    if qs.size == 0:
                        continue
            axis = self._axis[node]
            if axis == _NO_AXIS:
                idxs = perm[self._start[node] : self._end[node]]
                d2 = ((Q[qs, None, :] - pos[idxs][None, :, :]) ** 2).sum(axis=2)
                all_d = np.concatenate([D[qs], d2], axis=1)
                all_i = np.concatenate(
                    [I[qs], np.broadcast_to(idxs, (qs.size, idxs.size))], axis=1
                )
                # Lexicographic (distance, index) sort via successive stable sorts.
                o = np.argsort(all_i, axis=1, kind="stable")
                all_d = np.take_along_axis(all_d, o, axis=1)
                all_i = np.take_along_axis(all_i, o, axis=1)
                o = np.argsort(all_d, axis=1, kind="stable")
                D[qs] = np.take_along_axis(all_d, o, axis=1)[:, :kk]
                I[qs] = np.take_along_axis(all_i, o, axis=1)[:, :kk]
                continue
            delta = Q[qs, axis] - self._split[node]
            go_left = delta <= 0
            d2p = delta * delta
            ql, qr = qs[go_left], qs[~go_left]
            left, right = self._left[node], self._right[node]
            if ql.size:
                stack.append((right, ql, d2p[go_left]))
            if qr.size:
                stack.append((left, qr, d2p[~go_left]))
            if qr.size:
                stack.append((right, qr, None))
            if ql.size:
                stack.append((left, ql, None))
        return I, D


def build(cloud) -> KdTree:
    """Module-level alias for KdTree.build."""
    return KdTree.build(cloud)
