"""Binary frame / label-mask files and sequence manifests.

Frame file (.pcb), little-endian throughout:
    bytes 0-3   magic "PCFB"
    bytes 4-7   version u32 (= 1)
    bytes 8-15  point_count u64
    bytes 16-23 timestamp_us u64 (microseconds since sequence start)
    then per point, 16-byte stride:
        f32 x, f32 y, f32 z, u8 r, u8 g, u8 b, 1 pad byte = 0x00

Mask file (.lbl):
    bytes 0-3   magic "PCLB"
    bytes 4-7   version u32 (= 1)
    bytes 8-15  point_count u64
    bytes 16-23 reserved u64 (= 0)
    then point_count u16 label ids (0 = unlabeled)

A sequence directory optionally carries a manifest ``sequence.json`` with
fields ``fps`` (number) and ``frames`` (array of filenames). Without one,
files matching ``frame_*.pcb`` are taken in lexicographic order at 30 fps.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PointCloud

FRAME_MAGIC = b"PCFB"
MASK_MAGIC = b"PCLB"
FORMAT_VERSION = 1
HEADER_SIZE = 24
FRAME_RECORD_SIZE = 16
DEFAULT_FPS = 30.0

_HEADER = struct.Struct("<4sIQQ")
_POINT_DTYPE = np.dtype(
    [
        ("x", "<f4"),
        ("y", "<f4"),
        ("z", "<f4"),
        ("r", "u1"),
        ("g", "u1"),
        ("b", "u1"),
        ("pad", "u1"),
    ]
)
MANIFEST_NAME = "sequence.json"
SESSION_FILE_NAME = "session.json"


class FrameFormatError(ValueError):
    """Raised when frame or mask bytes do not match the file format."""


class LabelMask:
    """Per-point label ids for one frame, index-aligned with its cloud."""

    __slots__ = ("_labels",)

    def __init__(self, labels):
        arr = np.asarray(labels)
        if arr.dtype != np.uint16:
            if arr.size and (np.any(arr < 0) or np.any(arr > 0xFFFF)):
                raise ValueError("label id out of range")
            arr = arr.astype(np.uint16)
        else:
            arr = arr.copy()
        arr = np.ascontiguousarray(arr.reshape(-1))
        arr.flags.writeable = False
        self._labels = arr

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    def label_ids(self) -> list[int]:
        """Sorted distinct nonzero label ids present in the mask."""
        ids = np.unique(self._labels)
        return [int(i) for i in ids if i != 0]

    def __len__(self) -> int:
        return self._labels.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelMask):
            return NotImplemented
        return np.array_equal(self._labels, other._labels)

    def __repr__(self) -> str:
        return f"LabelMask({len(self)} entries, labels {self.label_ids()})"


def write_frame(cloud: PointCloud, timestamp_us: int) -> bytes:
    """Serialize one frame; same input always yields identical bytes."""
    n = len(cloud)
    rec = np.zeros(n, dtype=_POINT_DTYPE)
    pos32 = cloud.positions.astype(np.float32)
    rec["x"], rec["y"], rec["z"] = pos32[:, 0], pos32[:, 1], pos32[:, 2]
    col = cloud.colors
    rec["r"], rec["g"], rec["b"] = col[:, 0], col[:, 1], col[:, 2]
    return _HEADER.pack(FRAME_MAGIC, FORMAT_VERSION, n, int(timestamp_us)) + rec.tobytes()


def _parse_header(data: bytes, magic: bytes, kind: str) -> tuple[int, int]:
    if len(data) < HEADER_SIZE:
        raise FrameFormatError(f"unexpected end of file, expected {HEADER_SIZE} bytes")
    tag, version, count, stamp = _HEADER.unpack_from(data)
    if tag != magic:
        raise FrameFormatError(f"not a {kind} file")
    if version != FORMAT_VERSION:
        raise FrameFormatError(f"unsupported version: {version}")
    return count, stamp


def read_frame(data: bytes) -> tuple[PointCloud, int]:
    """Parse frame bytes; returns the cloud and its timestamp in microseconds."""
    count, timestamp_us = _parse_header(data, FRAME_MAGIC, "frame")
    expected = HEADER_SIZE + FRAME_RECORD_SIZE * count
    if len(data) < expected:
        raise FrameFormatError(f"unexpected end of file, expected {expected} bytes")
    if len(data) > expected:
        raise FrameFormatError(f"trailing data, expected {expected} bytes")
    rec = np.frombuffer(data, dtype=_POINT_DTYPE, count=count, offset=HEADER_SIZE)
    positions = np.stack(
        [rec["x"].astype(np.float64), rec["y"].astype(np.float64), rec["z"].astype(np.float64)],
        axis=1,
    ).reshape(count, 3)
    colors = np.stack([rec["r"], rec["g"], rec["b"]], axis=1).reshape(count, 3)
    return PointCloud(positions, colors), timestamp_us


def write_mask(mask: LabelMask) -> bytes:
    n = len(mask)
    body = mask.labels.astype("<u2").tobytes()
    return _HEADER.pack(MASK_MAGIC, FORMAT_VERSION, n, 0) + body


def read_mask(data: bytes) -> LabelMask:
    count, _ = _parse_header(data, MASK_MAGIC, "mask")
    expected = HEADER_SIZE + 2 * count
    if len(data) < expected:
        raise FrameFormatError(f"unexpected end of file, expected {expected} bytes")
    if len(data) > expected:
        raise FrameFormatError(f"trailing data, expected {expected} bytes")
    labels = np.frombuffer(data, dtype="<u2", count=count, offset=HEADER_SIZE)
    return LabelMask(labels.astype(np.uint16))


@dataclass(frozen=True)
class FrameRef:
    """One frame file of a sequence, identified by name within its directory."""

    name: str
    path: Path
    timestamp_us: int
    point_count: int

    @property
    def stem(self) -> str:
        return Path(self.name).stem

    @property
    def mask_name(self) -> str:
        return self.stem + ".lbl"


class FrameSequence:
    """Ordered frames of one recording, with strictly increasing timestamps."""

    def __init__(self, directory: Path, frames: list[FrameRef], nominal_fps: float):
        if not frames:
            raise ValueError("empty sequence")
        for a, b in zip(frames, frames[1:]):
            if b.timestamp_us <= a.timestamp_us:
                raise ValueError("timestamps not strictly increasing")
        self.directory = Path(directory)
        self.frames = list(frames)
        self.nominal_fps = float(nominal_fps)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def point_counts(self) -> list[int]:
        return [f.point_count for f in self.frames]

    def frame_path(self, i: int) -> Path:
        return self.frames[i].path

    def read_frame_bytes(self, i: int) -> bytes:
        return self.frames[i].path.read_bytes()

    def load_frame(self, i: int) -> tuple[PointCloud, int]:
        return read_frame(self.read_frame_bytes(i))

    def load_cloud(self, i: int) -> PointCloud:
        return self.load_frame(i)[0]


def _read_frame_header(path: Path) -> tuple[int, int]:
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
    count, stamp = _parse_header(head, FRAME_MAGIC, "frame")
    size = path.stat().st_size
    expected = HEADER_SIZE + FRAME_RECORD_SIZE * count
    if size != expected:
        raise FrameFormatError(f"unexpected end of file, expected {expected} bytes")
    return count, stamp


def synthesized_timestamps(frame_count: int, fps: float) -> list[int]:
    """Timestamps assigned when the recorder provides none: round(i * 1e6 / fps)."""
    return [round(i * 1_000_000 / fps) for i in range(frame_count)]


def load_sequence(directory) -> FrameSequence:
    """Index a sequence directory.

    Frame order comes from the manifest when present, otherwise lexicographic
    filename order. Header timestamps are trusted when strictly increasing and
    synthesized from the nominal fps otherwise.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    fps = DEFAULT_FPS
    names: list[str] | None = None
    if manifest_path.is_file():
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        fps = float(manifest.get("fps", DEFAULT_FPS))
        if "frames" in manifest:
            names = [str(n) for n in manifest["frames"]]
    if names is None:
        names = sorted(p.name for p in directory.glob("frame_*.pcb"))
    if not names:
        raise ValueError("empty sequence")
    if fps <= 0:
        raise ValueError(f"invalid fps: {fps}")

    refs = []
    for name in names:
        path = directory / name
        if not path.is_file():
            raise ValueError(f"missing frame {name}")
        count, stamp = _read_frame_header(path)
        refs.append(FrameRef(name, path, stamp, count))

    stamps = [r.timestamp_us for r in refs]
    if any(b <= a for a, b in zip(stamps, stamps[1:])):
        synth = synthesized_timestamps(len(refs), fps)
        refs = [
            FrameRef(r.name, r.path, ts, r.point_count) for r, ts in zip(refs, synth)
        ]
    return FrameSequence(directory, refs, fps)


def write_sequence_manifest(directory, frame_names: list[str], fps: float) -> Path:
    path = Path(directory) / MANIFEST_NAME
    payload = {"fps": fps, "frames": list(frame_names)}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return path
