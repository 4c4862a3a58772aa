"""pointbrush: label RGB point-cloud video sequences and track the labels
frame-to-frame with ICP (spatial or color-augmented correspondences)."""

from .core import (
    Point,
    PointCloud,
    RigidTransform,
    apply_transform,
    centroid,
    compose,
    inverse,
)
from .frameio import (
    FrameSequence,
    LabelMask,
    load_sequence,
    read_frame,
    read_mask,
    write_frame,
    write_mask,
)
from .kdtree import KdTree
from .registration import (
    Correspondence,
    IcpParams,
    IcpResult,
    RegistrationLostError,
    estimate_rigid_transform,
    find_correspondences_color,
    find_correspondences_spatial,
    icp,
)
from .propagation import (
    PropagationParams,
    PropagationReport,
    propagate_labels,
    propagate_sequence,
)
from .session import LabelPalette, Session, open_session, save_session, select_sphere
from .synthetic import SceneSpec, generate_synthetic_sequence

__all__ = [
    "Point",
    "PointCloud",
    "RigidTransform",
    "apply_transform",
    "centroid",
    "compose",
    "inverse",
    "FrameSequence",
    "LabelMask",
    "load_sequence",
    "read_frame",
    "read_mask",
    "write_frame",
    "write_mask",
    "KdTree",
    "Correspondence",
    "IcpParams",
    "IcpResult",
    "RegistrationLostError",
    "estimate_rigid_transform",
    "find_correspondences_color",
    "find_correspondences_spatial",
    "icp",
    "PropagationParams",
    "PropagationReport",
    "propagate_labels",
    "propagate_sequence",
    "LabelPalette",
    "Session",
    "open_session",
    "save_session",
    "select_sphere",
    "SceneSpec",
    "generate_synthetic_sequence",
]

__version__ = "0.1.0"
