"""Retarget recorded human hand motion onto robot hands.

The pipeline has two stages: a record mapping that estimates an intermediate
parametric hand-model state from labeled motion-capture markers, and an
embodiment mapping that turns those states into base poses and actuated
joint commands for a configurable robot hand.
"""

from .boxopt import Bounds, SolveOptions, SolveResult, finite_diff_gradient, minimize
from .embody import (EmbodimentConfig, RobotCommand, embody_finger,
                     embody_frame, embody_pose, embody_trajectory)
from .hand_model import (FingerId, HandShape, HandState, TriangleMesh,
                         capsule_mesh, finger_forward_kinematics,
                         finger_surface_mesh, hand_markers)
from .mocap import (MarkerFrame, MarkerSequence, estimate_hand_frame,
                    fill_gaps, parse_mocap_tsv, write_mocap_tsv)
from .record import (RecordConfig, estimate_model_pose, fit_finger,
                     record_frame, record_sequence, regularizer)
from .robot import (RobotHandModel, apply_coupling, finger_marker_points,
                    load_hand_config)
from .metrics import (ContactSurface, TimingStats, point_triangle_distance,
                      poisson_sample, surface_distance, timing_stats)
from .se3 import (KinematicTree, Transform, compose, forward_kinematics,
                  frame_from_two_vectors, invert)
from .estimators import EmbodimentMapping, RecordMapping

__version__ = "0.1.0"
