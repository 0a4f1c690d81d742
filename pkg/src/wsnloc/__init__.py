"""Range-based 3D WSN localization with coplanar-cluster support.

Library layout: geometric kernels (geometry), graph model and
generators (network, graphio), the localizers (localize2d, localize3d,
cbl), distance-only cluster extraction (clustering), evaluation
(metrics) and the Monte-Carlo experiment driver (harness, report, cli).
"""

from .cbl import CoplanarCluster, cbl
from .clustering import extract_clusters, initial_hop_distance, volume_threshold
from .geometry import (
    RigidTransform,
    TetraClass,
    TetraDistances,
    apply_transform,
    build_transform,
    cayley_menger_det,
    classify_tetra,
    min_triangle_angle,
    place_seed_tetra,
    place_seed_triangle,
    quadrilaterate_point_3d,
    resolve_ambiguity,
    trilaterate_point_2d,
)
from .harness import ExperimentConfig, TrialRecord, run_experiment, run_trial
from .localize2d import PointFormation2, trilaterate, trilaterate_cluster
from .localize3d import PointFormation3, quadrilaterate
from .metrics import EvalReport, align, avg_offset, evaluate, flip_count, recall
from .network import (
    Deployment,
    NoiseSpec,
    WsnGraph,
    apply_noise,
    build_unit_ball_graph,
    gen_planar_disjoint,
    gen_planar_intersecting,
    gen_random_cube,
    planarity_factor,
)

__version__ = "0.1.0"
