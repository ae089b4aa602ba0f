"""Antipodal grasp generation and verification for a parallel-jaw gripper."""

from .clustering import ClusterResult, cluster_and_select, farthest_point_clusters
from .filtering import ApproachCheck, Obstacle, check_approach, collision_filter
from .gripper import GripperSpec, default_gripper
from .pipeline import GraspConfig, GraspSet, generate_articulated_grasps, generate_grasps
from .sampling import (
    ArticulatedTarget,
    ContactPair,
    GraspCandidate,
    GraspFlags,
    bias_contacts,
    grasp_poses_from_pair,
    sample_antipodal,
    sample_articulated,
)
from .verify import (
    PerturbationSpec,
    VerificationResult,
    VerifyConfig,
    in_situ_test,
    verify_articulated,
    verify_rigid,
    wrench_slip_oracle,
)

__all__ = [
    "ApproachCheck",
    "ArticulatedTarget",
    "ClusterResult",
    "ContactPair",
    "GraspCandidate",
    "GraspConfig",
    "GraspFlags",
    "GraspSet",
    "GripperSpec",
    "Obstacle",
    "PerturbationSpec",
    "VerificationResult",
    "VerifyConfig",
    "bias_contacts",
    "check_approach",
    "cluster_and_select",
    "collision_filter",
    "default_gripper",
    "farthest_point_clusters",
    "generate_articulated_grasps",
    "generate_grasps",
    "grasp_poses_from_pair",
    "in_situ_test",
    "sample_antipodal",
    "sample_articulated",
    "verify_articulated",
    "verify_rigid",
    "wrench_slip_oracle",
]
