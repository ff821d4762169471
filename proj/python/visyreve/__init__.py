"""Pose-space density and novel-view synthesis for spacecraft imagery."""

from ._visyreve import (
    BaselineSampling,
    Dataset,
    Intrinsics,
    Pose,
    Quaternion,
    VisyreveError,
    __version__,
    bdd,
    cl2,
    kps_vbn,
    lb_bdd,
    make_synthetic_scene,
    pearson,
    rotation_magnitude,
    run_mc,
    sample_baseline,
    spearman,
    spec_combined,
    synthesize,
)

__all__ = [
    "BaselineSampling",
    "Dataset",
    "Intrinsics",
    "Pose",
    "Quaternion",
    "VisyreveError",
    "__version__",
    "bdd",
    "cl2",
    "kps_vbn",
    "lb_bdd",
    "make_synthetic_scene",
    "pearson",
    "rotation_magnitude",
    "run_mc",
    "sample_baseline",
    "spearman",
    "spec_combined",
    "synthesize",
]
