"""Back end: pose estimation, refinement, verification and the registration pipeline."""

from tacloc.solver.estimation import PoseEstimate, estimate_pose, estimate_rotation, estimate_translation
from tacloc.solver.pipeline import (
    BackEnd,
    FrontEnd,
    RegistrationResult,
    StageTimings,
    assemble_result,
    extract_front_end,
    register,
    solve_back_end,
)
from tacloc.solver.refinement import RefinementResult, refine_point_to_plane
from tacloc.solver.verification import PoseHypothesis, Selection, verify_and_select, write_hypotheses

__all__ = [
    "BackEnd",
    "FrontEnd",
    "PoseEstimate",
    "PoseHypothesis",
    "RefinementResult",
    "RegistrationResult",
    "Selection",
    "StageTimings",
    "assemble_result",
    "estimate_pose",
    "estimate_rotation",
    "estimate_translation",
    "extract_front_end",
    "refine_point_to_plane",
    "register",
    "solve_back_end",
    "verify_and_select",
    "write_hypotheses",
]
