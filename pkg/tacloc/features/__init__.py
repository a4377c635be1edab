"""Front end: downsampling, normals, mesh sampling, keypoints, descriptors and matching."""

from tacloc.features.downsample import voxel_downsample
from tacloc.features.fpfh import DESCRIPTOR_SIZE, FPFHResult, fpfh
from tacloc.features.keypoints import (
    KeypointSelection,
    iss_keypoints,
    select_keypoint_pair,
    uniform_keypoints,
)
from tacloc.features.matching import Correspondence, match_features, write_correspondences
from tacloc.features.normals import NormalEstimate, estimate_normals
from tacloc.features.sampling import sample_faces, sample_mesh

__all__ = [
    "Correspondence",
    "DESCRIPTOR_SIZE",
    "FPFHResult",
    "KeypointSelection",
    "NormalEstimate",
    "estimate_normals",
    "fpfh",
    "iss_keypoints",
    "match_features",
    "sample_faces",
    "sample_mesh",
    "select_keypoint_pair",
    "uniform_keypoints",
    "voxel_downsample",
    "write_correspondences",
]
