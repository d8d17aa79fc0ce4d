"""Cartoon/texture segmentation of grayscale micrographs.

The image is split into a piecewise-smooth cartoon and an oscillatory
texture.  The cartoon is segmented into up to four intensity phases by a
local multiphase Chan-Vese model solved with threshold dynamics; the texture
is described by local energies of empirical curvelet subbands and clustered
with k-means or multiclass graph MBO.
"""
__version__ = "0.1.0"

from .cartoon_segmentation import CartoonSegParams, segment
from .clustering import KMeansParams, MBOClusterParams, kmeans, multiclass_mbo
from .decomposition import DecompositionParams, decompose
from .empirical_curvelet import build_filter_bank, ect_forward, ect_inverse, modified_ect
from .errors import (ImageIOError, InvalidInputError, InvalidParameterError, StageError,
                     StmsegError)
from .spectral_partition import DetectionParams, SpectrumPartition
from .texture_features import feature_matrix

__all__ = [
    "CartoonSegParams", "DecompositionParams", "DetectionParams", "ImageIOError",
    "InvalidInputError", "InvalidParameterError", "KMeansParams", "MBOClusterParams",
    "SpectrumPartition", "StageError", "StmsegError", "build_filter_bank", "decompose",
    "ect_forward", "ect_inverse", "feature_matrix", "kmeans", "modified_ect",
    "multiclass_mbo", "segment",
]
