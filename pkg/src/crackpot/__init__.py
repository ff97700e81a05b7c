"""Road crack and pothole candidate detection with a texture-encoding classifier.

Subpackages and modules:

- ``imgproc``: grayscale, Gaussian blur, Canny, dilation, mask AND, boxes, crops
- ``netpbm``: PGM/PPM reading and writing
- ``roadmask``: road masks from files or analytic shapes
- ``neuralnet``: numpy classifier with a residual encoding layer, Adam, weight files
- ``pipeline``: per-frame candidate generation, classification, overlays, timing
- ``dataeval``: patch datasets, training loop, precision/recall/F1/accuracy
- ``synthetic``: generated road textures and cracks for tests and demos
- ``cli``: the ``crackpot`` command
"""

from .errors import CrackpotError, FormatError, InvalidParameterError, NotFoundError
from .imgproc import BoundingBox, CandidatePatch
from .neuralnet import NetworkConfig
from .pipeline import Detection, FrameResult, PipelineConfig
from .roadmask import RoadMaskSource

__version__ = "0.1.0"

__all__ = [
    "BoundingBox",
    "CandidatePatch",
    "CrackpotError",
    "Detection",
    "FormatError",
    "FrameResult",
    "InvalidParameterError",
    "NetworkConfig",
    "NotFoundError",
    "PipelineConfig",
    "RoadMaskSource",
]
