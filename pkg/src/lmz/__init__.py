"""lmz: lossless compression driven by autoregressive next-symbol predictors.

The pipeline tokenizes a media file into byte symbols, asks a predictor for
a quantized next-symbol distribution at every position, range-codes the
symbols against those distributions, and stores the result in a
self-describing archive.  Better prediction gives shorter archives; the
coder, container, and transforms are exactly lossless throughout.
"""

from .distribution import TOTAL, QuantizedDistribution, quantize_distribution
from .errors import LmzError
from .pipeline import compress_bytes, decompress_bytes, verify_archive
from .predictors import PredictorSpec, begin_session

__version__ = "0.1.0"

__all__ = [
    "TOTAL",
    "QuantizedDistribution",
    "quantize_distribution",
    "LmzError",
    "compress_bytes",
    "decompress_bytes",
    "verify_archive",
    "PredictorSpec",
    "begin_session",
    "__version__",
]
