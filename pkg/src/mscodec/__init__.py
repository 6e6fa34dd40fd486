"""Multispectral image compression toolkit.

Four coding schemes over a shared plane codec and container format, plus a
rate-distortion sweep harness.  See the README for the CLI and file formats.
"""

from .cube import (
    CmfMatrix,
    RealPlaneStack,
    RgbImage,
    SpectralCube,
    cie_standard_observer,
    cmf_for_bands,
    crop_quadrants,
    load_cube,
    mse,
    psnr,
    render_rgb,
    requantize,
    store_cube,
)
from .errors import (
    CapabilityError,
    DecodeError,
    FormatError,
    IncompleteGridError,
    MscError,
)
from .schemes import (
    EncodeResult,
    HpclsParams,
    HpclsRgbParams,
    PcaParams,
    PlainParams,
    decode,
    decode_hpcls_rgb_preview,
    encode,
)

__version__ = "0.1.0"
