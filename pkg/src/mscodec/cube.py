"""Multispectral cube container, file I/O, distortion metrics and RGB rendering.

Cubes are stored band-planar as unsigned 16-bit samples in the MSRC file
format (little-endian)::

    "MSRC" | u8 version=1 | u8 bit_depth | u16 bands | u16 width | u16 height
    | u32 reserved=0                                    -> 16-byte header
    band 0 row-major samples, band 1, ...               -> u16 each

PSNR uses the per-image maximum of the original as peak value by default;
pass ``nominal_peak=True`` to use ``2**bit_depth - 1`` instead.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError

MSRC_MAGIC = b"MSRC"
MSRC_VERSION = 1
MSRC_HEADER_LEN = 16

#: Sentinel returned by :func:`psnr` when the reconstruction is exact.
PSNR_INF = math.inf


@dataclass
class SpectralCube:
    """H x W x B grid of integer samples, band-planar, with a bit depth."""

    width: int
    height: int
    bands: int
    bit_depth: int
    samples: np.ndarray  # uint16, shape (bands, height, width)
    band_wavelengths: list[float] | None = None

    def __post_init__(self):
        if self.width < 1 or self.height < 1 or self.bands < 1:
            raise ValueError("cube dimensions must be >= 1")
        if not 8 <= self.bit_depth <= 16:
            raise ValueError(f"bit_depth {self.bit_depth} outside [8, 16]")
        self.samples = np.ascontiguousarray(self.samples, dtype=np.uint16)
        if self.samples.shape != (self.bands, self.height, self.width):
            raise ValueError(
                f"sample grid {self.samples.shape} does not match "
                f"(bands={self.bands}, height={self.height}, width={self.width})"
            )
        if self.samples.size and int(self.samples.max()) > self.max_value:
            raise ValueError(
                f"sample {int(self.samples.max())} exceeds {self.bit_depth}-bit range"
            )
        if self.band_wavelengths is not None and len(self.band_wavelengths) != self.bands:
            raise ValueError("band_wavelengths length must equal bands")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def band(self, b: int) -> np.ndarray:
        return self.samples[b]

    def pixel_matrix(self) -> np.ndarray:
        """Samples as a (pixels, bands) float64 matrix of spectral vectors."""
        return self.samples.reshape(self.bands, -1).T.astype(np.float64)


@dataclass
class RealPlaneStack:
    """Stack of real-valued planes (PC images, residuals) before sample mapping."""

    width: int
    height: int
    planes: int
    values: np.ndarray  # float64, shape (planes, height, width)

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.shape != (self.planes, self.height, self.width):
            raise ValueError("plane grid does not match declared dimensions")
        if not np.isfinite(self.values).all():
            raise ValueError("plane values must be finite")


@dataclass
class RgbImage:
    """Three-channel 10-bit preview image."""

    width: int
    height: int
    channels: np.ndarray  # uint16, shape (3, height, width), samples in [0, 1023]

    def __post_init__(self):
        self.channels = np.ascontiguousarray(self.channels, dtype=np.uint16)
        if self.channels.shape != (3, self.height, self.width):
            raise ValueError("RGB grid must have shape (3, height, width)")
        if self.channels.size and int(self.channels.max()) > 1023:
            raise ValueError("RGB samples exceed 10-bit range")


@dataclass
class CmfMatrix:
    """3 x B color-matching weights mapping spectra to RGB."""

    weights: np.ndarray  # float64, shape (3, bands)
    source: str = "custom"

    def __post_init__(self):
        self.weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] != 3:
            raise ValueError("CMF matrix must have shape (3, bands)")
        if not np.any(self.weights != 0.0, axis=1).all():
            raise ValueError("every CMF row needs at least one nonzero entry")

    @property
    def bands(self) -> int:
        return self.weights.shape[1]


# CIE 1931 2-degree standard observer, 400..700 nm at 10 nm steps (31 columns).
_CIE_1931_2DEG = np.array(
    [
        # x_bar
        [0.014310, 0.043510, 0.134380, 0.283900, 0.348280, 0.336200, 0.290800,
         0.195360, 0.095640, 0.032010, 0.004900, 0.009300, 0.063270, 0.165500,
         0.290400, 0.433450, 0.594500, 0.762100, 0.916300, 1.026300, 1.062200,
         1.002600, 0.854450, 0.642400, 0.447900, 0.283500, 0.164900, 0.087400,
         0.046770, 0.022700, 0.011359],
        # y_bar
        [0.000396, 0.001210, 0.004000, 0.011600, 0.023000, 0.038000, 0.060000,
         0.090980, 0.139020, 0.208020, 0.323000, 0.503000, 0.710000, 0.862000,
         0.954000, 0.994950, 0.995000, 0.952000, 0.870000, 0.757000, 0.631000,
         0.503000, 0.381000, 0.265000, 0.175000, 0.107000, 0.061000, 0.032000,
         0.017000, 0.008210, 0.004102],
        # z_bar
        [0.067850, 0.207400, 0.645600, 1.385600, 1.747060, 1.772110, 1.669200,
         1.287640, 0.812950, 0.465180, 0.272000, 0.158200, 0.078250, 0.042160,
         0.020300, 0.008750, 0.003900, 0.002100, 0.001650, 0.001100, 0.000800,
         0.000340, 0.000190, 0.000050, 0.000020, 0.000000, 0.000000, 0.000000,
         0.000000, 0.000000, 0.000000],
    ]
)


def cie_standard_observer() -> CmfMatrix:
    """The embedded CIE 1931 2-degree CMF table for 31-band 400-700 nm cubes."""
    return CmfMatrix(_CIE_1931_2DEG.copy(), source="CIE-1931-2deg-400-700-10nm")


def cmf_for_bands(bands: int, wavelengths=None) -> CmfMatrix:
    """CMF matched to a band count: the CIE table itself for 31 bands,
    otherwise the CIE curves resampled at ``bands`` points across 400-700 nm
    (or at the given wavelengths)."""
    table_nm = np.arange(400.0, 701.0, 10.0)
    if wavelengths is not None:
        nm = np.asarray(wavelengths, dtype=np.float64)
        if nm.shape != (bands,):
            raise ValueError("wavelength list must match the band count")
    elif bands == table_nm.size:
        return cie_standard_observer()
    elif bands == 1:
        nm = np.array([550.0])
    else:
        nm = np.linspace(400.0, 700.0, bands)
    rows = [np.interp(nm, table_nm, row) for row in _CIE_1931_2DEG]
    return CmfMatrix(np.vstack(rows), source=f"CIE-1931-2deg-resampled-{bands}")


def load_cube(path) -> SpectralCube:
    """Parse an MSRC file into a :class:`SpectralCube`."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < MSRC_HEADER_LEN or data[:4] != MSRC_MAGIC:
        raise FormatError(f"{path}: not an MSRC file")
    version, bit_depth, bands, width, height, reserved = struct.unpack_from(
        "<BBHHHI", data, 4
    )
    if version != MSRC_VERSION:
        raise FormatError(f"{path}: unsupported MSRC version {version}")
    if reserved != 0:
        raise FormatError(f"{path}: nonzero reserved header field")
    if not 8 <= bit_depth <= 16 or min(bands, width, height) < 1:
        raise FormatError(f"{path}: invalid header geometry")
    expected = bands * width * height * 2
    payload = data[MSRC_HEADER_LEN:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload holds {len(payload)} bytes, expected {expected}"
        )
    samples = np.frombuffer(payload, dtype="<u2").reshape(bands, height, width)
    if samples.size and int(samples.max()) > (1 << bit_depth) - 1:
        raise FormatError(f"{path}: sample exceeds declared {bit_depth}-bit range")
    return SpectralCube(width, height, bands, bit_depth, samples.copy())


def store_cube(cube: SpectralCube, path) -> int:
    """Write ``cube`` as an MSRC file, returning the byte count."""
    header = MSRC_MAGIC + struct.pack(
        "<BBHHHI", MSRC_VERSION, cube.bit_depth, cube.bands, cube.width, cube.height, 0
    )
    body = cube.samples.astype("<u2").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)
    return len(header) + len(body)


def crop_quadrants(cube: SpectralCube) -> list[SpectralCube]:
    """Four corner-anchored 256x256 crops (overlapping when a side < 512)."""
    size = 256
    if cube.width < size or cube.height < size:
        raise ValueError(
            f"cube {cube.height}x{cube.width} too small for {size}x{size} crops"
        )
    row_offsets = (0, cube.height - size)
    col_offsets = (0, cube.width - size)
    crops = []
    for r0 in row_offsets:
        for c0 in col_offsets:
            crops.append(
                SpectralCube(
                    size,
                    size,
                    cube.bands,
                    cube.bit_depth,
                    cube.samples[:, r0 : r0 + size, c0 : c0 + size].copy(),
                    list(cube.band_wavelengths) if cube.band_wavelengths else None,
                )
            )
    return crops


def requantize(cube: SpectralCube, target_depth: int) -> SpectralCube:
    """Rescale samples to ``target_depth`` bits (round to nearest, clamped)."""
    if not 8 <= target_depth <= 16:
        raise ValueError(f"target depth {target_depth} outside [8, 16]")
    if target_depth == cube.bit_depth:
        return SpectralCube(
            cube.width, cube.height, cube.bands, cube.bit_depth,
            cube.samples.copy(),
            list(cube.band_wavelengths) if cube.band_wavelengths else None,
        )
    src_max = cube.max_value
    dst_max = (1 << target_depth) - 1
    scaled = np.floor(cube.samples.astype(np.float64) * (dst_max / src_max) + 0.5)
    samples = np.clip(scaled, 0, dst_max).astype(np.uint16)
    return SpectralCube(
        cube.width, cube.height, cube.bands, target_depth, samples,
        list(cube.band_wavelengths) if cube.band_wavelengths else None,
    )


def _check_same_shape(a: SpectralCube, b: SpectralCube):
    if (a.width, a.height, a.bands) != (b.width, b.height, b.bands):
        raise ValueError(
            f"dimension mismatch: {a.bands}x{a.height}x{a.width} vs "
            f"{b.bands}x{b.height}x{b.width}"
        )


def mse(a: SpectralCube, b: SpectralCube) -> float:
    """Mean squared sample difference over all H*W*B samples."""
    _check_same_shape(a, b)
    diff = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    return float(np.mean(diff * diff))


def psnr(a: SpectralCube, b: SpectralCube, nominal_peak: bool = False) -> float:
    """PSNR in dB of reconstruction ``b`` against original ``a``.

    Peak value is the maximum sample of ``a`` (or the nominal bit-depth
    maximum when ``nominal_peak``).  Returns ``PSNR_INF`` for an exact match.
    """
    err = mse(a, b)
    peak = float(a.max_value) if nominal_peak else float(a.samples.max())
    if peak <= 0.0:
        raise ValueError("PSNR undefined for an all-zero original")
    if err == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / err)


def psnr_planes(original: np.ndarray, recon: np.ndarray) -> float:
    """PSNR between two integer plane stacks, peak = max of ``original``."""
    if original.shape != recon.shape:
        raise ValueError("dimension mismatch")
    peak = float(np.max(original))
    if peak <= 0.0:
        raise ValueError("PSNR undefined for an all-zero original")
    diff = original.astype(np.float64) - recon.astype(np.float64)
    err = float(np.mean(diff * diff))
    if err == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / err)


def render_rgb(cube: SpectralCube, cmf: CmfMatrix) -> RgbImage:
    """Project spectra through ``cmf`` and gain-normalize the peak to 1023."""
    if cmf.bands != cube.bands:
        raise ValueError(
            f"CMF has {cmf.bands} bands, cube has {cube.bands}"
        )
    spectra = cube.samples.astype(np.float64)  # (B, H, W)
    raw = np.tensordot(cmf.weights, spectra, axes=([1], [0]))  # (3, H, W)
    peak = float(raw.max())
    if peak <= 0.0:
        channels = np.zeros((3, cube.height, cube.width), dtype=np.uint16)
        return RgbImage(cube.width, cube.height, channels)
    gain = 1023.0 / peak
    channels = np.clip(np.floor(raw * gain + 0.5), 0, 1023).astype(np.uint16)
    return RgbImage(cube.width, cube.height, channels)
