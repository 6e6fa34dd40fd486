"""Spectral PCA: fit, truncate, quantize and apply an orthonormal band basis.

The eigendecomposition is a cyclic Jacobi iteration (deterministic, ample for
the <= 64 band covariances seen here).  Quantized bases use uniform power-of-two
steps with fixed-width indices: 16 bit for basis entries (|v| <= 1), 32 bit for
the mean vector whose range is the sample domain.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .cube import RealPlaneStack, SpectralCube
from .errors import FormatError

#: Default basis/mean quantizer step 2**-13.
DEFAULT_BASIS_STEP = 2.0 ** -13

_MEAN_WIDTH_BITS = 32
_BASIS_WIDTH_BITS = 16


def power_of_two_exponent(step: float) -> int:
    """Exponent e with step == 2**e; rejects non power-of-two steps."""
    if step <= 0.0:
        raise ValueError("quantizer step must be positive")
    mantissa, exp = math.frexp(step)
    if mantissa != 0.5:
        raise ValueError(f"quantizer step {step} is not a power of two")
    return exp - 1


def round_away(values: np.ndarray) -> np.ndarray:
    """Round to nearest integer, ties away from zero."""
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


@dataclass
class QuantizedVectorBlock:
    """Fixed-width integer indices of a uniformly quantized real array."""

    step_exponent: int
    indices: np.ndarray
    width_bits: int

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        lo = -(1 << (self.width_bits - 1))
        hi = (1 << (self.width_bits - 1)) - 1
        if self.indices.size and (
            int(self.indices.min()) < lo or int(self.indices.max()) > hi
        ):
            raise ValueError(
                f"quantizer index overflows {self.width_bits}-bit width"
            )

    @property
    def step(self) -> float:
        return 2.0 ** self.step_exponent

    def dequantize(self) -> np.ndarray:
        return self.indices.astype(np.float64) * self.step


@dataclass
class PcaBasis:
    """Per-band mean + orthonormal basis columns ordered by eigenvalue."""

    bands: int
    n_components: int
    mean: np.ndarray        # (bands,)
    basis: np.ndarray       # (bands, n_components), columns orthonormal
    eigenvalues: np.ndarray  # (n_components,), non-increasing, >= 0
    step_exponent: int | None = None
    quantized: bool = False

    def __post_init__(self):
        self.mean = np.ascontiguousarray(self.mean, dtype=np.float64)
        self.basis = np.ascontiguousarray(self.basis, dtype=np.float64)
        self.eigenvalues = np.ascontiguousarray(self.eigenvalues, dtype=np.float64)
        if self.mean.shape != (self.bands,):
            raise ValueError("mean length must equal bands")
        if self.basis.shape != (self.bands, self.n_components):
            raise ValueError("basis must be bands x n_components")
        if self.eigenvalues.shape != (self.n_components,):
            raise ValueError("eigenvalues length must equal n_components")
        if not 1 <= self.n_components <= self.bands:
            raise ValueError("n_components outside [1, bands]")
        if np.any(self.eigenvalues < -1e-12):
            raise ValueError("eigenvalues must be >= -1e-12")
        self.eigenvalues = np.maximum(self.eigenvalues, 0.0)
        if np.any(np.diff(self.eigenvalues) > 1e-9 * max(self.eigenvalues.max(), 1.0)):
            raise ValueError("eigenvalues must be non-increasing")
        if not self.quantized:
            gram = self.basis.T @ self.basis
            if np.abs(gram - np.eye(self.n_components)).max() > 1e-10:
                raise ValueError("basis columns must be orthonormal")


def _fix_column_signs(vecs: np.ndarray) -> np.ndarray:
    # Largest-magnitude entry of each column made positive; argmax takes the
    # lowest index on exact ties.
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[i, j] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def jacobi_eigh(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigenvalues/-vectors of a symmetric matrix by cyclic Jacobi rotation.

    Sweeps until the off-diagonal Frobenius norm drops below ``tol`` times the
    trace (or the absolute matrix scale for traceless input).
    """
    a = np.array(matrix, dtype=np.float64)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if np.abs(a - a.T).max(initial=0.0) > 1e-9 * max(np.abs(a).max(initial=0.0), 1.0):
        raise ValueError("matrix must be symmetric")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    scale = abs(float(np.trace(a)))
    if scale == 0.0:
        scale = float(np.abs(a).sum())
    if scale == 0.0:
        return np.zeros(n), v
    threshold = tol * scale

    def off_norm():
        off = a - np.diag(np.diag(a))
        return float(np.sqrt(np.sum(off * off)))

    for _ in range(max_sweeps):
        if off_norm() <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app, aqq = a[p, p], a[q, q]
                theta = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p, col_q = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p, row_q = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                vec_p, vec_q = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vec_p - s * vec_q
                v[:, q] = s * vec_p + c * vec_q
    return np.diag(a).copy(), v


def fit_pca_matrix(data: np.ndarray, center: bool = True) -> PcaBasis:
    """Full-rank PCA of a (pixels, bands) sample matrix."""
    data = np.asarray(data, dtype=np.float64)
    n, bands = data.shape
    if n < 2:
        raise ValueError("PCA needs at least two pixels")
    mean = data.mean(axis=0) if center else np.zeros(bands)
    centered = data - mean
    cov = centered.T @ centered / (n - 1)
    evals, vecs = jacobi_eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.maximum(evals[order], 0.0)
    vecs = _fix_column_signs(vecs[:, order])
    return PcaBasis(bands, bands, mean, vecs, evals)


def fit_pca(cube: SpectralCube, center: bool = True) -> PcaBasis:
    """Full-rank PCA over the cube's spectral pixel vectors."""
    return fit_pca_matrix(cube.pixel_matrix(), center=center)


def truncate(basis: PcaBasis, n_c: int) -> PcaBasis:
    """Keep the first ``n_c`` components."""
    if not 1 <= n_c <= basis.n_components:
        raise ValueError(f"n_c {n_c} outside [1, {basis.n_components}]")
    return PcaBasis(
        basis.bands,
        n_c,
        basis.mean.copy(),
        basis.basis[:, :n_c].copy(),
        basis.eigenvalues[:n_c].copy(),
        basis.step_exponent,
        basis.quantized,
    )


def quantize_basis(basis: PcaBasis, step: float = DEFAULT_BASIS_STEP):
    """Uniformly quantize mean and basis entries.

    Returns the quantized basis plus the (mean, basis) index blocks that get
    serialized; dequantized values are exact index * step products.
    """
    if basis.quantized:
        raise ValueError("basis is already quantized")
    exp = power_of_two_exponent(step)
    mean_block = QuantizedVectorBlock(
        exp, round_away(basis.mean / step), _MEAN_WIDTH_BITS
    )
    basis_block = QuantizedVectorBlock(
        exp, round_away(basis.basis / step), _BASIS_WIDTH_BITS
    )
    quantized = PcaBasis(
        basis.bands,
        basis.n_components,
        mean_block.dequantize(),
        basis_block.dequantize().reshape(basis.bands, basis.n_components),
        basis.eigenvalues.copy(),
        step_exponent=exp,
        quantized=True,
    )
    return quantized, (mean_block, basis_block)


def forward_planes(planes: np.ndarray, basis: PcaBasis) -> np.ndarray:
    """Project (bands, H, W) values onto the basis -> (n_components, H, W)."""
    bands, h, w = planes.shape
    if bands != basis.bands:
        raise ValueError(f"basis has {basis.bands} bands, data has {bands}")
    data = planes.reshape(bands, -1).T - basis.mean
    coeffs = data @ basis.basis  # (N, n_c)
    return coeffs.T.reshape(basis.n_components, h, w)


def inverse_planes(coeffs: np.ndarray, basis: PcaBasis) -> np.ndarray:
    """Reconstruct (bands, H, W) values from (n_components, H, W) coefficients."""
    n_c, h, w = coeffs.shape
    if n_c != basis.n_components:
        raise ValueError(
            f"basis has {basis.n_components} components, coefficients have {n_c}"
        )
    flat = coeffs.reshape(n_c, -1).T @ basis.basis.T + basis.mean
    return flat.T.reshape(basis.bands, h, w)


def forward(cube: SpectralCube, basis: PcaBasis) -> RealPlaneStack:
    """Per-pixel coefficients of the centered spectra."""
    coeffs = forward_planes(cube.samples.astype(np.float64), basis)
    return RealPlaneStack(cube.width, cube.height, basis.n_components, coeffs)


def inverse(planes: RealPlaneStack, basis: PcaBasis) -> RealPlaneStack:
    """Back-projection to band planes; caller rounds into the sample domain."""
    values = inverse_planes(planes.values, basis)
    return RealPlaneStack(planes.width, planes.height, basis.bands, values)


def serialize_basis(basis: PcaBasis) -> bytes:
    """Basis section bytes: u16 bands, u16 n_components, i8 step exponent,
    i32 mean indices, i16 basis indices column-major."""
    if not basis.quantized or basis.step_exponent is None:
        raise ValueError("only quantized bases are serializable")
    step = 2.0 ** basis.step_exponent
    mean_idx = round_away(basis.mean / step).astype(np.int64)
    basis_idx = round_away(basis.basis / step).astype(np.int64)
    head = struct.pack("<HHb", basis.bands, basis.n_components, basis.step_exponent)
    return (
        head
        + mean_idx.astype("<i4").tobytes()
        + basis_idx.flatten(order="F").astype("<i2").tobytes()
    )


def parse_basis(data: bytes) -> PcaBasis:
    """Inverse of :func:`serialize_basis` (eigenvalues are not transmitted)."""
    if len(data) < 5:
        raise FormatError("basis section too short")
    bands, n_components, exp = struct.unpack_from("<HHb", data, 0)
    need = 5 + 4 * bands + 2 * bands * n_components
    if len(data) != need:
        raise FormatError(
            f"basis section holds {len(data)} bytes, expected {need}"
        )
    step = 2.0 ** exp
    mean_idx = np.frombuffer(data, dtype="<i4", count=bands, offset=5)
    basis_idx = np.frombuffer(
        data, dtype="<i2", count=bands * n_components, offset=5 + 4 * bands
    )
    mean = mean_idx.astype(np.float64) * step
    basis = basis_idx.astype(np.float64).reshape(bands, n_components, order="F") * step
    return PcaBasis(
        bands,
        n_components,
        mean,
        basis,
        np.zeros(n_components),
        step_exponent=exp,
        quantized=True,
    )
