"""Block-wise least-squares inter-band prediction.

Each spatially non-overlapping square block gets an affine predictor (R
regressor weights + intercept) fitted by damped normal equations against the
decoded reference planes.  Weights are uniformly quantized (intercepts with a
64x coarser step to cover sample-domain offsets) and residuals are always
computed with the quantized weights, keeping encoder and decoder in lockstep.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError
from .pca import power_of_two_exponent, round_away

#: Default weight quantizer step 2**-12.
DEFAULT_WEIGHT_STEP = 2.0 ** -12

#: Intercept step is the weight step scaled by 2**6.
INTERCEPT_STEP_SHIFT = 6

_I16_MIN = -(1 << 15)
_I16_MAX = (1 << 15) - 1

_DAMPING = 1e-8


@dataclass(frozen=True)
class BlockGrid:
    """Non-overlapping square tiling of a plane; edge blocks may be smaller."""

    width: int
    height: int
    block_edge: int

    def __post_init__(self):
        if self.block_edge < 1:
            raise ValueError("block edge must be >= 1")
        if self.width < 1 or self.height < 1:
            raise ValueError("plane dimensions must be >= 1")

    @property
    def blocks_x(self) -> int:
        return (self.width + self.block_edge - 1) // self.block_edge

    @property
    def blocks_y(self) -> int:
        return (self.height + self.block_edge - 1) // self.block_edge

    def extents(self):
        """Yield (by, bx, y0, y1, x0, x1) in block row-major order."""
        for by in range(self.blocks_y):
            y0 = by * self.block_edge
            y1 = min(y0 + self.block_edge, self.height)
            for bx in range(self.blocks_x):
                x0 = bx * self.block_edge
                x1 = min(x0 + self.block_edge, self.width)
                yield by, bx, y0, y1, x0, x1


@dataclass
class WeightSet:
    """Quantized per-block, per-target predictor weights."""

    block_edge: int
    regressor_count: int
    weight_step_exponent: int
    intercept_step_exponent: int
    indices: np.ndarray  # (targets, blocks_y, blocks_x, R+1) int64
    saturated: int = 0

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if self.indices.ndim != 4 or self.indices.shape[3] != self.regressor_count + 1:
            raise ValueError("weight indices must be (targets, by, bx, R+1)")
        if self.indices.size and (
            int(self.indices.min()) < _I16_MIN or int(self.indices.max()) > _I16_MAX
        ):
            raise ValueError("weight index overflows 16-bit width")

    @property
    def targets(self) -> int:
        return self.indices.shape[0]

    def dequantize(self) -> np.ndarray:
        """Exact index * step weights, intercept column on its coarser step."""
        values = self.indices.astype(np.float64) * (2.0 ** self.weight_step_exponent)
        values[..., -1] = self.indices[..., -1] * (2.0 ** self.intercept_step_exponent)
        return values


def _design_matrix(regressor_blocks: np.ndarray) -> np.ndarray:
    r, n = regressor_blocks.shape
    return np.vstack([regressor_blocks, np.ones((1, n))])


def fit_ls(target_block: np.ndarray, regressor_blocks: np.ndarray) -> np.ndarray:
    """Affine LS weights (R regressors + intercept) for one block.

    Normal equations with Tikhonov damping 1e-8 * trace / (R+1), applied in
    column-equilibrated coordinates so the damping stays side-effect-free:
    regressor energies dwarf the intercept column, and damping the raw normal
    matrix would visibly bias the intercept.
    """
    y = np.asarray(target_block, dtype=np.float64).ravel()
    regs = np.asarray(regressor_blocks, dtype=np.float64).reshape(
        len(regressor_blocks), -1
    )
    r = regs.shape[0]
    if y.size < r + 1:
        raise ValueError(f"block has {y.size} pixels, need >= {r + 1}")
    if regs.shape[1] != y.size:
        raise ValueError("regressor blocks must match the target block size")
    x = _design_matrix(regs)
    norms = np.sqrt(np.sum(x * x, axis=1))
    norms[norms == 0.0] = 1.0
    xn = x / norms[:, None]
    a = xn @ xn.T
    lam = _DAMPING * np.trace(a) / (r + 1)
    w = np.linalg.solve(a + lam * np.eye(r + 1), xn @ y)
    return w / norms


def quantize_weights(weights: np.ndarray, step: float = DEFAULT_WEIGHT_STEP):
    """Round weights to quantizer indices (ties away from zero).

    The intercept (last entry) uses ``step * 2**6``.  Overflowing indices are
    clamped to the 16-bit extremes; the clamp count is returned so callers can
    surface a saturation warning.
    """
    weights = np.asarray(weights, dtype=np.float64)
    exp = power_of_two_exponent(step)
    steps = np.full(weights.shape, step)
    steps[..., -1] = step * (1 << INTERCEPT_STEP_SHIFT)
    raw = round_away(weights / steps)
    clipped = np.clip(raw, _I16_MIN, _I16_MAX)
    saturated = int(np.sum(raw != clipped))
    indices = clipped.astype(np.int64)
    return indices, indices * steps, saturated


def predict_plane(
    regressors: np.ndarray,
    weights: WeightSet,
    grid: BlockGrid,
    target: int = 0,
) -> np.ndarray:
    """Per-block affine prediction of one target plane (real-valued)."""
    regressors = np.asarray(regressors, dtype=np.float64)
    if regressors.ndim != 3 or regressors.shape[0] != weights.regressor_count:
        raise ValueError("regressor stack must be (R, height, width)")
    if regressors.shape[1:] != (grid.height, grid.width):
        raise ValueError("regressor planes do not match the grid")
    if weights.indices.shape[1:3] != (grid.blocks_y, grid.blocks_x):
        raise ValueError("weight grid does not match the block grid")
    dequant = weights.dequantize()[target]
    pred = np.empty((grid.height, grid.width), dtype=np.float64)
    for by, bx, y0, y1, x0, x1 in grid.extents():
        w = dequant[by, bx]
        block = np.tensordot(w[:-1], regressors[:, y0:y1, x0:x1], axes=([0], [0]))
        pred[y0:y1, x0:x1] = block + w[-1]
    return pred


def closed_loop_residual(
    original: np.ndarray,
    regressors: np.ndarray,
    step: float,
    grid: BlockGrid,
) -> tuple[WeightSet, np.ndarray]:
    """Fit, quantize, then subtract: residual reflects the quantized weights."""
    original = np.asarray(original, dtype=np.float64)
    regressors = np.asarray(regressors, dtype=np.float64)
    if original.shape != (grid.height, grid.width):
        raise ValueError("original plane does not match the grid")
    r = regressors.shape[0]
    exp = power_of_two_exponent(step)
    indices = np.zeros((1, grid.blocks_y, grid.blocks_x, r + 1), dtype=np.int64)
    saturated = 0
    for by, bx, y0, y1, x0, x1 in grid.extents():
        w = fit_ls(original[y0:y1, x0:x1], regressors[:, y0:y1, x0:x1])
        idx, _, sat = quantize_weights(w, step)
        indices[0, by, bx] = idx
        saturated += sat
    weights = WeightSet(
        grid.block_edge, r, exp, exp + INTERCEPT_STEP_SHIFT, indices, saturated
    )
    residual = original - predict_plane(regressors, weights, grid)
    return weights, residual


def stack_weight_sets(sets: list[WeightSet]) -> WeightSet:
    """Combine single-target weight sets into one multi-target set."""
    first = sets[0]
    for ws in sets[1:]:
        if (
            ws.block_edge != first.block_edge
            or ws.regressor_count != first.regressor_count
            or ws.weight_step_exponent != first.weight_step_exponent
        ):
            raise ValueError("weight sets disagree on layout")
    return WeightSet(
        first.block_edge,
        first.regressor_count,
        first.weight_step_exponent,
        first.intercept_step_exponent,
        np.concatenate([ws.indices for ws in sets], axis=0),
        sum(ws.saturated for ws in sets),
    )


def serialize_weights(weights: WeightSet) -> bytes:
    """Weight section bytes: fixed header then i16 indices, target-major,
    block row-major, regressors then intercept."""
    head = struct.pack(
        "<HHHHBbb",
        weights.block_edge,
        weights.indices.shape[2],
        weights.indices.shape[1],
        weights.targets,
        weights.regressor_count,
        weights.weight_step_exponent,
        weights.intercept_step_exponent,
    )
    return head + weights.indices.astype("<i2").tobytes()


def parse_weights(data: bytes) -> WeightSet:
    if len(data) < 11:
        raise FormatError("weight section too short")
    edge, bx, by, targets, r, wexp, iexp = struct.unpack_from("<HHHHBbb", data, 0)
    need = 11 + 2 * targets * by * bx * (r + 1)
    if len(data) != need:
        raise FormatError(f"weight section holds {len(data)} bytes, expected {need}")
    indices = (
        np.frombuffer(data, dtype="<i2", offset=11)
        .astype(np.int64)
        .reshape(targets, by, bx, r + 1)
    )
    return WeightSet(edge, r, wexp, iexp, indices)
