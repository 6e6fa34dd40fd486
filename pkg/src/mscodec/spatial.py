"""Self-contained 2D plane codec and GOP scheduling.

Intra coding: 8x8 orthonormal DCT-II, uniform quantization with step
``2**((qp - 4) / 6)`` (one octave per 6 QP), zig-zag scan, then adaptive
binary range coding of last-position / significance / magnitude / sign.
Inter coding bi-predicts from two reconstructed planes and codes the
offset-512 residual with the same machinery.  Both paths are closed-loop:
the stored reconstruction is bit-exactly what the decoder produces.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.fft import dctn, idctn

from .errors import DecodeError
from .pca import round_away
from .rangecoder import RangeDecoder, RangeEncoder, new_contexts

BLOCK = 8
LEVEL_SHIFT = 512
PLANE_MAX = 1023

KEY_QP_OFFSET = -3

# context layout for the block coder
_CTX_CBF = 0
_CTX_LAST = 1          # 6 contexts, one per position bit
_CTX_SIG = 7           # 16 contexts, bucketed by zig-zag position
_CTX_GT1 = 23          # 2 contexts: DC / AC
_NUM_CTX = 25


def qp_to_step(qp: int) -> float:
    """Quantizer step for a QP, one octave per 6 steps, anchored at qp=4."""
    if not 0 <= qp <= 63:
        raise ValueError(f"qp {qp} outside [0, 63]")
    return 2.0 ** ((qp - 4) / 6.0)


@dataclass(frozen=True)
class PlaneCodingParams:
    """QP plus the affine real-to-sample normalization of the coded plane."""

    qp: int
    block_size: int = BLOCK
    norm_offset: float = 0.0
    norm_scale: float = 1.0

    def __post_init__(self):
        if not 0 <= self.qp <= 63:
            raise ValueError(f"qp {self.qp} outside [0, 63]")
        if self.norm_scale <= 0.0:
            raise ValueError("normalization scale must be positive")


@dataclass
class CodedPlane:
    payload: bytes
    params: PlaneCodingParams
    reconstruction: np.ndarray  # int64 plane, decoder-identical

    @property
    def bits(self) -> int:
        return 8 * len(self.payload)


def _zigzag_order(n: int = BLOCK) -> np.ndarray:
    order = []
    for s in range(2 * n - 1):
        cells = [(i, s - i) for i in range(max(0, s - n + 1), min(s, n - 1) + 1)]
        if s % 2 == 0:
            cells.reverse()
        order.extend(cells)
    return np.array([i * n + j for i, j in order], dtype=np.int64)

_ZIGZAG = _zigzag_order()


def _pad_to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    ph = (-h) % BLOCK
    pw = (-w) % BLOCK
    if ph or pw:
        plane = np.pad(plane, ((0, ph), (0, pw)), mode="edge")
    return plane


def _blockize(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return plane.reshape(h // BLOCK, BLOCK, w // BLOCK, BLOCK).transpose(0, 2, 1, 3)


def _unblockize(blocks: np.ndarray) -> np.ndarray:
    nby, nbx = blocks.shape[:2]
    return blocks.transpose(0, 2, 1, 3).reshape(nby * BLOCK, nbx * BLOCK)


def _encode_block(enc: RangeEncoder, probs, zz: np.ndarray):
    nz = np.nonzero(zz)[0]
    if nz.size == 0:
        enc.encode_bit(probs, _CTX_CBF, 0)
        return
    enc.encode_bit(probs, _CTX_CBF, 1)
    last = int(nz[-1])
    for k in range(6):
        enc.encode_bit(probs, _CTX_LAST + k, (last >> (5 - k)) & 1)
    for pos in range(last + 1):
        level = int(zz[pos])
        if pos < last:
            enc.encode_bit(probs, _CTX_SIG + min(pos, 15), 1 if level else 0)
            if not level:
                continue
        mag = abs(level)
        gt1_ctx = _CTX_GT1 + (0 if pos == 0 else 1)
        if mag > 1:
            enc.encode_bit(probs, gt1_ctx, 1)
            _encode_eg0(enc, mag - 2)
        else:
            enc.encode_bit(probs, gt1_ctx, 0)
        enc.encode_bypass(1 if level < 0 else 0)


def _decode_block(dec: RangeDecoder, probs) -> np.ndarray:
    zz = np.zeros(BLOCK * BLOCK, dtype=np.int64)
    if not dec.decode_bit(probs, _CTX_CBF):
        return zz
    last = 0
    for k in range(6):
        last = (last << 1) | dec.decode_bit(probs, _CTX_LAST + k)
    for pos in range(last + 1):
        if pos < last:
            if not dec.decode_bit(probs, _CTX_SIG + min(pos, 15)):
                continue
        mag = 1
        if dec.decode_bit(probs, _CTX_GT1 + (0 if pos == 0 else 1)):
            mag = 2 + _decode_eg0(dec)
        zz[pos] = -mag if dec.decode_bypass() else mag
    return zz


def _encode_eg0(enc: RangeEncoder, value: int):
    b = value + 1
    k = b.bit_length() - 1
    for _ in range(k):
        enc.encode_bypass(0)
    enc.encode_bypass(1)
    enc.encode_bypass_bits(b & ((1 << k) - 1), k)


def _decode_eg0(dec: RangeDecoder) -> int:
    k = 0
    while dec.decode_bypass() == 0:
        k += 1
        if k > 40:
            raise DecodeError("exp-Golomb prefix overrun")
    return ((1 << k) | dec.decode_bypass_bits(k)) - 1


def _transform_code(plane: np.ndarray, step: float) -> tuple[bytes, np.ndarray]:
    """DCT, quantize and entropy-code a [0, 1023] integer plane."""
    h, w = plane.shape
    padded = _pad_to_blocks(plane.astype(np.float64) - LEVEL_SHIFT)
    blocks = _blockize(padded)
    coeffs = dctn(blocks, axes=(-2, -1), norm="ortho")
    quant = round_away(coeffs / step).astype(np.int64)

    enc = RangeEncoder()
    probs = new_contexts(_NUM_CTX)
    flat = quant.reshape(-1, BLOCK * BLOCK)
    for block in flat:
        _encode_block(enc, probs, block[_ZIGZAG])
    payload = enc.finish()

    rec = idctn(quant.astype(np.float64) * step, axes=(-2, -1), norm="ortho")
    rec = _unblockize(rec)[:h, :w] + LEVEL_SHIFT
    rec = np.clip(np.floor(rec + 0.5), 0, PLANE_MAX).astype(np.int64)
    return payload, rec


def _transform_decode(payload: bytes, width: int, height: int, step: float) -> np.ndarray:
    nby = (height + BLOCK - 1) // BLOCK
    nbx = (width + BLOCK - 1) // BLOCK
    dec = RangeDecoder(payload)
    probs = new_contexts(_NUM_CTX)
    quant = np.zeros((nby * nbx, BLOCK * BLOCK), dtype=np.int64)
    inv = np.empty_like(_ZIGZAG)
    inv[_ZIGZAG] = np.arange(BLOCK * BLOCK)
    for b in range(nby * nbx):
        quant[b] = _decode_block(dec, probs)[inv]
    blocks = quant.reshape(nby, nbx, BLOCK, BLOCK).astype(np.float64) * step
    rec = idctn(blocks, axes=(-2, -1), norm="ortho")
    rec = _unblockize(rec)[:height, :width] + LEVEL_SHIFT
    return np.clip(np.floor(rec + 0.5), 0, PLANE_MAX).astype(np.int64)


def _check_plane(plane: np.ndarray) -> np.ndarray:
    plane = np.asarray(plane)
    if plane.ndim != 2:
        raise ValueError("plane must be 2D")
    if plane.size and (int(plane.min()) < 0 or int(plane.max()) > PLANE_MAX):
        raise ValueError("plane samples outside [0, 1023]")
    return plane.astype(np.int64)


def encode_intra(plane: np.ndarray, params: PlaneCodingParams) -> CodedPlane:
    """Intra-code a 10-bit plane; the reconstruction is decoder-identical."""
    plane = _check_plane(plane)
    step = qp_to_step(params.qp)
    payload, rec = _transform_code(plane, step)
    return CodedPlane(payload, params, rec)


def decode_intra(payload: bytes, width: int, height: int, params: PlaneCodingParams) -> np.ndarray:
    """Decode an intra payload back to its integer plane."""
    return _transform_decode(payload, width, height, qp_to_step(params.qp))


def bi_prediction(ref_a: np.ndarray, ref_b: np.ndarray) -> np.ndarray:
    return (ref_a.astype(np.int64) + ref_b.astype(np.int64) + 1) >> 1


def encode_inter_bi(
    plane: np.ndarray,
    ref_a: np.ndarray,
    ref_b: np.ndarray,
    params: PlaneCodingParams,
) -> CodedPlane:
    """Bi-predict from two reconstructions and intra-code the shifted residual."""
    plane = _check_plane(plane)
    if plane.shape != ref_a.shape or plane.shape != ref_b.shape:
        raise ValueError("reference dimensions do not match the plane")
    pred = bi_prediction(ref_a, ref_b)
    shifted = np.clip(plane - pred + LEVEL_SHIFT, 0, PLANE_MAX)
    payload, shifted_rec = _transform_code(shifted, qp_to_step(params.qp))
    rec = np.clip(pred + shifted_rec - LEVEL_SHIFT, 0, PLANE_MAX)
    return CodedPlane(payload, params, rec)


def decode_inter_bi(
    payload: bytes,
    ref_a: np.ndarray,
    ref_b: np.ndarray,
    params: PlaneCodingParams,
) -> np.ndarray:
    pred = bi_prediction(ref_a, ref_b)
    h, w = pred.shape
    shifted = _transform_decode(payload, w, h, qp_to_step(params.qp))
    return np.clip(pred + shifted - LEVEL_SHIFT, 0, PLANE_MAX)


class GopKind(Enum):
    GOP30 = "gop30"  # dyadic hierarchy, keys at both ends
    GOP2 = "gop2"    # keys at even indices, single B between


@dataclass(frozen=True)
class GopEntry:
    plane_index: int
    mode: str  # "KEY" or "BI"
    ref_a: int | None
    ref_b: int | None
    qp_offset: int


@dataclass
class GopSchedule:
    entries: list[GopEntry]

    def validate(self):
        indices = [e.plane_index for e in self.entries]
        if sorted(indices) != list(range(len(indices))):
            raise ValueError("schedule is not a permutation of plane indices")
        seen = set()
        for e in self.entries:
            if e.mode == "KEY":
                if e.ref_a is not None or e.ref_b is not None:
                    raise ValueError("key entries take no references")
                if e.qp_offset != KEY_QP_OFFSET:
                    raise ValueError("key entries must use the key QP offset")
            elif e.mode == "BI":
                if e.ref_a not in seen or e.ref_b not in seen:
                    raise ValueError("references must be coded earlier")
                if e.qp_offset != 0:
                    raise ValueError("bi entries use no QP offset")
            else:
                raise ValueError(f"unknown mode {e.mode}")
            seen.add(e.plane_index)


def _dyadic_midpoint(a: int, b: int, plane_count: int) -> int:
    lo = (a + b) // 2
    if (a + b) % 2 == 0:
        return lo
    # true midpoint falls on x.5: round away from the GOP center, toward the
    # nearer key picture (keeps the hierarchy mirror-symmetric)
    if a + b < plane_count - 1:
        return lo
    if a + b > plane_count - 1:
        return lo + 1
    return lo


def gop_schedule(plane_count: int, kind: GopKind = GopKind.GOP30) -> GopSchedule:
    """Coding order for ``plane_count`` planes (keys first, then hierarchy levels)."""
    if plane_count < 1:
        raise ValueError("plane count must be >= 1")
    entries: list[GopEntry] = []
    if kind is GopKind.GOP2:
        keys = [i for i in range(plane_count) if i % 2 == 0 or i == plane_count - 1]
        for i in keys:
            entries.append(GopEntry(i, "KEY", None, None, KEY_QP_OFFSET))
        for i in range(1, plane_count - 1, 2):
            entries.append(GopEntry(i, "BI", i - 1, i + 1, 0))
        schedule = GopSchedule(entries)
        schedule.validate()
        return schedule

    entries.append(GopEntry(0, "KEY", None, None, KEY_QP_OFFSET))
    if plane_count == 1:
        return GopSchedule(entries)
    entries.append(GopEntry(plane_count - 1, "KEY", None, None, KEY_QP_OFFSET))
    queue: list[tuple[int, int]] = [(0, plane_count - 1)]
    while queue:
        a, b = queue.pop(0)
        if b - a < 2:
            continue
        m = _dyadic_midpoint(a, b, plane_count)
        entries.append(GopEntry(m, "BI", a, b, 0))
        queue.append((a, m))
        queue.append((m, b))
    schedule = GopSchedule(entries)
    schedule.validate()
    return schedule


def code_plane_sequence(
    planes: np.ndarray, schedule: GopSchedule, qp: int
) -> list[CodedPlane]:
    """Encode a (P, H, W) stack following ``schedule``; list indexed by plane."""
    coded: list[CodedPlane | None] = [None] * planes.shape[0]
    for entry in schedule.entries:
        eff_qp = min(max(qp + entry.qp_offset, 0), 63)
        params = PlaneCodingParams(eff_qp)
        plane = planes[entry.plane_index]
        if entry.mode == "KEY":
            coded[entry.plane_index] = encode_intra(plane, params)
        else:
            coded[entry.plane_index] = encode_inter_bi(
                plane,
                coded[entry.ref_a].reconstruction,
                coded[entry.ref_b].reconstruction,
                params,
            )
    return coded


def decode_plane_sequence(
    payloads: list[bytes], width: int, height: int, schedule: GopSchedule, qp: int
) -> np.ndarray:
    """Decode per-plane payloads following ``schedule`` -> (P, H, W) stack."""
    recon = np.zeros((len(payloads), height, width), dtype=np.int64)
    done = [False] * len(payloads)
    for entry in schedule.entries:
        eff_qp = min(max(qp + entry.qp_offset, 0), 63)
        params = PlaneCodingParams(eff_qp)
        if entry.mode == "KEY":
            recon[entry.plane_index] = decode_intra(
                payloads[entry.plane_index], width, height, params
            )
        else:
            if not (done[entry.ref_a] and done[entry.ref_b]):
                raise DecodeError("schedule references an undecoded plane")
            recon[entry.plane_index] = decode_inter_bi(
                payloads[entry.plane_index],
                recon[entry.ref_a],
                recon[entry.ref_b],
                params,
            )
        done[entry.plane_index] = True
    return recon


def normalize_plane(values: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Affine-map a real plane into [0, 1023] integers.

    The (offset, scale) pair is rounded through float32 before use so the
    transmitted 32-bit values reproduce the encoder mapping exactly.
    """
    lo = float(values.min())
    hi = float(values.max())
    offset = float(np.float32(lo))
    scale = float(np.float32(1023.0 / (hi - lo))) if hi > lo else 1.0
    ints = np.clip(np.floor((values - offset) * scale + 0.5), 0, PLANE_MAX)
    return ints.astype(np.int64), offset, scale


def denormalize_plane(ints: np.ndarray, offset: float, scale: float) -> np.ndarray:
    return ints.astype(np.float64) / scale + offset
