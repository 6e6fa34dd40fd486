"""The four end-to-end coding schemes.

* plain      - bands coded like a video GOP (dyadic hierarchy, keys at both ends)
* pca        - spectral PCA, kept components intra-coded per plane
* hpcls      - PCA reference planes + per-block LS band prediction, residual
               cube compressed by the PCA path
* hpcls-rgb  - scalable variant: a separately decodable RGB preview layer
               (predicted from the reference planes) plus an enhancement layer
               lifting the preview to the full spectral reconstruction

Every encoder returns its container together with the decoder-identical
reconstruction, so closed-loop behaviour is directly testable.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import container as cn
from .blockls import (
    DEFAULT_WEIGHT_STEP,
    BlockGrid,
    WeightSet,
    closed_loop_residual,
    parse_weights,
    predict_plane,
    serialize_weights,
    stack_weight_sets,
)
from .cube import RgbImage, SpectralCube, cmf_for_bands, render_rgb
from .errors import FormatError
from .pca import (
    DEFAULT_BASIS_STEP,
    PcaBasis,
    fit_pca,
    fit_pca_matrix,
    forward_planes,
    inverse_planes,
    parse_basis,
    quantize_basis,
    serialize_basis,
    truncate,
)
from .spatial import (
    GopKind,
    PlaneCodingParams,
    code_plane_sequence,
    decode_intra,
    decode_plane_sequence,
    denormalize_plane,
    encode_intra,
    gop_schedule,
    normalize_plane,
    LEVEL_SHIFT,
    PLANE_MAX,
)

QP_MIN, QP_MAX = 5, 50


def _check_qp(qp: int, name: str):
    if not QP_MIN <= qp <= QP_MAX:
        raise ValueError(f"{name} {qp} outside [{QP_MIN}, {QP_MAX}]")


@dataclass(frozen=True)
class PlainParams:
    qp: int

    def __post_init__(self):
        _check_qp(self.qp, "qp")


@dataclass(frozen=True)
class PcaParams:
    n_c: int
    qp: int

    def __post_init__(self):
        _check_qp(self.qp, "qp")
        if self.n_c < 1:
            raise ValueError("n_c must be >= 1")


@dataclass(frozen=True)
class HpclsParams:
    n_ref: int
    q_ref: int
    n_c: int
    qp: int
    block_edge: int = 64
    weight_step: float = DEFAULT_WEIGHT_STEP
    basis_step: float = DEFAULT_BASIS_STEP

    def __post_init__(self):
        if self.n_ref not in (1, 2, 3):
            raise ValueError("n_ref must be 1, 2 or 3")
        _check_qp(self.q_ref, "q_ref")
        _check_qp(self.qp, "qp")
        if self.n_c < 1:
            raise ValueError("n_c must be >= 1")
        if self.block_edge < 1:
            raise ValueError("block edge must be >= 1")


@dataclass(frozen=True)
class HpclsRgbParams:
    n_ref: int
    q_ref: int
    n_c: int
    qp: int
    qp_rgb: int
    block_edge: int = 64
    weight_step: float = DEFAULT_WEIGHT_STEP
    basis_step: float = DEFAULT_BASIS_STEP

    def __post_init__(self):
        if self.n_ref not in (1, 2, 3):
            raise ValueError("n_ref must be 1, 2 or 3")
        _check_qp(self.q_ref, "q_ref")
        _check_qp(self.qp, "qp")
        _check_qp(self.qp_rgb, "qp_rgb")
        if self.n_c < 1:
            raise ValueError("n_c must be >= 1")
        if self.block_edge < 1:
            raise ValueError("block edge must be >= 1")

    def hpcls(self) -> HpclsParams:
        return HpclsParams(
            self.n_ref, self.q_ref, self.n_c, self.qp,
            self.block_edge, self.weight_step, self.basis_step,
        )


@dataclass
class EncodeResult:
    container: cn.CodedContainer
    reconstruction: SpectralCube
    preview: RgbImage | None = None

    @property
    def total_bits(self) -> int:
        return self.container.total_bits()


# ---------------------------------------------------------------- params blob

def _step_exp(step: float) -> int:
    from .pca import power_of_two_exponent

    return power_of_two_exponent(step)


def serialize_params(params) -> tuple[int, bytes]:
    if isinstance(params, PlainParams):
        return cn.SCHEME_PLAIN, struct.pack("<B", params.qp)
    if isinstance(params, PcaParams):
        return cn.SCHEME_PCA, struct.pack("<HB", params.n_c, params.qp)
    if isinstance(params, HpclsParams):
        return cn.SCHEME_HPCLS, struct.pack(
            "<BBHBHbb",
            params.n_ref, params.q_ref, params.n_c, params.qp,
            params.block_edge, _step_exp(params.weight_step),
            _step_exp(params.basis_step),
        )
    if isinstance(params, HpclsRgbParams):
        return cn.SCHEME_HPCLS_RGB, struct.pack(
            "<BBHBHbbB",
            params.n_ref, params.q_ref, params.n_c, params.qp,
            params.block_edge, _step_exp(params.weight_step),
            _step_exp(params.basis_step), params.qp_rgb,
        )
    raise TypeError(f"unknown params type {type(params)!r}")


def parse_params(scheme_id: int, blob: bytes):
    try:
        if scheme_id == cn.SCHEME_PLAIN:
            (qp,) = struct.unpack("<B", blob)
            return PlainParams(qp)
        if scheme_id == cn.SCHEME_PCA:
            n_c, qp = struct.unpack("<HB", blob)
            return PcaParams(n_c, qp)
        if scheme_id == cn.SCHEME_HPCLS:
            n_ref, q_ref, n_c, qp, edge, wexp, vexp = struct.unpack("<BBHBHbb", blob)
            return HpclsParams(n_ref, q_ref, n_c, qp, edge, 2.0 ** wexp, 2.0 ** vexp)
        if scheme_id == cn.SCHEME_HPCLS_RGB:
            n_ref, q_ref, n_c, qp, edge, wexp, vexp, qp_rgb = struct.unpack(
                "<BBHBHbbB", blob
            )
            return HpclsRgbParams(
                n_ref, q_ref, n_c, qp, qp_rgb, edge, 2.0 ** wexp, 2.0 ** vexp
            )
    except struct.error as exc:
        raise FormatError(f"malformed params blob: {exc}") from exc
    raise FormatError(f"unsupported scheme id {scheme_id}")


# ------------------------------------------------------------- section packing

def _pack_planes(payloads: list[bytes]) -> bytes:
    out = bytearray(struct.pack("<H", len(payloads)))
    for p in payloads:
        out += struct.pack("<I", len(p))
        out += p
    return bytes(out)


def _unpack_planes(data: bytes) -> list[bytes]:
    if len(data) < 2:
        raise FormatError("plane section too short")
    (count,) = struct.unpack_from("<H", data, 0)
    pos = 2
    payloads = []
    for _ in range(count):
        if pos + 4 > len(data):
            raise FormatError("plane section truncated")
        (length,) = struct.unpack_from("<I", data, pos)
        pos += 4
        if pos + length > len(data):
            raise FormatError("plane payload truncated")
        payloads.append(data[pos : pos + length])
        pos += length
    if pos != len(data):
        raise FormatError("plane section has trailing bytes")
    return payloads


def _pack_norms(norms: list[tuple[float, float]]) -> bytes:
    out = bytearray(struct.pack("<H", len(norms)))
    for offset, scale in norms:
        out += struct.pack("<ff", offset, scale)
    return bytes(out)


def _unpack_norms(data: bytes) -> list[tuple[float, float]]:
    if len(data) < 2:
        raise FormatError("normalization section too short")
    (count,) = struct.unpack_from("<H", data, 0)
    if len(data) != 2 + 8 * count:
        raise FormatError("normalization section length mismatch")
    return [
        tuple(struct.unpack_from("<ff", data, 2 + 8 * i)) for i in range(count)
    ]


def _to_samples(values: np.ndarray) -> np.ndarray:
    return np.clip(np.floor(values + 0.5), 0, PLANE_MAX).astype(np.uint16)


def _require_10bit(cube: SpectralCube):
    if cube.bit_depth != 10:
        raise ValueError(
            f"schemes code 10-bit cubes; requantize the {cube.bit_depth}-bit input first"
        )


def _encode_normalized_planes(planes: np.ndarray, qp: int):
    """Normalize each real plane to [0, 1023], intra-code, return the decoded
    real-valued planes alongside the norm/payload section bytes."""
    norms = []
    payloads = []
    recon = np.empty_like(planes)
    for i in range(planes.shape[0]):
        ints, offset, scale = normalize_plane(planes[i])
        coded = encode_intra(
            ints, PlaneCodingParams(qp, norm_offset=offset, norm_scale=scale)
        )
        norms.append((offset, scale))
        payloads.append(coded.payload)
        recon[i] = denormalize_plane(coded.reconstruction, offset, scale)
    return _pack_norms(norms), _pack_planes(payloads), recon


def _decode_normalized_planes(
    norm_data: bytes, plane_data: bytes, width: int, height: int, qp: int
) -> np.ndarray:
    norms = _unpack_norms(norm_data)
    payloads = _unpack_planes(plane_data)
    if len(norms) != len(payloads):
        raise FormatError("normalization entries do not match plane payloads")
    recon = np.empty((len(payloads), height, width), dtype=np.float64)
    for i, (payload, (offset, scale)) in enumerate(zip(payloads, norms)):
        if scale <= 0.0:
            raise FormatError("non-positive plane scale")
        ints = decode_intra(payload, width, height, PlaneCodingParams(qp))
        recon[i] = denormalize_plane(ints, offset, scale)
    return recon


def _recon_cube(cube_like: SpectralCube, values: np.ndarray) -> SpectralCube:
    return SpectralCube(
        cube_like.width, cube_like.height, cube_like.bands, 10, _to_samples(values)
    )


# -------------------------------------------------------------------- plain

def encode_plain(cube: SpectralCube, params: PlainParams) -> EncodeResult:
    _require_10bit(cube)
    schedule = gop_schedule(cube.bands, GopKind.GOP30)
    planes = cube.samples.astype(np.int64)
    coded = code_plane_sequence(planes, schedule, params.qp)
    scheme, blob = serialize_params(params)
    ctr = cn.CodedContainer(
        scheme, cube.width, cube.height, cube.bands, 10, blob,
        [cn.Section(cn.LAYER_SINGLE, cn.SEC_PLAIN_GOP,
                    _pack_planes([c.payload for c in coded]))],
    )
    recon = np.stack([c.reconstruction for c in coded])
    return EncodeResult(ctr, _recon_cube(cube, recon))


def decode_plain(ctr: cn.CodedContainer) -> SpectralCube:
    params = parse_params(ctr.scheme_id, ctr.params_blob)
    payloads = _unpack_planes(ctr.section_payload(cn.SEC_PLAIN_GOP))
    if len(payloads) != ctr.bands:
        raise FormatError("plain payload count does not match band count")
    schedule = gop_schedule(ctr.bands, GopKind.GOP30)
    recon = decode_plane_sequence(payloads, ctr.width, ctr.height, schedule, params.qp)
    return SpectralCube(ctr.width, ctr.height, ctr.bands, 10, _to_samples(recon))


# ---------------------------------------------------------------------- pca

def encode_pca(cube: SpectralCube, params: PcaParams) -> EncodeResult:
    _require_10bit(cube)
    if params.n_c > cube.bands:
        raise ValueError(f"n_c {params.n_c} exceeds band count {cube.bands}")
    basis_q, _ = quantize_basis(truncate(fit_pca(cube), params.n_c))
    coeffs = forward_planes(cube.samples.astype(np.float64), basis_q)
    norm_sec, plane_sec, coeff_rec = _encode_normalized_planes(coeffs, params.qp)
    scheme, blob = serialize_params(params)
    ctr = cn.CodedContainer(
        scheme, cube.width, cube.height, cube.bands, 10, blob,
        [
            cn.Section(cn.LAYER_SINGLE, cn.SEC_RESIDUAL_BASIS, serialize_basis(basis_q)),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_NORMALIZATION, norm_sec),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_RESIDUAL_PLANES, plane_sec),
        ],
    )
    recon = inverse_planes(coeff_rec, basis_q)
    return EncodeResult(ctr, _recon_cube(cube, recon))


def decode_pca(ctr: cn.CodedContainer) -> SpectralCube:
    params = parse_params(ctr.scheme_id, ctr.params_blob)
    basis = parse_basis(ctr.section_payload(cn.SEC_RESIDUAL_BASIS))
    coeff_rec = _decode_normalized_planes(
        ctr.section_payload(cn.SEC_NORMALIZATION),
        ctr.section_payload(cn.SEC_RESIDUAL_PLANES),
        ctr.width, ctr.height, params.qp,
    )
    if basis.n_components != coeff_rec.shape[0] or basis.bands != ctr.bands:
        raise FormatError("basis does not match the coded planes")
    recon = inverse_planes(coeff_rec, basis)
    return SpectralCube(ctr.width, ctr.height, ctr.bands, 10, _to_samples(recon))


# -------------------------------------------------------------------- hpcls

def _encode_reference_layer(cube: SpectralCube, n_ref: int, q_ref: int, basis_step: float):
    """Quantized reference-PCA basis + intra-coded reference planes."""
    basis_q, _ = quantize_basis(truncate(fit_pca(cube), n_ref), basis_step)
    ref_coeffs = forward_planes(cube.samples.astype(np.float64), basis_q)
    norm_sec, plane_sec, ref_recon = _encode_normalized_planes(ref_coeffs, q_ref)
    return basis_q, norm_sec, plane_sec, ref_recon


def _fit_band_predictors(
    cube: SpectralCube, regressors: np.ndarray, step: float, grid: BlockGrid
):
    weight_sets = []
    residual = np.empty(
        (cube.bands, cube.height, cube.width), dtype=np.float64
    )
    originals = cube.samples.astype(np.float64)
    for b in range(cube.bands):
        ws, res = closed_loop_residual(originals[b], regressors, step, grid)
        weight_sets.append(ws)
        residual[b] = res
    return stack_weight_sets(weight_sets), residual


def _encode_residual_pca(residual: np.ndarray, n_c: int, qp: int, basis_step: float):
    bands = residual.shape[0]
    if n_c > bands:
        raise ValueError(f"n_c {n_c} exceeds band count {bands}")
    flat = residual.reshape(bands, -1).T
    basis_q, _ = quantize_basis(truncate(fit_pca_matrix(flat), n_c), basis_step)
    coeffs = forward_planes(residual, basis_q)
    norm_sec, plane_sec, coeff_rec = _encode_normalized_planes(coeffs, qp)
    return basis_q, norm_sec, plane_sec, inverse_planes(coeff_rec, basis_q)


def _predict_bands(
    regressors: np.ndarray, weights: WeightSet, grid: BlockGrid, bands: int
) -> np.ndarray:
    return np.stack(
        [predict_plane(regressors, weights, grid, target=b) for b in range(bands)]
    )


def encode_hpcls(cube: SpectralCube, params: HpclsParams) -> EncodeResult:
    _require_10bit(cube)
    basis_q, ref_norm, ref_planes, ref_recon = _encode_reference_layer(
        cube, params.n_ref, params.q_ref, params.basis_step
    )
    grid = BlockGrid(cube.width, cube.height, params.block_edge)
    weights, residual = _fit_band_predictors(
        cube, ref_recon, params.weight_step, grid
    )
    res_basis, res_norm, res_planes, res_recon = _encode_residual_pca(
        residual, params.n_c, params.qp, params.basis_step
    )
    scheme, blob = serialize_params(params)
    ctr = cn.CodedContainer(
        scheme, cube.width, cube.height, cube.bands, 10, blob,
        [
            cn.Section(cn.LAYER_SINGLE, cn.SEC_REF_BASIS, serialize_basis(basis_q)),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_NORMALIZATION, ref_norm),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_REF_PLANES, ref_planes),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_WEIGHTS, serialize_weights(weights)),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_RESIDUAL_BASIS, serialize_basis(res_basis)),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_NORMALIZATION, res_norm),
            cn.Section(cn.LAYER_SINGLE, cn.SEC_RESIDUAL_PLANES, res_planes),
        ],
    )
    prediction = _predict_bands(ref_recon, weights, grid, cube.bands)
    return EncodeResult(ctr, _recon_cube(cube, prediction + res_recon))


def _decode_reference_planes(ctr: cn.CodedContainer, q_ref: int, layer=None) -> np.ndarray:
    parse_basis(ctr.section_payload(cn.SEC_REF_BASIS, layer))  # validates shape
    return _decode_normalized_planes(
        ctr.section_payload(cn.SEC_NORMALIZATION, layer, occurrence=0),
        ctr.section_payload(cn.SEC_REF_PLANES, layer),
        ctr.width, ctr.height, q_ref,
    )


def decode_hpcls(ctr: cn.CodedContainer) -> SpectralCube:
    params = parse_params(ctr.scheme_id, ctr.params_blob)
    ref_recon = _decode_reference_planes(ctr, params.q_ref)
    weights = parse_weights(ctr.section_payload(cn.SEC_WEIGHTS))
    res_basis = parse_basis(ctr.section_payload(cn.SEC_RESIDUAL_BASIS))
    coeff_rec = _decode_normalized_planes(
        ctr.section_payload(cn.SEC_NORMALIZATION, occurrence=1),
        ctr.section_payload(cn.SEC_RESIDUAL_PLANES),
        ctr.width, ctr.height, params.qp,
    )
    res_recon = inverse_planes(coeff_rec, res_basis)
    grid = BlockGrid(ctr.width, ctr.height, weights.block_edge)
    prediction = _predict_bands(ref_recon, weights, grid, ctr.bands)
    return SpectralCube(
        ctr.width, ctr.height, ctr.bands, 10, _to_samples(prediction + res_recon)
    )


# ---------------------------------------------------------------- hpcls-rgb

def _code_rgb_error(rgb: RgbImage, pred: np.ndarray, qp_rgb: int):
    """Offset-512 RGB prediction error, coded with the GOP-2 schedule."""
    shifted = np.clip(
        np.floor(rgb.channels.astype(np.float64) - pred + LEVEL_SHIFT + 0.5),
        0, PLANE_MAX,
    ).astype(np.int64)
    schedule = gop_schedule(3, GopKind.GOP2)
    coded = code_plane_sequence(shifted, schedule, qp_rgb)
    recon = np.stack([c.reconstruction for c in coded])
    preview = np.clip(np.floor(pred + recon - LEVEL_SHIFT + 0.5), 0, PLANE_MAX)
    return _pack_planes([c.payload for c in coded]), preview.astype(np.uint16)


def encode_hpcls_rgb(
    cube: SpectralCube, params: HpclsRgbParams, cmf=None
) -> EncodeResult:
    _require_10bit(cube)
    if cmf is None:
        cmf = cmf_for_bands(cube.bands)
    basis_q, ref_norm, ref_planes, ref_recon = _encode_reference_layer(
        cube, params.n_ref, params.q_ref, params.basis_step
    )
    grid = BlockGrid(cube.width, cube.height, params.block_edge)

    # preview layer: predict the rendered RGB from the reference planes
    rgb = render_rgb(cube, cmf)
    rgb_sets = []
    for ch in range(3):
        ws, _ = closed_loop_residual(
            rgb.channels[ch].astype(np.float64), ref_recon, params.weight_step, grid
        )
        rgb_sets.append(ws)
    rgb_weights = stack_weight_sets(rgb_sets)
    rgb_pred = _predict_bands(ref_recon, rgb_weights, grid, 3)
    rgb_err_sec, preview_channels = _code_rgb_error(rgb, rgb_pred, params.qp_rgb)
    preview = RgbImage(cube.width, cube.height, preview_channels)

    # enhancement layer: bands predicted from decoded RGB + reference planes
    regressors = np.concatenate(
        [preview.channels.astype(np.float64), ref_recon], axis=0
    )
    weights, residual = _fit_band_predictors(
        cube, regressors, params.weight_step, grid
    )
    res_basis, res_norm, res_planes, res_recon = _encode_residual_pca(
        residual, params.n_c, params.qp, params.basis_step
    )
    scheme, blob = serialize_params(params)
    ctr = cn.CodedContainer(
        scheme, cube.width, cube.height, cube.bands, 10, blob,
        [
            cn.Section(cn.LAYER_PREVIEW, cn.SEC_REF_BASIS, serialize_basis(basis_q)),
            cn.Section(cn.LAYER_PREVIEW, cn.SEC_NORMALIZATION, ref_norm),
            cn.Section(cn.LAYER_PREVIEW, cn.SEC_REF_PLANES, ref_planes),
            cn.Section(cn.LAYER_PREVIEW, cn.SEC_RGB_WEIGHTS, serialize_weights(rgb_weights)),
            cn.Section(cn.LAYER_PREVIEW, cn.SEC_RGB_ERROR, rgb_err_sec),
            cn.Section(cn.LAYER_ENHANCEMENT, cn.SEC_WEIGHTS, serialize_weights(weights)),
            cn.Section(cn.LAYER_ENHANCEMENT, cn.SEC_RESIDUAL_BASIS, serialize_basis(res_basis)),
            cn.Section(cn.LAYER_ENHANCEMENT, cn.SEC_NORMALIZATION, res_norm),
            cn.Section(cn.LAYER_ENHANCEMENT, cn.SEC_RESIDUAL_PLANES, res_planes),
        ],
    )
    prediction = _predict_bands(regressors, weights, grid, cube.bands)
    return EncodeResult(
        ctr, _recon_cube(cube, prediction + res_recon), preview
    )


def _decode_preview_parts(ctr: cn.CodedContainer):
    params = parse_params(ctr.scheme_id, ctr.params_blob)
    if not isinstance(params, HpclsRgbParams):
        raise FormatError("container scheme has no preview layer")
    ref_recon = _decode_reference_planes(ctr, params.q_ref, layer=cn.LAYER_PREVIEW)
    rgb_weights = parse_weights(
        ctr.section_payload(cn.SEC_RGB_WEIGHTS, cn.LAYER_PREVIEW)
    )
    grid = BlockGrid(ctr.width, ctr.height, rgb_weights.block_edge)
    rgb_pred = _predict_bands(ref_recon, rgb_weights, grid, 3)
    payloads = _unpack_planes(ctr.section_payload(cn.SEC_RGB_ERROR, cn.LAYER_PREVIEW))
    if len(payloads) != 3:
        raise FormatError("RGB error section must carry three planes")
    schedule = gop_schedule(3, GopKind.GOP2)
    shifted = decode_plane_sequence(
        payloads, ctr.width, ctr.height, schedule, params.qp_rgb
    )
    preview = np.clip(np.floor(rgb_pred + shifted - LEVEL_SHIFT + 0.5), 0, PLANE_MAX)
    return params, ref_recon, RgbImage(
        ctr.width, ctr.height, preview.astype(np.uint16)
    )


def decode_hpcls_rgb_preview(ctr: cn.CodedContainer) -> RgbImage:
    """Decode the RGB preview using only PREVIEW-layer sections."""
    return _decode_preview_parts(ctr)[2]


def decode_hpcls_rgb(ctr: cn.CodedContainer) -> SpectralCube:
    params, ref_recon, preview = _decode_preview_parts(ctr)
    weights = parse_weights(
        ctr.section_payload(cn.SEC_WEIGHTS, cn.LAYER_ENHANCEMENT)
    )
    res_basis = parse_basis(
        ctr.section_payload(cn.SEC_RESIDUAL_BASIS, cn.LAYER_ENHANCEMENT)
    )
    coeff_rec = _decode_normalized_planes(
        ctr.section_payload(cn.SEC_NORMALIZATION, cn.LAYER_ENHANCEMENT),
        ctr.section_payload(cn.SEC_RESIDUAL_PLANES, cn.LAYER_ENHANCEMENT),
        ctr.width, ctr.height, params.qp,
    )
    res_recon = inverse_planes(coeff_rec, res_basis)
    regressors = np.concatenate(
        [preview.channels.astype(np.float64), ref_recon], axis=0
    )
    grid = BlockGrid(ctr.width, ctr.height, weights.block_edge)
    prediction = _predict_bands(regressors, weights, grid, ctr.bands)
    return SpectralCube(
        ctr.width, ctr.height, ctr.bands, 10, _to_samples(prediction + res_recon)
    )


# ----------------------------------------------------------------- dispatch

def encode(cube: SpectralCube, params) -> EncodeResult:
    if isinstance(params, PlainParams):
        return encode_plain(cube, params)
    if isinstance(params, PcaParams):
        return encode_pca(cube, params)
    if isinstance(params, HpclsRgbParams):
        return encode_hpcls_rgb(cube, params)
    if isinstance(params, HpclsParams):
        return encode_hpcls(cube, params)
    raise TypeError(f"unknown params type {type(params)!r}")


def decode(ctr: cn.CodedContainer) -> SpectralCube:
    if ctr.scheme_id == cn.SCHEME_PLAIN:
        return decode_plain(ctr)
    if ctr.scheme_id == cn.SCHEME_PCA:
        return decode_pca(ctr)
    if ctr.scheme_id == cn.SCHEME_HPCLS:
        return decode_hpcls(ctr)
    if ctr.scheme_id == cn.SCHEME_HPCLS_RGB:
        return decode_hpcls_rgb(ctr)
    raise FormatError(f"unsupported scheme id {ctr.scheme_id}")
