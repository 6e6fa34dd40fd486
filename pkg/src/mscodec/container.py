"""Sectioned bitstream container shared by all coding schemes.

Layout (little-endian)::

    "MSC1" | u8 version | u8 scheme | u8 bit_depth | u8 flags
    u16 width | u16 height | u16 bands
    u16 params_len | params blob
    u16 section_count
    per section: u8 layer_id | u8 section_id | u16 reserved | u64 offset | u64 length
    payload bytes, packed in table order

Sections whose extent lies beyond the end of a (truncated) file parse as
unavailable instead of failing, which is what makes the preview layer of the
scalable scheme separately decodable from a truncated file.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .errors import FormatError

MAGIC = b"MSC1"
VERSION = 1

SCHEME_PLAIN = 1
SCHEME_PCA = 2
SCHEME_HPCLS = 3
SCHEME_HPCLS_RGB = 4
SCHEME_NAMES = {
    SCHEME_PLAIN: "plain",
    SCHEME_PCA: "pca",
    SCHEME_HPCLS: "hpcls",
    SCHEME_HPCLS_RGB: "hpcls-rgb",
}

LAYER_SINGLE = 0
LAYER_PREVIEW = 1
LAYER_ENHANCEMENT = 2

SEC_REF_BASIS = 1
SEC_REF_PLANES = 2
SEC_WEIGHTS = 3
SEC_RESIDUAL_BASIS = 4
SEC_RESIDUAL_PLANES = 5
SEC_RGB_WEIGHTS = 6
SEC_RGB_ERROR = 7
SEC_NORMALIZATION = 8
SEC_PLAIN_GOP = 9

_TABLE_ENTRY = struct.Struct("<BBHQQ")
_FIXED_HEAD = struct.Struct("<BBBBHHH")


@dataclass
class Section:
    layer_id: int
    section_id: int
    payload: bytes | None  # None when the file was truncated before it
    offset: int = 0
    length: int = 0

    @property
    def available(self) -> bool:
        return self.payload is not None


@dataclass
class CodedContainer:
    scheme_id: int
    width: int
    height: int
    bands: int
    bit_depth: int
    params_blob: bytes
    sections: list[Section] = field(default_factory=list)
    file_length: int | None = None

    def __post_init__(self):
        if self.scheme_id not in SCHEME_NAMES:
            raise FormatError(f"unsupported scheme id {self.scheme_id}")

    @property
    def scheme_name(self) -> str:
        return SCHEME_NAMES[self.scheme_id]

    def total_bits(self) -> int:
        """Rate of the container: 8x its serialized byte length."""
        if self.file_length is None:
            self.file_length = len(serialize_container(self))
        return 8 * self.file_length

    def find_sections(self, section_id=None, layer_id=None) -> list[Section]:
        out = []
        for sec in self.sections:
            if section_id is not None and sec.section_id != section_id:
                continue
            if layer_id is not None and sec.layer_id != layer_id:
                continue
            out.append(sec)
        return out

    def section_payload(self, section_id: int, layer_id=None, occurrence: int = 0) -> bytes:
        """Payload of the n-th matching section; raises if missing/unavailable."""
        matches = self.find_sections(section_id, layer_id)
        if occurrence >= len(matches):
            raise FormatError(
                f"container lacks section id={section_id} layer={layer_id} "
                f"occurrence={occurrence}"
            )
        sec = matches[occurrence]
        if not sec.available:
            raise FormatError(
                f"section id={section_id} layer={sec.layer_id} is unavailable "
                "(file truncated?)"
            )
        return sec.payload


def serialize_container(container: CodedContainer) -> bytes:
    for sec in container.sections:
        if sec.payload is None:
            raise FormatError("cannot serialize a container with missing sections")
    params = container.params_blob
    n = len(container.sections)
    head_len = 4 + _FIXED_HEAD.size + 2 + len(params) + 2 + n * _TABLE_ENTRY.size
    out = bytearray()
    out += MAGIC
    out += _FIXED_HEAD.pack(
        VERSION,
        container.scheme_id,
        container.bit_depth,
        0,
        container.width,
        container.height,
        container.bands,
    )
    out += struct.pack("<H", len(params))
    out += params
    out += struct.pack("<H", n)
    offset = head_len
    for sec in container.sections:
        sec.offset = offset
        sec.length = len(sec.payload)
        out += _TABLE_ENTRY.pack(sec.layer_id, sec.section_id, 0, offset, sec.length)
        offset += sec.length
    for sec in container.sections:
        out += sec.payload
    container.file_length = len(out)
    return bytes(out)


def parse_container(data: bytes) -> CodedContainer:
    if len(data) < 4 + _FIXED_HEAD.size + 4 or data[:4] != MAGIC:
        raise FormatError("not an MSC1 container")
    version, scheme, bit_depth, _flags, width, height, bands = _FIXED_HEAD.unpack_from(
        data, 4
    )
    if version != VERSION:
        raise FormatError(f"unsupported container version {version}")
    if scheme not in SCHEME_NAMES:
        raise FormatError(f"unsupported scheme id {scheme}")
    pos = 4 + _FIXED_HEAD.size
    (params_len,) = struct.unpack_from("<H", data, pos)
    pos += 2
    if pos + params_len + 2 > len(data):
        raise FormatError("container header truncated")
    params = data[pos : pos + params_len]
    pos += params_len
    (n,) = struct.unpack_from("<H", data, pos)
    pos += 2
    table_end = pos + n * _TABLE_ENTRY.size
    if table_end > len(data):
        raise FormatError("container section table truncated")
    sections = []
    for i in range(n):
        layer, sid, _resv, offset, length = _TABLE_ENTRY.unpack_from(
            data, pos + i * _TABLE_ENTRY.size
        )
        if offset < table_end:
            raise FormatError("section extent overlaps the header")
        payload = data[offset : offset + length] if offset + length <= len(data) else None
        sections.append(Section(layer, sid, payload, offset, length))
    spans = sorted((s.offset, s.offset + s.length) for s in sections)
    for (a0, a1), (b0, b1) in zip(spans, spans[1:]):
        if b0 < a1:
            raise FormatError("section extents overlap")
    container = CodedContainer(scheme, width, height, bands, bit_depth, params, sections)
    container.file_length = len(data)
    return container


def write_container(container: CodedContainer, path) -> int:
    data = serialize_container(container)
    with open(path, "wb") as fh:
        fh.write(data)
    return len(data)


def read_container(path) -> CodedContainer:
    with open(path, "rb") as fh:
        return parse_container(fh.read())
