"""Adapter contract for an external plane-sequence encoder (e.g. VTM).

The adapter hands the encoder a raw 10-bit monochrome sequence plus a one-line
JSON sidecar, invokes ``executable template workdir threads``, scrapes per-
picture bit counts from stdout lines of the form ``POC <n> ... <bits> bits``
and reads the reconstruction back from ``<workdir>/recon.raw``.  Everything in
the toolkit works without it; it exists so users with a reference encoder can
reproduce externally-coded rate points.
"""

from __future__ import annotations

import json
import os
import re
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CapabilityError, FormatError

INPUT_RAW = "input.raw"
INPUT_SIDECAR = "input.json"
RECON_RAW = "recon.raw"

_POC_LINE = re.compile(r"^POC\s+(\d+)\b.*?(\d+)\s+bits\b")


@dataclass(frozen=True)
class AdapterConfig:
    executable: str
    template: str
    threads: int = 1
    timeout_seconds: float = 600.0


def load_adapter_config(path) -> AdapterConfig:
    """Parse a key=value adapter config file."""
    fields: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FormatError(f"{path}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip()
    try:
        return AdapterConfig(
            executable=fields["executable"],
            template=fields["template"],
            threads=int(fields.get("threads", "1")),
            timeout_seconds=float(fields.get("timeout_seconds", "600")),
        )
    except KeyError as missing:
        raise FormatError(f"{path}: missing adapter key {missing}") from None


def write_plane_sequence(planes: np.ndarray, directory):
    """Dump a (P, H, W) 10-bit stack as input.raw + sidecar in ``directory``."""
    planes = np.asarray(planes)
    count, height, width = planes.shape
    directory = Path(directory)
    (directory / INPUT_RAW).write_bytes(planes.astype("<u2").tobytes())
    sidecar = {"width": width, "height": height, "count": count}
    (directory / INPUT_SIDECAR).write_text(json.dumps(sidecar) + "\n")


def read_plane_sequence(path, width: int, height: int, count: int) -> np.ndarray:
    data = Path(path).read_bytes()
    expected = width * height * count * 2
    if len(data) != expected:
        raise FormatError(
            f"{path}: sequence holds {len(data)} bytes, expected {expected}"
        )
    return (
        np.frombuffer(data, dtype="<u2").reshape(count, height, width).astype(np.int64)
    )


def external_encoder_run(
    planes: np.ndarray, config: AdapterConfig | None, workdir
) -> tuple[list[int], np.ndarray]:
    """Run the configured external encoder on a plane stack.

    Returns per-plane bit counts and the reconstructed stack.  Raises
    :class:`CapabilityError` when no adapter is configured or the executable
    is missing, so callers can fall back to the internal codec.
    """
    if config is None:
        raise CapabilityError("no external encoder adapter configured")
    planes = np.asarray(planes)
    if planes.ndim != 3:
        raise ValueError("expected a (planes, height, width) stack")
    count, height, width = planes.shape
    if width % 2 or height % 2:
        raise ValueError("external encoder requires even plane dimensions")
    if not os.path.isfile(config.executable):
        raise CapabilityError(f"external encoder {config.executable!r} not found")

    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    write_plane_sequence(planes, workdir)
    argv = [config.executable, config.template, str(workdir), str(config.threads)]
    try:
        proc = subprocess.run(
            argv,
            capture_output=True,
            text=True,
            timeout=config.timeout_seconds,
        )
    except OSError as exc:
        raise CapabilityError(f"external encoder failed to start: {exc}") from exc
    if proc.returncode != 0:
        raise FormatError(
            f"external encoder exited {proc.returncode}: {proc.stderr.strip()[:400]}"
        )

    bits_by_poc: dict[int, int] = {}
    for line in proc.stdout.splitlines():
        match = _POC_LINE.match(line.strip())
        if match:
            bits_by_poc[int(match.group(1))] = int(match.group(2))
    if sorted(bits_by_poc) != list(range(count)):
        raise FormatError(
            f"external encoder reported bits for POCs {sorted(bits_by_poc)}, "
            f"expected 0..{count - 1}"
        )
    recon = read_plane_sequence(workdir / RECON_RAW, width, height, count)
    return [bits_by_poc[i] for i in range(count)], recon
