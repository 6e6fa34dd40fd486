"""Rate-distortion harness: parameter sweeps, averaging, convex hulls, CSV.

A sweep encodes every (image, configuration) pair, measures container bits
and reconstruction PSNR, averages per configuration across images and
extracts the upper-left concave envelope (the convex hull in RD parlance:
no retained point is dominated or strictly below a chord of other points).
"""

from __future__ import annotations

import dataclasses
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import schemes
from .container import parse_container, serialize_container
from .cube import load_cube, psnr
from .errors import CapabilityError, FormatError, IncompleteGridError
from .external import external_encoder_run, load_adapter_config

log = logging.getLogger("mscodec.rd")

SLOPE_TOL = 1e-12

_PARAM_TYPES = {
    "plain": schemes.PlainParams,
    "pca": schemes.PcaParams,
    "hpcls": schemes.HpclsParams,
    "hpcls-rgb": schemes.HpclsRgbParams,
}

# per-scheme sweep grid bounds (the encoder itself allows the full ranges)
_GRID_NC_MAX = {"pca": 10, "hpcls": 6, "hpcls-rgb": 6}


@dataclass(frozen=True)
class RdPoint:
    bits: float
    psnr: float
    config: str   # canonical parameter provenance
    image_id: str

    def __post_init__(self):
        if self.bits <= 0:
            raise ValueError("rate must be positive")
        if not (self.psnr == self.psnr and abs(self.psnr) != float("inf")):
            raise ValueError("psnr must be finite")


@dataclass
class RdCurve:
    label: str
    points: list[RdPoint]

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: (p.bits, -p.psnr))


def params_key(params) -> str:
    """Canonical one-line provenance of a parameter set."""
    for name, cls in _PARAM_TYPES.items():
        if type(params) is cls:
            fields = dataclasses.asdict(params)
            body = " ".join(f"{k}={fields[k]!r}" for k in fields)
            return f"scheme={name} {body}"
    raise TypeError(f"unknown params type {type(params)!r}")


def _sweep_task(task):
    image_id, cube, params = task
    result = schemes.encode(cube, params)
    bits = result.total_bits
    # decode from the serialized bytes, exercising the full container path
    recon = schemes.decode(parse_container(serialize_container(result.container)))
    return image_id, params_key(params), float(bits), psnr(cube, recon)


def sweep(images, param_sets, jobs: int = 1) -> list[RdPoint]:
    """One RdPoint per (image, configuration): encode, count bits, decode, PSNR.

    ``images`` is a list of (image_id, SpectralCube).  Failing configurations
    and infinite-PSNR results are logged and skipped.
    """
    tasks = [
        (image_id, cube, params)
        for image_id, cube in images
        for params in param_sets
    ]
    points: list[RdPoint] = []
    skipped = 0
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            raw = list(pool.map(_sweep_task, tasks))
    else:
        raw = []
        for task in tasks:
            try:
                raw.append(_sweep_task(task))
            except Exception as exc:  # record and continue
                log.warning("config failed on %s: %s", task[0], exc)
                raw.append(None)
    for item in raw:
        if item is None:
            continue
        image_id, config, bits, quality = item
        if quality == float("inf"):
            skipped += 1
            log.info("excluding infinite-PSNR point for %s / %s", image_id, config)
            continue
        points.append(RdPoint(bits, quality, config, image_id))
    if skipped:
        log.info("excluded %d infinite-PSNR points", skipped)
    points.sort(key=lambda p: (p.image_id, p.config))
    return points


def average_over_images(points: list[RdPoint]) -> list[RdPoint]:
    """Arithmetic mean of bits and PSNR per configuration across images."""
    images = sorted({p.image_id for p in points})
    configs: dict[str, dict[str, RdPoint]] = {}
    for p in points:
        per_image = configs.setdefault(p.config, {})
        if p.image_id in per_image:
            raise ValueError(f"duplicate point for {p.image_id} / {p.config}")
        per_image[p.image_id] = p
    averaged = []
    for config in sorted(configs):
        per_image = configs[config]
        missing = [i for i in images if i not in per_image]
        if missing:
            raise IncompleteGridError(
                f"configuration {config!r} missing images {missing}"
            )
        bits = sum(per_image[i].bits for i in images) / len(images)
        quality = sum(per_image[i].psnr for i in images) / len(images)
        averaged.append(RdPoint(bits, quality, config, f"avg[{len(images)}]"))
    return averaged


def convex_hull(points: list[RdPoint], label: str = "hull") -> RdCurve:
    """Upper-left concave envelope in the (bits, psnr) plane.

    Along the hull both bits and psnr strictly increase and incremental
    slopes are non-increasing; collinear points within the slope tolerance
    are retained.
    """
    if not points:
        raise ValueError("hull of an empty point set")
    ordered = sorted(
        range(len(points)), key=lambda i: (points[i].bits, -points[i].psnr)
    )
    dedup: list[RdPoint] = []
    for i in ordered:
        p = points[i]
        if dedup and p.bits == dedup[-1].bits:
            continue  # same rate: the sort already put the best psnr first
        dedup.append(p)

    stack: list[RdPoint] = []
    for p in dedup:
        if stack and p.psnr <= stack[-1].psnr:
            continue  # dominated: more bits, no better quality
        while len(stack) >= 2:
            a, b = stack[-2], stack[-1]
            cross = (b.bits - a.bits) * (p.psnr - a.psnr) - (p.bits - a.bits) * (
                b.psnr - a.psnr
            )
            if cross > SLOPE_TOL * (b.bits - a.bits) * (p.bits - a.bits):
                stack.pop()  # b strictly below the a->p chord
            else:
                break
        stack.append(p)
    return RdCurve(label, stack)


def best_of(curves: list[RdCurve], label: str = "best") -> RdCurve:
    """Hull of the union of all curves' points."""
    merged = [p for curve in curves for p in curve.points]
    return convex_hull(merged, label=label)


def simulcast_compose(
    preview: RdCurve, msi: RdCurve, preview_target_db: float
) -> RdCurve:
    """Add the cheapest preview meeting the quality target to every MSI point."""
    eligible = [p for p in preview.points if p.psnr >= preview_target_db]
    if not eligible:
        raise ValueError(
            f"no preview point reaches {preview_target_db} dB "
            f"(best {max((p.psnr for p in preview.points), default=float('-inf'))})"
        )
    extra = min(eligible, key=lambda p: p.bits)
    points = [
        RdPoint(
            p.bits + extra.bits,
            p.psnr,
            f"{p.config} +preview[{extra.config} @>={preview_target_db}dB]",
            p.image_id,
        )
        for p in msi.points
    ]
    return RdCurve(f"{msi.label}+simulcast", points)


def emit_csv(curves: list[RdCurve], path) -> None:
    """Write ``label,bits,psnr,hull,params`` rows, one per point."""
    lines = ["label,bits,psnr,hull,params"]
    for curve in curves:
        hull_keys = {
            (p.bits, p.psnr) for p in convex_hull(curve.points, curve.label).points
        }
        for p in curve.points:
            on_hull = 1 if (p.bits, p.psnr) in hull_keys else 0
            lines.append(
                f"{curve.label},{p.bits!r},{p.psnr!r},{on_hull},\"{p.config}\""
            )
    Path(path).write_text("\n".join(lines) + "\n")


# ------------------------------------------------------------------ manifest

@dataclass
class SweepManifest:
    scheme: str
    image_paths: list[Path]
    grid: dict[str, list]
    label: str
    backend: str = "internal"


_GRID_KEYS = {
    "plain": ("qp",),
    "pca": ("n_c", "qp"),
    "hpcls": ("n_ref", "q_ref", "n_c", "qp", "block_edge"),
    "hpcls-rgb": ("n_ref", "q_ref", "n_c", "qp", "qp_rgb", "block_edge"),
}
_INT_KEYS = {"qp", "q_ref", "qp_rgb", "n_c", "n_ref", "block_edge"}


def parse_manifest(path) -> SweepManifest:
    path = Path(path)
    entries: dict[str, list[str]] = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        entries[key.strip()] = value.replace(",", " ").split()
    if "scheme" not in entries or len(entries["scheme"]) != 1:
        raise FormatError(f"{path}: manifest needs exactly one scheme")
    scheme = entries.pop("scheme")[0]
    if scheme not in _GRID_KEYS:
        raise FormatError(f"{path}: unknown scheme {scheme!r}")
    if "images" not in entries or not entries["images"]:
        raise FormatError(f"{path}: manifest lists no images")
    images = [path.parent / p for p in entries.pop("images")]
    label = entries.pop("label", [scheme])[0]
    backend = entries.pop("backend", ["internal"])[0]
    if backend not in ("internal", "external"):
        raise FormatError(f"{path}: unknown backend {backend!r}")
    grid: dict[str, list] = {}
    for key, values in entries.items():
        if key not in _GRID_KEYS[scheme]:
            raise FormatError(f"{path}: key {key!r} not valid for scheme {scheme}")
        grid[key] = [int(v) if key in _INT_KEYS else float(v) for v in values]
    return SweepManifest(scheme, images, grid, label, backend)


def expand_grid(manifest: SweepManifest) -> list:
    """Cartesian product of the manifest grid as parameter objects."""
    keys = [k for k in _GRID_KEYS[manifest.scheme] if k in manifest.grid]
    required = {
        "plain": {"qp"},
        "pca": {"n_c", "qp"},
        "hpcls": {"n_ref", "q_ref", "n_c", "qp"},
        "hpcls-rgb": {"n_ref", "q_ref", "n_c", "qp", "qp_rgb"},
    }[manifest.scheme]
    missing = required - set(keys)
    if missing:
        raise FormatError(f"manifest missing grid keys {sorted(missing)}")
    nc_max = _GRID_NC_MAX.get(manifest.scheme)
    if nc_max is not None:
        bad = [v for v in manifest.grid.get("n_c", []) if not 1 <= v <= nc_max]
        if bad:
            raise ValueError(f"n_c values {bad} outside sweep grid [1, {nc_max}]")
    cls = _PARAM_TYPES[manifest.scheme]
    combos = itertools.product(*(manifest.grid[k] for k in keys))
    return [cls(**dict(zip(keys, combo))) for combo in combos]


def run_manifest(manifest: SweepManifest, jobs: int = 1, adapter_path=None) -> RdCurve:
    """Full manifest run: load images, sweep, average, return the labeled curve."""
    missing = [str(p) for p in manifest.image_paths if not p.is_file()]
    if missing:
        raise FormatError(f"manifest references missing images: {missing}")
    images = [(p.name, load_cube(p)) for p in manifest.image_paths]
    if manifest.backend == "external":
        points = _external_sweep(manifest, images, adapter_path)
    else:
        points = sweep(images, expand_grid(manifest), jobs=jobs)
    averaged = average_over_images(points)
    return RdCurve(manifest.label, averaged)


def _external_sweep(manifest: SweepManifest, images, adapter_path) -> list[RdPoint]:
    """Plain-scheme rate points taken from the external encoder adapter.

    The adapter template governs the actual coding; manifest qp values are
    provenance only.  Reported bits are the per-plane sums from the encoder
    log plus nothing else (no container is produced).
    """
    import tempfile

    import numpy as np

    from .cube import SpectralCube

    if manifest.scheme != "plain":
        raise ValueError("external backend supports only the plain scheme")
    if adapter_path is None:
        raise CapabilityError(
            "external backend requested but no adapter config given"
        )
    config = load_adapter_config(adapter_path)
    points = []
    for params in expand_grid(manifest):
        for image_id, cube in images:
            with tempfile.TemporaryDirectory(prefix="mscodec-ext-") as workdir:
                bits, recon = external_encoder_run(
                    cube.samples.astype(np.int64), config, workdir
                )
            recon_cube = SpectralCube(
                cube.width, cube.height, cube.bands, cube.bit_depth,
                np.clip(recon, 0, cube.max_value).astype(np.uint16),
            )
            quality = psnr(cube, recon_cube)
            if quality == float("inf"):
                log.info("excluding infinite-PSNR external point for %s", image_id)
                continue
            points.append(
                RdPoint(
                    float(sum(bits)),
                    quality,
                    params_key(params) + " backend=external",
                    image_id,
                )
            )
    points.sort(key=lambda p: (p.image_id, p.config))
    return points
