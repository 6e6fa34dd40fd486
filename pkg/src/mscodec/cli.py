"""Command-line surface: encode, decode, crop, sweep, metrics.

Exit codes: 0 success, 1 data/format error, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import struct
import sys

from . import container as cn
from . import rd, schemes
from .cube import crop_quadrants, load_cube, mse, psnr, store_cube
from .errors import MscError

ADAPTER_ENV = "MSCODEC_ADAPTER_CONFIG"

_SCHEME_CHOICES = ("plain", "pca", "hpcls", "hpcls-rgb")


class UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mscodec", description="Multispectral image compression toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="encode an MSRC cube into a container")
    enc.add_argument("--scheme", required=True, choices=_SCHEME_CHOICES)
    enc.add_argument("--qp", type=int, required=True)
    enc.add_argument("--n-c", type=int, dest="n_c")
    enc.add_argument("--n-ref", type=int, dest="n_ref")
    enc.add_argument("--q-ref", type=int, dest="q_ref")
    enc.add_argument("--qp-rgb", type=int, dest="qp_rgb")
    enc.add_argument("--block-size", type=int, dest="block_size", default=64)
    enc.add_argument("input")
    enc.add_argument("output")

    dec = sub.add_parser("decode", help="decode a container back to MSRC")
    dec.add_argument("--orig", help="original MSRC for PSNR reporting")
    dec.add_argument("--preview", help="write the RGB preview layer as 16-bit PPM")
    dec.add_argument("input")
    dec.add_argument("output")

    crop = sub.add_parser("crop", help="write the four 256x256 corner crops")
    crop.add_argument("input")
    crop.add_argument("out_prefix")

    swp = sub.add_parser("sweep", help="run a manifest-driven RD sweep to CSV")
    swp.add_argument("--manifest", required=True)
    swp.add_argument("--out", required=True)
    swp.add_argument("--jobs", type=int, default=1)
    swp.add_argument(
        "--adapter",
        default=os.environ.get(ADAPTER_ENV),
        help="external encoder adapter config (default: $" + ADAPTER_ENV + ")",
    )

    met = sub.add_parser("metrics", help="MSE and PSNR between two MSRC files")
    met.add_argument("original")
    met.add_argument("reconstruction")
    return parser


def _encode_params(args):
    def need(name):
        value = getattr(args, name)
        if value is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for {args.scheme}")
        return value

    if args.scheme == "plain":
        return schemes.PlainParams(args.qp)
    if args.scheme == "pca":
        return schemes.PcaParams(need("n_c"), args.qp)
    if args.scheme == "hpcls":
        return schemes.HpclsParams(
            need("n_ref"), need("q_ref"), need("n_c"), args.qp, args.block_size
        )
    return schemes.HpclsRgbParams(
        need("n_ref"), need("q_ref"), need("n_c"), args.qp, need("qp_rgb"),
        args.block_size,
    )


def _fmt_db(value: float) -> str:
    return "inf" if math.isinf(value) else f"{value:.6f}"


def cmd_encode(args) -> int:
    params = _encode_params(args)
    cube = load_cube(args.input)
    result = schemes.encode(cube, params)
    cn.write_container(result.container, args.output)
    print(result.total_bits, _fmt_db(psnr(cube, result.reconstruction)))
    return 0


def _write_ppm16(rgb, path):
    header = f"P6\n{rgb.width} {rgb.height}\n65535\n".encode("ascii")
    # 10-bit samples scaled to the full 16-bit PPM range, big-endian per spec
    scaled = (rgb.channels.astype("u8") * 65535 + 511) // 1023
    interleaved = scaled.astype(">u2").transpose(1, 2, 0).tobytes()
    with open(path, "wb") as fh:
        fh.write(header + interleaved)


def cmd_decode(args) -> int:
    ctr = cn.read_container(args.input)
    if args.preview:
        if ctr.scheme_id != cn.SCHEME_HPCLS_RGB:
            raise MscError(
                f"scheme {ctr.scheme_name!r} carries no preview layer"
            )
        _write_ppm16(schemes.decode_hpcls_rgb_preview(ctr), args.preview)
    recon = schemes.decode(ctr)
    store_cube(recon, args.output)
    if args.orig:
        print(_fmt_db(psnr(load_cube(args.orig), recon)))
    return 0


def cmd_crop(args) -> int:
    cube = load_cube(args.input)
    names = ("tl", "tr", "bl", "br")
    for name, crop in zip(names, crop_quadrants(cube)):
        store_cube(crop, f"{args.out_prefix}_{name}.msrc")
    return 0


def cmd_sweep(args) -> int:
    manifest = rd.parse_manifest(args.manifest)
    curve = rd.run_manifest(manifest, jobs=args.jobs, adapter_path=args.adapter)
    rd.emit_csv([curve], args.out)
    return 0


def cmd_metrics(args) -> int:
    a = load_cube(args.original)
    b = load_cube(args.reconstruction)
    print(f"{mse(a, b):.6f}", _fmt_db(psnr(a, b)))
    return 0


_DISPATCH = {
    "encode": cmd_encode,
    "decode": cmd_decode,
    "crop": cmd_crop,
    "sweep": cmd_sweep,
    "metrics": cmd_metrics,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except UsageError as exc:
        print(f"mscodec: {exc}", file=sys.stderr)
        return 2
    except (MscError, ValueError, OSError, struct.error) as exc:
        print(f"mscodec: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
