"""Shared synthetic-cube factories and fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from mscodec.cube import SpectralCube


def make_cube(values, bit_depth=10) -> SpectralCube:
    values = np.asarray(values)
    b, h, w = values.shape
    return SpectralCube(w, h, b, bit_depth, values.astype(np.uint16))


def constant_cube(h=32, w=32, b=7, value=300) -> SpectralCube:
    return make_cube(np.full((b, h, w), value))


def rank1_cube(h=32, w=32, b=7, seed=11) -> SpectralCube:
    """All spectra lie on one line through the mean (exactly rank-1 centered)."""
    rng = np.random.default_rng(seed)
    spatial = rng.random((h, w))
    spectrum = rng.random(b) + 0.2
    vals = spatial[None] * spectrum[:, None, None] * 600.0 + 150.0
    return make_cube(np.clip(np.floor(vals + 0.5), 0, 1023))


def rank3_noise_cube(h=32, w=32, b=7, seed=5, noise=3.0) -> SpectralCube:
    rng = np.random.default_rng(seed)
    maps = rng.random((3, h, w))
    spectra = rng.random((3, b))
    vals = np.tensordot(spectra.T, maps, axes=([1], [0])) * 600.0
    vals += rng.normal(0.0, noise, (b, h, w)) + 120.0
    return make_cube(np.clip(np.floor(vals + 0.5), 0, 1023))


def random_cube(h=32, w=32, b=7, seed=3) -> SpectralCube:
    rng = np.random.default_rng(seed)
    return make_cube(rng.integers(0, 1024, (b, h, w)))


def gradient_cube(h=32, w=32, b=7) -> SpectralCube:
    """Smooth spatial gradient sweeping in phase across bands."""
    y = np.linspace(0.0, 1.0, h)[:, None]
    x = np.linspace(0.0, 1.0, w)[None, :]
    planes = [
        511.5 + 420.0 * np.sin(2.2 * x + 1.7 * y + 0.35 * k) * (0.6 + 0.4 * y)
        for k in range(b)
    ]
    return make_cube(np.clip(np.floor(np.stack(planes) + 0.5), 0, 1023))


def acceptance_cubes(h=32, w=32, b=7) -> dict[str, SpectralCube]:
    return {
        "constant": constant_cube(h, w, b),
        "rank1": rank1_cube(h, w, b),
        "rank3+noise": rank3_noise_cube(h, w, b),
        "random": random_cube(h, w, b),
        "gradient": gradient_cube(h, w, b),
    }


@pytest.fixture
def stub_encoder(tmp_path):
    """An identity 'external encoder' honoring the adapter contract."""
    script = tmp_path / "stub_encoder.py"
    script.write_text(
        """#!/usr/bin/env python3
import json, shutil, sys
template, workdir = sys.argv[1], sys.argv[2]
meta = json.load(open(workdir + "/input.json"))
shutil.copyfile(workdir + "/input.raw", workdir + "/recon.raw")
for poc in range(meta["count"]):
    print(f"POC {poc} TId 0 QP 32 {1000 + poc} bits [Y 99.0 dB]")
"""
    )
    script.chmod(0o755)
    template = tmp_path / "template.cfg"
    template.write_text("# stub template\n")
    return script, template
