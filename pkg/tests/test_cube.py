import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mscodec.cube import (
    PSNR_INF,
    CmfMatrix,
    SpectralCube,
    cie_standard_observer,
    cmf_for_bands,
    crop_quadrants,
    load_cube,
    mse,
    psnr,
    render_rgb,
    requantize,
    store_cube,
)
from mscodec.errors import FormatError

from conftest import make_cube, random_cube


def _header(bit_depth, bands, width, height):
    return b"MSRC" + struct.pack("<BBHHHI", 1, bit_depth, bands, width, height, 0)


class TestMsrcFormat:
    def test_minimal_file(self, tmp_path):
        path = tmp_path / "one.msrc"
        path.write_bytes(_header(10, 1, 1, 1) + struct.pack("<H", 512))
        cube = load_cube(path)
        assert (cube.width, cube.height, cube.bands, cube.bit_depth) == (1, 1, 1, 10)
        assert cube.samples[0, 0, 0] == 512

    def test_store_is_18_bytes_for_1x1x1(self, tmp_path):
        cube = make_cube(np.array([[[512]]]))
        assert store_cube(cube, tmp_path / "c.msrc") == 18

    def test_roundtrip_byte_identical(self, tmp_path):
        cube = random_cube(5, 7, 3)
        p1, p2 = tmp_path / "a.msrc", tmp_path / "b.msrc"
        store_cube(cube, p1)
        store_cube(load_cube(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "short.msrc"
        path.write_bytes(_header(10, 3, 2, 2) + b"\x00\x00" * 11)
        with pytest.raises(FormatError):
            load_cube(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.msrc"
        path.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(FormatError):
            load_cube(path)

    def test_sample_out_of_declared_range(self, tmp_path):
        path = tmp_path / "range.msrc"
        path.write_bytes(_header(8, 1, 1, 1) + struct.pack("<H", 300))
        with pytest.raises(FormatError):
            load_cube(path)

    def test_unwritable_path(self):
        cube = make_cube(np.array([[[1]]]))
        with pytest.raises(OSError):
            store_cube(cube, "/nonexistent-dir/x.msrc")

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 4), st.integers(1, 5), st.integers(1, 5), st.data())
    def test_roundtrip_property(self, b, h, w, data):
        import tempfile

        samples = np.array(
            data.draw(
                st.lists(
                    st.integers(0, 1023), min_size=b * h * w, max_size=b * h * w
                )
            )
        ).reshape(b, h, w)
        cube = make_cube(samples)
        with tempfile.TemporaryDirectory() as tmp:
            path = tmp + "/c.msrc"
            store_cube(cube, path)
            back = load_cube(path)
        assert np.array_equal(back.samples, cube.samples)
        assert back.bit_depth == cube.bit_depth


class TestInvariants:
    def test_sample_count_checked(self):
        with pytest.raises(ValueError):
            SpectralCube(2, 2, 3, 10, np.zeros((3, 2, 3), dtype=np.uint16))

    def test_range_checked(self):
        with pytest.raises(ValueError):
            make_cube(np.full((1, 1, 1), 2000))


class TestCrop:
    def test_offsets_482x512(self):
        # height 482, width 512: row anchors {0, 226}, column anchors {0, 256}
        cube = make_cube(np.zeros((1, 482, 512)))
        cube.samples[0, 226, 256] = 7
        crops = crop_quadrants(cube)
        assert all(c.width == 256 and c.height == 256 for c in crops)
        # crop order: (row, col) in {0, 226} x {0, 256}
        assert crops[3].samples[0, 0, 0] == 7

    def test_256_input_gives_identical_copies(self):
        cube = random_cube(256, 256, 1, seed=2)
        crops = crop_quadrants(cube)
        for c in crops:
            assert np.array_equal(c.samples, cube.samples)

    def test_too_small(self):
        with pytest.raises(ValueError):
            crop_quadrants(make_cube(np.zeros((1, 200, 512))))

    def test_512_square_tiles_exactly(self):
        cube = random_cube(512, 512, 1, seed=3)
        crops = crop_quadrants(cube)
        rebuilt = np.zeros_like(cube.samples)
        rebuilt[:, :256, :256] = crops[0].samples
        rebuilt[:, :256, 256:] = crops[1].samples
        rebuilt[:, 256:, :256] = crops[2].samples
        rebuilt[:, 256:, 256:] = crops[3].samples
        assert np.array_equal(rebuilt, cube.samples)


class TestRequantize:
    def test_zero_maps_to_zero(self):
        cube = make_cube(np.zeros((1, 1, 1)), bit_depth=12)
        assert requantize(cube, 10).samples[0, 0, 0] == 0

    def test_endpoint_preserved(self):
        cube = make_cube(np.full((1, 1, 1), 65535), bit_depth=16)
        out = requantize(cube, 10)
        assert out.samples[0, 0, 0] == 1023
        assert out.bit_depth == 10

    def test_formula_value(self):
        # round(2048 * 1023 / 4095) = 512
        cube = make_cube(np.full((1, 1, 1), 2048), bit_depth=12)
        assert requantize(cube, 10).samples[0, 0, 0] == 512

    @settings(max_examples=30, deadline=None)
    @given(st.integers(8, 16), st.integers(0, 255))
    def test_same_depth_identity(self, depth, value):
        cube = make_cube(np.full((1, 2, 2), value), bit_depth=depth)
        assert np.array_equal(requantize(cube, depth).samples, cube.samples)


class TestMetrics:
    def test_mse_zero_for_identical(self):
        cube = random_cube(4, 4, 2)
        assert mse(cube, cube) == 0.0

    def test_mse_hand_value(self):
        a = make_cube(np.array([[[0, 1], [2, 3]]]))
        b = make_cube(np.array([[[1, 1], [2, 3]]]))
        assert mse(a, b) == pytest.approx(0.25)

    def test_mse_symmetry(self):
        a, b = random_cube(4, 4, 2, seed=1), random_cube(4, 4, 2, seed=2)
        assert mse(a, b) == mse(b, a)

    def test_mse_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mse(random_cube(4, 4, 2), random_cube(4, 5, 2))

    def test_psnr_exact_match_is_sentinel(self):
        cube = random_cube(4, 4, 2)
        assert psnr(cube, cube) == PSNR_INF

    def test_psnr_hand_value(self):
        a = make_cube(np.array([[[0, 1], [2, 3]]]))
        b = make_cube(np.array([[[1, 1], [2, 3]]]))
        assert psnr(a, b) == pytest.approx(10 * math.log10(36), abs=1e-4)
        assert psnr(a, b) == pytest.approx(15.5630, abs=1e-4)

    def test_psnr_zero_db(self):
        a = make_cube(np.full((1, 2, 2), 9))
        b = make_cube(np.zeros((1, 2, 2)))
        assert psnr(a, b) == pytest.approx(0.0)

    def test_psnr_all_zero_original(self):
        zero = make_cube(np.zeros((1, 2, 2)))
        with pytest.raises(ValueError):
            psnr(zero, zero)

    def test_psnr_nominal_peak_flag(self):
        a = make_cube(np.array([[[0, 1], [2, 3]]]))
        b = make_cube(np.array([[[1, 1], [2, 3]]]))
        assert psnr(a, b, nominal_peak=True) == pytest.approx(
            10 * math.log10(1023**2 / 0.25)
        )

    def test_psnr_decreases_with_mse(self):
        orig = random_cube(8, 8, 2, seed=4)
        noisy1 = orig.samples.astype(np.int64).copy()
        noisy1[0, 0, 0] += 1
        noisy2 = noisy1.copy()
        noisy2[0, 1, 1] += 5
        b1, b2 = make_cube(noisy1), make_cube(noisy2)
        assert mse(orig, b2) > mse(orig, b1)
        assert psnr(orig, b2) < psnr(orig, b1)


class TestRenderRgb:
    def test_all_zero_is_black(self):
        cube = make_cube(np.zeros((31, 3, 3)))
        rgb = render_rgb(cube, cie_standard_observer())
        assert not rgb.channels.any()

    def test_gain_hits_1023(self):
        vals = np.zeros((31, 3, 3))
        vals[:, 1, 1] = 500.0
        rgb = render_rgb(make_cube(vals), cie_standard_observer())
        assert rgb.channels[:, 1, 1].max() == 1023

    def test_flat_spectrum_ratios_match_row_sums(self):
        cmf = cie_standard_observer()
        cube = make_cube(np.full((31, 4, 4), 800))
        rgb = render_rgb(cube, cmf)
        sums = cmf.weights.sum(axis=1)
        expected = np.floor(1023.0 * sums / sums.max() + 0.5)
        for ch in range(3):
            assert float(rgb.channels[ch, 0, 0]) == pytest.approx(
                expected[ch], abs=1.0
            )

    def test_scale_invariance(self):
        cube = random_cube(4, 4, 31, seed=9)
        doubled = make_cube(np.minimum(cube.samples.astype(np.int64) * 2, 1023), 12)
        # scaling by 2 without clipping: use small values
        small = make_cube(cube.samples // 4)
        twice = make_cube((cube.samples // 4) * 2)
        cmf = cie_standard_observer()
        a = render_rgb(small, cmf).channels.astype(int)
        b = render_rgb(twice, cmf).channels.astype(int)
        assert np.abs(a - b).max() <= 1

    def test_band_mismatch(self):
        with pytest.raises(ValueError):
            render_rgb(random_cube(2, 2, 5), cie_standard_observer())

    def test_cmf_rows_nonzero_validated(self):
        with pytest.raises(ValueError):
            CmfMatrix(np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]))

    def test_cmf_for_bands_resamples(self):
        cmf = cmf_for_bands(7)
        assert cmf.weights.shape == (3, 7)
        assert cmf_for_bands(31).weights.shape == (3, 31)
