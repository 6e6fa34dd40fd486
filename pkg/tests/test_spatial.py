import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mscodec.errors import DecodeError
from mscodec.spatial import (
    GopKind,
    PlaneCodingParams,
    code_plane_sequence,
    decode_inter_bi,
    decode_intra,
    decode_plane_sequence,
    denormalize_plane,
    encode_inter_bi,
    encode_intra,
    gop_schedule,
    normalize_plane,
    qp_to_step,
)

from conftest import gradient_cube, random_cube


def _planes_corpus():
    return [
        random_cube(24, 24, 1, seed=1).samples[0].astype(np.int64),
        gradient_cube(24, 24, 1).samples[0].astype(np.int64),
        gradient_cube(17, 23, 1).samples[0].astype(np.int64),
    ]


class TestQpToStep:
    def test_anchor(self):
        assert qp_to_step(4) == 1.0

    def test_octave(self):
        assert qp_to_step(10) == 2.0

    def test_qp50(self):
        assert qp_to_step(50) == pytest.approx(2.0 ** (46 / 6), rel=1e-12)

    def test_range(self):
        with pytest.raises(ValueError):
            qp_to_step(64)
        with pytest.raises(ValueError):
            qp_to_step(-1)


class TestIntra:
    def test_constant_plane_exact_at_qp5(self):
        plane = np.full((16, 24), 700, dtype=np.int64)
        coded = encode_intra(plane, PlaneCodingParams(5))
        assert np.array_equal(coded.reconstruction, plane)

    def test_closed_loop_bitwise(self):
        for seed, (h, w) in enumerate([(16, 16), (17, 23), (8, 40)]):
            plane = random_cube(h, w, 1, seed=seed).samples[0].astype(np.int64)
            for qp in (5, 25, 50):
                coded = encode_intra(plane, PlaneCodingParams(qp))
                dec = decode_intra(coded.payload, w, h, PlaneCodingParams(qp))
                assert np.array_equal(dec, coded.reconstruction)

    def test_deterministic_payload(self):
        plane = random_cube(16, 16, 1, seed=3).samples[0].astype(np.int64)
        a = encode_intra(plane, PlaneCodingParams(20)).payload
        b = encode_intra(plane, PlaneCodingParams(20)).payload
        assert a == b

    def test_bits_decrease_with_qp(self):
        for plane in _planes_corpus():
            lo = encode_intra(plane, PlaneCodingParams(50)).bits
            hi = encode_intra(plane, PlaneCodingParams(5)).bits
            assert lo <= hi

    def test_out_of_range_samples(self):
        with pytest.raises(ValueError):
            encode_intra(np.full((8, 8), 1024), PlaneCodingParams(5))
        with pytest.raises(ValueError):
            encode_intra(np.full((8, 8), -1), PlaneCodingParams(5))

    def test_truncated_payload_decode_error(self):
        plane = random_cube(16, 16, 1, seed=5).samples[0].astype(np.int64)
        payload = encode_intra(plane, PlaneCodingParams(5)).payload
        with pytest.raises(DecodeError):
            decode_intra(payload[:4], 16, 16, PlaneCodingParams(5))

    def test_empty_payload_decode_error(self):
        with pytest.raises(DecodeError):
            decode_intra(b"", 8, 8, PlaneCodingParams(5))

    def test_distortion_monotone_in_step_corpus_average(self):
        corpus = _planes_corpus()
        for qp in (5, 17, 29, 41):
            fine = np.mean(
                [
                    np.mean(
                        (p - encode_intra(p, PlaneCodingParams(qp)).reconstruction)
                        ** 2.0
                    )
                    for p in corpus
                ]
            )
            coarse = np.mean(
                [
                    np.mean(
                        (p - encode_intra(p, PlaneCodingParams(qp + 6)).reconstruction)
                        ** 2.0
                    )
                    for p in corpus
                ]
            )
            assert fine <= coarse + 1e-9


class TestInterBi:
    def test_average_plane_costs_little(self):
        a = random_cube(16, 16, 1, seed=6).samples[0].astype(np.int64)
        b = random_cube(16, 16, 1, seed=7).samples[0].astype(np.int64)
        plane = (a + b + 1) >> 1
        coded = encode_inter_bi(plane, a, b, PlaneCodingParams(25))
        assert np.array_equal(coded.reconstruction, plane)
        assert coded.bits <= 8 * 16  # near-empty residual stream

    def test_closed_loop(self):
        ref_a = random_cube(17, 19, 1, seed=8).samples[0].astype(np.int64)
        ref_b = random_cube(17, 19, 1, seed=9).samples[0].astype(np.int64)
        plane = random_cube(17, 19, 1, seed=10).samples[0].astype(np.int64)
        coded = encode_inter_bi(plane, ref_a, ref_b, PlaneCodingParams(20))
        dec = decode_inter_bi(coded.payload, ref_a, ref_b, PlaneCodingParams(20))
        assert np.array_equal(dec, coded.reconstruction)

    def test_cheaper_than_intra_for_correlated_plane(self):
        plane = gradient_cube(32, 32, 1).samples[0].astype(np.int64)
        inter = encode_inter_bi(plane, plane, plane, PlaneCodingParams(20))
        intra = encode_intra(plane, PlaneCodingParams(20))
        assert inter.bits < intra.bits

    def test_dimension_mismatch(self):
        plane = np.zeros((8, 8), dtype=np.int64)
        with pytest.raises(ValueError):
            encode_inter_bi(plane, np.zeros((8, 9)), np.zeros((8, 8)),
                            PlaneCodingParams(20))


class TestGopSchedule:
    def test_p31_order_and_keys(self):
        sched = gop_schedule(31, GopKind.GOP30)
        order = [e.plane_index for e in sched.entries]
        assert order[:5] == [0, 30, 15, 7, 23]
        keys = [e for e in sched.entries if e.mode == "KEY"]
        assert sorted(e.plane_index for e in keys) == [0, 30]
        assert all(e.qp_offset == -3 for e in keys)
        assert all(e.qp_offset == 0 for e in sched.entries if e.mode == "BI")
        by_index = {e.plane_index: e for e in sched.entries}
        assert (by_index[15].ref_a, by_index[15].ref_b) == (0, 30)
        assert (by_index[7].ref_a, by_index[7].ref_b) == (0, 15)
        assert (by_index[23].ref_a, by_index[23].ref_b) == (15, 30)

    def test_gop2_three_planes(self):
        sched = gop_schedule(3, GopKind.GOP2)
        assert [(e.plane_index, e.mode) for e in sched.entries] == [
            (0, "KEY"), (2, "KEY"), (1, "BI"),
        ]
        assert (sched.entries[2].ref_a, sched.entries[2].ref_b) == (0, 2)

    def test_single_plane(self):
        sched = gop_schedule(1, GopKind.GOP30)
        assert [(e.plane_index, e.mode) for e in sched.entries] == [(0, "KEY")]

    def test_zero_planes_rejected(self):
        with pytest.raises(ValueError):
            gop_schedule(0, GopKind.GOP30)

    @settings(max_examples=64, deadline=None)
    @given(st.integers(1, 64), st.sampled_from([GopKind.GOP30, GopKind.GOP2]))
    def test_invariants_all_p(self, p, kind):
        sched = gop_schedule(p, kind)
        sched.validate()  # permutation + reference order + offsets
        assert len(sched.entries) == p


class TestPlaneSequences:
    def test_sequence_roundtrip(self):
        planes = np.stack(
            [random_cube(16, 16, 1, seed=s).samples[0] for s in range(5)]
        ).astype(np.int64)
        sched = gop_schedule(5, GopKind.GOP30)
        coded = code_plane_sequence(planes, sched, 20)
        dec = decode_plane_sequence(
            [c.payload for c in coded], 16, 16, sched, 20
        )
        assert np.array_equal(dec, np.stack([c.reconstruction for c in coded]))


class TestNormalization:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10_000))
    def test_roundtrip_error_bound(self, seed):
        rng = np.random.default_rng(seed)
        plane = rng.normal(0.0, 100.0, (6, 6)) * rng.uniform(0.01, 50.0)
        ints, offset, scale = normalize_plane(plane)
        assert ints.min() >= 0 and ints.max() <= 1023
        back = denormalize_plane(ints, offset, scale)
        span = plane.max() - plane.min()
        tol = span / 1023.0 if span > 0 else 1e-12
        assert np.abs(back - plane).max() <= tol

    def test_constant_plane(self):
        ints, offset, scale = normalize_plane(np.full((4, 4), 3.25))
        assert not ints.any()
        assert denormalize_plane(ints, offset, scale)[0, 0] == pytest.approx(3.25)
