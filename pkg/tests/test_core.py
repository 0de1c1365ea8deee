"""Fixed-point codes, dithered decay, address arithmetic, seeded streams."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cortexsim.fixedpoint import (
    ADDR_MASK,
    HYPER_MASK,
    MiniAddr,
    addr_wrap_add,
    clamp_code4,
    code4_from_value,
    decay_stochastic,
    gain_code,
    leak_code,
)
from cortexsim.rng import (RngStream, derive_seed, derive_seed_array, dither_block,
                           dither_matrix)


def enumerate_decay_mean(x: int, leak: int) -> float:
    """Independent oracle: exact mean of the decay over all 32 dither draws."""
    return sum(decay_stochastic(x, leak, r) for r in range(32)) / 32.0


class TestLeakCode:
    def test_reference_time_constants(self):
        # round(256 * tau / (tau + 1)), round-half-up
        assert leak_code(3) == 192
        assert leak_code(5.8) == 218
        assert leak_code(30) == 248

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            leak_code(0)
        with pytest.raises(ValueError):
            leak_code(-1)
        with pytest.raises(ValueError):
            leak_code(30.5)

    def test_cap_at_255(self):
        for tau in np.linspace(0.01, 30, 211):
            assert 0 <= leak_code(float(tau)) <= 255


class TestDecayStochastic:
    def test_zero_is_fixed_point(self):
        for leak in (0, 128, 255):
            for r in range(32):
                assert decay_stochastic(0, leak, r) == 0

    def test_mean_examples(self):
        # enumerated over all 32 draws; must sit within 1/32 of x*L/256
        m = enumerate_decay_mean(7, 233)
        assert abs(m - 7 * 233 / 256) <= 1 / 32
        m = enumerate_decay_mean(-8, 192)
        assert abs(m - (-6.0)) <= 1 / 32

    def test_dither_exactness_exhaustive(self):
        for leak in (192, 218, 233, 248):
            for x in range(-8, 8):
                m = enumerate_decay_mean(x, leak)
                assert abs(m - x * leak / 256) <= 1 / 32, (x, leak, m)

    def test_expectation_contracts(self):
        # |E[decay]| <= |x| * L/256 + 1/32 for every sub-unity leak
        for leak in (64, 192, 218, 255):
            for x in range(-8, 8):
                m = enumerate_decay_mean(x, leak)
                assert abs(m) <= abs(x) * leak / 256 + 1 / 32

    def test_rejects_bad_draw(self):
        with pytest.raises(ValueError):
            decay_stochastic(3, 192, 32)
        with pytest.raises(ValueError):
            decay_stochastic(3, 192, -1)

    @given(st.integers(-8, 7), st.integers(0, 255), st.integers(0, 31))
    def test_total_and_in_range(self, x, leak, r):
        assert -8 <= decay_stochastic(x, leak, r) <= 7


class TestAddrWrapAdd:
    def test_examples(self):
        assert addr_wrap_add(0x00005, 0x00000) == 0x00005
        assert addr_wrap_add(0xFFFFF, 0x00001) == 0x00000
        assert addr_wrap_add(0x12345, 0x00010) == 0x12355

    @given(st.integers(0, HYPER_MASK), st.integers(0, HYPER_MASK), st.integers(0, HYPER_MASK))
    def test_identity_and_associativity(self, a, b, c):
        assert addr_wrap_add(a, 0) == a
        assert addr_wrap_add(addr_wrap_add(a, b), c) == addr_wrap_add(a, addr_wrap_add(b, c))


class TestCodes:
    def test_code4_quantization(self):
        assert code4_from_value(0.4) == 3
        assert code4_from_value(-1.0) == -8
        assert code4_from_value(0.875) == 7
        assert code4_from_value(2.0) == 7  # saturates

    def test_gain_code(self):
        assert gain_code(1.0) == 16
        assert gain_code(0.0) == 1  # floor of the representable range
        assert gain_code(16.0) == 255

    def test_clamp(self):
        assert clamp_code4(9) == 7
        assert clamp_code4(-12) == -8
        assert clamp_code4(5) == 5


class TestMiniAddr:
    def test_pack_roundtrip(self):
        a = MiniAddr(hyper=0x12345, mini=77)
        assert MiniAddr.from_packed(a.packed) == a
        assert a.packed == (0x12345 << 7) | 77

    def test_validation(self):
        with pytest.raises(ValueError):
            MiniAddr(hyper=1 << 20, mini=0)
        with pytest.raises(ValueError):
            MiniAddr(hyper=0, mini=128)
        with pytest.raises(ValueError):
            MiniAddr.from_packed(ADDR_MASK + 1)


class TestRngStream:
    def test_reproducible_million_draws(self):
        a = RngStream(0xDEADBEEF)
        b = RngStream(0xDEADBEEF)
        xa = a.draw_array(20, 1_000_000)
        xb = b.draw_array(20, 1_000_000)
        assert np.array_equal(xa, xb)

    def test_scalar_matches_array(self):
        a = RngStream(42)
        b = RngStream(42)
        arr = a.draw_array(5, 257)
        assert [b.draw(5) for _ in range(257)] == arr.tolist()

    def test_widths_cover_range(self):
        r = RngStream(7)
        for width in (5, 10, 20):
            xs = r.draw_array(width, 200_000)
            assert xs.min() >= 0 and xs.max() < (1 << width)
            # every value of the small widths should appear
            if width == 5:
                assert len(np.unique(xs)) == 32

    def test_uniformity_rough(self):
        xs = RngStream(99).draw_array(5, 320_000)
        counts = np.bincount(xs, minlength=32)
        expected = 10_000
        # 5 sigma of a binomial around p = 1/32
        sigma = np.sqrt(expected * (1 - 1 / 32))
        assert np.all(np.abs(counts - expected) < 5 * sigma)

    def test_derive_changes_stream(self):
        base = RngStream(1234)
        c1 = base.derive(5)
        c2 = base.derive(6)
        assert c1.draw_array(20, 100).tolist() != c2.draw_array(20, 100).tolist()
        # order sensitivity of the key path
        assert derive_seed(1, 2, 3) != derive_seed(1, 3, 2)

    def test_derive_array_matches_scalar(self):
        keys = np.arange(1000, dtype=np.uint64)
        vec = derive_seed_array(777, keys)
        assert [derive_seed(777, int(k)) for k in keys[:64]] == vec[:64].tolist()

    def test_dither_matrix_matches_streams(self):
        seeds = np.array([derive_seed(3, i) for i in range(8)], dtype=np.uint64)
        mat = dither_matrix(seeds, 200, 5)
        for i in range(8):
            s = RngStream(int(seeds[i]))
            assert s.draw_array(5, 200).tolist() == mat[i].tolist()

    def test_dither_block_matches_scalar_run(self):
        seeds = np.array([derive_seed(9, i) for i in range(8)], dtype=np.uint64)
        block = dither_block(seeds, 205)
        for i in range(8):
            s = RngStream(int(seeds[i]))
            assert s.dither_run(205).tolist() == block[i].tolist()

    def test_dither_block_lanes_uniform(self):
        seeds = np.arange(20_000, dtype=np.uint64) * np.uint64(977)
        block = dither_block(seeds, 24)  # two words, all 12 lanes twice
        assert block.min() >= 0 and block.max() < 32
        for lane in range(24):
            counts = np.bincount(block[:, lane], minlength=32)
            expected = len(seeds) / 32
            sigma = np.sqrt(expected * (1 - 1 / 32))
            assert np.all(np.abs(counts - expected) < 6 * sigma)
