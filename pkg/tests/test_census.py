import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import naive_census
from socelas.census import (
    CensusConfig,
    census_transform,
    hamming,
    hamming_words,
    int_to_words,
    valid_mask,
    words_to_int,
)
from socelas.errors import ConfigError, InputTooSmall
from socelas.imageio import GrayImage


def test_flat_window_gives_zero():
    field = census_transform(GrayImage(np.full((3, 3), 9, dtype=np.uint8)), CensusConfig(3))
    assert field.descriptor(1, 1) == 0


def test_bit_order_first_neighbor_is_msb():
    data = np.array([[1, 2, 3], [4, 5, 6], [7, 8, 9]], dtype=np.uint8)
    field = census_transform(GrayImage(data), CensusConfig(3))
    assert field.descriptor(1, 1) == 0b11110000


def test_single_darker_corner():
    data = np.full((3, 3), 5, dtype=np.uint8)
    data[2, 2] = 0  # last neighbor in row-major order -> least significant bit
    assert census_transform(GrayImage(data), CensusConfig(3)).descriptor(1, 1) == 1


@pytest.mark.parametrize("window", [3, 5, 9, 13])
def test_matches_naive_recomputation(rng, window):
    data = rng.integers(0, 256, (24, 31), dtype=np.uint8)
    field = census_transform(GrayImage(data), CensusConfig(window))
    expected = naive_census(data, window)
    for v in range(data.shape[0]):
        for u in range(data.shape[1]):
            assert field.descriptor(u, v) == expected[v][u]


def test_random_64x64_w9_matches_naive(rng):
    data = rng.integers(0, 256, (64, 64), dtype=np.uint8)
    field = census_transform(GrayImage(data), CensusConfig(9))
    expected = naive_census(data, 9)
    got = [[field.descriptor(u, v) for u in range(64)] for v in range(64)]
    assert got == expected


@pytest.mark.parametrize("window,bits", [(3, 8), (5, 24), (9, 80), (13, 168)])
def test_descriptor_width(window, bits):
    cfg = CensusConfig(window)
    assert cfg.bits == bits
    data = np.zeros((window, window), dtype=np.uint8)
    data[window // 2, window // 2] = 255
    field = census_transform(GrayImage(data), cfg)
    assert field.descriptor(window // 2, window // 2) == (1 << bits) - 1


def test_border_is_zero_and_invalid(rng):
    data = rng.integers(0, 256, (12, 12), dtype=np.uint8)
    field = census_transform(GrayImage(data), CensusConfig(5))
    assert not field.words[~field.valid].any()
    assert field.valid.sum() == 8 * 8
    assert np.array_equal(field.valid, valid_mask(12, 12, 5))


def test_shift_covariance(rng):
    big = rng.integers(0, 256, (30, 40), dtype=np.uint8)
    a = census_transform(GrayImage(big[:, :30]), CensusConfig(5))
    b = census_transform(GrayImage(big[:, 4:34]), CensusConfig(5))
    # pixel u in b shows the content of pixel u + 4 in a
    assert np.array_equal(b.words[2:-2, 2:-6], a.words[2:-2, 6:-2])


def test_monotone_intensity_invariance(rng):
    data = rng.integers(0, 128, (20, 20), dtype=np.uint8)
    mapped = (data.astype(np.int32) * 2 + 1).astype(np.uint8)
    a = census_transform(GrayImage(data), CensusConfig(7))
    b = census_transform(GrayImage(mapped), CensusConfig(7))
    assert a == b


def test_rejects_unknown_window():
    with pytest.raises(ConfigError):
        CensusConfig(4)


def test_too_small():
    with pytest.raises(InputTooSmall):
        census_transform(GrayImage(np.zeros((4, 20), dtype=np.uint8)), CensusConfig(5))


def test_hamming_identity_and_complement():
    a = 0b1011
    assert hamming(a, a) == 0
    bits = 24
    x = 0x5A5A5A
    assert hamming(x, x ^ ((1 << bits) - 1)) == 24


def test_hamming_words_matches_bit_loop(rng):
    for _ in range(50):
        a, b = (int(x) for x in rng.integers(0, 2**62, 2))
        a, b = (a << 18) | 123, (b << 18) | 77  # 80-bit values
        expected = sum(((a >> i) & 1) != ((b >> i) & 1) for i in range(80))
        assert hamming(a, b) == expected
        wa, wb = int_to_words(a, 2), int_to_words(b, 2)
        assert int(hamming_words(wa, wb)) == expected


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**168 - 1), st.integers(0, 2**168 - 1), st.integers(0, 2**168 - 1))
def test_hamming_is_a_metric(a, b, c):
    assert hamming(a, b) == hamming(b, a)
    assert (hamming(a, b) == 0) == (a == b)
    assert hamming(a, c) <= hamming(a, b) + hamming(b, c)


@given(st.integers(0, 2**168 - 1))
def test_word_packing_round_trip(value):
    assert words_to_int(int_to_words(value, 3)) == value
