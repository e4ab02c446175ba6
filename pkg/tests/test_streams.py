import numpy as np
import pytest

from schrohum.streams import open_uniforms, raw_blocks, words_to_open_uniforms


def test_block_k_does_not_depend_on_start():
    full = raw_blocks(7, 0, 50)
    assert np.array_equal(raw_blocks(7, 17, 5), full[17:22])
    assert np.array_equal(raw_blocks(7, 49, 1)[0], full[49])


def test_blocks_match_philox_advance():
    bg = np.random.Philox(key=3)
    bg.advance(11)
    assert np.array_equal(raw_blocks(3, 11, 1)[0], bg.random_raw(4))


def test_different_seeds_differ():
    assert not np.array_equal(raw_blocks(1, 0, 4), raw_blocks(2, 0, 4))


def test_uniforms_open_interval_and_moments():
    u = open_uniforms(0, 0, 50_000).ravel()
    assert u.min() > 0.0 and u.max() < 1.0
    n = u.size
    assert abs(u.mean() - 0.5) < 4 * np.sqrt(1 / 12 / n)
    assert abs(u.var() - 1 / 12) < 1e-3


def test_extreme_words_stay_inside():
    # all-zero and all-one words map strictly inside (0, 1)
    u = words_to_open_uniforms(np.array([0, 2**64 - 1], dtype=np.uint64))
    assert 0.0 < u[0] and u[1] < 1.0
    assert np.log1p(-u[1]) > -np.inf


@pytest.mark.parametrize("start,count", [(-1, 2), (0, -3)])
def test_negative_arguments_rejected(start, count):
    with pytest.raises(ValueError):
        raw_blocks(0, start, count)
