import numpy as np
import pytest

from loglqr import Purpose, RngStream, derive_stream_id


def test_reproducible():
    a = RngStream(7, 3).normal(1000)
    b = RngStream(7, 3).normal(1000)
    assert np.array_equal(a, b)


def test_random_access_matches_sequential():
    s = RngStream(2, 9)
    seq = np.concatenate([s.normal(n) for n in (1, 3, 5000, 7, 2)])
    assert s.position == seq.size
    assert np.array_equal(seq, RngStream(2, 9).normals_at(0, seq.size))
    for start, n in ((0, 1), (1, 1), (3, 10), (4097, 33), (5001, 12)):
        assert np.array_equal(RngStream(2, 9).normals_at(start, n), seq[start : start + n])


def test_block_and_skip():
    s = RngStream(1, 1)
    s.skip(5)
    blk = s.block(3, 2)
    assert blk.shape == (3, 2) and blk.flags.c_contiguous
    assert np.array_equal(blk.ravel(), RngStream(1, 1).normals_at(5, 6))


def test_streams_differ():
    a = RngStream(0, derive_stream_id(100, 0, Purpose.SYSTEM_NOISE)).normal(64)
    b = RngStream(0, derive_stream_id(100, 0, Purpose.ACTION_NOISE)).normal(64)
    c = RngStream(1, derive_stream_id(100, 0, Purpose.SYSTEM_NOISE)).normal(64)
    assert not np.allclose(a, b) and not np.allclose(a, c)


def test_gaussian_moments():
    z = RngStream(5, 0).normal(400_000)
    assert abs(z.mean()) < 0.01
    assert z.var() == pytest.approx(1.0, abs=0.01)
    assert np.mean(z**4) == pytest.approx(3.0, abs=0.05)
    assert np.all(np.isfinite(z))


def test_stream_id_injective():
    ids = {derive_stream_id(T, s, p) for T in (1, 2, 4096, 2**20) for s in range(50) for p in Purpose}
    assert len(ids) == 4 * 50 * len(Purpose)
    assert max(ids) < 2**64


def test_stream_id_range():
    with pytest.raises(ValueError):
        derive_stream_id(2**36, 0, 0)
    with pytest.raises(ValueError):
        derive_stream_id(10, 2**20, 0)
    with pytest.raises(ValueError):
        RngStream(-1, 0)


def test_rademacher_balanced():
    signs = [RngStream(0, derive_stream_id(1000, s, Purpose.INSTANCE)).rademacher() for s in range(2000)]
    assert set(signs) == {1, -1}
    assert abs(np.mean(signs)) < 0.1
