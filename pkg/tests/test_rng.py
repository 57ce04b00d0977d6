import numpy as np
from hypothesis import given, strategies as st

from treecover.rng import as_generator, name_key, stream


def test_name_key_stable():
    assert name_key("walk") == name_key("walk")
    assert name_key("walk") != name_key("walks")
    assert 0 <= name_key("x") < 2**64


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_stream_reproducible(seed, rid):
    a = stream(seed, "exp", rid).random(4)
    b = stream(seed, "exp", rid).random(4)
    assert np.array_equal(a, b)


def test_streams_differ_by_key():
    base = stream(1, "a", 0).random(8)
    assert not np.array_equal(base, stream(1, "a", 1).random(8))
    assert not np.array_equal(base, stream(1, "b", 0).random(8))
    assert not np.array_equal(base, stream(2, "a", 0).random(8))


def test_streams_look_independent():
    x = np.array([stream(3, "ind", i).standard_normal() for i in range(4000)])
    assert abs(x.mean()) < 0.1
    assert abs(np.corrcoef(x[:-1], x[1:])[0, 1]) < 0.1


def test_as_generator():
    g = np.random.default_rng(0)
    assert as_generator(g) is g
    assert np.array_equal(as_generator(5).random(3), stream(5, "default").random(3))
