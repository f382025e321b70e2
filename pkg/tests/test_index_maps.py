import pytest
from hypothesis import given, strategies as st

from mlbicgstab import InvalidArgumentError, g_index, r_index
from mlbicgstab.index_maps import split_index


@pytest.mark.parametrize("n,k,g,r", [(3, 4, 1, 1), (3, 0, -1, 3), (3, 7, 2, 1), (3, 3, 0, 3), (1, 5, 4, 1),
                                     (2, -1, -1, 1), (2, -2, -2, 2), (4, -5, -2, 3)])
def test_table_values(n, k, g, r):
    assert g_index(n, k) == g
    assert r_index(n, k) == r


def test_split_index():
    assert split_index(3, 7) == (2, 1)


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_bad_n(bad):
    with pytest.raises(InvalidArgumentError):
        g_index(bad, 1)
    with pytest.raises(InvalidArgumentError):
        r_index(bad, 1)


@given(st.integers(1, 8), st.integers(-10, 10), st.integers(1, 8))
def test_decomposition(n, j, i):
    i = (i - 1) % n + 1
    assert g_index(n, j * n + i) == j
    assert r_index(n, j * n + i) == i


@given(st.integers(1, 8), st.data())
def test_shift_by_n(n, data):
    k = data.draw(st.integers(-2 * n, 10 * n))
    assert g_index(n, k + n) == g_index(n, k) + 1
    assert r_index(n, k + n) == r_index(n, k)
    assert 1 <= r_index(n, k) <= n


def _check_index_identities(n, k):
    g, r = g_index, r_index
    # (a)
    assert g(n, k + n) == g(n, k) + 1 and r(n, k + n) == r(n, k)
    # (b)
    for s in range(max(k - n, 0), g(n, k) * n):
        assert g(n, s + 1) + 1 == g(n, k + 1)
    # (c)
    for s in range(g(n, k) * n, k):
        assert g(n, s + 1) == g(n, g(n, k) * n + 1) == g(n, k)
    # (d)
    if r(n, k) == n:
        assert g(n, k + 1) == g(n, k) + 1
    else:
        assert g(n, k + 1) == g(n, k)
    # (e)
    if r(n, k) == n or g(n, k) == 0:
        assert max(k - n, 0) > g(n, k) * n - 1


def test_index_properties_exhaustive():
    for n in range(1, 7):
        for k in range(1, 6 * n + 1):
            _check_index_identities(n, k)
