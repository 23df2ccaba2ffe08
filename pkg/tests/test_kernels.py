import os
import subprocess
import sys

import numpy as np
import pytest

from sparsehm import kernels

from .conftest import log_uniform


def both(name):
    return kernels.get_kernel(name, "numpy"), kernels.get_kernel(name, "numba")


@pytest.mark.parametrize("y", [-40.0, -2.0, -0.5, 0.5, 1.0, 3.0, 40.0])
def test_log_power_ratio(y, rng):
    lx = np.log(log_uniform(rng, (20, 64)))
    a, b = (k(lx, y) for k in both("log_power_ratio_rows"))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


def test_log_power_ratio_is_bounded(rng):
    lx = np.log(log_uniform(rng, (50, 16)))
    for y in (-3.0, 3.0):
        r = kernels.log_power_ratio_rows(lx, y)
        if y > 0:
            assert np.all(r <= 1e-15)
        else:
            assert np.all(r >= -1e-15)


def test_ks_normal(rng):
    x = rng.standard_normal((30, 100))
    a, b = (k(x) for k in both("ks_normal_rows"))
    assert np.allclose(a, b, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("limit", [1, 3, 7])
def test_grow_tree(limit, rng):
    xs = rng.standard_normal((2**limit, 3))
    xs[:5] = xs[0]  # duplicates exercise the unsplittable branch
    m = kernels.heap_size(limit)
    args = (xs, np.array([0, 2]), rng.random(m), 1 - rng.random(m), limit)
    for u, v in zip(*(k(*args) for k in both("grow_tree"))):
        assert np.array_equal(u, v)


def test_path_lengths(rng):
    xs = rng.standard_normal((64, 2))
    m = kernels.heap_size(6)
    tree = kernels.grow_tree(xs, np.array([0, 1]), rng.random(m), 1 - rng.random(m), 6)
    table = np.arange(65) * 0.25
    q = rng.standard_normal((200, 2)) * 3
    a, b = (k(q, *tree, table) for k in both("tree_path_lengths"))
    assert np.array_equal(a, b)


def test_backend_flag():
    code = "from sparsehm import kernels; print(kernels.BACKEND)"
    for flag, expected in (("0", "numpy"), ("off", "numpy"), ("1", "numba")):
        env = dict(os.environ, SPARSEHM_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        assert out.stdout.strip() == expected


def test_unknown_kernel():
    with pytest.raises(KeyError):
        kernels.get_kernel("nope")
