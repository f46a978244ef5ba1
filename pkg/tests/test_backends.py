"""Equivalence of the compiled and pure NumPy kernel backends.

The two implementations share one stream contract: identical uniform
variates per (key, replica, draw index).  Integer-only outputs must
therefore agree bitwise; outputs passing through transcendental math
may differ by a few ulp between the compiled and library code paths.
"""

import numpy as np
import pytest

from heavytail import boltzmann as bz
from heavytail._rng import derive_key, role_key
from heavytail.kernels import backend_name, get_impl
from heavytail.kernels import numpy_impl

numba_impl = pytest.importorskip("heavytail.kernels.numba_impl")

KEY = np.uint64(derive_key(role_key(314159, "backend:test")))


@pytest.fixture(scope="module")
def tables():
    return bz.inverse_tables()


def test_uniform_streams_bitwise_equal():
    a = numpy_impl.uniform_chunk(KEY, 0, 64, 256)
    b = numba_impl.uniform_chunk(KEY, 0, 64, 256)
    assert np.array_equal(a, b)


def test_uniform_offset_windows_overlap():
    whole = numpy_impl.uniform_chunk(KEY, 0, 64, 256)
    tail = numpy_impl.uniform_chunk(KEY, 32, 32, 256)
    assert np.array_equal(whole.reshape(64, 256)[32:], tail.reshape(32, 256))


def test_discrete_sums_agree(tables):
    t0, t1 = tables
    a = numpy_impl.boltz_discrete_sums(KEY, 0, 128, 500, t0, t1)
    b = numba_impl.boltz_discrete_sums(KEY, 0, 128, 500, t0, t1)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-10)


def test_coupled_path_integer_outputs_bitwise(tables):
    t0, t1 = tables
    ka, da = numpy_impl.boltz_coupled_path(KEY, 2000, t0, t1)
    kb, db = numba_impl.boltz_coupled_path(KEY, 2000, t0, t1)
    assert np.array_equal(da, db)
    assert np.allclose(ka, kb, rtol=0, atol=1e-12)


def test_block_sums_agree(tables):
    t0, t1 = tables
    a = numpy_impl.boltz_blocks(KEY, 0, 256, 8, t0, t1)
    b = numba_impl.boltz_blocks(KEY, 0, 256, 8, t0, t1)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-10)


def test_first_regeneration_counts_bitwise(tables):
    t0, t1 = tables
    a = numpy_impl.boltz_kappa1(KEY, 0, 256, 4, 0.2, 64, t0, t1)
    b = numba_impl.boltz_kappa1(KEY, 0, 256, 4, 0.2, 64, t0, t1)
    assert np.array_equal(a, b)


def test_time_integrals_agree(tables):
    t0, t1 = tables
    ia, ca, ba = numpy_impl.boltz_time_integrals(KEY, 0, 64, 300, 1.0, t0, t1)
    ib, cb, bb = numba_impl.boltz_time_integrals(KEY, 0, 64, 300, 1.0, t0, t1)
    assert np.array_equal(ca, cb)
    assert np.allclose(ia, ib, rtol=1e-10, atol=1e-10)
    assert np.allclose(ba, bb, rtol=1e-10, atol=1e-10)


def test_kinetic_checkpoints_agree(tables):
    t0, t1 = tables
    hor = np.asarray([50.0, 200.0])
    da, ka = numpy_impl.boltz_kinetic(KEY, 0, 64, 0.25, hor, t0, t1)
    db, kb = numba_impl.boltz_kinetic(KEY, 0, 64, 0.25, hor, t0, t1)
    assert da.shape == (64, 2)
    assert np.allclose(da, db, rtol=1e-10, atol=1e-10)
    assert np.allclose(ka, kb, rtol=0, atol=1e-12)


def test_pareto_sums_agree():
    a = numpy_impl.pareto_sums(KEY, 0, 256, 400, 1.5, 1.0, 0)
    b = numba_impl.pareto_sums(KEY, 0, 256, 400, 1.5, 1.0, 0)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_weighted_sums_agree():
    a = numpy_impl.pareto_weighted_sums(KEY, 0, 256, 400, 1.5, 1.0, 0, 1)
    b = numba_impl.pareto_weighted_sums(KEY, 0, 256, 400, 1.5, 1.0, 0, 1)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-12)


def test_backend_selection_reports_a_name():
    assert backend_name() in ("numba", "numpy")
    assert get_impl() is not None


def test_replica_offset_equivalence_on_sums(tables):
    """Worker-style splits of the replica axis reproduce the
    contiguous run on both backends."""
    t0, t1 = tables
    for impl in (numpy_impl, numba_impl):
        whole = impl.boltz_discrete_sums(KEY, 0, 96, 200, t0, t1)
        parts = [impl.boltz_discrete_sums(KEY, off, 32, 200, t0, t1)
                 for off in (0, 32, 64)]
        assert np.array_equal(whole, np.concatenate(parts))
