"""Discretized transition operator: invariants, gap, and correctors."""

import math

import numpy as np
import pytest

from heavytail import boltzmann as bz
from heavytail import spectral as sp
from heavytail.chain_core import iid_reciprocal
from heavytail.errors import DomainError, NumericError


@pytest.fixture(scope="module")
def boltz_op():
    return sp.discretize(bz.chain_model(), 256)


def two_state(p, q):
    return sp.from_matrix(np.asarray([[1.0 - p, p], [q, 1.0 - q]]))


def test_two_state_gap_closed_form():
    for p, q in ((0.3, 0.5), (0.9, 0.8), (0.05, 0.6)):
        op = two_state(p, q)
        assert abs(sp.spectral_gap(op) - abs(1.0 - p - q)) <= 1e-10
        pi = np.asarray([q, p]) / (p + q)
        assert np.max(np.abs(op.pi_weights - pi)) <= 1e-12


def test_independent_rows_have_zero_gap():
    pi = np.asarray([0.2, 0.5, 0.3])
    op = sp.from_matrix(np.tile(pi, (3, 1)))
    assert sp.spectral_gap(op) <= 1e-10


def test_from_matrix_rejects_non_stochastic():
    with pytest.raises(DomainError):
        sp.from_matrix(np.asarray([[0.5, 0.4], [0.3, 0.7]]))


def test_discretize_invariants(boltz_op):
    op = boltz_op
    assert op.matrix.shape == (op.grid.size, op.grid.size)
    row_err = np.max(np.abs(op.matrix.sum(axis=1) - 1.0))
    assert row_err <= 1e-12
    stat_err = np.max(np.abs(op.pi_weights @ op.matrix - op.pi_weights))
    assert stat_err <= 1e-12
    flux = op.pi_weights[:, None] * op.matrix
    assert np.max(np.abs(flux - flux.T)) <= 1e-15
    assert abs(op.pi_weights.sum() - 1.0) <= 1e-12


def test_discretize_needs_density_support():
    from heavytail.chain_core import constant_model

    with pytest.raises(DomainError):
        sp.discretize(constant_model(), 64)
    with pytest.raises(DomainError):
        sp.discretize(bz.chain_model(), 8)


def test_boltzmann_gap_value(boltz_op):
    gap = sp.spectral_gap(boltz_op)
    assert abs(gap - 0.39230485) <= 1e-6


def test_solve_poisson_residual_contract(boltz_op):
    op = boltz_op
    psi_h = np.asarray([bz.psi(k) for k in op.grid])
    sol = sp.solve_poisson(op, psi_h, tol=1e-10)
    lhs = sol.chi - op.matrix @ sol.chi
    assert np.max(np.abs(lhs - psi_h)) <= 1e-10
    assert sol.residual <= 1e-10
    assert abs(float(op.pi_weights @ sol.chi)) <= 1e-9


def test_solve_poisson_requires_centered_data(boltz_op):
    psi_h = np.ones(boltz_op.grid.size)
    with pytest.raises(DomainError):
        sp.solve_poisson(boltz_op, psi_h, tol=1e-10)


def test_solve_poisson_rejects_unit_gap():
    op = sp.from_matrix(np.eye(3))
    with pytest.raises(NumericError):
        sp.solve_poisson(op, np.asarray([1.0, 0.0, -1.0]), tol=1e-8)


def test_martingale_decompose_identity(boltz_op):
    op = boltz_op
    psi_h = np.asarray([bz.psi(k) for k in op.grid])
    sol = sp.solve_poisson(op, psi_h, tol=1e-12)
    path = sp.simulate_path(op, 64, seed=4)
    z, boundary = sp.martingale_decompose(op, sol, path)
    lhs = float(np.sum(psi_h[path[1:]]))
    assert abs(lhs - (float(z.sum()) + boundary)) <= 64 * sol.residual + 1e-11


def test_martingale_decompose_validates_indices(boltz_op):
    psi_h = np.asarray([bz.psi(k) for k in boltz_op.grid])
    sol = sp.solve_poisson(boltz_op, psi_h, tol=1e-10)
    with pytest.raises(DomainError):
        sp.martingale_decompose(boltz_op, sol, np.asarray([0, 1_000_000]))


def test_truncated_poisson_symmetric_center_vanishes(boltz_op):
    psi_h = np.asarray([bz.psi(k) for k in boltz_op.grid])
    _sol, c_n = sp.truncated_poisson(boltz_op, psi_h, 100.0, tol=1e-10)
    assert abs(c_n) <= 1e-12


def test_truncated_poisson_log_growth():
    """One-sided unit-index chain: the truncated centering grows like
    log N on the discretized operator."""
    model = iid_reciprocal(symmetric=False)
    op = sp.discretize(model, 2048)
    psi_h = model.psi(op.grid)
    for n_level in (1e2, 1e3):
        _sol, c_n = sp.truncated_poisson(op, psi_h, n_level, tol=1e-10)
        assert abs(c_n / math.log(n_level) - 1.0) <= 0.02


def test_simulate_path_deterministic(boltz_op):
    a = sp.simulate_path(boltz_op, 500, seed=11)
    b = sp.simulate_path(boltz_op, 500, seed=11)
    c = sp.simulate_path(boltz_op, 500, seed=11, replica=1)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert a.size == 501
    assert a.min() >= 0 and a.max() < boltz_op.grid.size


def test_text_round_trip(tmp_path):
    op = two_state(0.25, 0.4)
    text = sp.op_to_text(op)
    back = sp.op_from_text(text)
    assert np.array_equal(back.grid, op.grid)
    assert np.array_equal(back.pi_weights, op.pi_weights)
    assert np.array_equal(back.matrix, op.matrix)


def test_pi_norm_and_mean(boltz_op):
    op = boltz_op
    ones = np.ones(op.grid.size)
    assert abs(op.pi_mean(ones) - 1.0) <= 1e-12
    assert abs(op.pi_norm(ones) - 1.0) <= 1e-12
