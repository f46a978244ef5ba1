"""Ensemble runners, built-in models, and centering sequences."""

import math

import numpy as np
import pytest

from heavytail import boltzmann as bz
from heavytail.chain_core import (
    WeightSpec,
    centering_c_N,
    constant_model,
    iid_pareto,
    iid_reciprocal,
    run_functional_raw_ensemble,
    run_sum,
    run_sum_ensemble,
    run_weighted_sum_ensemble,
    time_change_estimate,
)
from heavytail.errors import DomainError


def test_sum_ensemble_is_deterministic():
    model = iid_pareto(1.5, symmetric=True)
    a = run_sum_ensemble(model, 500, 300, seed=11)
    b = run_sum_ensemble(model, 500, 300, seed=11)
    assert np.array_equal(a, b)
    c = run_sum_ensemble(model, 500, 300, seed=12)
    assert not np.array_equal(a, c)


def test_sum_ensemble_offset_chunks_recompose():
    """Replica offsets reproduce slices of the contiguous run, which is
    what makes worker splits content-neutral."""
    model = iid_pareto(1.5, symmetric=True)
    full = run_sum_ensemble(model, 200, 300, seed=21)
    parts = [run_sum_ensemble(model, 200, 100, seed=21, rep_offset=off)
             for off in (0, 100, 200)]
    assert np.array_equal(full, np.concatenate(parts))


def test_single_run_matches_ensemble_entry():
    model = iid_pareto(1.5, symmetric=True)
    one = run_sum(model, 100, seed=3)
    ens = run_sum_ensemble(model, 100, 1, seed=3)
    assert one == ens[0]


def test_pareto_tail_weights_are_exact():
    model = iid_pareto(1.5, c=2.0, symmetric=True)
    assert model.tail.alpha == 1.5
    assert model.tail.c_plus == model.tail.c_minus
    # P(psi > lambda) = c / lambda**alpha per side by construction
    sums = run_sum_ensemble(model, 1, 200_000, seed=8)
    lam = 10.0
    frac = float(np.mean(sums > lam))
    expect = model.tail.c_plus / lam ** 1.5
    sigma = math.sqrt(expect * (1.0 - expect) / sums.size)
    assert abs(frac - expect) <= 4.0 * sigma


def test_reciprocal_models_have_unit_index():
    one_sided = iid_reciprocal(symmetric=False)
    sym = iid_reciprocal(symmetric=True)
    assert one_sided.tail.alpha == 1.0
    assert one_sided.tail.c_minus == 0.0
    assert sym.tail.c_plus == sym.tail.c_minus


def test_time_change_estimate_near_unit_scale():
    model = bz.chain_model()
    est = time_change_estimate(model, 10 ** 5, t=1.0, seed=5)
    assert abs(est - 1.0) <= 0.01


def test_centering_one_sided_unit_index_is_log():
    model = iid_reciprocal(symmetric=False)
    for N in (1e2, 1e4, 1e6):
        res = centering_c_N(model, N)
        assert res.method == "quadrature"
        assert abs(res.value / math.log(N) - 1.0) <= 1e-12


def test_centering_symmetric_models_vanish():
    sym = iid_reciprocal(symmetric=True)
    assert abs(centering_c_N(sym, 1e4).value) <= 1e-10
    assert abs(centering_c_N(bz.chain_model(), 1e4).value) <= 1e-10


def test_weight_spec_moments():
    const = WeightSpec("constant")
    expo = WeightSpec("exponential")
    assert const.mean == 1.0 and expo.mean == 1.0
    assert const.alpha_moment(1.5) == 1.0
    assert abs(expo.alpha_moment(1.5) - math.gamma(2.5)) <= 1e-15
    with pytest.raises(DomainError):
        WeightSpec("uniform")


def test_weighted_sum_ensemble_deterministic():
    model = iid_pareto(1.5, symmetric=True)
    w = WeightSpec("exponential")
    a = run_weighted_sum_ensemble(model, 300, 1.0, w, 200, seed=14)
    b = run_weighted_sum_ensemble(model, 300, 1.0, w, 200, seed=14)
    assert np.array_equal(a, b)
    assert a.shape == (200,)


def test_constant_weight_matches_plain_sum_in_law():
    """With unit weights and one term the weighted sum is the bare
    observable, so the two ensembles must agree as distributions."""
    from scipy.stats import ks_2samp

    model = iid_pareto(1.5, symmetric=True)
    w = WeightSpec("constant")
    weighted = run_weighted_sum_ensemble(model, 0, 0.5, w, 20_000, seed=9)
    plain = run_sum_ensemble(model, 1, 20_000, seed=10)
    assert ks_2samp(weighted, plain).pvalue > 0.01


def test_functional_raw_ensemble_counts_track_clock():
    """Scattering events over horizon N t arrive at unit mean rate."""
    model = bz.chain_model()
    integ, counts, bsum = run_functional_raw_ensemble(
        model, 2000, 1.0, 400, seed=31)
    assert integ.shape == counts.shape == bsum.shape == (400,)
    rate = counts.mean() / 2000.0
    se = counts.std(ddof=1) / 2000.0 / math.sqrt(counts.size)
    assert abs(rate - 1.0) <= 4.0 * se + 0.01


def test_constant_model_sums_exactly():
    model = constant_model(value=0.25)
    sums = run_sum_ensemble(model, 64, 5, seed=2)
    assert np.all(sums == 0.25 * 64)


def test_boltzmann_model_contract():
    model = bz.chain_model()
    assert model.mean_psi == 0.0
    assert model.support == (-0.5, 0.5)
    expect = bz.tail_weight()
    assert model.tail.c_plus == expect and model.tail.c_minus == expect
