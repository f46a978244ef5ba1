"""Regeneration structure: trajectory marks, blocks, and tails."""

import math

import numpy as np
import pytest
from scipy.stats import chisquare

from heavytail import boltzmann as bz
from heavytail import coupling as cpl
from heavytail.errors import DomainError


def synthetic_spec(theta0):
    """Constant regeneration weight over an i.i.d. uniform driver."""
    from heavytail.stable_laws import TailSpec

    return cpl.constant_theta_spec(
        theta0,
        q_quantile=lambda u: u,
        q1_quantile=lambda u: u,
        q_tail=TailSpec(1.5, 1.0, 1.0),
        name="uniform-const")


def synthetic_model():
    from heavytail.chain_core import iid_pareto

    return iid_pareto(1.5, symmetric=True)


def test_boltzmann_spec_tail_doubles_the_weights():
    spec = cpl.boltzmann_spec()
    w = bz.tail_weight()
    assert spec.q_tail.alpha == 1.5
    assert abs(spec.q_tail.c_plus - 2.0 * w) <= 1e-15
    assert abs(spec.q_tail.c_minus - 2.0 * w) <= 1e-15
    assert spec.kernel_boltz


def test_coupled_trajectory_shape_and_determinism():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    a = cpl.coupled_trajectory(spec, model, 512, 77)
    b = cpl.coupled_trajectory(spec, model, 512, 77)
    assert a.states.size == 513 and a.deltas.size == 513
    assert a.deltas[0] == 0
    assert np.array_equal(a.states, b.states)
    assert np.array_equal(a.deltas, b.deltas)
    assert np.all(np.abs(a.states) <= 0.5)


def test_decompose_reconstructs_the_sum():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    traj = cpl.coupled_trajectory(spec, model, 4096, 13)
    decomp = cpl.decompose(traj)
    total = math.fsum(decomp.blocks) + decomp.remainder
    assert abs(total - traj.sum_value) <= 1e-10
    assert abs(decomp.reconstruct() - traj.sum_value) <= 1e-10


def test_decompose_no_regeneration_path():
    spec = synthetic_spec(0.999)
    model = synthetic_model()
    gen = np.random.Generator(np.random.PCG64(4))
    traj = cpl.coupled_trajectory(spec, model, 50, gen)
    # force a mark-free trajectory: every step looks state-dependent
    marks = np.ones_like(traj.deltas)
    marks[0] = 0
    quiet = cpl.CoupledTrajectory(states=traj.states, deltas=marks,
                                  psi_values=traj.psi_values)
    decomp = cpl.decompose(quiet)
    assert decomp.m_of_n == 0
    assert decomp.blocks.size == 0
    assert abs(decomp.remainder - quiet.sum_value) <= 1e-12


def test_theta_fraction_matches_stationary_mean():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    p, se = cpl.theta_bar_estimate(spec, model, 200_000, seed=5)
    assert abs(p - bz.THETA_BAR) <= 4.0 * se


def test_constant_theta_spacings_are_geometric():
    theta0 = 0.3
    spec = synthetic_spec(theta0)
    model = synthetic_model()
    gen = np.random.Generator(np.random.PCG64(6))
    traj = cpl.coupled_trajectory(spec, model, 200_000, gen)
    gaps = cpl.kappa_spacings(cpl.decompose(traj))
    assert gaps.size > 1000
    mean = float(gaps.mean())
    se = float(gaps.std(ddof=1)) / math.sqrt(gaps.size)
    assert abs(mean - 1.0 / theta0) <= 3.0 * se


def test_first_regeneration_times_geometric_law():
    theta0 = 0.45
    spec = synthetic_spec(theta0)
    model = synthetic_model()
    kappa = cpl.first_regeneration_times(spec, model, 0.2, 40_000, 200,
                                         seed=8, probe_index=0)
    assert np.all(kappa >= 1)
    counts = np.bincount(np.minimum(kappa, 12), minlength=13)[1:]
    probs = theta0 * (1.0 - theta0) ** np.arange(11)
    probs = np.append(probs, (1.0 - theta0) ** 11)
    stat = chisquare(counts, probs * kappa.size)
    assert stat.pvalue > 1e-3


def test_block_ensemble_symmetric_mean_zero():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    blocks = cpl.block_ensemble(spec, model, 200_000, seed=10)
    assert blocks.shape == (200_000,)
    se = float(blocks.std(ddof=1)) / math.sqrt(blocks.size)
    assert abs(float(blocks.mean())) <= 4.0 * se


def test_block_ensemble_deterministic_and_offsetable():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    a = cpl.block_ensemble(spec, model, 5000, seed=10)
    b = cpl.block_ensemble(spec, model, 5000, seed=10)
    assert np.array_equal(a, b)


def test_block_tail_report_levels_and_flags():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    rows = cpl.block_tail_report(spec, model, 50_000, [5.0, 2000.0], seed=3)
    assert [r.lam for r in rows] == [5.0, 2000.0]
    assert rows[0].flag == "ok"
    assert rows[1].flag == "low-confidence"
    assert rows[0].n_exceed_pos >= 100
    with pytest.raises(DomainError):
        cpl.block_tail_report(spec, model, 1000, [-1.0], seed=3)


def test_block_tail_csv_format(tmp_path):
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    rows = cpl.block_tail_report(spec, model, 20_000, [5.0], seed=3)
    out = tmp_path / "tails.csv"
    cpl.write_block_tail_csv(rows, out)
    lines = out.read_text().strip().splitlines()
    assert lines[0] == ("lambda,alpha_lambda_pos,alpha_lambda_neg,"
                        "n_exceed_pos,n_exceed_neg,flag")
    assert len(lines) == 2


def test_default_probes_cover_singularity_scales():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    probes = cpl.default_probes(spec, model)
    assert probes.size == 40
    for j in range(3, 11):
        assert np.any(np.isclose(probes, 2.0 ** -j))


def test_regen_condition_report_fields():
    spec = cpl.boltzmann_spec()
    model = bz.chain_model()
    probes = cpl.default_probes(spec, model)[::5]
    rep = cpl.regen_condition_report(spec, model, n_max=15, x_probes=probes,
                                     seed=9, runs_per_probe=4000)
    assert rep.total > 0.0 and np.isfinite(rep.total)
    assert rep.alpha == 1.5
    assert rep.survival.shape == (probes.size, 15)
    assert 0 <= rep.binding_probe < probes.size
    assert "lower bound" in rep.note
    assert rep.geometric_beyond
