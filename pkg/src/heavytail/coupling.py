"""Regeneration coupling for mixture transition laws.

A transition written as ``theta(x) q(dy) + (1 - theta(x)) Q1(x, dy)``
carries a built-in coupling: at each step flip a ``theta(x)`` coin, and
on success draw the next state from ``q`` regardless of ``x``.  Steps
that use the ``q`` component regenerate the chain, splitting the path
into independent blocks whose sums inherit the one-step tail behaviour.
This module generates coupled trajectories, decomposes additive sums
into regeneration blocks exactly, and estimates the block-tail
constants and the regeneration-moment sum from simulation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import boltzmann as _bz
from ._rng import derive_key, generator, role_key
from .chain_core import ChainModel
from .errors import DomainError
from .kernels import get_impl
from .kernels import numpy_impl as _vec
from .stable_laws import TailSpec

__all__ = [
    "DoeblinSpec",
    "CoupledTrajectory",
    "RegenerationDecomposition",
    "boltzmann_spec",
    "constant_theta_spec",
    "coupled_trajectory",
    "decompose",
    "kappa_spacings",
    "theta_bar_estimate",
    "block_ensemble",
    "block_tail_report",
    "write_block_tail_csv",
    "default_probes",
    "regen_condition_report",
    "first_regeneration_times",
]


@dataclass(frozen=True)
class DoeblinSpec:
    """Mixture decomposition of a transition law.

    ``theta`` maps states to regeneration probabilities in [0, 1];
    ``q_draw(rng, m)`` samples the state-independent component and
    ``q1_step(states, rng)`` the complementary one.  ``q_tail`` records
    the tails of the observable under ``q``.  The optional quantile
    callables mark specs whose components are single-uniform inversions
    (used by the vectorized paths); ``kernel_boltz`` marks the built-in
    scattering chain, which has compiled trajectory kernels.
    """

    theta: Callable[[np.ndarray], np.ndarray]
    q_draw: Callable[[np.random.Generator, int], np.ndarray]
    q1_step: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    q_tail: TailSpec
    name: str = "custom"
    theta_const: Optional[float] = None
    kernel_boltz: bool = False


@dataclass(frozen=True)
class CoupledTrajectory:
    """States with their coupling marks.

    ``deltas[n] = 0`` means step ``n`` used the state-independent
    component; ``deltas[0] = 0`` by convention for the initial state.
    ``psi_values[n]`` is the observable at ``states[n]`` for
    ``n < N``, the terms of the additive sum ``S_N``.
    """

    states: np.ndarray
    deltas: np.ndarray
    psi_values: np.ndarray

    def __post_init__(self):
        if self.states.shape[0] != self.deltas.shape[0]:
            raise DomainError("states and coupling marks must align")
        if self.psi_values.shape[0] != self.states.shape[0] - 1:
            raise DomainError("need one observable value per summed state")

    @property
    def n_steps(self) -> int:
        return self.states.shape[0] - 1

    @property
    def sum_value(self) -> float:
        return math.fsum(self.psi_values)


@dataclass(frozen=True)
class RegenerationDecomposition:
    """Exact split of ``S_N`` into regeneration blocks.

    ``kappas[0] = 0`` and ``kappas[i]`` for ``i >= 1`` are the
    regeneration steps; ``blocks[i]`` sums the observable over
    ``[kappas[i], kappas[i+1])``.  The first block starts from the
    stationary (not the regeneration) law, so independent-block
    statistics must use ``iid_blocks``, which drops it.  ``remainder``
    collects the terms after the last regeneration.
    """

    kappas: np.ndarray
    blocks: np.ndarray
    remainder: float
    m_of_n: int
    sum_value: float

    @property
    def iid_blocks(self) -> np.ndarray:
        return self.blocks[1:]

    def reconstruct(self) -> float:
        return math.fsum(self.blocks) + self.remainder


# ===== spec builders =====

def boltzmann_spec() -> DoeblinSpec:
    """Coupling spec of the built-in scattering chain.

    Both mixture components happen to be state independent there; the
    regeneration component is the one attached to the ``theta`` coin.
    The observable under it has twice the stationary tail weight (its
    density is twice the stationary one near the singular momentum).
    """
    t0, t1 = _bz.inverse_tables()
    c_q = 2.0 * _bz.tail_weight()

    def q_draw(rng, m):
        u = rng.uniform(0.0, 1.0, m)
        out, _s, _c = _vec.invert_cdf(u, t0, 0)
        return out

    def q1_step(states, rng):
        u = rng.uniform(0.0, 1.0, np.asarray(states).shape[0])
        out, _s, _c = _vec.invert_cdf(u, t1, 1)
        return out

    return DoeblinSpec(
        theta=lambda k: np.asarray(_bz.theta(k)),
        q_draw=q_draw,
        q1_step=q1_step,
        q_tail=TailSpec(1.5, c_q, c_q),
        name="boltzmann",
        kernel_boltz=True,
    )


def constant_theta_spec(theta0: float, q_quantile: Callable,
                        q1_quantile: Callable, q_tail: TailSpec,
                        name: str = "constant_theta") -> DoeblinSpec:
    """Spec with a state-free coin and single-uniform components."""
    if not (0.0 <= theta0 <= 1.0):
        raise DomainError("regeneration probability must lie in [0, 1]")

    def q_draw(rng, m):
        return np.asarray(q_quantile(rng.uniform(0.0, 1.0, m)), np.float64)

    def q1_step(states, rng):
        m = np.asarray(states).shape[0]
        return np.asarray(q1_quantile(rng.uniform(0.0, 1.0, m)), np.float64)

    return DoeblinSpec(
        theta=lambda x: np.full(np.asarray(x, np.float64).shape, theta0),
        q_draw=q_draw,
        q1_step=q1_step,
        q_tail=q_tail,
        name=name,
        theta_const=float(theta0),
    )


# ===== trajectory generation =====

def coupled_trajectory(spec: DoeblinSpec, model: ChainModel, N: int,
                       rng) -> CoupledTrajectory:
    """Generate ``X_0..X_N`` with coupling marks.

    ``rng`` is either an integer seed (enables the compiled path for
    the scattering spec) or a ``numpy.random.Generator`` for the
    sequential Python path.
    """
    if N < 1:
        raise DomainError("need at least one step")
    if isinstance(rng, (int, np.integer)):
        if spec.kernel_boltz:
            impl = get_impl()
            t0, t1 = _bz.inverse_tables()
            base = derive_key(role_key(int(rng), "coupling:path"))
            ks, ds = impl.boltz_coupled_path(np.uint64(base), int(N), t0, t1)
            psis = np.asarray(model.psi(ks[:-1]), np.float64)
            return CoupledTrajectory(ks, ds, psis)
        gen = generator(int(rng), "coupling:path")
    else:
        gen = rng

    states = np.empty(N + 1, np.float64)
    deltas = np.empty(N + 1, np.uint8)
    x = np.asarray(model.stationary_draw(gen, 1), np.float64)
    states[0] = x[0]
    deltas[0] = 0
    for n in range(1, N + 1):
        th = float(np.asarray(spec.theta(x)).reshape(-1)[0])
        if gen.uniform() < th:
            x = np.asarray(spec.q_draw(gen, 1), np.float64).reshape(1)
            deltas[n] = 0
        else:
            x = np.asarray(spec.q1_step(x, gen), np.float64).reshape(1)
            deltas[n] = 1
        states[n] = x[0]
    psis = np.asarray(model.psi(states[:-1]), np.float64)
    return CoupledTrajectory(states, deltas, psis)


def decompose(traj: CoupledTrajectory) -> RegenerationDecomposition:
    """Split the trajectory's sum at its regeneration steps.

    The split is exact: summing the blocks and the remainder in order
    reproduces ``S_N`` up to reassociation roundoff.
    """
    n = traj.psi_values.shape[0]
    regen = np.flatnonzero(traj.deltas[1:] == 0).astype(np.int64) + 1
    kappas = np.concatenate((np.zeros(1, np.int64), regen))
    m = regen.shape[0]
    vals = traj.psi_values
    blocks = np.empty(m, np.float64)
    for i in range(m):
        blocks[i] = math.fsum(vals[kappas[i]:kappas[i + 1]])
    remainder = math.fsum(vals[(kappas[m] if m else 0):n])
    return RegenerationDecomposition(
        kappas=kappas,
        blocks=blocks,
        remainder=remainder,
        m_of_n=m,
        sum_value=math.fsum(vals),
    )


def kappa_spacings(decomp: RegenerationDecomposition) -> np.ndarray:
    """Spacings between successive regenerations, skipping the first
    interval (which starts from the stationary law)."""
    return np.diff(decomp.kappas)[1:]


def theta_bar_estimate(spec: DoeblinSpec, model: ChainModel, N: int,
                       seed: int):
    """Fraction of regeneration steps along one trajectory, with its
    binomial standard error."""
    traj = coupled_trajectory(spec, model, N, seed)
    marks = traj.deltas[1:] == 0
    p = float(marks.mean())
    se = math.sqrt(max(p * (1.0 - p), 1e-300) / marks.size)
    return p, se


# ===== block statistics =====

def block_ensemble(spec: DoeblinSpec, model: ChainModel, m_blocks: int,
                   seed: int, rep_offset: int = 0) -> np.ndarray:
    """``m_blocks`` independent regeneration blocks.

    Each block starts from a fresh draw of the regeneration component,
    which is exactly the law of the post-first blocks of a long
    trajectory.
    """
    if m_blocks < 1:
        raise DomainError("need at least one block")
    if spec.kernel_boltz:
        impl = get_impl()
        t0, t1 = _bz.inverse_tables()
        base = derive_key(role_key(seed, "coupling:blocks"))
        lanes = 1024 if m_blocks >= 1024 else m_blocks
        per_lane = -(-m_blocks // lanes)
        out = impl.boltz_blocks(np.uint64(base), rep_offset, lanes, per_lane, t0, t1)
        return out[:m_blocks]
    gen = generator(seed, f"coupling:blocks:{spec.name}", rep_offset)
    psi = model.psi
    theta = spec.theta
    out = np.empty(m_blocks, np.float64)
    alive = np.arange(0, 0)
    lanes = min(m_blocks, 4096)
    produced = 0
    x = np.asarray(spec.q_draw(gen, lanes), np.float64)
    acc = np.asarray(psi(x), np.float64).copy()
    while produced < m_blocks:
        finish = gen.uniform(0.0, 1.0, x.shape[0]) < np.asarray(theta(x))
        n_fin = int(np.count_nonzero(finish))
        if n_fin:
            take = min(n_fin, m_blocks - produced)
            out[produced:produced + take] = acc[finish][:take]
            produced += take
            if produced >= m_blocks:
                break
            fresh = np.asarray(spec.q_draw(gen, n_fin), np.float64)
            x = x.copy()
            acc = acc.copy()
            x[finish] = fresh
            acc[finish] = np.asarray(psi(fresh), np.float64)
            cont = ~finish
            if np.any(cont):
                stepped = np.asarray(spec.q1_step(x[cont], gen), np.float64)
                x[cont] = stepped
                acc[cont] += np.asarray(psi(stepped), np.float64)
        else:
            x = np.asarray(spec.q1_step(x, gen), np.float64)
            acc = acc + np.asarray(psi(x), np.float64)
    return out


@dataclass(frozen=True)
class BlockTailRow:
    lam: float
    alpha_lambda_pos: float
    alpha_lambda_neg: float
    n_exceed_pos: int
    n_exceed_neg: int
    flag: str


def block_tail_report(spec: DoeblinSpec, model: ChainModel, m_blocks: int,
                      lambda_grid: Sequence[float], seed: int):
    """Empirical block-tail constants on a level grid.

    Rows report ``lam**alpha`` times the one-sided exceedance rates of
    the block sums; entries resting on fewer than 100 exceedances are
    flagged low-confidence.
    """
    blocks = block_ensemble(spec, model, m_blocks, seed)
    alpha = spec.q_tail.alpha
    rows = []
    for lam in lambda_grid:
        if lam <= 0.0:
            raise DomainError("tail levels must be positive")
        n_pos = int(np.count_nonzero(blocks > lam))
        n_neg = int(np.count_nonzero(blocks < -lam))
        scale = lam ** alpha / m_blocks
        flag = "ok" if min(n_pos, n_neg) >= 100 else "low-confidence"
        rows.append(BlockTailRow(float(lam), n_pos * scale, n_neg * scale,
                                 n_pos, n_neg, flag))
    return rows


def write_block_tail_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lambda", "alpha_lambda_pos", "alpha_lambda_neg",
                    "n_exceed_pos", "n_exceed_neg", "flag"])
        for r in rows:
            w.writerow([f"{r.lam:.17g}", f"{r.alpha_lambda_pos:.17g}",
                        f"{r.alpha_lambda_neg:.17g}", r.n_exceed_pos,
                        r.n_exceed_neg, r.flag])


# ===== regeneration-moment condition =====

def default_probes(spec: DoeblinSpec, model: ChainModel) -> np.ndarray:
    """Probe states for the sup over starting points: 32 stationary
    quantiles plus, for the scattering chain, 8 momenta approaching the
    singular point (where the regeneration weight vanishes)."""
    if spec.kernel_boltz:
        u = (np.arange(32) + 0.5) / 32.0
        qs = _bz.pi_quantile(u)
        near = np.asarray([2.0 ** -j for j in range(3, 11)])
        return np.concatenate((qs, near))
    gen = generator(0xA5A5, f"coupling:probes:{spec.name}")
    draws = np.sort(np.asarray(spec.q_draw(gen, 4096), np.float64))
    idx = (np.linspace(0.0, 1.0, 34)[1:-1] * (draws.size - 1)).astype(int)
    return draws[idx]


def first_regeneration_times(spec: DoeblinSpec, model: ChainModel,
                             x0: float, runs: int, max_steps: int,
                             seed: int, probe_index: int = 0) -> np.ndarray:
    """Sampled first regeneration steps from a fixed start."""
    if spec.kernel_boltz:
        impl = get_impl()
        t0, t1 = _bz.inverse_tables()
        base = derive_key(role_key(seed, "coupling:kappa1"))
        lanes = min(runs, 1024)
        per_lane = -(-runs // lanes)
        out = impl.boltz_kappa1(np.uint64(base), probe_index * lanes, lanes, per_lane,
                                float(x0), int(max_steps), t0, t1)
        return out[:runs]
    gen = generator(seed, f"coupling:kappa1:{spec.name}", probe_index)
    out = np.empty(runs, np.int64)
    x = np.full(runs, float(x0))
    kappa = np.zeros(runs, np.int64)
    alive = np.ones(runs, bool)
    for n in range(1, max_steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        th = np.asarray(spec.theta(x[idx]))
        hit = gen.uniform(0.0, 1.0, idx.size) < th
        kappa[idx[hit]] = n
        alive[idx[hit]] = False
        stay = idx[~hit]
        if stay.size:
            x[stay] = np.asarray(spec.q1_step(x[stay], gen), np.float64)
    kappa[alive] = max_steps + 1
    out[:] = kappa
    return out


@dataclass(frozen=True)
class RegenConditionReport:
    """Simulation estimate of the weighted regeneration-moment sum.

    ``total`` is ``sum over n of n**(1 + alpha)`` times the largest
    estimated survival probability over the probe set; being built from
    finitely many starts, it is a lower bound for the sup over all
    starts.  ``survival[p, n-1]`` estimates ``P(kappa_1 >= n)`` from
    probe ``p``; ``tail_ratios`` tracks the decay of the binding
    survival curve.  Decay is only judged where both neighbouring terms
    rest on at least 100 surviving runs (the same variance-control
    floor as the tail reports); ``ratios_judged`` counts how many
    ratios past step ten met that floor.
    """

    total: float
    alpha: float
    n_max: int
    probes: np.ndarray
    survival: np.ndarray
    binding_probe: int
    tail_ratios: np.ndarray
    geometric_beyond: bool
    ratios_judged: int = 0
    note: str = field(default="lower bound over a finite probe set")


def regen_condition_report(spec: DoeblinSpec, model: ChainModel, n_max: int,
                           x_probes, seed: int,
                           runs_per_probe: int = 20000) -> RegenConditionReport:
    probes = np.asarray(x_probes, np.float64)
    surv = np.empty((probes.size, n_max))
    ns = np.arange(1, n_max + 1)
    for p, x0 in enumerate(probes):
        kappa = first_regeneration_times(spec, model, float(x0),
                                         runs_per_probe, 4 * n_max,
                                         seed, probe_index=p)
        surv[p] = np.mean(kappa[None, :] >= ns[:, None], axis=1)
    alpha = spec.q_tail.alpha
    sup_curve = surv.max(axis=0)
    total = float(np.sum(ns ** (1.0 + alpha) * sup_curve))
    binding = int(np.argmax(surv.sum(axis=1)))
    terms = ns ** (1.0 + alpha) * sup_curve
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = terms[1:] / terms[:-1]
    counts = sup_curve * runs_per_probe
    supported = (counts[:-1] >= 100.0) & (counts[1:] >= 100.0)
    judged = supported[10:] & np.isfinite(ratios[10:]) & (terms[:-1][10:] > 0)
    beyond = ratios[10:][judged]
    geometric = bool(beyond.size == 0 or np.all(beyond < 1.0))
    return RegenConditionReport(
        total=total,
        alpha=alpha,
        n_max=n_max,
        probes=probes,
        survival=surv,
        binding_probe=binding,
        tail_ratios=ratios,
        geometric_beyond=geometric,
        ratios_judged=int(np.count_nonzero(judged)),
    )
