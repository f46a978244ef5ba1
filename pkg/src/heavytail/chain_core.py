"""Generic Markov chain interface and additive-functional runners.

A :class:`ChainModel` bundles everything the runners need: a stationary
sampler, a one-step transition, the heavy-tailed observable ``psi`` with
its :class:`~heavytail.stable_laws.TailSpec`, and the waiting-time scale
``t(x)`` that turns the discrete chain into a jump process (state ``X_n``
is held for ``t(X_n)`` times a unit exponential).  Models backed by a
compiled kernel carry a kernel kind id and run through the active
backend; anything else runs through the Python callables, which are
vectorized over replicas wherever the model allows it.

Runners:

* ``run_sum``: the additive functional ``sum_{n=1..N} psi(X_n)``;
* ``run_weighted_sum``: ``sum_{n=0..floor(N t)} psi(X_n) rho_n`` with
  i.i.d. weights described by a :class:`WeightSpec`;
* ``run_functional``: the continuous-time functional
  ``N**(-1/alpha) * int_0^{N t} v(X(s)) ds`` with ``v = psi / t``;
* ``time_change_estimate``: the jump count fraction ``n(N t) / N``;
* ``centering_c_N``: the truncated stationary mean
  ``int psi 1[|psi| <= N] dpi`` by quadrature (Monte Carlo fallback).

Reproducibility: every runner is addressed by an integer seed, streams
are derived per replica, and batching never changes a replica's draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from . import _rng
from .errors import DomainError, NumericError, SingularStateError
from .kernels import get_impl
from .stable_laws import TailSpec

__all__ = [
    "ChainModel",
    "Trajectory",
    "WeightSpec",
    "CenteringResult",
    "run_sum",
    "run_sum_ensemble",
    "run_weighted_sum",
    "run_weighted_sum_ensemble",
    "run_functional",
    "run_functional_raw_ensemble",
    "time_change_estimate",
    "run_path",
    "centering_c_N",
    "iid_pareto",
    "iid_reciprocal",
    "doeblin_mixture",
    "constant_model",
]

# Kernel kind ids, matching the backend implementations.
KIND_NONE = -1
KIND_PARETO_SYM = 0
KIND_PARETO_ONE = 1
KIND_RECIP_ONE = 2
KIND_RECIP_SYM = 3
KIND_BOLTZ = 4

_CHUNK = 65536  # fixed vector-chunk width for Python-path ensembles


@dataclass(frozen=True)
class ChainModel:
    """A stationary Markov chain with a heavy-tailed observable."""

    name: str
    tail: TailSpec
    support: tuple
    stationary_draw: Callable[[np.random.Generator, int], np.ndarray]
    step: Callable[[np.ndarray, np.random.Generator], np.ndarray]
    psi: Callable[[np.ndarray], np.ndarray]
    waiting_scale: Callable[[np.ndarray], np.ndarray]
    t_star: float = 1.0
    pi_density: Optional[Callable] = None
    p_density: Optional[Callable] = None
    mean_psi: Optional[float] = None
    psi_breakpoints: Optional[Callable] = None
    kernel_kind: int = KIND_NONE
    kernel_alpha: float = 0.0
    kernel_c: float = 0.0
    kernel_tables: Optional[tuple] = None

    def __post_init__(self):
        if self.t_star <= 0.0:
            raise DomainError("mean waiting scale must be positive")


@dataclass(frozen=True)
class Trajectory:
    """A simulated path with the observable evaluated along it."""

    states: np.ndarray
    psi_values: np.ndarray

    def __post_init__(self):
        if self.states.shape != self.psi_values.shape:
            raise DomainError("states and observable values must align")

    def __len__(self):
        return self.states.shape[0]


@dataclass(frozen=True)
class WeightSpec:
    """I.i.d. nonnegative weights multiplying the observable.

    ``kind`` is ``"constant"`` (weight one) or ``"exponential"`` (unit
    mean).  ``alpha_moment`` is the weight moment ``E[rho**alpha]``
    entering the weighted limit's tail weights.
    """

    kind: str = "constant"

    def __post_init__(self):
        if self.kind not in ("constant", "exponential"):
            raise DomainError(f"unknown weight kind {self.kind!r}")

    @property
    def mean(self) -> float:
        return 1.0

    def alpha_moment(self, alpha: float) -> float:
        if self.kind == "constant":
            return 1.0
        return math.gamma(1.0 + alpha)

    @property
    def kernel_code(self) -> int:
        return 0 if self.kind == "constant" else 1


@dataclass(frozen=True)
class CenteringResult:
    """Truncated stationary mean with provenance and error estimate."""

    value: float
    se: float
    method: str

    def __float__(self):
        return self.value


# ===== seeds =====

def _base_key(seed: int, role: str) -> int:
    return _rng.role_key(seed, role)


# ===== ensemble runners =====

def run_sum_ensemble(model: ChainModel, N: int, replicas: int, seed: int,
                     rep_offset: int = 0) -> np.ndarray:
    """Independent replicas of the additive functional ``S_N``."""
    if N < 0 or replicas <= 0:
        raise DomainError("need N >= 0 and replicas > 0")
    key = _base_key(seed, f"sum:{model.name}:{N}")
    impl = get_impl()
    if model.kernel_kind == KIND_BOLTZ:
        t0, t1 = model.kernel_tables
        return impl.boltz_discrete_sums(np.uint64(key), rep_offset, replicas, N, t0, t1)
    if model.kernel_kind in (KIND_PARETO_SYM, KIND_PARETO_ONE,
                             KIND_RECIP_ONE, KIND_RECIP_SYM):
        return impl.pareto_sums(np.uint64(key), rep_offset, replicas, N,
                                model.kernel_alpha, model.kernel_c,
                                model.kernel_kind)
    return _python_sum_ensemble(model, N, replicas, seed, rep_offset)


def _python_sum_ensemble(model, N, replicas, seed, rep_offset):
    out = np.empty(replicas, np.float64)
    done = 0
    while done < replicas:
        m = min(_CHUNK, replicas - done)
        chunk_index = (rep_offset + done) // _CHUNK
        gen = _rng.generator(seed, f"pysum:{model.name}:{N}", chunk_index)
        states = model.stationary_draw(gen, m)
        acc = np.zeros(m, np.float64)
        for _ in range(N):
            states = model.step(states, gen)
            acc += model.psi(states)
        out[done:done + m] = acc
        done += m
    return out


def run_sum(model: ChainModel, N: int, seed: int) -> float:
    """One replica of ``S_N = sum_{n=1..N} psi(X_n)``, ``X_0`` stationary."""
    return float(run_sum_ensemble(model, N, 1, seed)[0])


def run_weighted_sum_ensemble(model: ChainModel, N: int, t: float,
                              weights: WeightSpec, replicas: int, seed: int,
                              rep_offset: int = 0) -> np.ndarray:
    """Replicas of ``sum_{n=0..floor(N t)} psi(X_n) rho_n``."""
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    n_terms = int(math.floor(N * t)) + 1
    key = _base_key(seed, f"wsum:{model.name}:{N}:{t}:{weights.kind}")
    impl = get_impl()
    if model.kernel_kind in (KIND_PARETO_SYM, KIND_PARETO_ONE,
                             KIND_RECIP_ONE, KIND_RECIP_SYM):
        return impl.pareto_weighted_sums(np.uint64(key), rep_offset, replicas, n_terms,
                                         model.kernel_alpha, model.kernel_c,
                                         model.kernel_kind,
                                         weights.kernel_code)
    out = np.empty(replicas, np.float64)
    done = 0
    while done < replicas:
        m = min(_CHUNK, replicas - done)
        chunk_index = (rep_offset + done) // _CHUNK
        gen = _rng.generator(seed, f"pywsum:{model.name}:{N}:{t}:{weights.kind}",
                             chunk_index)
        states = model.stationary_draw(gen, m)
        acc = model.psi(states) * _draw_weights(weights, gen, m)
        for _ in range(n_terms - 1):
            states = model.step(states, gen)
            acc += model.psi(states) * _draw_weights(weights, gen, m)
        out[done:done + m] = acc
        done += m
    return out


def _draw_weights(weights: WeightSpec, gen, m):
    if weights.kind == "constant":
        return np.ones(m)
    return gen.exponential(1.0, m)


def run_weighted_sum(model: ChainModel, N: int, t: float,
                     weights: WeightSpec, seed: int) -> float:
    return float(run_weighted_sum_ensemble(model, N, t, weights, 1, seed)[0])


def run_functional_raw_ensemble(model: ChainModel, N: int, t: float,
                                replicas: int, seed: int,
                                rep_offset: int = 0):
    """Raw continuous-time outputs per replica.

    Returns ``(integral, jumps, discrete_sum)``: the velocity integral
    over ``[0, N t]`` with the final partial holding interval integrated
    exactly, the number of completed jumps before the horizon, and the
    weighted discrete sum through the straddling interval's index.
    """
    if t <= 0.0:
        raise DomainError("horizon must be positive")
    key = _base_key(seed, f"func:{model.name}:{N}:{t}")
    impl = get_impl()
    if model.kernel_kind == KIND_BOLTZ:
        t0, t1 = model.kernel_tables
        return impl.boltz_time_integrals(np.uint64(key), rep_offset, replicas, N, t, t0, t1)
    integ = np.empty(replicas, np.float64)
    ncount = np.empty(replicas, np.int64)
    bsum = np.empty(replicas, np.float64)
    horizon = N * t
    for r in range(replicas):
        gen = _rng.generator(seed, f"pyfunc:{model.name}:{N}:{t}",
                             rep_offset + r)
        x = model.stationary_draw(gen, 1)
        tot = 0.0
        acc = 0.0
        bacc = 0.0
        n = 0
        while True:
            psi = float(model.psi(x)[0])
            ts = float(model.waiting_scale(x)[0])
            tau = gen.exponential(1.0)
            dt = ts * tau
            bacc += psi * tau
            vel = psi / ts
            if tot + dt >= horizon:
                acc += vel * (horizon - tot)
                break
            acc += vel * dt
            tot += dt
            x = model.step(x, gen)
            n += 1
        integ[r] = acc
        ncount[r] = n
        bsum[r] = bacc
    return integ, ncount, bsum


def run_functional(model: ChainModel, N: int, t: float, seed: int) -> float:
    """``Y_N(t) = N**(-1/alpha) * int_0^{N t} v(X(s)) ds``."""
    integ, _n, _b = run_functional_raw_ensemble(model, N, t, 1, seed)
    return float(integ[0]) * N ** (-1.0 / model.tail.alpha)


def time_change_estimate(model: ChainModel, N: int, t: float, seed: int) -> float:
    """``n(N t) / N``: the fraction of jumps completed by clock time ``N t``.

    Converges to ``t / t_star`` as ``N`` grows.
    """
    _integ, ncount, _b = run_functional_raw_ensemble(model, N, t, 1, seed)
    return float(ncount[0]) / N


def run_path(model: ChainModel, N: int, seed: int) -> Trajectory:
    """Simulate ``X_0..X_N`` and evaluate the observable along the path."""
    gen = _rng.generator(seed, f"path:{model.name}:{N}")
    states = np.empty(N + 1, np.float64)
    x = model.stationary_draw(gen, 1)
    states[0] = x[0]
    for n in range(1, N + 1):
        x = model.step(x, gen)
        states[n] = x[0]
    return Trajectory(states=states, psi_values=model.psi(states))


# ===== truncated centering =====

def centering_c_N(model: ChainModel, N: float) -> CenteringResult:
    """``c_N = int psi(x) 1[|psi(x)| <= N] pi(dx)``.

    Quadrature when the stationary density is available, with the
    truncation boundary located through the model's level-set helper (or
    a dense scan); otherwise a flagged Monte Carlo estimate.
    """
    if N <= 0:
        raise DomainError("truncation level must be positive")
    if model.pi_density is not None:
        lo, hi = model.support

        def f(x):
            xx = np.asarray([x])
            try:
                p = float(model.psi(xx)[0])
            except SingularStateError:
                # isolated poles carry no mass, and the truncation already
                # kills a neighbourhood of them
                return 0.0
            if abs(p) > N:
                return 0.0
            return p * float(model.pi_density(xx)[0])

        pts = _truncation_points(model, N)
        inner = [p for p in pts if lo < p < hi]
        val, err = integrate.quad(f, lo, hi, points=inner, limit=300,
                                  epsabs=1e-12, epsrel=1e-11)
        return CenteringResult(value=val, se=err, method="quadrature")

    # Monte Carlo fallback, flagged by its method tag and standard error.
    gen = _rng.generator(0xC0FFEE, f"centering:{model.name}:{N}")
    total = 0.0
    total_sq = 0.0
    draws = 10 ** 7
    done = 0
    while done < draws:
        m = min(_CHUNK * 4, draws - done)
        x = model.stationary_draw(gen, m)
        p = model.psi(x)
        p = np.where(np.abs(p) <= N, p, 0.0)
        total += float(p.sum())
        total_sq += float((p * p).sum())
        done += m
    mean = total / draws
    var = max(total_sq / draws - mean * mean, 0.0)
    return CenteringResult(value=mean, se=math.sqrt(var / draws), method="mc")


def _truncation_points(model: ChainModel, N: float):
    if model.psi_breakpoints is not None:
        return list(model.psi_breakpoints(N))
    lo, hi = model.support
    xs = np.linspace(lo, hi, 20001)[1:-1]
    vals = np.abs(model.psi(xs)) - N
    sign_change = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    return [0.5 * (xs[i] + xs[i + 1]) for i in sign_change]


# ===== built-in models =====

def _pareto_psi(u, inv_alpha, c, symmetric):
    u = np.asarray(u, np.float64)
    if symmetric:
        out = np.empty_like(u)
        m = u >= 0.5
        out[m] = (c / (1.0 - u[m])) ** inv_alpha
        uu = np.maximum(u[~m], 2.0 ** -60)
        out[~m] = -((c / uu) ** inv_alpha)
        return out
    return (c / (1.0 - u)) ** inv_alpha


def iid_pareto(alpha: float, c: float = 1.0, symmetric: bool = True) -> ChainModel:
    """The i.i.d. chain whose observable has an exact power tail.

    The state is uniform on (0, 1); the observable is the quantile
    transform with ``P(psi > lam) = c lam**-alpha`` exactly beyond the
    cutoff (split evenly over both signs when symmetric).  Since states
    are independent, every correlation-sensitive statistic has a clean
    reference behaviour, which is what makes this the workhorse
    calibration model.
    """
    if not (0.0 < alpha < 2.0):
        raise DomainError("tail index must lie in (0, 2)")
    if c <= 0.0:
        raise DomainError("tail weight must be positive")
    inv_alpha = 1.0 / alpha
    if symmetric:
        tail = TailSpec(alpha, c / 1.0, c / 1.0)
        kind = KIND_PARETO_SYM
        mean_psi = 0.0 if alpha > 1.0 else None
        name = f"iid_pareto_sym_a{alpha:g}_c{c:g}"
    else:
        tail = TailSpec(alpha, c, 0.0)
        kind = KIND_PARETO_ONE
        mean_psi = None
        if alpha > 1.0:
            # E psi = int_0^1 (c/(1-u))**(1/a) du = c**(1/a) * a/(a-1)
            mean_psi = c ** inv_alpha * alpha / (alpha - 1.0)
        name = f"iid_pareto_one_a{alpha:g}_c{c:g}"

    def psi(x):
        return _pareto_psi(x, inv_alpha, c, symmetric)

    def breakpoints(level):
        cut = c / level ** alpha
        if symmetric:
            return [min(cut, 0.5), max(1.0 - cut, 0.5)]
        return [max(1.0 - cut, 0.0)]

    return ChainModel(
        name=name,
        tail=tail,
        support=(0.0, 1.0),
        stationary_draw=lambda gen, m: gen.uniform(0.0, 1.0, m),
        step=lambda x, gen: gen.uniform(0.0, 1.0, x.shape[0]),
        psi=psi,
        waiting_scale=lambda x: np.ones_like(np.asarray(x, np.float64)),
        t_star=1.0,
        pi_density=lambda x: np.ones_like(np.asarray(x, np.float64)),
        p_density=lambda x, y: np.ones_like(np.asarray(x, np.float64) * np.asarray(y, np.float64)),
        mean_psi=mean_psi,
        psi_breakpoints=breakpoints,
        kernel_kind=kind,
        kernel_alpha=alpha,
        kernel_c=c,
    )


def iid_reciprocal(symmetric: bool = False) -> ChainModel:
    """Tail-index-one i.i.d. chains with reciprocal observables.

    One-sided: state uniform on (0, 1), ``psi = 1/x`` (tail weight 1);
    its truncated centering is exactly ``log N``.  Symmetric: state
    uniform on (-1, 1), ``psi = 1/x`` (tail weights 1/2 each side) with
    centering identically zero.
    """
    if symmetric:
        tail = TailSpec(1.0, 0.5, 0.5)

        def draw(gen, m):
            return gen.uniform(-1.0, 1.0, m)

        def psi(x):
            x = np.asarray(x, np.float64)
            guard = np.where(np.abs(x) < 2.0 ** -60, 2.0 ** -60, x)
            return 1.0 / guard

        def breakpoints(level):
            return [-1.0 / level, 1.0 / level]

        return ChainModel(
            name="iid_recip_sym",
            tail=tail,
            support=(-1.0, 1.0),
            stationary_draw=draw,
            step=lambda x, gen: draw(gen, x.shape[0]),
            psi=psi,
            waiting_scale=lambda x: np.ones_like(np.asarray(x, np.float64)),
            pi_density=lambda x: np.full_like(np.asarray(x, np.float64), 0.5),
            p_density=lambda x, y: np.ones_like(np.asarray(x, np.float64) * np.asarray(y, np.float64)),
            mean_psi=0.0,
            psi_breakpoints=breakpoints,
            kernel_kind=KIND_RECIP_SYM,
            kernel_alpha=1.0,
            kernel_c=0.5,
        )

    tail = TailSpec(1.0, 1.0, 0.0)

    def psi_one(x):
        x = np.asarray(x, np.float64)
        return 1.0 / np.maximum(x, 2.0 ** -60)

    return ChainModel(
        name="iid_recip_one",
        tail=tail,
        support=(0.0, 1.0),
        stationary_draw=lambda gen, m: gen.uniform(0.0, 1.0, m),
        step=lambda x, gen: gen.uniform(0.0, 1.0, x.shape[0]),
        psi=psi_one,
        waiting_scale=lambda x: np.ones_like(np.asarray(x, np.float64)),
        pi_density=lambda x: np.ones_like(np.asarray(x, np.float64)),
        p_density=lambda x, y: np.ones_like(np.asarray(x, np.float64) * np.asarray(y, np.float64)),
        mean_psi=None,
        psi_breakpoints=lambda level: [1.0 / level],
        kernel_kind=KIND_RECIP_ONE,
        kernel_alpha=1.0,
        kernel_c=1.0,
    )


def doeblin_mixture(theta0: float, q_quantile: Callable, q1_quantile: Callable,
                    q_tail: TailSpec, name: str = "doeblin_mixture") -> ChainModel:
    """State-independent mixture chain with a constant regeneration weight.

    Each step draws the next state from the heavy component's quantile
    ``q_quantile`` with probability ``theta0``, else from ``q1_quantile``
    (which should be light tailed).  The stationary law is that mixture,
    so its tail weights are ``theta0`` times the heavy component's, and
    the regeneration-time spacing is exactly geometric with success
    probability ``theta0``.  The observable is the identity.
    """
    if not (0.0 < theta0 < 1.0):
        raise DomainError("mixture weight must lie strictly in (0, 1)")
    tail = TailSpec(q_tail.alpha, theta0 * q_tail.c_plus, theta0 * q_tail.c_minus)

    def draw(gen, m):
        coin = gen.uniform(0.0, 1.0, m)
        u = gen.uniform(0.0, 1.0, m)
        out = np.empty(m, np.float64)
        heavy = coin < theta0
        out[heavy] = q_quantile(u[heavy])
        out[~heavy] = q1_quantile(u[~heavy])
        return out

    return ChainModel(
        name=name,
        tail=tail,
        support=(-np.inf, np.inf),
        stationary_draw=draw,
        step=lambda x, gen: draw(gen, x.shape[0]),
        psi=lambda x: np.asarray(x, np.float64),
        waiting_scale=lambda x: np.ones_like(np.asarray(x, np.float64)),
        mean_psi=None,
        kernel_kind=KIND_NONE,
    )


def constant_model(value: float = 0.0, t_value: float = 1.0) -> ChainModel:
    """Degenerate single-state chain; useful as a trivial fixture."""
    return ChainModel(
        name=f"constant_{value:g}",
        tail=TailSpec(1.5, 1.0, 1.0),
        support=(0.0, 1.0),
        stationary_draw=lambda gen, m: np.full(m, 0.5),
        step=lambda x, gen: x,
        psi=lambda x: np.full_like(np.asarray(x, np.float64), value),
        waiting_scale=lambda x: np.full_like(np.asarray(x, np.float64), t_value),
        t_star=t_value,
        mean_psi=value,
        kernel_kind=KIND_NONE,
    )
