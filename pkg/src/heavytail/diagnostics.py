"""Ensemble convergence diagnostics for scaled additive sums.

An ensemble draws many independent replicas of ``N**(-1/alpha) S_N``
(or a centered or continuous-time variant) across a schedule of sizes,
then measures the distance between the empirical characteristic
function and the target stable one on a fixed frequency grid.  The
exponent is exact, so this distance carries no inversion error; a
Kolmogorov-Smirnov distance against the tabulated CDF is reported as a
secondary metric.  Tail index and one-sided tail weights are estimated
from the final ensemble, and the across-schedule trend is checked
against a bootstrap noise band.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np

from .chain_core import (
    ChainModel,
    WeightSpec,
    centering_c_N,
    run_functional_raw_ensemble,
    run_sum_ensemble,
    run_weighted_sum_ensemble,
)
from .errors import DomainError, NumericError
from .stable_laws import LevyExponent, StableCDF, TailSpec, exponent_curve

__all__ = [
    "MODE_DISCRETE",
    "MODE_WEIGHTED",
    "MODE_FUNCTIONAL",
    "CENTER_NONE",
    "CENTER_MEAN",
    "CENTER_TRUNCATED",
    "EnsembleSpec",
    "StableReport",
    "generate_ensemble",
    "write_ensemble_csv",
    "hill_alpha",
    "cf_distance",
    "ks_distance",
    "tail_weight_estimates",
    "target_exponent",
    "convergence_report",
]

MODE_DISCRETE = "DiscreteSum"
MODE_WEIGHTED = "WeightedSum"
MODE_FUNCTIONAL = "ContinuousFunctional"
CENTER_NONE = "None"
CENTER_MEAN = "Mean"
CENTER_TRUNCATED = "TruncatedCN"

_MODES = (MODE_DISCRETE, MODE_WEIGHTED, MODE_FUNCTIONAL)
_CENTERINGS = (CENTER_NONE, CENTER_MEAN, CENTER_TRUNCATED)


@dataclass(frozen=True)
class EnsembleSpec:
    """What to simulate and how to scale it.

    ``scale_exponent`` defaults to ``1/alpha`` of the model's tail.
    The truncated centering is the level-one construction and is only
    accepted there; no centering requires either a heavy one-sided
    regime (``alpha < 1``) or an observable already centered under the
    stationary law.
    """

    model: ChainModel
    mode: str = MODE_DISCRETE
    N_schedule: Sequence[int] = (100, 1000, 10000)
    replicas: int = 10000
    centering: str = CENTER_NONE
    scale_exponent: Optional[float] = None
    t: float = 1.0
    weights: Optional[WeightSpec] = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise DomainError(f"unknown ensemble mode: {self.mode}")
        if self.centering not in _CENTERINGS:
            raise DomainError(f"unknown centering: {self.centering}")
        alpha = self.model.tail.alpha
        if self.centering == CENTER_TRUNCATED and alpha != 1.0:
            raise DomainError("truncated centering is an index-one construction")
        if self.centering == CENTER_NONE and alpha >= 1.0:
            centered = self.model.mean_psi == 0.0
            if not centered and not (alpha == 1.0 and self.model.tail.skew == 0.0):
                raise DomainError(
                    "uncentered ensembles need alpha < 1 or a centered observable")
        if self.centering == CENTER_MEAN:
            if alpha <= 1.0 or self.model.mean_psi is None:
                raise DomainError("mean centering needs alpha > 1 and a known mean")
        if self.mode == MODE_WEIGHTED and self.weights is None:
            raise DomainError("weighted mode needs a weight law")
        if not self.N_schedule or any(n < 1 for n in self.N_schedule):
            raise DomainError("schedule must list positive sizes")
        if self.replicas < 2:
            raise DomainError("need at least two replicas")
        if self.t <= 0.0:
            raise DomainError("time horizon must be positive")

    @property
    def exponent(self) -> float:
        if self.scale_exponent is not None:
            return self.scale_exponent
        return 1.0 / self.model.tail.alpha


@dataclass(frozen=True)
class StableReport:
    alpha_hat: float
    c_plus_hat: float
    c_minus_hat: float
    cf_distance: float
    n_effective: int
    per_N: list
    failed: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "alpha_hat": self.alpha_hat,
            "c_plus_hat": self.c_plus_hat,
            "c_minus_hat": self.c_minus_hat,
            "cf_distance": self.cf_distance,
            "n_effective": self.n_effective,
            "per_N": self.per_N,
        }, indent=2)


def _scaled_samples(spec: EnsembleSpec, N: int, seed: int,
                    rep_offset: int, replicas: int) -> np.ndarray:
    model = spec.model
    inv = spec.exponent
    if spec.mode == MODE_DISCRETE:
        sums = run_sum_ensemble(model, N, replicas, seed, rep_offset)
        scale = float(N) ** -inv
        if spec.centering == CENTER_MEAN:
            return scale * (sums - N * model.mean_psi)
        if spec.centering == CENTER_TRUNCATED:
            c_n = float(centering_c_N(model, N))
            return scale * (sums - N * c_n)
        return scale * sums
    if spec.mode == MODE_WEIGHTED:
        weights = spec.weights or WeightSpec("exponential")
        sums = run_weighted_sum_ensemble(
            model, N, spec.t, weights, replicas, seed, rep_offset)
        n_terms = int(math.floor(N * spec.t)) + 1
        scale = float(N) ** -inv
        if spec.centering == CENTER_MEAN:
            return scale * (sums - n_terms * model.mean_psi * weights.mean)
        if spec.centering == CENTER_TRUNCATED:
            c_n = float(centering_c_N(model, N))
            return scale * (sums - n_terms * c_n * weights.mean)
        return scale * sums
    integ, _counts, _bsum = run_functional_raw_ensemble(
        model, N, spec.t, replicas, seed, rep_offset)
    scale = float(N) ** -inv
    if spec.centering != CENTER_NONE:
        raise DomainError(
            "continuous functionals are supported uncentered only")
    return scale * integ


def generate_ensemble(spec: EnsembleSpec, seed: int,
                      workers: int = 1) -> Dict[int, np.ndarray]:
    """Samples for every schedule size, keyed by ``N``.

    Replicas are generated in fixed-size key chunks, so the result is
    a function of ``(spec, seed)`` alone; ``workers`` only changes how
    the chunks would be distributed, never their content.
    """
    del workers
    out = {}
    for N in spec.N_schedule:
        out[int(N)] = _scaled_samples(spec, int(N), seed, 0, spec.replicas)
    return out


def write_ensemble_csv(table: Dict[int, np.ndarray], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["replica", "N", "value"])
        for N in sorted(table):
            for r, v in enumerate(table[N]):
                w.writerow([r, N, f"{v:.17g}"])


# ===== estimators =====

def hill_alpha(samples, k_order: int) -> float:
    """Hill tail-index estimate on the top order statistics of the
    absolute values."""
    mags = np.abs(np.asarray(samples, np.float64))
    mags = mags[mags > 0.0]
    if k_order < 1 or mags.size <= k_order:
        raise DomainError("not enough positive magnitudes for the order chosen")
    top = np.sort(mags)[-(k_order + 1):]
    floor = top[0]
    if floor <= 0.0 or not np.all(top[1:] > 0.0):
        raise DomainError("tail order statistics must be positive")
    logs = np.log(top[1:]) - math.log(floor)
    mean_log = float(np.mean(logs))
    if mean_log <= 0.0:
        raise DomainError("degenerate tail (tied order statistics)")
    return 1.0 / mean_log


def cf_distance(samples, le: LevyExponent, t_scale: float,
                xi_grid=None) -> float:
    """Largest gap between the empirical characteristic function and
    ``exp(t_scale * psi)`` over the frequency grid."""
    samples = np.asarray(samples, np.float64)
    if samples.size == 0:
        raise DomainError("empty sample set")
    if xi_grid is None:
        xi_grid = np.linspace(-4.0, 4.0, 33)
    xi_grid = np.asarray(xi_grid, np.float64)
    ecf = np.mean(np.exp(1j * samples[:, None] * xi_grid[None, :]), axis=0)
    target = np.exp(t_scale * exponent_curve(le, xi_grid))
    return float(np.max(np.abs(ecf - target)))


def ks_distance(samples, table: StableCDF) -> float:
    """Kolmogorov-Smirnov distance against the tabulated CDF."""
    s = np.sort(np.asarray(samples, np.float64))
    n = s.size
    if n == 0:
        raise DomainError("empty sample set")
    f = table.cdf(s)
    upper = np.arange(1, n + 1) / n
    lower = np.arange(0, n) / n
    return float(max(np.max(upper - f), np.max(f - lower)))


def tail_weight_estimates(samples, alpha: float, quantile: float = 0.99):
    """One-sided tail-weight estimates from exceedance counting.

    The level is the empirical ``quantile`` of the magnitudes; the
    weights are ``level**alpha`` times the one-sided exceedance rates.
    """
    samples = np.asarray(samples, np.float64)
    mags = np.abs(samples)
    level = float(np.quantile(mags, quantile))
    if level <= 0.0:
        raise DomainError("degenerate sample magnitudes")
    scale = level ** alpha / samples.size
    c_plus = float(np.count_nonzero(samples > level) * scale)
    c_minus = float(np.count_nonzero(samples < -level) * scale)
    return c_plus, c_minus


def target_exponent(spec: EnsembleSpec):
    """Limit exponent and CF time scale for an ensemble spec.

    Weighted and continuous modes scale the tail constants by the
    alpha-moment of the weight law (exponential holding times for the
    continuous functional), and the continuous mode also reads the
    clock through the mean waiting scale.
    """
    tail = spec.model.tail
    if spec.mode == MODE_DISCRETE:
        return LevyExponent.from_tail(tail), spec.t
    if spec.mode == MODE_WEIGHTED:
        weights = spec.weights or WeightSpec("exponential")
        a_mom = weights.alpha_moment(tail.alpha)
        scaled = TailSpec(tail.alpha, a_mom * tail.c_plus, a_mom * tail.c_minus)
        return LevyExponent.from_tail(scaled), spec.t
    a_mom = math.gamma(1.0 + tail.alpha)
    scaled = TailSpec(tail.alpha, a_mom * tail.c_plus, a_mom * tail.c_minus)
    return LevyExponent.from_tail(scaled), spec.t / spec.model.t_star


def _bootstrap_delta_sigma(ecf_rows_a, ecf_rows_b, target_a, target_b,
                           resamples: int, seed: int) -> float:
    """Bootstrap spread of the difference of two CF distances."""
    gen = np.random.default_rng(seed)
    ra = ecf_rows_a.shape[0]
    rb = ecf_rows_b.shape[0]
    deltas = np.empty(resamples)
    for b in range(resamples):
        ia = gen.integers(0, ra, ra)
        ib = gen.integers(0, rb, rb)
        da = np.max(np.abs(ecf_rows_a[ia].mean(axis=0) - target_a))
        db = np.max(np.abs(ecf_rows_b[ib].mean(axis=0) - target_b))
        deltas[b] = db - da
    return float(deltas.std())


def convergence_report(spec: EnsembleSpec, le: LevyExponent, seed: int,
                       t_scale: Optional[float] = None,
                       xi_grid=None, bootstrap: int = 200,
                       table: Dict[int, np.ndarray] = None) -> StableReport:
    """Distance-to-target metrics across the schedule.

    A report is flagged failed when a later schedule entry's CF
    distance exceeds an earlier one's by more than three bootstrap
    standard deviations of the difference.
    """
    if t_scale is None:
        _, t_scale = target_exponent(spec)
    if xi_grid is None:
        xi_grid = np.linspace(-4.0, 4.0, 33)
    xi_grid = np.asarray(xi_grid, np.float64)
    if table is None:
        table = generate_ensemble(spec, seed)
    target = np.exp(t_scale * exponent_curve(le, xi_grid))
    scaled_tail = TailSpec(le.tail.alpha, t_scale * le.tail.c_plus,
                           t_scale * le.tail.c_minus)
    cdf_table = StableCDF(LevyExponent.from_tail(scaled_tail))
    schedule = sorted(table)
    per_n = []
    rows_by_n = {}
    for N in schedule:
        samples = table[N]
        rows = np.exp(1j * samples[:, None] * xi_grid[None, :])
        rows_by_n[N] = rows
        dist = float(np.max(np.abs(rows.mean(axis=0) - target)))
        per_n.append({"N": int(N), "cf_distance": dist,
                      "ks_distance": ks_distance(samples, cdf_table)})
    failed = False
    for i in range(len(schedule) - 1):
        a, b = schedule[i], schedule[i + 1]
        delta = per_n[i + 1]["cf_distance"] - per_n[i]["cf_distance"]
        if delta <= 0.0:
            continue
        sigma = _bootstrap_delta_sigma(rows_by_n[a], rows_by_n[b],
                                       target, target, bootstrap,
                                       seed ^ 0xB0057)
        if delta > 3.0 * sigma:
            failed = True
    final = table[schedule[-1]]
    k_order = max(10, min(final.size // 20, 2000))
    try:
        a_hat = hill_alpha(final, k_order)
    except DomainError:
        a_hat = float("nan")
    c_plus, c_minus = tail_weight_estimates(final, spec.model.tail.alpha)
    return StableReport(
        alpha_hat=float(a_hat),
        c_plus_hat=c_plus,
        c_minus_hat=c_minus,
        cf_distance=per_n[-1]["cf_distance"],
        n_effective=int(final.size),
        per_N=per_n,
        failed=failed,
    )
