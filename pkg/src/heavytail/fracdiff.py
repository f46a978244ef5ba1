"""Fractional heat solver and its kinetic Monte Carlo counterpart.

The macroscopic limit of the superdiffusively scaled momentum chain is
a fractional heat equation: densities evolve by the Fourier multiplier
``exp(-D |xi|**(2 a) t)`` with ``a = 3/4`` (stable index 3/2).  This
module solves that equation spectrally on a periodic grid wide enough
to hold the heavy tails, computes the matching diffusivity from the
weighted tail constants of the chain, and Monte Carlos the kinetic
solution ``u(N t, N**(2/3) x, k)`` through the probabilistic
representation: a particle relaxes its momentum through the scattering
chain while advecting at the group velocity, and the initial profile is
read off at the rescaled displaced position.

The two routes meet in ``l2k_error``: the momentum-averaged squared gap
between the kinetic solution and the fractional field, which shrinks as
the scale separation grows.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import boltzmann as _bz
from ._rng import derive_key, role_key
from .errors import DomainError, NumericError, ResolutionError
from .kernels import get_impl
from .stable_laws import (
    LevyExponent,
    TailSpec,
    levy_exponent,
    symmetric_exponent_scale,
)

__all__ = [
    "FracHeatField",
    "KineticInitialData",
    "KineticTable",
    "bump_initial_data",
    "frac_heat_solve",
    "effective_diffusivity",
    "mc_kinetic_solution",
    "mc_kinetic_multi",
    "l2k_error",
    "write_field_csv",
    "write_kinetic_csv",
    "DEFAULT_L",
    "DEFAULT_GRID",
]

DEFAULT_L = 512.0
DEFAULT_GRID = 2 ** 14


@dataclass(frozen=True)
class FracHeatField:
    """Profile on a uniform grid over ``[-L, L)`` at one time."""

    x_grid: np.ndarray
    values: np.ndarray
    t: float
    D: float
    alpha_frac: float = 0.75

    def __post_init__(self):
        if self.x_grid.shape != self.values.shape:
            raise DomainError("grid and values must align")
        if self.t < 0.0 or self.D <= 0.0:
            raise DomainError("need t >= 0 and positive diffusivity")
        if not (0.0 < self.alpha_frac < 1.0):
            raise DomainError("fractional exponent must lie in (0, 1)")

    @property
    def dx(self) -> float:
        return float(self.x_grid[1] - self.x_grid[0])

    def mass(self) -> float:
        return float(np.sum(self.values) * self.dx)

    def at(self, x) -> np.ndarray:
        """Values at grid-aligned probe positions."""
        x = np.atleast_1d(np.asarray(x, np.float64))
        idx = np.rint((x - self.x_grid[0]) / self.dx).astype(np.int64)
        ok = (idx >= 0) & (idx < self.x_grid.size)
        if not np.all(ok):
            raise DomainError("probe outside the solver domain")
        if np.max(np.abs(self.x_grid[idx] - x)) > 1e-9 * max(1.0, self.dx):
            raise DomainError("probe does not sit on the solver grid")
        return self.values[idx]


@dataclass(frozen=True)
class KineticInitialData:
    """Bounded continuous initial profile, compactly supported in x."""

    u0: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support_radius: float
    bound: float

    def __post_init__(self):
        if self.support_radius <= 0.0 or self.bound <= 0.0:
            raise DomainError("support radius and bound must be positive")

    def __call__(self, x, k):
        return np.asarray(self.u0(np.asarray(x, np.float64),
                                  np.asarray(k, np.float64)), np.float64)

    def x_profile(self, x):
        """The profile at momentum zero section (used when the data is
        momentum independent)."""
        x = np.asarray(x, np.float64)
        return self(x, np.zeros_like(x))


def bump_initial_data(radius: float = 8.0) -> KineticInitialData:
    """Smooth compactly supported bump, momentum independent."""

    def u0(x, k):
        x = np.asarray(x, np.float64)
        r = x / radius
        inside = np.abs(r) < 1.0
        out = np.zeros_like(x)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            val = np.where(inside, np.exp(1.0 - 1.0 / np.maximum(1.0 - r * r, 1e-300)), 0.0)
        out[...] = np.where(inside, val, 0.0)
        return out

    return KineticInitialData(u0=u0, support_radius=radius, bound=1.0)


def _forward_fft(values: np.ndarray, x0: float, dx: float):
    n = values.size
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=dx)
    hat = dx * np.exp(-1j * xi * x0) * np.fft.fft(values)
    return xi, hat


def _inverse_fft(hat: np.ndarray, xi: np.ndarray, x0: float, dx: float):
    return np.fft.ifft(hat * np.exp(1j * xi * x0) / dx)


def frac_heat_solve(u0_x, t: float, D: float, L: float = DEFAULT_L,
                    n: int = DEFAULT_GRID,
                    alpha_frac: float = 0.75) -> FracHeatField:
    """Evolve a profile by the fractional heat multiplier.

    ``u0_x`` is a callable evaluated on the grid or an array already on
    it.  The transform pair uses the plane-wave kernel ``exp(-i xi x)``
    forward with the ``1/(2 pi)`` inverse, under which the evolution is
    multiplication by ``exp(-D |xi|**(2 alpha_frac) t)``.  Initial data
    whose spectrum has not decayed below 1e-6 of total energy in the
    top-frequency decile are rejected as unresolved.
    """
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    if n < 64 or n & (n - 1):
        raise DomainError("grid size must be a power of two, at least 64")
    dx = 2.0 * L / n
    grid = -L + dx * np.arange(n)
    if callable(u0_x):
        vals = np.asarray(u0_x(grid), np.float64)
    else:
        vals = np.asarray(u0_x, np.float64)
        if vals.shape != grid.shape:
            raise DomainError("initial array must match the solver grid")
    xi, hat = _forward_fft(vals, grid[0], dx)
    energy = np.abs(hat) ** 2
    total = float(energy.sum())
    if total <= 0.0:
        raise DomainError("initial data is identically zero")
    top = energy[np.abs(xi) >= 0.9 * np.max(np.abs(xi))]
    if float(top.sum()) > 1e-6 * total:
        raise ResolutionError(
            "initial spectrum not resolved: refine the grid or widen the profile")
    mult = np.exp(-D * t * np.abs(xi) ** (2.0 * alpha_frac))
    out = np.real(_inverse_fft(hat * mult, xi, grid[0], dx))
    return FracHeatField(x_grid=grid, values=out, t=t, D=D,
                         alpha_frac=alpha_frac)


def effective_diffusivity(c_plus: Optional[float] = None,
                          c_minus: Optional[float] = None,
                          weight_moment: Optional[float] = None,
                          t_star: float = 1.0,
                          alpha: float = 1.5) -> float:
    """Diffusivity matching the chain's continuous-time limit.

    The limit exponent carries tail constants equal to the observable's
    weights times the alpha-moment of the exponential holding times,
    with the clock run at the mean waiting scale.  The value is
    computed by quadrature of the compensated exponent and must agree
    with the closed-form symmetric scale; disagreement raises, since it
    would mean the quadrature cannot be trusted.
    """
    if c_plus is None:
        c_plus = _bz.tail_weight()
    if c_minus is None:
        c_minus = c_plus
    if weight_moment is None:
        weight_moment = math.gamma(1.0 + alpha)
    if t_star <= 0.0:
        raise DomainError("mean waiting scale must be positive")
    tail = TailSpec(alpha, weight_moment * c_plus, weight_moment * c_minus)
    le = LevyExponent.from_tail(tail)
    d_eff = -float(np.real(levy_exponent(le, 1.0))) / t_star
    if c_plus == c_minus:
        closed = symmetric_exponent_scale(alpha, weight_moment * c_plus) / t_star
        if abs(d_eff - closed) > 1e-8 * closed:
            raise NumericError(
                f"diffusivity quadrature {d_eff} disagrees with closed form {closed}")
    if d_eff <= 0.0:
        raise NumericError("diffusivity must come out positive")
    return d_eff


@dataclass(frozen=True)
class KineticTable:
    """Monte Carlo kinetic solution on a probe grid."""

    x_probes: np.ndarray
    k_probes: np.ndarray
    mean: np.ndarray
    se: np.ndarray
    N: float
    M: int
    t: float

    def __post_init__(self):
        want = (self.x_probes.size, self.k_probes.size)
        if self.mean.shape != want or self.se.shape != want:
            raise DomainError("table shapes must match the probe grids")


def _kinetic_paths(N_list: Sequence[float], t: float, k_probes, M: int,
                   seed: int):
    """Displacements and end momenta per (k-probe, N, path)."""
    impl = get_impl()
    t0, t1 = _bz.inverse_tables()
    horizons = np.asarray([float(N) * t for N in N_list], np.float64)
    order = np.argsort(horizons)
    disp = {}
    kend = {}
    for j, k0 in enumerate(np.asarray(k_probes, np.float64)):
        _bz.validate_momentum(float(k0))
        base = derive_key(role_key(seed, f"kinetic:{j}"))
        d, ke = impl.boltz_kinetic(np.uint64(base), 0, M, float(k0),
                                   horizons[order], t0, t1)
        for pos, idx in enumerate(order):
            disp[(j, idx)] = d[:, pos]
            kend[(j, idx)] = ke[:, pos]
    return disp, kend


def _table_from_paths(u0: KineticInitialData, N: float, t: float,
                      x_probes, k_probes, M: int, disp, kend,
                      n_index: int) -> KineticTable:
    xs = np.asarray(x_probes, np.float64)
    ks = np.asarray(k_probes, np.float64)
    mean = np.empty((xs.size, ks.size))
    se = np.empty((xs.size, ks.size))
    shrink = float(N) ** (-2.0 / 3.0)
    for j in range(ks.size):
        shift = shrink * disp[(j, n_index)]
        k_at = kend[(j, n_index)]
        for i, x in enumerate(xs):
            vals = u0(x + shift, k_at)
            mean[i, j] = float(vals.mean())
            se[i, j] = float(vals.std(ddof=1) / math.sqrt(M))
    return KineticTable(x_probes=xs, k_probes=ks, mean=mean, se=se,
                        N=float(N), M=int(M), t=float(t))


def mc_kinetic_solution(u0: KineticInitialData, N: float, t: float,
                        x_probes, k_probes, M: int,
                        seed: int) -> KineticTable:
    """Monte Carlo estimate of the kinetic solution at one scale.

    Each path starts at the probe momentum, runs the scattering clock
    to ``N t``, and evaluates the initial data at the rescaled displaced
    position and final momentum; paths are shared across the x probes.
    """
    if t < 0.0:
        raise DomainError("time must be nonnegative")
    if M < 2:
        raise DomainError("need at least two paths")
    if t == 0.0:
        xs = np.asarray(x_probes, np.float64)
        ks = np.asarray(k_probes, np.float64)
        mean = np.empty((xs.size, ks.size))
        for j, k0 in enumerate(ks):
            mean[:, j] = u0(xs, np.full(xs.size, k0))
        return KineticTable(x_probes=xs, k_probes=ks, mean=mean,
                            se=np.zeros_like(mean), N=float(N), M=int(M),
                            t=0.0)
    disp, kend = _kinetic_paths([N], t, k_probes, M, seed)
    return _table_from_paths(u0, N, t, x_probes, k_probes, M, disp, kend, 0)


def mc_kinetic_multi(u0: KineticInitialData, N_list: Sequence[float],
                     t: float, x_probes, k_probes, M: int, seed: int):
    """Tables for several scales sharing the same paths.

    The same trajectories are read at every horizon, so comparisons
    across scales see common random numbers rather than independent
    noise.
    """
    if t <= 0.0:
        raise DomainError("time must be positive")
    disp, kend = _kinetic_paths(N_list, t, k_probes, M, seed)
    return {float(N): _table_from_paths(u0, N, t, x_probes, k_probes, M,
                                        disp, kend, idx)
            for idx, N in enumerate(N_list)}


def l2k_error(table: KineticTable, ubar: FracHeatField):
    """Momentum-averaged squared gap to the fractional field, per x.

    Returns ``(errors, standard_errors)`` arrays over the x probes; the
    uncertainty propagates the per-cell Monte Carlo errors through the
    square.
    """
    if abs(table.t - ubar.t) > 1e-12 * max(1.0, ubar.t):
        raise DomainError("kinetic table and field are at different times")
    ref = ubar.at(table.x_probes)
    gap = table.mean - ref[:, None]
    k_count = table.k_probes.size
    err = np.mean(gap * gap, axis=1)
    var_terms = (2.0 * gap * table.se) ** 2 + 2.0 * table.se ** 4
    se = np.sqrt(np.sum(var_terms, axis=1)) / k_count
    return err, se


def write_field_csv(field: FracHeatField, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value"])
        for x, v in zip(field.x_grid, field.values):
            w.writerow([f"{x:.17g}", f"{v:.17g}"])


def write_kinetic_csv(table: KineticTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "k", "mean", "se", "N", "M"])
        for i, x in enumerate(table.x_probes):
            for j, k in enumerate(table.k_probes):
                w.writerow([f"{x:.17g}", f"{k:.17g}",
                            f"{table.mean[i, j]:.17g}",
                            f"{table.se[i, j]:.17g}",
                            f"{table.N:.17g}", table.M])
