"""Finite-volume transition operators, spectral gaps, and correctors.

Discretizing a chain with a transition density relative to its
stationary law gives a row-stochastic matrix whose left fixed vector
plays the stationary role on the grid.  With that in hand, the additive
machinery becomes linear algebra: the corrector solves
``(I - P) chi = psi`` by a Neumann series certified through its
residual, and a simulated path converts the sum of the observable into
martingale increments ``Z_n = chi(X_n) - (P chi)(X_{n-1})`` plus a
boundary term.

For symmetric transition densities the construction symmetrizes the
flux matrix, so stationarity and detailed balance hold to machine
precision rather than to discretization order.  The gap is measured as
the operator norm on the mean-zero subspace of the stationary-weighted
square-summable space (a singular-value iteration, not an eigenvalue
one, so non-reversible operators are handled correctly).
"""

from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._rng import generator
from .chain_core import ChainModel
from .errors import DomainError, NumericError
from .stable_laws import TailSpec

__all__ = [
    "DiscretizedOperator",
    "PoissonSolution",
    "discretize",
    "from_matrix",
    "spectral_gap",
    "solve_poisson",
    "truncated_poisson",
    "truncated_norm_sup",
    "martingale_decompose",
    "simulate_path",
    "op_to_text",
    "op_from_text",
]

_log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DiscretizedOperator:
    """Row-stochastic matrix with its grid and stationary weights."""

    grid: np.ndarray
    pi_weights: np.ndarray
    matrix: np.ndarray

    def __post_init__(self):
        m = self.grid.shape[0]
        if self.pi_weights.shape != (m,) or self.matrix.shape != (m, m):
            raise DomainError("grid, weights and matrix sizes must agree")

    @property
    def size(self) -> int:
        return self.grid.shape[0]

    def pi_norm(self, f: np.ndarray, power: float = 2.0) -> float:
        return float(np.sum(self.pi_weights * np.abs(f) ** power) ** (1.0 / power))

    def pi_mean(self, f: np.ndarray) -> float:
        return float(self.pi_weights @ f)


@dataclass(frozen=True)
class PoissonSolution:
    """Zero-mean corrector with its certified residual."""

    chi: np.ndarray
    residual: float
    terms_used: int


def discretize(model: ChainModel, M: int) -> DiscretizedOperator:
    """Midpoint finite-volume operator on ``M`` cells of the support.

    Cells where the stationary density vanishes (the singular momentum
    of the scattering chain lands on one when ``M`` is odd) are dropped
    with a log message.  When the transition density is symmetric the
    rows are built from the symmetrized flux matrix, making the weights
    an exact fixed vector with exact detailed balance.
    """
    if M < 16:
        raise DomainError("need at least 16 cells")
    if model.p_density is None or model.pi_density is None:
        raise DomainError(
            "discretization needs both transition and stationary densities")
    lo, hi = model.support
    if not (np.isfinite(lo) and np.isfinite(hi)):
        raise DomainError("discretization needs a bounded support")
    edges = np.linspace(lo, hi, M + 1)
    grid = 0.5 * (edges[:-1] + edges[1:])
    width = (hi - lo) / M
    dens = np.asarray(model.pi_density(grid), np.float64)
    keep = dens > 0.0
    if not np.all(keep):
        _log.info("dropping %d zero-weight cells", int(np.count_nonzero(~keep)))
        grid = grid[keep]
        dens = dens[keep]
    raw = dens * width
    p = np.asarray(model.p_density(grid[:, None], grid[None, :]), np.float64)
    if p.shape != (grid.size, grid.size):
        p = np.broadcast_to(p, (grid.size, grid.size)).copy()
    if np.max(np.abs(p - p.T)) <= 1e-12 * max(1.0, float(np.max(np.abs(p)))):
        flux = raw[:, None] * p * raw[None, :]
        flux = 0.5 * (flux + flux.T)
        row_mass = flux.sum(axis=1)
        if np.any(row_mass <= 0.0):
            raise NumericError("transition density vanishes on a whole row")
        matrix = flux / row_mass[:, None]
        pi = row_mass / row_mass.sum()
        return DiscretizedOperator(grid, pi, matrix)
    rows = p * raw[None, :]
    row_mass = rows.sum(axis=1)
    if np.any(row_mass <= 0.0):
        raise NumericError("transition density vanishes on a whole row")
    matrix = rows / row_mass[:, None]
    pi = raw / raw.sum()
    for _ in range(200000):
        nxt = pi @ matrix
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < 1e-14:
            pi = nxt
            break
        pi = nxt
    return DiscretizedOperator(grid, pi, matrix)


def from_matrix(matrix, grid=None) -> DiscretizedOperator:
    """Wrap an explicit row-stochastic matrix; the stationary weights
    are computed by fixed-point iteration."""
    matrix = np.asarray(matrix, np.float64)
    m = matrix.shape[0]
    if matrix.shape != (m, m):
        raise DomainError("matrix must be square")
    if np.any(matrix < -1e-15) or np.max(np.abs(matrix.sum(axis=1) - 1.0)) > 1e-12:
        raise DomainError("matrix must be row stochastic")
    if grid is None:
        grid = np.arange(m, dtype=np.float64)
    pi = np.full(m, 1.0 / m)
    for _ in range(200000):
        nxt = pi @ matrix
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < 5e-16:
            pi = nxt
            break
        pi = nxt
    return DiscretizedOperator(np.asarray(grid, np.float64), pi, matrix)


def _project_mean_zero(op: DiscretizedOperator, f: np.ndarray) -> np.ndarray:
    return f - op.pi_mean(f)


def spectral_gap(op: DiscretizedOperator, tol: float = 1e-10,
                 max_iter: int = 100000) -> float:
    """Operator norm of the matrix on the mean-zero subspace.

    The matrix is conjugated by the square root of the weights, which
    turns the stationary-weighted norm into the plain Euclidean one;
    the norm on the complement of the constants is then the top
    singular value there, found by power iteration on the normal
    composition with constant-vector deflation.  Being a norm rather
    than an eigenvalue, it is meaningful for non-reversible matrices.
    """
    m = op.size
    P = op.matrix
    if np.all(P == P[0]):
        # state-independent rows map everything to constants, so the
        # norm on the mean-zero subspace vanishes identically
        return 0.0
    d = np.sqrt(op.pi_weights)
    s = d / np.linalg.norm(d)

    def proj(v):
        return v - (s @ v) * s

    def bmat(v):
        return d * (P @ (v / d))

    def bmat_t(v):
        return (P.T @ (v * d)) / d

    gen = np.random.default_rng(0x5EC7)
    v = proj(gen.standard_normal(m))
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    history = []
    prev = np.inf
    settled = 0
    for _ in range(max_iter):
        w = proj(bmat(v))
        sigma = float(np.linalg.norm(w))
        history.append(sigma)
        if sigma < 1e-150:
            return 0.0
        z = proj(bmat_t(w))
        nz = np.linalg.norm(z)
        if nz < 1e-150:
            return sigma
        v = z / nz
        settled = settled + 1 if abs(sigma - prev) < tol else 0
        if settled >= 3:
            return sigma
        prev = sigma
    raise NumericError(
        f"gap iteration did not settle; last values {history[-5:]}")


def solve_poisson(op: DiscretizedOperator, psi_h: np.ndarray,
                  tol: float = 1e-10) -> PoissonSolution:
    """Neumann-series corrector for ``(I - P) chi = psi``.

    Requires centered input and a strict gap; summation stops when the
    current term is provably smaller than the remaining-series budget,
    and the reported residual is measured directly afterwards.
    """
    psi_h = np.asarray(psi_h, np.float64)
    if psi_h.shape != (op.size,):
        raise DomainError("observable vector size mismatch")
    scale = op.pi_norm(psi_h)
    if abs(op.pi_mean(psi_h)) > 1e-10 * max(1.0, scale):
        raise DomainError("observable must be centered under the weights")
    a = spectral_gap(op)
    if a >= 1.0 - 1e-8:
        raise NumericError(f"no usable spectral gap (norm {a})")
    chi = np.zeros(op.size)
    term = _project_mean_zero(op, psi_h.copy())
    terms = 0
    budget = tol * (1.0 - a)
    while terms < 100000:
        chi += term
        terms += 1
        term = _project_mean_zero(op, op.matrix @ term)
        if op.pi_norm(term) < budget:
            centered = _project_mean_zero(op, chi)
            residual = float(np.max(np.abs(
                centered - op.matrix @ centered - psi_h)))
            if residual <= tol:
                return PoissonSolution(chi=centered, residual=residual,
                                       terms_used=terms)
            budget *= 0.1
            if budget < 1e-280:
                break
    raise NumericError("corrector residual stayed above tolerance")


def truncated_poisson(op: DiscretizedOperator, psi_h: np.ndarray,
                      N_trunc: float, tol: float = 1e-10):
    """Corrector for the level-truncated observable.

    Truncation breaks centering, so the level-dependent constant
    ``c_N`` (the stationary mean of the truncated observable) is
    subtracted before solving; it is returned alongside the solution.
    """
    psi_h = np.asarray(psi_h, np.float64)
    if N_trunc <= 0.0:
        raise DomainError("truncation level must be positive")
    trunc = np.where(np.abs(psi_h) <= N_trunc, psi_h, 0.0)
    c_n = op.pi_mean(trunc)
    sol = solve_poisson(op, trunc - c_n, tol)
    return sol, float(c_n)


def truncated_norm_sup(op: DiscretizedOperator, psi_h: np.ndarray,
                       schedule: Sequence[float],
                       alpha_prime: float = 2.0) -> float:
    """Largest ``L^alpha'`` norm of ``P`` applied to the truncated
    observable across a schedule of truncation levels."""
    psi_h = np.asarray(psi_h, np.float64)
    worst = 0.0
    for level in schedule:
        trunc = np.where(np.abs(psi_h) <= level, psi_h, 0.0)
        worst = max(worst, op.pi_norm(op.matrix @ trunc, alpha_prime))
    return worst


def martingale_decompose(op: DiscretizedOperator, sol: PoissonSolution,
                         path: Sequence[int]):
    """Martingale increments along a grid path.

    Returns ``Z_n = chi(X_n) - (P chi)(X_{n-1})`` for each step and the
    boundary term ``(P chi)(X_0) - (P chi)(X_N)``; their sum matches
    the path sum of the observable up to ``N`` times the corrector
    residual.  The conditional mean of ``Z_n`` given the previous state
    is zero by construction.
    """
    idx = np.asarray(path, np.int64)
    if idx.ndim != 1 or idx.size < 2:
        raise DomainError("path must list at least two grid indices")
    if np.any(idx < 0) or np.any(idx >= op.size):
        raise DomainError("path index outside the grid")
    pchi = op.matrix @ sol.chi
    z = sol.chi[idx[1:]] - pchi[idx[:-1]]
    boundary = float(pchi[idx[0]] - pchi[idx[-1]])
    return z, boundary


def simulate_path(op: DiscretizedOperator, N: int, seed: int,
                  replica: int = 0) -> np.ndarray:
    """Stationary-start Markov path of grid indices of length ``N+1``."""
    if N < 1:
        raise DomainError("need at least one step")
    gen = generator(seed, "spectral:path", replica)
    cdf = np.cumsum(op.matrix, axis=1)
    cdf[:, -1] = 1.0
    start_cdf = np.cumsum(op.pi_weights)
    start_cdf[-1] = 1.0
    out = np.empty(N + 1, np.int64)
    out[0] = np.searchsorted(start_cdf, gen.uniform(), side="right")
    for n in range(1, N + 1):
        out[n] = np.searchsorted(cdf[out[n - 1]], gen.uniform(), side="right")
    return out


# ===== text serialization =====

def op_to_text(op: DiscretizedOperator) -> str:
    buf = io.StringIO()
    buf.write(f"{op.size}\n")
    for row in (op.grid, op.pi_weights):
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    for row in op.matrix:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()


def op_from_text(text: str) -> DiscretizedOperator:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    try:
        m = int(lines[0])
        grid = np.asarray([float(v) for v in lines[1].split()])
        pi = np.asarray([float(v) for v in lines[2].split()])
        matrix = np.asarray([[float(v) for v in lines[3 + i].split()]
                             for i in range(m)])
    except (IndexError, ValueError) as exc:
        raise DomainError(f"malformed operator text: {exc}") from exc
    return DiscretizedOperator(grid, pi, matrix)
