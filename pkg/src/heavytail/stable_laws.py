"""One-sided-weight stable laws: exponents, sampling, and distribution
functions.

A law in this family is described by a tail index ``alpha`` in (0, 2)
and a pair of nonnegative tail weights ``c_plus, c_minus``: the law's
upper tail satisfies ``P(X > x) ~ c_plus * x**-alpha`` and symmetrically
for the lower tail.  Its characteristic exponent is the integral of
``exp(i xi lam) - 1`` (suitably compensated) against the jump density
``|lam|**(-1-alpha)`` weighted by ``c_minus`` on the negative axis and
``c_plus`` on the positive axis.  Three compensation conventions arise:

* kind "I" for ``alpha < 1``: no compensation;
* kind "II" for ``alpha > 1``: full linear compensation;
* kind "III" for ``alpha = 1``: linear compensation on ``|lam| <= 1``.

``levy_exponent`` evaluates the exponent by adaptive quadrature with
analytic treatment of the singular and oscillatory pieces, and
cross-checks the symmetric case against the closed form.  The exponent
is exactly scale homogeneous: for ``xi > 0``, ``psi(xi) = xi**alpha *
psi(1)`` for kinds I and II, while kind III picks up an explicit
``xi*log(xi)`` correction; ``exponent_curve`` exploits this for cheap
dense evaluation anchored at a single quadrature value.

``sample_stable`` draws variates via the standard trigonometric
representation, and ``StableCDF`` provides distribution-function
evaluation (oscillatory-quadrature inversion of the characteristic
function) with a monotone interpolating table for bulk use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import gamma as gamma_fn

from .errors import DomainError, NumericError

__all__ = [
    "TailSpec",
    "LevyExponent",
    "levy_exponent",
    "exponent_curve",
    "symmetric_exponent_scale",
    "sample_stable",
    "stable_cdf",
    "StableCDF",
]


# ===== parameter containers =====

@dataclass(frozen=True)
class TailSpec:
    """Tail index and one-sided tail weights of a heavy-tailed observable."""

    alpha: float
    c_plus: float
    c_minus: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise DomainError(f"tail index must lie in (0, 2), got {self.alpha}")
        if self.c_plus < 0.0 or self.c_minus < 0.0:
            raise DomainError("tail weights must be nonnegative")
        if self.c_plus + self.c_minus <= 0.0:
            raise DomainError("at least one tail weight must be positive")

    @property
    def total(self) -> float:
        return self.c_plus + self.c_minus

    @property
    def skew(self) -> float:
        """Conventional skewness parameter (c+ - c-)/(c+ + c-)."""
        return (self.c_plus - self.c_minus) / self.total


@dataclass(frozen=True)
class LevyExponent:
    """A characteristic exponent in the three-kind compensation scheme."""

    kind: str
    alpha: float
    c_plus: float
    c_minus: float

    def __post_init__(self):
        if self.kind not in ("I", "II", "III"):
            raise DomainError(f"kind must be 'I', 'II' or 'III', got {self.kind!r}")
        if self.kind == "I" and not (0.0 < self.alpha < 1.0):
            raise DomainError("kind I requires tail index in (0, 1)")
        if self.kind == "II" and not (1.0 < self.alpha < 2.0):
            raise DomainError("kind II requires tail index in (1, 2)")
        if self.kind == "III" and self.alpha != 1.0:
            raise DomainError("kind III requires tail index exactly 1")
        if self.c_plus < 0.0 or self.c_minus < 0.0:
            raise DomainError("tail weights must be nonnegative")
        if self.c_plus + self.c_minus <= 0.0:
            raise DomainError("at least one tail weight must be positive")

    @classmethod
    def from_tail(cls, tail: TailSpec) -> "LevyExponent":
        """The compensation kind is determined by the tail index."""
        if tail.alpha < 1.0:
            kind = "I"
        elif tail.alpha > 1.0:
            kind = "II"
        else:
            kind = "III"
        return cls(kind, tail.alpha, tail.c_plus, tail.c_minus)

    @property
    def tail(self) -> TailSpec:
        return TailSpec(self.alpha, self.c_plus, self.c_minus)


def symmetric_exponent_scale(alpha: float, c: float) -> float:
    """Closed-form modulus of the symmetric exponent at ``xi = 1``.

    For equal weights ``c`` and ``alpha != 1`` the exponent is
    ``-sigma * |xi|**alpha`` with ``sigma = -2 alpha c Gamma(-alpha)
    cos(pi alpha / 2) > 0``; for ``alpha = 1`` it is ``-pi c |xi|``.
    """
    if alpha == 1.0:
        return math.pi * c
    return -2.0 * alpha * c * gamma_fn(-alpha) * math.cos(math.pi * alpha / 2.0)


# ===== exponent quadrature =====

_EPSABS = 1e-11
_LIMIT = 400


def _quad(f, a, b, **kw):
    out = integrate.quad(f, a, b, full_output=1, **kw)
    val, err = out[0], out[1]
    if len(out) > 3 and err > 1e-6:
        raise NumericError(f"quadrature failed: {out[3]}")
    return val, err


def _half_line_integral(kind: str, alpha: float, xi: float) -> tuple[complex, float]:
    """``H(xi)``: the exponent integral over the positive jump axis.

    The integrand near zero is tamed by subtracting the quadratic Taylor
    term analytically; the oscillatory tail over ``[1, inf)`` uses
    Fourier-weighted quadrature plus exact power integrals.  Only
    ``xi > 0`` is needed by callers (``H(-xi) = conj(H(xi))``).
    """
    a1 = 1.0 + alpha

    def cos_rem(x):
        # cos(x) - 1 + x**2/2 without the cancellation that would be
        # amplified by the lam**(-1-alpha) factor near zero
        if abs(x) < 1e-2:
            x2 = x * x
            return x2 * x2 / 24.0 * (1.0 - x2 / 30.0 * (1.0 - x2 / 56.0))
        return math.cos(x) - 1.0 + 0.5 * x * x

    def sin_rem(x):
        if abs(x) < 1e-2:
            x2 = x * x
            return -x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
        return math.sin(x) - x

    def g_re(lam):
        return cos_rem(lam * xi) * lam ** (-a1)

    def g_im(lam):
        return sin_rem(lam * xi) * lam ** (-a1)

    def tail_f(lam):
        return lam ** (-a1)

    re01, e1 = _quad(g_re, 0.0, 1.0, epsabs=_EPSABS, epsrel=1e-12, limit=_LIMIT)
    im01, e2 = _quad(g_im, 0.0, 1.0, epsabs=_EPSABS, epsrel=1e-12, limit=_LIMIT)
    rec, e3 = _quad(tail_f, 1.0, np.inf, weight="cos", wvar=xi, epsabs=_EPSABS)
    ims, e4 = _quad(tail_f, 1.0, np.inf, weight="sin", wvar=xi, epsabs=_EPSABS)

    re = re01 - xi * xi / (2.0 * (2.0 - alpha)) + rec - 1.0 / alpha
    if kind == "I":
        im = im01 + xi / (1.0 - alpha) + ims
    elif kind == "II":
        im = im01 + ims - xi / (alpha - 1.0)
    else:
        im = im01 + ims
    return complex(re, im), e1 + e2 + e3 + e4


def levy_exponent(le: LevyExponent, xi: float) -> complex:
    """Evaluate the characteristic exponent at ``xi`` by quadrature.

    The symmetric case is cross-checked against the closed form; a
    relative disagreement beyond 1e-8 raises ``NumericError``.
    """
    xi = float(xi)
    if xi == 0.0:
        return 0.0 + 0.0j
    ax = abs(xi)
    H, err = _half_line_integral(le.kind, le.alpha, ax)
    pref = 1.0 if le.kind == "III" else le.alpha
    psi_pos = pref * (le.c_plus * H + le.c_minus * H.conjugate())
    psi = psi_pos if xi > 0.0 else psi_pos.conjugate()

    if err > 1e-7 * max(1.0, abs(psi)):
        raise NumericError(
            f"exponent quadrature error estimate {err:.3e} out of tolerance")
    if le.c_plus == le.c_minus:
        closed = -symmetric_exponent_scale(le.alpha, le.c_plus) * ax ** le.alpha
        denom = max(abs(closed), 1e-300)
        if abs(psi.real - closed) / denom > 1e-8 or \
                abs(psi.imag) / denom > 1e-8:
            raise NumericError(
                "symmetric-case cross-check failed: "
                f"quadrature {psi!r} vs closed form {closed!r}")
    return psi


@lru_cache(maxsize=64)
def _anchor(kind: str, alpha: float, c_plus: float, c_minus: float) -> complex:
    return levy_exponent(LevyExponent(kind, alpha, c_plus, c_minus), 1.0)


def exponent_curve(le: LevyExponent, xi) -> np.ndarray:
    """Vectorized exponent via exact scale homogeneity.

    Anchored at the quadrature value ``psi(1)``; for kind III the
    ``xi*log(xi)`` correction carries the weight imbalance.  Agrees with
    ``levy_exponent`` to the quadrature tolerance (asserted in tests).
    """
    xi = np.asarray(xi, np.float64)
    p1 = _anchor(le.kind, le.alpha, le.c_plus, le.c_minus)
    ax = np.abs(xi)
    with np.errstate(divide="ignore", invalid="ignore"):
        if le.kind == "III":
            core = ax * p1 - 1j * (le.c_plus - le.c_minus) * ax * np.log(ax)
        else:
            core = ax ** le.alpha * p1
    out = np.where(xi >= 0.0, core, np.conj(core))
    return np.where(xi == 0.0, 0.0 + 0.0j, out)


# ===== sampling =====

def sample_stable(le: LevyExponent, rng: np.random.Generator, size=None):
    """Draw variates whose characteristic function is ``exp(psi)``.

    Uses the trigonometric exact-simulation representation; the
    parameter mapping from tail weights was derived by matching the
    exponent and is validated distributionally against ``StableCDF`` in
    the test suite rather than trusted blindly.
    """
    scalar = size is None
    n = 1 if scalar else int(size)
    U = rng.uniform(-math.pi / 2.0, math.pi / 2.0, n)
    W = rng.exponential(1.0, n)
    np.maximum(W, 1e-300, out=W)
    alpha = le.alpha
    total = le.c_plus + le.c_minus
    beta = (le.c_plus - le.c_minus) / total

    if le.kind == "III":
        gam = math.pi / 2.0 * total
        delta = (1.0 - np.euler_gamma) * (le.c_plus - le.c_minus)
        half = math.pi / 2.0
        shifted = half + beta * U
        X = (2.0 / math.pi) * (
            shifted * np.tan(U)
            - beta * np.log((half * W * np.cos(U)) / shifted))
        out = gam * X + (2.0 / math.pi) * beta * gam * math.log(gam) + delta
    else:
        gam = (total * gamma_fn(1.0 - alpha) * math.cos(math.pi * alpha / 2.0)) \
            ** (1.0 / alpha)
        tanpa = math.tan(math.pi * alpha / 2.0)
        B = math.atan(beta * tanpa) / alpha
        S = (1.0 + beta * beta * tanpa * tanpa) ** (1.0 / (2.0 * alpha))
        ang = alpha * (U + B)
        X = S * np.sin(ang) / np.cos(U) ** (1.0 / alpha) \
            * (np.cos(U - ang) / W) ** ((1.0 - alpha) / alpha)
        out = gam * X
    return float(out[0]) if scalar else out


# ===== distribution function =====

def _phi_parts(le: LevyExponent, xi: np.ndarray):
    psi = exponent_curve(le, xi)
    mod = np.exp(psi.real)
    return mod * np.cos(psi.imag), mod * np.sin(psi.imag)


def stable_cdf(le: LevyExponent, x: float) -> float:
    """Distribution function by characteristic-function inversion.

    ``F(x) = 1/2 - (1/pi) * int_0^inf Im[exp(-i xi x) phi(xi)] / xi dxi``
    with the integrand cut off once ``|phi|`` falls below 3e-20; the
    strongly oscillatory regime is handled by Fourier-weighted
    quadrature on an interval split after the first cycle.
    """
    x = float(x)
    p1 = _anchor(le.kind, le.alpha, le.c_plus, le.c_minus)
    sigma_r = -p1.real
    cutoff = (45.0 / sigma_r) ** (1.0 / le.alpha)

    def integrand(xi):
        re, im = _phi_parts(le, np.asarray(xi))
        return float((im * math.cos(xi * x) - re * math.sin(xi * x)) / xi)

    cycles = abs(x) * cutoff / (2.0 * math.pi)
    if cycles < 40.0:
        total, err = _quad(integrand, 0.0, cutoff, epsabs=1e-10, epsrel=1e-10,
                           limit=600)
    else:
        split = 2.0 * math.pi / abs(x)
        head, e0 = _quad(integrand, 0.0, split, epsabs=1e-11, epsrel=1e-11,
                         limit=200)

        def f_im(xi):
            re, im = _phi_parts(le, np.asarray(xi))
            return float(im / xi)

        def f_re(xi):
            re, im = _phi_parts(le, np.asarray(xi))
            return float(re / xi)

        ax = abs(x)
        c_part, e1 = _quad(f_im, split, cutoff, weight="cos", wvar=ax,
                           epsabs=1e-11, limit=600)
        s_part, e2 = _quad(f_re, split, cutoff, weight="sin", wvar=ax,
                           epsabs=1e-11, limit=600)
        total = head + c_part - math.copysign(1.0, x) * s_part
        err = e0 + e1 + e2
    if err > 1e-6:
        raise NumericError(f"inversion quadrature error estimate {err:.3e}")
    val = 0.5 - total / math.pi
    return min(1.0, max(0.0, val))


class StableCDF:
    """Bulk distribution-function evaluation with a monotone table.

    Builds a dense node table by direct inversion, interpolates with a
    monotone cubic, and switches to the exact power-law tail asymptotics
    beyond the table.  ``cdf`` and ``ppf`` are vectorized; accuracy in
    the bulk is limited by the node inversion tolerance (about 1e-8).
    """

    def __init__(self, le: LevyExponent, nodes: int = 257, span: float = 400.0,
                 gap: float = 1.5e-3):
        self.le = le
        p1 = _anchor(le.kind, le.alpha, le.c_plus, le.c_minus)
        scale = (-p1.real) ** (1.0 / le.alpha)
        if le.kind == "III":
            center = -(le.c_plus - le.c_minus) * (1.0 - np.euler_gamma)
        else:
            center = 0.0
        j = np.linspace(-1.0, 1.0, nodes)
        xs = center + span * scale * np.sign(j) * (
            np.expm1(4.0 * np.abs(j)) / np.expm1(4.0))
        xs = np.unique(xs)
        fs = np.array([stable_cdf(le, float(v)) for v in xs])
        xs, fs = self._refine(le, xs, fs, gap)
        keep = np.concatenate(([True], np.diff(fs) > 1e-12))
        xs, fs = xs[keep], fs[keep]
        if fs.size < 8:
            raise NumericError("degenerate distribution table")
        self.x_lo, self.x_hi = xs[0], xs[-1]
        self.f_lo, self.f_hi = fs[0], fs[-1]
        self._fwd = PchipInterpolator(xs, fs, extrapolate=False)
        self._inv = PchipInterpolator(fs, xs, extrapolate=False)

    @staticmethod
    def _refine(le, xs, fs, gap, budget: int = 4000, passes: int = 14):
        """Split every cell whose CDF increment exceeds ``gap``.

        Monotone interpolation through exact endpoints errs by at most
        the cell's CDF increment, so this bounds the table error; wide
        cells on one heavy side are split geometrically to converge in
        few passes near a steep support edge.
        """
        xs = list(xs)
        fs = list(fs)
        for _ in range(passes):
            new_x = []
            for i in range(len(xs) - 1):
                if fs[i + 1] - fs[i] <= gap:
                    continue
                a, b = xs[i], xs[i + 1]
                if a * b > 0.0 and max(abs(a), abs(b)) > 4.0 * min(abs(a), abs(b)):
                    mid = math.copysign(math.sqrt(abs(a) * abs(b)), a)
                else:
                    mid = 0.5 * (a + b)
                if mid > a and mid < b:
                    new_x.append(mid)
            if not new_x or len(xs) + len(new_x) > budget:
                break
            new_f = [stable_cdf(le, v) for v in new_x]
            xs = xs + new_x
            fs = fs + new_f
            order = np.argsort(xs)
            xs = [xs[i] for i in order]
            fs = [fs[i] for i in order]
        return np.asarray(xs), np.asarray(fs)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, np.float64)
        out = self._fwd(np.clip(x, self.x_lo, self.x_hi))
        lo = x < self.x_lo
        hi = x > self.x_hi
        if np.any(lo):
            out[lo] = self.le.c_minus * np.abs(x[lo]) ** (-self.le.alpha)
        if np.any(hi):
            out[hi] = 1.0 - self.le.c_plus * x[hi] ** (-self.le.alpha)
        return np.clip(out, 0.0, 1.0)

    def ppf(self, u) -> np.ndarray:
        u = np.asarray(u, np.float64)
        if np.any((u <= 0.0) | (u >= 1.0)):
            raise DomainError("quantile levels must lie strictly in (0, 1)")
        out = self._inv(np.clip(u, self.f_lo, self.f_hi))
        lo = u < self.f_lo
        hi = u > self.f_hi
        if np.any(lo):
            if self.le.c_minus > 0.0:
                out[lo] = -((self.le.c_minus / u[lo]) ** (1.0 / self.le.alpha))
            else:
                out[lo] = self.x_lo
        if np.any(hi):
            if self.le.c_plus > 0.0:
                out[hi] = (self.le.c_plus / (1.0 - u[hi])) ** (1.0 / self.le.alpha)
            else:
                out[hi] = self.x_hi
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Inversion sampling through the table (independent of
        ``sample_stable``, which uses the trigonometric representation)."""
        u = rng.uniform(0.0, 1.0, size)
        eps = 1e-12
        return self.ppf(np.clip(u, eps, 1.0 - eps))
