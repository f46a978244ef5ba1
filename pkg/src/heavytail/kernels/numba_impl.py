"""Hot-loop kernels, numba backend.

Every kernel here has a lane-for-lane twin in ``numpy_impl``; the two
share the per-replica stream derivation (SplitMix64 key, xoshiro256++
state) and consume uniforms in the same order, so the backends produce
identical random streams and matching results up to last-bit libm
differences in transcendental functions.

Replica-structured kernels take ``(base_key, rep_offset, ...)`` and give
replica ``r`` the stream keyed by ``rep_offset + r``.  Batching replicas
across calls or workers therefore cannot change any replica's draw
sequence.

The momentum chain kernels consume a fixed number of uniforms per event
(no rejection): two per discrete step (component selection, inverse-CDF
draw), plus one exponential clock per jump event in continuous time.
Inverse CDF tables for the two mixture components are built once by the
model module and passed in as dense node arrays.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# ===== integer constants (uint64 domain) =====

U64 = np.uint64
GOLDEN = U64(0x9E3779B97F4A7C15)
MIX1 = U64(0xBF58476D1CE4E5B9)
MIX2 = U64(0x94D049BB133111EB)
ONE64 = U64(1)
SH11 = U64(11)
SH17 = U64(17)
SH23 = U64(23)
SH27 = U64(27)
SH30 = U64(30)
SH31 = U64(31)
SH41 = U64(41)
SH45 = U64(45)
SH19 = U64(19)

# ===== float constants =====

PI = np.pi
FOUR_PI = 4.0 * np.pi
THREE_PI = 3.0 * np.pi
TWELVE_PI = 12.0 * np.pi
TWO_NEG53 = 2.0 ** -53
FCUT = 0.05          # density threshold for the certified two-step Newton path
CTOL = 1e-13         # CDF-space inversion tolerance (safeguarded path)
TINY_K = 2.0 ** -45  # replacement for an exactly-zero momentum draw
U_FLOOR = 2.0 ** -60 # floor keeping quantile transforms finite


# ===== random stream core =====

@njit(cache=True, inline="always")
def _splitmix64(z):
    z = z + GOLDEN
    z = (z ^ (z >> SH30)) * MIX1
    z = (z ^ (z >> SH27)) * MIX2
    return z ^ (z >> SH31)


@njit(cache=True, inline="always")
def _replica_key(base, index):
    return _splitmix64(base ^ _splitmix64(U64(index) * GOLDEN + ONE64))


@njit(cache=True, inline="always")
def _stream_init(key):
    s0 = _splitmix64(key)
    s1 = _splitmix64(key + GOLDEN)
    s2 = _splitmix64(key + U64(2) * GOLDEN)
    s3 = _splitmix64(key + U64(3) * GOLDEN)
    return s0, s1, s2, s3


@njit(cache=True, inline="always")
def _rotl(x, k, nk):
    return (x << k) | (x >> nk)


@njit(cache=True, inline="always")
def _next_u64(s0, s1, s2, s3):
    result = _rotl(s0 + s3, SH23, SH41) + s0
    t = s1 << SH17
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = _rotl(s3, SH45, SH19)
    return result, s0, s1, s2, s3


@njit(cache=True, inline="always")
def _unit(s0, s1, s2, s3):
    r, s0, s1, s2, s3 = _next_u64(s0, s1, s2, s3)
    return np.float64(r >> SH11) * TWO_NEG53, s0, s1, s2, s3


@njit(cache=True)
def uniform_chunk(base_key, rep_offset, lanes, per_lane):
    """Raw uniforms, ``per_lane`` sequential draws in each lane stream."""
    out = np.empty(lanes * per_lane, np.float64)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        base = r * per_lane
        for j in range(per_lane):
            u, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            out[base + j] = u
    return out


# ===== momentum chain: inverse-CDF tables and state helpers =====
#
# The two mixture components have closed-form CDFs; with s = sin(pi*x)
# and c = cos(pi*x) every needed quantity follows from double angles:
#   component 0: density 1 - cos(4 pi x),        CDF x + 1/2 - sin(4 pi x)/(4 pi)
#   component 1: density (8/3) sin(pi x)^4,      CDF x + 1/2 - 2 sin(2 pi x)/(3 pi)
#                                                        + sin(4 pi x)/(12 pi)
# Inversion: dense-table initial guess, then two Newton steps wherever
# the density exceeds FCUT (a resolution argument makes that pair of
# steps land within 1e-13 in CDF space), otherwise a bracketed
# Newton/bisection loop to the same tolerance.  Exactly one uniform is
# consumed regardless of the iteration count.


@njit(cache=True, inline="always")
def _cdf_pdf(which, x, s, c):
    s2 = 2.0 * s * c
    c2 = 1.0 - 2.0 * s * s
    s4 = 2.0 * s2 * c2
    if which == 0:
        fval = x + 0.5 - s4 / FOUR_PI
        dval = 1.0 - (1.0 - 2.0 * s2 * s2)
    else:
        fval = x + 0.5 - 2.0 * s2 / THREE_PI + s4 / TWELVE_PI
        ss = s * s
        dval = (8.0 / 3.0) * ss * ss
    return fval, dval


@njit(cache=True)
def _invert(u, tbl, which):
    """Map a uniform to a momentum draw of the given component.

    Returns ``(k, s, c)`` where ``s, c`` are sine/cosine of ``pi`` times
    the last Newton iterate that was evaluated; on the fast path they
    trail the returned ``k`` by one update (a relative 1e-10, harmless
    for the rate/weight evaluations they feed).
    """
    T = tbl.shape[0] - 1
    pos = u * T
    i = int(pos)
    if i > T - 1:
        i = T - 1
    w = pos - i
    x = tbl[i] + (tbl[i + 1] - tbl[i]) * w
    ilo = i - 1
    if ilo < 0:
        ilo = 0
    ihi = i + 2
    if ihi > T:
        ihi = T
    lo = tbl[ilo]
    hi = tbl[ihi]

    s = math.sin(PI * x)
    c = math.cos(PI * x)
    fv, dv = _cdf_pdf(which, x, s, c)
    r = fv - u

    if dv >= FCUT:
        x = x - r / dv
        s = math.sin(PI * x)
        c = math.cos(PI * x)
        fv, dv = _cdf_pdf(which, x, s, c)
        x = x - (fv - u) / dv
    else:
        for _ in range(300):
            if r > 0.0:
                hi = x
            else:
                lo = x
            if abs(r) <= CTOL:
                break
            if dv > 1e-18:
                xn = x - r / dv
                if xn <= lo or xn >= hi:
                    xn = 0.5 * (lo + hi)
            else:
                xn = 0.5 * (lo + hi)
            x = xn
            s = math.sin(PI * x)
            c = math.cos(PI * x)
            fv, dv = _cdf_pdf(which, x, s, c)
            r = fv - u

    if x == 0.0:
        x = TINY_K
        s = math.sin(PI * x)
        c = math.cos(PI * x)
    return x, s, c


@njit(cache=True, inline="always")
def _theta(s, c):
    s2 = 2.0 * s * c
    q0 = s2 * s2
    ss = s * s
    q1 = (4.0 / 3.0) * ss * ss
    return q1 / (q0 + q1)


@njit(cache=True, inline="always")
def _psi_t(k, s, c):
    ss = s * s
    cc = c * c
    rate = (4.0 / 3.0) * ss * (1.0 + 2.0 * cc)
    tv = 1.0 / rate
    return PI * tv * math.copysign(c, k), tv


@njit(cache=True, inline="always")
def _stationary(u_coin, u_inv, tbl0, tbl1):
    if u_coin < 0.5:
        return _invert(u_inv, tbl0, 0)
    return _invert(u_inv, tbl1, 1)


@njit(cache=True, inline="always")
def _step(u_sel, u_inv, s, c, tbl0, tbl1):
    if u_sel < _theta(s, c):
        k, s, c = _invert(u_inv, tbl0, 0)
        return k, s, c, 0
    k, s, c = _invert(u_inv, tbl1, 1)
    return k, s, c, 1


# ===== momentum chain kernels =====

@njit(cache=True)
def boltz_discrete_sums(base_key, rep_offset, replicas, N, tbl0, tbl1):
    """Per replica: stationary start, then the sum of the observable
    over steps 1..N of the discrete chain."""
    out = np.empty(replicas, np.float64)
    for r in range(replicas):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        u0, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        u1, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        k, s, c = _stationary(u0, u1, tbl0, tbl1)
        acc = 0.0
        for _ in range(N):
            ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            k, s, c, _d = _step(ua, ub, s, c, tbl0, tbl1)
            psi, _tv = _psi_t(k, s, c)
            acc += psi
        out[r] = acc
    return out


@njit(cache=True)
def boltz_psi0_draws(base_key, rep_offset, lanes, per_lane, tbl0, tbl1):
    """Stationary draws of the observable (no chain steps)."""
    out = np.empty(lanes * per_lane, np.float64)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        base = r * per_lane
        for j in range(per_lane):
            u0, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            u1, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            k, s, c = _stationary(u0, u1, tbl0, tbl1)
            psi, _tv = _psi_t(k, s, c)
            out[base + j] = psi
    return out


@njit(cache=True)
def qhat_draws(base_key, rep_offset, lanes, per_lane, which, tbl0, tbl1):
    """Draws from one normalized mixture component."""
    out = np.empty(lanes * per_lane, np.float64)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        base = r * per_lane
        for j in range(per_lane):
            u, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            if which == 0:
                k, _s, _c = _invert(u, tbl0, 0)
            else:
                k, _s, _c = _invert(u, tbl1, 1)
            out[base + j] = k
    return out


@njit(cache=True)
def boltz_one_step(base_key, rep_offset, lanes, per_lane, k0, tbl0, tbl1):
    """Independent single transitions from a fixed momentum."""
    n = lanes * per_lane
    ks = np.empty(n, np.float64)
    ds = np.empty(n, np.uint8)
    sk = math.sin(PI * k0)
    ck = math.cos(PI * k0)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        base = r * per_lane
        for j in range(per_lane):
            ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            k, _s, _c, d = _step(ua, ub, sk, ck, tbl0, tbl1)
            ks[base + j] = k
            ds[base + j] = d
    return ks, ds


@njit(cache=True)
def boltz_coupled_path(base_key, N, tbl0, tbl1):
    """One trajectory of length N+1 with its coupling marks.

    ``deltas[n] = 0`` records that step ``n`` fired the state-independent
    mixture component; ``deltas[0] = 0`` by convention for the
    stationary initial state.
    """
    ks = np.empty(N + 1, np.float64)
    ds = np.empty(N + 1, np.uint8)
    s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), 0))
    u0, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
    u1, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
    k, s, c = _stationary(u0, u1, tbl0, tbl1)
    ks[0] = k
    ds[0] = 0
    for n in range(1, N + 1):
        ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        k, s, c, d = _step(ua, ub, s, c, tbl0, tbl1)
        ks[n] = k
        ds[n] = d
    return ks, ds


@njit(cache=True)
def boltz_blocks(base_key, rep_offset, lanes, per_lane, tbl0, tbl1):
    """Independent regeneration blocks of the observable.

    Each lane starts at a fresh draw from the state-independent
    component (the distribution of the chain at a regeneration time) and
    emits consecutive block sums; blocks are independent and identically
    distributed across and within lanes.
    """
    out = np.empty(lanes * per_lane, np.float64)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        u0, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        k, s, c = _invert(u0, tbl0, 0)
        psi, _tv = _psi_t(k, s, c)
        acc = psi
        base = r * per_lane
        emitted = 0
        while emitted < per_lane:
            ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            k, s, c, d = _step(ua, ub, s, c, tbl0, tbl1)
            psi, _tv = _psi_t(k, s, c)
            if d == 0:
                out[base + emitted] = acc
                emitted += 1
                acc = psi
            else:
                acc += psi
    return out


@njit(cache=True)
def boltz_kappa1(base_key, rep_offset, lanes, per_lane, k0, max_steps, tbl0, tbl1):
    """First regeneration times from a fixed start, ``per_lane`` runs per lane."""
    out = np.empty(lanes * per_lane, np.int64)
    sk = math.sin(PI * k0)
    ck = math.cos(PI * k0)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        base = r * per_lane
        for j in range(per_lane):
            s = sk
            c = ck
            n = 0
            while True:
                ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
                ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
                _k, s, c, d = _step(ua, ub, s, c, tbl0, tbl1)
                n += 1
                if d == 0 or n >= max_steps:
                    break
            out[base + j] = n
    return out


@njit(cache=True)
def boltz_time_integrals(base_key, rep_offset, replicas, N, t, tbl0, tbl1):
    """Continuous-time functional up to horizon ``N*t`` per replica.

    The jump process holds state ``X_n`` for ``t(X_n) * tau_n`` clock
    units.  Returns, per replica: the integral of the velocity over
    ``[0, N*t]`` (the last partial interval integrated exactly), the
    index of the interval containing the horizon, and the full
    discrete-weighted sum through that index.
    """
    integ = np.empty(replicas, np.float64)
    ncount = np.empty(replicas, np.int64)
    bsum = np.empty(replicas, np.float64)
    horizon = N * t
    for r in range(replicas):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        u0, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        u1, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        k, s, c = _stationary(u0, u1, tbl0, tbl1)
        tot = 0.0
        acc = 0.0
        bacc = 0.0
        n = 0
        while True:
            psi, tv = _psi_t(k, s, c)
            vel = psi / tv
            ut, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            tau = -math.log1p(-ut)
            dt = tv * tau
            bacc += psi * tau
            if tot + dt >= horizon:
                acc += vel * (horizon - tot)
                break
            acc += vel * dt
            tot += dt
            ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            k, s, c, _d = _step(ua, ub, s, c, tbl0, tbl1)
            n += 1
        integ[r] = acc
        ncount[r] = n
        bsum[r] = bacc
    return integ, ncount, bsum


@njit(cache=True)
def boltz_kinetic(base_key, rep_offset, replicas, k0, horizons, tbl0, tbl1):
    """Free-flight displacement checkpoints from a fixed initial momentum.

    ``horizons`` must be sorted ascending.  For each replica and each
    horizon ``T`` the kernel records the exact displacement integral up
    to ``T`` and the momentum at clock time ``T``; a single path serves
    all horizons.
    """
    H = horizons.shape[0]
    disp = np.empty((replicas, H), np.float64)
    kend = np.empty((replicas, H), np.float64)
    for r in range(replicas):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        k = k0
        s = math.sin(PI * k0)
        c = math.cos(PI * k0)
        tot = 0.0
        acc = 0.0
        h = 0
        while True:
            psi, tv = _psi_t(k, s, c)
            vel = psi / tv
            ut, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            tau = -math.log1p(-ut)
            dt = tv * tau
            while h < H and tot + dt >= horizons[h]:
                disp[r, h] = acc + vel * (horizons[h] - tot)
                kend[r, h] = k
                h += 1
            if h == H:
                break
            acc += vel * dt
            tot += dt
            ua, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            ub, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            k, s, c, _d = _step(ua, ub, s, c, tbl0, tbl1)
    return disp, kend


# ===== heavy-tailed i.i.d. chain kernels =====
#
# Quantile transforms of a uniform state.  Kinds:
#   0  symmetric power tail:   psi = (c/(1-u))**(1/a) for u >= 1/2,
#                              else -(c/u)**(1/a)
#   1  one-sided power tail:   psi = (c/(1-u))**(1/a)
#   2  reciprocal, one-sided:  psi = 1/u           (tail index 1, c+ = 1)
#   3  reciprocal, symmetric:  psi = 1/(2u - 1)    (tail index 1, c± = 1/2)


@njit(cache=True, inline="always")
def _psi_quantile(u, inv_alpha, c, kind):
    if kind == 0:
        if u >= 0.5:
            return (c / (1.0 - u)) ** inv_alpha
        uu = u
        if uu < U_FLOOR:
            uu = U_FLOOR
        return -((c / uu) ** inv_alpha)
    if kind == 1:
        return (c / (1.0 - u)) ** inv_alpha
    if kind == 2:
        uu = u
        if uu < U_FLOOR:
            uu = U_FLOOR
        return 1.0 / uu
    x = 2.0 * u - 1.0
    if x < U_FLOOR and x > -U_FLOOR:
        x = U_FLOOR
    return 1.0 / x


@njit(cache=True)
def pareto_sums(base_key, rep_offset, replicas, N, alpha, c, kind):
    """Per replica: sum of the observable over steps 1..N (the initial
    state is drawn and discarded, matching the discrete-sum convention)."""
    inv_alpha = 1.0 / alpha
    out = np.empty(replicas, np.float64)
    for r in range(replicas):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        u, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
        acc = 0.0
        for _ in range(N):
            u, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            acc += _psi_quantile(u, inv_alpha, c, kind)
        out[r] = acc
    return out


@njit(cache=True)
def pareto_weighted_sums(base_key, rep_offset, replicas, n_terms, alpha, c,
                         kind, weight_kind):
    """Per replica: sum over terms 0..n_terms-1 of observable times weight.

    ``weight_kind``: 0 constant one, 1 independent unit-mean exponential.
    """
    inv_alpha = 1.0 / alpha
    out = np.empty(replicas, np.float64)
    for r in range(replicas):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        acc = 0.0
        for _ in range(n_terms):
            u, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            psi = _psi_quantile(u, inv_alpha, c, kind)
            if weight_kind == 1:
                uw, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
                psi *= -math.log1p(-uw)
            acc += psi
        out[r] = acc
    return out


@njit(cache=True)
def pareto_psirho_draws(base_key, rep_offset, lanes, per_lane, alpha, c,
                        kind, weight_kind):
    """Single weighted-observable draws for tail diagnostics."""
    inv_alpha = 1.0 / alpha
    out = np.empty(lanes * per_lane, np.float64)
    for r in range(lanes):
        s0, s1, s2, s3 = _stream_init(_replica_key(U64(base_key), rep_offset + r))
        base = r * per_lane
        for j in range(per_lane):
            u, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
            psi = _psi_quantile(u, inv_alpha, c, kind)
            if weight_kind == 1:
                uw, s0, s1, s2, s3 = _unit(s0, s1, s2, s3)
                psi *= -math.log1p(-uw)
            out[base + j] = psi
    return out
