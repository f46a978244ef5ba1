"""Hot-loop kernels, pure NumPy backend.

Lane-for-lane twin of ``numba_impl``: one xoshiro256++ stream per
replica with the same key derivation, the same per-event uniform
consumption, and the same arithmetic written as vector operations over
lanes.  Lanes that finish early stop advancing their streams (masked
draws), so each replica consumes exactly the sequence it would consume
in the compiled backend.  Results agree with the compiled backend up to
last-bit differences between vector and scalar libm transcendentals.
"""

from __future__ import annotations

import numpy as np

U64 = np.uint64
GOLDEN = U64(0x9E3779B97F4A7C15)
GOLDEN2 = U64((2 * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
GOLDEN3 = U64((3 * 0x9E3779B97F4A7C15) & 0xFFFFFFFFFFFFFFFF)
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

PI = np.pi
FOUR_PI = 4.0 * np.pi
THREE_PI = 3.0 * np.pi
TWELVE_PI = 12.0 * np.pi
TWO_NEG53 = 2.0 ** -53
FCUT = 0.05
CTOL = 1e-13
TINY_K = 2.0 ** -45
U_FLOOR = 2.0 ** -60


# ===== random stream core (vector lanes) =====

def _splitmix64(z):
    z = z + GOLDEN
    z = (z ^ (z >> SH30)) * MIX1
    z = (z ^ (z >> SH27)) * MIX2
    return z ^ (z >> SH31)


def _stream_init(base_key, rep_offset, lanes):
    idx = np.arange(rep_offset, rep_offset + lanes, dtype=np.uint64)
    keys = _splitmix64(U64(base_key) ^ _splitmix64(idx * GOLDEN + ONE64))
    s0 = _splitmix64(keys)
    s1 = _splitmix64(keys + GOLDEN)
    s2 = _splitmix64(keys + GOLDEN2)
    s3 = _splitmix64(keys + GOLDEN3)
    return [s0, s1, s2, s3]


def _rotl(x, k, nk):
    return (x << k) | (x >> nk)


def _advance(s0, s1, s2, s3):
    result = _rotl(s0 + s3, SH23, SH41) + s0
    t = s1 << SH17
    s2 = s2 ^ s0
    s3 = s3 ^ s1
    s1 = s1 ^ s2
    s0 = s0 ^ s3
    s2 = s2 ^ t
    s3 = _rotl(s3, SH45, SH19)
    return result, s0, s1, s2, s3


def _unit_all(st):
    r, st[0], st[1], st[2], st[3] = _advance(st[0], st[1], st[2], st[3])
    return (r >> SH11).astype(np.float64) * TWO_NEG53


def _unit_at(st, idx):
    """Draw uniforms for the given lane indices only, advancing only them."""
    r, a, b, c, d = _advance(st[0][idx], st[1][idx], st[2][idx], st[3][idx])
    st[0][idx] = a
    st[1][idx] = b
    st[2][idx] = c
    st[3][idx] = d
    return (r >> SH11).astype(np.float64) * TWO_NEG53


# ===== momentum chain: inverse-CDF inversion (vector) =====

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


def invert_cdf(u, tbl, which):
    """Vectorized inverse of one component CDF; mirrors the scalar kernel.

    Returns ``(k, s, c)`` with the same one-update trig staleness on the
    fast path as the compiled version.
    """
    u = np.asarray(u, np.float64)
    T = tbl.shape[0] - 1
    pos = u * T
    i = pos.astype(np.int64)
    np.minimum(i, T - 1, out=i)
    w = pos - i
    ti = tbl[i]
    x = ti + (tbl[i + 1] - ti) * w
    lo = tbl[np.maximum(i - 1, 0)].copy()
    hi = tbl[np.minimum(i + 2, T)].copy()

    s = np.sin(PI * x)
    c = np.cos(PI * x)
    fv, dv = _cdf_pdf(which, x, s, c)
    r = fv - u

    fast = dv >= FCUT
    if np.any(fast):
        xf = x[fast] - r[fast] / dv[fast]
        sf = np.sin(PI * xf)
        cf = np.cos(PI * xf)
        f2, d2 = _cdf_pdf(which, xf, sf, cf)
        xf = xf - (f2 - u[fast]) / d2
        x[fast] = xf
        s[fast] = sf
        c[fast] = cf

    slow = np.nonzero(~fast)[0]
    if slow.size:
        xs = x[slow]
        ss_ = s[slow]
        cs_ = c[slow]
        rs = r[slow]
        ds = dv[slow]
        los = lo[slow]
        his = hi[slow]
        us = u[slow]
        live = np.ones(slow.size, bool)
        for _ in range(300):
            up = live & (rs > 0.0)
            dn = live & ~up
            his[up] = xs[up]
            los[dn] = xs[dn]
            live &= np.abs(rs) > CTOL
            if not np.any(live):
                break
            mid = 0.5 * (los + his)
            with np.errstate(divide="ignore", invalid="ignore"):
                xn = np.where(ds > 1e-18, xs - rs / ds, mid)
            bad = (xn <= los) | (xn >= his)
            xn = np.where(bad, mid, xn)
            xs = np.where(live, xn, xs)
            idx = np.nonzero(live)[0]
            sl = np.sin(PI * xs[idx])
            cl = np.cos(PI * xs[idx])
            fl, dl = _cdf_pdf(which, xs[idx], sl, cl)
            ss_[idx] = sl
            cs_[idx] = cl
            rs[idx] = fl - us[idx]
            ds[idx] = dl
        x[slow] = xs
        s[slow] = ss_
        c[slow] = cs_

    z = x == 0.0
    if np.any(z):
        x[z] = TINY_K
        s[z] = np.sin(PI * TINY_K)
        c[z] = np.cos(PI * TINY_K)
    return x, s, c


def _theta(s, c):
    s2 = 2.0 * s * c
    q0 = s2 * s2
    ss = s * s
    q1 = (4.0 / 3.0) * ss * ss
    return q1 / (q0 + q1)


def _psi_t(k, s, c):
    ss = s * s
    cc = c * c
    rate = (4.0 / 3.0) * ss * (1.0 + 2.0 * cc)
    tv = 1.0 / rate
    return PI * tv * np.copysign(c, k), tv


def _invert_mixed(u, pick0, tbl0, tbl1):
    """Componentwise inversion: lanes with ``pick0`` use component 0."""
    k = np.empty_like(u)
    s = np.empty_like(u)
    c = np.empty_like(u)
    i0 = np.nonzero(pick0)[0]
    i1 = np.nonzero(~pick0)[0]
    if i0.size:
        k[i0], s[i0], c[i0] = invert_cdf(u[i0], tbl0, 0)
    if i1.size:
        k[i1], s[i1], c[i1] = invert_cdf(u[i1], tbl1, 1)
    return k, s, c


def _stationary(u_coin, u_inv, tbl0, tbl1):
    return _invert_mixed(u_inv, u_coin < 0.5, tbl0, tbl1)


def _step(u_sel, u_inv, s, c, tbl0, tbl1):
    pick0 = u_sel < _theta(s, c)
    k, s, c = _invert_mixed(u_inv, pick0, tbl0, tbl1)
    delta = (~pick0).astype(np.uint8)
    return k, s, c, delta


# ===== momentum chain kernels =====

def uniform_chunk(base_key, rep_offset, lanes, per_lane):
    st = _stream_init(base_key, rep_offset, lanes)
    out = np.empty((lanes, per_lane), np.float64)
    for j in range(per_lane):
        out[:, j] = _unit_all(st)
    return out.reshape(-1)


def boltz_discrete_sums(base_key, rep_offset, replicas, N, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, replicas)
    u0 = _unit_all(st)
    u1 = _unit_all(st)
    k, s, c = _stationary(u0, u1, tbl0, tbl1)
    acc = np.zeros(replicas, np.float64)
    for _ in range(N):
        ua = _unit_all(st)
        ub = _unit_all(st)
        k, s, c, _d = _step(ua, ub, s, c, tbl0, tbl1)
        psi, _tv = _psi_t(k, s, c)
        acc += psi
    return acc


def boltz_psi0_draws(base_key, rep_offset, lanes, per_lane, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, lanes)
    out = np.empty((lanes, per_lane), np.float64)
    for j in range(per_lane):
        u0 = _unit_all(st)
        u1 = _unit_all(st)
        k, s, c = _stationary(u0, u1, tbl0, tbl1)
        psi, _tv = _psi_t(k, s, c)
        out[:, j] = psi
    return out.reshape(-1)


def qhat_draws(base_key, rep_offset, lanes, per_lane, which, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, lanes)
    out = np.empty((lanes, per_lane), np.float64)
    tbl = tbl0 if which == 0 else tbl1
    for j in range(per_lane):
        u = _unit_all(st)
        k, _s, _c = invert_cdf(u, tbl, which)
        out[:, j] = k
    return out.reshape(-1)


def boltz_one_step(base_key, rep_offset, lanes, per_lane, k0, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, lanes)
    ks = np.empty((lanes, per_lane), np.float64)
    ds = np.empty((lanes, per_lane), np.uint8)
    sk = np.sin(PI * k0)
    ck = np.cos(PI * k0)
    svec = np.full(lanes, sk)
    cvec = np.full(lanes, ck)
    for j in range(per_lane):
        ua = _unit_all(st)
        ub = _unit_all(st)
        k, _s, _c, d = _step(ua, ub, svec, cvec, tbl0, tbl1)
        ks[:, j] = k
        ds[:, j] = d
    return ks.reshape(-1), ds.reshape(-1)


def boltz_coupled_path(base_key, N, tbl0, tbl1):
    st = _stream_init(base_key, 0, 1)
    ks = np.empty(N + 1, np.float64)
    ds = np.empty(N + 1, np.uint8)
    u0 = _unit_all(st)
    u1 = _unit_all(st)
    k, s, c = _stationary(u0, u1, tbl0, tbl1)
    ks[0] = k[0]
    ds[0] = 0
    for n in range(1, N + 1):
        ua = _unit_all(st)
        ub = _unit_all(st)
        k, s, c, d = _step(ua, ub, s, c, tbl0, tbl1)
        ks[n] = k[0]
        ds[n] = d[0]
    return ks, ds


def boltz_blocks(base_key, rep_offset, lanes, per_lane, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, lanes)
    out = np.empty(lanes * per_lane, np.float64)
    u0 = _unit_all(st)
    k, s, c = invert_cdf(u0, tbl0, 0)
    psi, _tv = _psi_t(k, s, c)
    acc = psi.copy()
    emitted = np.zeros(lanes, np.int64)
    while True:
        idx = np.nonzero(emitted < per_lane)[0]
        if idx.size == 0:
            break
        ua = _unit_at(st, idx)
        ub = _unit_at(st, idx)
        kn, sn, cn, d = _step(ua, ub, s[idx], c[idx], tbl0, tbl1)
        k[idx] = kn
        s[idx] = sn
        c[idx] = cn
        psi, _tv = _psi_t(kn, sn, cn)
        regen = idx[d == 0]
        cont = idx[d != 0]
        out[regen * per_lane + emitted[regen]] = acc[regen]
        emitted[regen] += 1
        acc[regen] = psi[d == 0]
        acc[cont] += psi[d != 0]
    return out


def boltz_kappa1(base_key, rep_offset, lanes, per_lane, k0, max_steps, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, lanes)
    out = np.empty(lanes * per_lane, np.int64)
    sk = float(np.sin(PI * k0))
    ck = float(np.cos(PI * k0))
    s = np.full(lanes, sk)
    c = np.full(lanes, ck)
    n = np.zeros(lanes, np.int64)
    runs = np.zeros(lanes, np.int64)
    while True:
        idx = np.nonzero(runs < per_lane)[0]
        if idx.size == 0:
            break
        ua = _unit_at(st, idx)
        ub = _unit_at(st, idx)
        _kn, sn, cn, d = _step(ua, ub, s[idx], c[idx], tbl0, tbl1)
        s[idx] = sn
        c[idx] = cn
        n[idx] += 1
        stop = idx[(d == 0) | (n[idx] >= max_steps)]
        out[stop * per_lane + runs[stop]] = n[stop]
        runs[stop] += 1
        n[stop] = 0
        s[stop] = sk
        c[stop] = ck
    return out


def boltz_time_integrals(base_key, rep_offset, replicas, N, t, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, replicas)
    horizon = N * t
    integ = np.empty(replicas, np.float64)
    ncount = np.zeros(replicas, np.int64)
    bsum = np.zeros(replicas, np.float64)
    u0 = _unit_all(st)
    u1 = _unit_all(st)
    k, s, c = _stationary(u0, u1, tbl0, tbl1)
    tot = np.zeros(replicas, np.float64)
    acc = np.zeros(replicas, np.float64)
    alive = np.arange(replicas)
    while alive.size:
        psi, tv = _psi_t(k[alive], s[alive], c[alive])
        vel = psi / tv
        ut = _unit_at(st, alive)
        tau = -np.log1p(-ut)
        dt = tv * tau
        bsum[alive] += psi * tau
        cross = tot[alive] + dt >= horizon
        done = alive[cross]
        integ[done] = acc[done] + vel[cross] * (horizon - tot[done])
        keep = ~cross
        stay = alive[keep]
        acc[stay] += vel[keep] * dt[keep]
        tot[stay] += dt[keep]
        if stay.size:
            ua = _unit_at(st, stay)
            ub = _unit_at(st, stay)
            kn, sn, cn, _d = _step(ua, ub, s[stay], c[stay], tbl0, tbl1)
            k[stay] = kn
            s[stay] = sn
            c[stay] = cn
            ncount[stay] += 1
        alive = stay
    return integ, ncount, bsum


def boltz_kinetic(base_key, rep_offset, replicas, k0, horizons, tbl0, tbl1):
    st = _stream_init(base_key, rep_offset, replicas)
    H = horizons.shape[0]
    disp = np.empty((replicas, H), np.float64)
    kend = np.empty((replicas, H), np.float64)
    k = np.full(replicas, float(k0))
    s = np.full(replicas, float(np.sin(PI * k0)))
    c = np.full(replicas, float(np.cos(PI * k0)))
    tot = np.zeros(replicas, np.float64)
    acc = np.zeros(replicas, np.float64)
    h = np.zeros(replicas, np.int64)
    alive = np.arange(replicas)
    while alive.size:
        psi, tv = _psi_t(k[alive], s[alive], c[alive])
        vel = psi / tv
        ut = _unit_at(st, alive)
        tau = -np.log1p(-ut)
        dt = tv * tau
        while True:
            hc = np.minimum(h[alive], H - 1)
            crossing = (h[alive] < H) & (tot[alive] + dt >= horizons[hc])
            if not np.any(crossing):
                break
            lanes_c = alive[crossing]
            hh = h[lanes_c]
            disp[lanes_c, hh] = acc[lanes_c] + vel[crossing] * (
                horizons[hh] - tot[lanes_c])
            kend[lanes_c, hh] = k[lanes_c]
            h[lanes_c] += 1
        keep = h[alive] < H
        stay = alive[keep]
        acc[stay] += vel[keep] * dt[keep]
        tot[stay] += dt[keep]
        if stay.size:
            ua = _unit_at(st, stay)
            ub = _unit_at(st, stay)
            kn, sn, cn, _d = _step(ua, ub, s[stay], c[stay], tbl0, tbl1)
            k[stay] = kn
            s[stay] = sn
            c[stay] = cn
        alive = stay
    return disp, kend


# ===== heavy-tailed i.i.d. chain kernels =====

def _psi_quantile(u, inv_alpha, c, kind):
    if kind == 0:
        out = np.empty_like(u)
        m = u >= 0.5
        out[m] = (c / (1.0 - u[m])) ** inv_alpha
        uu = np.maximum(u[~m], U_FLOOR)
        out[~m] = -((c / uu) ** inv_alpha)
        return out
    if kind == 1:
        return (c / (1.0 - u)) ** inv_alpha
    if kind == 2:
        return 1.0 / np.maximum(u, U_FLOOR)
    x = 2.0 * u - 1.0
    x[(x < U_FLOOR) & (x > -U_FLOOR)] = U_FLOOR
    return 1.0 / x


def pareto_sums(base_key, rep_offset, replicas, N, alpha, c, kind):
    inv_alpha = 1.0 / alpha
    st = _stream_init(base_key, rep_offset, replicas)
    _unit_all(st)
    acc = np.zeros(replicas, np.float64)
    for _ in range(N):
        u = _unit_all(st)
        acc += _psi_quantile(u, inv_alpha, c, kind)
    return acc


def pareto_weighted_sums(base_key, rep_offset, replicas, n_terms, alpha, c,
                         kind, weight_kind):
    inv_alpha = 1.0 / alpha
    st = _stream_init(base_key, rep_offset, replicas)
    acc = np.zeros(replicas, np.float64)
    for _ in range(n_terms):
        u = _unit_all(st)
        psi = _psi_quantile(u, inv_alpha, c, kind)
        if weight_kind == 1:
            uw = _unit_all(st)
            psi = psi * (-np.log1p(-uw))
        acc += psi
    return acc


def pareto_psirho_draws(base_key, rep_offset, lanes, per_lane, alpha, c,
                        kind, weight_kind):
    inv_alpha = 1.0 / alpha
    st = _stream_init(base_key, rep_offset, lanes)
    out = np.empty((lanes, per_lane), np.float64)
    for j in range(per_lane):
        u = _unit_all(st)
        psi = _psi_quantile(u, inv_alpha, c, kind)
        if weight_kind == 1:
            uw = _unit_all(st)
            psi = psi * (-np.log1p(-uw))
        out[:, j] = psi
    return out.reshape(-1)
