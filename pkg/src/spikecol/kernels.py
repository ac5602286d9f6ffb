"""Hot inner loops: clock-driven LIF integration and nearest-neighbour pairing.

Each kernel exists twice: a loop-level version compiled by numba and a
vectorised numpy twin. ``simulate`` and ``pair_stdp`` dispatch on the active
backend (see ``spikecol._accel``); both twins are importable directly so the
benchmark and the cross-backend tests can call either one.

Exponential factors are tabulated by the caller and passed in, so the two
backends do the same multiply/add sequence and agree bit-for-bit.
"""
import numpy as np

from ._accel import HAS_NUMBA, jit


def _simulate_loops(W, ext, noise, tau, res, u_rest, u_reset, u_th, i_bg, dt, u0, spiked0):
    T, N = ext.shape
    has_noise = noise.shape[0] > 0
    u = u0.copy()
    raster = np.zeros((T, N), dtype=np.bool_)
    prev = spiked0.copy()
    syn = np.zeros(N)
    fault = -1
    for t in range(T):
        for j in range(N):
            syn[j] = 0.0
        for i in range(N):
            if prev[i]:
                for j in range(N):
                    syn[j] += W[i, j]
        for j in range(N):
            cur = i_bg[j] + ext[t, j]
            if has_noise:
                cur = cur + noise[t, j]
            cur = cur + syn[j]
            v = u[j] + (dt / tau[j]) * (-(u[j] - u_rest[j]) + res[j] * cur)
            if not np.isfinite(v):
                fault = t
                return raster, u, fault
            if v >= u_th[j]:
                raster[t, j] = True
                u[j] = u_reset[j]
            elif v < u_reset[j]:
                u[j] = u_reset[j]
            else:
                u[j] = v
        for j in range(N):
            prev[j] = raster[t, j]
    return raster, u, fault


def _simulate_numpy(W, ext, noise, tau, res, u_rest, u_reset, u_th, i_bg, dt, u0, spiked0):
    T, N = ext.shape
    has_noise = noise.shape[0] > 0
    u = u0.copy()
    raster = np.zeros((T, N), dtype=np.bool_)
    prev = spiked0.copy()
    rate = dt / tau
    for t in range(T):
        active = np.flatnonzero(prev)
        syn = W[active].sum(axis=0) if active.size else np.zeros(N)
        cur = i_bg + ext[t]
        if has_noise:
            cur = cur + noise[t]
        cur = cur + syn
        v = u + rate * (-(u - u_rest) + res * cur)
        if not np.all(np.isfinite(v)):
            return raster, u, t
        fired = v >= u_th
        raster[t] = fired
        u = np.where(fired, u_reset, np.maximum(v, u_reset))
        prev = fired
    return raster, u, -1


def _pair_loops(pre, post, ltp_table, ltd_table, decay_table, a_plus, a_minus):
    T, n_pre = pre.shape
    n_post = post.shape[1]
    dw = np.zeros((n_pre, n_post))
    last_pre = np.full(n_pre, -1, dtype=np.int64)
    last_post = np.full(n_post, -1, dtype=np.int64)

    # first pass: the step of the last pair to form fixes the trace reference time
    t_last = -1
    seen_pre = False
    seen_post = False
    for t in range(T):
        any_pre = False
        any_post = False
        for i in range(n_pre):
            if pre[t, i]:
                any_pre = True
                break
        for j in range(n_post):
            if post[t, j]:
                any_post = True
                break
        if (any_post and seen_pre) or (any_pre and seen_post):
            t_last = t
        seen_pre = seen_pre or any_pre
        seen_post = seen_post or any_post
    if t_last < 0:
        return dw, t_last

    for t in range(t_last + 1):
        d = decay_table[t_last - t]
        for j in range(n_post):
            if post[t, j]:
                for i in range(n_pre):
                    if last_pre[i] >= 0:
                        dw[i, j] += a_plus * ltp_table[t - last_pre[i]] * d
        for i in range(n_pre):
            if pre[t, i]:
                for j in range(n_post):
                    if last_post[j] >= 0:
                        dw[i, j] += -a_minus * ltd_table[t - last_post[j]] * d
        for i in range(n_pre):
            if pre[t, i]:
                last_pre[i] = t
        for j in range(n_post):
            if post[t, j]:
                last_post[j] = t
    return dw, t_last


def _pair_numpy(pre, post, ltp_table, ltd_table, decay_table, a_plus, a_minus):
    T, n_pre = pre.shape
    n_post = post.shape[1]
    dw = np.zeros((n_pre, n_post))
    any_pre = pre.any(axis=1)
    any_post = post.any(axis=1)
    seen_pre = np.concatenate(([False], np.logical_or.accumulate(any_pre)[:-1]))
    seen_post = np.concatenate(([False], np.logical_or.accumulate(any_post)[:-1]))
    forming = np.flatnonzero((any_post & seen_pre) | (any_pre & seen_post))
    if forming.size == 0:
        return dw, -1
    t_last = int(forming[-1])

    last_pre = np.full(n_pre, -1, dtype=np.int64)
    last_post = np.full(n_post, -1, dtype=np.int64)
    for t in range(t_last + 1):
        d = decay_table[t_last - t]
        post_idx = np.flatnonzero(post[t])
        pre_idx = np.flatnonzero(pre[t])
        if post_idx.size:
            src = np.flatnonzero(last_pre >= 0)
            if src.size:
                f = a_plus * ltp_table[t - last_pre[src]] * d
                dw[np.ix_(src, post_idx)] += f[:, None]
        if pre_idx.size:
            dst = np.flatnonzero(last_post >= 0)
            if dst.size:
                f = -a_minus * ltd_table[t - last_post[dst]] * d
                dw[np.ix_(pre_idx, dst)] += f[None, :]
        last_pre[pre_idx] = t
        last_post[post_idx] = t
    return dw, t_last


simulate_numpy = _simulate_numpy
pair_stdp_numpy = _pair_numpy

if HAS_NUMBA:
    simulate_numba = jit(_simulate_loops)
    pair_stdp_numba = jit(_pair_loops)
    simulate = simulate_numba
    pair_stdp = pair_stdp_numba
else:
    simulate_numba = None
    pair_stdp_numba = None
    simulate = simulate_numpy
    pair_stdp = pair_stdp_numpy
