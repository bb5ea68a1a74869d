"""Compiled numerical kernels plus the index tables they consume.

All kernels operate on the canonical flat layout (K, M) with M = (N-1)^d in
lexicographic order.  Reductions accumulate sequentially in component-major
lexicographic order, so every diagnostic is bitwise reproducible; the fused
run loop reuses exactly these kernels, which keeps long runs bitwise equal to
composing the single-step operations.
"""
from __future__ import annotations

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# index tables (plain numpy; built once per grid)
# ---------------------------------------------------------------------------


def build_tables(d: int, n: int):
    """Strides, per-axis coordinates, transverse face indices and face gathers.

    Returns (strides, coord, tface, face_lo_idx, face_hi_idx) where for axis a
    and flat point p: coord[a, p] is the 0-based coordinate, tface[a, p] the
    lexicographic rank among the other axes, and face_lo_idx[a] / face_hi_idx[a]
    list the flat indices of the slabs adjacent to the faces x_a = 0 / x_a = 1.
    """
    M = n**d
    mf = n ** (d - 1)
    strides = np.array([n ** (d - 1 - a) for a in range(d)], dtype=np.int64)
    p = np.arange(M, dtype=np.int64)
    coord = np.empty((d, M), dtype=np.int64)
    tface = np.empty((d, M), dtype=np.int64)
    face_lo = np.empty((d, mf), dtype=np.int64)
    face_hi = np.empty((d, mf), dtype=np.int64)
    for a in range(d):
        s = strides[a]
        coord[a] = (p // s) % n
        tface[a] = (p // (s * n)) * s + (p % s)
        face_lo[a] = p[coord[a] == 0]
        face_hi[a] = p[coord[a] == n - 1]
    return strides, coord, tface, face_lo, face_hi


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------


@njit(cache=True)
def l2_sq(f):
    acc = 0.0
    for k in range(f.shape[0]):
        for p in range(f.shape[1]):
            acc += f[k, p] * f[k, p]
    return acc


@njit(cache=True)
def l2_and_lyap(f, w):
    """Raw (unscaled by dx^d) sums of f^2 and f^2 * w, each in canonical order."""
    acc2 = 0.0
    accL = 0.0
    for k in range(f.shape[0]):
        for p in range(f.shape[1]):
            v = f[k, p]
            acc2 += v * v
            accL += v * v * w[k, p]
    return acc2, accL


@njit(cache=True)
def lyap_raw(f, w):
    acc = 0.0
    for k in range(f.shape[0]):
        for p in range(f.shape[1]):
            acc += f[k, p] * f[k, p] * w[k, p]
    return acc


@njit(cache=True)
def boundary_term_raw(f, inc_lo, inc_hi, lam, w_near, w_far, pref, face_lo, face_hi):
    """Boundary part of the Lyapunov difference (already scaled by |lam| dx^(d-1)).

    For lam_ki > 0 the incoming face is x_i = 0 (weight at x_i = dx after the
    one-cell shift) and the outgoing slab is j_i = N-1 (weight at x_i = 1-dx);
    for lam_ki < 0 the roles of the two weight tables swap.
    """
    K, d = lam.shape
    mf = w_near.shape[2]
    B = 0.0
    for k in range(K):
        for i in range(d):
            l = lam[k, i]
            if l == 0.0:
                continue
            sin = 0.0
            sout = 0.0
            if l > 0.0:
                for t in range(mf):
                    vin = inc_lo[k, i, t]
                    sin += vin * vin * w_near[k, i, t]
                for t in range(mf):
                    vout = f[k, face_hi[i, t]]
                    sout += vout * vout * w_far[k, i, t]
            else:
                for t in range(mf):
                    vin = inc_hi[k, i, t]
                    sin += vin * vin * w_far[k, i, t]
                for t in range(mf):
                    vout = f[k, face_lo[i, t]]
                    sout += vout * vout * w_near[k, i, t]
            B += pref[k, i] * sin
            B -= pref[k, i] * sout
    return B


# ---------------------------------------------------------------------------
# single-step operations
# ---------------------------------------------------------------------------


@njit(cache=True)
def _adv_one_dir(f, out, k, lki, i, S, n, M, inc_lo, inc_hi, r):
    """Single active direction: block loops, no per-point branches or tables.

    Points factor as p = blk*S*n + c*S + s_off with c the coordinate along
    axis i and blk*S + s_off the transverse rank; the boundary slab c = 0
    (or c = n-1) is peeled off, so the inner loops are branch-free.
    """
    Sn = S * n
    nblk = M // Sn
    if S == 1:
        # axis i is the contiguous one: each block is one run of n points
        if lki > 0.0:
            for blk in range(nblk):
                base = blk * n
                v = f[k, base]
                out[k, base] = v - r * (lki * (v - inc_lo[k, i, blk]))
                for c in range(1, n):
                    p = base + c
                    v = f[k, p]
                    out[k, p] = v - r * (lki * (v - f[k, p - 1]))
        else:
            for blk in range(nblk):
                base = blk * n
                for c in range(n - 1):
                    p = base + c
                    v = f[k, p]
                    out[k, p] = v - r * (lki * (f[k, p + 1] - v))
                p = base + n - 1
                v = f[k, p]
                out[k, p] = v - r * (lki * (inc_hi[k, i, blk] - v))
        return
    if lki > 0.0:
        for blk in range(nblk):
            base = blk * Sn
            tbase = blk * S
            for s_off in range(S):
                p = base + s_off
                v = f[k, p]
                out[k, p] = v - r * (lki * (v - inc_lo[k, i, tbase + s_off]))
            for c in range(1, n):
                pb = base + c * S
                for s_off in range(S):
                    p = pb + s_off
                    v = f[k, p]
                    out[k, p] = v - r * (lki * (v - f[k, p - S]))
    else:
        for blk in range(nblk):
            base = blk * Sn
            tbase = blk * S
            for c in range(n - 1):
                pb = base + c * S
                for s_off in range(S):
                    p = pb + s_off
                    v = f[k, p]
                    out[k, p] = v - r * (lki * (f[k, p + S] - v))
            pb = base + (n - 1) * S
            for s_off in range(S):
                p = pb + s_off
                v = f[k, p]
                out[k, p] = v - r * (lki * (inc_hi[k, i, tbase + s_off] - v))


@njit(cache=True)
def adv_step(f, out, lam, r, coord, tface, strides, n, inc_lo, inc_hi):
    """Upwind update out = f - r * sum_i lam_ki * (one-sided difference).

    Out-of-interior neighbors are read from inc_lo / inc_hi, which by the
    upwind bias only happens on incoming sides.  Components with a single
    nonzero velocity entry take a branch-free fast path with identical
    arithmetic.
    """
    K, M = f.shape
    d = lam.shape[1]
    for k in range(K):
        nact = 0
        i0 = 0
        for i in range(d):
            if lam[k, i] != 0.0:
                nact += 1
                if nact == 1:
                    i0 = i
        if nact == 1:
            _adv_one_dir(f, out, k, lam[k, i0], i0, strides[i0], n, M, inc_lo, inc_hi, r)
            continue
        for p in range(M):
            v = f[k, p]
            acc = 0.0
            for i in range(d):
                lki = lam[k, i]
                if lki == 0.0:
                    continue
                c = coord[i, p]
                if lki > 0.0:
                    nb = f[k, p - strides[i]] if c > 0 else inc_lo[k, i, tface[i, p]]
                    acc += lki * (v - nb)
                else:
                    nb = f[k, p + strides[i]] if c < n - 1 else inc_hi[k, i, tface[i, p]]
                    acc += lki * (nb - v)
            out[k, p] = v - r * acc


@njit(cache=True)
def coll_explicit(g, out, Q, dts, acc):
    """out = g + (dt/sigma) * Q g per cell, accumulated over m in ascending order.

    The K = 4 case (every shipped model) is unrolled into one fused pass; the
    generic path uses contiguous accumulator sweeps with the same add order.
    """
    K, M = g.shape
    if K == 4:
        for k in range(4):
            q0 = Q[k, 0]
            q1 = Q[k, 1]
            q2 = Q[k, 2]
            q3 = Q[k, 3]
            for p in range(M):
                s = q0 * g[0, p] + q1 * g[1, p] + q2 * g[2, p] + q3 * g[3, p]
                out[k, p] = g[k, p] + dts * s
        return
    for k in range(K):
        for p in range(M):
            acc[p] = 0.0
        for m in range(K):
            qkm = Q[k, m]
            for p in range(M):
                acc[p] += qkm * g[m, p]
        for p in range(M):
            out[k, p] = g[k, p] + dts * acc[p]


@njit(cache=True)
def coll_implicit(g, out, lu, piv):
    """Solve (I - (dt/sigma) Q) out = g per cell against the stored LU factors."""
    K, M = g.shape
    x = np.empty(K)
    for p in range(M):
        for k in range(K):
            x[k] = g[k, p]
        for j in range(K):
            pv = piv[j]
            if pv != j:
                tmp = x[j]
                x[j] = x[pv]
                x[pv] = tmp
        for i in range(1, K):
            s = x[i]
            for j in range(i):
                s -= lu[i, j] * x[j]
            x[i] = s
        for i in range(K - 1, -1, -1):
            s = x[i]
            for j in range(i + 1, K):
                s -= lu[i, j] * x[j]
            x[i] = s / lu[i, i]
        for k in range(K):
            out[k, p] = x[k]


@njit(cache=True)
def fill_gain(f, target, k1, src1_k, src1_idx, k2, src2_k, src2_idx):
    """target[t] = k1 * f[src1_k, src1_idx[t]] + k2 * f[src2_k, src2_idx[t]]."""
    for t in range(target.shape[0]):
        target[t] = k1 * f[src1_k, src1_idx[t]] + k2 * f[src2_k, src2_idx[t]]


# ---------------------------------------------------------------------------
# fused run loop
# ---------------------------------------------------------------------------


@njit(cache=True)
def fused_run(
    f,
    g,
    lam,
    r,
    Q,
    dts,
    lu,
    piv,
    implicit,
    acc,
    coord,
    tface,
    strides,
    n,
    inc_lo,
    inc_hi,
    law_kind,
    gain_target,
    gk1,
    gsrc1_k,
    gsrc1_idx,
    gk2,
    gsrc2_k,
    gsrc2_idx,
    w,
    w_near,
    w_far,
    pref,
    face_lo,
    face_hi,
    dxd,
    track_decay,
    contraction,
    decay_rtol,
    guard_rel_sq,
    nsteps,
    record_every,
    rec_step,
    rec_l2sq,
    rec_L,
    rec_B,
    rec_Lprev,
):
    """Advance nsteps split steps, recording diagnostics every record_every steps.

    Per-step diagnostics (l2^2, Lyapunov value, boundary term) share the exact
    kernels used by the public API.  Returns
    (nrec, steps_done, diverged, decay_violations, max_decay_excess, minB, maxB).
    """
    nrec = 0
    l2sq0 = 0.0
    L0 = 0.0
    Lprev = np.nan
    viol = 0
    max_excess = -np.inf
    minB = np.inf
    maxB = -np.inf
    diverged = False
    step = 0
    while True:
        if law_kind == 1:
            fill_gain(f, gain_target, gk1, gsrc1_k, gsrc1_idx, gk2, gsrc2_k, gsrc2_idx)
        raw2, rawL = l2_and_lyap(f, w)
        l2v = raw2 * dxd
        Lv = rawL * dxd
        B = boundary_term_raw(f, inc_lo, inc_hi, lam, w_near, w_far, pref, face_lo, face_hi)
        if step == 0:
            l2sq0 = l2v
            L0 = Lv
        if B < minB:
            minB = B
        if B > maxB:
            maxB = B
        if track_decay and step > 0:
            bound = contraction * Lprev + decay_rtol * L0
            excess = (Lv - bound) / L0 if L0 > 0.0 else (Lv - bound)
            if Lv > bound:
                viol += 1
            if excess > max_excess:
                max_excess = excess
        bad = not (l2v <= guard_rel_sq * l2sq0)
        if step % record_every == 0 or step == nsteps or bad:
            rec_step[nrec] = step
            rec_l2sq[nrec] = l2v
            rec_L[nrec] = Lv
            rec_B[nrec] = B
            rec_Lprev[nrec] = Lprev
            nrec += 1
        Lprev = Lv
        if bad:
            diverged = True
            break
        if step >= nsteps:
            break
        adv_step(f, g, lam, r, coord, tface, strides, n, inc_lo, inc_hi)
        if implicit:
            coll_implicit(g, f, lu, piv)
        else:
            coll_explicit(g, f, Q, dts, acc)
        step += 1
    return nrec, step, diverged, viol, max_excess, minB, maxB
