"""Compiled inner loops for nearest-better construction and tour sampling.

Distances come in two flavours selected by ``metric``:

0. Hamming over bit-packed rows (``packed``, uint64 words).
1. Edge units over successor/predecessor tables (``succ``, ``pred``).

The unused operands are passed as 1x1 dummies.
"""
import numpy as np
from numba import njit

_M1 = np.uint64(0x5555555555555555)
_M2 = np.uint64(0x3333333333333333)
_M4 = np.uint64(0x0F0F0F0F0F0F0F0F)
_H01 = np.uint64(0x0101010101010101)


@njit(inline="always")
def _popcount(x):
    x = x - ((x >> np.uint64(1)) & _M1)
    x = (x & _M2) + ((x >> np.uint64(2)) & _M2)
    x = (x + (x >> np.uint64(4))) & _M4
    return (x * _H01) >> np.uint64(56)


@njit(inline="always")
def _dist(a, b, metric, packed, succ, pred):
    if metric == 0:
        s = np.uint64(0)
        for w in range(packed.shape[1]):
            s += _popcount(packed[a, w] ^ packed[b, w])
        return np.float64(s)
    d = succ.shape[1]
    shared = 0
    for c in range(d):
        v = succ[a, c]
        if v == succ[b, c] or v == pred[b, c]:
            shared += 1
    return np.float64(d - shared)


@njit(inline="always")
def _next(state):
    # splitmix64
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(inline="always")
def _randint(state, n):
    return np.int64(_next(state) % np.uint64(n))


@njit(cache=True, nogil=True)
def nearest_better_among(members, lo, hi, fit, parent, dist, metric, packed, succ, pred):
    """Exact nearest-better search inside ``members[lo:hi]``, min-merged into the table."""
    if hi - lo < 2:
        return
    top = fit[members[lo]]
    for i in range(lo + 1, hi):
        if fit[members[i]] > top:
            top = fit[members[i]]
    for i in range(lo, hi):
        a = members[i]
        fa = fit[a]
        if fa == top:
            continue
        best = dist[a]
        bp = parent[a]
        for j in range(lo, hi):
            b = members[j]
            if fit[b] > fa:
                d = _dist(a, b, metric, packed, succ, pred)
                if d < best or (d == best and b < bp):
                    best = d
                    bp = b
        dist[a] = best
        parent[a] = bp


@njit(cache=True, nogil=True)
def cnbsi_sorted(order, start, stop, fit, parent, dist, metric, packed, succ, pred):
    """Exact search for ``order[start:stop]``; ``order`` sorts fitness descending."""
    for p in range(start, stop):
        a = order[p]
        fa = fit[a]
        best = np.inf
        bp = -1
        for q in range(p):
            b = order[q]
            if fit[b] <= fa:
                break
            d = _dist(a, b, metric, packed, succ, pred)
            if d < best or (d == best and b < bp):
                best = d
                bp = b
        dist[a] = best
        parent[a] = bp


@njit(inline="always")
def _sort_segment(idx, lo, hi, codes, k, tmp, counts, vmax):
    n = hi - lo
    if n * 8 < vmax + 1:
        # stable insertion sort for short segments over wide domains
        for i in range(lo + 1, hi):
            x = idx[i]
            key = codes[x, k]
            j = i - 1
            while j >= lo and codes[idx[j], k] > key:
                idx[j + 1] = idx[j]
                j -= 1
            idx[j + 1] = x
        return
    for v in range(vmax + 2):
        counts[v] = 0
    for i in range(lo, hi):
        counts[codes[idx[i], k] + 1] += 1
    for v in range(1, vmax + 2):
        counts[v] += counts[v - 1]
    for i in range(lo, hi):
        v = codes[idx[i], k]
        tmp[lo + counts[v]] = idx[i]
        counts[v] += 1
    for i in range(lo, hi):
        idx[i] = tmp[i]


@njit(cache=True, nogil=True)
def cnbsd_round(codes, packed, succ, pred, metric, fit, init_idx, rem0, n_min, seed,
                center, use_center, vmax, parent, dist, level_max):
    """One division round over ``init_idx`` with the unused domains ``rem0``.

    Depth-first with an explicit frame stack. Every frame leaves its root set
    (all members of maximal fitness) on ``rbuf``; a parent runs the exact
    search over the union of its children's root sets. With ``use_center`` the
    child whose split value equals the centre's is re-split in place on further
    random domains instead of being recursed as one large subset; the pieces
    of step ``t`` sit ``t`` levels down so each keeps exactly the domains it
    was not split on. Frame levels never decrease up the stack, so a frame
    only overwrites ``rem`` rows that no pending frame still reads.

    Returns the ids of the final root set.
    """
    n = init_idx.shape[0]
    idx = init_idx.copy()
    tmp = np.empty_like(idx)
    counts = np.zeros(vmax + 2, np.int64)
    nrem = rem0.shape[0]
    nlev = nrem + 2
    rem = np.empty((nlev, max(nrem, 1)), np.int64)
    remcnt = np.zeros(nlev, np.int64)
    for i in range(nrem):
        rem[0, i] = rem0[i]
    remcnt[0] = nrem
    cap = n + nlev + 4
    f_lo = np.empty(cap, np.int64)
    f_hi = np.empty(cap, np.int64)
    f_lev = np.empty(cap, np.int64)
    f_stage = np.zeros(cap, np.int64)
    f_rs = np.zeros(cap, np.int64)
    rbuf = np.empty(n + 1, np.int64)
    rtop = 0
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)

    f_lo[0] = 0
    f_hi[0] = n
    f_lev[0] = 0
    f_stage[0] = 0
    sp = 1
    while sp > 0:
        t = sp - 1
        lo = f_lo[t]
        hi = f_hi[t]
        lev = f_lev[t]
        if f_stage[t] == 0:
            size = hi - lo
            if size > level_max[lev]:
                level_max[lev] = size
            if size <= n_min or remcnt[lev] == 0:
                nearest_better_among(idx, lo, hi, fit, parent, dist, metric, packed, succ, pred)
                top = fit[idx[lo]]
                for i in range(lo + 1, hi):
                    if fit[idx[i]] > top:
                        top = fit[idx[i]]
                for i in range(lo, hi):
                    if fit[idx[i]] == top:
                        rbuf[rtop] = idx[i]
                        rtop += 1
                sp -= 1
                continue
            f_stage[t] = 1
            f_rs[t] = rtop
            clo = lo
            chi = hi
            cl = lev
            # every re-split step drops one domain, so its pieces live one level deeper
            while True:
                c1 = remcnt[cl]
                for i in range(c1):
                    rem[cl + 1, i] = rem[cl, i]
                j = _randint(state, c1)
                k = rem[cl + 1, j]
                rem[cl + 1, j] = rem[cl + 1, c1 - 1]
                c1 -= 1
                remcnt[cl + 1] = c1
                cl += 1
                _sort_segment(idx, clo, chi, codes, k, tmp, counts, vmax)
                again_lo = -1
                again_hi = -1
                a = clo
                while a < chi:
                    v = codes[idx[a], k]
                    b = a + 1
                    while b < chi and codes[idx[b], k] == v:
                        b += 1
                    if use_center and v == center[k] and b - a > n_min and c1 > 0:
                        again_lo = a
                        again_hi = b
                    else:
                        f_lo[sp] = a
                        f_hi[sp] = b
                        f_lev[sp] = cl
                        f_stage[sp] = 0
                        sp += 1
                    a = b
                if again_lo < 0:
                    break
                clo = again_lo
                chi = again_hi
        else:
            rs = f_rs[t]
            nearest_better_among(rbuf, rs, rtop, fit, parent, dist, metric, packed, succ, pred)
            top = fit[rbuf[rs]]
            for i in range(rs + 1, rtop):
                if fit[rbuf[i]] > top:
                    top = fit[rbuf[i]]
            w = rs
            for i in range(rs, rtop):
                if fit[rbuf[i]] == top:
                    rbuf[w] = rbuf[i]
                    w += 1
            rtop = w
            sp -= 1
    return rbuf[:rtop].copy()


@njit(cache=True, nogil=True)
def tsp_local_walks(center, K, n, max_moves, seed, out):
    """Random 2-opt walks from ``center`` (0-based tour) kept within ``K`` edges.

    A move is rejected when it would push the edge distance to the centre
    above ``K``. Returns the final edge distance of every walk.
    """
    d = center.shape[0]
    csucc = np.empty(d, np.int64)
    cpred = np.empty(d, np.int64)
    for i in range(d):
        csucc[center[i]] = center[(i + 1) % d]
        cpred[center[i]] = center[(i - 1) % d]
    state = np.empty(1, np.uint64)
    state[0] = np.uint64(seed)
    final = np.empty(n, np.int64)
    tour = np.empty(d, center.dtype)
    for s in range(n):
        for i in range(d):
            tour[i] = center[i]
        cur = 0
        moves = 1 + _randint(state, max_moves)
        for _ in range(moves):
            i = _randint(state, d)
            j = _randint(state, d)
            if i > j:
                i, j = j, i
            if j - i < 1 or (i == 0 and j == d - 1):
                continue
            a = tour[(i - 1) % d]
            b = tour[i]
            c = tour[j]
            e = tour[(j + 1) % d]
            delta = 0
            if csucc[a] == b or cpred[a] == b:
                delta += 1
            if csucc[c] == e or cpred[c] == e:
                delta += 1
            if csucc[a] == c or cpred[a] == c:
                delta -= 1
            if csucc[b] == e or cpred[b] == e:
                delta -= 1
            if cur + delta > K:
                continue
            lo = i
            hi = j
            while lo < hi:
                tmp = tour[lo]
                tour[lo] = tour[hi]
                tour[hi] = tmp
                lo += 1
                hi -= 1
            cur += delta
        for i in range(d):
            out[s, i] = tour[i]
        final[s] = cur
    return final
