"""numba @njit kernels over a sparse uniform grid in the sum space x + nu."""

import math

import numpy as np
from numba import njit, prange

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)
_SHIFT = 1099511627776  # keeps quantized cell coordinates positive


@njit(cache=True)
def insert_batch(cand_sums, cand_pairs, sums, pairs, n, nxt, head, rho,
                 offsets, streak, mult, add):
    m = cand_sums.shape[0]
    d = cand_sums.shape[1]
    d2 = cand_pairs.shape[1]
    rho2 = rho * rho
    mask = np.uint64(head.shape[0] - 1)
    noff = offsets.shape[0]
    cell = np.empty(d, np.int64)
    processed = 0
    for i in range(m):
        if streak >= mult * n + add:
            break
        processed += 1
        for k in range(d):
            cell[k] = np.int64(math.floor(cand_sums[i, k] / rho))
        ok = True
        for o in range(noff):
            h = _FNV_OFFSET
            for k in range(d):
                h = (h ^ np.uint64(cell[k] + offsets[o, k] + _SHIFT)) * _FNV_PRIME
            j = head[np.int64(h & mask)]
            while j >= 0:
                dist2 = 0.0
                for k in range(d):
                    t = cand_sums[i, k] - sums[j, k]
                    dist2 += t * t
                if dist2 < rho2:
                    ok = False
                    break
                j = nxt[j]
            if not ok:
                break
        if ok:
            for k in range(d):
                sums[n, k] = cand_sums[i, k]
            for k in range(d2):
                pairs[n, k] = cand_pairs[i, k]
            h = _FNV_OFFSET
            for k in range(d):
                h = (h ^ np.uint64(cell[k] + _SHIFT)) * _FNV_PRIME
            b = np.int64(h & mask)
            nxt[n] = head[b]
            head[b] = n
            n += 1
            streak = 0
        else:
            streak += 1
    return processed, n, streak


@njit(cache=True)
def rehash(sums, n, nxt, head, rho):
    d = sums.shape[1]
    mask = np.uint64(head.shape[0] - 1)
    for i in range(n):
        h = _FNV_OFFSET
        for k in range(d):
            c = np.int64(math.floor(sums[i, k] / rho))
            h = (h ^ np.uint64(c + _SHIFT)) * _FNV_PRIME
        b = np.int64(h & mask)
        nxt[i] = head[b]
        head[b] = i


@njit(cache=True, parallel=True)
def min_pair_dists(qsums, qpairs, sums, pairs, n, nxt, head, rho):
    m = qsums.shape[0]
    d = qsums.shape[1]
    d2 = qpairs.shape[1]
    mask = np.uint64(head.shape[0] - 1)
    out = np.empty(m)
    for i in prange(m):
        base = np.empty(d, np.int64)
        idx = np.empty(d, np.int64)
        for k in range(d):
            base[k] = np.int64(math.floor(qsums[i, k] / rho))
        s = rho
        best = np.inf
        while True:
            ring = np.int64(math.ceil(s / rho))
            for k in range(d):
                idx[k] = -ring
            while True:
                h = _FNV_OFFSET
                for k in range(d):
                    h = (h ^ np.uint64(base[k] + idx[k] + _SHIFT)) * _FNV_PRIME
                j = head[np.int64(h & mask)]
                while j >= 0:
                    dist2 = 0.0
                    for k in range(d2):
                        t = qpairs[i, k] - pairs[j, k]
                        dist2 += t * t
                    if dist2 < best:
                        best = dist2
                    j = nxt[j]
                k = 0
                while k < d:
                    idx[k] += 1
                    if idx[k] <= ring:
                        break
                    idx[k] = -ring
                    k += 1
                if k == d:
                    break
            # points outside the scanned cells are > s away in the sum
            # metric, hence > s/sqrt(2) in the concatenated one
            if best <= s * s / 2.0 or s > 1e9:
                break
            s *= 2.0
        out[i] = math.sqrt(best)
    return out


@njit(cache=True)
def min_separation(sums, n, nxt, head, rho):
    d = sums.shape[1]
    mask = np.uint64(head.shape[0] - 1)
    best = np.inf
    base = np.empty(d, np.int64)
    idx = np.empty(d, np.int64)
    for i in range(n):
        for k in range(d):
            base[k] = np.int64(math.floor(sums[i, k] / rho))
        s = rho
        local = np.inf
        while True:
            ring = np.int64(math.ceil(s / rho))
            for k in range(d):
                idx[k] = -ring
            while True:
                h = _FNV_OFFSET
                for k in range(d):
                    h = (h ^ np.uint64(base[k] + idx[k] + _SHIFT)) * _FNV_PRIME
                j = head[np.int64(h & mask)]
                while j >= 0:
                    if j != i:
                        dist2 = 0.0
                        for k in range(d):
                            t = sums[i, k] - sums[j, k]
                            dist2 += t * t
                        if dist2 < local:
                            local = dist2
                    j = nxt[j]
                k = 0
                while k < d:
                    idx[k] += 1
                    if idx[k] <= ring:
                        break
                    idx[k] = -ring
                    k += 1
                if k == d:
                    break
            if local <= s * s or s > 1e9:
                break
            s *= 2.0
        if local < best:
            best = local
    return math.sqrt(best)


@njit(cache=True, parallel=True)
def cap_hit_counts(points, normals, thresholds):
    npts = points.shape[0]
    ncaps = normals.shape[0]
    d = points.shape[1]
    counts = np.zeros(ncaps, np.int64)
    for j in prange(ncaps):
        c = 0
        for i in range(npts):
            s = 0.0
            for k in range(d):
                s += points[i, k] * normals[j, k]
            if s >= thresholds[j]:
                c += 1
        counts[j] = c
    return counts


@njit(cache=True, parallel=True)
def point_hits_any(points, normals, thresholds):
    npts = points.shape[0]
    ncaps = normals.shape[0]
    d = points.shape[1]
    out = np.zeros(npts, np.bool_)
    for i in prange(npts):
        hit = False
        for j in range(ncaps):
            s = 0.0
            for k in range(d):
                s += points[i, k] * normals[j, k]
            if s >= thresholds[j]:
                hit = True
                break
        out[i] = hit
    return out
