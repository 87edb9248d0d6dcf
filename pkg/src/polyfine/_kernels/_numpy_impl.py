"""Pure numpy/scipy fallback kernels (KD-trees instead of the numba grid)."""

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist


def _min_dist_to_existing(queries, store, n, trees, tail_start):
    m = queries.shape[0]
    best = np.full(m, np.inf)
    for start, stop, tree in trees:
        dq, _ = tree.query(queries, k=1)
        np.minimum(best, dq, out=best)
    if n > tail_start:
        # tail stays small between re-treeings, brute force is fine
        np.minimum(best, cdist(queries, store[tail_start:n]).min(axis=1),
                   out=best)
    return best


def insert_batch(cand_sums, cand_pairs, sums, pairs, n, trees, tail_start, rho,
                 streak, mult, add):
    m = cand_sums.shape[0]
    base = _min_dist_to_existing(cand_sums, sums, n, trees, tail_start)
    acc = np.empty((m, cand_sums.shape[1]))  # sums accepted within this batch
    nacc = 0
    processed = 0
    for i in range(m):
        if streak >= mult * n + add:
            break
        processed += 1
        dmin = base[i]
        if nacc and dmin >= rho:
            dd = acc[:nacc] - cand_sums[i]
            dmin = min(dmin, np.sqrt((dd * dd).sum(axis=1).min()))
        if dmin >= rho:
            sums[n] = cand_sums[i]
            pairs[n] = cand_pairs[i]
            acc[nacc] = cand_sums[i]
            nacc += 1
            n += 1
            streak = 0
        else:
            streak += 1
    return processed, n, streak


def min_pair_dists(query_pairs, pairs, n, ptrees, tail_start):
    best = np.full(query_pairs.shape[0], np.inf)
    for start, stop, tree in ptrees:
        dq, _ = tree.query(query_pairs, k=1)
        np.minimum(best, dq, out=best)
    if n > tail_start:
        np.minimum(best, cdist(query_pairs, pairs[tail_start:n]).min(axis=1),
                   out=best)
    return best


def min_separation(sums):
    n = sums.shape[0]
    if n <= 2048:
        d2 = np.sum((sums[:, None, :] - sums[None, :, :]) ** 2, axis=-1)
        d2[np.diag_indices(n)] = np.inf
        return float(np.sqrt(d2.min()))
    tree = cKDTree(sums)
    dq, _ = tree.query(sums, k=2)
    return float(dq[:, 1].min())


_CHUNK = 1 << 22


def cap_hit_counts(points, normals, thresholds):
    npts = max(points.shape[0], 1)
    ncaps = normals.shape[0]
    counts = np.zeros(ncaps, np.int64)
    step = max(_CHUNK // npts, 1)
    for j0 in range(0, ncaps, step):
        j1 = min(j0 + step, ncaps)
        hits = points @ normals[j0:j1].T >= thresholds[j0:j1]
        counts[j0:j1] = hits.sum(axis=0)
    return counts


def point_hits_any(points, normals, thresholds):
    npts = points.shape[0]
    ncaps = max(normals.shape[0], 1)
    out = np.zeros(npts, bool)
    step = max(_CHUNK // ncaps, 1)
    for i0 in range(0, npts, step):
        i1 = min(i0 + step, npts)
        hits = points[i0:i1] @ normals.T >= thresholds
        out[i0:i1] = hits.any(axis=1)
    return out
