"""Hot numeric kernels with two interchangeable backends.

The greedy separated-net insertion, covering-radius probes and cap-hit
counting dominate the pipeline runtime.  They are implemented twice:

* ``numba`` -- @njit kernels over a sparse uniform grid (default when
  numba imports cleanly),
* ``numpy`` -- pure numpy/scipy (KD-tree) fallback.

Both backends make identical accept/reject decisions, so nets and results
are byte-identical across them.  Selection: environment variable
``POLYFINE_BACKEND`` set to ``numba`` or ``numpy`` (anything else, or
unset, means "numba if available").
"""

import itertools
import os

import numpy as np

from . import _numpy_impl

try:
    from . import _numba_impl
    _HAVE_NUMBA = True
except ImportError:
    _numba_impl = None
    _HAVE_NUMBA = False


def _select_backend(name=None):
    req = (name or os.environ.get("POLYFINE_BACKEND", "auto")).lower()
    if req == "numpy":
        return "numpy"
    if req == "numba":
        if not _HAVE_NUMBA:
            raise RuntimeError("POLYFINE_BACKEND=numba but numba is not importable")
        return "numba"
    return "numba" if _HAVE_NUMBA else "numpy"


BACKEND = _select_backend()


def _neighbor_offsets(d):
    return np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)


class SeparatedSetIndex:
    """Greedy maximal rho-separated set over lifted boundary pairs.

    Stores pairs (x, nu) concatenated in R^{2d}; the separation metric is
    the Euclidean distance between the sum points x + nu in R^d, the
    covering metric is the concatenated one sqrt(|dx|^2 + |dnu|^2).
    """

    def __init__(self, dim, rho, capacity=4096, backend=None):
        self.dim = int(dim)
        self.rho = float(rho)
        self.backend = _select_backend(backend)
        self._n = 0
        cap = max(int(capacity), 64)
        self._pairs = np.empty((cap, 2 * self.dim))
        self._sums = np.empty((cap, self.dim))
        if self.backend == "numba":
            self._offsets = _neighbor_offsets(self.dim)
            self._slots = 1 << 12
            self._head = np.full(self._slots, -1, dtype=np.int64)
            self._nxt = np.full(cap, -1, dtype=np.int64)
        else:
            self._trees = []          # list of (start, stop, cKDTree on sums)
            self._ptrees = []         # matching trees on concatenated pairs
            self._tail_start = 0      # sums[tail_start:n] not in any tree

    @property
    def n(self):
        return self._n

    @property
    def pairs(self):
        return self._pairs[: self._n]

    @property
    def sums(self):
        return self._sums[: self._n]

    def _grow(self, needed):
        cap = self._pairs.shape[0]
        if needed <= cap:
            return
        new = cap
        while new < needed:
            new *= 2
        self._pairs = np.vstack([self._pairs, np.empty((new - cap, 2 * self.dim))])
        self._sums = np.vstack([self._sums, np.empty((new - cap, self.dim))])
        if self.backend == "numba":
            self._nxt = np.concatenate([self._nxt, np.full(new - cap, -1, dtype=np.int64)])

    def _maybe_rehash(self):
        if self.backend != "numba":
            return
        if self._n > 0.6 * self._slots:
            while self._n > 0.6 * self._slots:
                self._slots *= 2
            self._head = np.full(self._slots, -1, dtype=np.int64)
            self._nxt[: self._n] = -1
            _numba_impl.rehash(self._sums, self._n, self._nxt, self._head, self.rho)

    def _retree(self, force=False):
        # logarithmic merge structure: tail becomes a tree once it is large,
        # equal-size trees merge so queries touch O(log n) trees
        from scipy.spatial import cKDTree
        tail = self._n - self._tail_start
        if not force and tail < 2048:
            return
        if tail == 0:
            return
        start, stop = self._tail_start, self._n
        while self._trees and (stop - start) >= (self._trees[-1][1] - self._trees[-1][0]):
            start = self._trees[-1][0]
            self._trees.pop()
            self._ptrees.pop()
        self._trees.append((start, stop, cKDTree(self._sums[start:stop])))
        self._ptrees.append((start, stop, cKDTree(self._pairs[start:stop])))
        self._tail_start = stop

    def insert_greedy(self, cand_pairs, streak, streak_mult, streak_add):
        """Process candidates in order; insert those >= rho from the set.

        Stops as soon as the rejection streak reaches
        streak_mult * n_current + streak_add.  Returns (processed, streak).
        """
        cand_pairs = np.ascontiguousarray(cand_pairs, dtype=np.float64)
        m = cand_pairs.shape[0]
        d = self.dim
        cand_sums = cand_pairs[:, :d] + cand_pairs[:, d:]
        self._grow(self._n + m)
        if self.backend == "numba":
            self._maybe_rehash()
            processed, self._n, streak = _numba_impl.insert_batch(
                cand_sums, cand_pairs, self._sums, self._pairs, self._n,
                self._nxt, self._head, self.rho, self._offsets,
                int(streak), int(streak_mult), int(streak_add))
            return processed, int(streak)
        processed, self._n, streak = _numpy_impl.insert_batch(
            cand_sums, cand_pairs, self._sums, self._pairs, self._n,
            self._trees, self._tail_start, self.rho,
            int(streak), int(streak_mult), int(streak_add))
        self._retree()
        return processed, int(streak)

    def min_pair_dists(self, query_pairs):
        """Exact min concatenated-metric distance from each query to the set."""
        query_pairs = np.ascontiguousarray(query_pairs, dtype=np.float64)
        if self._n == 0:
            return np.full(query_pairs.shape[0], np.inf)
        if self.backend == "numba":
            d = self.dim
            qsums = query_pairs[:, :d] + query_pairs[:, d:]
            return _numba_impl.min_pair_dists(
                qsums, query_pairs, self._sums, self._pairs, self._n,
                self._nxt, self._head, self.rho)
        self._retree(force=True)
        return _numpy_impl.min_pair_dists(query_pairs, self._pairs, self._n,
                                          self._ptrees, self._tail_start)

    def min_separation(self):
        """Exact minimum pairwise sum-metric distance (inf for n < 2)."""
        if self._n < 2:
            return np.inf
        if self.backend == "numba":
            return float(_numba_impl.min_separation(
                self._sums, self._n, self._nxt, self._head, self.rho))
        return _numpy_impl.min_separation(self._sums[: self._n])


def cap_hit_counts(points, normals, thresholds, backend=None):
    """counts[j] = #{i : <points[i], normals[j]> >= thresholds[j]}."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    if _select_backend(backend) == "numba":
        return _numba_impl.cap_hit_counts(points, normals, thresholds)
    return _numpy_impl.cap_hit_counts(points, normals, thresholds)


def point_hits_any(points, normals, thresholds, backend=None):
    """mask[i] = whether points[i] lies in at least one cap."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    normals = np.ascontiguousarray(normals, dtype=np.float64)
    thresholds = np.ascontiguousarray(thresholds, dtype=np.float64)
    if _select_backend(backend) == "numba":
        return _numba_impl.point_hits_any(points, normals, thresholds)
    return _numpy_impl.point_hits_any(points, normals, thresholds)
