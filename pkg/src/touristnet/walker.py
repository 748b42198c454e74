"""Deterministic tourist walks and their transient/cycle statistics.

A walk sits on a vertex and repeatedly moves to the nearest neighbour not
among the ``mu`` most recently visited vertices (current one included).
Neighbour preference is fixed up front: each vertex's adjacency sorted by
(payload distance, vertex id), so the hot loop never touches coordinates.

The walk state is (current vertex, ordered memory window).  The dynamics is
a function of that state, so the trajectory ends either trapped (no allowed
neighbour) or in a cycle detected as the first *exact* state repetition.
Outcomes are an attractor pair: transient length t (steps before the first
cycle state) and cycle length c (its period, 0 when trapped).

Kernels are numba-compiled; batches parallelize over (mu, start) pairs with
each pair writing its own slot, so results do not depend on thread count.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numba import njit, prange, set_num_threads

from .graph import ClassNetwork
from .dataset import pairwise_distances

_FNV_OFFSET = np.int64(-3750763034362895579)  # 0xcbf29ce484222325, reinterpreted
_FNV_PRIME = np.int64(1099511628211)


class WalkOutcome(NamedTuple):
    transient_length: int
    cycle_length: int


@dataclass(frozen=True)
class WalkProfile:
    """Mean transient/cycle lengths indexed by memory size 0..mu_max."""

    mean_transient: np.ndarray
    mean_cycle: np.ndarray

    def __post_init__(self):
        if self.mean_transient.shape != self.mean_cycle.shape or self.mean_transient.ndim != 1:
            raise ValueError("profile arrays must be 1-D and equally long")

    @property
    def mu_max(self) -> int:
        return len(self.mean_transient) - 1


@njit(cache=True, inline="always")
def _rows_equal(hist, a, b, width):
    for j in range(width):
        if hist[a, j] != hist[b, j]:
            return False
    return True


@njit(cache=True)
def _walk_kernel(indptr, indices, n, mu, start):
    """One walk; returns (transient_length, cycle_length), cycle 0 = trapped."""
    # The window never holds more than n distinct vertices, so the state row
    # and circular buffer are capped at n+1 slots even for huge mu.
    width = 1
    if mu > 0:
        width = mu if mu <= n else n + 1
    in_window = np.zeros(n, np.bool_)
    window = np.full(width, -1, np.int64)
    head = 0
    filled = 0
    cur = start
    if mu > 0:
        window[0] = cur
        in_window[cur] = True
        filled = 1

    cap = 64
    hist = np.empty((cap, width), np.int64)
    tcap = 128  # open-addressing table over state indices, power of two
    tmask = tcap - 1
    table = np.full(tcap, -1, np.int64)

    step = 0
    while True:
        if step == cap:
            grown = np.empty((cap * 2, width), np.int64)
            grown[:cap] = hist
            hist = grown
            cap *= 2
        if mu > 0:
            for t in range(filled):
                hist[step, t] = window[(head - t) % width]
            for t in range(filled, width):
                hist[step, t] = -1
        else:
            hist[step, 0] = cur

        h = _FNV_OFFSET
        for j in range(width):
            h = (h ^ (hist[step, j] + 2)) * _FNV_PRIME
        slot = h & tmask
        found = -1
        while table[slot] != -1:
            s0 = table[slot]
            if _rows_equal(hist, s0, step, width):
                found = s0
                break
            slot = (slot + 1) & tmask
        if found >= 0:
            return found, step - found
        table[slot] = step

        if 2 * (step + 1) >= tcap:  # keep load factor under one half
            tcap *= 4
            tmask = tcap - 1
            table = np.full(tcap, -1, np.int64)
            for s in range(step + 1):
                h2 = _FNV_OFFSET
                for j in range(width):
                    h2 = (h2 ^ (hist[s, j] + 2)) * _FNV_PRIME
                sl = h2 & tmask
                while table[sl] != -1:
                    sl = (sl + 1) & tmask
                table[sl] = s

        nxt = -1
        for p in range(indptr[cur], indptr[cur + 1]):
            u = indices[p]
            if not in_window[u]:
                nxt = u
                break
        if nxt == -1:
            return step, 0  # trapped after `step` moves

        if mu > 0:
            if filled == mu:
                head = (head + 1) % width
                in_window[window[head]] = False
                window[head] = nxt
            else:
                head = (head + 1) % width
                window[head] = nxt
                filled += 1
            in_window[nxt] = True
        cur = nxt
        step += 1


@njit(cache=True, parallel=True)
def _batch_kernel(indptr, indices, n, mus, starts):
    nm = len(mus)
    ns = len(starts)
    T = np.empty((nm, ns), np.int64)
    C = np.empty((nm, ns), np.int64)
    for w in prange(nm * ns):
        mi = w // ns
        si = w - mi * ns
        t, c = _walk_kernel(indptr, indices, n, mus[mi], starts[si])
        T[mi, si] = t
        C[mi, si] = c
    return T, C


def set_thread_count(threads: int | None) -> None:
    """Pin the kernel thread pool; None keeps the current setting."""
    if threads is None:
        return
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"thread count must be >= 1, got {threads}")
    set_num_threads(threads)


if os.environ.get("TOURISTNET_THREADS"):
    set_thread_count(int(os.environ["TOURISTNET_THREADS"]))


class ComponentWalker:
    """Frozen preference-order view of one connected component.

    Vertices are relabeled 0..n-1 in ascending order of their global ids;
    all statistics aggregate over every vertex of the component as start.
    """

    def __init__(self, vertices, indptr, indices):
        self.vertices = np.asarray(vertices, dtype=np.int64)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.n = len(self.vertices)
        self._local = {int(v): i for i, v in enumerate(self.vertices)}

    @classmethod
    def from_graph(cls, g: ClassNetwork, comp_id: int) -> ComponentWalker:
        verts = sorted(g.component_vertices(comp_id))
        if not verts:
            raise ValueError(f"component {comp_id} has no vertices")
        local = {v: i for i, v in enumerate(verts)}
        indptr = np.zeros(len(verts) + 1, dtype=np.int64)
        cols: list[int] = []
        for i, v in enumerate(verts):
            nbrs = sorted(g._adj[v])  # ascending id = tie-break order
            nbrs.sort(key=lambda u: g.payload_distance(v, u))  # stable
            cols.extend(local[u] for u in nbrs)
            indptr[i + 1] = len(cols)
        return cls(verts, indptr, np.array(cols, dtype=np.int64))

    @classmethod
    def complete(cls, payloads, kinds, vertices=None) -> ComponentWalker:
        """All-pairs variant: every site is everyone's neighbour (no graph)."""
        payloads = np.asarray(payloads, dtype=np.float64)
        n = payloads.shape[0]
        if n == 0:
            raise ValueError("cannot build a walker over zero sites")
        if vertices is None:
            vertices = np.arange(n, dtype=np.int64)
        dmat = pairwise_distances(payloads, kinds)
        np.fill_diagonal(dmat, np.inf)
        order = np.argsort(dmat, axis=1, kind="stable")[:, : n - 1]
        indptr = np.arange(0, n * (n - 1) + 1, n - 1, dtype=np.int64) if n > 1 else np.zeros(2, np.int64)
        return cls(vertices, indptr, order.reshape(-1).astype(np.int64))

    def local_id(self, global_vertex: int) -> int:
        try:
            return self._local[int(global_vertex)]
        except KeyError:
            raise ValueError(f"vertex {global_vertex} is not in this component") from None

    def walk(self, global_start: int, mu: int) -> WalkOutcome:
        if mu < 0:
            raise ValueError(f"memory size must be >= 0, got {mu}")
        t, c = _walk_kernel(
            self.indptr, self.indices, self.n, np.int64(mu), np.int64(self.local_id(global_start))
        )
        return WalkOutcome(int(t), int(c))

    def outcomes_grid(self, mus) -> tuple[np.ndarray, np.ndarray]:
        """(len(mus), n) transient and cycle matrices over every start."""
        mus = np.asarray(mus, dtype=np.int64)
        if mus.size and mus.min() < 0:
            raise ValueError("memory sizes must be >= 0")
        starts = np.arange(self.n, dtype=np.int64)
        return _batch_kernel(self.indptr, self.indices, self.n, mus, starts)

    def stats(self, mu: int) -> tuple[float, float]:
        """Mean transient and cycle length over all starts at one memory size."""
        T, C = self.outcomes_grid(np.array([mu], dtype=np.int64))
        return float(T.sum()) / self.n, float(C.sum()) / self.n

    def profile(self, mu_max: int) -> WalkProfile:
        if mu_max < 0:
            raise ValueError(f"mu_max must be >= 0, got {mu_max}")
        T, C = self.outcomes_grid(np.arange(mu_max + 1, dtype=np.int64))
        return WalkProfile(
            mean_transient=T.sum(axis=1) / self.n,
            mean_cycle=C.sum(axis=1) / self.n,
        )


def tourist_walk(g: ClassNetwork, start: int, mu: int) -> WalkOutcome:
    """Single walk on the component containing ``start``."""
    g._check_vertex(start)
    comp = g.component_of[start]
    return ComponentWalker.from_graph(g, comp).walk(start, mu)


def component_stats(g: ClassNetwork, comp_id: int, mu: int) -> tuple[float, float]:
    return ComponentWalker.from_graph(g, comp_id).stats(mu)


def walk_profile(g: ClassNetwork, comp_id: int, mu_max: int) -> WalkProfile:
    return ComponentWalker.from_graph(g, comp_id).profile(mu_max)


def saturation_point(profile: WalkProfile) -> int | None:
    """Smallest memory size from which both profile curves stay constant.

    Returns None when only the final entry is "constant" (nothing saturated
    within the profiled range).  A single-entry profile saturates at 0.
    """
    t, c = profile.mean_transient, profile.mean_cycle
    m = len(t) - 1
    s = m
    while s > 0 and t[s - 1] == t[m] and c[s - 1] == c[m]:
        s -= 1
    if s == m and m > 0:
        return None
    return s
