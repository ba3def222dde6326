"""Serial sphere decoding over the QR-reduced metric, plus the ML oracle.

The search tree fixes one transmit symbol per level starting from the last
vector position: level 1 fixes ``s[M-1]``, level ``L`` fixes ``s[M-L]``.
A node's partial distance is the sum of per-level residual terms; children
never have a smaller partial distance than their parent, which is what makes
radius pruning sound.

Three pool disciplines are supported: FIFO (breadth first), LIFO (depth
first), and depth first with each branching's children sorted by partial
distance so the best successor is expanded first.  Grouped branching fixes
``j`` symbols per expansion, trading ``|alphabet|**j`` fan-out for fewer
evaluation stages per path, and successor metrics are computed incrementally
from cached row sums rather than from scratch.
"""

from __future__ import annotations

import enum
import math
import time
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import PreprocessedProblem

__all__ = [
    "Strategy",
    "SearchNode",
    "WorkPool",
    "DetectionReport",
    "CapExceededError",
    "make_root",
    "branch",
    "evaluate_incremental",
    "sd_decode",
    "ml_bruteforce",
]


class CapExceededError(ValueError):
    """Search space too large for exhaustive enumeration."""


class Strategy(enum.Enum):
    BFS = "bfs"
    DFS = "dfs"
    BEST_FS = "bestfs"

    @classmethod
    def from_name(cls, name) -> "Strategy":
        if isinstance(name, cls):
            return name
        key = str(name).lower().replace("-", "").replace("_", "")
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown strategy: {name!r}")


class SearchNode:
    """A partial symbol assignment.

    ``syms`` holds constellation indices in fixing order (``syms[0]`` is the
    symbol at vector position M-1).  ``cache`` row ``r`` holds the running sum
    of ``R[r, i] * s_i`` over the already-fixed positions, which makes child
    evaluation O(j * M) regardless of depth.
    """

    __slots__ = ("pd", "level", "syms", "cache")

    def __init__(self, pd: float, level: int, syms: tuple, cache: np.ndarray):
        self.pd = pd
        self.level = level
        self.syms = syms
        self.cache = cache

    def __repr__(self):
        return f"SearchNode(level={self.level}, pd={self.pd:.6g}, syms={self.syms})"


def make_root(m: int) -> SearchNode:
    return SearchNode(0.0, 0, (), np.zeros(m, dtype=np.complex128))


class WorkPool:
    """Ordered node container realizing one exploration policy.

    BFS removes in insertion order, DFS removes the most recently inserted,
    and best-first sorts each inserted batch by (pd, child index) so removal
    takes the best child of the most recent expansion first.
    """

    def __init__(self, strategy):
        self.strategy = Strategy.from_name(strategy)
        self._items: deque = deque()

    def __len__(self):
        return len(self._items)

    def __bool__(self):
        return bool(self._items)

    def push_batch(self, children) -> None:
        """Insert one branching's children (given in child index order)."""
        if self.strategy is Strategy.BEST_FS:
            ordered = sorted(children, key=lambda node: node.pd)
            self._items.extend(reversed(ordered))
        else:
            self._items.extend(children)

    def pop(self) -> SearchNode:
        if self.strategy is Strategy.BFS:
            return self._items.popleft()
        return self._items.pop()

    def pop_oldest(self) -> SearchNode:
        """Remove from the end opposite to ``pop`` (the stalest frontier)."""
        if self.strategy is Strategy.BFS:
            return self._items.pop()
        return self._items.popleft()

    def drain(self) -> list:
        """Remove and return all pooled nodes (used for work transfer)."""
        items = list(self._items)
        self._items.clear()
        return items


@dataclass
class DetectionReport:
    """Decode result plus complexity counters.

    ``visited_nodes`` counts nodes on which branching was performed and
    ``pd_calcs`` counts evaluated successors (the sum over branchings of the
    fan-out).  ``decoded`` holds symbol indices in vector order, or ``None``
    when no leaf was found inside the sphere (an erasure, not a failure).
    For multi-threaded decoders the counters are totals and the ``*_max_thread``
    fields carry the largest single-thread share.
    """

    decoded: Optional[np.ndarray]
    dist: float
    visited_nodes: int
    pd_calcs: int
    elapsed_s: float
    final_radius_sq: float
    n_threads: int = 1
    visited_max_thread: Optional[int] = None
    pd_calcs_max_thread: Optional[int] = None

    def __post_init__(self):
        if self.visited_max_thread is None:
            self.visited_max_thread = self.visited_nodes
        if self.pd_calcs_max_thread is None:
            self.pd_calcs_max_thread = self.pd_calcs

    @property
    def erasure(self) -> bool:
        return self.decoded is None


class _LocalRadius:
    """Single-thread radius state with the same interface as the shared one."""

    __slots__ = ("value", "best_dist", "best_syms", "_trace")

    def __init__(self, radius_sq: float, trace=None):
        self.value = radius_sq
        self.best_dist = math.inf
        self.best_syms: Optional[tuple] = None
        self._trace = trace

    def propose(self, dist: float, syms: tuple, worker: int = 0) -> bool:
        if dist < self.value:
            self.value = dist
            self.best_dist = dist
            self.best_syms = syms
            if self._trace is not None:
                self._trace.add(worker, "radius_update", len(syms), dist, dist, syms)
            return True
        return False


# mixed-radix digit patterns for successor enumeration, keyed by (q, jp)
_DIGITS: dict = {}


def _digit_block(q: int, jp: int) -> np.ndarray:
    key = (q, jp)
    block = _DIGITS.get(key)
    if block is None:
        n = q**jp
        lin = np.arange(n, dtype=np.int64)
        block = np.empty((jp, n), dtype=np.int32)
        for j in range(jp):
            block[j] = (lin // q ** (jp - 1 - j)) % q
        block.setflags(write=False)
        _DIGITS[key] = block
    return block


def _successor_block(node: SearchNode, r: np.ndarray, y_bar: np.ndarray,
                     pts: np.ndarray, jp: int, want_cache: bool):
    """Evaluate all q**jp successors of a node in one vectorized pass.

    Returns (digits, pds, caches); ``caches`` is None when the children are
    leaves and ``want_cache`` is False.
    """
    m = y_bar.shape[0]
    q = pts.size
    n = q**jp
    digits = _digit_block(q, jp)
    pd = np.full(n, node.pd)
    cache = np.repeat(node.cache[None, :], n, axis=0)
    lo = 0 if want_cache else m - node.level - jp
    for j in range(jp):
        row = m - 1 - node.level - j
        w = pts[digits[j]]
        diff = y_bar[row] - cache[:, row] - r[row, row] * w
        pd += diff.real**2 + diff.imag**2
        if row > lo:
            cache[:, lo:row] += w[:, None] * r[lo:row, row][None, :]
    return digits, pd, (cache if want_cache else None)


def branch(node: SearchNode, constellation, j: int, r: np.ndarray,
           y_bar: np.ndarray) -> list[SearchNode]:
    """All successors of a node, fixing ``min(j, M - level)`` more symbols.

    Children are returned in lexicographic order of their constellation
    index tuple, each with its partial distance evaluated incrementally.
    """
    m = y_bar.shape[0]
    jp = min(j, m - node.level)
    if jp < 1:
        raise ValueError("cannot branch a full assignment")
    pts = constellation.points
    digits, pds, caches = _successor_block(node, r, y_bar, pts, jp, want_cache=True)
    level = node.level + jp
    return [
        SearchNode(float(pds[i]), level, node.syms + tuple(int(t) for t in digits[:, i]),
                   caches[i])
        for i in range(pds.shape[0])
    ]


def evaluate_incremental(parent: SearchNode, new_symbols, r: np.ndarray,
                         y_bar: np.ndarray):
    """Extend a node by the given complex symbol values, one level each.

    Returns ``(pd, cache)`` for the extended assignment; the parent's cached
    row sums make the cost O(len(new_symbols) * M) regardless of depth.
    """
    m = y_bar.shape[0]
    cache = parent.cache.copy()
    pd = parent.pd
    level = parent.level
    for w in new_symbols:
        if level >= m:
            raise ValueError("extension exceeds the number of tree levels")
        row = m - 1 - level
        diff = y_bar[row] - cache[row] - r[row, row] * w
        pd += diff.real**2 + diff.imag**2
        if row > 0:
            cache[:row] += r[:row, row] * w
        level += 1
    return float(pd), cache


def expand_node(node: SearchNode, prob: PreprocessedProblem, j: int,
                radius, trace=None, worker: int = 0,
                tested_radius: Optional[float] = None):
    """Branch an admitted node against the current radius.

    Improved leaves are published through ``radius.propose``; returns the
    admitted non-leaf children (in child index order) and the successor count.
    """
    jp = min(j, prob.m - node.level)
    block = _successor_block(node, prob.r, prob.y_bar, prob.constellation.points,
                             jp, want_cache=node.level + jp < prob.m)
    return _apply_successors(node, block, jp, prob, radius, trace, worker,
                             tested_radius)


def _apply_successors(node: SearchNode, block, jp: int, prob: PreprocessedProblem,
                      radius, trace=None, worker: int = 0,
                      tested_radius: Optional[float] = None):
    """Admission step for a precomputed successor block (radius tests, leaf
    publication).  Kept separate so batched decoders can evaluate blocks in
    worker threads and serialize only this part.  ``tested_radius`` is the
    radius the node passed its own prune test against, when that happened
    earlier than this call (batched decoders)."""
    digits, pds, caches = block
    m = prob.m
    child_level = node.level + jp
    is_leaf = child_level == m
    assert pds.min() >= node.pd
    n = pds.shape[0]
    if trace is not None:
        seen = radius.value if tested_radius is None else tested_radius
        trace.add(worker, "expand", node.level, node.pd, seen, node.syms)
    if is_leaf:
        if trace is None:
            i = int(np.argmin(pds))
            dmin = float(pds[i])
            if dmin < radius.value:
                radius.propose(dmin, node.syms + tuple(int(t) for t in digits[:, i]),
                               worker)
        else:
            for i in range(n):
                d = float(pds[i])
                suffix = node.syms + tuple(int(t) for t in digits[:, i])
                seen = radius.value
                if d < seen:
                    trace.add(worker, "leaf", m, d, seen, suffix)
                    radius.propose(d, suffix, worker)
                else:
                    trace.add(worker, "prune", m, d, seen, suffix)
        return [], n
    r2 = radius.value
    mask = pds < r2
    children = []
    if trace is None:
        kept = np.flatnonzero(mask)
        if kept.size:
            kept_caches = caches[kept]
            children = [
                SearchNode(float(pds[k]), child_level,
                           node.syms + tuple(int(t) for t in digits[:, k]),
                           kept_caches[ki])
                for ki, k in enumerate(kept)
            ]
    else:
        for i in range(n):
            suffix = node.syms + tuple(int(t) for t in digits[:, i])
            if mask[i]:
                children.append(SearchNode(float(pds[i]), child_level, suffix, caches[i]))
            else:
                trace.add(worker, "prune", child_level, float(pds[i]), r2, suffix)
    return children, n


def _syms_to_vector(syms: tuple, m: int) -> np.ndarray:
    # fixing order is position M-1 downward; flip into vector order
    return np.array(syms[::-1], dtype=np.int64)


def _sd_pooled(prob: PreprocessedProblem, strategy: Strategy, j: int, trace):
    radius = _LocalRadius(prob.radius_sq, trace)
    pool = WorkPool(strategy)
    pool.push_batch([make_root(prob.m)])
    visited = 0
    pd_calcs = 0
    while pool:
        node = pool.pop()
        if not node.pd < radius.value:
            if trace is not None:
                trace.add(0, "prune", node.level, node.pd, radius.value, node.syms)
            continue
        children, n_succ = expand_node(node, prob, j, radius, trace)
        visited += 1
        pd_calcs += n_succ
        if children:
            pool.push_batch(children)
    return radius, visited, pd_calcs


def _sd_bfs_fast(prob: PreprocessedProblem, j: int):
    """Level-synchronous breadth-first search, counter-equivalent to the pool loop."""
    r_mat = prob.r
    y_bar = prob.y_bar
    pts = prob.constellation.points
    m = prob.m
    q = pts.size
    radius = _LocalRadius(prob.radius_sq)
    visited = 0
    pd_calcs = 0
    # wave state: cache column c corresponds to matrix row c
    pd = np.zeros(1)
    syms = np.zeros((1, 0), dtype=np.int16)
    cache = np.zeros((1, m), dtype=np.complex128)
    level = 0
    target_children = 1 << 19
    while level < m and pd.shape[0]:
        jp = min(j, m - level)
        fanout = q**jp
        n_par = pd.shape[0]
        digits = _digit_block(q, jp)
        par_chunk = max(1, target_children // fanout)
        is_leaf = level + jp == m
        if not is_leaf:
            new_pd, new_syms, new_cache = [], [], []
            width = m - level - jp
            for start in range(0, n_par, par_chunk):
                end = min(start + par_chunk, n_par)
                pd_c = np.repeat(pd[start:end], fanout)
                cache_c = np.repeat(cache[start:end], fanout, axis=0)
                dig_c = np.tile(digits, end - start)
                for jj in range(jp):
                    row = m - 1 - level - jj
                    w = pts[dig_c[jj]]
                    diff = y_bar[row] - cache_c[:, row] - r_mat[row, row] * w
                    pd_c += diff.real**2 + diff.imag**2
                    if row > 0:
                        cache_c[:, :row] += w[:, None] * r_mat[:row, row][None, :]
                mask = pd_c < radius.value
                new_pd.append(pd_c[mask])
                new_cache.append(cache_c[:, :width][mask])
                syms_c = np.concatenate(
                    [np.repeat(syms[start:end], fanout, axis=0),
                     dig_c.T.astype(np.int16)], axis=1)
                new_syms.append(syms_c[mask])
            visited += n_par
            pd_calcs += n_par * fanout
            pd = np.concatenate(new_pd)
            syms = np.concatenate(new_syms)
            cache = np.concatenate(new_cache)
            level += jp
        else:
            # leaf wave: emulate sequential FIFO admission with radius updates
            par_min = np.empty(n_par)
            par_arg = np.empty(n_par, dtype=np.int64)
            for start in range(0, n_par, par_chunk):
                end = min(start + par_chunk, n_par)
                pd_c = np.repeat(pd[start:end], fanout)
                cache_c = np.repeat(cache[start:end], fanout, axis=0)
                dig_c = np.tile(digits, end - start)
                for jj in range(jp):
                    row = m - 1 - level - jj
                    w = pts[dig_c[jj]]
                    diff = y_bar[row] - cache_c[:, row] - r_mat[row, row] * w
                    pd_c += diff.real**2 + diff.imag**2
                    if row > 0:
                        cache_c[:, :row] += w[:, None] * r_mat[:row, row][None, :]
                block = pd_c.reshape(end - start, fanout)
                par_arg[start:end] = block.argmin(axis=1)
                par_min[start:end] = block[np.arange(end - start), par_arg[start:end]]
            i = 0
            while i < n_par:
                improving = np.flatnonzero(par_min[i:] < radius.value)
                if improving.size == 0:
                    branched = int((pd[i:] < radius.value).sum())
                    visited += branched
                    pd_calcs += branched * fanout
                    break
                stop = i + int(improving[0])
                branched = int((pd[i:stop + 1] < radius.value).sum())
                visited += branched
                pd_calcs += branched * fanout
                combo = tuple(int(t) for t in digits[:, int(par_arg[stop])])
                suffix = tuple(int(t) for t in syms[stop]) + combo
                radius.propose(float(par_min[stop]), suffix)
                i = stop + 1
            break
    return radius, visited, pd_calcs


def sd_decode(prob: PreprocessedProblem, strategy="bestfs", j: int = 1,
              trace=None) -> DetectionReport:
    """Sphere-decode a preprocessed problem.

    Returns the minimum-metric vector inside the sphere (the ML solution
    whenever the initial radius contains it); an empty sphere yields an
    erasure report rather than an error.
    """
    strategy = Strategy.from_name(strategy)
    if j < 1:
        raise ValueError("group size j must be >= 1")
    t0 = time.perf_counter()
    if strategy is Strategy.BFS and trace is None:
        radius, visited, pd_calcs = _sd_bfs_fast(prob, j)
    else:
        radius, visited, pd_calcs = _sd_pooled(prob, strategy, j, trace)
    elapsed = time.perf_counter() - t0
    decoded = None
    if radius.best_syms is not None:
        decoded = _syms_to_vector(radius.best_syms, prob.m)
    return DetectionReport(
        decoded=decoded,
        dist=radius.best_dist,
        visited_nodes=visited,
        pd_calcs=pd_calcs,
        elapsed_s=elapsed,
        final_radius_sq=radius.value,
    )


def ml_bruteforce(prob: PreprocessedProblem, cap: int = 1 << 24) -> DetectionReport:
    """Exhaustive minimization of the reduced metric over the whole alphabet.

    Desk-scale oracle: refuses when ``|alphabet|**M`` exceeds ``cap``.  Ties
    break toward the lexicographically smallest index vector.
    """
    q = prob.constellation.size
    m = prob.m
    total = q**m
    if total > cap:
        raise CapExceededError(f"{q}**{m} = {total} exceeds cap {cap}")
    pts = prob.constellation.points
    powers = q ** np.arange(m - 1, -1, -1, dtype=np.int64)
    t0 = time.perf_counter()
    # split positions into a leading block enumerated per chunk and a trailing
    # block whose product with R is shared by every chunk
    p = m
    while q**p > (1 << 17) and p > 1:
        p -= 1
    lo_count = q**p
    lin_lo = np.arange(lo_count, dtype=np.int64)
    digits_lo = (lin_lo[None, :] // powers[m - p:, None]) % q
    b_lo = prob.r[:, m - p:] @ pts[digits_lo]
    best = math.inf
    best_lin = -1
    for hi in range(total // lo_count):
        hi_digits = (hi // (q ** np.arange(m - p - 1, -1, -1, dtype=np.int64))) % q
        u = prob.y_bar - prob.r[:, :m - p] @ pts[hi_digits]
        b = u[:, None] - b_lo
        dists = (b.real**2 + b.imag**2).sum(axis=0)
        i = int(np.argmin(dists))
        if dists[i] < best:
            best = float(dists[i])
            best_lin = hi * lo_count + i
    decoded = ((best_lin // powers) % q).astype(np.int64)
    elapsed = time.perf_counter() - t0
    return DetectionReport(
        decoded=decoded,
        dist=best,
        visited_nodes=0,
        pd_calcs=total,
        elapsed_s=elapsed,
        final_radius_sq=best,
    )
