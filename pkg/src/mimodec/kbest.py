"""Fixed-complexity K-best detection and the hybrid SD/K-best decoder.

``kbest_decode`` walks the tree level by level keeping only the ``k`` best
partial assignments, so its node counts depend only on the problem shape,
never on the noise realization.  ``sd_kbest_decode`` keeps an exact
best-first sphere search on a master thread and hands its most promising
subtrees to workers that finish them with radius-aware K-best descents,
publishing every improved leaf into the shared radius.
"""

from __future__ import annotations

import math
import queue
import threading
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .linalg import PreprocessedProblem
from .parallel import SharedRadius, _Counters, _finish_report
from .sphere import (DetectionReport, SearchNode, Strategy, WorkPool,
                     expand_node, make_root)

__all__ = ["KbestConfig", "kbest_decode", "sd_kbest_decode"]


@dataclass
class KbestConfig:
    """Hybrid decoder configuration.

    ``closeness_eps`` admits extra candidates whose partial distance is
    within a relative slack of the k-th best; zero keeps exactly ``k``.
    """

    k: int
    closeness_eps: float = 0.05
    n_workers: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.closeness_eps < 0:
            raise ValueError("closeness_eps must be >= 0")
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")


def _wave_children(pd, syms, cache, level, r_mat, y_bar, pts):
    """Expand a whole level of survivors by one symbol (vectorized).

    ``cache`` has one column per not-yet-consumed matrix row; the returned
    cache is trimmed by the consumed row.
    """
    m = y_bar.shape[0]
    q = pts.size
    n = pd.shape[0]
    row = m - 1 - level
    pd_c = np.repeat(pd, q)
    cache_c = np.repeat(cache, q, axis=0)
    dig = np.tile(np.arange(q, dtype=np.int16), n)
    w = pts[dig]
    diff = y_bar[row] - cache_c[:, row] - r_mat[row, row] * w
    pd_c += diff.real**2 + diff.imag**2
    if row > 0:
        cache_c[:, :row] += w[:, None] * r_mat[:row, row][None, :]
    syms_c = np.concatenate([np.repeat(syms, q, axis=0), dig[:, None]], axis=1)
    return pd_c, syms_c, cache_c[:, :row]


def _trace_level(trace, wid, kind, level, pds, radius_sq, syms):
    for i in range(pds.shape[0]):
        trace.add(wid, kind, level, float(pds[i]), radius_sq,
                  tuple(int(t) for t in syms[i]))


def kbest_decode(prob: PreprocessedProblem, k: int, trace=None) -> DetectionReport:
    """Level-synchronous search keeping the ``k`` lowest-metric nodes per level.

    The sphere radius of ``prob`` is ignored: complexity is fixed by
    (M, alphabet, k) alone.  Ties sort stably by (pd, candidate order).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    t0 = time.perf_counter()
    m = prob.m
    pts = prob.constellation.points
    q = pts.size
    pd = np.zeros(1)
    syms = np.zeros((1, 0), dtype=np.int16)
    cache = np.zeros((1, m), dtype=np.complex128)
    visited = 0
    pd_calcs = 0
    best_dist = math.inf
    best_syms: Optional[tuple] = None
    for level in range(m):
        if trace is not None:
            _trace_level(trace, 0, "expand", level, pd, math.inf, syms)
        n = pd.shape[0]
        visited += n
        pd_calcs += n * q
        pd_c, syms_c, cache = _wave_children(pd, syms, cache, level, prob.r,
                                             prob.y_bar, pts)
        if level == m - 1:
            i = int(np.argmin(pd_c))
            best_dist = float(pd_c[i])
            best_syms = tuple(int(t) for t in syms_c[i])
            if trace is not None:
                running = math.inf
                for idx in range(pd_c.shape[0]):
                    d = float(pd_c[idx])
                    suffix = tuple(int(t) for t in syms_c[idx])
                    trace.add(0, "leaf", m, d, math.inf, suffix)
                    if d < running:
                        running = d
                        trace.add(0, "radius_update", m, d, d, suffix)
            break
        order = np.argsort(pd_c, kind="stable")
        keep = order[:k]
        if trace is not None and order.shape[0] > k:
            dropped = order[k:]
            _trace_level(trace, 0, "drop", level + 1, pd_c[dropped], math.inf,
                         syms_c[dropped])
        pd = pd_c[keep]
        syms = syms_c[keep]
        cache = cache[keep]
    decoded = np.array(best_syms[::-1], dtype=np.int64)
    return DetectionReport(
        decoded=decoded,
        dist=best_dist,
        visited_nodes=visited,
        pd_calcs=pd_calcs,
        elapsed_s=time.perf_counter() - t0,
        final_radius_sq=math.inf,
    )


def _kbest_descent(node: SearchNode, prob: PreprocessedProblem, k: int,
                   eps: float, radius: SharedRadius, counters: _Counters,
                   trace, wid: int) -> None:
    """One radius-aware K-best pass over the subtree rooted at ``node``."""
    m = prob.m
    pts = prob.constellation.points
    q = pts.size
    level = node.level
    pd = np.array([node.pd])
    syms = np.array([node.syms], dtype=np.int16).reshape(1, level)
    cache = node.cache[None, :m - level].copy()
    while level < m:
        if trace is not None:
            _trace_level(trace, wid, "expand", level, pd, radius.value, syms)
        counters.visited += pd.shape[0]
        counters.pd_calcs += pd.shape[0] * q
        pd_c, syms_c, cache = _wave_children(pd, syms, cache, level, prob.r,
                                             prob.y_bar, pts)
        level += 1
        if level == m:
            if trace is None:
                i = int(np.argmin(pd_c))
                d = float(pd_c[i])
                if d < radius.value:
                    radius.propose(d, tuple(int(t) for t in syms_c[i]), wid)
            else:
                for idx in range(pd_c.shape[0]):
                    d = float(pd_c[idx])
                    suffix = tuple(int(t) for t in syms_c[idx])
                    seen = radius.value
                    if d < seen:
                        trace.add(wid, "leaf", m, d, seen, suffix)
                        radius.propose(d, suffix, wid)
                    else:
                        trace.add(wid, "prune", m, d, seen, suffix)
            return
        r2 = radius.value
        inside = pd_c < r2
        if trace is not None:
            outside = np.flatnonzero(~inside)
            _trace_level(trace, wid, "prune", level, pd_c[outside], r2,
                         syms_c[outside])
        if not inside.any():
            return  # whole kept set left the sphere; ask the master for more
        cand = np.flatnonzero(inside)
        order = cand[np.argsort(pd_c[cand], kind="stable")]
        kth = float(pd_c[order[min(k, order.shape[0]) - 1]])
        slack = (1.0 + eps) * kth
        keep_mask = np.zeros(order.shape[0], dtype=bool)
        keep_mask[:k] = True
        keep_mask |= pd_c[order] < slack
        keep = order[keep_mask]
        if trace is not None:
            dropped = order[~keep_mask]
            _trace_level(trace, wid, "drop", level, pd_c[dropped], r2,
                         syms_c[dropped])
        pd = pd_c[keep]
        syms = syms_c[keep]
        cache = cache[keep]


def _kbest_worker(wid, prob, k, eps, radius, inbox, master_inbox, counters, trace):
    trace_id = wid + 1  # the master records as worker 0
    while True:
        msg = inbox.get()
        if msg[0] == "end":
            return
        _kbest_descent(msg[1], prob, k, eps, radius, counters, trace, trace_id)
        time.sleep(0)
        master_inbox.put(("blocked", wid))


def sd_kbest_decode(prob: PreprocessedProblem, config: KbestConfig, trace=None,
                    watchdog_s: Optional[float] = None) -> DetectionReport:
    """Hybrid decoder: best-first SD master tree finished by K-best workers.

    The master keeps expanding the most promising frontier nodes exactly
    (respecting the shared radius) while idle workers consume the stalest
    end of its pool with radius-aware K-best descents; every worker leaf
    tightens the shared radius and therefore the master's own search.
    Dispatching starts once the pool holds a few nodes per worker, and the
    run ends when the pool drains and all workers rest.  Approximate: the
    returned leaf is the best one seen anywhere, not necessarily ML.
    """
    t0 = time.perf_counter()
    n_workers = config.n_workers
    radius = SharedRadius(prob.radius_sq, trace)
    master_counters = _Counters()
    worker_counters = [_Counters() for _ in range(n_workers)]
    pool = WorkPool(Strategy.BEST_FS)
    pool.push_batch([make_root(prob.m)])
    feed_gate = 4 * n_workers

    inboxes = [queue.Queue() for _ in range(n_workers)]
    master_inbox: queue.Queue = queue.Queue()
    threads = []
    for wid in range(n_workers):
        th = threading.Thread(
            target=_kbest_worker,
            args=(wid, prob, config.k, config.closeness_eps, radius,
                  inboxes[wid], master_inbox, worker_counters[wid], trace),
            daemon=True,
        )
        th.start()
        threads.append(th)

    blocked = set(range(n_workers))
    feeding = False
    deadline = None if watchdog_s is None else time.monotonic() + watchdog_s
    timed_out = False
    while True:
        # exact best-first expansion of the promising end of the frontier
        steps = 0
        while pool and steps < 16:
            node = pool.pop()
            if not node.pd < radius.value:
                if trace is not None:
                    trace.add(0, "prune", node.level, node.pd, radius.value, node.syms)
                continue
            children, n_succ = expand_node(node, prob, j=1, radius=radius,
                                           trace=trace, worker=0)
            master_counters.visited += 1
            master_counters.pd_calcs += n_succ
            if children:
                pool.push_batch(children)
            steps += 1
        feeding = feeding or len(pool) >= feed_gate
        # hand the stalest subtrees to idle workers
        while feeding and blocked and len(pool) > 1:
            node = pool.pop_oldest()
            if not node.pd < radius.value:
                if trace is not None:
                    trace.add(0, "prune", node.level, node.pd, radius.value, node.syms)
                continue
            wid = min(blocked)
            blocked.discard(wid)
            inboxes[wid].put(("node", node))
        if not pool and len(blocked) == n_workers:
            break
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        try:
            msg = master_inbox.get(timeout=0.01 if not pool else 0.0)
        except queue.Empty:
            continue
        if msg[0] == "blocked":
            blocked.add(msg[1])

    for inbox in inboxes:
        inbox.put(("end",))
    for th in threads:
        th.join()
    if timed_out:
        raise TimeoutError(f"sd_kbest_decode exceeded watchdog of {watchdog_s} s")
    counters = [master_counters] + worker_counters
    return _finish_report(radius, counters, time.perf_counter() - t0,
                          prob.m, n_workers + 1)
