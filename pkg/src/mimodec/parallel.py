"""Parallel sphere decoding on a shared-memory machine.

Two schemes:

* ``pl_sd_decode`` keeps one shared best-first pool and evaluates a batch of
  nodes per iteration on a persistent pool of threads; pool mutation stays
  serialized in the coordinator.
* ``psd_decode`` runs one search-tree instance per worker under a
  master/worker protocol.  The only shared mutable state is the squared
  sphere radius, published immediately whenever any thread finds a better
  leaf; a stale read can only delay pruning, never break optimality.  The
  master hands one subtree per worker from its first expansion wave and
  refeeds blocked workers from its pool; with dynamic balancing an empty
  master pool triggers stealing the entire pool of the busiest worker, one
  node of which goes to each blocked worker and the rest to the master.

Both return the same final metric as the serial decoder; schedules (and
therefore counters) may vary run to run.
"""

from __future__ import annotations

import math
import queue
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .linalg import PreprocessedProblem
from .sphere import (DetectionReport, Strategy, WorkPool, _apply_successors,
                     _successor_block, _syms_to_vector, expand_node, make_root)

__all__ = [
    "SharedRadius",
    "WorkerState",
    "PsdConfig",
    "pl_sd_decode",
    "psd_decode",
]


class SharedRadius:
    """Monotone shrinking squared radius shared between search instances.

    ``value`` reads are lock-free (and may be momentarily stale, which is
    safe); updates take the lock and apply min-semantics, so the published
    sequence is non-increasing.
    """

    def __init__(self, radius_sq: float, trace=None):
        self.value = radius_sq
        self.best_dist = math.inf
        self.best_syms: Optional[tuple] = None
        self._lock = threading.Lock()
        self._trace = trace

    def propose(self, dist: float, syms: tuple, worker: int = 0) -> bool:
        if dist >= self.value:
            return False
        with self._lock:
            if dist >= self.value:
                return False
            self.value = dist
            self.best_dist = dist
            self.best_syms = syms
            if self._trace is not None:
                self._trace.add(worker, "radius_update", len(syms), dist, dist, syms)
        return True


@dataclass
class WorkerState:
    """Per-worker status the master may observe (racily) for victim choice."""

    wid: int
    pool_size: int = 0
    blocked: bool = True


@dataclass
class PsdConfig:
    """Master/worker decoder configuration.

    Workers always explore best-first.  ``seed`` is stored for schedule
    experiments but unused by the built-in balancing policies.
    """

    n_workers: int
    balancing: str = "dynamic"
    j: int = 1
    seed: Optional[int] = None

    def __post_init__(self):
        if self.n_workers < 1:
            raise ValueError("n_workers must be >= 1")
        if self.balancing not in ("static", "dynamic"):
            raise ValueError(f"balancing must be 'static' or 'dynamic', got {self.balancing!r}")


class _Counters:
    __slots__ = ("visited", "pd_calcs")

    def __init__(self):
        self.visited = 0
        self.pd_calcs = 0


def _finish_report(radius, counters, elapsed, m, n_threads) -> DetectionReport:
    decoded = None
    if radius.best_syms is not None:
        decoded = _syms_to_vector(radius.best_syms, m)
    visited = sum(c.visited for c in counters)
    pd_calcs = sum(c.pd_calcs for c in counters)
    return DetectionReport(
        decoded=decoded,
        dist=radius.best_dist,
        visited_nodes=visited,
        pd_calcs=pd_calcs,
        elapsed_s=elapsed,
        final_radius_sq=radius.value,
        n_threads=n_threads,
        visited_max_thread=max(c.visited for c in counters),
        pd_calcs_max_thread=max(c.pd_calcs for c in counters),
    )


def pl_sd_decode(prob: PreprocessedProblem, n_threads: int, batch_size: int = 20,
                 j: int = 1, trace=None) -> DetectionReport:
    """Low-level parallel SD: branch several pooled nodes per iteration.

    One best-first pool; each iteration pops up to ``n_threads * batch_size``
    nodes, evaluates their successors on the thread pool, then admits the
    results sequentially in pop order.  With one thread and unit batches this
    is step-for-step identical to the serial best-first decoder.
    """
    if n_threads < 1 or batch_size < 1:
        raise ValueError("n_threads and batch_size must be >= 1")
    t0 = time.perf_counter()
    radius = SharedRadius(prob.radius_sq, trace)
    pool = WorkPool(Strategy.BEST_FS)
    pool.push_batch([make_root(prob.m)])
    m = prob.m
    pts = prob.constellation.points
    counters = [_Counters() for _ in range(n_threads)]

    def evaluate(nodes):
        out = []
        for node in nodes:
            jp = min(j, m - node.level)
            out.append((jp, _successor_block(node, prob.r, prob.y_bar, pts, jp,
                                             want_cache=node.level + jp < m)))
        return out

    with ThreadPoolExecutor(max_workers=n_threads) as executor:
        while pool:
            batch = []
            tested = []
            while pool and len(batch) < n_threads * batch_size:
                node = pool.pop()
                seen = radius.value
                if node.pd < seen:
                    batch.append(node)
                    tested.append(seen)
                elif trace is not None:
                    trace.add(0, "prune", node.level, node.pd, seen, node.syms)
            if not batch:
                break
            slices = [batch[t::n_threads] for t in range(n_threads)]
            futures = [executor.submit(evaluate, s) for s in slices]
            results = [f.result() for f in futures]
            # admit in the original pop order, then pool the whole iteration's
            # children as one sorted batch so the best frontier stays on top
            iteration_children = []
            for pos, node in enumerate(batch):
                t, i = pos % n_threads, pos // n_threads
                jp, block = results[t][i]
                children, n_succ = _apply_successors(node, block, jp, prob,
                                                     radius, trace, worker=t,
                                                     tested_radius=tested[pos])
                counters[t].visited += 1
                counters[t].pd_calcs += n_succ
                iteration_children.extend(children)
            if iteration_children:
                pool.push_batch(iteration_children)
    return _finish_report(radius, counters, time.perf_counter() - t0, m, n_threads)


def _sd_worker(wid, prob, j, radius, inbox, master_inbox, state, counters, trace):
    trace_id = wid + 1  # the master records as worker 0
    pool = WorkPool(Strategy.BEST_FS)
    while True:
        msg = inbox.get()
        kind = msg[0]
        if kind == "end":
            return
        if kind == "steal":
            master_inbox.put(("yield", wid, []))
            continue
        node = msg[1]
        state.blocked = False
        pool.push_batch([node])
        state.pool_size = len(pool)
        while pool:
            try:
                req = inbox.get_nowait()
            except queue.Empty:
                req = None
            if req is not None and req[0] == "steal":
                handed = pool.drain()
                state.pool_size = 0
                master_inbox.put(("yield", wid, handed))
                break
            node = pool.pop()
            seen = radius.value
            if not node.pd < seen:
                if trace is not None:
                    trace.add(trace_id, "prune", node.level, node.pd, seen, node.syms)
                state.pool_size = len(pool)
                continue
            children, n_succ = expand_node(node, prob, j, radius, trace,
                                           worker=trace_id, tested_radius=seen)
            counters.visited += 1
            counters.pd_calcs += n_succ
            if children:
                pool.push_batch(children)
            state.pool_size = len(pool)
            time.sleep(0)  # let peers interleave so the shared radius helps them
        state.blocked = True
        state.pool_size = 0
        master_inbox.put(("blocked", wid))


def psd_decode(prob: PreprocessedProblem, config: PsdConfig, trace=None,
               watchdog_s: Optional[float] = None) -> DetectionReport:
    """High-level parallel SD: one master and ``config.n_workers`` SD instances.

    Returns the serial optimum metric for every schedule; raises
    ``TimeoutError`` if ``watchdog_s`` elapses before termination.
    """
    t0 = time.perf_counter()
    n_workers = config.n_workers
    radius = SharedRadius(prob.radius_sq, trace)
    master_counters = _Counters()
    worker_counters = [_Counters() for _ in range(n_workers)]
    pool = WorkPool(Strategy.BEST_FS)
    pool.push_batch([make_root(prob.m)])

    # first expansion wave: grow the pool until one subtree per worker exists
    while pool and len(pool) < n_workers:
        node = pool.pop()
        if not node.pd < radius.value:
            if trace is not None:
                trace.add(0, "prune", node.level, node.pd, radius.value, node.syms)
            continue
        children, n_succ = expand_node(node, prob, j=config.j, radius=radius,
                                       trace=trace, worker=0)
        master_counters.visited += 1
        master_counters.pd_calcs += n_succ
        if children:
            pool.push_batch(children)

    counters = [master_counters] + worker_counters
    if not pool:
        # tree exhausted during the first wave; nothing to distribute
        return _finish_report(radius, counters, time.perf_counter() - t0,
                              prob.m, n_workers)

    states = [WorkerState(wid) for wid in range(n_workers)]
    inboxes = [queue.Queue() for _ in range(n_workers)]
    master_inbox: queue.Queue = queue.Queue()
    threads = []
    for wid in range(n_workers):
        th = threading.Thread(
            target=_sd_worker,
            args=(wid, prob, config.j, radius, inboxes[wid], master_inbox,
                  states[wid], worker_counters[wid], trace),
            daemon=True,
        )
        th.start()
        threads.append(th)

    blocked = set(range(n_workers))
    pending_steal: Optional[int] = None
    deadline = None if watchdog_s is None else time.monotonic() + watchdog_s
    timed_out = False
    while True:
        while pool and blocked:
            node = pool.pop()
            if not node.pd < radius.value:
                if trace is not None:
                    trace.add(0, "prune", node.level, node.pd, radius.value, node.syms)
                continue
            wid = min(blocked)
            blocked.discard(wid)
            inboxes[wid].put(("node", node))
        if not pool and pending_steal is None:
            if len(blocked) == n_workers:
                break
            if config.balancing == "dynamic":
                running = [w for w in range(n_workers) if w not in blocked]
                sizes = [(states[w].pool_size, -w) for w in running]
                if sizes and max(sizes)[0] > 0:
                    victim = -max(sizes)[1]
                    pending_steal = victim
                    inboxes[victim].put(("steal",))
        if deadline is not None and time.monotonic() > deadline:
            timed_out = True
            break
        try:
            msg = master_inbox.get(timeout=0.01)
        except queue.Empty:
            continue
        if msg[0] == "blocked":
            blocked.add(msg[1])
        elif msg[0] == "yield":
            pending_steal = None
            if msg[2]:
                pool.push_batch(msg[2])

    for inbox in inboxes:
        inbox.put(("end",))
    for th in threads:
        th.join()
    if timed_out:
        raise TimeoutError(f"psd_decode exceeded watchdog of {watchdog_s} s")
    return _finish_report(radius, counters, time.perf_counter() - t0,
                          prob.m, n_workers)
