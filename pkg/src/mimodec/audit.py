"""Independent verification kernels: from-scratch metrics and trace audits.

``scratch_pd`` re-derives partial distances with a literal double loop and
deliberately shares no helper with the decoders, so agreement between the two
routes is evidence rather than tautology.

Trace dump format (one event per line, space separated)::

    kind worker seq pub level pd radius_sq suffix

``suffix`` is a comma-separated list of symbol indices in fixing order
(first entry is the symbol fixed at tree level 1), or ``-`` for the root.
``pub`` is the radius publication index (-1 for non radius_update events).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

__all__ = [
    "scratch_pd",
    "TraceEvent",
    "TraceRecorder",
    "AuditVerdict",
    "verify_trace",
    "dump_trace",
    "load_trace",
]


def scratch_pd(suffix, r, y_bar) -> float:
    """Partial distance of a fixed suffix, evaluated from scratch.

    ``suffix`` holds complex symbol values in fixing order: the first entry
    is the symbol at vector position M-1, the second at M-2, and so on.
    """
    m = len(y_bar)
    length = len(suffix)
    if not 1 <= length <= m:
        raise ValueError(f"suffix length {length} outside 1..{m}")
    total = 0.0
    for k in range(1, length + 1):
        row = m - k
        acc = complex(y_bar[row])
        for i in range(row, m):
            # position i carries the (m - 1 - i)-th fixed symbol
            acc -= complex(r[row, i]) * complex(suffix[m - 1 - i])
        total += acc.real * acc.real + acc.imag * acc.imag
    return total


class TraceEvent(NamedTuple):
    kind: str          # expand | prune | drop | leaf | radius_update
    worker: int
    seq: int           # per-worker monotone sequence number
    pub: int           # radius publication index, -1 if not a radius_update
    level: int
    pd: float
    radius_sq: float   # radius value read (or published) at the event
    suffix: tuple      # symbol indices in fixing order


class TraceRecorder:
    """Collects decoder events into per-worker buffers.

    Buffers are single-writer; the publication counter for radius updates is
    the only shared piece and is guarded by a lock.
    """

    def __init__(self):
        self._buffers: dict[int, list[TraceEvent]] = {}
        self._pub_lock = threading.Lock()
        self._pub_count = 0

    def add(self, worker: int, kind: str, level: int, pd: float,
            radius_sq: float, suffix: tuple) -> None:
        buf = self._buffers.setdefault(worker, [])
        pub = -1
        if kind == "radius_update":
            with self._pub_lock:
                pub = self._pub_count
                self._pub_count += 1
        buf.append(TraceEvent(kind, worker, len(buf), pub, level,
                              float(pd), float(radius_sq), tuple(suffix)))

    def events(self) -> list[TraceEvent]:
        """All events, merged by (worker, seq)."""
        merged: list[TraceEvent] = []
        for wid in sorted(self._buffers):
            merged.extend(self._buffers[wid])
        return merged


def dump_trace(events: Iterable[TraceEvent], path) -> None:
    with open(path, "w") as fh:
        for ev in events:
            suffix = ",".join(str(i) for i in ev.suffix) if ev.suffix else "-"
            fh.write(f"{ev.kind} {ev.worker} {ev.seq} {ev.pub} {ev.level} "
                     f"{ev.pd!r} {ev.radius_sq!r} {suffix}\n")


def load_trace(path) -> list[TraceEvent]:
    events = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            kind, worker, seq, pub, level, pd, radius, suffix = line.split()
            tup = () if suffix == "-" else tuple(int(t) for t in suffix.split(","))
            events.append(TraceEvent(kind, int(worker), int(seq), int(pub),
                                     int(level), float(pd), float(radius), tup))
    return events


@dataclass
class AuditVerdict:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "trace audit: ok"
        body = "\n  ".join(self.violations)
        return f"trace audit: {len(self.violations)} violation(s)\n  {body}"


def _events_of(trace) -> list[TraceEvent]:
    if isinstance(trace, TraceRecorder):
        return trace.events()
    return list(trace)


def verify_trace(trace, problem) -> AuditVerdict:
    """Check a recorded trace against the search-tree bookkeeping rules.

    Verifies: radius publications are non-increasing, pruned nodes met the
    radius they were tested against, leaves beat it, every generated child is
    later expanded, pruned, dropped, or evaluated as a leaf exactly once, and
    partial distances never decrease from parent to child.
    """
    events = _events_of(trace)
    m = problem.m
    q = problem.constellation.size
    verdict = AuditVerdict()

    radii = sorted((ev for ev in events if ev.kind == "radius_update"),
                   key=lambda ev: ev.pub)
    for prev, cur in zip(radii, radii[1:]):
        if cur.radius_sq > prev.radius_sq:
            verdict.violations.append(
                f"radius increased at publication {cur.pub}: "
                f"{prev.radius_sq!r} -> {cur.radius_sq!r}")

    terminal: dict[tuple, TraceEvent] = {}
    for ev in events:
        if ev.kind == "radius_update":
            continue
        if ev.kind == "prune" and not (ev.pd >= ev.radius_sq):
            verdict.violations.append(
                f"pruned node {ev.suffix} has pd {ev.pd!r} below radius {ev.radius_sq!r}")
        if ev.kind == "leaf":
            # a stale radius may let an extra node expand (harmless), but an
            # accepted leaf must have beaten the radius it was tested against
            if not (ev.pd < ev.radius_sq):
                verdict.violations.append(
                    f"leaf {ev.suffix} with pd {ev.pd!r} not inside radius {ev.radius_sq!r}")
            if ev.level != m:
                verdict.violations.append(f"leaf event at non-leaf level {ev.level}")
        if ev.suffix in terminal:
            verdict.violations.append(f"node {ev.suffix} has two terminal events")
        terminal[ev.suffix] = ev

    # conservation: each expanded node's children all appear, each exactly once
    expands = {ev.suffix: ev for ev in events if ev.kind == "expand"}
    children_of: dict[tuple, list[TraceEvent]] = {}
    for ev in terminal.values():
        if not ev.suffix:
            continue  # root has no parent
        parent = None
        for cut in range(len(ev.suffix) - 1, -1, -1):
            cand = expands.get(ev.suffix[:cut])
            if cand is not None:
                parent = cand
                break
        if parent is None:
            verdict.violations.append(f"node {ev.suffix} has no expanded ancestor")
            continue
        children_of.setdefault(parent.suffix, []).append(ev)
        if ev.pd < parent.pd:
            verdict.violations.append(
                f"child {ev.suffix} pd {ev.pd!r} below parent pd {parent.pd!r}")
    for ev in expands.values():
        kids = children_of.get(ev.suffix, [])
        if not kids:
            verdict.violations.append(f"expanded node {ev.suffix} has no recorded children")
            continue
        groups = {len(kid.suffix) - ev.level for kid in kids}
        if len(groups) != 1:
            verdict.violations.append(
                f"children of {ev.suffix} span inconsistent levels {sorted(groups)}")
            continue
        expected = q ** groups.pop()
        if len(kids) != expected:
            verdict.violations.append(
                f"expanded node {ev.suffix} accounts for {len(kids)} of {expected} children")
    return verdict
