"""Time-varying connectivity: range model, contact traces, graph statistics."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .engine import SECOND
from .errors import TraceError


class Position(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class ContactEvent:
    time: int  # ms ticks
    up: bool
    a: int
    b: int


@dataclass(frozen=True)
class AdjacencySnapshot:
    """Undirected edge set over node ids at one instant."""

    time: int
    node_count: int
    edges: frozenset[tuple[int, int]]  # normalized a < b

    def neighbors(self, node: int) -> set[int]:
        out = set()
        for a, b in self.edges:
            if a == node:
                out.add(b)
            elif b == node:
                out.add(a)
        return out


def edge_key(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def contacts_from_positions(positions, radio_range: float, time: int = 0) -> AdjacencySnapshot:
    """Unit-disk connectivity: edge iff euclidean distance <= range (inclusive)."""
    if radio_range <= 0:
        raise ValueError("range must be positive")
    if isinstance(positions, dict):
        ids = sorted(positions)
        arr = np.array([[positions[i][0], positions[i][1]] for i in ids], dtype=float)
    else:
        arr = np.asarray(positions, dtype=float)
        ids = list(range(len(arr)))
    n = len(arr)
    if n == 0:
        return AdjacencySnapshot(time, 0, frozenset())
    diff = arr[:, None, :] - arr[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    within = d2 <= radio_range * radio_range
    ia, ib = np.triu_indices(n, k=1)
    hits = within[ia, ib]
    edges = frozenset(
        (ids[int(a)], ids[int(b)]) for a, b in zip(ia[hits], ib[hits])
    )
    return AdjacencySnapshot(time, n, edges)


def graph_stats(snapshot: AdjacencySnapshot, count_isolated: bool = True) -> tuple[float, int]:
    """Average degree 2|E|/|V| and connected component count via BFS.

    count_isolated controls whether degree-0 nodes count as components.
    """
    n = snapshot.node_count
    if n == 0:
        return 0.0, 0
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in snapshot.edges:
        adj[a].append(b)
        adj[b].append(a)
    avg_degree = 2.0 * len(snapshot.edges) / n
    seen: set[int] = set()
    components = 0
    for start in range(n):
        if start in seen:
            continue
        if not adj[start]:
            seen.add(start)
            if count_isolated:
                components += 1
            continue
        components += 1
        stack = [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
    return avg_degree, components


def component_members(snapshot: AdjacencySnapshot) -> list[set[int]]:
    """Connected components as node sets (isolated nodes included as singletons)."""
    n = snapshot.node_count
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for a, b in snapshot.edges:
        adj[a].append(b)
        adj[b].append(a)
    seen: set[int] = set()
    comps = []
    for start in range(n):
        if start in seen:
            continue
        comp = {start}
        seen.add(start)
        stack = [start]
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    comp.add(v)
                    stack.append(v)
        comps.append(comp)
    return comps


# Contact trace text format, one event per line:
#   <time_seconds:decimal> <up|down> <node_a:uint> <node_b:uint>
# Lines sorted by time; '#' starts a comment line.


def load_trace(path) -> list[ContactEvent]:
    """Parse and validate a contact trace file.

    Enforces time ordering, no self-loops, and strict up/down alternation per
    node pair.
    """
    events: list[ContactEvent] = []
    with open(path, "r", encoding="ascii") as fh:
        last_time = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 4:
                raise TraceError(f"expected 4 fields, got {len(parts)}: {line!r}", lineno)
            t_str, kind, a_str, b_str = parts
            try:
                t = int(round(float(t_str) * SECOND))
            except ValueError:
                raise TraceError(f"bad time {t_str!r}", lineno) from None
            if kind not in ("up", "down"):
                raise TraceError(f"bad event kind {kind!r} (want up|down)", lineno)
            try:
                a, b = int(a_str), int(b_str)
            except ValueError:
                raise TraceError(f"bad node ids {a_str!r} {b_str!r}", lineno) from None
            if a < 0 or b < 0:
                raise TraceError("node ids must be non-negative", lineno)
            if a == b:
                raise TraceError(f"self-loop on node {a}", lineno)
            if last_time is not None and t < last_time:
                raise TraceError(f"time goes backwards ({t_str})", lineno)
            last_time = t
            events.append(ContactEvent(t, kind == "up", *edge_key(a, b)))
    _check_alternation(events)
    return events


def _check_alternation(events: Iterable[ContactEvent]) -> None:
    state: dict[tuple[int, int], bool] = {}
    for ev in events:
        key = (ev.a, ev.b)
        was_up = state.get(key, False)
        if ev.up and was_up:
            raise TraceError(f"link {key} already up at t={ev.time / SECOND}")
        if not ev.up and not was_up:
            raise TraceError(f"link {key} already down at t={ev.time / SECOND}")
        state[key] = ev.up


def save_trace(events: Iterable[ContactEvent], path, header: str | None = None) -> None:
    with open(path, "w", encoding="ascii") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for ev in events:
            fh.write(f"{ev.time / SECOND:.3f} {'up' if ev.up else 'down'} {ev.a} {ev.b}\n")


def snapshots_from_events(
    events: list[ContactEvent], node_count: int
) -> list[AdjacencySnapshot]:
    """Reconstruct the piecewise-constant adjacency sequence implied by a trace."""
    snaps = []
    edges: set[tuple[int, int]] = set()
    i = 0
    while i < len(events):
        t = events[i].time
        while i < len(events) and events[i].time == t:
            ev = events[i]
            key = (ev.a, ev.b)
            if ev.up:
                edges.add(key)
            else:
                edges.discard(key)
            i += 1
        snaps.append(AdjacencySnapshot(t, node_count, frozenset(edges)))
    return snaps


def link_lifetimes(events: list[ContactEvent]) -> list[float]:
    """Per-link up-durations in seconds (only closed intervals)."""
    up_at: dict[tuple[int, int], int] = {}
    out = []
    for ev in events:
        key = (ev.a, ev.b)
        if ev.up:
            up_at[key] = ev.time
        elif key in up_at:
            out.append((ev.time - up_at.pop(key)) / SECOND)
    return out
