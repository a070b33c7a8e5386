"""Distributed diameter-bounded group membership over periodic distance-vector broadcasts.

Each node periodically broadcasts its view of its group as an enhanced
distance vector (member, hop distance, priority, border flag). Nodes merge
neighbor vectors, singletons join a group only when every advertised member
would stay within d_max hops, and any pair of members whose distance bound
exceeds d_max is resolved by evicting the lowest-priority participant.
Priority is (time the node joined its current group, node id), smaller wins,
so an established group is never split by a newcomer.

Consistency of converged views rests on three rules worked out against the
worked五-node trace and randomized model checking:
  - a node's own eccentricity check always catches a true pair violation at
    both participants (distances are symmetric once converged), and the
    priority total order names the same loser everywhere, who self-resets;
  - a third-party through-me pair verdict is only advisory: it is gated to
    nodes adjacent to a participant and suppressed whenever any fresh
    claiming vector names both participants (someone closer vouches for
    their coexistence);
  - a neighbor's own fresh vector is authoritative about its own
    membership: a member whose vector stops claiming the group is dropped,
    with a bootstrap grace window for seeds that never claimed yet.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

BITS_PER_ENTRY = 128


@dataclass(frozen=True, order=True)
class Priority:
    """Total order over nodes: smaller tuple = higher priority."""

    joined_at: int
    node: int


@dataclass(frozen=True)
class GroupConfig:
    d_max: int = 2
    broadcast_period: int = 100  # ticks (ms)
    staleness_horizon: int = 3  # broadcast periods a silent entry survives

    def stale_after(self) -> int:
        return self.staleness_horizon * self.broadcast_period


@dataclass
class MemberEntry:
    dist: int
    via: int  # neighbor the shortest known path goes through (self for own entry)
    priority: Priority
    border: bool
    last_heard: int
    added_at: int = 0
    claim_seen: bool = False  # its own vector has named me at least once


@dataclass(frozen=True)
class GroupMessage:
    """One periodic group broadcast: the sender's full member vector."""

    sender: int
    entries: tuple[tuple[int, int, Priority, bool], ...]  # (member, dist, prio, border)

    @property
    def bits(self) -> int:
        return BITS_PER_ENTRY * len(self.entries)


def diameter_bound(table: Mapping[int, int], candidate: tuple[int, int]) -> int:
    """Conservative through-me diameter bound for admitting a candidate.

    Returns max over existing members m of dist(m) + candidate distance. The
    merge logic refines this with coexistence vouched by neighbor vectors;
    this screening form deliberately overestimates.
    """
    member, cdist = candidate
    if cdist < 1:
        raise ValueError("candidate distance must be >= 1")
    return max((d + cdist for m, d in table.items() if m != member), default=cdist)


@dataclass
class _NbrVector:
    tick: int
    entries: dict[int, tuple[int, Priority, bool]]  # member -> (dist, prio, border)
    fp: tuple


class GroupNode:
    """Per-node group membership state machine.

    Driven either by the simulation engine (event handlers) or by
    SyncHarness for round-synchronous model checking.
    """

    def __init__(self, node_id: int, cfg: GroupConfig):
        self.id = node_id
        self.cfg = cfg
        self.border = False
        self.joined_at: int | None = None  # None = ungrouped (floating priority)
        self.neighbors: set[int] = set()
        self.table: dict[int, MemberEntry] = {
            node_id: MemberEntry(0, node_id, Priority(0, node_id), False, 0)
        }
        self.version = 0
        self._caches: dict[int, _NbrVector] = {}
        self._cache_epoch = 0  # bumps whenever any stored neighbor vector changes
        self._last_proc: dict[int, tuple[tuple, int, int]] = {}
        # neighbor -> advertised member sets a join failed against (or that
        # excluded us); retrying against an unchanged composition is doomed
        self._join_memo: dict[int, set[frozenset]] = {}
        self._bar_memo: dict[int, tuple] = {}  # neighbor -> vector fp it was barred on
        self._admission_confirmed = True
        self._joined_tick = 0
        self._last_join: tuple[int, frozenset] | None = None
        self._grace_deadline: int | None = None
        self._built: tuple[int, GroupMessage] | None = None

    # -- queries ------------------------------------------------------------

    @property
    def is_singleton(self) -> bool:
        return len(self.table) == 1

    def members(self) -> frozenset[int]:
        return frozenset(self.table)

    def my_priority(self, now: int) -> Priority:
        return Priority(self.joined_at if self.joined_at is not None else now, self.id)

    def distance(self, member: int) -> int | None:
        e = self.table.get(member)
        return e.dist if e else None

    def via(self, member: int) -> int | None:
        e = self.table.get(member)
        return e.via if e else None

    def border_count(self) -> int:
        """Number of members currently flagged as border nodes, self included."""
        return sum(1 for e in self.table.values() if e.border)

    def neighbor_claimed_members(self, nbr: int) -> frozenset[int] | None:
        """Member set the neighbor advertised in its last group broadcast."""
        cache = self._caches.get(nbr)
        if cache is None:
            return None
        return frozenset(cache.entries)

    # -- wire ---------------------------------------------------------------

    def build_message(self, now: int) -> GroupMessage:
        if self._built is not None and self._built[0] == self.version:
            return self._built[1]
        me = self.table[self.id]
        me.priority = self.my_priority(now)
        me.border = self.border
        entries = tuple(
            (m, e.dist, e.priority, e.border) for m, e in sorted(self.table.items())
        )
        msg = GroupMessage(self.id, entries)
        self._built = (self.version, msg)
        return msg

    # -- link events ----------------------------------------------------------

    def on_link_up(self, nbr: int, now: int) -> None:
        self.neighbors.add(nbr)

    def on_link_down(self, nbr: int, now: int) -> bool:
        self.neighbors.discard(nbr)
        if self._caches.pop(nbr, None) is not None:
            self._cache_epoch += 1
        self._last_proc.pop(nbr, None)
        self._join_memo.pop(nbr, None)
        self._bar_memo.pop(nbr, None)
        if not self.is_singleton:
            return self._recompute(now)
        return False

    # -- periodic upkeep ------------------------------------------------------

    def tick_maintenance(self, now: int) -> bool:
        """Expire stale neighbor vectors; give up on unacknowledged joins."""
        changed = False
        stale = [
            nbr
            for nbr, cache in self._caches.items()
            if now - cache.tick > self.cfg.stale_after()
        ]
        for nbr in stale:
            del self._caches[nbr]
            self._last_proc.pop(nbr, None)
            self._cache_epoch += 1
        grace_passed = self._grace_deadline is not None and now > self._grace_deadline
        if (stale or grace_passed) and not self.is_singleton:
            changed = self._recompute(now)
        if (
            not self.is_singleton
            and not self._admission_confirmed
            and now - self._joined_tick > self.cfg.stale_after()
        ):
            # nobody ever named us: the group silently rejected the join
            self._reset_singleton(now)
            changed = True
        return changed

    # -- receive --------------------------------------------------------------

    def receive(self, msg: GroupMessage, frm: int, now: int) -> bool:
        """Merge one neighbor broadcast; returns True if the table changed."""
        if frm not in self.neighbors:
            return False
        entries = {m: (d, p, b) for (m, d, p, b) in msg.entries}
        fp = msg.entries
        prev = self._caches.get(frm)
        if prev is None or prev.fp != fp:
            self._cache_epoch += 1
        self._caches[frm] = _NbrVector(now, entries, fp)
        if self.id in entries:
            self._admission_confirmed = True
        if self._last_proc.get(frm) == (fp, self.version, self._cache_epoch):
            return False
        changed = False
        if self.is_singleton:
            changed = self._attempt_join(frm, now)
        elif frm in self.table or self._names_my_group(frm, entries):
            changed = self._recompute(now)
        self._last_proc[frm] = (fp, self.version, self._cache_epoch)
        return changed

    def _names_my_group(self, sender: int, entries: dict) -> bool:
        if self.id in entries:
            return True
        mine = self.table.keys()
        return any(m in mine and m != sender for m in entries)

    def _grace_expiry(self, entry: MemberEntry) -> int:
        # names need up to d_max rounds to circulate before a new mutual
        # member can be expected to list me back
        return entry.added_at + (
            self.cfg.d_max + self.cfg.staleness_horizon
        ) * self.cfg.broadcast_period

    # -- join (singleton only) --------------------------------------------------

    def _attempt_join(self, frm: int, now: int) -> bool:
        cache = self._caches[frm]
        advertised = frozenset(cache.entries)
        failed = self._join_memo.setdefault(frm, set())
        if advertised in failed:
            return False
        if self.cfg.d_max < 1:
            failed.add(advertised)
            return False
        # the newcomer defers to every existing member: join only if all fit
        for m, (dist, _, _) in cache.entries.items():
            if m != self.id and dist + 1 > self.cfg.d_max:
                failed.add(advertised)
                return False
        self.joined_at = now
        self._joined_tick = now
        self._admission_confirmed = False
        self._last_join = (frm, advertised)
        me = MemberEntry(0, self.id, Priority(now, self.id), self.border, now, now)
        self.table = {self.id: me}
        for m, (dist, prio, border) in sorted(cache.entries.items()):
            if m == self.id:
                continue
            self.table[m] = MemberEntry(dist + 1, frm, prio, border, now, now)
        self._bump()
        return True

    # -- merge ------------------------------------------------------------------

    def _recompute(self, now: int) -> bool:
        sources: dict[int, _NbrVector] = {}
        barred: set[int] = set()
        self._grace_deadline = None
        for nbr in sorted(self.neighbors):
            cache = self._caches.get(nbr)
            if cache is None or now - cache.tick > self.cfg.stale_after():
                continue
            if self._bar_memo.get(nbr) == cache.fp:
                barred.add(nbr)  # already ruled out on this exact vector
                continue
            if self.id in cache.entries:
                # mutual membership is reciprocal at radio range: a vector
                # naming me is the one authoritative positive signal
                sources[nbr] = cache
                self._bar_memo.pop(nbr, None)
                continue
            entry = self.table.get(nbr)
            if entry is None:
                # never tabled: relays may still introduce it as a member,
                # after which the grace window below takes over
                continue
            if not entry.claim_seen:
                deadline = self._grace_expiry(entry)
                if now <= deadline:
                    # it may not have spoken since we added it
                    sources[nbr] = cache
                    if self._grace_deadline is None or deadline < self._grace_deadline:
                        self._grace_deadline = deadline
                    continue
            # a member that named me before and went silent about me, or
            # that never named me within the grace window, has left; the
            # bar sticks until its vector changes, so relayed names cannot
            # resurrect it with a fresh grace window
            barred.add(nbr)
            self._bar_memo[nbr] = cache.fp

        new: dict[int, MemberEntry] = {
            self.id: MemberEntry(
                0, self.id, self.my_priority(now), self.border, now, self._joined_tick
            )
        }
        best: dict[int, tuple[int, int]] = {}
        meta: dict[int, tuple[int, Priority, bool]] = {}
        for nbr, cache in sorted(sources.items()):
            for m, (dist, prio, border) in cache.entries.items():
                if m == self.id or m in barred:
                    continue
                cand = dist + 1
                if m not in best or cand < best[m][0]:
                    best[m] = (cand, nbr)
                prev = meta.get(m)
                if prev is None or cache.tick > prev[0]:
                    meta[m] = (cache.tick, prio, border)
        for m, (dist, via) in best.items():
            tick, prio, border = meta[m]
            old = self.table.get(m)
            claim = old.claim_seen if old else False
            if not claim:
                cache = sources.get(m)
                claim = cache is not None and self.id in cache.entries
            new[m] = MemberEntry(
                dist, via, prio, border, tick, old.added_at if old else now, claim
            )
        while True:
            participants = self._violations(new, sources)
            if not participants:
                break
            loser = max(participants, key=lambda m: new[m].priority)
            if loser == self.id:
                self._reset_singleton(now)
                return True
            del new[loser]
        if len(new) == 1 and not self.is_singleton:
            self._reset_singleton(now)
            return True
        if self._same_table(new):
            return False
        self.table = new
        if self.joined_at is None and len(new) > 1:
            self.joined_at = now
            self._joined_tick = now
            self._admission_confirmed = False
            new[self.id].priority = Priority(now, self.id)
        self._bump()
        return True

    def _violations(self, table: dict[int, MemberEntry], sources: dict) -> set[int]:
        """Nodes participating in a member pair whose distance bound exceeds d_max."""
        d_max = self.cfg.d_max
        out: set[int] = set()
        mem = sorted(table)
        for m in mem:
            if m != self.id and table[m].dist > d_max:
                out.add(self.id)
                out.add(m)
        for i, x in enumerate(mem):
            if x == self.id:
                continue
            ex = table[x]
            x_adjacent = x in self.neighbors
            for y in mem[i + 1 :]:
                if y == self.id:
                    continue
                ey = table[y]
                if ex.via == ey.via:
                    continue  # the shared via-neighbor enforces this pair
                if not x_adjacent and y not in self.neighbors:
                    # only nodes adjacent to a participant rule on a pair
                    continue
                if ex.dist + ey.dist <= d_max:
                    continue
                # advisory verdict: suppressed if anyone vouches that the two
                # coexist (a true violation is caught by the participants'
                # own eccentricity checks and resolved by priority)
                vouched = any(
                    x in cache.entries and y in cache.entries
                    for cache in sources.values()
                )
                if not vouched:
                    out.add(x)
                    out.add(y)
        return out

    def _same_table(self, new: dict[int, MemberEntry]) -> bool:
        if new.keys() != self.table.keys():
            return False
        for m, e in new.items():
            old = self.table[m]
            if (e.dist, e.via, e.priority, e.border) != (
                old.dist,
                old.via,
                old.priority,
                old.border,
            ):
                return False
            old.last_heard = e.last_heard
            old.claim_seen = old.claim_seen or e.claim_seen
        return True

    def _reset_singleton(self, now: int) -> None:
        # remember whose advertised composition pushed us out so we do not
        # bounce straight back into an unchanged group, and the composition
        # the failed join itself was accepted against
        if self._last_join is not None:
            frm, advertised = self._last_join
            self._join_memo.setdefault(frm, set()).add(advertised)
            self._last_join = None
        for nbr, cache in self._caches.items():
            memo = self._join_memo.setdefault(nbr, set())
            memo.add(frozenset(cache.entries))
            if len(memo) > 128:
                memo.clear()
        self.joined_at = None
        self.table = {
            self.id: MemberEntry(0, self.id, Priority(now, self.id), self.border, now, now)
        }
        self._admission_confirmed = True
        self._grace_deadline = None
        self._bump()

    def recompute_border(self, now: int) -> bool:
        flag = any(nbr not in self.table for nbr in self.neighbors)
        if flag != self.border:
            self.border = flag
            self.table[self.id].border = flag
            self._bump()
            return True
        return False

    def _bump(self) -> None:
        self.version += 1
        self._built = None


class SyncHarness:
    """Round-synchronous driver over a static topology for model checking.

    Each round, nodes speak once in a fixed order; every broadcast is merged
    by all current radio neighbors before the next node speaks, mirroring the
    sequential-speech narrative the algorithm is defined by.
    """

    def __init__(
        self,
        n: int,
        edges: Iterable[tuple[int, int]],
        cfg: GroupConfig | None = None,
        order: list[int] | None = None,
    ):
        self.cfg = cfg or GroupConfig()
        self.n = n
        self.nodes = [GroupNode(i, self.cfg) for i in range(n)]
        self.adj: dict[int, set[int]] = {i: set() for i in range(n)}
        self.order = order or list(range(n))
        self.round_no = 0
        for a, b in edges:
            self.set_link(a, b, True)

    def now(self) -> int:
        return self.round_no * self.cfg.broadcast_period

    def set_link(self, a: int, b: int, up: bool) -> None:
        t = self.now()
        if up:
            self.adj[a].add(b)
            self.adj[b].add(a)
            self.nodes[a].on_link_up(b, t)
            self.nodes[b].on_link_up(a, t)
        else:
            self.adj[a].discard(b)
            self.adj[b].discard(a)
            self.nodes[a].on_link_down(b, t)
            self.nodes[b].on_link_down(a, t)

    def run_round(self) -> None:
        self.round_no += 1
        base = self.now()
        # each speaker's turn is a distinct instant, so joins triggered by a
        # later speaker carry strictly newer priority (requires node count
        # below the broadcast period in ticks)
        step = max(1, (self.cfg.broadcast_period - 1) // max(1, self.n))
        for i, u in enumerate(self.order):
            t = base + min(i * step, self.cfg.broadcast_period - 1)
            node = self.nodes[u]
            node.tick_maintenance(t)
            msg = node.build_message(t)
            for v in sorted(self.adj[u]):
                self.nodes[v].receive(msg, u, t)
        t = base + self.cfg.broadcast_period - 1
        for u in self.order:
            self.nodes[u].recompute_border(t)

    def run_until_stable(self, max_rounds: int = 64) -> int:
        """Run rounds until membership settles; returns rounds to the settled state.

        Requires the state to hold for longer than every time-based latency
        (bootstrap grace, staleness horizon) so that a pending expiration
        cannot masquerade as a fixpoint.
        """
        need = self.cfg.d_max + self.cfg.staleness_horizon + 2
        prev = None
        streak = 0
        settled_at = 0
        for r in range(1, max_rounds + 1):
            self.run_round()
            state = tuple(
                (u, tuple(sorted((m, e.dist) for m, e in self.nodes[u].table.items())))
                for u in range(self.n)
            )
            if state == prev:
                streak += 1
                if streak >= need:
                    return settled_at
            else:
                streak = 0
                settled_at = r
            prev = state
        return max_rounds

    def members(self, u: int) -> frozenset[int]:
        return self.nodes[u].members()

    def groups(self) -> set[frozenset[int]]:
        return {self.nodes[u].members() for u in range(self.n)}
