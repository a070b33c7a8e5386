"""HYMAD routing: intra-group distance-vector forwarding with custody, plus
inter-group multi-copy spraying driven by border nodes.

Every node periodically broadcasts two things (handled by the simulation
loop): its group distance vector and the list of messages its group holds.
Border nodes compare their group's list against adjacent groups' lists and
move copies across with a conservation-preserving exchange: request one full
copy, size the batch with the fair-split rule, ask custodians to shed the
remainder, and forward whatever was actually obtained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .groups import GroupConfig, GroupNode

BITS_PER_ENTRY = 128
BITS_CONTROL = 128

KIND_GROUP = "group_algorithm"
KIND_LIST = "messages_list"
KIND_COPY_REQUEST = "copy_request"
KIND_REDUCE = "reduce_copies"


def copies_to_forward(n_c: int, n_b: int) -> int:
    """Copies a border node sends an adjacent group: max(1, ceil(n_c/(n_b+1))).

    n_c is the group's copy count for the message, n_b its current border
    node count; the split spreads a group's copies fairly over its adjacent
    groups while always moving at least one.
    """
    if n_c < 1 or n_b < 1:
        raise ValueError("need n_c >= 1 and n_b >= 1")
    return max(1, math.ceil(n_c / (n_b + 1)))


@dataclass(frozen=True)
class ListEntry:
    msg_id: int
    dst: int
    custodian: int
    copies: int
    origin: int  # tick the custodian last asserted this count (not wire-charged)


@dataclass(frozen=True)
class MessagesList:
    """Periodic messages-in-group broadcast."""

    sender: int
    entries: tuple[ListEntry, ...]

    @property
    def bits(self) -> int:
        return BITS_PER_ENTRY * len(self.entries)


class HymadNode:
    """Per-node HYMAD state machine; driven by the simulation world."""

    def __init__(self, world, node_id: int, group_cfg: GroupConfig):
        self.world = world
        self.id = node_id
        self.group = GroupNode(node_id, group_cfg)
        # msg -> custodian -> (copies, origin); other nodes' claims only
        self.view: dict[int, dict[int, tuple[int, int]]] = {}
        # neighbor -> set of msg ids it advertised (plus local echo of sprays)
        self.nbr_has: dict[int, set[int]] = {}
        self.nbr_list_tick: dict[int, int] = {}
        self.pending: set[tuple[int, int]] = set()  # (msg, neighbor) spray guard
        self.dirty = True

    # -- link / group hooks ---------------------------------------------------

    def on_link_up(self, nbr: int, now: int) -> None:
        self.group.on_link_up(nbr, now)
        self.dirty = True

    def on_link_down(self, nbr: int, now: int) -> None:
        self.group.on_link_down(nbr, now)
        self.nbr_has.pop(nbr, None)
        self.nbr_list_tick.pop(nbr, None)
        self.dirty = True

    # -- messages-in-group list -------------------------------------------------

    def build_list(self, now: int) -> MessagesList:
        store = self.world.store
        members = self.group.members()
        horizon = 3 * self.world.list_period
        entries: list[ListEntry] = []
        for msg_id in sorted(store.node_messages(self.id)):
            held = store.held(self.id, msg_id)
            if held > 0 and not self.world.expired(msg_id):
                info = store.messages[msg_id]
                entries.append(ListEntry(msg_id, info.dst, self.id, held, now))
        for msg_id in sorted(self.view):
            if self.world.expired(msg_id):
                continue
            info = store.messages[msg_id]
            for custodian in sorted(self.view[msg_id]):
                copies, origin = self.view[msg_id][custodian]
                if custodian == self.id or custodian not in members:
                    continue
                if copies < 1 or now - origin > horizon:
                    continue
                entries.append(ListEntry(msg_id, info.dst, custodian, copies, origin))
        return MessagesList(self.id, tuple(entries))

    def on_list(self, lst: MessagesList, frm: int, now: int) -> None:
        self.nbr_has[frm] = {e.msg_id for e in lst.entries}
        self.nbr_list_tick[frm] = now
        if frm in self.group.members():
            self._merge_list(lst, frm, now)
        self.dirty = True

    def _merge_list(self, lst: MessagesList, frm: int, now: int) -> None:
        # the sender is authoritative about its own holdings
        fresh_own = {e.msg_id for e in lst.entries if e.custodian == frm}
        for msg_id in list(self.view):
            row = self.view[msg_id]
            if frm in row and msg_id not in fresh_own:
                del row[frm]
                if not row:
                    del self.view[msg_id]
        for e in lst.entries:
            if e.custodian == self.id:
                continue
            row = self.view.setdefault(e.msg_id, {})
            prev = row.get(e.custodian)
            if e.custodian == frm:
                row[frm] = (e.copies, now)
            elif prev is None or e.origin > prev[1]:
                row[e.custodian] = (e.copies, e.origin)

    # -- group knowledge helpers ---------------------------------------------

    def group_total(self, msg_id: int) -> int:
        store = self.world.store
        total = store.held(self.id, msg_id) + store.staged_count(self.id, msg_id)
        members = self.group.members()
        for custodian, (copies, _) in self.view.get(msg_id, {}).items():
            if custodian in members and custodian != self.id:
                total += copies
        return total

    def group_msgs(self) -> set[int]:
        out = set(m for m in self.world.store.node_messages(self.id)
                  if self.world.store.held(self.id, m) > 0)
        members = self.group.members()
        for msg_id, row in self.view.items():
            if any(c in members and c != self.id and v[0] > 0 for c, v in row.items()):
                out.add(msg_id)
        return out

    def _custodian_queue(self, msg_id: int) -> list[tuple[int, int]]:
        """Other custodians by descending claimed copies, id tiebreak."""
        members = self.group.members()
        out = [
            (c, v[0])
            for c, v in self.view.get(msg_id, {}).items()
            if c in members and c != self.id and v[0] > 0
        ]
        out.sort(key=lambda cv: (-cv[1], cv[0]))
        return out

    def note_custodian_decrement(self, msg_id: int, custodian: int, k: int) -> None:
        row = self.view.get(msg_id)
        if row and custodian in row:
            copies, origin = row[custodian]
            if copies - k <= 0:
                del row[custodian]
                if not row:
                    self.view.pop(msg_id, None)
            else:
                row[custodian] = (copies - k, origin)

    # -- arrivals ---------------------------------------------------------------

    def on_copies(self, msg_id: int, k: int, hops: int, frm: int) -> None:
        """Copies landed here from an adjacent group (or by custody)."""
        world = self.world
        info = world.store.messages[msg_id]
        if frm not in self.group.members():
            self.nbr_has.setdefault(frm, set()).add(msg_id)
        if info.dst == self.id:
            world.record_delivery(msg_id, self.id, hops)
            world.store.retire(self.id, msg_id, k, world.now, delivered=True)
            return
        members = self.group.members()
        if info.dst in members:
            world.start_job(msg_id, k, self.id, info.dst, "deliver", hops)
            return
        choices = sorted(members)
        custodian = choices[world.rng_custodian.integers(len(choices))]
        world.log("custodian_choice", msg_id, self.id, custodian)
        if custodian != self.id:
            world.start_job(msg_id, k, self.id, custodian, "handoff", hops)
        self.dirty = True

    def custody_fallback(self, msg_id: int) -> None:
        """In-flight copies stay here; advertised with the next list broadcast."""
        self.dirty = True

    def on_group_change(self) -> None:
        """Group membership changed: deliver to destinations that joined us."""
        store = self.world.store
        members = self.group.members()
        for msg_id in sorted(store.node_messages(self.id)):
            if store.held(self.id, msg_id) < 1 or self.world.expired(msg_id):
                continue
            dst = store.messages[msg_id].dst
            if dst in members and dst != self.id:
                if not self.world.job_active(msg_id, self.id):
                    k = store.held(self.id, msg_id)
                    self.world.start_job(msg_id, k, self.id, dst, "deliver", 0)
        self.dirty = True

    # -- border logic -------------------------------------------------------------

    def border_scan(self, now: int) -> None:
        """Act on every adjacent-group neighbor whose lists we have heard."""
        self.dirty = False
        if not self.group.border:
            return
        members = self.group.members()
        held_msgs = self.group_msgs()
        if not held_msgs:
            return
        for v in sorted(self.world.neighbors(self.id)):
            if v in members:
                continue
            v_members = self.group.neighbor_claimed_members(v)
            if v_members is None or v not in self.nbr_list_tick:
                continue  # we have not heard enough from that group yet
            v_has = self.nbr_has.get(v, set())
            for msg_id in sorted(held_msgs):
                if (msg_id, v) in self.pending or msg_id in v_has:
                    continue
                if self.world.expired(msg_id):
                    continue
                info = self.world.store.messages[msg_id]
                if info.dst in members:
                    continue  # being delivered inside this group
                total = self.group_total(msg_id)
                if total < 1:
                    continue
                if info.dst in v_members:
                    SprayOp(self, msg_id, v, deliver=True).start()
                elif total > 1:
                    SprayOp(self, msg_id, v, deliver=False).start()

    def mark_sprayed(self, msg_id: int, v: int) -> None:
        """Local echo: v's whole group now has the message."""
        self.nbr_has.setdefault(v, set()).add(msg_id)
        v_members = self.group.neighbor_claimed_members(v) or set()
        for w in self.world.neighbors(self.id):
            if w == v or w in self.group.members():
                continue
            w_members = self.group.neighbor_claimed_members(w)
            if w_members and (v in w_members or w in v_members):
                self.nbr_has.setdefault(w, set()).add(msg_id)


class SprayOp:
    """Three-step conservation-preserving copy transfer toward one neighbor.

    (i) obtain one full copy (locally or via a Copy Request to a custodian),
    (ii) size the batch with the fair-split rule at the last moment,
    (iii) shed batch-1 copies from custodians via Reduce messages, then
    forward everything obtained. The network-wide copy total never changes.
    """

    def __init__(self, router: HymadNode, msg_id: int, target: int, deliver: bool):
        self.r = router
        self.msg = msg_id
        self.target = target
        self.deliver = deliver
        self.guard = (msg_id, target)
        router.pending.add(self.guard)

    @property
    def world(self):
        return self.r.world

    def start(self) -> None:
        store = self.world.store
        me = self.r.id
        if store.held(me, self.msg) >= 1:
            store.stage(me, self.msg, 1)
            self._reduce_and_forward()
            return
        self._request_from(self.r._custodian_queue(self.msg))

    def _request_from(self, queue: list[tuple[int, int]]) -> None:
        store = self.world.store
        while queue:
            custodian, claimed = queue.pop(0)
            self.world.charge(KIND_COPY_REQUEST, BITS_CONTROL)
            self.world.log("copy_request", self.msg, self.r.id, custodian)
            if store.held(custodian, self.msg) >= 1:
                self.world.start_job(
                    self.msg, 1, custodian, self.r.id, "spray_reserve", 0, op=self
                )
                self.r.note_custodian_decrement(self.msg, custodian, 1)
                return
            self.r.note_custodian_decrement(self.msg, custodian, claimed)
        self.abort()

    def on_reserved(self) -> None:
        """The requested copy arrived: stage it and finish synchronously."""
        store = self.world.store
        me = self.r.id
        if store.held(me, self.msg) < 1:
            self.abort()
            return
        store.stage(me, self.msg, 1)
        self._reduce_and_forward()

    def _reduce_and_forward(self) -> None:
        store = self.world.store
        me = self.r.id
        n_c = self.r.group_total(self.msg)
        n_b = max(1, self.r.group.border_count())
        batch = copies_to_forward(n_c, n_b)
        need = batch - 1
        take_own = min(need, store.held(me, self.msg))
        if take_own > 0:
            store.stage(me, self.msg, take_own)
            need -= take_own
        for custodian, _claimed in self.r._custodian_queue(self.msg):
            if need <= 0:
                break
            self.world.charge(KIND_REDUCE, BITS_CONTROL)  # request
            achieved = min(need, store.held(custodian, self.msg))
            self.world.charge(KIND_REDUCE, BITS_CONTROL)  # response
            self.world.log("reduce", self.msg, me, custodian, need, achieved)
            if achieved > 0:
                store.reduce_to_stage(custodian, me, self.msg, achieved)
                self.r.note_custodian_decrement(self.msg, custodian, achieved)
                need -= achieved
        token, k = store.launch_from_stage(me, self.msg)
        if k < 1:
            self.abort()
            return
        self.world.queue_transfer(
            me,
            self.target,
            self.msg,
            token,
            k,
            on_done=self._forwarded,
            on_fail=self._forward_failed,
            purpose="spray",
        )

    def _forwarded(self, transfer) -> None:
        self.r.pending.discard(self.guard)
        self.r.mark_sprayed(self.msg, self.target)
        self.world.log(
            "spray", self.msg, self.r.id, self.target, transfer.copies, self.deliver
        )

    def _forward_failed(self, transfer) -> None:
        # copies already landed back into our holdings: we are a custodian now
        self.r.pending.discard(self.guard)
        self.r.custody_fallback(self.msg)

    def abort(self) -> None:
        store = self.world.store
        store.unstage(self.r.id, self.msg)
        self.r.pending.discard(self.guard)
        self.r.custody_fallback(self.msg)
