"""Epidemic and Spray-and-Wait reference routers.

Both are contact-driven: decisions are re-evaluated on link-up and whenever a
node gains a message while a link is up. Neither charges any control bits;
the summary-vector exchange is modeled as free, matching how their overhead
is conventionally accounted.
"""

from __future__ import annotations

SNW_BINARY = "binary"
SNW_SOURCE = "source"


class SummaryVector:
    """Exact snapshot of a node's buffer at emission time."""

    def __init__(self, sender: int, msg_ids: frozenset[int]):
        self.sender = sender
        self.msg_ids = msg_ids


class EpidemicNode:
    """Flood every message to every neighbor that lacks it."""

    def __init__(self, world, node_id: int):
        self.world = world
        self.id = node_id
        self.buffer: set[int] = set()
        self.nbr_has: dict[int, set[int]] = {}
        self.offered: set[tuple[int, int]] = set()  # (msg, nbr) transfer pending

    def summary(self) -> SummaryVector:
        return SummaryVector(self.id, frozenset(self.buffer))

    def on_link_up(self, nbr: int, now: int) -> None:
        peer = self.world.routers[nbr]
        self.nbr_has[nbr] = set(peer.buffer)
        self._offer_to(nbr)

    def on_link_down(self, nbr: int, now: int) -> None:
        self.nbr_has.pop(nbr, None)

    def on_message_created(self, msg_id: int) -> None:
        self.buffer.add(msg_id)
        info = self.world.store.messages[msg_id]
        if info.dst == self.id:
            return
        for nbr in sorted(self.world.neighbors(self.id)):
            self._offer_to(nbr)

    def _offer_to(self, nbr: int) -> None:
        known = self.nbr_has.setdefault(nbr, set())
        wanted = [m for m in self.buffer if m not in known]
        if not wanted:
            return
        info = self.world.store.messages
        # destination traffic first, then oldest first
        wanted.sort(key=lambda m: (info[m].dst != nbr, info[m].created_at, m))
        for m in wanted:
            if (m, nbr) in self.offered or self.world.expired(m):
                continue
            self.offered.add((m, nbr))
            self.world.queue_transfer(
                self.id,
                nbr,
                m,
                None,
                1,
                on_done=self._sent,
                on_fail=self._send_failed,
                purpose="epidemic",
            )

    def _sent(self, transfer) -> None:
        self.offered.discard((transfer.msg_id, transfer.to))
        self.nbr_has.setdefault(transfer.to, set()).add(transfer.msg_id)

    def _send_failed(self, transfer) -> None:
        self.offered.discard((transfer.msg_id, transfer.to))

    def wants(self, msg_id: int) -> bool:
        return msg_id not in self.buffer

    def on_copies(self, msg_id: int, copies: int, hops: int, frm: int) -> None:
        if msg_id in self.buffer:
            return  # duplicate absorbed
        info = self.world.store.messages[msg_id]
        if info.dst == self.id:
            self.world.record_delivery(msg_id, self.id, hops)
            self.buffer.add(msg_id)
        elif self.world.buffer_has_room(self.id, msg_id):
            self.buffer.add(msg_id)
            self.world.note_buffer_use(self.id, msg_id)
        else:
            self.world.count_drop()
            return
        self.nbr_has.setdefault(frm, set()).add(msg_id)
        for nbr in sorted(self.world.neighbors(self.id)):
            if nbr != frm:
                self._offer_to(nbr)


class SnwNode:
    """Spray-and-Wait: replicate a bounded copy budget, then wait for the target.

    Binary mode hands over floor(copies/2) per encounter; source mode hands
    over a single copy. A holder meeting the destination delivers and retires
    its own remaining copies.
    """

    def __init__(self, world, node_id: int, mode: str = SNW_BINARY):
        if mode not in (SNW_BINARY, SNW_SOURCE):
            raise ValueError(f"unknown spray mode {mode!r}")
        self.world = world
        self.id = node_id
        self.mode = mode
        self.nbr_has: dict[int, set[int]] = {}
        self.pending: set[tuple[int, int]] = set()

    def held_msgs(self) -> list[int]:
        store = self.world.store
        return [m for m in sorted(store.node_messages(self.id)) if store.held(self.id, m) > 0]

    def on_link_up(self, nbr: int, now: int) -> None:
        peer = self.world.routers[nbr]
        self.nbr_has[nbr] = set(peer.held_msgs())
        self._scan(nbr)

    def on_link_down(self, nbr: int, now: int) -> None:
        self.nbr_has.pop(nbr, None)

    def on_message_created(self, msg_id: int) -> None:
        for nbr in sorted(self.world.neighbors(self.id)):
            self._scan(nbr)

    def _scan(self, nbr: int) -> None:
        store = self.world.store
        known = self.nbr_has.setdefault(nbr, set())
        for msg_id in self.held_msgs():
            if (msg_id, nbr) in self.pending or self.world.expired(msg_id):
                continue
            info = store.messages[msg_id]
            copies = store.held(self.id, msg_id)
            if info.dst == nbr:
                self._send(msg_id, nbr, copies, deliver=True)
            elif copies > 1 and msg_id not in known:
                self._send(msg_id, nbr, 0, deliver=False)

    def _send(self, msg_id: int, nbr: int, copies: int, deliver: bool) -> None:
        store = self.world.store
        if deliver:
            k = copies  # all remaining copies retire on delivery
        else:
            have = store.held(self.id, msg_id)
            k = have // 2 if self.mode == SNW_BINARY else 1
            if k < 1 or have <= 1:
                return
        token = store.launch_from_holdings(self.id, msg_id, k)
        self.pending.add((msg_id, nbr))
        self.world.queue_transfer(
            self.id,
            nbr,
            msg_id,
            token,
            k,
            on_done=self._sent,
            on_fail=self._send_failed,
            purpose="snw",
        )

    def _sent(self, transfer) -> None:
        self.pending.discard((transfer.msg_id, transfer.to))
        self.nbr_has.setdefault(transfer.to, set()).add(transfer.msg_id)

    def _send_failed(self, transfer) -> None:
        # copies landed back into our holdings
        self.pending.discard((transfer.msg_id, transfer.to))

    def on_copies(self, msg_id: int, copies: int, hops: int, frm: int) -> None:
        world = self.world
        info = world.store.messages[msg_id]
        if info.dst == self.id:
            world.record_delivery(msg_id, self.id, hops)
            world.store.retire(self.id, msg_id, copies, world.now, delivered=True)
            return
        if not world.buffer_has_room(self.id, msg_id):
            world.store.retire(self.id, msg_id, copies, world.now, delivered=False)
            world.count_drop()
            return
        self.nbr_has.setdefault(frm, set()).add(msg_id)
        for nbr in sorted(world.neighbors(self.id)):
            if nbr != frm:
                self._scan(nbr)
