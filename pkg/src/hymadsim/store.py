"""Audited copy accounting: every copy of every message has exactly one home.

Copies live in per-node holdings, in a border node's staging area, or inside
an in-flight transfer; delivery and expiry retire them. The auditor checks,
after every mutation, that the total for a message equals its initial budget
until first delivery and never exceeds it afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class ConservationError(AssertionError):
    pass


@dataclass
class MessageInfo:
    msg_id: int
    src: int
    dst: int
    size: int
    created_at: int
    initial_copies: int
    ttl: int | None = None  # absolute expiry tick, None = infinite


class CopyStore:
    """Single source of truth for where every copy of every message is."""

    def __init__(self, buffer_capacity: int | None = None, audit: bool = True):
        self.buffer_capacity = buffer_capacity
        self.audit = audit
        self.messages: dict[int, MessageInfo] = {}
        self._holdings: dict[int, dict[int, int]] = {}  # msg -> node -> copies
        self._staged: dict[int, dict[int, int]] = {}
        self._flight: dict[int, tuple[int, int]] = {}  # token -> (msg, copies)
        self.retired: dict[int, int] = {}
        self.delivered_at: dict[int, int] = {}
        self.node_msgs: dict[int, set[int]] = {}  # node -> msgs present (payload stored)
        self.node_bytes: dict[int, int] = {}
        self.drops = 0
        self._token = 0

    # -- queries ---------------------------------------------------------

    def held(self, node: int, msg_id: int) -> int:
        return self._holdings.get(msg_id, {}).get(node, 0)

    def staged_count(self, node: int, msg_id: int) -> int:
        return self._staged.get(msg_id, {}).get(node, 0)

    def holders(self, msg_id: int) -> dict[int, int]:
        return {n: c for n, c in self._holdings.get(msg_id, {}).items() if c > 0}

    def node_messages(self, node: int) -> set[int]:
        return self.node_msgs.get(node, set())

    def total_alive(self, msg_id: int) -> int:
        total = sum(self._holdings.get(msg_id, {}).values())
        total += sum(self._staged.get(msg_id, {}).values())
        total += sum(c for (m, c) in self._flight.values() if m == msg_id)
        return total

    def has_room(self, node: int, msg_id: int) -> bool:
        if self.buffer_capacity is None:
            return True
        if msg_id in self.node_msgs.get(node, ()):
            return True  # payload already stored once
        size = self.messages[msg_id].size
        return self.node_bytes.get(node, 0) + size <= self.buffer_capacity

    # -- presence / buffer bookkeeping --------------------------------------

    def _present(self, node: int, msg_id: int) -> bool:
        return (
            self._holdings.get(msg_id, {}).get(node, 0) > 0
            or self._staged.get(msg_id, {}).get(node, 0) > 0
        )

    def _sync_presence(self, node: int, msg_id: int, was: bool) -> None:
        now_present = self._present(node, msg_id)
        if now_present == was:
            return
        size = self.messages[msg_id].size
        msgs = self.node_msgs.setdefault(node, set())
        if now_present:
            msgs.add(msg_id)
            self.node_bytes[node] = self.node_bytes.get(node, 0) + size
        else:
            msgs.discard(msg_id)
            self.node_bytes[node] = self.node_bytes.get(node, 0) - size

    # -- mutations ---------------------------------------------------------

    def create(self, info: MessageInfo) -> None:
        self.messages[info.msg_id] = info
        was = self._present(info.src, info.msg_id)
        self._holdings.setdefault(info.msg_id, {})[info.src] = info.initial_copies
        self._sync_presence(info.src, info.msg_id, was)
        self._check(info.msg_id)

    def drop_on_create(self, info: MessageInfo) -> None:
        """Buffer full at origination: the message is never stored."""
        self.messages[info.msg_id] = info
        self.retired[info.msg_id] = info.initial_copies
        self.drops += 1

    def adjust(self, node: int, msg_id: int, delta: int) -> None:
        row = self._holdings.setdefault(msg_id, {})
        have = row.get(node, 0)
        if have + delta < 0:
            raise ConservationError(f"holdings underflow at node {node} msg {msg_id}")
        was = self._present(node, msg_id)
        if have + delta == 0:
            row.pop(node, None)
        else:
            row[node] = have + delta
        self._sync_presence(node, msg_id, was)

    def stage(self, node: int, msg_id: int, k: int) -> None:
        self.adjust(node, msg_id, -k)
        was = self._present(node, msg_id)
        row = self._staged.setdefault(msg_id, {})
        row[node] = row.get(node, 0) + k
        self._sync_presence(node, msg_id, was)
        self._check(msg_id)

    def unstage(self, node: int, msg_id: int) -> int:
        """Return all staged copies at node to its holdings."""
        was = self._present(node, msg_id)
        k = self._staged.get(msg_id, {}).pop(node, 0)
        self._sync_presence(node, msg_id, was)
        if k:
            self.adjust(node, msg_id, k)
        self._check(msg_id)
        return k

    def reduce_to_stage(self, custodian: int, border: int, msg_id: int, k: int) -> None:
        """Copy-count reduction: debit a custodian, credit the border's stage."""
        self.adjust(custodian, msg_id, -k)
        was = self._present(border, msg_id)
        row = self._staged.setdefault(msg_id, {})
        row[border] = row.get(border, 0) + k
        self._sync_presence(border, msg_id, was)
        self._check(msg_id)

    def launch_from_holdings(self, node: int, msg_id: int, k: int) -> int:
        self.adjust(node, msg_id, -k)
        return self._launch(msg_id, k)

    def launch_from_stage(self, node: int, msg_id: int) -> tuple[int, int]:
        was = self._present(node, msg_id)
        k = self._staged.get(msg_id, {}).pop(node, 0)
        self._sync_presence(node, msg_id, was)
        return self._launch(msg_id, k), k

    def _launch(self, msg_id: int, k: int) -> int:
        self._token += 1
        self._flight[self._token] = (msg_id, k)
        self._check(msg_id)
        return self._token

    def land(self, token: int, node: int) -> int:
        """Transfer completed (or aborted): copies credited to a node."""
        msg_id, k = self._flight.pop(token)
        self.adjust(node, msg_id, k)
        self._check(msg_id)
        return k

    def retire(self, node: int, msg_id: int, k: int, now: int, delivered: bool) -> None:
        self.adjust(node, msg_id, -k)
        self.retired[msg_id] = self.retired.get(msg_id, 0) + k
        if delivered and msg_id not in self.delivered_at:
            self.delivered_at[msg_id] = now
        self._check(msg_id)

    def retire_flight(self, token: int, now: int, delivered: bool) -> int:
        """Copies consumed on arrival (delivery at the destination)."""
        msg_id, k = self._flight.pop(token)
        self.retired[msg_id] = self.retired.get(msg_id, 0) + k
        if delivered and msg_id not in self.delivered_at:
            self.delivered_at[msg_id] = now
        self._check(msg_id)
        return k

    # -- auditing ------------------------------------------------------------

    def _check(self, msg_id: int) -> None:
        if not self.audit:
            return
        info = self.messages[msg_id]
        total = self.total_alive(msg_id) + self.retired.get(msg_id, 0)
        if total != info.initial_copies:
            raise ConservationError(
                f"msg {msg_id}: copies alive+retired = {total}, expected {info.initial_copies}"
            )

    def check_all(self) -> None:
        for msg_id in self.messages:
            self._check(msg_id)
