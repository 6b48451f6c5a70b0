"""Correctness oracle: synthetic payloads, XOR decode simulation, invariant checks.

Packets get deterministic synthetic byte payloads so that XOR decoding can be
exercised for real: each message's wire bytes are the XOR of its constituents,
and a receiver recovers a packet only when exactly one constituent is missing
from its side information.  The default "cache-only" mode uses the fixed cache
as the sole side information; "progressive" mode also reuses previously
decoded packets and exists for diagnostics only, since the schemes under test
never rely on decode chaining.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction

from .model import (
    CacheAssignment,
    DeliverySchedule,
    DemandVector,
    LatticePoint,
    PacketId,
    VertexSlot,
)


def _canonical_key(seed: int, pid: PacketId) -> bytes:
    loc = pid.locator
    if isinstance(loc, LatticePoint):
        tag = "lat:" + ",".join(map(str, loc.coords))
    elif isinstance(loc, VertexSlot):
        tag = f"vtx:{loc.vertex}:{loc.slot}"
    else:
        raise TypeError(f"unknown locator type {type(loc).__name__}")
    return f"{seed}|{pid.file}|{tag}".encode()


@dataclass
class PayloadTable:
    """Deterministic map PacketId -> synthetic bytes via keyed blake2b hashing.

    Distinct packet identities collide only with negligible probability at the
    default 16-byte length.
    """

    seed: int = 0
    length: int = 16
    _table: dict[PacketId, bytes] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.length < 16:
            raise ValueError("payloads below 16 bytes risk identity collisions")

    def payload(self, pid: PacketId) -> bytes:
        cached = self._table.get(pid)
        if cached is None:
            cached = hashlib.blake2b(_canonical_key(self.seed, pid), digest_size=self.length).digest()
            self._table[pid] = cached
        return cached


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def file_universe(placement: CacheAssignment) -> dict[int, frozenset[PacketId]]:
    """All packet identities per file, collected from the union of caches.

    Valid for every scheme in this package because each packet is cached by at
    least one user.
    """
    per_file: dict[int, set[PacketId]] = defaultdict(set)
    for cache in placement.caches:
        for pid in cache:
            per_file[pid.file].add(pid)
    return {f: frozenset(s) for f, s in per_file.items()}


@dataclass(frozen=True)
class RecoveryReport:
    """Outcome of simulating a schedule: per-user recovery plus delivery accounting."""

    demands: DemandVector
    needed: tuple[frozenset[PacketId], ...]
    decoded: tuple[frozenset[PacketId], ...]
    missing: tuple[frozenset[PacketId], ...]
    redundant: tuple[int, ...]
    extraneous: tuple[int, ...]
    undecodable: int
    byte_mismatches: int
    multiplicity: dict[tuple[int, PacketId], int]

    @property
    def full_recovery(self) -> bool:
        return all(not miss for miss in self.missing)

    def recovered(self, user: int) -> bool:
        return not self.missing[user]

    def to_json(self) -> str:
        users = [
            {
                "user": u,
                "file": self.demands[u],
                "recovered": self.recovered(u),
                "needed": len(self.needed[u]),
                "decoded": len(self.decoded[u]),
                "missing": len(self.missing[u]),
                "redundant_receptions": self.redundant[u],
                "extraneous_decodes": self.extraneous[u],
            }
            for u in range(len(self.needed))
        ]
        duplicates = sum(1 for count in self.multiplicity.values() if count > 1)
        record = {
            "full_recovery": self.full_recovery,
            "users": users,
            "undecodable_receptions": self.undecodable,
            "byte_mismatches": self.byte_mismatches,
            "duplicate_deliveries": duplicates,
        }
        return json.dumps(record, sort_keys=True)


def simulate_and_decode(
    placement: CacheAssignment,
    schedule: DeliverySchedule,
    demands: DemandVector,
    mode: str = "cache-only",
    payload_seed: int = 0,
) -> RecoveryReport:
    """Replay the schedule byte-for-byte and record what every receiver decodes.

    A receiver decodes a message when exactly one constituent packet is absent
    from its side information; the recovered bytes are checked against ground
    truth.  Receivers with zero unknown constituents are logged as redundant
    deliveries (legal, the decentralized scheme over-transmits on purpose);
    two or more unknowns leave the message undecodable for that receiver.
    """
    if mode not in ("cache-only", "progressive"):
        raise ValueError(f"unknown mode {mode!r}")
    n = placement.n_users
    if len(demands) != n:
        raise ValueError("demand vector length does not match the placement")
    k = placement.packets_per_file
    expected_size = Fraction(1, k)
    for msg in schedule.messages:
        if msg.size != expected_size:
            raise ValueError(f"message size {msg.size} does not match packet size 1/{k}")

    universe = file_universe(placement)
    table = PayloadTable(seed=payload_seed)
    needed = tuple(frozenset(universe.get(demands[u], frozenset()) - placement.caches[u]) for u in range(n))
    decoded: list[set[PacketId]] = [set() for _ in range(n)]
    redundant = [0] * n
    extraneous = [0] * n
    undecodable = 0
    byte_mismatches = 0
    multiplicity: Counter[tuple[int, PacketId]] = Counter()

    for msg in schedule.messages:
        payload = sorted(msg.payload, key=lambda p: _canonical_key(payload_seed, p))
        wire = table.payload(payload[0])
        for pid in payload[1:]:
            wire = _xor(wire, table.payload(pid))
        for user in msg.receivers:
            known = placement.caches[user]
            unknowns = [
                pid
                for pid in payload
                if pid not in known and not (mode == "progressive" and pid in decoded[user])
            ]
            if not unknowns:
                redundant[user] += 1
                continue
            if len(unknowns) > 1:
                undecodable += 1
                continue
            target = unknowns[0]
            recovered = wire
            for pid in payload:
                if pid is not target:
                    recovered = _xor(recovered, table.payload(pid))
            if recovered != table.payload(target):
                byte_mismatches += 1
            if target in needed[user]:
                multiplicity[(user, target)] += 1
                decoded[user].add(target)
            else:
                extraneous[user] += 1
                decoded[user].add(target)

    missing = tuple(frozenset(needed[u] - decoded[u]) for u in range(n))
    return RecoveryReport(
        demands=demands,
        needed=needed,
        decoded=tuple(frozenset(d) for d in decoded),
        missing=missing,
        redundant=tuple(redundant),
        extraneous=tuple(extraneous),
        undecodable=undecodable,
        byte_mismatches=byte_mismatches,
        multiplicity=dict(multiplicity),
    )


def check_memory(placement: CacheAssignment, exact: bool = False) -> bool:
    """Local memory constraint: every user stores at most (exactly, if asked) its budget."""
    for user in range(placement.n_users):
        used = placement.memory_used(user)
        if used > placement.cache_size:
            return False
        if exact and used != placement.cache_size:
            return False
    return True


def check_sender_caches(placement: CacheAssignment, schedule: DeliverySchedule) -> bool:
    """Senders may only transmit content they cached."""
    return all(msg.payload <= placement.caches[msg.sender] for msg in schedule.messages)


def delivery_multiplicity(report: RecoveryReport) -> dict[tuple[int, PacketId], int]:
    """Per (user, needed packet): how many messages delivered it."""
    return dict(report.multiplicity)


def exactly_once(report: RecoveryReport) -> bool:
    """True when every needed packet of every user was delivered exactly once."""
    total_needed = sum(len(s) for s in report.needed)
    return (
        len(report.multiplicity) == total_needed
        and all(count == 1 for count in report.multiplicity.values())
    )
