"""Lattice cache placement and XOR multicast delivery.

Files are split into the q^t points of a t-dimensional lattice with q points
per axis.  User u owns axis u // q and caches every packet whose coordinate on
that axis equals u mod q, so the network has n = t*q users and each stores
q^(t-1) packets per file.  Delivery runs over all q^t groups that pick one
user per axis; inside a group every user sends c XOR messages, where the
multiplicity c satisfies c*(t-1) = q-1 so that each member receives each of
its q-1 missing coordinate values exactly once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt

from .model import (
    CacheAssignment,
    DeliverySchedule,
    DemandVector,
    LatticePoint,
    MulticastMessage,
    NetworkParams,
    PacketId,
    groupcast_pair,
)


@dataclass(frozen=True)
class HypercubeParams:
    """Lattice geometry: q points per axis, t axes, multiplicity c with c*(t-1) = q-1."""

    q: int
    t: int
    c: int = 1

    def __post_init__(self) -> None:
        if self.q < 2:
            raise ValueError("need at least two lattice points per axis (q >= 2)")
        if self.t < 2:
            raise ValueError("a single axis leaves every user caching what nobody else needs (t >= 2)")
        if self.c < 1:
            raise ValueError("multiplicity c must be positive")
        if self.c * (self.t - 1) != self.q - 1:
            raise ValueError(
                f"asymmetric group: c*(t-1) = {self.c * (self.t - 1)} != q-1 = {self.q - 1}"
            )

    @property
    def n(self) -> int:
        return self.t * self.q

    @property
    def packets_per_file(self) -> int:
        return self.q**self.t

    @classmethod
    def square(cls, q: int) -> "HypercubeParams":
        """The c=1 geometry with t = q axes, i.e. n = q**2 users."""
        return cls(q=q, t=q, c=1)

    def library(self, m: int | None = None) -> NetworkParams:
        """A compatible library: m files (default n) with per-user cache M = m/q."""
        m = self.n if m is None else m
        if m < self.n:
            raise ValueError(f"library must hold m >= n = {self.n} files")
        return NetworkParams(self.n, m, Fraction(m, self.q))


def _check_library(params: HypercubeParams, library: NetworkParams) -> None:
    if library.n != params.n:
        raise ValueError(f"user count mismatch: lattice needs n = {params.n}, library has {library.n}")
    if library.q != params.q:
        raise ValueError(f"cache ratio mismatch: lattice needs m/M = {params.q}, library has {library.q}")


def hc_placement(params: HypercubeParams, library: NetworkParams) -> CacheAssignment:
    """Cache every packet whose coordinate on the user's own axis matches u mod q."""
    _check_library(params, library)
    q, t = params.q, params.t
    caches: list[set[PacketId]] = [set() for _ in range(params.n)]
    for file in range(library.m):
        for coords in itertools.product(range(q), repeat=t):
            pid = PacketId(file, LatticePoint(coords))
            # Packet (l_0..l_{t-1}) sits in cache of user axis*q + l_axis, one per axis.
            for axis, value in enumerate(coords):
                caches[axis * q + value].add(pid)
    return CacheAssignment(tuple(frozenset(c) for c in caches), params.packets_per_file, library.M)


def group_messages(
    params: HypercubeParams,
    cols: tuple[int, ...],
    members: tuple[int, ...],
    files: tuple[int, ...],
) -> list[MulticastMessage]:
    """All c*t messages exchanged inside one multicast group.

    ``cols[j]`` is the lattice coordinate owned by the member on axis j,
    ``members[j]`` its network id and ``files[j]`` its demanded file.  The
    message sent by the axis-i member in round k delivers, to the axis-s
    member, the packet whose axis-s coordinate is shifted by
    ((s - i) mod t) + k*(t - 1); across senders and rounds those shifts sweep
    1..q-1, so each member sees each missing coordinate value exactly once.
    """
    q, t, c = params.q, params.t, params.c
    size = Fraction(1, params.packets_per_file)
    out: list[MulticastMessage] = []
    for i in range(t):
        receivers = frozenset(members) - {members[i]}
        for k in range(c):
            payload = set()
            for s in range(t):
                if s == i:
                    continue
                shift = ((s - i) % t) + k * (t - 1)
                coords = list(cols)
                coords[s] = (cols[s] + shift) % q
                payload.add(PacketId(files[s], LatticePoint(tuple(coords))))
            out.append(MulticastMessage(members[i], receivers, frozenset(payload), size))
    return out


def hc_delivery(params: HypercubeParams, demands: DemandVector) -> DeliverySchedule:
    """Run every multicast group in lexicographic order over its lattice point."""
    if len(demands) != params.n:
        raise ValueError(f"demand vector length {len(demands)} != n = {params.n}")
    q, t = params.q, params.t
    messages: list[MulticastMessage] = []
    labels: list[object] = []
    for cols in itertools.product(range(q), repeat=t):
        members = tuple(axis * q + col for axis, col in enumerate(cols))
        files = tuple(demands[u] for u in members)
        msgs = group_messages(params, cols, members, files)
        messages.extend(msgs)
        labels.extend([members] * len(msgs))
    return DeliverySchedule(tuple(messages), tuple(labels))


def hc_rate(params: HypercubeParams) -> Fraction:
    """Exact traffic load c*t of the generated schedule."""
    rate = Fraction(params.c * params.t)
    # Closed forms must agree: c*t == (t/(t-1)) * q * (1 - 1/q), and == q when c == 1.
    general = Fraction(params.t, params.t - 1) * params.q * (1 - Fraction(1, params.q))
    assert rate == general
    if params.c == 1:
        assert rate == params.q
    return rate


def hc_packetization(params: HypercubeParams) -> int:
    """Packets per file q^t; for c=1 this equals sqrt(n)**sqrt(n)."""
    k = params.packets_per_file
    if params.c == 1:
        root = isqrt(params.n)
        assert root * root == params.n and k == root**root
    return k


@dataclass(frozen=True)
class ComparisonReport:
    """How the lattice scheme compares against the subset-groupcast reference."""

    K_prior: int
    R_prior: Fraction
    packetization_ratio: Fraction
    rate_ratio: Fraction


def compare_to_groupcast(params: HypercubeParams) -> ComparisonReport:
    """Exact packetization and rate ratios versus the subset-groupcast scheme."""
    k_prior, r_prior = groupcast_pair(params.n, params.t, params.q)
    return ComparisonReport(
        K_prior=k_prior,
        R_prior=r_prior,
        packetization_ratio=Fraction(k_prior, params.packets_per_file),
        rate_ratio=Fraction(params.t - 1, params.t),
    )
