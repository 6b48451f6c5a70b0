"""Shared domain types, demand handling, and rate accounting.

Every rate, size, and memory quantity is an exact :class:`fractions.Fraction`;
floating point enters only in geometry summaries and Monte Carlo statistics.
File size is normalized to 1, so each packet of a file split K ways has size
1/K and a cache of M file-units holds exactly M*K packets.
"""

from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Union

Rational = Union[Fraction, int, str]


def as_fraction(value: Rational) -> Fraction:
    """Coerce an int, Fraction, or exact "p/q" string to a Fraction.

    Floats are rejected on purpose: all accounting must stay exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rational quantities")
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"expected int, Fraction, or 'p/q' string, got {type(value).__name__}")


def frac_str(value: Fraction) -> str:
    """Render a Fraction losslessly as "p/q"."""
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class NetworkParams:
    """Global network description: ``n`` users, ``m`` files, cache of ``M`` files each.

    Requires m >= n (one distinct file available per user) and a cache budget
    of at least one collective library copy (n*M/m >= 1).  A cache that holds
    the whole library is legal but degenerate and only triggers a warning.
    """

    n: int
    m: int
    M: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "M", as_fraction(self.M))
        if self.n < 1:
            raise ValueError("need at least one user")
        if self.m < self.n:
            raise ValueError(f"library too small for distinct demands: m={self.m} < n={self.n}")
        if self.M <= 0:
            raise ValueError("per-user cache must be positive")
        if self.t < 1:
            raise ValueError(f"cache budget below one library copy: n*M/m = {self.t} < 1")
        if self.M >= self.m:
            warnings.warn("per-user cache holds the whole library; caching is degenerate", stacklevel=2)

    @property
    def t(self) -> Fraction:
        """Library replication factor n*M/m."""
        return Fraction(self.n) * self.M / self.m

    @property
    def q(self) -> Fraction:
        """Inverse cache fraction m/M."""
        return Fraction(self.m) / self.M


@dataclass(frozen=True)
class DemandVector:
    """Per-user file requests.  Distinct entries (the worst case) by default."""

    files: tuple[int, ...]
    allow_repeats: bool = field(default=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "files", tuple(self.files))
        if not self.allow_repeats and len(set(self.files)) != len(self.files):
            raise ValueError("duplicate demands; pass allow_repeats=True to relax")

    def __len__(self) -> int:
        return len(self.files)

    def __getitem__(self, user: int) -> int:
        return self.files[user]

    @classmethod
    def identity(cls, n: int) -> "DemandVector":
        """User u requests file u."""
        return cls(tuple(range(n)))


@dataclass(frozen=True)
class LatticePoint:
    """Position of one packet in the q-ary t-dimensional placement lattice."""

    coords: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coords", tuple(self.coords))


@dataclass(frozen=True)
class VertexSlot:
    """One of the 2*gamma-1 packet slots owned by a graph vertex."""

    vertex: int
    slot: int


@dataclass(frozen=True)
class PacketId:
    """Identity of one packet of one file under the active scheme's locator."""

    file: int
    locator: Union[LatticePoint, VertexSlot]


@dataclass(frozen=True)
class CacheAssignment:
    """Per-user cached packet sets with memory accounting.

    ``packets_per_file`` is K; each packet costs 1/K file-units, so user u
    stores len(caches[u])/K file-units, which may never exceed the declared
    budget ``cache_size``.
    """

    caches: tuple[frozenset[PacketId], ...]
    packets_per_file: int
    cache_size: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "cache_size", as_fraction(self.cache_size))
        object.__setattr__(self, "caches", tuple(frozenset(c) for c in self.caches))
        if self.packets_per_file < 1:
            raise ValueError("packets_per_file must be positive")
        for user, cache in enumerate(self.caches):
            used = Fraction(len(cache), self.packets_per_file)
            if used > self.cache_size:
                raise ValueError(
                    f"user {user} stores {used} file-units, exceeding the budget {self.cache_size}"
                )

    @property
    def n_users(self) -> int:
        return len(self.caches)

    def memory_used(self, user: int) -> Fraction:
        """File-units occupied in user's cache (exact)."""
        return Fraction(len(self.caches[user]), self.packets_per_file)


@dataclass(frozen=True)
class MulticastMessage:
    """One transmission: the XOR of ``payload`` packets, size 1/K file-units."""

    sender: int
    receivers: frozenset[int]
    payload: frozenset[PacketId]
    size: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "receivers", frozenset(self.receivers))
        object.__setattr__(self, "payload", frozenset(self.payload))
        object.__setattr__(self, "size", as_fraction(self.size))
        if self.sender in self.receivers:
            raise ValueError("sender cannot be its own receiver")
        if not self.payload:
            raise ValueError("payload must be non-empty")
        if self.size <= 0:
            raise ValueError("message size must be positive")


@dataclass(frozen=True)
class DeliverySchedule:
    """Ordered transmissions plus a parallel label telling which group/matching/round emitted each."""

    messages: tuple[MulticastMessage, ...]
    groups: tuple[object, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "messages", tuple(self.messages))
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.groups and len(self.groups) != len(self.messages):
            raise ValueError("group labels must align one-to-one with messages")

    def __len__(self) -> int:
        return len(self.messages)


def measured_rate(schedule: DeliverySchedule) -> Fraction:
    """Total transmitted file-units: the exact sum of message sizes."""
    return sum((msg.size for msg in schedule.messages), Fraction(0))


def uncoded_rate(params: NetworkParams) -> Fraction:
    """Traffic load of plain unicasting: n * (1 - M/m)."""
    return params.n * (1 - params.M / params.m)


def worst_case_demands(params: NetworkParams, seed: int | None = None) -> DemandVector:
    """Distinct demands for all users: the identity assignment, or a seeded draw."""
    if seed is None:
        return DemandVector.identity(params.n)
    rng = random.Random(seed)
    return DemandVector(tuple(rng.sample(range(params.m), params.n)))


def groupcast_pair(n: int, t: int, q: Rational) -> tuple[int, Fraction]:
    """Packetization and rate (K', R') of the reference subset-groupcast scheme.

    K' = t * C(n, t) packets per file and R' = q - 1, evaluated exactly with no
    factorial approximation.
    """
    if not 1 <= t <= n:
        raise ValueError("replication factor t must lie in [1, n]")
    return t * comb(n, t), as_fraction(q) - 1
