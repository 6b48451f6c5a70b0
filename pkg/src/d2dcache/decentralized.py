"""Decentralized variant: random packet-set caching plus round-based delivery.

The file is packetized by a small reference lattice sized for n' = t'*q
notional slots; packet set (i, j) holds every packet whose axis-i coordinate
equals j.  Each of the n real users caches one of the n' sets uniformly at
random.  Delivery repeatedly peels off groups of n' users who jointly cover
all sets, recruiting already-satisfied users as stand-ins ("dummies") for sets
that have run out, and runs the centralized lattice delivery inside each
group.  Stand-ins re-request the file they already recovered, which keeps
every message well-formed; the resulting extra traffic is intentional and the
rate accounting below charges for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod

import numpy as np

from .hypercube import HypercubeParams, group_messages
from .model import (
    CacheAssignment,
    DeliverySchedule,
    DemandVector,
    LatticePoint,
    MulticastMessage,
    NetworkParams,
    PacketId,
)


class UncachedPacketSetError(RuntimeError):
    """Raised when some packet set was cached by nobody: the library is incomplete."""


@dataclass(frozen=True)
class DecentralizedParams:
    """n real users caching sets from a reference lattice with t' axes of q points."""

    n: int
    q: int
    t_prime: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("need at least one user")
        if self.t_prime < 2:
            raise ValueError("reference lattice needs t' >= 2")
        if self.q < 2:
            raise ValueError("reference lattice needs q >= 2")
        if (self.q - 1) % (self.t_prime - 1) != 0:
            raise ValueError(
                f"asymmetric reference group: (q-1) = {self.q - 1} not divisible by t'-1 = {self.t_prime - 1}"
            )

    @property
    def c(self) -> int:
        return (self.q - 1) // (self.t_prime - 1)

    @property
    def n_prime(self) -> int:
        return self.t_prime * self.q

    @property
    def packets_per_file(self) -> int:
        return self.q**self.t_prime

    @property
    def reference(self) -> HypercubeParams:
        """The centralized lattice run inside every delivery group."""
        return HypercubeParams(q=self.q, t=self.t_prime, c=self.c)

    def centralized_rate(self) -> Fraction:
        """Rate c*t' of one full reference delivery."""
        return Fraction(self.c * self.t_prime)

    def library(self, m: int | None = None) -> NetworkParams:
        """A compatible library: m files (default: smallest multiple of q >= n)."""
        if m is None:
            m = ((self.n + self.q - 1) // self.q) * self.q
        if m < self.n:
            raise ValueError(f"library must hold m >= n = {self.n} files")
        return NetworkParams(self.n, m, Fraction(m, self.q))


@dataclass(frozen=True)
class PacketSetId:
    """Packet set (row, col): all packets whose axis-``row`` coordinate equals ``col``."""

    row: int
    col: int


@dataclass(frozen=True)
class PlacementCounts:
    """Realized placement: the t'-by-q occupancy matrix plus each user's chosen set.

    ``choices[u]`` is the flat set index row*q + col of user u.
    """

    counts: tuple[tuple[int, ...], ...]
    choices: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(tuple(row) for row in self.counts))
        object.__setattr__(self, "choices", tuple(self.choices))
        if any(v < 0 for row in self.counts for v in row):
            raise ValueError("occupancy counts cannot be negative")
        if sum(v for row in self.counts for v in row) != len(self.choices):
            raise ValueError("occupancy counts do not add up to the number of users")

    @property
    def n(self) -> int:
        return len(self.choices)

    @property
    def t_prime(self) -> int:
        return len(self.counts)

    @property
    def q(self) -> int:
        return len(self.counts[0])

    def chosen_set(self, user: int) -> PacketSetId:
        flat = self.choices[user]
        return PacketSetId(flat // self.q, flat % self.q)

    @classmethod
    def from_choices(cls, choices: tuple[int, ...], t_prime: int, q: int) -> "PlacementCounts":
        counts = [[0] * q for _ in range(t_prime)]
        for flat in choices:
            counts[flat // q][flat % q] += 1
        return cls(tuple(tuple(row) for row in counts), tuple(choices))

    @classmethod
    def from_counts(cls, counts) -> "PlacementCounts":
        """Fixture constructor: users 0..n-1 are assigned to sets in ascending flat order."""
        q = len(counts[0])
        choices: list[int] = []
        for i, row in enumerate(counts):
            for j, count in enumerate(row):
                choices.extend([i * q + j] * count)
        return cls(tuple(tuple(row) for row in counts), tuple(choices))


def dec_place(params: DecentralizedParams, seed=None, bijective: bool = False) -> PlacementCounts:
    """Each user independently picks one of the n' packet sets uniformly.

    ``seed`` feeds numpy's PCG64 generator (any SeedSequence-compatible value),
    making the draw reproducible.  ``bijective=True`` skips randomness and
    assigns user u to set u, which requires n == n'.
    """
    if bijective:
        if params.n != params.n_prime:
            raise ValueError("bijective placement needs exactly n' users")
        return PlacementCounts.from_choices(tuple(range(params.n)), params.t_prime, params.q)
    rng = np.random.default_rng(seed)
    flat = rng.integers(0, params.n_prime, size=params.n)
    return PlacementCounts.from_choices(tuple(int(v) for v in flat), params.t_prime, params.q)


def dec_cache_assignment(
    counts: PlacementCounts, params: DecentralizedParams, library: NetworkParams
) -> CacheAssignment:
    """Materialize each user's packets: its chosen set, for every file."""
    if library.n != counts.n:
        raise ValueError("library user count does not match the placement")
    if library.q != params.q:
        raise ValueError(f"cache ratio mismatch: lattice needs m/M = {params.q}, library has {library.q}")
    q, t_p = params.q, params.t_prime
    set_packets: dict[int, frozenset[PacketId]] = {}
    for i in range(t_p):
        for j in range(q):
            pids = frozenset(
                PacketId(file, LatticePoint(coords))
                for file in range(library.m)
                for coords in product(range(q), repeat=t_p)
                if coords[i] == j
            )
            set_packets[i * q + j] = pids
    caches = tuple(set_packets[flat] for flat in counts.choices)
    return CacheAssignment(caches, params.packets_per_file, library.M)


@dataclass(frozen=True)
class RoundRecord:
    """One delivery round: the peel count x, per-axis depleted-set tallies, and accounting."""

    multiplier: int
    zero_counts: tuple[int, ...]
    skipped_groups: int
    satisfied: int
    contribution: Fraction


@dataclass(frozen=True)
class RoundLog:
    rounds: tuple[RoundRecord, ...]

    @property
    def total_rate(self) -> Fraction:
        return sum((r.contribution for r in self.rounds), Fraction(0))

    @property
    def multipliers(self) -> tuple[int, ...]:
        return tuple(r.multiplier for r in self.rounds)


def dec_round_log(counts: PlacementCounts, params: DecentralizedParams) -> RoundLog:
    """Pure rate accounting over the occupancy matrix, no messages materialized.

    Per round: x is the minimum nonzero occupancy, groups whose every slot maps
    to a depleted set (prod over all axes of the per-axis zero tallies) are
    skipped, and the round contributes x * (K' - skipped) * c * t' / K'.
    """
    if counts.t_prime != params.t_prime or counts.q != params.q:
        raise ValueError("placement shape does not match the parameters")
    matrix = [list(row) for row in counts.counts]
    if any(v == 0 for row in matrix for v in row):
        raise UncachedPacketSetError("some packet set was cached by nobody")
    k = params.packets_per_file
    per_group = params.c * params.t_prime
    rounds: list[RoundRecord] = []
    while any(v for row in matrix for v in row):
        zero_counts = tuple(sum(1 for v in row if v == 0) for row in matrix)
        skipped = prod(zero_counts)
        x = min(v for row in matrix for v in row if v > 0)
        satisfied = x * (params.n_prime - sum(zero_counts))
        contribution = Fraction(x * (k - skipped) * per_group, k)
        rounds.append(RoundRecord(x, zero_counts, skipped, satisfied, contribution))
        for row in matrix:
            for j, v in enumerate(row):
                row[j] = max(0, v - x)
    return RoundLog(tuple(rounds))


def dec_delivery(
    counts: PlacementCounts,
    params: DecentralizedParams,
    demands: DemandVector | None = None,
    emit_schedule: bool = True,
) -> tuple[RoundLog, DeliverySchedule]:
    """Round-based delivery with explicit messages.

    Group formation is deterministic: within each non-depleted set, unsatisfied
    users are consumed in ascending id order; the stand-in for a depleted set
    is the lowest-id user that cached it (necessarily satisfied already).
    """
    if counts.t_prime != params.t_prime or counts.q != params.q:
        raise ValueError("placement shape does not match the parameters")
    if emit_schedule and demands is None:
        raise ValueError("schedule emission needs the demand vector")
    if demands is not None and len(demands) != counts.n:
        raise ValueError("demand vector length does not match the placement")

    matrix = [list(row) for row in counts.counts]
    if any(v == 0 for row in matrix for v in row):
        raise UncachedPacketSetError("some packet set was cached by nobody")

    q, t_p = params.q, params.t_prime
    pools: dict[int, list[int]] = {flat: [] for flat in range(params.n_prime)}
    for user, flat in enumerate(counts.choices):
        pools[flat].append(user)
    for pool in pools.values():
        pool.sort()
    consumed = {flat: 0 for flat in pools}

    reference = params.reference
    rounds: list[RoundRecord] = []
    messages: list[MulticastMessage] = []
    labels: list[object] = []

    round_idx = 0
    while any(v for row in matrix for v in row):
        zero_counts = tuple(sum(1 for v in row if v == 0) for row in matrix)
        skipped = prod(zero_counts)
        x = min(v for row in matrix for v in row if v > 0)
        zero_mask = [[v == 0 for v in row] for row in matrix]

        # slot_users[a][flat]: the member playing slot `flat` in the a-th group.
        slot_users: list[dict[int, int]] = [dict() for _ in range(x)]
        for i in range(t_p):
            for j in range(q):
                flat = i * q + j
                if matrix[i][j] > 0:
                    start = consumed[flat]
                    taken = pools[flat][start : start + x]
                    for a, user in enumerate(taken):
                        slot_users[a][flat] = user
                    consumed[flat] += x
                else:
                    stand_in = pools[flat][0]
                    for a in range(x):
                        slot_users[a][flat] = stand_in

        if emit_schedule:
            assert demands is not None
            for a in range(x):
                for cols in product(range(q), repeat=t_p):
                    if all(zero_mask[i][col] for i, col in enumerate(cols)):
                        continue  # every member already satisfied
                    members = tuple(slot_users[a][i * q + col] for i, col in enumerate(cols))
                    files = tuple(demands[u] for u in members)
                    msgs = group_messages(reference, cols, members, files)
                    messages.extend(msgs)
                    labels.extend([(round_idx, a, cols)] * len(msgs))

        satisfied = x * (params.n_prime - sum(zero_counts))
        contribution = Fraction(
            x * (params.packets_per_file - skipped) * params.c * t_p, params.packets_per_file
        )
        rounds.append(RoundRecord(x, zero_counts, skipped, satisfied, contribution))
        for row in matrix:
            for j, v in enumerate(row):
                row[j] = max(0, v - x)
        round_idx += 1

    return RoundLog(tuple(rounds)), DeliverySchedule(tuple(messages), tuple(labels))


@dataclass(frozen=True)
class Stats:
    """Monte Carlo summary: population mean/std over non-violating trials."""

    mean: float
    std: float
    violations: int
    trials: int


def trial_seed(seed: int, trial: int) -> list[int]:
    """Per-trial entropy: the pair [master seed, trial index], fed to PCG64."""
    return [seed, trial]


def dec_monte_carlo(params: DecentralizedParams, trials: int, seed: int = 0) -> Stats:
    """Repeated placement plus delivery-rate accounting with derived per-trial seeds.

    Trials whose placement leaves a packet set uncached are counted as
    violations and excluded from the statistics.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rates: list[float] = []
    violations = 0
    for trial in range(trials):
        placement = dec_place(params, seed=trial_seed(seed, trial))
        try:
            log = dec_round_log(placement, params)
        except UncachedPacketSetError:
            violations += 1
            continue
        rates.append(float(log.total_rate))
    if rates:
        arr = np.asarray(rates)
        mean = float(arr.mean())
        std = float(arr.std())
    else:
        mean = math.nan
        std = math.nan
    return Stats(mean=mean, std=std, violations=violations, trials=trials)


def sweep_rows(
    n: int, t_prime: int, q_values, trials: int, seed: int = 0, m: int | None = None
) -> list[dict]:
    """One Monte Carlo summary row per lattice width q, for fixed n and t'.

    Row keys: n, n_prime, t_prime, K_prime, mean, std, violations,
    centralized, uncoded.
    """
    rows = []
    for q in q_values:
        params = DecentralizedParams(n=n, q=q, t_prime=t_prime)
        library = params.library(m)
        stats = dec_monte_carlo(params, trials, seed)
        rows.append(
            {
                "n": n,
                "n_prime": params.n_prime,
                "t_prime": t_prime,
                "K_prime": params.packets_per_file,
                "mean": stats.mean,
                "std": stats.std,
                "violations": stats.violations,
                "centralized": params.centralized_rate(),
                "uncoded": n * (1 - Fraction(1, q)),
                "library_m": library.m,
            }
        )
    return rows


def max_load_bound(
    n: int,
    n_prime: int,
    alpha: float,
    regime: str,
    beta: float | None = None,
    d_beta: float | None = None,
) -> float:
    """High-probability bound k_alpha on the fullest packet set's occupancy.

    Regimes (natural logarithms throughout):

    - ``sparse``  (n = beta * n' * log n'):  (d_beta - 1 + alpha) * log n',
      with the beta-dependent constant d_beta supplied by the caller.
    - ``mid``     (n well above n' log n'):  n/n' + alpha * sqrt(2 (n/n') log n').
    - ``dense``:  n/n' + sqrt(2 n log n' / n') * (1 - (1/alpha) * (log log n') / (2 log n')).

    Returned bare: the implied rate bound is k_alpha times the centralized
    rate c*t' (see :func:`rate_bound`).
    """
    if alpha <= 1:
        raise ValueError("alpha must exceed 1")
    if beta is not None and beta <= 1:
        raise ValueError("beta must exceed 1")
    log_np = math.log(n_prime)
    if regime == "sparse":
        if d_beta is None:
            raise ValueError("the sparse regime needs the caller-supplied constant d_beta")
        return (d_beta - 1 + alpha) * log_np
    if regime == "mid":
        return n / n_prime + alpha * math.sqrt(2 * (n / n_prime) * log_np)
    if regime == "dense":
        return n / n_prime + math.sqrt(2 * n * log_np / n_prime) * (
            1 - (1 / alpha) * math.log(log_np) / (2 * log_np)
        )
    raise ValueError(f"unknown regime {regime!r}; expected sparse, mid, or dense")


def rate_bound(params: DecentralizedParams, k_alpha: float) -> float:
    """Rate bound k_alpha * c * t' implied by a bin-load bound k_alpha."""
    return k_alpha * float(params.centralized_rate())


def coverage_probability(n: int, n_prime: int, beta: float) -> float:
    """Lower bound 1 - n'^(1-beta) on every packet set being cached, for n >= beta n' log n'."""
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if n < beta * n_prime * math.log(n_prime):
        raise ValueError(f"precondition n >= beta * n' * log n' violated: n = {n}")
    return 1 - n_prime ** (1 - beta)
