"""Suffix-sum rate regions: membership, vertices, and greedy layer allocation.

A region over K users is ``{r >= 0 : sum_{i=k}^K r_i <= b_k for all k}``.
Bounds arise from per-layer capacities by suffix summation, and a feasible
rate tuple splits back into per-layer amounts by a greedy fill.  The
greedy is complete for this access structure (user i may transmit in
layers i..K only, so the users processed after i can reach every layer i
can); the test suite checks it against a max-flow oracle rather than
relying on that argument.

All arithmetic stays in the input number types, so integer regions are
handled exactly end to end.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

from .errors import InfeasibleRate

MAX_VERTEX_DIM = 8
MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True)
class SuffixRateRegion:
    """Rate polytope bounded only by suffix-sum constraints."""

    bounds: tuple

    def __post_init__(self):
        if len(self.bounds) == 0:
            raise ValueError("region needs at least one bound")
        if any(b < 0 for b in self.bounds):
            raise ValueError("suffix bounds must be nonnegative")

    @property
    def K(self) -> int:
        return len(self.bounds)

    def to_dict(self) -> dict:
        return {"K": self.K, "suffix_bounds": list(self.bounds)}


@dataclass(frozen=True)
class Allocation:
    """Per-layer rate split: ``table[i-1][l-1]`` is user i's rate in layer l.

    Entries with l < i are structurally zero; user i's row sums to its
    target rate and each layer column stays within its capacity.
    """

    table: tuple[tuple, ...]

    def amount(self, user: int, layer: int):
        return self.table[user - 1][layer - 1]

    def user_total(self, user: int):
        return sum(self.table[user - 1])

    def layer_total(self, layer: int):
        return sum(row[layer - 1] for row in self.table)


def region_from_layer_caps(caps: Sequence) -> SuffixRateRegion:
    """Eliminate per-layer variables: ``b_k = sum_{l=k}^K c_l``."""
    caps = tuple(caps)
    if any(c < 0 for c in caps):
        raise ValueError("layer capacities must be nonnegative")
    bounds = []
    total = 0
    for c in reversed(caps):
        total = total + c
        bounds.append(total)
    return SuffixRateRegion(tuple(reversed(bounds)))


def region_contains(region: SuffixRateRegion, rates: Sequence,
                    tol: float = MEMBERSHIP_TOL) -> bool:
    """Membership test with per-constraint absolute tolerance."""
    if len(rates) != region.K:
        raise ValueError(f"rate tuple has dimension {len(rates)}, expected {region.K}")
    if any(r < -tol for r in rates):
        return False
    suffix = 0
    for k in range(region.K, 0, -1):
        suffix = suffix + rates[k - 1]
        if suffix > region.bounds[k - 1] + tol:
            return False
    return True


def _vertex_candidate(bounds: tuple, tight: frozenset):
    """Solve for the intersection point of a K-subset of the 2K hyperplanes.

    Constraint ids: k in [1, K] is the suffix constraint with bound b_k;
    K + i is the nonnegativity constraint r_i = 0.  Returns None when the
    subset does not determine a unique point or is self-inconsistent.
    """
    K = len(bounds)
    suffix = [None] * (K + 2)  # suffix[i] = sum_{j=i}^K r_j; suffix[K+1] = 0
    suffix[K + 1] = 0
    for i in range(K, 0, -1):
        if i in tight:
            suffix[i] = bounds[i - 1]
        elif K + i in tight:
            suffix[i] = suffix[i + 1]
        else:
            return None
    rates = tuple(suffix[i] - suffix[i + 1] for i in range(1, K + 1))
    for i in range(1, K + 1):
        # a subset holding both constraints of coordinate i must satisfy both
        if i in tight and K + i in tight and rates[i - 1] != 0:
            return None
    return rates


def region_vertices(region: SuffixRateRegion) -> list[tuple]:
    """All vertices of the polytope, deduplicated and sorted.

    Brute force over K-subsets of the 2K constraint hyperplanes; fine for
    the supported K <= 8 and avoids a general LP dependency.
    """
    K = region.K
    if K > MAX_VERTEX_DIM:
        raise ValueError(f"vertex enumeration supports K <= {MAX_VERTEX_DIM}")
    exact = all(isinstance(b, int) for b in region.bounds)
    seen = {}
    for subset in combinations(range(1, 2 * K + 1), K):
        point = _vertex_candidate(region.bounds, frozenset(subset))
        if point is None or not region_contains(region, point):
            continue
        key = point if exact else tuple(round(float(r), 9) for r in point)
        seen.setdefault(key, point)
    return sorted(seen.values())


def _tightest_violation(caps: Sequence, rates: Sequence):
    """(k, excess) for the most violated suffix constraint, or None."""
    worst = None
    suffix_r = 0
    suffix_c = 0
    for k in range(len(caps), 0, -1):
        suffix_r = suffix_r + rates[k - 1]
        suffix_c = suffix_c + caps[k - 1]
        excess = suffix_r - suffix_c
        if excess > MEMBERSHIP_TOL and (worst is None or excess >= worst[1]):
            worst = (k, excess)
    return worst


def decompose_rates(rates: Sequence, caps: Sequence) -> Allocation:
    """Split a feasible rate tuple into per-layer amounts.

    Users are processed in decreasing index (user K has the fewest layer
    choices) and each fills its demand into layers i, i+1, ..., K in that
    order, consuming remaining capacity greedily.
    """
    K = len(caps)
    if len(rates) != K:
        raise ValueError(f"rate tuple has dimension {len(rates)}, expected {K}")
    if any(r < 0 for r in rates):
        raise ValueError("rates must be nonnegative")
    if any(c < 0 for c in caps):
        raise ValueError("layer capacities must be nonnegative")
    worst = _tightest_violation(caps, rates)
    if worst is not None:
        k, excess = worst
        raise InfeasibleRate(
            k, f"suffix constraint k={k} violated: "
               f"{sum(rates[k - 1:])} > {sum(caps[k - 1:])}")
    remaining = list(caps)
    table = [[rates[0] * 0] * K for _ in range(K)]  # zero of the input type
    sliver = 1e-9 * max(1.0, float(max(caps)), float(max(rates)))
    for user in range(K, 0, -1):
        demand = rates[user - 1]
        last = None
        for layer in range(user, K + 1):
            if demand <= 0:
                break
            put = min(demand, remaining[layer - 1])
            if put > 0:
                table[user - 1][layer - 1] = put
                remaining[layer - 1] = remaining[layer - 1] - put
                demand = demand - put
                last = layer
        if demand > 0:
            # boundary float targets admitted within the membership tolerance
            # can strand a sliver; park it in the deepest touched layer
            if demand <= sliver and last is not None:
                table[user - 1][last - 1] = table[user - 1][last - 1] + demand
            else:
                raise InfeasibleRate(
                    user, f"user {user} demand unplaced ({demand} left)")
    return Allocation(tuple(tuple(row) for row in table))
