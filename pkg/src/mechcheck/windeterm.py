"""Exact winner determination for combinatorial auctions.

The problem: pick a welfare-maximal subset of bids whose bundles are
pairwise disjoint. Items may stay unallocated (free disposal). The search
is a depth-first branch and bound over bid indexes in input order with an
additive bound, so results are exact at the desk scales this package
targets; the problem itself is NP-hard and inputs with many bids will be
slow.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ValidatedInstance


class InfeasibleAllocation(ValueError):
    """An allocation assigned some item to two accepted bids."""


@dataclass(frozen=True)
class Allocation:
    """Accepted bid indexes (ascending) plus their total welfare."""

    accepted: tuple[int, ...]
    welfare: int


def welfare_of(
    inst: ValidatedInstance,
    accepted: tuple[int, ...],
    excluded_agent: str | None = None,
) -> int:
    """Sum of accepted bid amounts, skipping bids of `excluded_agent`.

    Checks feasibility of the full accepted set first and raises
    InfeasibleAllocation when two accepted bundles overlap.
    """
    seen: set[str] = set()
    total = 0
    for index in accepted:
        bid = inst.bids[index]
        if seen & bid.bundle:
            raise InfeasibleAllocation(f"bid {index} overlaps an earlier accepted bundle")
        seen |= bid.bundle
        if excluded_agent is None or bid.agent != excluded_agent:
            total += bid.amount
    return total


def solve_cap(inst: ValidatedInstance, excluded_agent: str | None = None) -> Allocation:
    """Optimal allocation, deterministic under ties.

    When `excluded_agent` is given, every bid of that agent is removed
    before solving. Among equal-welfare optima the allocation whose
    sorted accepted-index tuple is lexicographically smallest wins, with
    indexes referring to positions in the original bid list.
    """
    candidates = [
        i
        for i, bid in enumerate(inst.bids)
        if excluded_agent is None or bid.agent != excluded_agent
    ]
    # suffix_sum[k] bounds the welfare still reachable from candidate k on
    suffix_sum = [0] * (len(candidates) + 1)
    for k in range(len(candidates) - 1, -1, -1):
        suffix_sum[k] = suffix_sum[k + 1] + inst.bids[candidates[k]].amount

    best_welfare = -1
    best_accepted: tuple[int, ...] = ()
    bids = inst.bids
    chosen: list[int] = []

    def descend(k: int, taken: frozenset[str], welfare: int) -> None:
        nonlocal best_welfare, best_accepted
        if welfare + suffix_sum[k] < best_welfare:
            return
        if k == len(candidates):
            accepted = tuple(chosen)
            if welfare > best_welfare or (
                welfare == best_welfare and accepted < best_accepted
            ):
                best_welfare = welfare
                best_accepted = accepted
            return
        index = candidates[k]
        bundle = bids[index].bundle
        if not (taken & bundle):
            chosen.append(index)
            descend(k + 1, taken | bundle, welfare + bids[index].amount)
            chosen.pop()
        descend(k + 1, taken, welfare)

    descend(0, frozenset(), 0)
    return Allocation(accepted=best_accepted, welfare=best_welfare)
