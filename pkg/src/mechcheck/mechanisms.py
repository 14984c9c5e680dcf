"""Payment rules: VCG, second-price (Vickrey), and open-cry close-out.

Each rule maps a validated instance to an Outcome holding the chosen
allocation and, per agent, the payment, the Clarke tax (welfare the other
agents could reach without this agent), and the won bundles. The open-cry
("english") rule is deliberately the textbook close-out where the
standing winner pays their own final bid; the property checker exists to
surface what that does to incentives, not to paper over it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .model import Bundle, Mechanism, ValidatedInstance
from .windeterm import Allocation, solve_cap, welfare_of


@dataclass(frozen=True)
class AgentResult:
    payment: int
    clarke_tax: int
    winning_bundles: tuple[Bundle, ...]


@dataclass(frozen=True)
class Outcome:
    allocation: Allocation
    agents: tuple[str, ...]
    results: dict[str, AgentResult]
    sold: bool = True
    utilities: dict[str, int] | None = None

    @property
    def revenue(self) -> int:
        return sum(r.payment for r in self.results.values())


def utility(valuation: int, payment: int) -> int:
    """Quasi-linear utility of receiving value `valuation` at `payment`."""
    return valuation - payment


def vcg_outcome(inst: ValidatedInstance) -> Outcome:
    """Clarke pivot payments around the exact optimal allocation.

    Solves one winner determination per agent on top of the main one.
    Payment of agent i is welfare the others reach without i, minus
    welfare the others get at the chosen allocation. Losers pay 0.
    """
    star = solve_cap(inst)
    results: dict[str, AgentResult] = {}
    for agent in inst.agents:
        others_at_star = welfare_of(inst, star.accepted, excluded_agent=agent)
        clarke = solve_cap(inst, excluded_agent=agent).welfare
        won = tuple(
            inst.bids[i].bundle for i in star.accepted if inst.bids[i].agent == agent
        )
        results[agent] = AgentResult(
            payment=clarke - others_at_star,
            clarke_tax=clarke,
            winning_bundles=won,
        )
    return Outcome(allocation=star, agents=inst.agents, results=results)


def _single_item_winner(inst: ValidatedInstance) -> int:
    """Index of the highest bid; ties go to the lowest bid index."""
    best = 0
    for i in range(1, len(inst.bids)):
        if inst.bids[i].amount > inst.bids[best].amount:
            best = i
    return best


def _single_item_outcome(inst: ValidatedInstance, pay_own_bid: bool) -> Outcome:
    winner_index = _single_item_winner(inst)
    winner_bid = inst.bids[winner_index]
    results: dict[str, AgentResult] = {}
    for agent in inst.agents:
        # with one item, the best allocation without this agent is just
        # the highest bid any other agent placed
        clarke = max((b.amount for b in inst.bids if b.agent != agent), default=0)
        if agent == winner_bid.agent:
            payment = winner_bid.amount if pay_own_bid else clarke
            results[agent] = AgentResult(
                payment=payment, clarke_tax=clarke, winning_bundles=(winner_bid.bundle,)
            )
        else:
            results[agent] = AgentResult(payment=0, clarke_tax=clarke, winning_bundles=())
    allocation = Allocation(accepted=(winner_index,), welfare=winner_bid.amount)
    return Outcome(allocation=allocation, agents=inst.agents, results=results)


def vickrey_outcome(inst: ValidatedInstance) -> Outcome:
    """Second-price rule: winner pays the best competing bid, 0 if alone."""
    return _single_item_outcome(inst, pay_own_bid=False)


def english_outcome(inst: ValidatedInstance) -> Outcome:
    """Close-out price rule: the standing winner pays their own bid."""
    return _single_item_outcome(inst, pay_own_bid=True)


def apply_reserve(out: Outcome, reserve: int) -> Outcome:
    """Mark unsold and zero allocations and payments when revenue falls short.

    The sale stands exactly when revenue is greater or equal to the
    reserve. Clarke taxes are informational and survive an unsold
    outcome.
    """
    if out.revenue >= reserve:
        return replace(out, sold=True)
    results = {
        agent: AgentResult(payment=0, clarke_tax=r.clarke_tax, winning_bundles=())
        for agent, r in out.results.items()
    }
    return replace(
        out,
        allocation=Allocation(accepted=(), welfare=0),
        results=results,
        sold=False,
    )


_DISPATCH = {
    Mechanism.VCG: vcg_outcome,
    Mechanism.VICKREY: vickrey_outcome,
    Mechanism.ENGLISH: english_outcome,
}


def mechanism_outcome(inst: ValidatedInstance) -> Outcome:
    """The configured payment rule, before any reserve is applied."""
    return _DISPATCH[inst.config.mechanism](inst)


def run_mechanism(inst: ValidatedInstance) -> Outcome:
    """Dispatch on the configured mechanism, apply the reserve, and fill
    in utilities for every agent whose declared valuations cover what
    they received. Agents without a usable valuation get no utility entry
    rather than a defaulted 0.
    """
    out = mechanism_outcome(inst)
    out = apply_reserve(out, inst.config.reserve)
    if inst.valuations is None:
        return out
    utilities: dict[str, int] = {}
    for agent in inst.agents:
        result = out.results[agent]
        received: Bundle = frozenset()
        for bundle in result.winning_bundles:
            received |= bundle
        value = inst.valuations.value_of(agent, received)
        if value is None:
            continue
        utilities[agent] = utility(value, result.payment)
    return replace(out, utilities=utilities)
