"""Exhaustive property checks over finite bid grids.

Strategyproofness is checked by brute force: every agent, every truthful
value on the grid, every opponent profile, every deviating bid. The scan
order is fixed (agent index, then truthful value ascending, then opponent
profile lexicographic, then deviation ascending) so the first violation
found, and therefore the reported witness, is deterministic. Utilities on
both sides of the comparison come from running the full mechanism, never
from a payment shortcut.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

from .mechanisms import Outcome, mechanism_outcome, run_mechanism, utility
from .model import Bid, Bundle, Mechanism, ValidatedInstance

HOLDS_ON_GRID = "holds_on_grid"
VIOLATED = "violated"

ADDITIVE = "additive"
SUB_ADDITIVE = "sub_additive"
SUPER_ADDITIVE = "super_additive"
NEITHER = "neither"

DEFAULT_CELL_CAP = 10_000_000


class GridTooLarge(ValueError):
    def __init__(self, cells: int, cap: int) -> None:
        super().__init__(f"grid scan needs {cells} cells, cap is {cap}")
        self.cells = cells
        self.cap = cap


class MissingValuation(ValueError):
    pass


class IncompleteValuation(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Inclusive integer range lo..hi walked in steps of `step`."""

    lo: int
    hi: int
    step: int

    def __post_init__(self) -> None:
        if self.lo < 0:
            raise ValueError(f"grid low bound {self.lo} is negative")
        if self.step <= 0:
            raise ValueError(f"grid step {self.step} must be positive")
        if self.hi < self.lo:
            raise ValueError(f"grid bounds {self.lo}..{self.hi} are inverted")
        if (self.hi - self.lo) % self.step != 0:
            raise ValueError(
                f"grid span {self.hi - self.lo} is not a multiple of step {self.step}"
            )

    def values(self) -> tuple[int, ...]:
        return tuple(range(self.lo, self.hi + 1, self.step))

    def __contains__(self, value: int) -> bool:
        return self.lo <= value <= self.hi and (value - self.lo) % self.step == 0


@dataclass(frozen=True)
class Witness:
    """One strategyproofness violation, re-checkable through the mechanism."""

    agent_index: int
    agent: str
    valuation: int
    opponents: tuple[int, ...]
    deviation: int
    truthful_utility: int
    deviating_utility: int


@dataclass(frozen=True)
class Verdict:
    prop: str
    result: str
    cells_checked: int
    witness: Witness | None = None


@dataclass(frozen=True)
class _Domain:
    """Agents and the bundle each one bids on, lifted from a template."""

    name: str
    items: tuple[str, ...]
    config: object
    agents: tuple[str, ...]
    bundles: tuple[Bundle, ...]


def _domain_of(template: ValidatedInstance, n_agents: int) -> _Domain:
    if n_agents != len(template.agents):
        raise ValueError(
            f"template declares {len(template.agents)} agents, caller asked for {n_agents}"
        )
    bundles = []
    for agent in template.agents:
        first = next(b for b in template.bids if b.agent == agent)
        bundles.append(first.bundle)
    if template.config.mechanism is Mechanism.VCG:
        if len(template.items) > 2 or n_agents > 3:
            raise ValueError(
                "combinatorial strategyproofness scan supports at most 2 items and 3 agents"
            )
    return _Domain(
        name=template.name,
        items=template.items,
        config=template.config,
        agents=template.agents,
        bundles=tuple(bundles),
    )


def _profile_instance(domain: _Domain, amounts: tuple[int, ...]) -> ValidatedInstance:
    bids = tuple(
        Bid(agent=domain.agents[j], bundle=domain.bundles[j], amount=amounts[j])
        for j in range(len(amounts))
    )
    return ValidatedInstance(
        name=domain.name,
        items=domain.items,
        config=domain.config,  # type: ignore[arg-type]
        bids=bids,
        agents=domain.agents,
        valuations=None,
    )


def _realized_utility(domain: _Domain, amounts: tuple[int, ...], i: int, valuation: int) -> int:
    """Utility of agent i with true value `valuation`, via the full mechanism."""
    out = run_mechanism(_profile_instance(domain, amounts))
    result = out.results[domain.agents[i]]
    value = valuation if result.winning_bundles else 0
    return utility(value, result.payment)


def profile_amounts(i: int, own: int, opponents: tuple[int, ...]) -> tuple[int, ...]:
    """Amounts in agent order with `own` spliced in at position i."""
    return opponents[:i] + (own,) + opponents[i:]


def evaluate_cell(
    template: ValidatedInstance,
    agent_index: int,
    valuation: int,
    opponents: tuple[int, ...],
    deviation: int,
) -> tuple[int, int]:
    """Truthful and deviating utility at one scan cell.

    This is the re-check entry point used for witnesses: both numbers
    come from complete mechanism runs on the reconstructed bid profiles.
    """
    domain = _domain_of(template, len(template.agents))
    truthful = profile_amounts(agent_index, valuation, opponents)
    deviating = profile_amounts(agent_index, deviation, opponents)
    u_truth = _realized_utility(domain, truthful, agent_index, valuation)
    u_dev = _realized_utility(domain, deviating, agent_index, valuation)
    return u_truth, u_dev


def witness_instance(template: ValidatedInstance, witness: Witness) -> ValidatedInstance:
    """The deviating bid profile of a witness, as a runnable instance."""
    domain = _domain_of(template, len(template.agents))
    amounts = profile_amounts(witness.agent_index, witness.deviation, witness.opponents)
    inst = _profile_instance(domain, amounts)
    return ValidatedInstance(
        name=f"{template.name}-witness",
        items=inst.items,
        config=inst.config,
        bids=inst.bids,
        agents=inst.agents,
        valuations=None,
    )


def scan_position(n_agents: int, grid: Grid, witness: Witness) -> int:
    """How many cells the canonical scan covers up to and including the witness.

    Raises ValueError when any witness coordinate is off the grid or the
    agent index is out of range.
    """
    values = grid.values()
    index_of = {v: k for k, v in enumerate(values)}
    if not 0 <= witness.agent_index < n_agents:
        raise ValueError(f"witness agent index {witness.agent_index} out of range")
    if len(witness.opponents) != n_agents - 1:
        raise ValueError("witness opponent count does not match agent count")
    for coord in (witness.valuation, witness.deviation, *witness.opponents):
        if coord not in index_of:
            raise ValueError(f"witness value {coord} is off the grid")
    g = len(values)
    linear = witness.agent_index
    linear = linear * g + index_of[witness.valuation]
    for opp in witness.opponents:
        linear = linear * g + index_of[opp]
    linear = linear * g + index_of[witness.deviation]
    return linear + 1


def strategyproof_cells(n_agents: int, grid: Grid) -> int:
    return n_agents * len(grid.values()) ** (n_agents + 1)


def check_strategyproof(
    template: ValidatedInstance,
    n_agents: int,
    grid: Grid,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> Verdict:
    """Exhaustive truthfulness check on the grid.

    The template's bids fix each agent's bundle of interest; their
    amounts are ignored. Truthful bidding means the agent bids its value.
    Returns the first violation in canonical scan order, or holds_on_grid
    after covering every cell.
    """
    domain = _domain_of(template, n_agents)
    total = strategyproof_cells(n_agents, grid)
    if total > cell_cap:
        raise GridTooLarge(total, cell_cap)

    values = grid.values()
    cells = 0
    for i in range(n_agents):
        for v in values:
            for opponents in product(values, repeat=n_agents - 1):
                truthful = profile_amounts(i, v, opponents)
                u_truth = _realized_utility(domain, truthful, i, v)
                for dev in values:
                    cells += 1
                    if dev == v:
                        continue
                    deviating = profile_amounts(i, dev, opponents)
                    u_dev = _realized_utility(domain, deviating, i, v)
                    if u_dev > u_truth:
                        return Verdict(
                            prop="strategyproof",
                            result=VIOLATED,
                            cells_checked=cells,
                            witness=Witness(
                                agent_index=i,
                                agent=domain.agents[i],
                                valuation=v,
                                opponents=opponents,
                                deviation=dev,
                                truthful_utility=u_truth,
                                deviating_utility=u_dev,
                            ),
                        )
    return Verdict(prop="strategyproof", result=HOLDS_ON_GRID, cells_checked=cells)


def check_efficiency(inst: ValidatedInstance) -> Verdict:
    """Does the mechanism pick a welfare-maximal allocation under truth?

    Bids are replaced by each agent's declared value for the bid bundle;
    the achieved welfare is compared against a direct enumeration of all
    feasible bid subsets. The reserve is a participation constraint, not
    an allocation choice, so the pre-reserve allocation is judged.
    """
    if inst.valuations is None:
        raise MissingValuation("instance declares no valuations")
    truthful_bids = []
    for pos, bid in enumerate(inst.bids):
        value = inst.valuations.value_of(bid.agent, bid.bundle)
        if value is None:
            raise MissingValuation(
                f"agent {bid.agent!r} has no declared value for the bundle of bid {pos}"
            )
        truthful_bids.append(Bid(agent=bid.agent, bundle=bid.bundle, amount=value))
    truthful = ValidatedInstance(
        name=inst.name,
        items=inst.items,
        config=inst.config,
        bids=tuple(truthful_bids),
        agents=inst.agents,
        valuations=inst.valuations,
    )
    out = mechanism_outcome(truthful)
    achieved = out.allocation.welfare

    best = 0
    cells = 0
    indexes = range(len(truthful_bids))
    for r in range(len(truthful_bids) + 1):
        for subset in combinations(indexes, r):
            taken: set[str] = set()
            ok = True
            welfare = 0
            for k in subset:
                bundle = truthful_bids[k].bundle
                if taken & bundle:
                    ok = False
                    break
                taken |= bundle
                welfare += truthful_bids[k].amount
            if not ok:
                continue
            cells += 1
            if welfare > best:
                best = welfare
    result = HOLDS_ON_GRID if achieved == best else VIOLATED
    return Verdict(prop="efficient", result=result, cells_checked=cells)


def check_weak_budget_balance(out: Outcome) -> bool:
    """Payments never sum to a subsidy."""
    return out.revenue >= 0


def classify_additivity(
    valuations, agent: str, items: tuple[str, ...]
) -> str:
    """Compare v(B1 u B2) against v(B1) + v(B2) over all disjoint pairs.

    Requires a complete valuation: every nonempty bundle over `items`
    must be declared. Kept to 4 items, beyond that the bundle lattice is
    no desk-scale object.
    """
    if len(items) > 4:
        raise ValueError("additivity classification supports at most 4 items")
    bundles: list[Bundle] = []
    for r in range(1, len(items) + 1):
        for combo in combinations(items, r):
            bundles.append(frozenset(combo))
    values: dict[Bundle, int] = {}
    for bundle in bundles:
        value = valuations.value_of(agent, bundle)
        if value is None:
            raise IncompleteValuation(
                f"agent {agent!r} lacks a value for bundle {sorted(bundle)}"
            )
        values[bundle] = value

    saw_less = saw_greater = False
    for b1, b2 in combinations(bundles, 2):
        if b1 & b2:
            continue
        joint = values[b1 | b2]
        split = values[b1] + values[b2]
        if joint < split:
            saw_less = True
        elif joint > split:
            saw_greater = True
    if not saw_less and not saw_greater:
        return ADDITIVE
    if not saw_greater:
        return SUB_ADDITIVE
    if not saw_less:
        return SUPER_ADDITIVE
    return NEITHER
