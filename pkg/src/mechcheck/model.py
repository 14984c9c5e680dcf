"""Core domain types for sealed-bid combinatorial auctions.

An auction instance names a finite item set, a mechanism, and a list of
bundle bids. All money is held in non-negative integer minor units; no
floating point enters any computation in this package. Instances can be
read from and written to a small line-oriented text format, and must pass
:func:`validate_instance` before any mechanism runs on them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

Bundle = frozenset[str]

EMPTY_BUNDLE: Bundle = frozenset()


class InstanceError(ValueError):
    """Base class for instance validation failures."""


class DuplicateItem(InstanceError):
    pass


class UnknownItemInBundle(InstanceError):
    pass


class NegativeAmount(InstanceError):
    pass


class EmptyBundle(InstanceError):
    pass


class MechanismArityMismatch(InstanceError):
    pass


class EmptyInstance(InstanceError):
    """Raised when an instance declares no items or no bids."""


class AuctionFormatError(ValueError):
    """Malformed auction text. Carries a 1-based line number."""

    def __init__(self, line: int, message: str) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.reason = message


class Mechanism(enum.Enum):
    VCG = "vcg"
    VICKREY = "vickrey"
    ENGLISH = "english"

    @classmethod
    def from_name(cls, name: str) -> "Mechanism":
        for member in cls:
            if member.value == name:
                return member
        raise ValueError(f"unknown mechanism {name!r}")


@dataclass(frozen=True)
class Bid:
    """A single all-or-nothing offer of `amount` for `bundle`."""

    agent: str
    bundle: Bundle
    amount: int


@dataclass(frozen=True)
class AuctionConfig:
    mechanism: Mechanism
    reserve: int = 0
    duration: int = 0


@dataclass(frozen=True)
class ValuationProfile:
    """Declared per-agent bundle valuations.

    Entries are (agent, bundle, value) triples. The empty bundle is worth
    0 to every agent and is never stored explicitly.
    """

    entries: tuple[tuple[str, Bundle, int], ...]
    _lookup: dict[tuple[str, Bundle], int] = field(
        init=False, repr=False, compare=False, default_factory=dict
    )

    def __post_init__(self) -> None:
        lookup: dict[tuple[str, Bundle], int] = {}
        for agent, bundle, value in self.entries:
            key = (agent, bundle)
            if key in lookup and lookup[key] != value:
                raise InstanceError(
                    f"conflicting valuations for agent {agent!r} on the same bundle"
                )
            lookup[key] = value
        object.__setattr__(self, "_lookup", lookup)

    def value_of(self, agent: str, bundle: Bundle) -> int | None:
        """Declared value, 0 for the empty bundle, None when undeclared."""
        if not bundle:
            return 0
        return self._lookup.get((agent, bundle))

    def agents(self) -> tuple[str, ...]:
        seen: list[str] = []
        for agent, _, _ in self.entries:
            if agent not in seen:
                seen.append(agent)
        return tuple(seen)

    def bundles_of(self, agent: str) -> tuple[Bundle, ...]:
        return tuple(b for a, b, _ in self.entries if a == agent)


@dataclass(frozen=True)
class AuctionInstance:
    """Unchecked instance, as produced by :func:`parse_auction`."""

    name: str
    items: tuple[str, ...]
    config: AuctionConfig
    bids: tuple[Bid, ...]
    valuations: ValuationProfile | None = None


@dataclass(frozen=True)
class ValidatedInstance:
    """An instance that passed validation.

    Item order is declaration order; agent order is order of first
    appearance in the bid list. Both orders are load-bearing: every
    downstream report and scan iterates in them.
    """

    name: str
    items: tuple[str, ...]
    config: AuctionConfig
    bids: tuple[Bid, ...]
    agents: tuple[str, ...]
    valuations: ValuationProfile | None = None

    def item_set(self) -> Bundle:
        return frozenset(self.items)

    def agent_bids(self, agent: str) -> tuple[int, ...]:
        """Indexes of this agent's bids, in input order."""
        return tuple(i for i, b in enumerate(self.bids) if b.agent == agent)

    def sorted_bundle(self, bundle: Bundle) -> tuple[str, ...]:
        """Bundle members in item declaration order."""
        return tuple(item for item in self.items if item in bundle)


def bundles_disjoint(bundles: Iterable[Bundle]) -> bool:
    """True when no item occurs in two of the given bundles."""
    seen: set[str] = set()
    for bundle in bundles:
        for item in bundle:
            if item in seen:
                return False
            seen.add(item)
    return True


def validate_instance(inst: AuctionInstance | ValidatedInstance) -> ValidatedInstance:
    """Check all instance invariants and fix item and agent orders.

    Validation is idempotent: feeding the result back in yields an equal
    value. Raises a subclass of InstanceError on the first violation
    found, scanning items first, then bids in input order, then
    valuations.
    """
    items = tuple(inst.items)
    seen_items: set[str] = set()
    for item in items:
        if item in seen_items:
            raise DuplicateItem(f"item {item!r} declared more than once")
        seen_items.add(item)
    if not items:
        raise EmptyInstance("an auction needs at least one item")
    if not inst.bids:
        raise EmptyInstance("an auction needs at least one bid")

    config = inst.config
    if config.reserve < 0:
        raise NegativeAmount(f"reserve {config.reserve} is negative")
    if config.duration < 0:
        raise NegativeAmount(f"duration {config.duration} is negative")
    if config.mechanism in (Mechanism.VICKREY, Mechanism.ENGLISH) and len(items) != 1:
        raise MechanismArityMismatch(
            f"mechanism {config.mechanism.value} requires exactly one item, got {len(items)}"
        )

    agents: list[str] = []
    for pos, bid in enumerate(inst.bids):
        if not bid.bundle:
            raise EmptyBundle(f"bid {pos} of agent {bid.agent!r} offers an empty bundle")
        unknown = bid.bundle - seen_items
        if unknown:
            raise UnknownItemInBundle(
                f"bid {pos} of agent {bid.agent!r} references undeclared item "
                f"{sorted(unknown)[0]!r}"
            )
        if bid.amount < 0:
            raise NegativeAmount(f"bid {pos} of agent {bid.agent!r} has amount {bid.amount}")
        if bid.agent not in agents:
            agents.append(bid.agent)

    if inst.valuations is not None:
        for agent, bundle, value in inst.valuations.entries:
            if not bundle:
                raise EmptyBundle(f"valuation of agent {agent!r} names an empty bundle")
            unknown = bundle - seen_items
            if unknown:
                raise UnknownItemInBundle(
                    f"valuation of agent {agent!r} references undeclared item "
                    f"{sorted(unknown)[0]!r}"
                )
            if value < 0:
                raise NegativeAmount(f"valuation of agent {agent!r} is {value}")

    return ValidatedInstance(
        name=inst.name,
        items=items,
        config=config,
        bids=tuple(inst.bids),
        agents=tuple(agents),
        valuations=inst.valuations,
    )


_KEYWORDS = ("auction", "items", "mechanism", "reserve", "duration", "bid", "valuation", "end")


def _strip_comment(line: str) -> str:
    cut = line.find("#")
    return line if cut < 0 else line[:cut]


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token, 10)
    except ValueError:
        raise AuctionFormatError(lineno, f"{what} must be an integer, got {token!r}") from None


def _parse_bundle(tokens: list[str], lineno: int) -> tuple[Bundle, list[str]]:
    """Consume `{ id... }` from the front of tokens; return bundle and rest."""
    if not tokens or tokens[0] != "{":
        raise AuctionFormatError(lineno, "expected '{' to open a bundle")
    try:
        close = tokens.index("}")
    except ValueError:
        raise AuctionFormatError(lineno, "bundle is missing its closing '}'") from None
    members = tokens[1:close]
    if any(t in ("{", "}") for t in members):
        raise AuctionFormatError(lineno, "nested braces in bundle")
    return frozenset(members), tokens[close + 1 :]


def parse_auction(text: str) -> AuctionInstance:
    """Parse the auction text format.

    The format is line oriented. `#` starts a comment, tokens are
    separated by spaces, the first line must be `auction <name>` and the
    last `end`. Unknown keywords are errors. Defaults: reserve 0,
    duration 0.
    """
    name: str | None = None
    items: tuple[str, ...] | None = None
    mechanism: Mechanism | None = None
    reserve: int | None = None
    duration: int | None = None
    bids: list[Bid] = []
    valuations: list[tuple[str, Bundle, int]] = []
    ended = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        tokens = line.split()
        keyword = tokens[0]
        if ended:
            raise AuctionFormatError(lineno, "content after 'end'")
        if keyword not in _KEYWORDS:
            raise AuctionFormatError(lineno, f"unknown keyword {keyword!r}")

        if keyword == "auction":
            if name is not None:
                raise AuctionFormatError(lineno, "duplicate 'auction' line")
            if len(tokens) != 2:
                raise AuctionFormatError(lineno, "expected 'auction <name>'")
            name = tokens[1]
            continue
        if name is None:
            raise AuctionFormatError(lineno, "the first line must be 'auction <name>'")

        if keyword == "items":
            if items is not None:
                raise AuctionFormatError(lineno, "duplicate 'items' line")
            if len(tokens) < 2:
                raise AuctionFormatError(lineno, "expected 'items <id> ...'")
            items = tuple(tokens[1:])
        elif keyword == "mechanism":
            if mechanism is not None:
                raise AuctionFormatError(lineno, "duplicate 'mechanism' line")
            if len(tokens) != 2:
                raise AuctionFormatError(lineno, "expected 'mechanism vcg|vickrey|english'")
            try:
                mechanism = Mechanism.from_name(tokens[1])
            except ValueError as exc:
                raise AuctionFormatError(lineno, str(exc)) from None
        elif keyword == "reserve":
            if reserve is not None:
                raise AuctionFormatError(lineno, "duplicate 'reserve' line")
            if len(tokens) != 2:
                raise AuctionFormatError(lineno, "expected 'reserve <int>'")
            reserve = _parse_int(tokens[1], lineno, "reserve")
        elif keyword == "duration":
            if duration is not None:
                raise AuctionFormatError(lineno, "duplicate 'duration' line")
            if len(tokens) != 2:
                raise AuctionFormatError(lineno, "expected 'duration <int>'")
            duration = _parse_int(tokens[1], lineno, "duration")
        elif keyword in ("bid", "valuation"):
            if len(tokens) < 3:
                raise AuctionFormatError(lineno, f"expected '{keyword} <agent> {{ <id> ... }} <int>'")
            agent = tokens[1]
            if agent in ("{", "}"):
                raise AuctionFormatError(lineno, "missing agent name")
            bundle, rest = _parse_bundle(tokens[2:], lineno)
            if len(rest) != 1:
                raise AuctionFormatError(lineno, f"expected a single amount after the bundle")
            amount = _parse_int(rest[0], lineno, "amount")
            if keyword == "bid":
                bids.append(Bid(agent=agent, bundle=bundle, amount=amount))
            else:
                if any(a == agent and b == bundle for a, b, _ in valuations):
                    raise AuctionFormatError(
                        lineno, f"duplicate valuation for agent {agent!r} on the same bundle"
                    )
                valuations.append((agent, bundle, amount))
        elif keyword == "end":
            if len(tokens) != 1:
                raise AuctionFormatError(lineno, "'end' takes no arguments")
            ended = True

    if name is None:
        raise AuctionFormatError(1, "empty input, expected 'auction <name>'")
    if not ended:
        raise AuctionFormatError(len(text.splitlines()) or 1, "missing 'end'")
    if items is None:
        raise AuctionFormatError(1, "missing 'items' line")
    if mechanism is None:
        raise AuctionFormatError(1, "missing 'mechanism' line")

    return AuctionInstance(
        name=name,
        items=items,
        config=AuctionConfig(
            mechanism=mechanism,
            reserve=0 if reserve is None else reserve,
            duration=0 if duration is None else duration,
        ),
        bids=tuple(bids),
        valuations=ValuationProfile(entries=tuple(valuations)) if valuations else None,
    )


def load_auction(path: str) -> ValidatedInstance:
    with open(path, "r", encoding="utf-8") as handle:
        return validate_instance(parse_auction(handle.read()))


def format_instance(inst: ValidatedInstance) -> str:
    """Render a validated instance back to the text format.

    The output is canonical: parse and validate of the result yields an
    instance equal to the input.
    """
    lines = [f"auction {inst.name}"]
    lines.append("items " + " ".join(inst.items))
    lines.append(f"mechanism {inst.config.mechanism.value}")
    lines.append(f"reserve {inst.config.reserve}")
    lines.append(f"duration {inst.config.duration}")
    for bid in inst.bids:
        members = " ".join(inst.sorted_bundle(bid.bundle))
        lines.append(f"bid {bid.agent} {{ {members} }} {bid.amount}")
    if inst.valuations is not None:
        for agent, bundle, value in inst.valuations.entries:
            members = " ".join(inst.sorted_bundle(bundle))
            lines.append(f"valuation {agent} {{ {members} }} {value}")
    lines.append("end")
    return "\n".join(lines) + "\n"
