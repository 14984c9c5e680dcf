"""Finite set-theoretic kernel plus an interval abstract interpreter.

A validated ontology spec lowers to a KernelModel: the universe is the
tuple of declared individuals in declaration order, classes and
properties become extents over it, and each process body becomes a plain
assignment/sequence/while program over integer variables (performs are
inlined, which the acyclic call graph makes finite; an atomic process is
an opaque no-op step).

On top of the programs sit two semantics. The concrete collecting
semantics enumerates every reachable state, intermediate states
included, with loops unrolled up to a fuel bound. The abstract semantics
runs the same programs over integer intervals with delayed widening and
one narrowing pass, and reports the per-variable hull of every abstract
state the analysis passes through. Soundness of the abstract side
against the concrete side is checked state by state through the
concretization map.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .asl import (
    All,
    AndExpr,
    Assign,
    BinOp,
    CheckedSpec,
    ClassExpr,
    Cond,
    Expr,
    Named,
    Num,
    OrExpr,
    Perform,
    ProcessDecl,
    Sequence,
    Some,
    Stmt,
    UnknownClass,
    UnknownProperty,
    Var,
    While,
    AslSemanticError,
)

DEFAULT_FUEL = 1000
_WIDEN_DELAY = 3


# ---------------------------------------------------------------- intervals

@dataclass(frozen=True)
class Interval:
    """Integer interval. A None bound is infinite on that side."""

    lo: int | None = None
    hi: int | None = None
    empty: bool = False

    def __post_init__(self) -> None:
        if self.empty:
            # canonical bottom carries no bounds
            object.__setattr__(self, "lo", None)
            object.__setattr__(self, "hi", None)
        elif self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")

    def contains(self, value: int) -> bool:
        if self.empty:
            return False
        if self.lo is not None and value < self.lo:
            return False
        if self.hi is not None and value > self.hi:
            return False
        return True

    def is_finite(self) -> bool:
        return self.empty or (self.lo is not None and self.hi is not None)

    def __str__(self) -> str:
        if self.empty:
            return "bot"
        lo = "-inf" if self.lo is None else str(self.lo)
        hi = "+inf" if self.hi is None else str(self.hi)
        return f"[{lo}, {hi}]"


BOTTOM = Interval(empty=True)
TOP = Interval()


def interval(lo: int | None, hi: int | None) -> Interval:
    """Build an interval, collapsing inverted finite bounds to bottom."""
    if lo is not None and hi is not None and lo > hi:
        return BOTTOM
    return Interval(lo, hi)


def const(value: int) -> Interval:
    return Interval(value, value)


def _min_lo(a: int | None, b: int | None) -> int | None:
    if a is None or b is None:
        return None
    return min(a, b)


def _max_hi(a: int | None, b: int | None) -> int | None:
    if a is None or b is None:
        return None
    return max(a, b)


def join(a: Interval, b: Interval) -> Interval:
    if a.empty:
        return b
    if b.empty:
        return a
    return Interval(_min_lo(a.lo, b.lo), _max_hi(a.hi, b.hi))


def meet(a: Interval, b: Interval) -> Interval:
    if a.empty or b.empty:
        return BOTTOM
    if a.lo is None:
        lo = b.lo
    elif b.lo is None:
        lo = a.lo
    else:
        lo = max(a.lo, b.lo)
    if a.hi is None:
        hi = b.hi
    elif b.hi is None:
        hi = a.hi
    else:
        hi = min(a.hi, b.hi)
    return interval(lo, hi)


def le(a: Interval, b: Interval) -> bool:
    """a is contained in b."""
    if a.empty:
        return True
    if b.empty:
        return False
    if b.lo is not None and (a.lo is None or a.lo < b.lo):
        return False
    if b.hi is not None and (a.hi is None or a.hi > b.hi):
        return False
    return True


def widen(a: Interval, b: Interval) -> Interval:
    """Jump any bound b pushed past a to infinity."""
    if a.empty:
        return b
    if b.empty:
        return a
    lo = a.lo if (a.lo is not None and b.lo is not None and b.lo >= a.lo) else None
    hi = a.hi if (a.hi is not None and b.hi is not None and b.hi <= a.hi) else None
    return Interval(lo, hi)


def narrow(a: Interval, b: Interval) -> Interval:
    """Pull infinite bounds of a back to those of b."""
    if a.empty or b.empty:
        return BOTTOM
    lo = b.lo if a.lo is None else a.lo
    hi = b.hi if a.hi is None else a.hi
    return interval(lo, hi)


class IntervalOps:
    """Abstract arithmetic transfer functions.

    A separate object so tests can substitute a deliberately wrong
    transfer and confirm the soundness harness notices.
    """

    def add(self, a: Interval, b: Interval) -> Interval:
        if a.empty or b.empty:
            return BOTTOM
        lo = None if a.lo is None or b.lo is None else a.lo + b.lo
        hi = None if a.hi is None or b.hi is None else a.hi + b.hi
        return Interval(lo, hi)

    def sub(self, a: Interval, b: Interval) -> Interval:
        if a.empty or b.empty:
            return BOTTOM
        lo = None if a.lo is None or b.hi is None else a.lo - b.hi
        hi = None if a.hi is None or b.lo is None else a.hi - b.lo
        return Interval(lo, hi)


DEFAULT_OPS = IntervalOps()


# ---------------------------------------------------------------- states

@dataclass(frozen=True)
class AbstractState:
    """Map from variable to interval; unbound variables are unconstrained.

    Bottom is the unreachable state. Any variable pinned to an empty
    interval collapses the whole state to bottom.
    """

    bindings: tuple[tuple[str, Interval], ...] = ()
    bottom: bool = False

    @classmethod
    def make(cls, mapping: Mapping[str, Interval]) -> "AbstractState":
        kept: list[tuple[str, Interval]] = []
        for var in sorted(mapping):
            iv = mapping[var]
            if iv.empty:
                return BOTTOM_STATE
            if iv == TOP:
                continue
            kept.append((var, iv))
        return cls(bindings=tuple(kept))

    def get(self, var: str) -> Interval:
        if self.bottom:
            return BOTTOM
        for name, iv in self.bindings:
            if name == var:
                return iv
        return TOP

    def set(self, var: str, iv: Interval) -> "AbstractState":
        if self.bottom:
            return self
        mapping = dict(self.bindings)
        mapping[var] = iv
        return AbstractState.make(mapping)

    def as_dict(self) -> dict[str, Interval]:
        return dict(self.bindings)


BOTTOM_STATE = AbstractState(bottom=True)
TOP_STATE = AbstractState()


def _pointwise(a: AbstractState, b: AbstractState, op) -> AbstractState:
    mapping: dict[str, Interval] = {}
    for var in sorted(set(dict(a.bindings)) | set(dict(b.bindings))):
        mapping[var] = op(a.get(var), b.get(var))
    return AbstractState.make(mapping)


def state_join(a: AbstractState, b: AbstractState) -> AbstractState:
    if a.bottom:
        return b
    if b.bottom:
        return a
    return _pointwise(a, b, join)


def state_meet(a: AbstractState, b: AbstractState) -> AbstractState:
    if a.bottom or b.bottom:
        return BOTTOM_STATE
    return _pointwise(a, b, meet)


def state_le(a: AbstractState, b: AbstractState) -> bool:
    if a.bottom:
        return True
    if b.bottom:
        return False
    return all(le(a.get(var), iv) for var, iv in b.bindings)


def state_widen(a: AbstractState, b: AbstractState) -> AbstractState:
    if a.bottom:
        return b
    if b.bottom:
        return a
    return _pointwise(a, b, widen)


def state_narrow(a: AbstractState, b: AbstractState) -> AbstractState:
    if a.bottom or b.bottom:
        return BOTTOM_STATE
    return _pointwise(a, b, narrow)


@dataclass(frozen=True)
class ConcreteStateSet:
    """A finite set of stores, each binding exactly `variables`."""

    variables: tuple[str, ...]
    states: frozenset[tuple[int, ...]]

    @classmethod
    def from_dicts(
        cls, variables: Iterable[str], dicts: Iterable[Mapping[str, int]]
    ) -> "ConcreteStateSet":
        varlist = tuple(variables)
        states = frozenset(tuple(d.get(v, 0) for v in varlist) for d in dicts)
        return cls(variables=varlist, states=states)

    def as_dicts(self) -> list[dict[str, int]]:
        return [dict(zip(self.variables, s)) for s in sorted(self.states)]

    def rebind(self, variables: tuple[str, ...]) -> "ConcreteStateSet":
        """Re-express every state over a new variable tuple, absent
        variables reading as 0."""
        positions = {v: i for i, v in enumerate(self.variables)}
        states = frozenset(
            tuple(s[positions[v]] if v in positions else 0 for v in variables)
            for s in self.states
        )
        return ConcreteStateSet(variables=variables, states=states)


EMPTY_STATES = ConcreteStateSet(variables=(), states=frozenset({()}))


# ---------------------------------------------------------------- programs

@dataclass(frozen=True)
class ProcessProgram:
    """A lowered process body: assignment, sequence, and while only."""

    name: str
    body: tuple[Stmt, ...]
    variables: tuple[str, ...]


def _expr_vars(expr: Expr, found: list[str]) -> None:
    if isinstance(expr, Var):
        if expr.name not in found:
            found.append(expr.name)
    elif isinstance(expr, BinOp):
        _expr_vars(expr.left, found)
        _expr_vars(expr.right, found)


def _stmt_vars(stmts: tuple[Stmt, ...], found: list[str]) -> None:
    for stmt in stmts:
        if isinstance(stmt, Assign):
            if stmt.target not in found:
                found.append(stmt.target)
            _expr_vars(stmt.expr, found)
        elif isinstance(stmt, Sequence):
            _stmt_vars(stmt.body, found)
        elif isinstance(stmt, While):
            _expr_vars(stmt.cond.left, found)
            _expr_vars(stmt.cond.right, found)
            _stmt_vars(stmt.body, found)


def _lower_stmts(stmts: tuple[Stmt, ...], spec: CheckedSpec) -> tuple[Stmt, ...]:
    lowered: list[Stmt] = []
    for stmt in stmts:
        if isinstance(stmt, Assign):
            lowered.append(stmt)
        elif isinstance(stmt, Sequence):
            lowered.append(Sequence(body=_lower_stmts(stmt.body, spec)))
        elif isinstance(stmt, While):
            lowered.append(While(cond=stmt.cond, body=_lower_stmts(stmt.body, spec)))
        else:
            callee = spec.process(stmt.process)
            if callee.body is None:
                lowered.append(Sequence(body=()))
                continue
            if len(stmt.args) != len(callee.inputs):
                raise AslSemanticError(
                    f"perform {callee.name!r} passes {len(stmt.args)} arguments, "
                    f"declared inputs take {len(callee.inputs)}"
                )
            binds: tuple[Stmt, ...] = tuple(
                Assign(target=param, expr=Var(name=arg))
                for param, arg in zip(callee.inputs, stmt.args)
            )
            lowered.append(Sequence(body=binds + _lower_stmts(callee.body, spec)))
    return tuple(lowered)


def lower_process(spec: CheckedSpec, decl: ProcessDecl) -> ProcessProgram:
    body = () if decl.body is None else _lower_stmts(decl.body, spec)
    found: list[str] = list(decl.inputs)
    _stmt_vars(body, found)
    return ProcessProgram(name=decl.name, body=body, variables=tuple(found))


# ---------------------------------------------------------------- model

@dataclass(frozen=True)
class KernelModel:
    """Universe plus extents, all drawn from declared names."""

    universe: tuple[str, ...]
    classes: dict[str, frozenset[str]]
    objprops: dict[str, frozenset[tuple[str, str]]]
    dataprops: dict[str, frozenset[tuple[str, int]]]


def lower_to_kernel(spec: CheckedSpec) -> tuple[KernelModel, tuple[ProcessProgram, ...]]:
    """Individuals become the universe (declaration order), classes close
    upward through subclassOf, assertions fill the property extents, and
    every process body is inlined into a ProcessProgram."""
    universe = tuple(name for name, _ in spec.individuals)
    classes: dict[str, set[str]] = {name: set() for name, _ in spec.classes}
    for name, cls in spec.individuals:
        classes[cls].add(name)
        for ancestor in spec.superclasses_of(cls):
            classes[ancestor].add(name)
    objprops: dict[str, set[tuple[str, str]]] = {p: set() for p in spec.objprops}
    for prop, subject, target in spec.obj_asserts:
        objprops[prop].add((subject, target))
    dataprops: dict[str, set[tuple[str, int]]] = {p: set() for p in spec.dataprops}
    for prop, subject, value in spec.data_asserts:
        dataprops[prop].add((subject, value))
    model = KernelModel(
        universe=universe,
        classes={name: frozenset(members) for name, members in classes.items()},
        objprops={name: frozenset(pairs) for name, pairs in objprops.items()},
        dataprops={name: frozenset(pairs) for name, pairs in dataprops.items()},
    )
    programs = tuple(lower_process(spec, decl) for decl in spec.processes)
    return model, programs


def eval_class_expr(model: KernelModel, expr: ClassExpr) -> frozenset[str]:
    """Set-theoretic evaluation over the finite universe.

    some(p, c) collects individuals with at least one p-successor in c;
    all(p, c) keeps individuals whose every p-successor lands in c, which
    vacuously includes individuals with no successor at all.
    """
    if isinstance(expr, Named):
        if expr.name not in model.classes:
            raise UnknownClass(f"class {expr.name!r} has no extent in this model")
        return model.classes[expr.name]
    if isinstance(expr, (Some, All)):
        if expr.prop not in model.objprops:
            raise UnknownProperty(f"object property {expr.prop!r} has no extent in this model")
        pairs = model.objprops[expr.prop]
        inner = eval_class_expr(model, expr.inner)
        if isinstance(expr, Some):
            return frozenset(s for s, t in pairs if t in inner)
        violators = {s for s, t in pairs if t not in inner}
        return frozenset(u for u in model.universe if u not in violators)
    if isinstance(expr, AndExpr):
        return eval_class_expr(model, expr.left) & eval_class_expr(model, expr.right)
    return eval_class_expr(model, expr.left) | eval_class_expr(model, expr.right)


# ---------------------------------------------------------------- concrete

@dataclass(frozen=True)
class CollectResult:
    reached: ConcreteStateSet
    exhausted: bool


def _merged_variables(program: ProcessProgram, d0: ConcreteStateSet) -> tuple[str, ...]:
    extra = tuple(v for v in d0.variables if v not in program.variables)
    return program.variables + extra


def _eval_expr(expr: Expr, state: tuple[int, ...], index: dict[str, int]) -> int:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return state[index[expr.name]]
    left = _eval_expr(expr.left, state, index)
    right = _eval_expr(expr.right, state, index)
    return left + right if expr.op == "+" else left - right


_CMP = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "==": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
}


def _eval_cond(cond: Cond, state: tuple[int, ...], index: dict[str, int]) -> bool:
    left = _eval_expr(cond.left, state, index)
    right = _eval_expr(cond.right, state, index)
    return _CMP[cond.op](left, right)


def concrete_collect(
    program: ProcessProgram, d0: ConcreteStateSet, fuel: int = DEFAULT_FUEL
) -> CollectResult:
    """Every reachable store, intermediates included.

    Each while loop runs at most `fuel` body rounds; when live states
    remain after that the result is flagged exhausted and is a lower
    bound on reachability rather than the full set.
    """
    variables = _merged_variables(program, d0)
    index = {v: i for i, v in enumerate(variables)}
    init = d0.rebind(variables).states
    seen: set[tuple[int, ...]] = set(init)
    exhausted = False

    def run(stmts: tuple[Stmt, ...], frontier: set[tuple[int, ...]]) -> set[tuple[int, ...]]:
        nonlocal exhausted
        for stmt in stmts:
            if not frontier:
                return frontier
            if isinstance(stmt, Assign):
                slot = index[stmt.target]
                out = set()
                for s in frontier:
                    value = _eval_expr(stmt.expr, s, index)
                    out.add(s[:slot] + (value,) + s[slot + 1 :])
                seen.update(out)
                frontier = out
            elif isinstance(stmt, Sequence):
                frontier = run(stmt.body, frontier)
            else:  # While
                exits: set[tuple[int, ...]] = set()
                heads = set(frontier)
                visited = set(frontier)
                rounds = 0
                while heads:
                    live = {s for s in heads if _eval_cond(stmt.cond, s, index)}
                    exits |= heads - live
                    if not live:
                        break
                    if rounds >= fuel:
                        exhausted = True
                        break
                    rounds += 1
                    post = run(stmt.body, live)
                    heads = post - visited
                    visited |= post
                frontier = exits
        return frontier

    run(program.body, set(init))
    return CollectResult(
        reached=ConcreteStateSet(variables=variables, states=frozenset(seen)),
        exhausted=exhausted,
    )


# ---------------------------------------------------------------- abstract

class _Reach:
    """Per-variable hull over every abstract state the analysis visits."""

    def __init__(self) -> None:
        self.vars: dict[str, Interval] = {}
        self.nonempty = False

    def add(self, state: AbstractState) -> None:
        if state.bottom:
            return
        self.nonempty = True
        for var, iv in state.bindings:
            held = self.vars.get(var, BOTTOM)
            self.vars[var] = join(held, iv)

    def result(self) -> AbstractState:
        if not self.nonempty:
            return BOTTOM_STATE
        return AbstractState.make(self.vars)


def _aeval(expr: Expr, state: AbstractState, ops: IntervalOps) -> Interval:
    if isinstance(expr, Num):
        return const(expr.value)
    if isinstance(expr, Var):
        return state.get(expr.name)
    left = _aeval(expr.left, state, ops)
    right = _aeval(expr.right, state, ops)
    return ops.add(left, right) if expr.op == "+" else ops.sub(left, right)


_NEGATE = {"<": ">=", "<=": ">", ">": "<=", ">=": "<", "==": "!=", "!=": "=="}


def _cmp_possible(op: str, left: Interval, right: Interval) -> bool:
    if left.empty or right.empty:
        return False
    if op == "<":
        return left.lo is None or right.hi is None or left.lo < right.hi
    if op == "<=":
        return left.lo is None or right.hi is None or left.lo <= right.hi
    if op == ">":
        return _cmp_possible("<", right, left)
    if op == ">=":
        return _cmp_possible("<=", right, left)
    if op == "==":
        return not meet(left, right).empty
    # !=: impossible only when both sides are the same singleton
    return not (
        left.lo is not None
        and left.lo == left.hi
        and right.lo is not None
        and right.lo == right.hi
        and left.lo == right.lo
    )


def _bound_for(op: str, other: Interval) -> Interval:
    """Interval a variable must meet to satisfy `var op other`."""
    if op == "<":
        return TOP if other.hi is None else Interval(None, other.hi - 1)
    if op == "<=":
        return TOP if other.hi is None else Interval(None, other.hi)
    if op == ">":
        return TOP if other.lo is None else Interval(other.lo + 1, None)
    if op == ">=":
        return TOP if other.lo is None else Interval(other.lo, None)
    if op == "==":
        return other
    return TOP  # != handled separately


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


def _shave(iv: Interval, value: int) -> Interval:
    """Remove `value` from an interval when it sits on a bound."""
    if iv.empty or not iv.contains(value):
        return iv
    if iv.lo is not None and iv.lo == value:
        return interval(value + 1, iv.hi)
    if iv.hi is not None and iv.hi == value:
        return interval(iv.lo, value - 1)
    return iv


def _refine(state: AbstractState, cond: Cond, want_true: bool, ops: IntervalOps) -> AbstractState:
    if state.bottom:
        return state
    op = cond.op if want_true else _NEGATE[cond.op]
    left = _aeval(cond.left, state, ops)
    right = _aeval(cond.right, state, ops)
    if not _cmp_possible(op, left, right):
        return BOTTOM_STATE
    if op == "!=":
        if isinstance(cond.left, Var) and right.lo is not None and right.lo == right.hi:
            state = state.set(cond.left.name, _shave(state.get(cond.left.name), right.lo))
        if isinstance(cond.right, Var) and left.lo is not None and left.lo == left.hi:
            state = state.set(cond.right.name, _shave(state.get(cond.right.name), left.lo))
        return state
    if isinstance(cond.left, Var):
        bound = _bound_for(op, right)
        state = state.set(cond.left.name, meet(state.get(cond.left.name), bound))
    if isinstance(cond.right, Var) and not state.bottom:
        bound = _bound_for(_FLIP[op], left)
        state = state.set(cond.right.name, meet(state.get(cond.right.name), bound))
    return state


def _atransfer(
    stmts: tuple[Stmt, ...], state: AbstractState, reach: _Reach, ops: IntervalOps
) -> AbstractState:
    for stmt in stmts:
        if state.bottom:
            return state
        if isinstance(stmt, Assign):
            state = state.set(stmt.target, _aeval(stmt.expr, state, ops))
            reach.add(state)
        elif isinstance(stmt, Sequence):
            state = _atransfer(stmt.body, state, reach, ops)
        else:  # While
            state = _awhile(stmt, state, reach, ops)
    return state


def _awhile(stmt: While, entry: AbstractState, reach: _Reach, ops: IntervalOps) -> AbstractState:
    head = entry
    reach.add(head)
    iterations = 0
    while True:
        body_in = _refine(head, stmt.cond, True, ops)
        body_out = _atransfer(stmt.body, body_in, reach, ops)
        candidate = state_join(entry, body_out)
        if iterations >= _WIDEN_DELAY:
            new_head = state_widen(head, candidate)
        else:
            new_head = state_join(head, candidate)
        if new_head == head:
            break
        head = new_head
        reach.add(head)
        iterations += 1
        # widening forces convergence; this is a belt against a broken
        # injected transfer that oscillates forever
        if iterations > 64 + _WIDEN_DELAY:
            break
    body_in = _refine(head, stmt.cond, True, ops)
    body_out = _atransfer(stmt.body, body_in, reach, ops)
    narrowed = state_narrow(head, state_join(entry, body_out))
    if narrowed != head:
        head = narrowed
        reach.add(head)
    exit_state = _refine(head, stmt.cond, False, ops)
    reach.add(exit_state)
    return exit_state


def abstract_fixpoint(
    program: ProcessProgram, d0: AbstractState, ops: IntervalOps = DEFAULT_OPS
) -> AbstractState:
    """Per-variable interval hull over the whole abstract run.

    The hull covers the initial state, the state after every assignment,
    every loop head across Kleene iteration (widening after a fixed
    delay, then one narrowing pass), and every loop exit, so it
    over-approximates the concrete collecting semantics, intermediate
    states included. Variables left unbound by d0 enter the hull once
    first assigned.
    """
    reach = _Reach()
    reach.add(d0)
    _atransfer(program.body, d0, reach, ops)
    return reach.result()


# ---------------------------------------------------------------- galois

def alpha(states: ConcreteStateSet) -> AbstractState:
    """Tightest interval state covering every given store."""
    if not states.states:
        return BOTTOM_STATE
    mapping: dict[str, Interval] = {}
    for pos, var in enumerate(states.variables):
        values = [s[pos] for s in states.states]
        mapping[var] = Interval(min(values), max(values))
    return AbstractState.make(mapping)


def gamma_contains(a: AbstractState, state: Mapping[str, int]) -> bool:
    """Membership of one store in the concretization of `a`."""
    if a.bottom:
        return False
    return all(iv.contains(state.get(var, 0)) for var, iv in a.bindings)


# ---------------------------------------------------------------- soundness

@dataclass(frozen=True)
class SoundnessReport:
    program: str
    status: str  # pass | fail | inconclusive
    fuel: int
    reached: int
    abstract: AbstractState
    offending: dict[str, int] | None = None


def check_soundness(
    program: ProcessProgram,
    d0: ConcreteStateSet,
    fuel: int = DEFAULT_FUEL,
    ops: IntervalOps = DEFAULT_OPS,
) -> SoundnessReport:
    """Is every concretely reachable store inside gamma of the abstract run?

    Inconclusive when the concrete collection ran out of fuel, since the
    reachable set is then only a lower bound. On failure the offending
    store is the smallest one in lexicographic variable order.
    """
    collected = concrete_collect(program, d0, fuel)
    variables = collected.reached.variables
    init = d0.rebind(variables)
    abstract = abstract_fixpoint(program, alpha(init), ops)
    if collected.exhausted:
        return SoundnessReport(
            program=program.name,
            status="inconclusive",
            fuel=fuel,
            reached=len(collected.reached.states),
            abstract=abstract,
        )
    for state in sorted(collected.reached.states):
        store = dict(zip(variables, state))
        if not gamma_contains(abstract, store):
            return SoundnessReport(
                program=program.name,
                status="fail",
                fuel=fuel,
                reached=len(collected.reached.states),
                abstract=abstract,
                offending=store,
            )
    return SoundnessReport(
        program=program.name,
        status="pass",
        fuel=fuel,
        reached=len(collected.reached.states),
        abstract=abstract,
    )


def simulate_contains(
    program: ProcessProgram,
    d0: ConcreteStateSet,
    state: Mapping[str, int],
    fuel: int = DEFAULT_FUEL,
) -> bool:
    """Replay the program and test whether `state` is actually reached.

    The spurious-counterexample check: abstract may admit stores the
    program never produces.
    """
    collected = concrete_collect(program, d0, fuel)
    variables = collected.reached.variables
    probe = tuple(state.get(v, 0) for v in variables)
    return probe in collected.reached.states


# ---------------------------------------------------------------- witnesses

@dataclass(frozen=True)
class VarPredicate:
    """A one-variable bound of the form `var op value`."""

    var: str
    op: str
    value: int

    def holds(self, state: Mapping[str, int]) -> bool:
        return _CMP[self.op](state.get(self.var, 0), self.value)


def _negation_parts(pred: VarPredicate) -> tuple[Interval, ...]:
    c = pred.value
    if pred.op == "<":
        return (Interval(c, None),)
    if pred.op == "<=":
        return (Interval(c + 1, None),)
    if pred.op == ">":
        return (Interval(None, c),)
    if pred.op == ">=":
        return (Interval(None, c - 1),)
    if pred.op == "==":
        return (Interval(None, c - 1), Interval(c + 1, None))
    return (const(c),)


def _low_magnitude(iv: Interval) -> int:
    """The in-interval value closest to zero; for an unbounded region
    this is its finite corner."""
    if iv.contains(0):
        return 0
    if iv.lo is None and iv.hi is not None:
        return iv.hi
    if iv.hi is None and iv.lo is not None:
        return iv.lo
    if iv.lo is not None and iv.lo > 0:
        return iv.lo
    assert iv.hi is not None
    return iv.hi


def concretize_counterexample(
    a: AbstractState, pred: VarPredicate
) -> dict[str, int] | None:
    """A store in gamma(a) violating the predicate, or None when gamma(a)
    satisfies it everywhere.

    Finite violating regions are scanned lowest value first. An infinite
    violating region cannot be scanned, so its lowest-magnitude corner is
    returned instead (ties break toward the smaller value). Other
    variables bound by `a` take their own lowest-magnitude value. The
    result may still be spurious; replay it with simulate_contains.
    """
    if a.bottom:
        return None
    region = [
        part
        for part in (meet(p, a.get(pred.var)) for p in _negation_parts(pred))
        if not part.empty
    ]
    if not region:
        return None
    if all(part.is_finite() for part in region):
        value = min(part.lo for part in region)  # type: ignore[type-var]
    else:
        value = min((_low_magnitude(part) for part in region), key=lambda v: (abs(v), v))
    witness = {var: _low_magnitude(iv) for var, iv in a.bindings}
    witness[pred.var] = value
    return witness


# ---------------------------------------------------------------- rendering

def render_expr_sexpr(expr: Expr) -> str:
    if isinstance(expr, Num):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    return f"({expr.op} {render_expr_sexpr(expr.left)} {render_expr_sexpr(expr.right)})"


def render_cond_sexpr(cond: Cond) -> str:
    return f"({cond.op} {render_expr_sexpr(cond.left)} {render_expr_sexpr(cond.right)})"


def _render_stmt_sexpr(stmt: Stmt) -> str:
    if isinstance(stmt, Assign):
        return f"(assign {stmt.target} {render_expr_sexpr(stmt.expr)})"
    if isinstance(stmt, Sequence):
        inner = " ".join(_render_stmt_sexpr(s) for s in stmt.body)
        return f"(seq {inner})" if inner else "(seq)"
    if isinstance(stmt, While):
        inner = " ".join(_render_stmt_sexpr(s) for s in stmt.body)
        body = f"(seq {inner})" if inner else "(seq)"
        return f"(while {render_cond_sexpr(stmt.cond)} {body})"
    raise ValueError(f"perform survived lowering: {stmt!r}")


def render_program_sexpr(program: ProcessProgram) -> str:
    inner = " ".join(_render_stmt_sexpr(s) for s in program.body)
    return f"(seq {inner})" if inner else "(seq)"
