"""A small service-ontology language with process bodies.

The language declares classes (with single inheritance), individuals,
object and data properties, property assertions, and named processes. A
process may carry inputs, outputs, a precondition, a result condition,
and a body of integer-variable statements: assignment, perform,
sequence, and while. Class expressions (some/all/and/or over a named
class) exist as a standalone syntactic category.

Parsing is total: any input, bytes included, either yields an AST or an
AslSyntaxError carrying a 1-based line and column and the expected token
set. Parsed ASTs survive a pretty-print and re-parse unchanged.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union


class AslSyntaxError(ValueError):
    """Parse failure with position and expectation info."""

    def __init__(self, line: int, col: int, expected: tuple[str, ...], found: str) -> None:
        what = " or ".join(expected)
        super().__init__(f"line {line}, col {col}: expected {what}, got {found}")
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


class AslSemanticError(ValueError):
    pass


class UnknownClass(AslSemanticError):
    pass


class UnknownIndividual(AslSemanticError):
    pass


class UnknownProperty(AslSemanticError):
    pass


class UnknownProcess(AslSemanticError):
    pass


class CyclicHierarchy(AslSemanticError):
    pass


class RecursiveProcess(AslSemanticError):
    pass


# ---------------------------------------------------------------- AST

@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


Expr = Union[Num, Var, "BinOp"]


@dataclass(frozen=True)
class BinOp:
    op: str
    left: Expr
    right: Expr


CMP_OPS = ("<", "<=", ">", ">=", "==", "!=")


@dataclass(frozen=True)
class Cond:
    left: Expr
    op: str
    right: Expr


Stmt = Union["Assign", "Perform", "Sequence", "While"]


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr


@dataclass(frozen=True)
class Perform:
    process: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Sequence:
    body: tuple[Stmt, ...]


@dataclass(frozen=True)
class While:
    cond: Cond
    body: tuple[Stmt, ...]


ClassExpr = Union["Named", "Some", "All", "AndExpr", "OrExpr"]


@dataclass(frozen=True)
class Named:
    name: str


@dataclass(frozen=True)
class Some:
    prop: str
    inner: ClassExpr


@dataclass(frozen=True)
class All:
    prop: str
    inner: ClassExpr


@dataclass(frozen=True)
class AndExpr:
    left: ClassExpr
    right: ClassExpr


@dataclass(frozen=True)
class OrExpr:
    left: ClassExpr
    right: ClassExpr


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: str | None = None
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class IndividualDecl:
    name: str
    cls: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ObjPropDecl:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ObjAssert:
    prop: str
    subject: str
    target: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DataPropDecl:
    name: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DataAssert:
    prop: str
    subject: str
    value: int
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ProcessDecl:
    """A service process. A present body, even an empty one, makes it
    composite; without a body it is atomic (an opaque step)."""

    name: str
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()
    pre: Cond | None = None
    result: Cond | None = None
    body: tuple[Stmt, ...] | None = None
    line: int = field(default=0, compare=False)

    @property
    def kind(self) -> str:
        return "atomic" if self.body is None else "composite"


Decl = Union[ClassDecl, IndividualDecl, ObjPropDecl, ObjAssert, DataPropDecl, DataAssert, ProcessDecl]


@dataclass(frozen=True)
class SpecAst:
    decls: tuple[Decl, ...]
    class_exprs: tuple[ClassExpr, ...] = ()


# ---------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\n]+)"
    r"|(?P<comment>#[^\n]*)"
    r"|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<int>[0-9]+)"
    r"|(?P<op>:=|<=|>=|==|!=|[{}(),;:+\-<>])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # id | int | op | eof
    text: str
    line: int
    col: int


def _decode(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        prefix = data[: exc.start].decode("utf-8", errors="ignore")
        line = prefix.count("\n") + 1
        col = len(prefix) - (prefix.rfind("\n") + 1) + 1
        raise AslSyntaxError(line, col, ("valid utf-8",), f"byte 0x{data[exc.start]:02x}") from None


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    line = 1
    col = 1
    n = len(text)
    while pos < n:
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            raise AslSyntaxError(line, col, ("a token",), repr(text[pos]))
        lexeme = match.group(0)
        kind = match.lastgroup or ""
        if kind in ("id", "int", "op"):
            tokens.append(_Token(kind, lexeme, line, col))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            col = len(lexeme) - (lexeme.rfind("\n") + 1) + 1
        else:
            col += len(lexeme)
        pos = match.end()
    tokens.append(_Token("eof", "<end of input>", line, col))
    return tokens


# ---------------------------------------------------------------- parser

_DECL_KEYWORDS = ("class", "individual", "objprop", "assert", "dataprop", "assertval", "process")
_SECTION_KEYWORDS = ("inputs", "outputs", "pre", "result", "body")
_STMT_KEYWORDS = ("perform", "sequence", "while")


class _Parser:
    def __init__(self, tokens: list[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        token = self.tokens[self.pos]
        if token.kind != "eof":
            self.pos += 1
        return token

    def fail(self, expected: tuple[str, ...]) -> AslSyntaxError:
        token = self.peek()
        found = token.text if token.kind == "eof" else repr(token.text)
        return AslSyntaxError(token.line, token.col, expected, found)

    def expect_op(self, text: str) -> _Token:
        token = self.peek()
        if token.kind != "op" or token.text != text:
            raise self.fail((f"'{text}'",))
        return self.advance()

    def expect_id(self, what: str = "an identifier") -> _Token:
        token = self.peek()
        if token.kind != "id":
            raise self.fail((what,))
        return self.advance()

    def at_op(self, text: str) -> bool:
        token = self.peek()
        return token.kind == "op" and token.text == text

    def at_word(self, word: str) -> bool:
        token = self.peek()
        return token.kind == "id" and token.text == word

    def expect_word(self, word: str) -> _Token:
        if not self.at_word(word):
            raise self.fail((f"'{word}'",))
        return self.advance()

    def parse_int(self) -> int:
        negative = False
        if self.at_op("-"):
            self.advance()
            negative = True
        token = self.peek()
        if token.kind != "int":
            raise self.fail(("an integer",))
        self.advance()
        value = int(token.text, 10)
        return -value if negative else value

    # -------- spec / declarations

    def parse_spec(self) -> SpecAst:
        decls: list[Decl] = []
        while self.peek().kind != "eof":
            decls.append(self.parse_decl())
        return SpecAst(decls=tuple(decls))

    def parse_decl(self) -> Decl:
        token = self.peek()
        if token.kind != "id" or token.text not in _DECL_KEYWORDS:
            raise self.fail(tuple(f"'{k}'" for k in _DECL_KEYWORDS))
        word = token.text
        line = token.line
        self.advance()
        if word == "class":
            name = self.expect_id("a class name").text
            superclass = None
            if self.at_word("subclassOf"):
                self.advance()
                superclass = self.expect_id("a class name").text
            self.expect_op(";")
            return ClassDecl(name=name, superclass=superclass, line=line)
        if word == "individual":
            name = self.expect_id("an individual name").text
            self.expect_op(":")
            cls = self.expect_id("a class name").text
            self.expect_op(";")
            return IndividualDecl(name=name, cls=cls, line=line)
        if word == "objprop":
            name = self.expect_id("a property name").text
            self.expect_op(";")
            return ObjPropDecl(name=name, line=line)
        if word == "assert":
            prop = self.expect_id("a property name").text
            self.expect_op("(")
            subject = self.expect_id("an individual name").text
            self.expect_op(",")
            target = self.expect_id("an individual name").text
            self.expect_op(")")
            self.expect_op(";")
            return ObjAssert(prop=prop, subject=subject, target=target, line=line)
        if word == "dataprop":
            name = self.expect_id("a property name").text
            self.expect_op(";")
            return DataPropDecl(name=name, line=line)
        if word == "assertval":
            prop = self.expect_id("a property name").text
            self.expect_op("(")
            subject = self.expect_id("an individual name").text
            self.expect_op(",")
            value = self.parse_int()
            self.expect_op(")")
            self.expect_op(";")
            return DataAssert(prop=prop, subject=subject, value=value, line=line)
        # process
        name = self.expect_id("a process name").text
        self.expect_op("{")
        inputs: tuple[str, ...] = ()
        outputs: tuple[str, ...] = ()
        pre: Cond | None = None
        result: Cond | None = None
        body: tuple[Stmt, ...] | None = None
        seen: set[str] = set()
        while not self.at_op("}"):
            token = self.peek()
            if token.kind != "id" or token.text not in _SECTION_KEYWORDS:
                raise self.fail(tuple(f"'{k}'" for k in _SECTION_KEYWORDS) + ("'}'",))
            section = token.text
            if section in seen:
                raise self.fail((f"a section other than '{section}'",))
            seen.add(section)
            self.advance()
            if section in ("inputs", "outputs"):
                self.expect_op("(")
                names = self.parse_idlist()
                self.expect_op(")")
                if section == "inputs":
                    inputs = names
                else:
                    outputs = names
            elif section in ("pre", "result"):
                self.expect_op("(")
                cond = None if self.at_op(")") else self.parse_cond()
                self.expect_op(")")
                if section == "pre":
                    pre = cond
                else:
                    result = cond
            else:
                self.expect_op("{")
                body = self.parse_stmts()
                self.expect_op("}")
        self.expect_op("}")
        return ProcessDecl(
            name=name, inputs=inputs, outputs=outputs, pre=pre, result=result, body=body, line=line
        )

    def parse_idlist(self) -> tuple[str, ...]:
        if self.at_op(")"):
            return ()
        names = [self.expect_id().text]
        while self.at_op(","):
            self.advance()
            names.append(self.expect_id().text)
        return tuple(names)

    # -------- statements

    def parse_stmts(self) -> tuple[Stmt, ...]:
        stmts: list[Stmt] = []
        while not self.at_op("}"):
            stmts.append(self.parse_stmt())
        return tuple(stmts)

    def parse_stmt(self) -> Stmt:
        token = self.peek()
        if token.kind != "id":
            raise self.fail(("a statement",))
        if token.text == "perform":
            self.advance()
            name = self.expect_id("a process name").text
            self.expect_op("(")
            args = self.parse_idlist()
            self.expect_op(")")
            self.expect_op(";")
            return Perform(process=name, args=args)
        if token.text == "sequence":
            self.advance()
            self.expect_op("{")
            body = self.parse_stmts()
            self.expect_op("}")
            return Sequence(body=body)
        if token.text == "while":
            self.advance()
            cond = self.parse_cond()
            self.expect_op("{")
            body = self.parse_stmts()
            self.expect_op("}")
            return While(cond=cond, body=body)
        target = self.advance().text
        self.expect_op(":=")
        expr = self.parse_expr()
        self.expect_op(";")
        return Assign(target=target, expr=expr)

    # -------- expressions and conditions

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.at_op("+") or self.at_op("-"):
            op = self.advance().text
            node = BinOp(op=op, left=node, right=self.parse_term())
        return node

    def parse_term(self) -> Expr:
        token = self.peek()
        if token.kind == "id":
            self.advance()
            return Var(name=token.text)
        if token.kind == "int" or self.at_op("-"):
            return Num(value=self.parse_int())
        raise self.fail(("an identifier", "an integer"))

    def parse_cond(self) -> Cond:
        left = self.parse_expr()
        token = self.peek()
        if token.kind != "op" or token.text not in CMP_OPS:
            raise self.fail(("a comparison operator",))
        self.advance()
        right = self.parse_expr()
        return Cond(left=left, op=token.text, right=right)

    # -------- class expressions

    def parse_class_expr(self) -> ClassExpr:
        token = self.peek()
        if token.kind != "id":
            raise self.fail(("a class expression",))
        if token.text in ("some", "all"):
            word = self.advance().text
            self.expect_op("(")
            prop = self.expect_id("a property name").text
            self.expect_op(",")
            inner = self.parse_class_expr()
            self.expect_op(")")
            return Some(prop=prop, inner=inner) if word == "some" else All(prop=prop, inner=inner)
        if token.text in ("and", "or"):
            word = self.advance().text
            self.expect_op("(")
            left = self.parse_class_expr()
            self.expect_op(",")
            right = self.parse_class_expr()
            self.expect_op(")")
            return AndExpr(left, right) if word == "and" else OrExpr(left, right)
        return Named(name=self.advance().text)


def parse(source: str | bytes) -> SpecAst:
    """Parse a full spec. Raises AslSyntaxError on any malformed input."""
    text = _decode(source) if isinstance(source, bytes) else source
    parser = _Parser(_tokenize(text))
    return parser.parse_spec()


def parse_class_expr(source: str | bytes) -> ClassExpr:
    """Parse a single class expression, requiring it to span the input."""
    text = _decode(source) if isinstance(source, bytes) else source
    parser = _Parser(_tokenize(text))
    expr = parser.parse_class_expr()
    if parser.peek().kind != "eof":
        raise parser.fail(("end of input",))
    return expr


# ---------------------------------------------------------------- pretty

def _render_expr(expr: Expr) -> str:
    if isinstance(expr, Num):
        return str(expr.value)
    if isinstance(expr, Var):
        return expr.name
    return f"{_render_expr(expr.left)} {expr.op} {_render_expr(expr.right)}"


def _render_cond(cond: Cond) -> str:
    return f"{_render_expr(cond.left)} {cond.op} {_render_expr(cond.right)}"


def _render_stmt(stmt: Stmt, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(stmt, Assign):
        return [f"{pad}{stmt.target} := {_render_expr(stmt.expr)};"]
    if isinstance(stmt, Perform):
        return [f"{pad}perform {stmt.process}({', '.join(stmt.args)});"]
    if isinstance(stmt, Sequence):
        lines = [f"{pad}sequence {{"]
        for inner in stmt.body:
            lines.extend(_render_stmt(inner, indent + 1))
        lines.append(f"{pad}}}")
        return lines
    lines = [f"{pad}while {_render_cond(stmt.cond)} {{"]
    for inner in stmt.body:
        lines.extend(_render_stmt(inner, indent + 1))
    lines.append(f"{pad}}}")
    return lines


def render_class_expr(expr: ClassExpr) -> str:
    if isinstance(expr, Named):
        return expr.name
    if isinstance(expr, Some):
        return f"some({expr.prop}, {render_class_expr(expr.inner)})"
    if isinstance(expr, All):
        return f"all({expr.prop}, {render_class_expr(expr.inner)})"
    if isinstance(expr, AndExpr):
        return f"and({render_class_expr(expr.left)}, {render_class_expr(expr.right)})"
    return f"or({render_class_expr(expr.left)}, {render_class_expr(expr.right)})"


def pretty(ast: SpecAst) -> str:
    """Canonical text form. parse(pretty(parse(t))) == parse(t) holds."""
    lines: list[str] = []
    for decl in ast.decls:
        if isinstance(decl, ClassDecl):
            if decl.superclass is None:
                lines.append(f"class {decl.name};")
            else:
                lines.append(f"class {decl.name} subclassOf {decl.superclass};")
        elif isinstance(decl, IndividualDecl):
            lines.append(f"individual {decl.name} : {decl.cls};")
        elif isinstance(decl, ObjPropDecl):
            lines.append(f"objprop {decl.name};")
        elif isinstance(decl, ObjAssert):
            lines.append(f"assert {decl.prop}({decl.subject}, {decl.target});")
        elif isinstance(decl, DataPropDecl):
            lines.append(f"dataprop {decl.name};")
        elif isinstance(decl, DataAssert):
            lines.append(f"assertval {decl.prop}({decl.subject}, {decl.value});")
        else:
            lines.append(f"process {decl.name} {{")
            if decl.inputs:
                lines.append(f"  inputs({', '.join(decl.inputs)})")
            if decl.outputs:
                lines.append(f"  outputs({', '.join(decl.outputs)})")
            if decl.pre is not None:
                lines.append(f"  pre({_render_cond(decl.pre)})")
            if decl.result is not None:
                lines.append(f"  result({_render_cond(decl.result)})")
            if decl.body is not None:
                lines.append("  body {")
                for stmt in decl.body:
                    lines.extend(_render_stmt(stmt, 2))
                lines.append("  }")
            lines.append("}")
    return "\n".join(lines) + ("\n" if lines else "")


# ---------------------------------------------------------------- validate

@dataclass(frozen=True)
class CheckedSpec:
    """A validated spec with name tables in declaration order."""

    ast: SpecAst
    classes: tuple[tuple[str, str | None], ...]
    individuals: tuple[tuple[str, str], ...]
    objprops: tuple[str, ...]
    dataprops: tuple[str, ...]
    obj_asserts: tuple[tuple[str, str, str], ...]
    data_asserts: tuple[tuple[str, str, int], ...]
    processes: tuple[ProcessDecl, ...]

    def process(self, name: str) -> ProcessDecl:
        for decl in self.processes:
            if decl.name == name:
                return decl
        raise UnknownProcess(f"process {name!r} is not declared")

    def superclasses_of(self, name: str) -> tuple[str, ...]:
        """All strict ancestors, nearest first."""
        parents = dict(self.classes)
        chain: list[str] = []
        current = parents.get(name)
        while current is not None and current not in chain:
            chain.append(current)
            current = parents.get(current)
        return tuple(chain)


def _walk_performs(stmts: tuple[Stmt, ...]):
    for stmt in stmts:
        if isinstance(stmt, Perform):
            yield stmt
        elif isinstance(stmt, Sequence):
            yield from _walk_performs(stmt.body)
        elif isinstance(stmt, While):
            yield from _walk_performs(stmt.body)


def validate(ast: SpecAst) -> CheckedSpec:
    """Resolve all names and reject cyclic hierarchies and call graphs."""
    classes: dict[str, str | None] = {}
    individuals: dict[str, str] = {}
    objprops: list[str] = []
    dataprops: list[str] = []
    obj_asserts: list[tuple[str, str, str]] = []
    data_asserts: list[tuple[str, str, int]] = []
    processes: dict[str, ProcessDecl] = {}

    for decl in ast.decls:
        if isinstance(decl, ClassDecl):
            classes[decl.name] = decl.superclass
        elif isinstance(decl, IndividualDecl):
            individuals[decl.name] = decl.cls
        elif isinstance(decl, ObjPropDecl):
            if decl.name not in objprops:
                objprops.append(decl.name)
        elif isinstance(decl, DataPropDecl):
            if decl.name not in dataprops:
                dataprops.append(decl.name)
        elif isinstance(decl, ProcessDecl):
            processes[decl.name] = decl

    for decl in ast.decls:
        if isinstance(decl, ClassDecl) and decl.superclass is not None:
            if decl.superclass not in classes:
                raise UnknownClass(
                    f"line {decl.line}: class {decl.name!r} extends undeclared {decl.superclass!r}"
                )
        elif isinstance(decl, IndividualDecl):
            if decl.cls not in classes:
                raise UnknownClass(
                    f"line {decl.line}: individual {decl.name!r} has undeclared class {decl.cls!r}"
                )
        elif isinstance(decl, ObjAssert):
            if decl.prop not in objprops:
                raise UnknownProperty(
                    f"line {decl.line}: {decl.prop!r} is not a declared object property"
                )
            for individual in (decl.subject, decl.target):
                if individual not in individuals:
                    raise UnknownIndividual(
                        f"line {decl.line}: {individual!r} is not a declared individual"
                    )
            obj_asserts.append((decl.prop, decl.subject, decl.target))
        elif isinstance(decl, DataAssert):
            if decl.prop not in dataprops:
                raise UnknownProperty(
                    f"line {decl.line}: {decl.prop!r} is not a declared data property"
                )
            if decl.subject not in individuals:
                raise UnknownIndividual(
                    f"line {decl.line}: {decl.subject!r} is not a declared individual"
                )
            data_asserts.append((decl.prop, decl.subject, decl.value))

    # the subclass graph must be a forest
    for name in classes:
        seen = {name}
        current = classes.get(name)
        while current is not None:
            if current in seen:
                raise CyclicHierarchy(f"class {name!r} participates in a subclass cycle")
            seen.add(current)
            current = classes.get(current)

    # perform targets must exist and the call graph must be acyclic
    calls: dict[str, set[str]] = {}
    for name, decl in processes.items():
        targets: set[str] = set()
        if decl.body is not None:
            for perform in _walk_performs(decl.body):
                if perform.process not in processes:
                    raise UnknownProcess(
                        f"line {decl.line}: process {name!r} performs undeclared "
                        f"{perform.process!r}"
                    )
                targets.add(perform.process)
        calls[name] = targets

    state: dict[str, int] = {}  # 0 in progress, 1 done

    def visit(name: str, trail: tuple[str, ...]) -> None:
        if state.get(name) == 1:
            return
        if state.get(name) == 0:
            raise RecursiveProcess(f"process call cycle through {name!r}")
        state[name] = 0
        for target in sorted(calls[name]):
            visit(target, trail + (name,))
        state[name] = 1

    for name in processes:
        visit(name, ())

    for expr in ast.class_exprs:
        _check_class_expr(expr, set(classes), set(objprops))

    return CheckedSpec(
        ast=ast,
        classes=tuple(classes.items()),
        individuals=tuple(individuals.items()),
        objprops=tuple(objprops),
        dataprops=tuple(dataprops),
        obj_asserts=tuple(obj_asserts),
        data_asserts=tuple(data_asserts),
        processes=tuple(processes.values()),
    )


def _check_class_expr(expr: ClassExpr, classes: set[str], objprops: set[str]) -> None:
    if isinstance(expr, Named):
        if expr.name not in classes:
            raise UnknownClass(f"class expression names undeclared class {expr.name!r}")
    elif isinstance(expr, (Some, All)):
        if expr.prop not in objprops:
            raise UnknownProperty(
                f"class expression names undeclared object property {expr.prop!r}"
            )
        _check_class_expr(expr.inner, classes, objprops)
    else:
        _check_class_expr(expr.left, classes, objprops)
        _check_class_expr(expr.right, classes, objprops)
