"""Emission and checking of grid-scan result certificates.

A certificate pins a strategyproofness verdict to an instance text via a
64-bit FNV-1a digest of the canonicalized text. The digest is a cheap
integrity check against accidental drift, not a cryptographic
commitment: anyone can forge a text matching a digest, so certificates
authenticate nothing and merely make honest mistakes loud.

Checking is asymmetric by design. A FAIL certificate carries its
witness, so the checker replays that single cell through the full
mechanism and compares utilities, constant work. A PASS certificate
asserts the absence of a witness, which only a full re-enumeration of
the grid can confirm.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .model import parse_auction, validate_instance, ValidatedInstance
from .properties import (
    Grid,
    HOLDS_ON_GRID,
    Witness,
    check_strategyproof,
    evaluate_cell,
    scan_position,
    DEFAULT_CELL_CAP,
)

VERSION_LINE = "MECHCERT 1"

PASS = "PASS"
FAIL = "FAIL"

DIGEST_MISMATCH = "DigestMismatch"
WITNESS_DOES_NOT_REPRODUCE = "WitnessDoesNotReproduce"
VIOLATION_FOUND_DESPITE_PASS = "ViolationFoundDespitePass"
CELL_COUNT_MISMATCH = "CellCountMismatch"
MALFORMED_CERTIFICATE = "MalformedCertificate"

_FNV_OFFSET = 14695981039346656037
_FNV_PRIME = 1099511628211
_MASK64 = (1 << 64) - 1


class MalformedCertificate(ValueError):
    pass


def fnv1a_64(data: bytes) -> int:
    """Fowler-Noll-Vo 1a, 64-bit: xor the byte in, then multiply."""
    h = _FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def canonicalize(text: str) -> str:
    """Normalize instance text before digesting.

    Comments go, line endings become LF, space and tab runs collapse to
    one space, trailing whitespace is trimmed, and blank lines drop out.
    Texts differing only in those ways share a digest.
    """
    normalized = text.replace("\r\n", "\n").replace("\r", "\n")
    lines: list[str] = []
    for raw in normalized.split("\n"):
        line = raw.split("#", 1)[0]
        line = re.sub(r"[ \t]+", " ", line).rstrip()
        if line:
            lines.append(line)
    return "\n".join(lines) + ("\n" if lines else "")


def canonical_digest(text: str) -> str:
    """16 lowercase hex digits over the canonicalized text."""
    return format(fnv1a_64(canonicalize(text).encode("utf-8")), "016x")


@dataclass(frozen=True)
class Certificate:
    digest: str
    prop: str
    mechanism: str
    agents: int
    grid: Grid
    cells: int
    verdict: str
    witness: Witness | None = None


@dataclass(frozen=True)
class CheckResult:
    accepted: bool
    reason: str | None = None
    detail: str = ""


def emit_certificate(
    inst_text: str,
    prop: str = "strategyproof",
    grid: Grid = Grid(0, 10, 1),
    cell_cap: int = DEFAULT_CELL_CAP,
) -> Certificate:
    """Run the grid scan on the instance and wrap the verdict.

    Only the grid-quantified property is certifiable; the witness slot
    and the cell count have no meaning for the others.
    """
    if prop != "strategyproof":
        raise ValueError(f"cannot certify property {prop!r}, only 'strategyproof'")
    inst = validate_instance(parse_auction(inst_text))
    verdict = check_strategyproof(inst, len(inst.agents), grid, cell_cap)
    return Certificate(
        digest=canonical_digest(inst_text),
        prop=prop,
        mechanism=inst.config.mechanism.value,
        agents=len(inst.agents),
        grid=grid,
        cells=verdict.cells_checked,
        verdict=PASS if verdict.result == HOLDS_ON_GRID else FAIL,
        witness=verdict.witness,
    )


def render_certificate(cert: Certificate) -> str:
    lines = [
        VERSION_LINE,
        f"digest {cert.digest}",
        f"property {cert.prop}",
        f"mechanism {cert.mechanism}",
        f"agents {cert.agents}",
        f"grid {cert.grid.lo}..{cert.grid.hi}:{cert.grid.step}",
        f"cells {cert.cells}",
        f"verdict {cert.verdict}",
    ]
    if cert.witness is not None:
        w = cert.witness
        others = ",".join(str(o) for o in w.opponents)
        lines.append(
            f"witness agent={w.agent_index} v={w.valuation} others={others} "
            f"dev={w.deviation} u_truth={w.truthful_utility} u_dev={w.deviating_utility}"
        )
    return "\n".join(lines) + "\n"


_GRID_RE = re.compile(r"^(-?\d+)\.\.(-?\d+):(-?\d+)$")
_DIGEST_RE = re.compile(r"^[0-9a-f]{16}$")


def _take(lines: list[str], key: str) -> str:
    if not lines:
        raise MalformedCertificate(f"missing '{key}' line")
    line = lines.pop(0)
    prefix = key + " "
    if not line.startswith(prefix):
        raise MalformedCertificate(f"expected '{key} ...', got {line!r}")
    return line[len(prefix) :]


def _int_field(text: str, key: str) -> int:
    try:
        return int(text, 10)
    except ValueError:
        raise MalformedCertificate(f"field '{key}' is not an integer: {text!r}") from None


def parse_certificate(text: str) -> Certificate:
    """Strict parse of the certificate format, fixed field order."""
    lines = [line.rstrip() for line in text.splitlines() if line.strip()]
    if not lines or lines.pop(0) != VERSION_LINE:
        raise MalformedCertificate(f"first line must be '{VERSION_LINE}'")
    digest = _take(lines, "digest")
    if not _DIGEST_RE.match(digest):
        raise MalformedCertificate(f"digest must be 16 lowercase hex digits, got {digest!r}")
    prop = _take(lines, "property")
    mechanism = _take(lines, "mechanism")
    agents = _int_field(_take(lines, "agents"), "agents")
    grid_text = _take(lines, "grid")
    match = _GRID_RE.match(grid_text)
    if not match:
        raise MalformedCertificate(f"grid must look like 'lo..hi:step', got {grid_text!r}")
    try:
        grid = Grid(int(match.group(1)), int(match.group(2)), int(match.group(3)))
    except ValueError as exc:
        raise MalformedCertificate(f"bad grid: {exc}") from None
    cells = _int_field(_take(lines, "cells"), "cells")
    verdict = _take(lines, "verdict")
    if verdict not in (PASS, FAIL):
        raise MalformedCertificate(f"verdict must be PASS or FAIL, got {verdict!r}")
    witness: Witness | None = None
    if verdict == FAIL:
        witness = _parse_witness(_take(lines, "witness"))
    if lines:
        raise MalformedCertificate(f"unexpected trailing line {lines[0]!r}")
    return Certificate(
        digest=digest,
        prop=prop,
        mechanism=mechanism,
        agents=agents,
        grid=grid,
        cells=cells,
        verdict=verdict,
        witness=witness,
    )


_WITNESS_RE = re.compile(
    r"^agent=(-?\d+) v=(-?\d+) others=((?:-?\d+(?:,-?\d+)*)?) "
    r"dev=(-?\d+) u_truth=(-?\d+) u_dev=(-?\d+)$"
)


def _parse_witness(text: str) -> Witness:
    match = _WITNESS_RE.match(text)
    if not match:
        raise MalformedCertificate(f"bad witness line: {text!r}")
    others_text = match.group(3)
    opponents = tuple(int(t) for t in others_text.split(",")) if others_text else ()
    return Witness(
        agent_index=int(match.group(1)),
        agent="",
        valuation=int(match.group(2)),
        opponents=opponents,
        deviation=int(match.group(4)),
        truthful_utility=int(match.group(5)),
        deviating_utility=int(match.group(6)),
    )


def check_certificate(
    cert: Certificate | str,
    inst_text: str,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> CheckResult:
    """Accept or reject a certificate against an instance text.

    Rejection reasons, in the order tested: MalformedCertificate,
    DigestMismatch, then for FAIL certificates CellCountMismatch (the
    witness must sit exactly where the canonical scan says the first
    violation was) and WitnessDoesNotReproduce; for PASS certificates
    ViolationFoundDespitePass and CellCountMismatch.
    """
    if isinstance(cert, str):
        try:
            cert = parse_certificate(cert)
        except MalformedCertificate as exc:
            return CheckResult(accepted=False, reason=MALFORMED_CERTIFICATE, detail=str(exc))

    if cert.digest != canonical_digest(inst_text):
        return CheckResult(
            accepted=False,
            reason=DIGEST_MISMATCH,
            detail="instance text does not match the certified digest",
        )
    try:
        inst = validate_instance(parse_auction(inst_text))
    except ValueError as exc:
        return CheckResult(accepted=False, reason=MALFORMED_CERTIFICATE, detail=str(exc))

    if cert.prop != "strategyproof":
        return CheckResult(
            accepted=False,
            reason=MALFORMED_CERTIFICATE,
            detail=f"uncheckable property {cert.prop!r}",
        )
    if cert.mechanism != inst.config.mechanism.value:
        return CheckResult(
            accepted=False,
            reason=MALFORMED_CERTIFICATE,
            detail="certificate mechanism does not match the instance",
        )
    if cert.agents != len(inst.agents):
        return CheckResult(
            accepted=False,
            reason=MALFORMED_CERTIFICATE,
            detail="certificate agent count does not match the instance",
        )

    if cert.verdict == PASS:
        verdict = check_strategyproof(inst, cert.agents, cert.grid, cell_cap)
        if verdict.result != HOLDS_ON_GRID:
            return CheckResult(
                accepted=False,
                reason=VIOLATION_FOUND_DESPITE_PASS,
                detail="re-enumeration found a violation",
            )
        if verdict.cells_checked != cert.cells:
            return CheckResult(
                accepted=False,
                reason=CELL_COUNT_MISMATCH,
                detail=f"scan covered {verdict.cells_checked} cells, certificate says {cert.cells}",
            )
        return CheckResult(accepted=True)

    witness = cert.witness
    assert witness is not None  # parse guarantees it for FAIL
    try:
        position = scan_position(cert.agents, cert.grid, witness)
    except ValueError as exc:
        return CheckResult(accepted=False, reason=MALFORMED_CERTIFICATE, detail=str(exc))
    if position != cert.cells:
        return CheckResult(
            accepted=False,
            reason=CELL_COUNT_MISMATCH,
            detail=f"witness sits at scan cell {position}, certificate says {cert.cells}",
        )
    try:
        u_truth, u_dev = evaluate_cell(
            inst, witness.agent_index, witness.valuation, witness.opponents, witness.deviation
        )
    except (ValueError, KeyError, IndexError) as exc:
        return CheckResult(accepted=False, reason=MALFORMED_CERTIFICATE, detail=str(exc))
    if (
        u_truth != witness.truthful_utility
        or u_dev != witness.deviating_utility
        or not u_dev > u_truth
    ):
        return CheckResult(
            accepted=False,
            reason=WITNESS_DOES_NOT_REPRODUCE,
            detail=f"witness cell re-evaluates to u_truth={u_truth} u_dev={u_dev}",
        )
    return CheckResult(accepted=True)
