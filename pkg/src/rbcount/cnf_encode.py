"""Direct CNF encoding of instances, DIMACS I/O, and a small model counter.

The encoding is count-preserving: boolean models correspond one-to-one with
CSP solutions.  Variable b(i, v) = i*d + v + 1 says "CSP variable i takes
value v"; each CSP variable gets an at-least-one clause and pairwise
at-most-one clauses, and every nogood contributes one all-negative clause.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, TextIO

from .exact_count import CapExceeded
from .rb_model import Instance


class DimacsError(ValueError):
    """Raised when DIMACS text cannot be parsed or fails validation."""


@dataclass(frozen=True)
class Cnf:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]

    def validate(self) -> None:
        for idx, clause in enumerate(self.clauses):
            if not clause:
                raise DimacsError(f"clause {idx} is empty")
            seen = set()
            for lit in clause:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise DimacsError(f"clause {idx}: literal {lit} out of range")
                if -lit in seen:
                    raise DimacsError(f"clause {idx} contains both {lit} and {-lit}")
                seen.add(lit)


def boolean_var(i: int, v: int, d: int) -> int:
    """DIMACS variable (1-based) asserting CSP variable i takes value v."""
    return i * d + v + 1


def encode_direct(instance: Instance) -> Cnf:
    """Encode with one boolean per (variable, value) pair.

    Clause order is deterministic: at-least-one per variable, then pairwise
    at-most-one per variable, then one clause per nogood with nogoods in
    sorted order.
    """
    n, d = instance.n, instance.d
    clauses: list[tuple[int, ...]] = []
    for i in range(n):
        clauses.append(tuple(boolean_var(i, v, d) for v in range(d)))
    for i in range(n):
        for v, w in itertools.combinations(range(d), 2):
            clauses.append((-boolean_var(i, v, d), -boolean_var(i, w, d)))
    for c in instance.constraints:
        for ng in sorted(c.nogoods):
            clauses.append(tuple(-boolean_var(var, val, d)
                                 for var, val in zip(c.scope, ng)))
    return Cnf(num_vars=n * d, clauses=tuple(clauses))


def write_dimacs(cnf: Cnf, sink: TextIO, comments: Iterable[str] = ()) -> None:
    cnf.validate()
    for comment in comments:
        sink.write(f"c {comment}\n")
    sink.write(f"p cnf {cnf.num_vars} {len(cnf.clauses)}\n")
    for clause in cnf.clauses:
        sink.write(" ".join(map(str, clause)) + " 0\n")


def read_dimacs(source: TextIO) -> Cnf:
    """Strict DIMACS reader: one clause per line, counts must match the header."""
    num_vars = None
    declared = None
    clauses: list[tuple[int, ...]] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            if num_vars is not None:
                raise DimacsError(f"line {lineno}: duplicate problem line")
            parts = line.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"line {lineno}: malformed problem line")
            try:
                num_vars, declared = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"line {lineno}: malformed problem line") from None
            if num_vars < 0 or declared < 0:
                raise DimacsError(f"line {lineno}: negative counts")
            continue
        if num_vars is None:
            raise DimacsError(f"line {lineno}: clause before problem line")
        try:
            lits = [int(tok) for tok in line.split()]
        except ValueError:
            raise DimacsError(f"line {lineno}: non-integer literal") from None
        if not lits or lits[-1] != 0:
            raise DimacsError(f"line {lineno}: clause must end with 0")
        if 0 in lits[:-1]:
            raise DimacsError(f"line {lineno}: stray 0 inside clause")
        clauses.append(tuple(lits[:-1]))
    if num_vars is None:
        raise DimacsError("missing problem line")
    if declared != len(clauses):
        raise DimacsError(f"header declares {declared} clauses, found {len(clauses)}")
    cnf = Cnf(num_vars=num_vars, clauses=tuple(clauses))
    cnf.validate()
    return cnf


def count_models(cnf: Cnf, cap: int = 1 << 24) -> int:
    """Count satisfying boolean assignments by depth-first enumeration.

    Assigns variables in numeric order and fails a branch as soon as some
    clause has all its literals false; once past the highest variable any
    clause mentions, the remaining variables are free.  Requires
    2^num_vars <= cap.  Independent of the CSP counters, so it serves as a
    cross-check for encode_direct.
    """
    if 2 ** cnf.num_vars > cap:
        raise CapExceeded(f"2^{cnf.num_vars} boolean assignments exceeds cap {cap}")
    nv = cnf.num_vars
    # Clauses keyed by their highest variable; checked once it gets a value.
    by_max: list[list[tuple[int, ...]]] = [[] for _ in range(nv + 1)]
    max_var = 0
    for clause in cnf.clauses:
        hv = max(abs(lit) for lit in clause)
        by_max[hv].append(clause)
        if hv > max_var:
            max_var = hv

    val = [False] * (nv + 1)  # 1-based
    count = 0

    def falsified(var: int) -> bool:
        for clause in by_max[var]:
            for lit in clause:
                if val[lit] if lit > 0 else not val[-lit]:
                    break
            else:
                return True
        return False

    def visit(var: int) -> None:
        nonlocal count
        if var > max_var:
            count += 2 ** (nv - var + 1)
            return
        for choice in (False, True):
            val[var] = choice
            if not falsified(var):
                visit(var + 1)

    visit(1)
    return count
