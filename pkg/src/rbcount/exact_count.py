"""Exact solution counting and threshold decisions.

Counts are Python integers, so they stay exact at any magnitude, and the
threshold test count**divisor >= d**n is pure integer arithmetic - no float
ever touches a decision.

Two counters are provided.  ``count_brute`` enumerates the full assignment
space and is meant as a cross-checking oracle; ``count_backtrack`` explores
a pruned search tree in a static variable order and is the one to use for
anything beyond toy sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .rb_model import Instance

DEFAULT_BRUTE_CAP = 10 ** 8

# Bitmask popcount lookup is worthwhile only while the table stays small.
_POP_TABLE_MAX_D = 16


class CapExceeded(RuntimeError):
    """The assignment space is larger than the configured enumeration cap."""


@dataclass(frozen=True)
class CountResult:
    count: int
    nodes_visited: int
    method: str  # "brute" | "backtrack" | "external"


@dataclass(frozen=True)
class Decision:
    answer: bool           # count**divisor >= d**n
    count: CountResult
    divisor: int


def count_brute(instance: Instance, cap: int = DEFAULT_BRUTE_CAP) -> CountResult:
    """Count solutions by enumerating all d^n assignments.

    Raises CapExceeded when d^n > cap.  Deliberately unclever so it can
    serve as an independent oracle for the backtracking counter.
    """
    n, d = instance.n, instance.d
    space = d ** n
    if space > cap:
        raise CapExceeded(f"{d}^{n} = {space} assignments exceeds cap {cap}")
    checks = [(c.scope, c.nogoods) for c in instance.constraints]
    count = 0
    for assignment in itertools.product(range(d), repeat=n):
        for scope, nogoods in checks:
            if tuple(assignment[v] for v in scope) in nogoods:
                break
        else:
            count += 1
    return CountResult(count=count, nodes_visited=space, method="brute")


def _static_order(instance: Instance) -> list[int]:
    # Descending constraint degree, ties broken by ascending variable index.
    deg = [0] * instance.n
    for c in instance.constraints:
        for v in c.scope:
            deg[v] += 1
    return sorted(range(instance.n), key=lambda v: (-deg[v], v))


def _compile_checks(instance: Instance, depth_of: list[int], d: int):
    """Index constraints by the search depth at which their scope completes.

    Binary constraints become per-source-value bitmask rows over the later
    variable's values (rows for the same source variable are pre-merged);
    wider constraints become dicts from the earlier values, in scope order,
    to a forbidden-value mask for the latest variable.
    """
    n = instance.n
    full = (1 << d) - 1
    pair_rows: list[dict[int, list[int]]] = [dict() for _ in range(n)]
    tuple_checks: list[list] = [[] for _ in range(n)]
    last_depth = -1
    for c in instance.constraints:
        depths = [depth_of[v] for v in c.scope]
        j = max(depths)
        if j > last_depth:
            last_depth = j
        if len(c.scope) == 2:
            src = min(depths)
            s_pos, t_pos = (0, 1) if depths[0] < depths[1] else (1, 0)
            rows = pair_rows[j].get(src)
            if rows is None:
                rows = [full] * d
                pair_rows[j][src] = rows
            for ng in c.nogoods:
                rows[ng[s_pos]] &= ~(1 << ng[t_pos])
        else:
            k = len(c.scope)
            last_i = max(range(k), key=lambda i: depths[i])
            other_is = [i for i in range(k) if i != last_i]
            src_depths = tuple(depths[i] for i in other_is)
            forbid: dict[tuple[int, ...], int] = {}
            for ng in c.nogoods:
                key = tuple(ng[i] for i in other_is)
                forbid[key] = forbid.get(key, 0) | (1 << ng[last_i])
            tuple_checks[j].append((src_depths, forbid))
    pairs = [tuple(sorted(row_map.items())) for row_map in pair_rows]
    checks = [tuple(t) for t in tuple_checks]
    return pairs, checks, last_depth


def count_backtrack(instance: Instance) -> CountResult:
    """Count solutions by depth-first search in a static variable order.

    Variables are ordered by descending constraint degree (ties by index);
    each constraint is enforced at the depth where its scope completes, as a
    bitmask over the values of the variable assigned there.  Once every
    constraint is resolved the remaining variables are free, contributing a
    d^(#unassigned) factor instead of further descent; for the same reason
    the deepest constrained level is tallied by popcount rather than visited
    value by value, and nodes_visited counts only explicit descents.
    """
    n, d = instance.n, instance.d
    if not instance.constraints:
        return CountResult(count=d ** n, nodes_visited=1, method="backtrack")

    order = _static_order(instance)
    depth_of = [0] * n
    for j, v in enumerate(order):
        depth_of[v] = j
    pair_rows, tuple_checks, last_depth = _compile_checks(instance, depth_of, d)

    full = (1 << d) - 1
    pw = [d ** i for i in range(n + 1)]
    count = 0
    nodes = 1

    # Fold the two deepest levels into one sum when the final level carries
    # only binary constraints: with x the second-deepest variable and y the
    # deepest, sum over allowed x-values the popcount of y's mask.
    two_level = last_depth == n - 1 and n >= 2 and not tuple_checks[n - 1]
    rows_last = None
    base_pairs = pair_rows[n - 1] if last_depth == n - 1 else ()
    spec_depth = -1
    if two_level:
        spec_depth = n - 2
        others = []
        for src, rows in base_pairs:
            if src == n - 2:
                rows_last = rows
            else:
                others.append((src, rows))
        base_pairs = tuple(others)
    pop = None
    if two_level and d <= _POP_TABLE_MAX_D:
        pop = [bin(x).count("1") for x in range(1 << d)]

    vals = [0] * n
    pending = [0] * n

    def enter(j: int) -> int:
        # Allowed-value mask for the variable at depth j given vals[:j].
        m = full
        for src, rows in pair_rows[j]:
            m &= rows[vals[src]]
            if not m:
                return 0
        for src_depths, forbid in tuple_checks[j]:
            f = forbid.get(tuple(vals[t] for t in src_depths))
            if f:
                m &= ~f
                if not m:
                    return 0
        return m

    def two_level_sum() -> int:
        xm = enter(n - 2)
        if not xm:
            return 0
        base = full
        for src, rows in base_pairs:
            base &= rows[vals[src]]
            if not base:
                return 0
        if rows_last is None:
            return xm.bit_count() * base.bit_count()
        total = 0
        if pop is not None:
            while xm:
                bit = xm & -xm
                xm ^= bit
                total += pop[base & rows_last[bit.bit_length() - 1]]
        else:
            while xm:
                bit = xm & -xm
                xm ^= bit
                total += (base & rows_last[bit.bit_length() - 1]).bit_count()
        return total

    if spec_depth == 0:
        return CountResult(count=two_level_sum(), nodes_visited=1, method="backtrack")

    pending[0] = full  # arity >= 2 means no constraint can resolve at depth 0
    j = 0
    last = n - 1
    while j >= 0:
        m = pending[j]
        if not m:
            j -= 1
            continue
        bit = m & -m
        pending[j] = m ^ bit
        vals[j] = bit.bit_length() - 1
        nodes += 1
        nxt = j + 1
        if nxt > last_depth:
            count += pw[n - nxt]
            continue
        if nxt == spec_depth:
            count += two_level_sum()
            continue
        if nxt == last:
            count += enter(last).bit_count()
            continue
        mask = enter(nxt)
        if mask:
            j = nxt
            pending[j] = mask
    return CountResult(count=count, nodes_visited=nodes, method="backtrack")


def decide_at_least(instance: Instance, divisor: int = 2, *,
                    method: str = "backtrack",
                    cap: int = DEFAULT_BRUTE_CAP) -> Decision:
    """Decide whether the instance has at least d^(n/divisor) solutions."""
    if method == "backtrack":
        result = count_backtrack(instance)
    elif method == "brute":
        result = count_brute(instance, cap=cap)
    else:
        raise ValueError(f"unknown counting method {method!r}")
    return decide_from_count(result, instance.d, instance.n, divisor)


def decide_from_count(count: CountResult | int, d: int, n: int,
                      divisor: int = 2) -> Decision:
    """Threshold decision for an already-computed count (exact integers only)."""
    if isinstance(count, int):
        count = CountResult(count=count, nodes_visited=0, method="external")
    if not isinstance(divisor, int) or divisor < 2:
        raise ValueError(f"divisor must be an integer >= 2, got {divisor}")
    if count.count < 0:
        raise ValueError("count must be >= 0")
    answer = count.count ** divisor >= d ** n
    return Decision(answer=answer, count=count, divisor=divisor)
