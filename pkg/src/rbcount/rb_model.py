"""Random binary-domain CSP instances in the Model RB family.

An instance has n variables sharing the domain {0, ..., d-1} and m
constraints; each constraint names a k-subset of the variables (its scope)
and an explicit set of forbidden value tuples (nogoods).  Domain size and
constraint count grow with n as d = n^alpha and m = r * n * ln(n), which is
what makes the family exhibit sharp thresholds.  Everything here is
deterministic given the parameters: the generator derives every random draw
from (seed, constraint index, draw counter), so regenerating - in any order,
on any machine - gives byte-identical instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

MASK64 = (1 << 64) - 1

FORMAT_MAGIC = "rbcsp"
FORMAT_VERSION = 1

# Assignments are plain sequences of value indices, one per variable.
Assignment = Sequence[int]


class InstanceFormatError(ValueError):
    """Raised when instance text cannot be parsed or fails validation."""


# ---------------------------------------------------------------------------
# deterministic draws
# ---------------------------------------------------------------------------

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(*words: int) -> int:
    """Avalanche a sequence of integers into one 64-bit word.

    Pure function of its arguments, so any individual draw can be recomputed
    in isolation; generation order and parallelism never change output.
    """
    h = 0
    for w in words:
        h ^= w & MASK64
        h = (h + _GOLDEN) & MASK64
        h = ((h ^ (h >> 30)) * _MIX1) & MASK64
        h = ((h ^ (h >> 27)) * _MIX2) & MASK64
        h ^= h >> 31
    return h


class DrawStream:
    """Counter-based random stream: word i is mix64(seed, stream_id, i)."""

    __slots__ = ("seed", "stream_id", "counter")

    def __init__(self, seed: int, stream_id: int):
        self.seed = seed
        self.stream_id = stream_id
        self.counter = 0

    def next_word(self) -> int:
        w = mix64(self.seed, self.stream_id, self.counter)
        self.counter += 1
        return w

    def below(self, bound: int) -> int:
        """Uniform integer in [0, bound), unbiased via rejection on top bits."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        if bound == 1:
            return 0
        bits = (bound - 1).bit_length()
        words = (bits + 63) // 64
        excess = words * 64 - bits
        while True:
            u = 0
            for _ in range(words):
                u = (u << 64) | self.next_word()
            u >>= excess
            if u < bound:
                return u


# ---------------------------------------------------------------------------
# parameters and derived sizes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RbParams:
    """The five Model RB knobs plus the generator seed.

    k: constraint arity; n: variable count; alpha: domain growth exponent
    (d = n^alpha); r: constraint density (m = r*n*ln n); p: constraint
    tightness, the fraction of value tuples each constraint forbids.
    """

    k: int
    n: int
    alpha: float
    r: float
    p: float
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"arity k must be >= 2, got {self.k}")
        if self.n < 2:
            raise ValueError(f"variable count n must be >= 2, got {self.n}")
        if self.k > self.n:
            raise ValueError(f"arity k={self.k} exceeds variable count n={self.n}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.r > 0:
            raise ValueError(f"density r must be > 0, got {self.r}")
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"tightness p must lie in (0, 1), got {self.p}")
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class DerivedSizes:
    """Integer sizes a parameter point concretises to."""

    d: int          # domain size, >= 2
    m: int          # constraint count, >= 1
    t_nogoods: int  # forbidden tuples per constraint, in [1, d**k - 1]


def round_half_up(x: float) -> int:
    """Round to the nearest integer, halves away from zero (toward +inf)."""
    return math.floor(x + 0.5)


def derive_sizes(params: RbParams) -> DerivedSizes:
    """Concretise (k, n, alpha, r, p) into integer sizes (d, m, t_nogoods).

    d = round(n^alpha) clamped to >= 2, m = round(r*n*ln n) clamped to >= 1,
    t_nogoods = round(p*d^k) clamped into [1, d^k - 1].  Rounding is
    half-up throughout.
    """
    d = max(2, round_half_up(params.n ** params.alpha))
    m = max(1, round_half_up(params.r * params.n * math.log(params.n)))
    dk = d ** params.k
    t = min(max(1, round_half_up(params.p * dk)), dk - 1)
    return DerivedSizes(d=d, m=m, t_nogoods=t)


def effective_tightness(params: RbParams) -> float:
    """Realised tightness t_nogoods / d^k after rounding and clamping."""
    sizes = derive_sizes(params)
    return sizes.t_nogoods / sizes.d ** params.k


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    """A scope (strictly increasing variable indices) plus forbidden tuples."""

    scope: tuple[int, ...]
    nogoods: frozenset[tuple[int, ...]]

    def allows(self, assignment: Assignment) -> bool:
        return tuple(assignment[v] for v in self.scope) not in self.nogoods


@dataclass(frozen=True)
class Instance:
    n: int
    d: int
    constraints: tuple[Constraint, ...]
    provenance: tuple[RbParams, DerivedSizes] | None = None

    def satisfies(self, assignment: Assignment) -> bool:
        """True when no constraint forbids its projection of the assignment."""
        return all(c.allows(assignment) for c in self.constraints)

    def validate(self) -> None:
        """Raise InstanceFormatError if any structural invariant is broken."""
        if self.n < 1:
            raise InstanceFormatError("need at least one variable")
        if self.d < 2:
            raise InstanceFormatError("domain size must be >= 2")
        for ci, c in enumerate(self.constraints):
            k = len(c.scope)
            if k < 2:
                raise InstanceFormatError(f"constraint {ci}: arity must be >= 2")
            if any(not 0 <= v < self.n for v in c.scope):
                raise InstanceFormatError(f"constraint {ci}: variable index out of range")
            if any(a >= b for a, b in zip(c.scope, c.scope[1:])):
                raise InstanceFormatError(
                    f"constraint {ci}: scope must be strictly increasing")
            for ng in c.nogoods:
                if len(ng) != k:
                    raise InstanceFormatError(
                        f"constraint {ci}: nogood length {len(ng)} != arity {k}")
                if any(not 0 <= x < self.d for x in ng):
                    raise InstanceFormatError(f"constraint {ci}: value out of range")


# ---------------------------------------------------------------------------
# generation
# ---------------------------------------------------------------------------


def _draw_scope(stream: DrawStream, n: int, k: int) -> tuple[int, ...]:
    # Distinct indices via rejection, then sort: uniform over k-subsets.
    chosen: list[int] = []
    while len(chosen) < k:
        v = stream.below(n)
        if v not in chosen:
            chosen.append(v)
    return tuple(sorted(chosen))


def _decode_tuple(index: int, d: int, k: int) -> tuple[int, ...]:
    vals = [0] * k
    for i in range(k - 1, -1, -1):
        vals[i] = index % d
        index //= d
    return tuple(vals)


def _draw_nogoods(stream: DrawStream, d: int, k: int, t: int) -> frozenset[tuple[int, ...]]:
    dk = d ** k
    seen: set[int] = set()
    while len(seen) < t:
        idx = stream.below(dk)
        if idx not in seen:
            seen.add(idx)
    return frozenset(_decode_tuple(i, d, k) for i in seen)


def generate(params: RbParams) -> Instance:
    """Generate an instance: m uniform scopes, each with t_nogoods distinct
    forbidden tuples drawn uniformly without replacement.

    Scopes are sampled with repetition (two constraints may share a scope).
    Pure in (params, seed): equal parameters give equal instances.
    """
    sizes = derive_sizes(params)
    constraints = []
    for ci in range(sizes.m):
        stream = DrawStream(params.seed, ci)
        scope = _draw_scope(stream, params.n, params.k)
        nogoods = _draw_nogoods(stream, sizes.d, params.k, sizes.t_nogoods)
        constraints.append(Constraint(scope, nogoods))
    return Instance(params.n, sizes.d, tuple(constraints), provenance=(params, sizes))


# ---------------------------------------------------------------------------
# applicability of the threshold formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ApplicabilityReport:
    """Which closed-form threshold results apply at a parameter point.

    ``tightness_threshold_ok`` covers the critical-tightness formula,
    ``density_threshold_ok`` the critical-density formula, and
    ``interval_estimate_ok`` the moment-based count interval (valid under
    either side condition).
    """

    divisor: float
    alpha_above_inverse_arity: bool   # alpha > 1/k
    domain_growth_ok: bool            # k * exp(-alpha/r) >= 1
    arity_vs_tightness_ok: bool       # k >= 1/(1 - p)
    tightness_threshold_ok: bool
    density_threshold_ok: bool
    interval_estimate_ok: bool


def theorem_applicability(params: RbParams, divisor: float = 2) -> ApplicabilityReport:
    """Evaluate the side conditions the asymptotic threshold results need."""
    _check_divisor(divisor)
    alpha_ok = params.alpha > 1.0 / params.k
    growth_ok = params.k * math.exp(-params.alpha / params.r) >= 1.0
    arity_ok = params.k >= 1.0 / (1.0 - params.p)
    return ApplicabilityReport(
        divisor=divisor,
        alpha_above_inverse_arity=alpha_ok,
        domain_growth_ok=growth_ok,
        arity_vs_tightness_ok=arity_ok,
        tightness_threshold_ok=alpha_ok and growth_ok,
        density_threshold_ok=alpha_ok and arity_ok,
        interval_estimate_ok=alpha_ok and (growth_ok or arity_ok),
    )


def _check_divisor(divisor: float) -> None:
    if divisor == math.inf:
        return
    if not (isinstance(divisor, int) or float(divisor).is_integer()) or divisor < 2:
        raise ValueError(f"divisor must be an integer >= 2 or infinity, got {divisor}")


# ---------------------------------------------------------------------------
# the fixed-m/fixed-t sibling parameterisation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelBCheck:
    ok: bool
    violations: tuple[str, ...]
    m: int | None          # round(p1 * C(n, k)) when computable
    t: int | None          # round(p2 * d^k) when computable


def validate_model_b(k: int, n: int, d: int, p1: float, p2: float) -> ModelBCheck:
    """Validate the proportion-based sibling model and report derived sizes.

    Here p1 is the fraction of the C(n, k) possible scopes used and p2 the
    fraction of value tuples forbidden per constraint.  Pure validation: no
    clamping is applied to the derived m and t.
    """
    violations = []
    if k < 2:
        violations.append("arity k must be >= 2")
    if n < 2:
        violations.append("variable count n must be >= 2")
    if k > n:
        violations.append("arity k must not exceed variable count n")
    if d < 2:
        violations.append("domain size d must be >= 2")
    if not 0.0 < p1 <= 1.0:
        violations.append("scope proportion p1 must satisfy 0 < p1 <= 1")
    if not 0.0 < p2 < 1.0:
        violations.append("tightness p2 must satisfy 0 < p2 < 1")
    m = t = None
    if k >= 1 and n >= 1 and k <= n:
        m = round_half_up(p1 * math.comb(n, k))
    if d >= 1 and k >= 1:
        t = round_half_up(p2 * d ** k)
    return ModelBCheck(ok=not violations, violations=tuple(violations), m=m, t=t)


# ---------------------------------------------------------------------------
# instance text format
# ---------------------------------------------------------------------------
#
#   rbcsp 1
#   n <n> d <d> k <k> m <m>
#   c <v1> ... <vk>         one line per constraint, sorted variable indices
#   g <a1> ... <ak>         the constraint's nogoods, one tuple per line
#
# '#' starts a comment line; blank lines are ignored.


def write_instance(instance: Instance, sink: TextIO) -> None:
    """Write an instance in the plain-text exchange format (deterministic)."""
    if instance.provenance is not None:
        params, sizes = instance.provenance
        sink.write(f"# generated: k={params.k} n={params.n} alpha={params.alpha!r}"
                   f" r={params.r!r} p={params.p!r} seed={params.seed}\n")
        sink.write(f"# derived: d={sizes.d} m={sizes.m} t_nogoods={sizes.t_nogoods}\n")
    k = len(instance.constraints[0].scope) if instance.constraints else 2
    sink.write(f"{FORMAT_MAGIC} {FORMAT_VERSION}\n")
    sink.write(f"n {instance.n} d {instance.d} k {k} m {len(instance.constraints)}\n")
    for c in instance.constraints:
        sink.write("c " + " ".join(map(str, c.scope)) + "\n")
        for ng in sorted(c.nogoods):
            sink.write("g " + " ".join(map(str, ng)) + "\n")


def _ints(tokens: Iterable[str], context: str) -> list[int]:
    out = []
    for tok in tokens:
        try:
            out.append(int(tok))
        except ValueError:
            raise InstanceFormatError(f"{context}: expected integer, got {tok!r}") from None
    return out


def read_instance(source: TextIO) -> Instance:
    """Parse the text format back into an Instance, validating as it goes.

    Rejects out-of-range indices, arity/count mismatches, unsorted scopes and
    duplicate nogoods.  Constraints with no nogood lines are legal (they
    forbid nothing); the generator never emits them but files may.
    """
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(source)
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise InstanceFormatError("empty input")
    pos = 0

    lineno, header = lines[pos]
    pos += 1
    parts = header.split()
    if parts[0] != FORMAT_MAGIC:
        raise InstanceFormatError(f"line {lineno}: expected magic {FORMAT_MAGIC!r}")
    if parts[1:] != [str(FORMAT_VERSION)]:
        raise InstanceFormatError(f"line {lineno}: unsupported format version")

    if pos >= len(lines):
        raise InstanceFormatError("missing size line")
    lineno, sizes_line = lines[pos]
    pos += 1
    toks = sizes_line.split()
    if len(toks) != 8 or toks[0] != "n" or toks[2] != "d" or toks[4] != "k" or toks[6] != "m":
        raise InstanceFormatError(f"line {lineno}: expected 'n <n> d <d> k <k> m <m>'")
    n, d, k, m = _ints((toks[1], toks[3], toks[5], toks[7]), f"line {lineno}")
    if n < 1:
        raise InstanceFormatError(f"line {lineno}: n must be >= 1")
    if d < 2:
        raise InstanceFormatError(f"line {lineno}: d must be >= 2")
    if k < 2:
        raise InstanceFormatError(f"line {lineno}: k must be >= 2")
    if m < 0:
        raise InstanceFormatError(f"line {lineno}: m must be >= 0")
    if m > 0 and k > n:
        raise InstanceFormatError(f"line {lineno}: k={k} exceeds n={n}")

    constraints: list[Constraint] = []
    scope: tuple[int, ...] | None = None
    nogoods: set[tuple[int, ...]] = set()

    def flush():
        if scope is not None:
            constraints.append(Constraint(scope, frozenset(nogoods)))

    while pos < len(lines):
        lineno, line = lines[pos]
        pos += 1
        toks = line.split()
        tag, body = toks[0], toks[1:]
        if tag == "c":
            flush()
            vals = _ints(body, f"line {lineno}")
            if len(vals) != k:
                raise InstanceFormatError(f"line {lineno}: scope needs {k} variables")
            if any(not 0 <= v < n for v in vals):
                raise InstanceFormatError(f"line {lineno}: variable index out of range")
            if any(a >= b for a, b in zip(vals, vals[1:])):
                raise InstanceFormatError(f"line {lineno}: scope must be strictly increasing")
            scope = tuple(vals)
            nogoods = set()
        elif tag == "g":
            if scope is None:
                raise InstanceFormatError(f"line {lineno}: nogood before any scope line")
            vals = _ints(body, f"line {lineno}")
            if len(vals) != k:
                raise InstanceFormatError(f"line {lineno}: nogood needs {k} values")
            if any(not 0 <= x < d for x in vals):
                raise InstanceFormatError(f"line {lineno}: value out of range")
            tup = tuple(vals)
            if tup in nogoods:
                raise InstanceFormatError(f"line {lineno}: duplicate nogood {tup}")
            nogoods.add(tup)
        else:
            raise InstanceFormatError(f"line {lineno}: unknown line tag {tag!r}")
    flush()

    if len(constraints) != m:
        raise InstanceFormatError(
            f"declared m={m} but found {len(constraints)} constraints")
    inst = Instance(n, d, tuple(constraints))
    inst.validate()
    return inst
