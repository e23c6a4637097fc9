"""Generalised Cantor constructions with removal budgets.

A construction starts from a ball ``b0`` and a modulus ``R``.  Level
``n + 1`` is obtained by splitting every level-``n`` survivor into its
``R`` children and discarding the balls removed at stage ``n``.  A ball
removed at stage ``n`` on behalf of a level-``m`` survivor ``B`` is a
level-``(n + 1)`` descendant of ``B``; the number of such removals per
``(m, n, B)`` is capped by the budget ``r[m, n]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from types import MappingProxyType
from typing import Callable, Iterable, Mapping, Optional

from .errors import (BudgetExceeded, DepthNotBuilt, NotADescendant, NotLocal,
                     RNotAboveM)
from .space import (Ball, SplittingStructure, as_fraction, floor_pow, parse_ball,
                    pow_compare, structure_for)


class BudgetTable:
    """Sparse table of nonnegative budgets ``r[m, n]`` for ``0 <= m <= n``.

    Explicit entries win over the optional ``rule``, a callable giving the
    default value at ``(m, n)``; without a rule the default is 0.
    """

    def __init__(self, entries: Optional[Mapping] = None, rule: Optional[Callable] = None,
                 band: Optional[int] = None):
        clean = {}
        for (m, n), v in (entries or {}).items():
            v = as_fraction(v)
            if not 0 <= m <= n:
                raise ValueError(f"budget index ({m},{n}) needs 0 <= m <= n")
            if v < 0:
                raise ValueError(f"budget r[{m},{n}] = {v} is negative")
            clean[(m, n)] = v
        self._entries = MappingProxyType(clean)
        self._rule = rule
        # largest n - m with a nonzero entry; None when a rule leaves it open
        if rule is None:
            band = max((n - m for (m, n), v in clean.items() if v), default=0)
        self.band = band

    @classmethod
    def zero(cls) -> "BudgetTable":
        return cls()

    @classmethod
    def diagonal(cls, value) -> "BudgetTable":
        """``r[m, m] = value`` for every m, zero elsewhere (a local construction)."""
        value = as_fraction(value)
        return cls(rule=lambda m, n: value if m == n else Fraction(0), band=0)

    def __getitem__(self, key) -> Fraction:
        m, n = key
        if key in self._entries:
            return self._entries[key]
        if self._rule is None or not 0 <= m <= n:
            return Fraction(0)
        v = as_fraction(self._rule(m, n))
        if v < 0:
            raise ValueError(f"budget r[{m},{n}] = {v} is negative")
        return v

    def nonzero(self, n_max: int) -> list[tuple[int, int, Fraction]]:
        """All nonzero entries with ``n <= n_max`` in (n, m) order."""
        out = []
        for n in range(n_max + 1):
            for m in range(n + 1):
                v = self[m, n]
                if v:
                    out.append((m, n, v))
        return out

    def with_entries(self, entries: Mapping) -> "BudgetTable":
        merged = dict(self._entries)
        merged.update(entries)
        band = self.band
        if band is not None and self._rule is not None:
            band = max([band] + [n - m for (m, n), v in merged.items() if v])
        return BudgetTable(merged, self._rule, band)

    def __repr__(self):
        return f"BudgetTable({dict(self._entries)!r}, rule={'yes' if self._rule else 'no'})"


@dataclass(frozen=True)
class CantorConstruction:
    """Immutable record of a construction built up to ``depth`` levels."""

    b0: Ball
    R: int
    structure: SplittingStructure
    budgets: BudgetTable
    levels: tuple = ()
    removals: Mapping = field(default_factory=lambda: MappingProxyType({}))
    _level_sets: tuple = field(default=(), repr=False, compare=False)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def is_survivor(self, b: Ball, m: int) -> bool:
        return 0 <= m <= self.depth and b in self._level_sets[m]

    def removed(self, m: int, n: int, parent: Ball) -> tuple:
        return self.removals.get((m, n, parent), ())

    def removals_at(self, n: int) -> list[tuple[int, Ball, tuple]]:
        """Removal records ``(m, parent, balls)`` made at stage ``n``."""
        return [(m, b, balls) for (m, nn, b), balls in self.removals.items() if nn == n]


def new_construction(b0: Ball, R: int, budgets: Optional[BudgetTable] = None,
                     structure: Optional[SplittingStructure] = None) -> CantorConstruction:
    structure = structure or structure_for(b0)
    if not structure.in_U(R) or R < 2:
        raise ValueError(f"modulus {R} is not an allowed split factor")
    return CantorConstruction(b0, R, structure, budgets or BudgetTable.zero(),
                              ((b0,),), MappingProxyType({}), (frozenset([b0]),))


def _normalise_removals(removals) -> dict:
    if removals is None:
        return {}
    if isinstance(removals, Mapping):
        return {key: list(balls) for key, balls in removals.items()}
    out: dict = {}
    for m, parent, ball in removals:
        out.setdefault((m, parent), []).append(ball)
    return out


def extend_level(c: CantorConstruction, removals=None) -> CantorConstruction:
    """Build level ``depth + 1``.

    ``removals`` maps ``(m, parent)`` to the balls removed on behalf of the
    level-``m`` survivor ``parent``; an iterable of ``(m, parent, ball)``
    triples is accepted too.  Nothing is changed if any check fails.
    """
    n = c.depth
    todo = _normalise_removals(removals)
    accepted = {}
    for (m, parent), balls in todo.items():
        if not 0 <= m <= n:
            raise ValueError(f"removal stage m={m} outside 0..{n}")
        if not c.is_survivor(parent, m):
            raise NotADescendant(f"{parent} is not a level-{m} survivor")
        u = c.R ** (n - m + 1)
        uniq = list(dict.fromkeys(balls))
        for a in uniq:
            if c.structure.child_index(parent, a, u) is None:
                raise NotADescendant(f"{a} is not a level-{n + 1} descendant of {parent}")
        budget = c.budgets[m, n]
        if len(uniq) > budget:
            raise BudgetExceeded(m, n, parent, len(uniq), budget)
        if uniq:
            accepted[(m, n, parent)] = tuple(uniq)

    gone = {a for balls in accepted.values() for a in balls}
    nxt = tuple(child for b in c.levels[n] for child in c.structure.split(b, c.R)
                if child not in gone)
    merged = dict(c.removals)
    merged.update(accepted)
    return CantorConstruction(c.b0, c.R, c.structure, c.budgets, c.levels + (nxt,),
                              MappingProxyType(merged), c._level_sets + (frozenset(nxt),))


def build(b0: Ball, R: int, budgets: BudgetTable, depth: int,
          remover: Optional[Callable[[CantorConstruction], object]] = None,
          structure: Optional[SplittingStructure] = None) -> CantorConstruction:
    """Run ``extend_level`` ``depth`` times, asking ``remover`` for each stage's removals."""
    c = new_construction(b0, R, budgets, structure)
    for _ in range(depth):
        c = extend_level(c, remover(c) if remover else None)
    return c


def survivors(c: CantorConstruction, depth: int) -> list[Ball]:
    if depth < 0 or depth > c.depth:
        raise DepthNotBuilt(f"depth {depth} requested, construction has {c.depth}")
    return list(c.levels[depth])


# ---------------------------------------------------------------------------
# grid helpers and rule-driven constructions


def _shift_bits(R: int) -> int:
    bits = R.bit_length() - 1
    if R != 1 << bits:
        raise ValueError(f"shift modulus {R} is not a power of 2")
    return bits


def ancestor(b0: Ball, R: int, b: Ball, level: int) -> Ball:
    """The level-``level`` grid ball (modulus ``R`` below ``b0``) containing ``b``."""
    if level == 0:
        return b0
    if not b0.is_real:
        return Ball.cylinder(b.word[:len(b0.word) + _shift_bits(R) * level])
    width = b0.diameter / R ** level
    idx = (b.lo - b0.lo) // width
    lo = b0.lo + idx * width
    return Ball.from_endpoints(lo, lo + width)


def level_cells_meeting(b0: Ball, R: int, level: int, D: Ball) -> list[Ball]:
    """Level-``level`` grid balls below ``b0`` whose interiors meet ``D``.

    ``D`` should be at least as large as a level-``level`` ball; on the shift
    this means the cells are the extensions of ``D``'s word.
    """
    if not b0.is_real:
        target = len(b0.word) + _shift_bits(R) * level
        w = D.word
        if len(w) > target:
            return [Ball.cylinder(w[:target])] if w.startswith(b0.word) else []
        if not (w.startswith(b0.word) or b0.word.startswith(w)):
            return []
        base = w if len(w) >= len(b0.word) else b0.word
        extra = target - len(base)
        return [Ball.cylinder(base + format(i, f"0{extra}b") if extra else base)
                for i in range(2 ** extra)]
    width = b0.diameter / R ** level
    first = max(0, int((D.lo - b0.lo) // width))
    last = min(R ** level - 1, int(-((b0.lo - D.hi) // width)) - 1)
    out = []
    for i in range(first, last + 1):
        cell = Ball.from_endpoints(b0.lo + i * width, b0.lo + (i + 1) * width)
        if cell.meets_interior(D):
            out.append(cell)
    return out


class LazyConstruction:
    """A construction given by a removal rule and evaluated on demand.

    ``rule(m, n, parent)`` returns the level-``(n + 1)`` balls removed on
    behalf of the level-``m`` survivor ``parent``.  Nothing is precomputed,
    so arbitrarily deep plays can query it.  Budgets are checked as removal
    sets are produced.
    """

    depth = float("inf")

    def __init__(self, b0: Ball, R: int, budgets: BudgetTable, rule: Callable,
                 structure: Optional[SplittingStructure] = None):
        self.b0, self.R, self.budgets, self.rule = b0, R, budgets, rule
        self.structure = structure or structure_for(b0)
        self._removed: dict = {}
        self._alive: dict = {}

    def removed(self, m: int, n: int, parent: Ball) -> tuple:
        key = (m, n, parent)
        if key not in self._removed:
            balls = tuple(dict.fromkeys(self.rule(m, n, parent)))
            u = self.R ** (n - m + 1)
            for a in balls:
                if self.structure.child_index(parent, a, u) is None:
                    raise NotADescendant(f"{a} is not a level-{n + 1} descendant of {parent}")
            if len(balls) > self.budgets[m, n]:
                raise BudgetExceeded(m, n, parent, len(balls), self.budgets[m, n])
            self._removed[key] = balls
        return self._removed[key]

    def is_survivor(self, b: Ball, m: int) -> bool:
        key = (b, m)
        if key in self._alive:
            return self._alive[key]
        if m == 0:
            ok = b == self.b0
        elif self.structure.child_index(self.b0, b, self.R ** m) is None:
            ok = False
        else:
            chain = [ancestor(self.b0, self.R, b, k) for k in range(m)]
            ok = self.is_survivor(chain[-1], m - 1) and not any(
                b in self.removed(j, m - 1, chain[j]) for j in range(m))
        self._alive[key] = ok
        return ok

    def level(self, n: int) -> list[Ball]:
        """Survivors at level ``n``, built top-down (exponential in general)."""
        layer = [self.b0]
        for k in range(n):
            layer = [ch for b in layer for ch in self.structure.split(b, self.R)
                     if self.is_survivor(ch, k + 1)]
        return layer

    def materialise(self, depth: int) -> CantorConstruction:
        """Eager copy of the first ``depth`` levels, re-checked by extend_level."""
        c = new_construction(self.b0, self.R, self.budgets, self.structure)
        for n in range(depth):
            recs = {(m, p): self.removed(m, n, p) for m in range(n + 1)
                    for p in c.levels[m]}
            c = extend_level(c, {k: v for k, v in recs.items() if v})
        return c


def survivors_meeting(c, m: int, D: Ball) -> list[Ball]:
    """Level-``m`` survivors of ``c`` (eager or lazy) whose interiors meet ``D``."""
    return [b for b in level_cells_meeting(c.b0, c.R, m, D) if c.is_survivor(b, m)]


def avoiding_words(forbidden: Iterable[str], depth: Optional[int] = None):
    """Binary words containing none of ``forbidden``, as a local construction.

    The child ``w + a`` of a level-``n`` word ``w`` is removed at stage ``n``
    when a forbidden word is a suffix of ``w + a``.  Returns an eager
    construction of the given depth, or a lazy one when ``depth`` is None.
    """
    forbidden = tuple(forbidden)
    if not forbidden or any(not w or set(w) - {"0", "1"} for w in forbidden):
        raise ValueError("forbidden words must be nonempty binary strings")
    budget = BudgetTable.diagonal(len({w[-1] for w in forbidden}))

    def rule(m, n, parent):
        if m != n:
            return ()
        return tuple(ch for a in "01" for ch in [Ball.cylinder(parent.word + a)]
                     if any(ch.word.endswith(w) for w in forbidden))

    lazy = LazyConstruction(Ball.cylinder(""), 2, budget, rule)
    return lazy if depth is None else lazy.materialise(depth)


# ---------------------------------------------------------------------------
# reference constructions


def middle_thirds(depth: int) -> CantorConstruction:
    """Classic middle-thirds set on [0, 1]: R = 3, one local removal per survivor."""
    def remove_middle(c):
        n = c.depth
        return {(n, b): [c.structure.split(b, 3)[1]] for b in c.levels[n]}
    return build(Ball.from_endpoints(0, 1), 3, BudgetTable.diagonal(1), depth, remove_middle)


def golden_mean(depth: int) -> CantorConstruction:
    """Binary words with no two consecutive 1s: remove ``w1`` whenever ``w`` ends in 1."""
    def remove_11(c):
        n = c.depth
        return {(n, b): [Ball.cylinder(b.word + "1")] for b in c.levels[n]
                if b.word.endswith("1")}
    return build(Ball.cylinder(""), 2, BudgetTable.diagonal(1), depth, remove_11)


def full_split(b0: Ball, R: int, depth: int) -> CantorConstruction:
    return build(b0, R, BudgetTable.zero(), depth)


# ---------------------------------------------------------------------------
# budget checks


@dataclass(frozen=True)
class BudgetViolation:
    m: int
    n: int
    value: Fraction
    bound: str


@dataclass(frozen=True)
class BudgetReport:
    passed: bool
    checked: int
    violations: tuple = ()
    detail: tuple = ()

    def lines(self) -> list[str]:
        head = f"checked={self.checked} passed={self.passed}"
        return [head] + [f"r[{v.m},{v.n}]={v.value} > {v.bound}" for v in self.violations] \
            + list(self.detail)


def validate_budgets(c: CantorConstruction, eps, R: int, n_max: Optional[int] = None) -> BudgetReport:
    """Check ``r[m, n] <= f(R) ** ((n - m + 1)(1 - eps))`` for every built stage.

    The comparison is an exact rational-power comparison.  ``n_max`` defaults
    to the last stage that produced a level.
    """
    eps = as_fraction(eps)
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    f_R = c.structure.f(R)
    n_max = c.depth - 1 if n_max is None else n_max
    violations = []
    checked = 0
    for n in range(n_max + 1):
        for m in range(n + 1):
            checked += 1
            r = c.budgets[m, n]
            exponent = (n - m + 1) * (1 - eps)
            if pow_compare(r, f_R, exponent) > 0:
                violations.append(BudgetViolation(m, n, r, f"{f_R}^{exponent}"))
    return BudgetReport(not violations, checked, tuple(violations))


@dataclass(frozen=True)
class RichReport:
    passed: bool
    sums: tuple
    first_violation: Optional[tuple] = None

    def lines(self) -> list[str]:
        out = [f"n={n} sum={s}" for n, s in self.sums]
        out.append("pass" if self.passed else f"FAIL at n={self.first_violation[0]}")
        return out


def rich_budget_check(r: BudgetTable, R: int, y, n_max: int, M=4) -> RichReport:
    """Exact check of ``sum_m (4/R)^(n-m+1) r[m, n] <= y`` for ``n <= n_max``."""
    y = as_fraction(y)
    if R <= M:
        raise RNotAboveM(f"R={R} must exceed M={M}")
    if not 0 < y < 1:
        raise ValueError("y must lie in (0, 1)")
    ratio = Fraction(4, R)
    sums = []
    first = None
    for n in range(n_max + 1):
        s = sum((ratio ** (n - m + 1) * r[m, n] for m in range(n + 1)), Fraction(0))
        sums.append((n, s))
        if first is None and s > y:
            first = (n, s)
    return RichReport(first is None, tuple(sums), first)


def reindex_to_rich(c: CantorConstruction, ell: int, R: int, eps=None):
    """Re-express a local construction at modulus ``R ** ell`` at modulus ``R``.

    Level ``ell * k`` of the output equals level ``k`` of the input, with pure
    splitting in between.  A removal made at input stage ``k`` (level-``k``
    parent, level-``k + 1`` balls) becomes a removal at output stage
    ``ell * k + ell - 1`` on behalf of the level-``ell * k`` parent, so the
    only nonzero budgets are ``r'[ell*k, ell*k + ell - 1]``.  They copy the
    input's diagonal budget, or are ``floor(R ** (ell (1 - eps)))`` when
    ``eps`` is given.

    Returns the new construction and its budget table.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    if c.R != R ** ell:
        raise ValueError(f"construction modulus {c.R} is not {R}^{ell}")
    for (m, n, _parent) in c.removals:
        if m != n:
            raise NotLocal(f"removal recorded at stage ({m},{n})")
    for m, n, _v in c.budgets.nonzero(max(c.depth - 1, 0)):
        if m != n:
            raise NotLocal(f"budget r[{m},{n}] is off-diagonal")
    if ell == 1:
        return c, c.budgets

    if eps is not None:
        fixed = Fraction(floor_pow(R, ell * (1 - as_fraction(eps))))
        budget_of = lambda k: fixed  # noqa: E731
    else:
        src = c.budgets
        budget_of = lambda k: src[k, k]  # noqa: E731

    def rule(m, n):
        if m % ell == 0 and n == m + ell - 1:
            return budget_of(m // ell)
        return 0

    table = BudgetTable(rule=rule, band=ell - 1)
    out = new_construction(c.b0, R, table, c.structure)
    for k in range(c.depth):
        for j in range(ell):
            if j < ell - 1:
                out = extend_level(out)
                continue
            recs = {(ell * k, parent): balls for (m, _n, parent), balls in c.removals.items()
                    if m == k}
            out = extend_level(out, recs)
    return out, table


# ---------------------------------------------------------------------------
# text dump


def dump(c: CantorConstruction) -> str:
    lines = [f"CANTOR R={c.R} B0={c.b0.to_text()}"]
    for m, n, v in c.budgets.nonzero(max(c.depth - 1, 0)):
        lines.append(f"BUDGET {m} {n} {v}")
    for n, level in enumerate(c.levels):
        lines.append(f"LEVEL {n}")
        lines.extend(b.to_text() for b in level)
        for (m, nn, parent), balls in sorted(c.removals.items(),
                                             key=lambda kv: (kv[0][0], kv[0][2].to_text())):
            if nn != n:
                continue
            lines.extend(f"REMOVE {m} {n} {parent.to_text()} {a.to_text()}" for a in balls)
    return "\n".join(lines) + "\n"


def load(text: str) -> CantorConstruction:
    """Rebuild a construction from :func:`dump` output, re-running every check."""
    rows = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not rows or not rows[0].startswith("CANTOR "):
        raise ValueError("missing CANTOR header")
    head = dict(tok.split("=", 1) for tok in rows[0].split()[1:])
    b0 = parse_ball(head["B0"])
    R = int(head["R"])
    entries = {}
    levels: list[list[Ball]] = []
    stage_removals: dict[int, list] = {}
    for row in rows[1:]:
        parts = row.split()
        if parts[0] == "BUDGET":
            entries[(int(parts[1]), int(parts[2]))] = Fraction(parts[3])
        elif parts[0] == "LEVEL":
            if int(parts[1]) != len(levels):
                raise ValueError(f"unexpected {row!r}")
            levels.append([])
        elif parts[0] == "REMOVE":
            m, n = int(parts[1]), int(parts[2])
            stage_removals.setdefault(n, []).append((m, parse_ball(parts[3]), parse_ball(parts[4])))
        else:
            if not levels:
                raise ValueError(f"ball before first LEVEL: {row!r}")
            levels[-1].append(parse_ball(row))
    c = new_construction(b0, R, BudgetTable(entries))
    for n in range(len(levels) - 1):
        c = extend_level(c, stage_removals.get(n, []))
    for n, level in enumerate(levels):
        if list(c.levels[n]) != level:
            raise ValueError(f"level {n} in the dump disagrees with the replayed construction")
    return c


def iter_levels(c: CantorConstruction) -> Iterable[tuple[int, tuple]]:
    return enumerate(c.levels)
