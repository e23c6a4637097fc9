"""Dimension estimates, regularity and diffuseness checks, packings.

Everything is computed from exact counts at exact scales; the only
floating point step is the final log-log regression.
"""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

import mpmath

from .errors import (ChildrenCollide, GameError, IllegalProbe, NoRootInUnitInterval,
                     NotRegularAtSample, TooFewScales, WitnessNotFound)
from .space import Ball, GradedScalar, as_fraction, floor_pow, rational_power


# ---------------------------------------------------------------------------
# scale profiles and box dimension


@dataclass(frozen=True)
class ScaleProfile:
    """Pairs ``(r, N(r))`` with strictly decreasing scales and positive counts."""

    pairs: tuple

    def __post_init__(self):
        pairs = tuple((as_fraction(r), int(n)) for r, n in self.pairs)
        for (r1, _), (r2, _) in zip(pairs, pairs[1:]):
            if not r2 < r1:
                raise ValueError("scales must be strictly decreasing")
        if any(r <= 0 or n <= 0 for r, n in pairs):
            raise ValueError("scales and counts must be positive")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)

    @classmethod
    def from_construction(cls, c, depths: Iterable[int]) -> "ScaleProfile":
        """Survivor counts of an eager or lazy construction at the given depths."""
        out = []
        for n in depths:
            level = c.level(n) if hasattr(c, "level") else c.levels[n]
            out.append((c.b0.radius / Fraction(c.R) ** n, len(level)))
        return cls(tuple(out))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r_num", "r_den", "count"])
        for r, n in self.pairs:
            w.writerow([r.numerator, r.denominator, n])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScaleProfile":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(tuple((Fraction(int(row["r_num"]), int(row["r_den"])), int(row["count"]))
                         for row in rows))


def _log(x: Fraction) -> float:
    return float(mpmath.log(mpmath.mpf(x.numerator)) - mpmath.log(mpmath.mpf(x.denominator)))


def box_dimension(p: ScaleProfile) -> tuple[float, float]:
    """Least-squares slope of ``log N`` against ``-log r`` and the largest residual."""
    if len(p) < 3:
        raise TooFewScales(f"{len(p)} scales given, need at least 3")
    xs = [-_log(r) for r, _ in p.pairs]
    ys = [math.log(n) for _, n in p.pairs]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    sxx = sum((x - mx) ** 2 for x in xs)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sxx
    icept = my - slope * mx
    resid = max(abs(y - (icept + slope * x)) for x, y in zip(xs, ys))
    return slope, resid


# ---------------------------------------------------------------------------
# Ahlfors regularity


def _upper_fraction(g: GradedScalar) -> Fraction:
    man, exp = mpmath.mpf(g.upper).man_exp
    return Fraction(man) * Fraction(2) ** exp if exp >= 0 else Fraction(man, 2 ** -exp)


@dataclass(frozen=True)
class RegularityCertificate:
    delta: Fraction
    C: Fraction
    r_min: Fraction
    r_max: Fraction
    ratio_min: str
    ratio_max: str
    samples: int

    def text(self) -> str:
        return "\n".join([
            f"delta={self.delta}",
            f"C={self.C}",
            f"scales=[{self.r_min}, {self.r_max}]",
            f"ratio_min={self.ratio_min}",
            f"ratio_max={self.ratio_max}",
            f"samples={self.samples}",
        ]) + "\n"


def ahlfors_check(mu: Callable[[Ball], Fraction], delta, samples: Sequence[Ball],
                  cap=64) -> RegularityCertificate:
    """Certify ``r**delta / C <= mu(B(x, r)) <= C r**delta`` on the sampled balls.

    ``C`` is a rational upper bound for the tightest constant seen.  Raises
    :class:`NotRegularAtSample` at the worst sample when ``C`` would exceed
    ``cap`` (or the mass vanishes).
    """
    delta, cap = as_fraction(delta), as_fraction(cap)
    if not samples:
        raise ValueError("no samples")
    lo = hi = None
    worst, worst_c = None, Fraction(0)
    for B in samples:
        m = as_fraction(mu(B))
        if m <= 0:
            raise NotRegularAtSample(B.center, B.radius, m)
        ratio = m / rational_power(B.radius, delta)
        g = ratio if isinstance(ratio, GradedScalar) else GradedScalar(ratio)
        lo = g.lower if lo is None else min(lo, g.lower)
        hi = g.upper if hi is None else max(hi, g.upper)
        local = max(_upper_fraction(g), _upper_fraction(1 / g))
        if local > worst_c:
            worst, worst_c = B, local
    if worst_c > cap:
        raise NotRegularAtSample(worst.center, worst.radius, worst_c)
    return RegularityCertificate(delta, worst_c, min(b.radius for b in samples),
                                 max(b.radius for b in samples), mpmath.nstr(lo, 12),
                                 mpmath.nstr(hi, 12), len(samples))


def uniform_shift_measure(B: Ball) -> Fraction:
    """Fair-coin measure of a cylinder."""
    return B.radius


def construction_measure(c, depth: Optional[int] = None) -> Callable[[Ball], Fraction]:
    """Mass split evenly among surviving children, evaluated down to ``depth``.

    Below ``depth`` a partially covered survivor contributes in proportion to
    the covered length (real line) or not at all (shift, where cylinders are
    nested or disjoint so this never happens).
    """
    depth = c.depth if depth is None else depth
    kids: dict = {}
    for n in range(depth):
        alive = c._level_sets[n + 1]
        for b in c.levels[n]:
            kids[b] = [ch for ch in c.structure.split(b, c.R) if ch in alive]

    def mass(b: Ball, n: int, B: Ball, weight: Fraction) -> Fraction:
        if B.contains(b):
            return weight
        if not B.meets_interior(b):
            return Fraction(0)
        if n == depth or not kids.get(b):
            if not b.is_real:
                return Fraction(0)
            overlap = min(b.hi, B.hi) - max(b.lo, B.lo)
            return weight * overlap / b.diameter
        share = weight / len(kids[b])
        return sum((mass(ch, n + 1, B, share) for ch in kids[b]), Fraction(0))

    return lambda B: mass(c.b0, 0, B, Fraction(1))


# ---------------------------------------------------------------------------
# packings


def separated_packing(B: Ball, alpha, delta=1) -> list[Ball]:
    """Balls of radius ``alpha rad(B)`` inside ``B`` with centres ``3 alpha rad(B)`` apart.

    Centres start at the left end of the shrunken ball and step by the
    separation, so the count is ``floor(2 (1 - alpha) / (3 alpha)) + 1``.
    For ``alpha >= 1/2`` only the concentric ball is returned.
    """
    alpha = as_fraction(alpha)
    if not B.is_real or as_fraction(delta) != 1:
        raise ValueError("packings are built on the real line (delta = 1)")
    if not 0 < alpha < 1:
        raise ValueError("need 0 < alpha < 1")
    r = alpha * B.radius
    if alpha >= Fraction(1, 2):
        return [Ball.interval(B.center, r)]
    step = 3 * r
    out, x = [], B.lo + r
    while x <= B.hi - r:
        out.append(Ball.interval(x, r))
        x += step
    return out


def packing_constant(B: Ball, alpha) -> Fraction:
    """Achieved ``count * alpha**delta`` (the implied constant, delta = 1)."""
    return len(separated_packing(B, alpha)) * as_fraction(alpha)


# ---------------------------------------------------------------------------
# diffuseness and uniform perfectness on unions of intervals


@dataclass(frozen=True)
class IntervalSet:
    """A closed subset of the line given as a finite union of closed intervals."""

    intervals: tuple

    def __post_init__(self):
        ivs = sorted((as_fraction(a), as_fraction(b)) for a, b in self.intervals)
        if any(a > b for a, b in ivs):
            raise ValueError("interval with lo > hi")
        object.__setattr__(self, "intervals", tuple(ivs))

    @classmethod
    def from_balls(cls, balls: Iterable[Ball]) -> "IntervalSet":
        return cls(tuple((b.lo, b.hi) for b in balls))

    @classmethod
    def from_construction(cls, c, depth: int) -> "IntervalSet":
        level = c.level(depth) if hasattr(c, "level") else c.levels[depth]
        return cls.from_balls(level)

    @classmethod
    def point(cls, x) -> "IntervalSet":
        return cls(((x, x),))

    def contains(self, z) -> bool:
        z = as_fraction(z)
        return any(a <= z <= b for a, b in self.intervals)

    def witness(self, x, a, y, b) -> Optional[Fraction]:
        """A point of the set in ``B(x, a)`` but outside the closed ``B(y, b)``."""
        lo_all, hi_all = x - a, x + a
        cut_lo, cut_hi = y - b, y + b
        for p, q in self.intervals:
            # left piece [max(p, lo_all), min(q, cut_lo)) with the open end at cut_lo
            lo, hi = max(p, lo_all), min(q, hi_all)
            if lo > hi:
                continue
            end = min(hi, cut_lo)
            if lo < end or (lo == end and end < cut_lo):
                return lo
            start = max(lo, cut_hi)
            if start < hi or (start == hi and start > cut_hi):
                return hi
        return None

    def sample_points(self, rng: random.Random, count: int, grain: int = 1024) -> list[Fraction]:
        out = []
        for _ in range(count):
            p, q = rng.choice(self.intervals)
            out.append(p + (q - p) * Fraction(rng.randrange(grain + 1), grain))
        return out


@dataclass(frozen=True)
class SampleVerdict:
    passed: bool
    checked: int
    failure: Optional[tuple] = None
    witnesses: tuple = field(default=(), repr=False)

    def line(self) -> str:
        if self.passed:
            return f"pass ({self.checked} samples)"
        return f"fail at {self.failure} after {self.checked} samples"


def diffuse_check(K: IntervalSet, beta, r0, samples: Sequence[tuple],
                  form: str = "center") -> SampleVerdict:
    """Test diffuseness on sampled triples ``(x, y, r)`` with ``x`` in ``K``.

    ``form="center"`` asks for a point of ``K`` in ``B(x, (1-beta) r)``
    outside ``B(y, 2 beta r)``; ``form="ball"`` for one in ``B(x, r)``
    outside ``B(y, beta r)``.
    """
    beta, r0 = as_fraction(beta), as_fraction(r0)
    if not 0 < beta < 1:
        raise ValueError("need 0 < beta < 1")
    found = []
    for k, (x, y, r) in enumerate(samples):
        x, y, r = as_fraction(x), as_fraction(y), as_fraction(r)
        if not K.contains(x) or not 0 < r <= r0:
            raise ValueError(f"sample {(x, y, r)} is outside the definition's range")
        if form == "center":
            z = K.witness(x, (1 - beta) * r, y, 2 * beta * r)
        elif form == "ball":
            z = K.witness(x, r, y, beta * r)
        else:
            raise ValueError(f"unknown form {form!r}")
        if z is None:
            return SampleVerdict(False, k + 1, (x, y, r), tuple(found))
        found.append(z)
    return SampleVerdict(True, len(samples), None, tuple(found))


def uniformly_perfect_check(K: IntervalSet, c, r0, samples: Sequence[tuple]) -> SampleVerdict:
    """Test ``(B(x, r) minus B(x, c r))`` meets ``K`` on sampled pairs ``(x, r)``."""
    c, r0 = as_fraction(c), as_fraction(r0)
    if not 0 < c < 1:
        raise ValueError("need 0 < c < 1")
    found = []
    for k, (x, r) in enumerate(samples):
        x, r = as_fraction(x), as_fraction(r)
        if not K.contains(x) or not 0 < r <= r0:
            raise ValueError(f"sample {(x, r)} is outside the definition's range")
        z = K.witness(x, r, x, c * r)
        if z is None:
            return SampleVerdict(False, k + 1, (x, r), tuple(found))
        found.append(z)
    return SampleVerdict(True, len(samples), None, tuple(found))


def random_triples(K: IntervalSet, r0, count: int, seed: int = 0, grain: int = 1024) -> list[tuple]:
    """Reproducible ``(x, y, r)`` samples with ``x`` in ``K`` and ``0 < r <= r0``."""
    r0 = as_fraction(r0)
    rng = random.Random(seed)
    xs = K.sample_points(rng, count, grain)
    out = []
    for x in xs:
        r = r0 * Fraction(rng.randrange(1, grain + 1), grain)
        y = x + r * Fraction(rng.randrange(-2 * grain, 2 * grain + 1), grain)
        out.append((x, y, r))
    return out


# ---------------------------------------------------------------------------
# regular subsets as ball trees


@dataclass(frozen=True)
class BallTree:
    """Levels of pairwise disjoint balls, each level refining the previous one."""

    root: Ball
    levels: tuple
    parent: dict = field(compare=False, repr=False)
    scale: Fraction = Fraction(1)
    transcripts: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def profile(self, depths: Optional[Iterable[int]] = None) -> ScaleProfile:
        """Counts at the nominal scales ``rad(root) * scale**n``."""
        depths = range(self.depth + 1) if depths is None else depths
        return ScaleProfile(tuple((self.root.radius * self.scale ** n, len(self.levels[n]))
                                  for n in depths))

    def as_construction(self, R: int):
        """The same tree as a grid construction with modulus ``R`` (when it is one)."""
        from .cantor import BudgetTable, extend_level, new_construction
        c = new_construction(self.root, R, BudgetTable(rule=lambda m, n: R if m == n else 0, band=0))
        for n in range(self.depth):
            keep = set(self.levels[n + 1])
            recs = {}
            for b in c.levels[n]:
                gone = [ch for ch in c.structure.split(b, R) if ch not in keep]
                if gone:
                    recs[(n, b)] = gone
            c = extend_level(c, recs)
            if set(c.levels[n + 1]) != keep:
                raise ValueError(f"level {n + 1} is not made of grid cells for R={R}")
        return c


def _check_disjoint(balls: Sequence[Ball], interiors: bool = False):
    for i, a in enumerate(balls):
        for b in balls[i + 1:]:
            hit = a.meets_interior(b) if interiors else a.meets(b)
            if hit:
                raise ChildrenCollide(f"{a} and {b} intersect")


def diffuse_to_regular(K: IntervalSet, beta, depth: int, root: Optional[Ball] = None) -> BallTree:
    """Replace each ball of radius ``rho`` centred in ``K`` by two radius ``beta rho``
    balls centred in ``K`` with disjoint interiors (leftmost admissible centres)."""
    beta = as_fraction(beta)
    if not 0 < beta <= Fraction(1, 2):
        raise ValueError("need 0 < beta <= 1/2")
    if root is None:
        a = K.intervals[0][0]
        b = max(q for _, q in K.intervals)
        if a == b:
            raise WitnessNotFound("K is a single point")
        root = Ball.from_endpoints(a, b)
    levels, parent = [(root,)], {}
    for _ in range(depth):
        nxt = []
        for B in levels[-1]:
            r = beta * B.radius
            z1 = _leftmost_in(K, B.lo + r, B.hi - r)
            z2 = None if z1 is None else _leftmost_in(K, z1 + 2 * r, B.hi - r)
            if z1 is None or z2 is None:
                raise WitnessNotFound(f"no two disjoint radius-{r} balls centred in K inside {B}")
            kids = (Ball.interval(z1, r), Ball.interval(z2, r))
            for ch in kids:
                parent[ch] = B
            nxt.extend(kids)
        _check_disjoint(nxt, interiors=True)
        levels.append(tuple(nxt))
    return BallTree(root, tuple(levels), parent, beta)


def _leftmost_in(K: IntervalSet, lo: Fraction, hi: Fraction) -> Optional[Fraction]:
    for p, q in K.intervals:
        a, b = max(p, lo), min(q, hi)
        if a <= b:
            return a
    return None


def neighborhood(A: Ball, d) -> Ball:
    """The closed ``d``-neighbourhood of a ball (exact on both playgrounds)."""
    d = as_fraction(d)
    if A.is_real:
        return Ball.interval(A.center, A.radius + d)
    k = 0
    while Fraction(1, 2 ** k) > d:
        k += 1
    return Ball.cylinder(A.word[:min(len(A.word), k)])


def regular_branching(beta, gamma, cexp) -> int:
    """``floor((beta**2 / (3 gamma)) ** c)``."""
    beta, gamma = as_fraction(beta), as_fraction(gamma)
    return floor_pow(beta * beta / (3 * gamma), as_fraction(cexp))


def regular_from_bob(bob: Callable, beta, gamma, cexp, depth: int) -> BallTree:
    """Ahlfors regular tree of Bob outcomes in the ``(cexp, beta)`` potential game.

    Alice only moves on good turns (Bob's first ball of radius at most
    ``gamma**n rad(B_0)``).  The children of a good-turn ball are Bob's next
    good-turn balls after Alice deletes the ``gamma**(n+1) diam(B_0)``
    neighbourhoods of the previous children, ``N`` times.
    """
    from .engine import AliceCollection, GameConfig, Transcript, VerdictKind, coerce_move

    beta, gamma, cexp = as_fraction(beta), as_fraction(gamma), as_fraction(cexp)
    N = regular_branching(beta, gamma, cexp)
    if N < 1:
        raise ValueError(f"parameters give N = {N} children")
    cfg = GameConfig.potential(cexp, beta)
    t0 = Transcript(cfg)
    t0 = t0.append(coerce_move(cfg, "bob", bob(t0)))
    if t0.finished:
        raise GameError(f"opening rejected: {t0.final}")
    root = t0.current_ball
    rad0 = root.radius

    def advance(t: Transcript, probe: tuple, n: int) -> Transcript:
        t = t.append(AliceCollection(probe))
        if t.finished:
            if t.final.kind is VerdictKind.ILLEGAL:
                raise IllegalProbe(t.final.reason)
            raise ChildrenCollide(f"probe covers Bob's ball: {t.final.reason}")
        target = gamma ** (n + 1) * rad0
        while True:
            t = t.append(coerce_move(cfg, "bob", bob(t)))
            if t.finished:
                raise GameError(f"Bob's move rejected: {t.final}")
            if t.current_ball.radius <= target:
                return t
            t = t.append(AliceCollection(()))
            if t.finished:
                raise ChildrenCollide(f"Bob's ball covered: {t.final.reason}")

    levels, parent, hist = [(root,)], {}, {root: t0}
    for n in range(depth):
        d = gamma ** (n + 1) * root.diameter
        nxt = []
        for B in levels[-1]:
            kids: list[Ball] = []
            for _ in range(N):
                probe = tuple(neighborhood(g, d) for g in kids)
                t = advance(hist[B], probe, n)
                kids.append(t.current_ball)
                hist[t.current_ball] = t
                parent[t.current_ball] = B
            _check_disjoint(kids)
            nxt.extend(kids)
        levels.append(tuple(nxt))
    return BallTree(root, tuple(levels), parent, gamma, hist)


# ---------------------------------------------------------------------------
# similarity dimension


def ifs_similarity_dim(lam, gam, width=Fraction(1, 10 ** 9)) -> tuple[Fraction, Fraction]:
    """Rational bracket of width <= ``width`` around the root of ``lam**s + 2 gam**s = 1``."""
    lam, gam, width = as_fraction(lam), as_fraction(gam), as_fraction(width)
    if not (0 < lam < 1 and 0 < gam < 1):
        raise ValueError("need 0 < lam, gam < 1")

    def g(s):
        v = rational_power(lam, s) + 2 * rational_power(gam, s) - 1
        return v if isinstance(v, GradedScalar) else GradedScalar(v)

    at_one = lam + 2 * gam - 1
    if at_one > 0:
        raise NoRootInUnitInterval(f"lam + 2 gam = {lam + 2 * gam} > 1")
    if at_one == 0:
        return Fraction(1), Fraction(1)
    lo, hi = Fraction(0), Fraction(1)
    while hi - lo > width:
        mid = (lo + hi) / 2
        try:
            sign = g(mid).compare(0)
        except GameError:
            # the root sits (numerically) at mid: bracket it tightly
            h = width / 4
            if g(mid - h).compare(0) > 0 and g(mid + h).compare(0) < 0:
                return mid - h, mid + h
            raise
        if sign > 0:
            lo = mid
        else:
            hi = mid
    return lo, hi
