"""Playgrounds, balls, scalars and splitting structures.

Two playgrounds are supported: the real line (balls are closed intervals)
and the one-sided binary shift (balls are cylinders).  All geometry is
done in exact rationals; only expressions with non-integer exponents go
through interval enclosures (:class:`GradedScalar`).
"""
from __future__ import annotations

import contextlib
import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence, Union

import mpmath
from mpmath import iv

from .errors import NonPositiveScale, NotInU, NumericallyAmbiguous

ExactScalar = Fraction
Number = Union[int, Fraction]

DEFAULT_PRECISION = 128


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings to Fraction.  Floats are refused."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"refusing inexact scalar {x!r}; pass a Fraction")


# ---------------------------------------------------------------------------
# interval enclosures


@contextlib.contextmanager
def working_precision(bits: int):
    """Temporarily set the binary precision used by GradedScalar arithmetic."""
    old = iv.prec
    iv.prec = bits
    try:
        yield
    finally:
        iv.prec = old


iv.prec = DEFAULT_PRECISION


def _iv_from(x) -> "iv.mpf":
    if isinstance(x, GradedScalar):
        return x.enclosure
    x = as_fraction(x)
    return iv.mpf(x.numerator) / iv.mpf(x.denominator)


class GradedScalar:
    """Directed-rounding enclosure ``lower <= value <= upper``.

    Arithmetic only ever widens the interval.  Comparisons answer True or
    False when the enclosures are disjoint and raise
    :class:`NumericallyAmbiguous` otherwise.
    """

    __slots__ = ("enclosure",)

    def __init__(self, value):
        self.enclosure = _iv_from(value)

    @classmethod
    def _wrap(cls, enclosure) -> "GradedScalar":
        obj = cls.__new__(cls)
        obj.enclosure = enclosure
        return obj

    @property
    def lower(self) -> mpmath.mpf:
        return mpmath.mpf(self.enclosure.a)

    @property
    def upper(self) -> mpmath.mpf:
        return mpmath.mpf(self.enclosure.b)

    @property
    def width(self) -> mpmath.mpf:
        return self.upper - self.lower

    def __add__(self, other):
        return GradedScalar._wrap(self.enclosure + _iv_from(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GradedScalar._wrap(self.enclosure - _iv_from(other))

    def __rsub__(self, other):
        return GradedScalar._wrap(_iv_from(other) - self.enclosure)

    def __mul__(self, other):
        return GradedScalar._wrap(self.enclosure * _iv_from(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return GradedScalar._wrap(self.enclosure / _iv_from(other))

    def __rtruediv__(self, other):
        return GradedScalar._wrap(_iv_from(other) / self.enclosure)

    def __pow__(self, exponent):
        return GradedScalar._wrap(self.enclosure ** _iv_from(exponent))

    def log(self) -> "GradedScalar":
        return GradedScalar._wrap(iv.log(self.enclosure))

    def overlaps(self, x) -> bool:
        """True unless the enclosure is certainly disjoint from ``x``."""
        other = _iv_from(x)
        return not (self.enclosure.b < other.a or other.b < self.enclosure.a)

    def compare(self, other) -> int:
        """-1, 0 or 1; raises NumericallyAmbiguous when enclosures overlap.

        Two enclosures that are both single exact points and equal compare 0.
        """
        o = _iv_from(other)
        s = self.enclosure
        if s.b < o.a:
            return -1
        if o.b < s.a:
            return 1
        if s.a == s.b == o.a == o.b:
            return 0
        raise NumericallyAmbiguous(f"enclosure {s} overlaps {o}")

    def __le__(self, other):
        return self.compare(other) <= 0

    def __lt__(self, other):
        return self.compare(other) < 0

    def __ge__(self, other):
        return self.compare(other) >= 0

    def __gt__(self, other):
        return self.compare(other) > 0

    def __float__(self):
        return float(self.enclosure.mid)

    def __repr__(self):
        return f"GradedScalar([{mpmath.nstr(self.lower, 20)}, {mpmath.nstr(self.upper, 20)}])"

    def text(self, digits: int = 25) -> str:
        return f"[{mpmath.nstr(self.lower, digits)},{mpmath.nstr(self.upper, digits)}]"


def rational_power(base, exponent) -> Union[Fraction, GradedScalar]:
    """``base ** exponent``; exact when the exponent is an integer."""
    base, exponent = as_fraction(base), as_fraction(exponent)
    if exponent.denominator == 1:
        e = exponent.numerator
        if e < 0 and base == 0:
            raise ZeroDivisionError("0 to a negative power")
        return base ** e
    if base < 0:
        raise ValueError("non-integer power of a negative number")
    if base == 0:
        return Fraction(0)
    return GradedScalar(base) ** GradedScalar(exponent)


def iroot(n: int, k: int) -> int:
    """Largest integer ``x`` with ``x ** k <= n`` (``n >= 0``)."""
    if n < 0 or k < 1:
        raise ValueError("iroot needs n >= 0 and k >= 1")
    if n < 2:
        return n
    x = 1 << ((n.bit_length() + k - 1) // k)
    while True:
        y = ((k - 1) * x + n // x ** (k - 1)) // k
        if y >= x:
            break
        x = y
    while x ** k > n:
        x -= 1
    while (x + 1) ** k <= n:
        x += 1
    return x


_EXACT_BIT_LIMIT = 1 << 20


def pow_compare(x, base, exponent) -> int:
    """Sign of ``x - base ** exponent`` for rationals ``x >= 0``, ``base > 0``.

    Decided exactly by raising both sides to the exponent's denominator.
    Falls back to enclosures (and may raise NumericallyAmbiguous) only when
    the integers involved would be enormous.
    """
    x, base, exponent = as_fraction(x), as_fraction(base), as_fraction(exponent)
    if x < 0 or base <= 0:
        raise ValueError("pow_compare needs x >= 0 and base > 0")
    p, q = exponent.numerator, exponent.denominator
    size = q * max(x.numerator.bit_length(), x.denominator.bit_length()) + \
        abs(p) * max(base.numerator.bit_length(), base.denominator.bit_length())
    if size > _EXACT_BIT_LIMIT:
        return GradedScalar(x).compare(GradedScalar(base) ** GradedScalar(exponent))
    lhs = x ** q
    rhs = base ** p
    return (lhs > rhs) - (lhs < rhs)


def floor_pow(base, exponent) -> int:
    """``floor(base ** exponent)`` computed exactly for ``base > 0``."""
    base, exponent = as_fraction(base), as_fraction(exponent)
    p, q = exponent.numerator, exponent.denominator
    value = base ** p
    k = iroot(value.numerator // value.denominator, q)
    return k


def power_sum_le(bases: Iterable[Number], exponent, bound_base) -> tuple[bool, str]:
    """Decide ``sum(b**c for b in bases) <= bound_base**c``.

    Exact when ``c`` is an integer, otherwise through enclosures.  Returns the
    verdict and a textual evidence string.  Raises NumericallyAmbiguous if the
    enclosures cannot separate the two sides.
    """
    exponent = as_fraction(exponent)
    bases = [as_fraction(b) for b in bases]
    bound_base = as_fraction(bound_base)
    distinct = set(bases) - {Fraction(0)}
    if len(distinct) == 1 and exponent > 0 and exponent.denominator != 1 and bound_base > 0:
        # N copies of r: N * r^c <= B^c  iff  N <= (B / r)^c, decided exactly
        (r,) = distinct
        count = sum(1 for b in bases if b)
        ok = pow_compare(count, bound_base / r, exponent) <= 0
        return ok, f"{count} * {r}^{exponent} <= {bound_base}^{exponent} (exact)"
    terms = [rational_power(b, exponent) for b in bases]
    rhs = rational_power(bound_base, exponent)
    if all(isinstance(t, Fraction) for t in terms) and isinstance(rhs, Fraction):
        lhs = sum(terms, Fraction(0))
        return lhs <= rhs, f"{lhs} <= {rhs}"
    lhs = GradedScalar(0)
    for t in terms:
        lhs = lhs + t
    rhs_g = rhs if isinstance(rhs, GradedScalar) else GradedScalar(rhs)
    verdict = lhs.compare(rhs_g) <= 0
    return verdict, f"{lhs.text()} <= {rhs_g.text()}"


# ---------------------------------------------------------------------------
# balls


class Space(enum.Enum):
    REAL = "R"
    SHIFT = "S"


@dataclass(frozen=True, order=False)
class Ball:
    """A closed ball identified by its (center, radius) pair.

    On the real line the center is a Fraction and the ball is the interval
    ``[center - radius, center + radius]``.  On the shift the center is a
    finite bit word and the ball is the cylinder of that word, with radius
    ``2 ** -len(word)``.
    """

    space: Space
    center: Union[Fraction, str]
    radius: Fraction

    def __post_init__(self):
        if self.space is Space.SHIFT:
            if not isinstance(self.center, str) or set(self.center) - {"0", "1"}:
                raise ValueError(f"bad cylinder word {self.center!r}")
            if self.radius != Fraction(1, 2 ** len(self.center)):
                raise ValueError("cylinder radius must be 2^-len(word)")
        else:
            object.__setattr__(self, "center", as_fraction(self.center))
            object.__setattr__(self, "radius", as_fraction(self.radius))
            if self.radius <= 0:
                raise ValueError("radius must be positive")

    # constructors -------------------------------------------------------
    @staticmethod
    def interval(center, radius) -> "Ball":
        return Ball(Space.REAL, as_fraction(center), as_fraction(radius))

    @staticmethod
    def from_endpoints(lo, hi) -> "Ball":
        lo, hi = as_fraction(lo), as_fraction(hi)
        return Ball(Space.REAL, (lo + hi) / 2, (hi - lo) / 2)

    @staticmethod
    def cylinder(word: str) -> "Ball":
        return Ball(Space.SHIFT, word, Fraction(1, 2 ** len(word)))

    # geometry -------------------------------------------------------------
    @property
    def is_real(self) -> bool:
        return self.space is Space.REAL

    @property
    def word(self) -> str:
        if self.is_real:
            raise TypeError("real-line balls have no word")
        return self.center  # type: ignore[return-value]

    @property
    def lo(self) -> Fraction:
        return self.center - self.radius  # type: ignore[operator]

    @property
    def hi(self) -> Fraction:
        return self.center + self.radius  # type: ignore[operator]

    @property
    def diameter(self) -> Fraction:
        # in the ultrametric a cylinder's diameter equals its radius
        return 2 * self.radius if self.is_real else self.radius

    def _same_space(self, other: "Ball"):
        if self.space is not other.space:
            raise ValueError("balls live in different playgrounds")

    def contains(self, other: "Ball") -> bool:
        """Point-set containment ``other ⊆ self``."""
        self._same_space(other)
        if self.is_real:
            return self.lo <= other.lo and other.hi <= self.hi
        return other.word.startswith(self.word)

    def contains_point(self, x) -> bool:
        if self.is_real:
            x = as_fraction(x)
            return self.lo <= x <= self.hi
        return str(x).startswith(self.word)

    def meets(self, other: "Ball") -> bool:
        """Closed balls share at least one point."""
        self._same_space(other)
        if self.is_real:
            return self.lo <= other.hi and other.lo <= self.hi
        return self.word.startswith(other.word) or other.word.startswith(self.word)

    def meets_interior(self, other: "Ball") -> bool:
        """Intersection has nonempty interior (cylinders are open, so same as meets)."""
        self._same_space(other)
        if self.is_real:
            return self.lo < other.hi and other.lo < self.hi
        return self.meets(other)

    def center_distance(self, other: "Ball") -> Fraction:
        self._same_space(other)
        if self.is_real:
            return abs(self.center - other.center)  # type: ignore[operator]
        return shift_distance(self.word, other.word)

    def to_text(self) -> str:
        if self.is_real:
            c, r = self.center, self.radius
            return f"R:{c.numerator}/{c.denominator}:{r.numerator}/{r.denominator}"
        return f"S:{self.word}"

    def __str__(self):
        if self.is_real:
            return f"[{self.lo}, {self.hi}]"
        return f"[{self.word}]"


def parse_ball(text: str) -> Ball:
    """Inverse of :meth:`Ball.to_text`."""
    text = text.strip()
    if text.startswith("S:"):
        return Ball.cylinder(text[2:])
    if text.startswith("R:"):
        parts = text[2:].split(":")
        if len(parts) != 2:
            raise ValueError(f"malformed ball {text!r}")
        return Ball.interval(Fraction(parts[0]), Fraction(parts[1]))
    raise ValueError(f"malformed ball {text!r}")


def shift_distance(x: str, y: str) -> Fraction:
    """Ultrametric ``2 ** -k`` where k is the first index at which the words differ.

    Finite words are read as padded with zeros, so the distance is defined
    for words of any length.
    """
    n = max(len(x), len(y))
    x, y = x.ljust(n, "0"), y.ljust(n, "0")
    for k, (a, b) in enumerate(zip(x, y)):
        if a != b:
            return Fraction(1, 2 ** k)
    return Fraction(0)


def scale_ball(b: Ball, kappa) -> Ball:
    """Same center, radius multiplied by ``kappa``.

    On the shift only scalings that land on another cylinder radius are
    representable: powers of two that do not exceed 1 / rad(b) and shrink
    to at most the word length (extending the word would need a choice).
    """
    kappa = as_fraction(kappa)
    if kappa <= 0:
        raise NonPositiveScale(f"scale factor {kappa} is not positive")
    if b.is_real:
        return Ball.interval(b.center, kappa * b.radius)
    if kappa == 1:
        return b
    k = _log2_exact(kappa)
    if k is None or k < 0 or k > len(b.word):
        raise ValueError(f"cannot scale cylinder {b.word!r} by {kappa}")
    return Ball.cylinder(b.word[: len(b.word) - k])


def _log2_exact(x: Fraction):
    if x.denominator == 1 and x.numerator & (x.numerator - 1) == 0:
        return x.numerator.bit_length() - 1
    if x.numerator == 1 and x.denominator & (x.denominator - 1) == 0:
        return -(x.denominator.bit_length() - 1)
    return None


# ---------------------------------------------------------------------------
# splitting structures


class SplittingStructure:
    """A splitting rule ``split(B, u)`` with allowed set U and count ``f``."""

    space: Space
    name = "abstract"

    def in_U(self, u: int) -> bool:  # noqa: N802
        raise NotImplementedError

    def f(self, u: int) -> int:
        raise NotImplementedError

    def _children(self, b: Ball, u: int) -> list[Ball]:
        raise NotImplementedError

    def split(self, b: Ball, u: int) -> list[Ball]:
        if not isinstance(u, int) or not self.in_U(u):
            raise NotInU(f"{u} is not in U for the {self.name} structure")
        if b.space is not self.space:
            raise ValueError("ball is not in this structure's playground")
        return self._children(b, u)

    def child_index(self, parent: Ball, child: Ball, u: int):
        """Position of ``child`` in ``split(parent, u)``, or None if it is not a child."""
        for i, c in enumerate(self.split(parent, u)):
            if c == child:
                return i
        return None

    def U_upto(self, limit: int) -> list[int]:  # noqa: N802
        return [u for u in range(1, limit + 1) if self.in_U(u)]


class RealLineStructure(SplittingStructure):
    """Cut an interval into ``u`` equal closed subintervals; U = all positive integers."""

    space = Space.REAL
    name = "real-line"

    def in_U(self, u):
        return u >= 1

    def f(self, u):
        return u

    def _children(self, b, u):
        r = b.radius / u
        return [Ball.interval(b.lo + (2 * k + 1) * r, r) for k in range(u)]

    def child_index(self, parent, child, u):
        if not self.in_U(u):
            raise NotInU(str(u))
        if child.radius * u != parent.radius:
            return None
        k = (child.center - parent.lo - child.radius) / (2 * child.radius)
        if k.denominator != 1 or not 0 <= k < u:
            return None
        return int(k)

    def __eq__(self, other):
        return type(other) is type(self)

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return "RealLineStructure()"


class ShiftStructure(SplittingStructure):
    """Extend a cylinder word by ``i`` symbols; U = powers of two."""

    space = Space.SHIFT
    name = "shift"

    def in_U(self, u):
        return u >= 1 and u & (u - 1) == 0

    def f(self, u):
        return u

    def _children(self, b, u):
        depth = u.bit_length() - 1
        return [Ball.cylinder(b.word + "".join(bits))
                for bits in itertools.product("01", repeat=depth)]

    def child_index(self, parent, child, u):
        if not self.in_U(u):
            raise NotInU(str(u))
        depth = u.bit_length() - 1
        w = child.word
        if len(w) != len(parent.word) + depth or not w.startswith(parent.word):
            return None
        tail = w[len(parent.word):]
        return int(tail, 2) if tail else 0

    def __eq__(self, other):
        return type(other) is type(self)

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return "ShiftStructure()"


REAL_LINE = RealLineStructure()
SHIFT = ShiftStructure()


def structure_for(b: Ball) -> SplittingStructure:
    return REAL_LINE if b.is_real else SHIFT


def descendants(s: SplittingStructure, b: Ball, generations: int, R: int) -> list[Ball]:
    """All balls of ``(1/R**generations){b}`` in canonical order."""
    return s.split(b, R ** generations)


# ---------------------------------------------------------------------------
# axiom checking


@dataclass(frozen=True)
class AxiomResult:
    axiom: str
    passed: bool
    witness: object = None


@dataclass(frozen=True)
class AxiomReport:
    results: tuple[AxiomResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def __getitem__(self, axiom: str) -> AxiomResult:
        for r in self.results:
            if r.axiom == axiom:
                return r
        raise KeyError(axiom)

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            status = "pass" if r.passed else "FAIL"
            extra = "" if r.witness is None else f" witness={r.witness}"
            out.append(f"{r.axiom}: {status}{extra}")
        return out


def _pairs(items: Sequence) -> Iterator[tuple]:
    return itertools.combinations(items, 2)


def verify_splitting_axioms(s: SplittingStructure, b: Ball, u: int, v: int) -> AxiomReport:
    """Check the count, separation and composition axioms at one ball.

    Also reports whether every child sits inside ``b`` with radius rad(b)/u.
    Failures carry a witness (a ball, a pair of balls, or a multiset diff).
    """
    results = []
    kids = s.split(b, u)

    results.append(AxiomResult("S1", len(kids) == s.f(u),
                               None if len(kids) == s.f(u) else (len(kids), s.f(u))))

    sep = 2 * b.radius / u
    bad_pair = next(((x, y) for x, y in _pairs(kids) if x.center_distance(y) < sep), None)
    results.append(AxiomResult("S2", bad_pair is None, bad_pair))

    direct = sorted(s.split(b, u * v), key=Ball.to_text)
    composed = sorted((g for k in kids for g in s.split(k, v)), key=Ball.to_text)
    diff = None
    if direct != composed:
        diff = (sorted(set(direct) - set(composed), key=Ball.to_text),
                sorted(set(composed) - set(direct), key=Ball.to_text))
    results.append(AxiomResult("S3", diff is None, diff))

    stray = next((k for k in kids if not b.contains(k) or k.radius * u != b.radius), None)
    results.append(AxiomResult("children", stray is None, stray))
    return AxiomReport(tuple(results))
