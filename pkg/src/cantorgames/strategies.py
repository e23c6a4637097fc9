"""Constructive strategies and the constructions they induce.

Every strategy here is a :class:`Strategy`: a pure callable from a
transcript prefix to a move, carrying a ``metadata`` dict that the engine
copies into transcript headers.  Strategies never bypass the referee; the
moves they emit are intended to be legal and the referee decides.
"""
from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

from .cantor import (BudgetTable, CantorConstruction, LazyConstruction, extend_level,
                     level_cells_meeting, new_construction, survivors_meeting)
from .engine import (AliceBall, AliceCollection, AliceRemovalSet, BobBall, GameConfig,
                     Transcript, Variant, VerdictKind, coerce_move)
from .errors import (BadCountExceeded, BudgetViolated, CoverBudgetViolated,
                     CoverSampleInsufficient, DepthExhausted, FirstIndexTooSmall,
                     GameError, GapTooSmall, GateFailed, NoEta, NoScaleIndex, NotACover,
                     ParameterGateFailed, ParameterMismatch, StrategyFault)
from .fractal import separated_packing
from .space import (SHIFT, Ball, GradedScalar, as_fraction, floor_pow, pow_compare,
                    rational_power, scale_ball)


class Strategy:
    """Pure map from transcript prefixes to moves, plus audit metadata."""

    def __init__(self, respond: Callable[[Transcript], object], name: str, **metadata):
        self.respond = respond
        self.__name__ = name
        self.metadata = {k: v for k, v in metadata.items() if v is not None}

    def __call__(self, t: Transcript):
        return self.respond(t)

    def __repr__(self):
        return f"Strategy({self.__name__})"


class PositionalStrategy(Strategy):
    """A strategy that only looks at Bob's last ball."""

    def __init__(self, respond0: Callable[[Ball], Ball], name: str = "positional", **metadata):
        self.respond0 = respond0
        super().__init__(lambda t: respond0(t.current_ball), name, **metadata)


def _ball_of(move) -> Ball:
    return move if isinstance(move, Ball) else move.ball


def _raw_transcript(config: GameConfig, moves: Sequence) -> Transcript:
    """Transcript assembled without refereeing (used to re-base sub-games)."""
    return Transcript(config, tuple(moves), ((),) * len(moves))


def _cmp_values(x, y) -> int:
    if isinstance(x, Fraction) and isinstance(y, Fraction):
        return (x > y) - (x < y)
    gx = x if isinstance(x, GradedScalar) else GradedScalar(x)
    return gx.compare(y)


def _power_sum(values: Iterable[Fraction], exponent: Fraction):
    total = Fraction(0)
    for v in values:
        total = total + rational_power(v, exponent)
    return total


# ---------------------------------------------------------------------------
# Schmidt games: parameter lifting


def lifted_parameters(alpha0, beta0) -> tuple[Fraction, Fraction]:
    """The inner game parameters used to lift a strategy to ``(alpha0, beta0)``."""
    a0, b0 = as_fraction(alpha0), as_fraction(beta0)
    if not (0 < a0 < 1 and 0 < b0 < 1):
        raise ValueError("alpha0 and beta0 must lie in (0, 1)")
    p = a0 * b0
    alpha = a0 * (1 - p * p - b0 * (1 - a0)) / (1 - p * p - p * (1 - a0))
    if alpha <= 0:
        raise ParameterMismatch(f"lifted alpha {alpha} is not positive")
    beta = p * p / alpha
    if not 0 < beta < 1:
        raise ParameterMismatch(f"lifted beta {beta} is outside (0, 1)")
    return alpha, beta


def lift_schmidt_strategy(s: Callable, alpha0, beta0, alpha=None, beta=None) -> Strategy:
    """Turn an Alice strategy for the lifted ``(alpha, beta)`` game into one for ``(alpha0, beta0)``.

    Even Bob moves are mirrored into the inner game with the same centre and
    radius scaled so that ``(1 - alpha) rho' = (1 - alpha0) rho``; Alice then
    copies the inner reply's centre.  After odd Bob moves she simply
    recentres on Bob's ball.
    """
    alpha0, beta0 = as_fraction(alpha0), as_fraction(beta0)
    want_a, want_b = lifted_parameters(alpha0, beta0)
    if alpha is not None and (as_fraction(alpha), as_fraction(beta)) != (want_a, want_b):
        raise ParameterMismatch(f"supplied ({alpha}, {beta}) differ from ({want_a}, {want_b})")
    inner_cfg = GameConfig.schmidt(want_a, want_b)
    stretch = (1 - alpha0) / (1 - want_a)

    @functools.lru_cache(maxsize=None)
    def inner(evens: tuple) -> Transcript:
        # inner transcript ending with Bob's mirrored move
        b = evens[-1]
        mirrored = BobBall(Ball.interval(b.center, stretch * b.radius))
        if len(evens) == 1:
            t = Transcript(inner_cfg)
        else:
            t = inner(evens[:-1])
            t = t.append(coerce_move(inner_cfg, "alice", s(t)))
        t = t.append(mirrored)
        if t.finished:
            raise GameError(f"mirrored inner move rejected: {t.final}")
        return t

    def respond(t: Transcript):
        bobs = t.bob_balls()
        last = bobs[-1]
        if (len(bobs) - 1) % 2:
            return AliceBall(Ball.interval(last.center, alpha0 * last.radius))
        reply = _ball_of(s(inner(tuple(bobs[0::2]))))
        return AliceBall(Ball.interval(reply.center, alpha0 * last.radius))

    strat = Strategy(respond, "lifted_schmidt", alpha0=alpha0, beta0=beta0,
                     alpha=want_a, beta=want_b)
    strat.inner_transcript = lambda t: inner(tuple(t.bob_balls()[0::2]))
    return strat


# ---------------------------------------------------------------------------
# Cantor game from a Cantor construction


@dataclass(frozen=True)
class CantorGameParams:
    eps0: Fraction
    eta: Fraction
    eps1: Fraction
    eps2: Fraction
    ell: int
    delta: Fraction
    R: int
    removals_per_turn: int
    ell_certified: bool = True

    def verify(self) -> dict:
        """Re-check both ell inequalities with enclosures; returns name -> bool."""
        base = GradedScalar(self.R)
        d = self.delta
        lhs1 = (base ** (d * (1 - self.eps2)) / (self.removals_per_turn + 1)) ** self.ell
        lhs2 = base ** (-self.ell * d * self.eta / 2)
        return {"contraction": lhs1 < Fraction(1, 2), "tail": lhs2 < Fraction(1, 3)}


def cantor_game_params(eps0, R: int, delta=1, max_halvings: int = 64,
                       max_ell: int = 10_000) -> CantorGameParams:
    """Canonical ``eta`` (largest ``eps0 / 2**k``) and the least admissible ``ell``.

    All inequalities are decided by exact rational-power comparison.
    """
    eps0, delta = as_fraction(eps0), as_fraction(delta)
    if not 0 < eps0 <= 1:
        raise ValueError("eps0 must lie in (0, 1]")
    if R < 2 or delta <= 0:
        raise ValueError("need R >= 2 and delta > 0")
    per_turn = floor_pow(R, delta * (1 - eps0))
    eta = None
    for k in range(1, max_halvings + 1):
        cand = eps0 / 2 ** k
        if pow_compare(per_turn + 1, R, delta * (1 - eps0 + cand)) > 0:
            eta = cand
            break
    if eta is None:
        raise NoEta(f"no eta = eps0/2^k (k <= {max_halvings}) satisfies the strict bound")
    eps1, eps2 = eps0 - eta / 2, eps0 - eta
    for ell in range(1, max_ell + 1):
        # (R^{d(1-eps2)} / (per_turn + 1))^ell < 1/2  and  R^{-ell d eta / 2} < 1/3
        first = pow_compare(Fraction((per_turn + 1) ** ell, 2), R, delta * (1 - eps2) * ell) > 0
        second = pow_compare(3, R, ell * delta * eta / 2) < 0
        if first and second:
            return CantorGameParams(eps0, eta, eps1, eps2, ell, delta, R, per_turn)
    raise NoEta(f"no ell <= {max_ell} satisfies both inequalities")


def _modulus_exponent(big: int, R: int) -> Optional[int]:
    e, v = 0, 1
    while v < big:
        v *= R
        e += 1
    return e if v == big else None


def cantor_game_alice_from_construction(c: CantorConstruction, p: CantorGameParams,
                                        pad: bool = False) -> Strategy:
    """Alice for the Cantor game at modulus ``p.R`` that steers Bob into ``c``.

    Each child of Bob's ball is scored by a potential that weights the
    construction's removed balls meeting it by ``W ** (n + 1)`` with
    ``W = R ** (-ell * delta * (1 - eps2))``; the children with the largest
    positive potential are removed (ties by canonical order).  With ``pad``
    the removal set is filled up to the allowance with the lowest-order
    remaining children.
    """
    R = p.R
    ell = _modulus_exponent(c.R, R)
    if ell is None:
        raise ParameterMismatch(f"construction modulus {c.R} is not a power of {R}")
    if pow_compare(c.structure.f(R), R, p.delta) != 0:
        raise ParameterMismatch(f"f({R}) = {c.structure.f(R)} is not {R}^{p.delta}")
    if ell != p.ell:
        p = replace(p, ell=ell, ell_certified=False)
    weight = rational_power(R, -ell * p.delta * (1 - p.eps2))
    records = [(m, n, a) for (m, n, _parent), balls in c.removals.items() for a in balls]
    budgets = c.budgets

    def counts(i: int, ball: Ball) -> tuple:
        top = i // ell
        hits: dict[int, int] = {}
        for m, n, a in records:
            if m <= top and a.meets_interior(ball):
                hits[n] = hits.get(n, 0) + 1
        return tuple(sorted(hits.items()))

    def value(cnt: tuple):
        total = Fraction(0)
        for n, k in cnt:
            total = total + k * weight ** (n + 1)
        return total

    def tail(i: int):
        """Upper bound for the part of the potential beyond the built stages."""
        top = i // ell
        if c.depth == float("inf"):
            return Fraction(0)
        band = budgets.band
        total = Fraction(0)
        for m in range(top + 1):
            if band is not None:
                for n in range(max(m, c.depth), m + band + 1):
                    total = total + budgets[m, n] * weight ** (n + 1)
            else:
                # geometric tail from the eps1 budget bound
                start = max(m, c.depth)
                rate = GradedScalar(R) ** (-ell * p.delta * p.eta / 2)
                first = GradedScalar(R) ** (ell * p.delta * ((start - m + 1) * (1 - p.eps1)
                                                             - (start + 1) * (1 - p.eps2)))
                total = total + first / (1 - rate)
        return total

    def phi(i: int, ball: Ball):
        """(truncated potential, tail bound) at turn ``i`` for ``ball``."""
        return value(counts(i, ball)), tail(i)

    def respond(t: Transcript):
        B = t.current_ball
        i = t.rounds
        if i + 1 > ell * c.depth:
            raise DepthExhausted(f"turn {i} needs level {i + 1}, construction covers {ell * c.depth}")
        kids = c.structure.split(B, R)
        scored = []
        for idx, child in enumerate(kids):
            cnt = counts(i, child)
            if cnt:
                scored.append((idx, child, cnt, value(cnt)))

        def order(x, y):
            if x[2] != y[2]:
                d = _cmp_values(y[3], x[3])
                if d:
                    return d
            return x[0] - y[0]

        scored.sort(key=functools.cmp_to_key(order))
        chosen = [child for _i, child, _c, _v in scored[:p.removals_per_turn]]
        if pad:
            for child in kids:
                if len(chosen) >= p.removals_per_turn:
                    break
                if child not in chosen:
                    chosen.append(child)
        return AliceRemovalSet(tuple(chosen))

    strat = Strategy(respond, "cantor_from_construction", eps0=p.eps0, eta=p.eta, eps1=p.eps1,
                     eps2=p.eps2, ell=ell, ell_certified=p.ell_certified, R=R,
                     removals_per_turn=p.removals_per_turn, pad=pad)
    strat.phi = phi
    strat.params = p
    return strat


# ---------------------------------------------------------------------------
# potential game from a Cantor construction, and back


def scale_indices(rho: Fraction, R: int, beta: Fraction, radius: Fraction) -> list[int]:
    """All ``m >= 0`` with ``beta * radius < rho / R**m <= radius``."""
    out = []
    m, size = 0, rho
    while size > beta * radius:
        if size <= radius:
            out.append(m)
        m += 1
        size = size / R
    if not out:
        raise NoScaleIndex(f"no grid scale in ({beta * radius}, {radius}]")
    return out


def _removals_below(c, m: int, B: Ball) -> list[Ball]:
    band = c.budgets.band
    if isinstance(c, LazyConstruction):
        if band is None:
            raise ValueError("a lazy construction needs a finite budget band")
        hi = m + band
    else:
        hi = c.depth - 1 if band is None else m + band
        if hi > c.depth - 1:
            raise DepthExhausted(f"removals up to stage {hi} needed, built {c.depth - 1}")
    return [a for n in range(m, hi + 1) for a in c.removed(m, n, B)]


def potential_alice_from_cantor(c, cexp, beta, mode="def23", eps=None) -> Strategy:
    """Alice for the ``(cexp, beta)`` potential game deleting the construction's removals.

    On Bob's ball ``D`` every grid level ``m`` with
    ``beta * rad(D) < R**-m * rho <= rad(D)`` that has not been handled on an
    earlier turn is processed: all removals made on behalf of level-``m``
    survivors meeting ``D`` are deleted if they meet ``D``.  ``mode`` is
    ``"def23"`` or ``("rich", y)``; it only affects the exponent check.
    """
    cexp, beta = as_fraction(cexp), as_fraction(beta)
    if mode != "def23" and not (isinstance(mode, tuple) and mode[0] == "rich"):
        raise ValueError(f"unknown mode {mode!r}")
    if eps is not None:
        eps = as_fraction(eps)
        if mode == "def23":
            delta = Fraction(1)
            c0 = delta * (1 - eps)
        else:
            c0 = 1 - eps
        if cexp <= c0:
            raise ValueError(f"exponent {cexp} must exceed {c0}")
    rho, R = c.b0.radius, c.R

    def indices(D: Ball) -> list[int]:
        try:
            return scale_indices(rho, R, beta, D.radius)
        except NoScaleIndex:
            return []

    def respond(t: Transcript):
        bobs = t.bob_balls()
        D = bobs[-1]
        handled = {m for prev in bobs[:-1] for m in indices(prev)}
        deleted = {b for mv in t.alice_moves() for b in mv.balls}
        out: list[Ball] = []
        for m in indices(D):
            if m in handled:
                continue
            for B in survivors_meeting(c, m, D):
                for a in _removals_below(c, m, B):
                    if a.meets(D) and a not in deleted and a not in out:
                        out.append(a)
        return AliceCollection(tuple(out))

    mode_text = mode if mode == "def23" else f"rich(y={mode[1]})"
    return Strategy(respond, "potential_from_cantor", c=cexp, beta=beta, mode=mode_text, R=R)


def cantor_from_potential_alice(s: Callable, eps, R: int, q: int, depth: int,
                                b0: Optional[Ball] = None) -> CantorConstruction:
    """Cantor construction on the shift read off a potential-game Alice.

    Bob is simulated on every survivor history descending ``q`` grid levels
    per move.  Alice's deletions on a level-``m`` ball are bucketed by radius
    bracket ``[R**-(n+1) rho, R**-n rho)`` and every level-``(n + 1)`` cell
    below the ball that meets one of them is removed at stage ``n``.
    Budgets are ``floor(R ** (c (n - m + 1)))`` with ``c = 1 - eps``.
    """
    eps = as_fraction(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if q < 1 or depth < 0:
        raise ValueError("need q >= 1 and depth >= 0")
    b0 = b0 or Ball.cylinder("")
    if b0.is_real:
        raise ValueError("this construction enumerates the shift only")
    cexp = 1 - eps
    beta = Fraction(1, R ** q)
    cfg = GameConfig.potential(cexp, beta)
    rho = b0.radius
    budgets = BudgetTable(rule=lambda m, n: floor_pow(R, cexp * (n - m + 1)))
    cache: dict = {}
    step = R ** q

    def history(B: Ball, level: int) -> Transcript:
        if B in cache:
            return cache[B]
        if level == 0:
            t = Transcript(cfg).append(BobBall(B))
        else:
            parent = Ball.cylinder(B.word[:len(B.word) - (step.bit_length() - 1)])
            t = history(parent, level - q)
            if t.finished:
                cache[B] = t
                return t
            t = t.append(BobBall(B))
        if not t.finished:
            try:
                move = s(t)
            except StrategyFault:
                raise
            except Exception as exc:  # noqa: BLE001
                raise StrategyFault("alice", len(t.moves), exc) from exc
            t2 = t.append(coerce_move(cfg, "alice", move))
            if t2.final is not None and t2.final.kind is VerdictKind.ILLEGAL:
                raise StrategyFault("alice", len(t.moves), GameError(t2.final.reason))
            t = t2
        cache[B] = t
        return t

    def deletions(B: Ball, level: int) -> tuple:
        t = history(B, level)
        k = level // q
        moves = t.alice_moves()
        return moves[k].balls if k < len(moves) else ()

    def bracket(r: Fraction) -> int:
        n = 0
        while r < rho / R ** (n + 1):
            n += 1
        return n

    c = new_construction(b0, R, budgets, SHIFT)
    for n in range(depth):
        recs = {}
        for m in range(0, n + 1, q):
            for B in c.levels[m]:
                hit = []
                u = R ** (n - m + 1)
                for C in deletions(B, m):
                    if C.radius > rho or bracket(C.radius) != n:
                        continue
                    for cell in level_cells_meeting(b0, R, n + 1, C):
                        if SHIFT.child_index(B, cell, u) is not None and cell not in hit:
                            hit.append(cell)
                if hit:
                    recs[(m, B)] = hit
        c = extend_level(c, recs)
    return c


# ---------------------------------------------------------------------------
# very strong Schmidt game from a potential strategy


def schmidt_alice_from_potential(s: Callable, c, alpha, beta, q: int) -> Strategy:
    """Alice for the very strong ``(alpha, beta)`` game on the real line.

    The potential strategy ``s`` plays the ``(c, (alpha beta)**q)`` game
    against Bob's moves ``B_0, B_q, B_2q, ...``.  Each turn Alice picks, among
    a ``3 r``-separated packing of Bob's ball, the ball minimising the sum of
    ``diam(C) ** c`` over deletions ``C`` meeting it (leftmost on ties).
    """
    c, alpha, beta = as_fraction(c), as_fraction(alpha), as_fraction(beta)
    ab = alpha * beta
    eps = alpha * alpha * beta
    if not (0 < alpha <= Fraction(1, 2) and 0 < beta < 1 and c > 0 and q >= 1):
        raise ParameterGateFailed("need 0 < alpha <= 1/2, 0 < beta < 1, c > 0, q >= 1")
    # packing gives at least 1/(3 alpha) candidates, so 6 alpha < (alpha beta)^c halves phi
    if pow_compare(6 * alpha, ab, c) >= 0:
        raise ParameterGateFailed(f"6*alpha = {6 * alpha} is not below ({ab})^{c}")
    # a fresh deletion costs at most ((alpha beta)^q / eps)^c of the allowance
    if pow_compare(Fraction(1, 2), ab ** q / eps, c) < 0:
        raise ParameterGateFailed(f"(({ab})^{q} / {eps})^{c} exceeds 1/2")
    sub_cfg = GameConfig.potential(c, ab ** q)

    @functools.lru_cache(maxsize=None)
    def sub(bobs: tuple) -> Transcript:
        t = Transcript(sub_cfg) if len(bobs) == 1 else sub(bobs[:-1])
        if t.finished:
            return t
        t = t.append(BobBall(bobs[-1]))
        if not t.finished:
            t = t.append(coerce_move(sub_cfg, "alice", s(t)))
        return t

    def deletions(bobs) -> list[Ball]:
        t = sub(tuple(bobs[0::q]))
        return [b for mv in t.alice_moves() for b in mv.balls]

    def phi_value(A: Ball, dels) -> tuple:
        hit = tuple(sorted(C.diameter for C in dels if C.meets(A)))
        return hit, _power_sum(hit, c)

    def respond(t: Transcript):
        bobs = t.bob_balls()
        B = bobs[-1]
        dels = deletions(bobs)
        best = None
        for cand in separated_packing(B, alpha):
            key, val = phi_value(cand, dels)
            if best is None:
                best = (cand, key, val)
                continue
            if key != best[1] and _cmp_values(val, best[2]) < 0:
                best = (cand, key, val)
        return AliceBall(best[0])

    def phi(t: Transcript, A: Ball):
        return phi_value(A, deletions(t.bob_balls()))[1]

    strat = Strategy(respond, "schmidt_from_potential", c=c, alpha=alpha, beta=beta, q=q,
                     eps=eps, gamma=Fraction(1, 6))
    strat.phi = phi
    strat.eps = eps
    return strat


# ---------------------------------------------------------------------------
# intersection and role swapping


def intersect_potential_strategies(s1: Callable, s2: Callable, beta) -> Strategy:
    """Alice for ``(c, beta)`` built from two ``(c, beta**2)`` strategies.

    After even-indexed Bob moves ``s1`` answers the sub-game of even moves;
    after odd-indexed ones ``s2`` answers the sub-game of odd moves.  The
    sub-transcripts are re-based without refereeing.
    """
    beta = as_fraction(beta)

    def respond(t: Transcript):
        bobs = [BobBall(b) for b in t.bob_balls()]
        alice = t.alice_moves()
        parity = (len(bobs) - 1) % 2
        sub_bobs = bobs[parity::2]
        sub_alice = alice[parity::2]
        moves = []
        for j, b in enumerate(sub_bobs):
            moves.append(b)
            if j < len(sub_alice):
                moves.append(sub_alice[j])
        sub_cfg = replace(t.config, beta=t.config.beta ** 2)
        s = s1 if parity == 0 else s2
        return coerce_move(sub_cfg, "alice", s(_raw_transcript(sub_cfg, moves)))

    return Strategy(respond, "intersection", beta=beta,
                    first=getattr(s1, "__name__", "s1"), second=getattr(s2, "__name__", "s2"))


def bob_from_very_strong_alice(s: Callable, alpha, beta, b0: Optional[Ball] = None) -> Strategy:
    """Bob for the weak ``(beta, alpha)`` game replaying a very strong ``(alpha, beta)`` Alice.

    The weak game's Alice moves become Bob moves of a virtual very strong
    game and the virtual Alice replies are played as Bob's balls.
    """
    alpha, beta = as_fraction(alpha), as_fraction(beta)
    vs_cfg = GameConfig.schmidt(alpha, beta, Variant.VERY_STRONG)
    opening = b0 or Ball.from_endpoints(0, 1)

    def respond(t: Transcript):
        if not t.moves:
            return BobBall(opening)
        theirs = [m.ball for m in t.moves[1::2]]
        ours = [m.ball for m in t.moves[2::2]]
        moves = []
        for j, a in enumerate(theirs):
            moves.append(BobBall(a))
            if j < len(ours):
                moves.append(AliceBall(ours[j]))
        return BobBall(_ball_of(s(_raw_transcript(vs_cfg, moves))))

    return Strategy(respond, "bob_from_very_strong", alpha=alpha, beta=beta)


# ---------------------------------------------------------------------------
# two-interval subcovers and the half-winning construction


@dataclass(frozen=True)
class Subcover:
    balls: tuple
    gap: Optional[tuple]
    grid_gap: Optional[tuple]
    grid_size: int

    @property
    def left(self) -> Ball:
        return self.balls[0]

    @property
    def right(self) -> Ball:
        return self.balls[-1]


def first_uncovered(b: Ball, cover: Sequence[Ball]) -> Optional[Fraction]:
    """A point of ``b`` outside the union of the closed intervals, or None."""
    segs = sorted((c.lo, c.hi) for c in cover if c.meets(b))
    reach = None
    for lo, hi in segs:
        if reach is None:
            if lo > b.lo:
                return b.lo
            reach = hi
        elif lo > reach:
            return (reach + lo) / 2
        else:
            reach = max(reach, hi)
        if reach >= b.hi:
            return None
    return b.lo if reach is None else b.hi


def _grid_subcover(b: Ball, cover: Sequence[Ball], eps: Fraction, missing=NotACover):
    """Grid selection on ``b``; returns (Subcover, index of each chosen ball in ``cover``)."""
    r = b.radius
    if any(c.radius != r for c in cover):
        raise ValueError("cover intervals must have the radius of b")
    n = math.ceil(2 * r / eps)
    step = 2 * r / n
    order = sorted(range(len(cover)), key=lambda k: (cover[k].center, k))
    centers = [cover[k].center for k in order]
    picks = []
    for i in range(n + 1):
        x = b.lo + i * step
        pos = bisect.bisect_right(centers, x + r) - 1
        if pos < 0 or centers[pos] < x - r:
            raise missing(x, f"grid point {x} is not covered")
        # the right-most reaching interval; the lowest index among equal centres
        first = bisect.bisect_left(centers, centers[pos])
        picks.append(order[first])
    xn = b.hi
    j = next(i for i, k in enumerate(picks) if cover[k].contains_point(xn))
    if j == 0:
        return Subcover((cover[picks[0]],), None, None, n), (picks[0],)
    left, right = cover[picks[j - 1]], cover[picks[j]]
    gap = (left.hi, right.lo) if left.hi < right.lo else None
    grid_gap = (b.lo + (j - 1) * step, b.lo + j * step)
    return Subcover((left, right), gap, grid_gap, n), (picks[j - 1], picks[j])


def subcover_two(b: Ball, cover: Sequence[Ball], eps) -> Subcover:
    """At most two cover intervals covering ``b`` up to one open gap of length <= eps.

    The grid has ``n`` points with ``2 rad(b) / n <= eps``.  At each grid
    point the covering interval reaching furthest right is used.
    """
    eps = as_fraction(eps)
    if not b.is_real:
        raise ValueError("subcover_two works on intervals")
    if not 0 < eps < b.radius:
        raise ValueError("need 0 < eps < rad(b)")
    hole = first_uncovered(b, cover)
    if hole is not None:
        raise NotACover(hole)
    return _grid_subcover(b, list(cover), eps)[0]


@dataclass(frozen=True)
class FChain:
    """Bob balls ``B_0, ..., B_{n-1}`` consistent with a positional Alice ``F``."""

    balls: tuple
    strategy: Callable

    def check(self, R: int, survivor: Optional[Ball] = None) -> list[str]:
        """Radius-law and containment failures (empty when the chain is valid)."""
        F = getattr(self.strategy, "respond0", self.strategy)
        bad = []
        for k, B in enumerate(self.balls):
            A = F(B)
            if A.radius != B.radius / 2 or not B.contains(A):
                bad.append(f"F(B_{k}) is not a half-radius sub-ball")
            if k + 1 < len(self.balls):
                nxt = self.balls[k + 1]
                if nxt.radius != B.radius / R:
                    bad.append(f"rad(B_{k + 1}) != rad(B_{k}) / {R}")
                if not A.contains(nxt):
                    bad.append(f"B_{k + 1} is not inside F(B_{k})")
        if survivor is not None and self.balls:
            last = self.balls[-1]
            if last.radius != 2 * R * survivor.radius:
                bad.append("rad(B_last) != 2R rad(b)")
            if not scale_ball(F(last), 1 - Fraction(2, R)).contains(survivor):
                bad.append("b is not inside (1 - 2/R) F(B_last)")
        return bad


def cantor_from_half_winning(F: Callable, b0: Ball, R: int, depth: int,
                             with_chains: bool = False):
    """Local ``(b0, R, 10)`` construction from a positional Alice for the ``(1/2, 2/R)`` game.

    For each survivor ``b`` the family ``{F(B): rad B = 2 rad b, centre in b}``
    is sampled on an exact grid of pitch ``rad(b) / (4R)``, reduced to two
    intervals ``A_L, A_R`` by :func:`subcover_two`'s grid rule with
    ``eps = rad(b) / R``, and the children that meet the gap or are not inside
    one of ``(1 - 2/R) A_L``, ``(1 - 2/R) A_R`` are removed.
    """
    respond0 = getattr(F, "respond0", F)
    if not b0.is_real:
        raise ValueError("the half-winning construction lives on the real line")
    if R < 10 or depth < 0:
        raise ValueError("need R >= 10 and depth >= 0")
    shrink = 1 - Fraction(2, R)
    c = new_construction(b0, R, BudgetTable.diagonal(10))
    chains = {b0: FChain((), F)}
    for level in range(depth):
        recs = {}
        for b in c.levels[level]:
            r = b.radius
            pitch = r / (4 * R)
            bobs, family = [], []
            for k in range(8 * R + 1):
                Bp = Ball.interval(b.lo + k * pitch, 2 * r)
                A = respond0(Bp)
                if A.radius != r or not Bp.contains(A):
                    raise GameError(f"F({Bp}) = {A} is not a legal (1/2) reply")
                bobs.append(Bp)
                family.append(A)
            sub, picked = _grid_subcover(b, family, r / R, CoverSampleInsufficient)
            il, ir = picked[0], picked[-1]
            AL, AR = sub.left, sub.right
            BL, BR = bobs[il], bobs[ir]
            inner_l, inner_r = scale_ball(AL, shrink), scale_ball(AR, shrink)
            bad = []
            for child in c.structure.split(b, R):
                in_l, in_r = inner_l.contains(child), inner_r.contains(child)
                meets_gap = sub.gap is not None and child.lo < sub.gap[1] and child.hi > sub.gap[0]
                if meets_gap or not (in_l or in_r):
                    bad.append(child)
                    continue
                if in_l and in_r:
                    pick = BL if BL.center <= BR.center else BR
                else:
                    pick = BL if in_l else BR
                chains[child] = FChain(chains[b].balls + (pick,), F)
            if len(bad) > 10:
                raise BadCountExceeded(f"{len(bad)} bad children below {b}")
            if bad:
                recs[(level, b)] = bad
        c = extend_level(c, recs)
    if with_chains:
        alive = {b for level in c.levels for b in level}
        return c, {b: ch for b, ch in chains.items() if b in alive}
    return c


# ---------------------------------------------------------------------------
# covers deleted outright


def _strictly_below(radii: Sequence[Fraction], c: Fraction, bound: Fraction, factor: Fraction) -> bool:
    """Exact-when-possible test of ``sum r**c < factor * bound**c``."""
    radii = [r for r in radii if r]
    if not radii:
        return factor * bound > 0
    if len(set(radii)) == 1:
        # N r^c < factor B^c  iff  N / factor < (B / r)^c
        return pow_compare(len(radii) / factor, bound / radii[0], c) < 0
    lhs = _power_sum(radii, c)
    rhs = factor * rational_power(bound, c)
    return _cmp_values(lhs, rhs) < 0


def dolgopyat_alice(cover: Sequence[Ball], cexp, beta) -> Strategy:
    """Alice for the potential game on the shift avoiding orbits that enter ``cover``.

    With ``2**-ell <= beta < 2**(1-ell)``, the first Bob ball whose word length
    ``L`` satisfies ``(i+1) ell < L <= (i+2) ell`` is answered by the pull-backs
    ``T**-(i ell + j) C`` (``0 <= j < ell``) of the cover cylinders that meet it.
    """
    cexp, beta = as_fraction(cexp), as_fraction(beta)
    if not 0 < beta < 1 or cexp <= 0:
        raise ValueError("need 0 < beta < 1 and c > 0")
    cover = [b for b in cover]
    if any(b.is_real for b in cover):
        raise ValueError("cover must consist of cylinders")
    ell = 1
    while Fraction(1, 2 ** ell) > beta:
        ell += 1
    bound = beta / 2 ** (2 * ell)
    if not _strictly_below([b.radius for b in cover], cexp, bound, Fraction(1, ell)):
        raise CoverBudgetViolated(f"sum rad^{cexp} is not below ({bound})^{cexp} / {ell}")
    words = [b.word for b in cover]

    def bracket(length: int) -> int:
        return -(-length // ell) - 2

    def respond(t: Transcript):
        bobs = t.bob_balls()
        w = bobs[-1].word
        i = bracket(len(w))
        if i < 0 or any(bracket(len(b.word)) == i for b in bobs[:-1]):
            return AliceCollection(())
        out = []
        for j in range(ell):
            shift = i * ell + j
            head, rest = w[:shift], w[shift:]
            for v in words:
                if v.startswith(rest) or rest.startswith(v):
                    ball = Ball.cylinder(head + v)
                    if ball not in out:
                        out.append(ball)
        return AliceCollection(tuple(out))

    return Strategy(respond, "dolgopyat", c=cexp, beta=beta, ell=ell, cover=len(cover))


def first_turn_cover_alice(coverE: Sequence[Ball], cexp, beta, r0) -> Strategy:
    """Delete the whole cover on the first turn, nothing afterwards."""
    cexp, beta, r0 = as_fraction(cexp), as_fraction(beta), as_fraction(r0)
    cover = tuple(coverE)

    def check(r):
        lhs = _power_sum([b.diameter for b in cover], cexp)
        rhs = rational_power(beta * r, cexp)
        if _cmp_values(lhs, rhs) > 0:
            raise BudgetViolated(f"sum diam^{cexp} exceeds ({beta * r})^{cexp}")

    check(r0)

    def respond(t: Transcript):
        if len(t.moves) != 1:
            return AliceCollection(())
        r = t.current_ball.radius
        if r != r0:
            check(r)
        return AliceCollection(cover)

    return Strategy(respond, "first_turn_cover", c=cexp, beta=beta, r0=r0, size=len(cover))


# ---------------------------------------------------------------------------
# the IFS Bob


def _ifs_children(J: Ball, lam: Fraction, gam: Fraction) -> list[Ball]:
    r = J.radius
    return [Ball.interval(J.lo + gam * r, gam * r),
            Ball.interval(J.center, lam * r),
            Ball.interval(J.hi - gam * r, gam * r)]


def ifs_net_size(lam) -> int:
    """Least N with ``2 lam**N <= 1 - lam``: then ``{+-lam**q : q <= N}`` meets
    every closed interval of length ``1 - lam`` inside ``[-1, 1]``."""
    lam = as_fraction(lam)
    N = 1
    while 2 * lam ** N > 1 - lam:
        N += 1
    return N


def ifs_bob(alpha, lam, gam, b0: Optional[Ball] = None) -> Strategy:
    """Bob for the weak ``(alpha, lam**N gam)`` game staying inside IFS cylinders.

    The IFS ``u0(x) = lam x``, ``u1(x) = gam(x-1)+1``, ``u-1(x) = gam(x+1)-1``
    acts on Alice's first interval.  Bob answers each Alice interval with the
    ball of radius ``beta * rad(A)`` centred at the largest cylinder inside it.
    """
    alpha, lam, gam = as_fraction(alpha), as_fraction(lam), as_fraction(gam)
    failed = []
    if not (0 < lam < 1 and 0 < gam < 1 and 0 < alpha < 1):
        failed.append("0 < alpha, lam, gam < 1")
    if lam + lam * alpha < 1:
        failed.append(f"lam + lam*alpha = {lam + lam * alpha} < 1")
    if gam > alpha / 4:
        failed.append(f"gam = {gam} > alpha/4")
    if not failed:
        dim_sum = GradedScalar(lam) ** Fraction(1, 2) + 2 * GradedScalar(gam) ** Fraction(1, 2)
        if dim_sum.compare(1) > 0:
            failed.append(f"lam^(1/2) + 2 gam^(1/2) = {dim_sum.text(12)} > 1")
    if failed:
        raise GateFailed("; ".join(failed))
    N = ifs_net_size(lam)
    beta = lam ** N * gam
    opening = b0 or Ball.from_endpoints(-1, 1)

    def largest_inside(J: Ball, A: Ball) -> Ball:
        floor = beta * A.radius
        heap = [J]
        while heap:
            # biggest first, leftmost on ties
            heap.sort(key=lambda x: (-x.radius, x.center))
            cur = heap.pop(0)
            if cur.radius < floor:
                break
            if A.contains(cur):
                return cur
            heap.extend(ch for ch in _ifs_children(cur, lam, gam)
                        if ch.meets_interior(A) and ch.radius >= floor)
        raise GameError(f"no IFS cylinder of radius >= {floor} inside {A}")

    @functools.lru_cache(maxsize=None)
    def cylinders(alices: tuple) -> tuple:
        if len(alices) == 1:
            return (alices[0],)
        prev = cylinders(alices[:-1])
        return prev + (largest_inside(prev[-1], alices[-1]),)

    def respond(t: Transcript):
        if not t.moves:
            return BobBall(opening)
        alices = tuple(m.ball for m in t.moves[1::2])
        J = cylinders(alices)[-1]
        return BobBall(Ball.interval(J.center, beta * alices[-1].radius))

    strat = Strategy(respond, "ifs_bob", alpha=alpha, lam=lam, gam=gam, N=N, beta=beta)
    strat.beta = beta
    strat.cylinders = lambda t: cylinders(tuple(m.ball for m in t.moves[1::2]))
    return strat


# ---------------------------------------------------------------------------
# digit control and Bohr sets


@dataclass(frozen=True)
class DigitPlan:
    gamma: Fraction
    gap: int
    first_min: int
    targets: tuple


def digit_control_plan(alpha, beta, targets, rho0=1) -> DigitPlan:
    """Validate targets for :func:`digit_control_alice` and record the constants.

    ``gamma = beta**j`` for the least ``j`` with ``alpha**j <= beta``: from a
    ball of radius ``rho`` Alice can force any Bob radius ``<= gamma rho``.
    Consecutive targets need ``2**-(gap) <= gamma alpha beta``, the first one
    ``3 * 2**-(a+1) <= gamma rho0``.
    """
    alpha, beta, rho0 = as_fraction(alpha), as_fraction(beta), as_fraction(rho0)
    if not (0 < alpha < Fraction(1, 3) and 0 < beta < 1):
        raise ValueError("need 0 < alpha < 1/3 and 0 < beta < 1")
    j = 1
    while alpha ** j > beta:
        j += 1
    gamma = beta ** j
    gap = 0
    while Fraction(1, 2 ** gap) > gamma * alpha * beta:
        gap += 1
    first = 0
    while Fraction(3, 2 ** (first + 1)) > gamma * rho0:
        first += 1
    targets = tuple(sorted((int(a), int(bit)) for a, bit in targets))
    if any(bit not in (0, 1) for _a, bit in targets):
        raise ValueError("target bits must be 0 or 1")
    for (a, _), (b, _) in zip(targets, targets[1:]):
        if b - a < gap:
            raise GapTooSmall(f"indices {a} and {b} are closer than {gap}")
    if targets and targets[0][0] < first:
        raise FirstIndexTooSmall(f"first index {targets[0][0]} < {first}")
    return DigitPlan(gamma, gap, first, targets)


def digit_control_alice(alpha, beta, targets, rho0=1) -> Strategy:
    """Alice in the weak ``(alpha, beta)`` game fixing binary digits of the outcome.

    Before digit ``a`` she steers Bob's radius to ``3 * 2**-(a+1)`` (so Bob's
    interval has length ``3 * 2**-a`` and contains two whole dyadic cells of
    length ``2**-a``), then plays inside the cell whose index has the wanted
    parity.  Otherwise she plays concentric balls.
    """
    alpha, beta = as_fraction(alpha), as_fraction(beta)
    plan = digit_control_plan(alpha, beta, targets, rho0)
    goals = [(Fraction(3, 2 ** (a + 1)), a, bit) for a, bit in plan.targets]

    def steer(rho: Fraction, goal: Fraction) -> Fraction:
        j = 1
        while not ((alpha * beta) ** j * rho <= goal <= beta ** j * rho):
            j += 1
            if j > 10_000:
                raise GameError(f"radius {goal} unreachable from {rho}")
        product = goal / (beta ** j * rho)
        return max(alpha, product)

    def respond(t: Transcript):
        B = t.current_ball
        rho = B.radius
        for goal, a, bit in goals:
            if goal == rho:
                cell = Fraction(1, 2 ** a)
                k = math.ceil(B.lo / cell)
                if k % 2 != bit:
                    k += 1
                return AliceBall(Ball.interval((k + Fraction(1, 2)) * cell, alpha * rho))
            if goal < rho:
                return AliceBall(Ball.interval(B.center, steer(rho, goal) * rho))
        return AliceBall(Ball.interval(B.center, alpha * rho))

    return Strategy(respond, "digit_control", alpha=alpha, beta=beta, gamma=plan.gamma,
                    gap=plan.gap, first_min=plan.first_min,
                    targets=" ".join(f"{a}:{b}" for a, b in plan.targets))


def bohr_set_prefix(gamma, delta, n_max: int) -> list[int]:
    """``{1 <= n <= n_max : dist(n gamma, Z) < delta}`` for rational ``gamma``."""
    gamma, delta = as_fraction(gamma), as_fraction(delta)
    if not 0 < delta < Fraction(1, 2):
        raise ValueError("need 0 < delta < 1/2")
    p, q = gamma.numerator, gamma.denominator
    out = []
    for n in range(1, n_max + 1):
        frac = Fraction((n * p) % q, q)
        if min(frac, 1 - frac) < delta:
            out.append(n)
    return out


# ---------------------------------------------------------------------------
# simple Bob strategies


def avoiding_bob(beta, b0: Optional[Ball] = None, grid: int = 8) -> Strategy:
    """Potential-game Bob on the line: shrink by exactly ``beta`` into the
    leftmost grid position whose closed ball misses every deleted ball."""
    beta = as_fraction(beta)
    if not 0 < beta < 1:
        raise ValueError("need 0 < beta < 1")
    opening = b0 or Ball.from_endpoints(0, 1)

    def respond(t: Transcript):
        if not t.moves:
            return BobBall(opening)
        B = t.current_ball
        r = beta * B.radius
        deleted = [b for mv in t.alice_moves() for b in mv.balls]
        step = r / grid
        slots = int((B.diameter - 2 * r) / step)
        cands = [Ball.interval(B.lo + r + k * step, r) for k in range(slots + 1)]
        for cand in cands:
            if not any(cand.meets(d) for d in deleted):
                return BobBall(cand)
        return BobBall(cands[0])

    return Strategy(respond, "avoiding_bob", beta=beta, grid=grid)
