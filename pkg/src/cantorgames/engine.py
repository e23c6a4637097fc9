"""Referees for Schmidt, absolute, potential and Cantor games.

A transcript starts with Bob's opening ball and then alternates Alice and
Bob.  Every move is checked exactly (containment, radius rules, counts);
sums of powers with a non-integer exponent are decided with interval
enclosures and never guessed.

Strategies are plain callables ``strategy(transcript) -> move``.  They see
the whole transcript, since the potential game is not positional.  A bare
:class:`Ball` or a list of balls is accepted and wrapped into the move type
the configured game expects.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

from .errors import EmptyTranscript, GameError, InfiniteBranching, StrategyFault
from .space import (Ball, SplittingStructure, as_fraction, pow_compare, power_sum_le,
                    Space, SHIFT)


class GameKind(enum.Enum):
    SCHMIDT = "schmidt"
    ABSOLUTE = "absolute"
    POTENTIAL = "potential"
    CANTOR = "cantor"


class Variant(enum.Enum):
    CLASSIC = "classic"
    STRONG = "strong"
    WEAK = "weak"
    VERY_STRONG = "very_strong"


# (alice radius rule, bob radius rule): "eq" means equality, "ge" means at least
_VARIANT_RULES = {
    Variant.CLASSIC: ("eq", "eq"),
    Variant.STRONG: ("ge", "ge"),
    Variant.WEAK: ("ge", "eq"),
    Variant.VERY_STRONG: ("eq", "ge"),
}


@dataclass(frozen=True)
class GameConfig:
    kind: GameKind
    variant: Variant = Variant.CLASSIC
    alpha: Optional[Fraction] = None
    beta: Optional[Fraction] = None
    c: Optional[Fraction] = None
    eps: Optional[Fraction] = None
    R: Optional[int] = None
    structure: Optional[SplittingStructure] = None
    ambient: Optional[Callable[[Ball], bool]] = field(default=None, compare=False)

    def __post_init__(self):
        k = self.kind
        for name in ("alpha", "beta", "c", "eps"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, as_fraction(v))
        if k is GameKind.SCHMIDT:
            if not (0 < self.alpha < 1 and 0 < self.beta < 1):
                raise ValueError("Schmidt game needs 0 < alpha, beta < 1")
        elif k is GameKind.ABSOLUTE:
            if not 0 < self.beta < 1:
                raise ValueError("absolute game needs 0 < beta < 1")
        elif k is GameKind.POTENTIAL:
            if self.c is None or self.c <= 0 or self.beta is None or self.beta <= 0:
                raise ValueError("potential game needs c > 0 and beta > 0")
        elif k is GameKind.CANTOR:
            if self.eps is None or not 0 < self.eps <= 1 or self.R is None or self.R < 2:
                raise ValueError("Cantor game needs 0 < eps <= 1 and R >= 2")
            if self.structure is None:
                raise ValueError("Cantor game needs a splitting structure")
            if not self.structure.in_U(self.R):
                raise ValueError(f"R={self.R} is not in U")

    @classmethod
    def schmidt(cls, alpha, beta, variant: Union[Variant, str] = Variant.CLASSIC, **kw):
        return cls(GameKind.SCHMIDT, Variant(variant), alpha=alpha, beta=beta, **kw)

    @classmethod
    def absolute(cls, beta, **kw):
        return cls(GameKind.ABSOLUTE, beta=beta, **kw)

    @classmethod
    def potential(cls, c, beta, **kw):
        return cls(GameKind.POTENTIAL, c=c, beta=beta, **kw)

    @classmethod
    def cantor(cls, eps, R: int, structure: SplittingStructure = SHIFT, **kw):
        return cls(GameKind.CANTOR, eps=eps, R=R, structure=structure, **kw)

    def describe(self) -> dict:
        out = {"kind": self.kind.value}
        if self.kind is GameKind.SCHMIDT:
            out["variant"] = self.variant.value
        for name in ("alpha", "beta", "c", "eps", "R"):
            v = getattr(self, name)
            if v is not None:
                out[name] = str(v)
        if self.structure is not None:
            out["structure"] = self.structure.name
        return out


# ---------------------------------------------------------------------------
# moves and verdicts


@dataclass(frozen=True)
class BobBall:
    ball: Ball


@dataclass(frozen=True)
class AliceBall:
    ball: Ball


@dataclass(frozen=True)
class AliceCollection:
    balls: tuple


@dataclass(frozen=True)
class AliceRemovalSet:
    balls: tuple


Move = Union[BobBall, AliceBall, AliceCollection, AliceRemovalSet]


class VerdictKind(enum.Enum):
    LEGAL = "legal"
    ILLEGAL = "illegal"
    DEFAULT_WIN_ALICE = "default_win_alice"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    reason: str = ""
    player: str = ""

    @property
    def legal(self) -> bool:
        return self.kind is VerdictKind.LEGAL

    def __str__(self):
        if self.legal:
            return "Legal"
        return f"{self.kind.value}({self.player}: {self.reason})"


LEGAL = Verdict(VerdictKind.LEGAL)


def _illegal(player, reason):
    return Verdict(VerdictKind.ILLEGAL, reason, player)


# ---------------------------------------------------------------------------
# transcripts


@dataclass(frozen=True)
class Transcript:
    """Referee-validated record.  Only legal moves are stored in ``moves``.

    ``final`` is set when play stopped on an Illegal or DefaultWinAlice
    verdict; ``rejected`` then holds the offending move (if any).
    """

    config: GameConfig
    moves: tuple = ()
    evidence: tuple = ()
    final: Optional[Verdict] = None
    rejected: Optional[Move] = None
    headers: tuple = ()

    @property
    def next_player(self) -> str:
        return "bob" if len(self.moves) % 2 == 0 else "alice"

    @property
    def finished(self) -> bool:
        return self.final is not None

    def bob_balls(self) -> list[Ball]:
        return [m.ball for m in self.moves[0::2]]

    def alice_moves(self) -> list[Move]:
        return list(self.moves[1::2])

    @property
    def current_ball(self) -> Ball:
        if not self.moves:
            raise EmptyTranscript("no Bob ball yet")
        idx = len(self.moves) - 1 if len(self.moves) % 2 == 1 else len(self.moves) - 2
        return self.moves[idx].ball

    @property
    def rounds(self) -> int:
        """Number of Bob moves after the opening ball."""
        return max(0, (len(self.moves) + 1) // 2 - 1)

    def with_headers(self, **kw) -> "Transcript":
        merged = dict(self.headers)
        merged.update({k: str(v) for k, v in kw.items()})
        return replace(self, headers=tuple(sorted(merged.items())))

    def append(self, move: Move) -> "Transcript":
        """Referee ``move``; returns the extended (or finished) transcript."""
        if self.finished:
            raise GameError("transcript already finished")
        move = coerce_move(self.config, self.next_player, move)
        verdict, ev = _check(self, move)
        if verdict.kind is VerdictKind.ILLEGAL:
            return replace(self, final=verdict, rejected=move)
        t = replace(self, moves=self.moves + (move,), evidence=self.evidence + (tuple(ev),))
        if verdict.kind is VerdictKind.DEFAULT_WIN_ALICE:
            t = replace(t, final=verdict)
        return t

    def to_lines(self) -> list[str]:
        head = {"record": "header", **self.config.describe(), **dict(self.headers)}
        out = [json.dumps(head)]
        for i, (m, ev) in enumerate(zip(self.moves, self.evidence)):
            out.append(json.dumps(_move_record(i, m, "legal", ev)))
        if self.final is not None:
            rec = _move_record(len(self.moves), self.rejected, self.final.kind.value,
                               (self.final.reason,))
            out.append(json.dumps(rec))
        return out

    def export(self) -> str:
        return "\n".join(self.to_lines()) + "\n"


def _move_record(turn: int, m: Optional[Move], verdict: str, ev) -> dict:
    player = "bob" if turn % 2 == 0 else "alice"
    if m is None:
        kind, balls = "none", []
    elif isinstance(m, (BobBall, AliceBall)):
        kind, balls = type(m).__name__, [m.ball.to_text()]
    else:
        kind, balls = type(m).__name__, [b.to_text() for b in m.balls]
    return {"record": "move", "turn": turn, "player": player, "move": kind,
            "balls": balls, "verdict": verdict, "evidence": list(ev)}


def new_transcript(config: GameConfig, **headers) -> Transcript:
    return Transcript(config).with_headers(**headers) if headers else Transcript(config)


def coerce_move(config: GameConfig, player: str, move) -> Move:
    if isinstance(move, (BobBall, AliceBall, AliceCollection, AliceRemovalSet)):
        return move
    if player == "bob":
        if isinstance(move, Ball):
            return BobBall(move)
    elif config.kind in (GameKind.SCHMIDT, GameKind.ABSOLUTE):
        if isinstance(move, Ball):
            return AliceBall(move)
    elif isinstance(move, (list, tuple, set, frozenset)):
        balls = tuple(move)
        if config.kind is GameKind.POTENTIAL:
            return AliceCollection(balls)
        return AliceRemovalSet(balls)
    raise TypeError(f"cannot read {move!r} as a {player} move in a {config.kind.value} game")


# ---------------------------------------------------------------------------
# the referee


def check_move(t: Transcript, m: Move) -> Verdict:
    """Verdict for appending ``m`` to ``t`` (does not modify ``t``)."""
    m = coerce_move(t.config, t.next_player, m)
    return _check(t, m)[0]


def _rule(kind: str, actual: Fraction, target: Fraction) -> bool:
    return actual == target if kind == "eq" else actual >= target


def _check(t: Transcript, m: Move):
    cfg = t.config
    player = t.next_player
    ev: list[str] = []
    expected_bob = player == "bob"
    if expected_bob != isinstance(m, BobBall):
        return _illegal(player, f"{type(m).__name__} played on {player}'s turn"), ev

    if not t.moves:
        b0 = m.ball
        if cfg.structure is not None and b0.space is not cfg.structure.space:
            return _illegal("bob", "opening ball outside the playground"), ev
        if cfg.ambient is not None and not cfg.ambient(b0):
            return _illegal("bob", "opening ball misses the ambient set"), ev
        return LEGAL, ["opening ball"]

    B = t.current_ball
    if player == "alice":
        return _check_alice(cfg, t, B, m, ev)
    verdict, ev = _check_bob(cfg, t, B, m, ev)
    if verdict.legal and cfg.ambient is not None and not cfg.ambient(m.ball):
        return _illegal("bob", "ball misses the ambient set"), ev
    return verdict, ev


def _check_alice(cfg, t, B, m, ev):
    k = cfg.kind
    if k is GameKind.SCHMIDT:
        if not isinstance(m, AliceBall):
            return _illegal("alice", "expected a single ball"), ev
        A = m.ball
        inside = B.contains(A)
        ev.append(f"A<=B:{inside}")
        if not inside:
            return _illegal("alice", "ball not inside Bob's ball"), ev
        rule = _VARIANT_RULES[cfg.variant][0]
        target = cfg.alpha * B.radius
        ok = _rule(rule, A.radius, target)
        ev.append(f"rad(A)={A.radius} {rule} {target}")
        return (LEGAL if ok else _illegal("alice", f"radius {A.radius} violates {rule} {target}")), ev

    if k is GameKind.ABSOLUTE:
        if not isinstance(m, AliceBall):
            return _illegal("alice", "expected a single ball"), ev
        A = m.ball
        bound = cfg.beta * B.radius
        ev.append(f"rad(A)={A.radius} <= {bound}")
        if A.radius > bound:
            return _illegal("alice", f"radius {A.radius} exceeds {bound}"), ev
        if _absolute_bob_stuck(B, A, cfg.beta):
            ev.append("no legal reply for Bob")
            return Verdict(VerdictKind.DEFAULT_WIN_ALICE, "Bob has no legal ball", "bob"), ev
        return LEGAL, ev

    if k is GameKind.POTENTIAL:
        if not isinstance(m, AliceCollection):
            return _illegal("alice", "expected a ball collection"), ev
        if any(b.space is not B.space for b in m.balls):
            return _illegal("alice", "ball outside the playground"), ev
        ok, text = power_sum_le([b.radius for b in m.balls], cfg.c, cfg.beta * B.radius)
        ev.append(f"sum rad^c {text}")
        if not ok:
            return _illegal("alice", f"power sum exceeds budget: {text}"), ev
        covered = covered_by(B, [b for mv in t.alice_moves() for b in mv.balls] + list(m.balls))
        if covered:
            ev.append("Bob's ball is covered by deleted balls")
            return Verdict(VerdictKind.DEFAULT_WIN_ALICE, "nest covered by deleted balls", "bob"), ev
        return LEGAL, ev

    # Cantor game
    if not isinstance(m, AliceRemovalSet):
        return _illegal("alice", "expected a removal set"), ev
    if len(set(m.balls)) != len(m.balls):
        return _illegal("alice", "repeated child in removal set"), ev
    for a in m.balls:
        if a.space is not B.space or cfg.structure.child_index(B, a, cfg.R) is None:
            return _illegal("alice", f"{a} is not a child of {B}"), ev
    f_R = cfg.structure.f(cfg.R)
    cmp = pow_compare(len(m.balls), f_R, 1 - cfg.eps)
    ev.append(f"#removed={len(m.balls)} <= {f_R}^{1 - cfg.eps}")
    if cmp > 0:
        return _illegal("alice", f"{len(m.balls)} removals exceed {f_R}^{1 - cfg.eps}"), ev
    return LEGAL, ev


def _check_bob(cfg, t, B, m, ev):
    nb = m.ball
    if nb.space is not B.space:
        return _illegal("bob", "ball outside the playground"), ev
    k = cfg.kind
    A = t.moves[-1]
    if k is GameKind.SCHMIDT:
        inside = A.ball.contains(nb)
        ev.append(f"B<=A:{inside}")
        if not inside:
            return _illegal("bob", "ball not inside Alice's ball"), ev
        rule = _VARIANT_RULES[cfg.variant][1]
        target = cfg.beta * A.ball.radius
        ok = _rule(rule, nb.radius, target)
        ev.append(f"rad(B)={nb.radius} {rule} {target}")
        return (LEGAL if ok else _illegal("bob", f"radius {nb.radius} violates {rule} {target}")), ev

    if k is GameKind.ABSOLUTE:
        if not B.contains(nb):
            return _illegal("bob", "ball not inside previous ball"), ev
        if nb.meets(A.ball):
            return _illegal("bob", "ball meets Alice's ball"), ev
        bound = cfg.beta * B.radius
        ev.append(f"rad(B)={nb.radius} >= {bound}")
        if nb.radius < bound:
            return _illegal("bob", f"radius {nb.radius} below {bound}"), ev
        return LEGAL, ev

    if k is GameKind.POTENTIAL:
        if not B.contains(nb):
            return _illegal("bob", "ball not inside previous ball"), ev
        bound = cfg.beta * B.radius
        ev.append(f"rad(B)={nb.radius} >= {bound}")
        if nb.radius < bound:
            return _illegal("bob", f"radius {nb.radius} below {bound}"), ev
        return LEGAL, ev

    if cfg.structure.child_index(B, nb, cfg.R) is None:
        return _illegal("bob", f"{nb} is not a child of {B}"), ev
    if nb in A.balls:
        return _illegal("bob", f"{nb} was removed"), ev
    ev.append("child not removed")
    return LEGAL, ev


def _absolute_bob_stuck(B: Ball, A: Ball, beta: Fraction) -> bool:
    """True when no ball of radius >= beta*rad(B) fits in B minus A."""
    if not A.meets(B):
        return False
    need = beta * B.radius
    if B.is_real:
        left = A.lo - B.lo
        right = B.hi - A.hi
        # a closed interval must fit strictly before A starts (or after it ends)
        return not (left > 2 * need or right > 2 * need)
    if B.word.startswith(A.word):
        return True
    longest = len(B.word)
    while Fraction(1, 2 ** (longest + 1)) >= need:
        longest += 1
    return longest == len(B.word)


def covered_by(B: Ball, balls: Sequence[Ball]) -> bool:
    """Is the closed ball ``B`` contained in the union of ``balls``?"""
    if B.is_real:
        segs = sorted((b.lo, b.hi) for b in balls if b.meets(B))
        reach = B.lo
        for lo, hi in segs:
            if lo > reach:
                return False
            reach = max(reach, hi)
            if reach >= B.hi:
                return True
        return reach >= B.hi
    words = [b.word for b in balls]
    return _cylinder_covered(B.word, words)


def _cylinder_covered(w: str, words: list[str]) -> bool:
    if any(w.startswith(v) for v in words):
        return True
    deeper = [v for v in words if v.startswith(w) and len(v) > len(w)]
    if not deeper:
        return False
    return _cylinder_covered(w + "0", deeper) and _cylinder_covered(w + "1", deeper)


# ---------------------------------------------------------------------------
# drivers


Strategy = Callable[[Transcript], object]


def _ask(strategy: Strategy, t: Transcript, player: str):
    try:
        return strategy(t)
    except StrategyFault:
        raise
    except Exception as exc:  # noqa: BLE001 - every strategy failure is reported the same way
        raise StrategyFault(player, len(t.moves), exc) from exc


def _strategy_headers(alice, bob) -> dict:
    out = {}
    for role, s in (("alice", alice), ("bob", bob)):
        if s is None:
            out[f"{role}.strategy"] = "exhaustive"
            continue
        meta = getattr(s, "metadata", None)
        name = getattr(s, "__name__", type(s).__name__)
        out[f"{role}.strategy"] = name
        if meta:
            for k, v in meta.items():
                out[f"{role}.{k}"] = v
    return out


def play(cfg: GameConfig, alice: Strategy, bob: Strategy, horizon: int) -> Transcript:
    """Alternate the strategies for ``horizon`` rounds after Bob's opening ball."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    t = Transcript(cfg).with_headers(**_strategy_headers(alice, bob))
    t = t.append(coerce_move(cfg, "bob", _ask(bob, t, "bob")))
    while not t.finished and t.rounds < horizon:
        t = t.append(coerce_move(cfg, "alice", _ask(alice, t, "alice")))
        if t.finished:
            break
        t = t.append(coerce_move(cfg, "bob", _ask(bob, t, "bob")))
    return t


def outcome(t: Transcript) -> Ball:
    if not t.moves:
        raise EmptyTranscript("transcript has no Bob ball")
    return t.current_ball


def shift_bob_candidates(t: Transcript) -> list[Ball]:
    """Every legal Bob reply on the shift, found by enumerating sub-cylinders."""
    cfg = t.config
    B = t.current_ball
    A = t.moves[-1]
    if cfg.kind is GameKind.CANTOR:
        return [c for c in cfg.structure.split(B, cfg.R) if c not in A.balls]
    base = A.ball if cfg.kind is GameKind.SCHMIDT else B
    floor = (cfg.beta * A.ball.radius) if cfg.kind is GameKind.SCHMIDT else cfg.beta * B.radius
    longest = len(base.word)
    while Fraction(1, 2 ** (longest + 1)) >= floor:
        longest += 1
    out = []
    for extra in range(longest - len(base.word) + 1):
        for child in SHIFT.split(base, 2 ** extra):
            if _check(t, BobBall(child))[0].legal:
                out.append(child)
    return out


def exhaustive_bob(cfg: GameConfig, alice: Strategy, depth: int,
                   bob_move_enumerator: Optional[Callable[[Transcript], Sequence[Ball]]] = None,
                   b0: Optional[Ball] = None) -> list[Transcript]:
    """All maximal transcripts of ``depth`` rounds against every Bob play.

    On the shift the legal Bob replies are enumerated directly; on the real
    line an enumerator must be supplied.
    """
    if b0 is None:
        if cfg.structure is not None and cfg.structure.space is Space.REAL:
            b0 = Ball.from_endpoints(0, 1)
        else:
            b0 = Ball.cylinder("")
    enum_moves = bob_move_enumerator
    if enum_moves is None:
        if b0.is_real:
            raise InfiniteBranching("real-line play needs a Bob move enumerator")
        enum_moves = shift_bob_candidates
    start = Transcript(cfg).with_headers(**_strategy_headers(alice, None))
    start = start.append(BobBall(b0))
    if start.finished:
        return [start]
    done: list[Transcript] = []
    stack = [start]
    while stack:
        t = stack.pop()
        if t.finished or t.rounds >= depth:
            done.append(t)
            continue
        t = t.append(coerce_move(cfg, "alice", _ask(alice, t, "alice")))
        if t.finished:
            done.append(t)
            continue
        replies = list(enum_moves(t))
        if not replies:
            done.append(t)
            continue
        for ball in reversed(replies):
            nt = t.append(BobBall(ball))
            if nt.finished:
                done.append(nt)
            else:
                stack.append(nt)
    return done

