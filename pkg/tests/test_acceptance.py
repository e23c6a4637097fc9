"""Desk-scale acceptance checks, one test per criterion.

Each test records a one-line verdict; ``conftest.py`` prints them after the
run, and ``python3 tests/test_acceptance.py`` prints them directly.
"""
import itertools
import math
import random
import sys
from fractions import Fraction as F

import pytest

from cantorgames.cantor import (BudgetTable, avoiding_words, build, golden_mean, middle_thirds,
                                reindex_to_rich, rich_budget_check)
from cantorgames.engine import (GameConfig, VerdictKind, exhaustive_bob, outcome, play,
                                shift_bob_candidates)
from cantorgames.fractal import (IntervalSet, ScaleProfile, box_dimension, diffuse_to_regular,
                                 ifs_similarity_dim, regular_from_bob, separated_packing)
from cantorgames.space import SHIFT, Ball, GradedScalar, rational_power
from cantorgames.strategies import (PositionalStrategy, avoiding_bob, cantor_from_half_winning,
                                    cantor_from_potential_alice,
                                    cantor_game_alice_from_construction,
                                    cantor_game_params, dolgopyat_alice, first_uncovered,
                                    ifs_bob, intersect_potential_strategies,
                                    lift_schmidt_strategy, lifted_parameters,
                                    potential_alice_from_cantor, subcover_two)

UNIT = Ball.from_endpoints(0, 1)
half = F(1, 2)
VERDICTS: dict = {}


def report(k, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {k}: {detail}"
    VERDICTS[k] = line
    print(line)
    assert passed, line


def illegal(t):
    return t.final is not None and t.final.kind is VerdictKind.ILLEGAL


def random_shift_bob(rng):
    def bob(t):
        if not t.moves:
            return Ball.cylinder("")
        return rng.choice(shift_bob_candidates(t))
    return bob


def random_line_bob(beta, rng, b0=UNIT, grain=16):
    def bob(t):
        if not t.moves:
            return b0
        A = t.moves[-1].ball
        r = beta * A.radius
        return Ball.interval(A.lo + r + (A.diameter - 2 * r) * F(rng.randrange(grain + 1), grain), r)
    return bob


def test_golden_cantor_game_soundness():
    c = golden_mean(10)
    p = cantor_game_params(1, 2, 1)
    s = cantor_game_alice_from_construction(c, p)
    ts = exhaustive_bob(GameConfig.cantor(1, 2), s, 10)
    inside = sum(t.final is None and c.is_survivor(outcome(t), 10) for t in ts)
    checks = bad = 0
    for t in ts:
        for i, B in enumerate(t.bob_balls()):
            value, tail = s.phi(i, B)
            bound = rational_power(2, -i * (1 - p.eps2))
            total = value + tail
            g = total if isinstance(total, GradedScalar) else GradedScalar(total)
            checks += 1
            bad += not g < bound
    report(1, len(ts) == 144 and inside == 144 and bad == 0,
           f"{inside}/{len(ts)} outcomes are level-10 survivors; potential bound held at "
           f"{checks - bad}/{checks} checkpoints")


def test_lifted_parameters_grid():
    grid = [F(1, 4), F(1, 3), half]
    identities = plays = bad = 0
    for a0, b0 in itertools.product(grid, grid):
        a, b = lifted_parameters(a0, b0)
        identities += a * b == (a0 * b0) ** 2
        inner = PositionalStrategy(lambda B, a=a: Ball.interval(B.center, a * B.radius), "center")
        s = lift_schmidt_strategy(inner, a0, b0)
        for seed in range(10):
            t = play(GameConfig.schmidt(a0, b0), s, random_line_bob(b0, random.Random(seed)), 20)
            plays += 1
            bad += illegal(t) or t.rounds != 20
    report(2, identities == 9 and bad == 0,
           f"{identities}/9 identities exact; {bad} illegal among {plays} 20-round plays")


def _random_cover(rng):
    """An interval b and <= 12 equal-radius intervals covering it."""
    r = F(rng.randrange(1, 50), rng.randrange(1, 50))
    b = Ball.interval(F(rng.randrange(-100, 100), rng.randrange(1, 20)), r)
    cover = []
    while len(cover) < 12:
        x = b.lo - r + 4 * r * F(rng.randrange(65), 64)
        cover.append(Ball.interval(x, r))
        if first_uncovered(b, cover) is None:
            break
    if first_uncovered(b, cover) is not None:
        cover[-1] = b
    return b, cover


def _brute_minimal(b, cover, eps):
    if any(a.contains(b) for a in cover):
        return 1
    for x, y in itertools.combinations(cover, 2):
        left, right = sorted((x, y), key=lambda z: z.center)
        if left.lo <= b.lo and right.hi >= b.hi and right.lo - left.hi <= eps:
            return 2
    return None


def test_subcover_two_random_covers():
    rng = random.Random(41)
    bad = 0
    for _ in range(10_000):
        b, cover = _random_cover(rng)
        eps = b.radius * F(rng.randrange(1, 64), 64)
        sub = subcover_two(b, cover, eps)
        ok = 1 <= len(sub.balls) <= 2 and len(sub.balls) == _brute_minimal(b, cover, eps)
        ok &= sub.left.lo <= b.lo and sub.right.hi >= b.hi
        if sub.gap is not None:
            ok &= sub.gap[1] - sub.gap[0] <= eps
        elif len(sub.balls) == 2:
            ok &= sub.left.hi >= sub.right.lo
        bad += not ok
    report(3, bad == 0, f"{10_000 - bad}/10000 subcovers minimal with gap <= eps")


def test_half_winning_construction():
    F_ = PositionalStrategy(lambda B: Ball.interval(B.center, B.radius / 2), "half_center")
    c, chains = cantor_from_half_winning(F_, UNIT, 16, 4, with_chains=True)
    most = max(len(v) for v in c.removals.values())
    bad = sum(bool(ch.check(16, b)) for b, ch in chains.items() if ch.balls)
    report(4, most <= 10 and bad == 0,
           f"levels {[len(lv) for lv in c.levels]}; max removals per node {most}; "
           f"{bad} F-chains fail the radius law")


def _orbit_avoids(word, cover_words):
    return not any(word[i:].startswith(v) for i in range(len(word)) for v in cover_words
                   if len(word) - i >= len(v))


def test_dolgopyat_exceptional_set():
    cover = [Ball.cylinder("1111")]
    c_exp = beta = half
    # (a) the strategy constructor enforces the strict cover inequality
    s = dolgopyat_alice(cover, c_exp, beta)
    ell = s.metadata["ell"]
    lhs = rational_power(F(1, 16), c_exp)
    rhs = rational_power(beta / 4 ** ell, c_exp) / ell
    cover_ok = lhs < rhs
    # (b) random legal Bobs
    cfg = GameConfig.potential(c_exp, beta)
    rng = random.Random(5)
    n_illegal = sum(illegal(play(cfg, s, random_shift_bob(rng), 20)) for _ in range(10_000))
    # (c) dimension of the survivors
    con = cantor_from_potential_alice(s, half, 2, 1, 12)
    est, _ = box_dimension(ScaleProfile.from_construction(con, range(4, 13)))
    # (d) orbit scan
    scanned = [b.word for b in con.levels[12]]
    avoid = all(_orbit_avoids(w, ["1111"]) for w in scanned)
    report(5, cover_ok and n_illegal == 0 and est >= 0.9 and avoid,
           f"cover {'passes' if cover_ok else 'fails'}; {n_illegal} illegal in 10000 plays; "
           f"depth-12 estimate {est:.4f}; {len(scanned)} survivors avoid the cover")


def test_ifs_bob_construction():
    alpha, lam, gam = half, F(2, 3), F(1, 128)
    bob = ifs_bob(alpha, lam, gam)  # raises GateFailed if a gate fails
    gates = gam <= alpha / 4 and lam + lam * alpha >= 1
    lo, hi = ifs_similarity_dim(lam, gam)
    cfg = GameConfig.schmidt(alpha, bob.beta, "weak")
    bad = 0
    for seed in range(1000):
        rng = random.Random(seed)

        def alice(t):
            B = t.current_ball
            r = alpha * B.radius * (1 + F(rng.randrange(3), 4))
            r = min(r, B.radius)
            return Ball.interval(B.lo + r + (B.diameter - 2 * r) * F(rng.randrange(17), 16), r)

        t = play(cfg, alice, bob, 20)
        J = bob.cylinders(t)
        bad += t.final is not None or not all(J[k].contains(B) for k, B in enumerate(t.bob_balls()[1:]))
    report(6, gates and hi < half and hi - lo <= F(1, 10 ** 9) and bad == 0,
           f"s in [{float(lo):.10f}, {float(hi):.10f}]; {bad} of 1000 plays leave J_k")


def test_dimension_formulas():
    rows = []
    est, _ = box_dimension(ScaleProfile.from_construction(middle_thirds(10), range(4, 11)))
    rows.append(("middle thirds", est, math.log(2) / math.log(3)))
    est, _ = box_dimension(ScaleProfile.from_construction(avoiding_words(["11"]), range(4, 13)))
    rows.append(("golden mean", est, math.log((1 + math.sqrt(5)) / 2) / math.log(2)))
    for beta in (F(1, 4), half):
        tree = diffuse_to_regular(IntervalSet(((0, 1),)), beta, 8)
        est, _ = box_dimension(tree.profile(range(2, 9)))
        rows.append((f"diffuse beta={beta}", est, math.log(2) / -math.log(beta)))
    tree = regular_from_bob(avoiding_bob(half), half, F(1, 48), 1, 3)
    est, _ = box_dimension(tree.profile())
    rows.append(("regular_from_bob N=4", est, math.log(4) / math.log(48)))
    worst = max(abs(e - w) for _n, e, w in rows)
    report(7, worst <= 0.05, "; ".join(f"{n} {e:.4f} vs {w:.4f}" for n, e, w in rows))


def test_separated_packings():
    counts = []
    ok = True
    for alpha, want in ((F(1, 10), 7), (F(1, 20), 13), (F(1, 40), 27)):
        balls = separated_packing(UNIT, alpha)
        counts.append(len(balls))
        ok &= len(balls) == want and len(balls) >= math.floor((1 - alpha) * 10 / 3)
        ok &= all(abs(a.center - b.center) >= 3 * alpha * UNIT.radius
                  for a, b in itertools.combinations(balls, 2))
        ok &= all(UNIT.contains(a) for a in balls)
    report(8, ok, f"counts {counts}, pairwise separation exact")


def test_intersection_forces_alternation():
    c_exp, beta = half, half
    s1 = potential_alice_from_cantor(avoiding_words(["11"]), c_exp, beta ** 2)
    s2 = potential_alice_from_cantor(avoiding_words(["00"]), c_exp, beta ** 2)
    s = intersect_potential_strategies(s1, s2, beta)
    ts = exhaustive_bob(GameConfig.potential(c_exp, beta), s, 12,
                        lambda t: SHIFT.split(t.current_ball, 2))
    n_illegal = sum(illegal(t) for t in ts)
    escaped = set()
    for t in ts:
        if t.finished:
            continue
        x = outcome(t)
        if not any(b.contains(x) for m in t.alice_moves() for b in m.balls):
            escaped.add(x.word)
    want = {"01" * 6, "10" * 6}
    report(9, n_illegal == 0 and escaped == want,
           f"{len(ts)} transcripts, {n_illegal} illegal; undeleted outcomes {sorted(escaped)}")


def _first_child_remover(R):
    def remover(c):
        n = c.depth
        return {(n, b): [c.structure.split(b, R)[0]] for b in c.levels[n]}
    return remover


def test_rich_reindexing():
    R, ell, eps, y = 17, 2, half, F(1, 4)
    big = R ** ell
    c = build(UNIT, big, BudgetTable.diagonal(R), 2, _first_child_remover(big))
    c2, table = reindex_to_rich(c, ell, R, eps)
    agree = all(set(c2.levels[ell * k]) == set(c.levels[k]) for k in range(3))
    # depth 6 would hold about 2.4e7 cells; check k = 3 on sampled level-2 subtrees
    rng = random.Random(3)
    for root in rng.sample(c.levels[2], 4):
        sub = build(root, big, BudgetTable.diagonal(R), 1, _first_child_remover(big))
        sub2, _ = reindex_to_rich(sub, ell, R, eps)
        agree &= set(sub2.levels[ell]) == set(sub.levels[1])
    res = rich_budget_check(table, R, y, 5)
    detail = f"survivors {'agree' if agree else 'differ'} at depths 0, 2, 4 and at depth 6 on 4 sampled subtrees"
    if res.passed:
        detail += "; rich budget sums within 1/4"
    else:
        n, s = res.first_violation
        detail += f"; rich budget sum at n={n} is {s} > {y}"
    report(10, agree and res.passed, detail)


if __name__ == "__main__":
    failed = 0
    for fn in [v for k, v in list(globals().items()) if k.startswith("test_")]:
        try:
            fn()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
