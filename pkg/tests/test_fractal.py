import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from cantorgames.cantor import avoiding_words, full_split, golden_mean, middle_thirds
from cantorgames.errors import NoRootInUnitInterval, NotRegularAtSample, TooFewScales, WitnessNotFound
from cantorgames.fractal import (IntervalSet, ScaleProfile, ahlfors_check, box_dimension,
                                 construction_measure, diffuse_check, diffuse_to_regular,
                                 ifs_similarity_dim, neighborhood, packing_constant,
                                 random_triples, regular_branching, regular_from_bob,
                                 separated_packing, uniform_shift_measure,
                                 uniformly_perfect_check)
from cantorgames.space import Ball
from cantorgames.strategies import avoiding_bob

UNIT = Ball.from_endpoints(0, 1)
half = F(1, 2)


def test_box_dimension_middle_thirds():
    c = middle_thirds(10)
    est, _ = box_dimension(ScaleProfile.from_construction(c, range(4, 11)))
    assert abs(est - math.log(2) / math.log(3)) < 0.02


def test_box_dimension_full_shift_is_one():
    c = full_split(Ball.cylinder(""), 2, 10)
    est, resid = box_dimension(ScaleProfile.from_construction(c, range(4, 11)))
    assert est == pytest.approx(1.0, abs=1e-12) and resid < 1e-9


def test_box_dimension_golden_mean():
    c = avoiding_words(["11"])
    est, _ = box_dimension(ScaleProfile.from_construction(c, range(4, 13)))
    assert abs(est - math.log((1 + math.sqrt(5)) / 2) / math.log(2)) < 0.03


def test_box_dimension_needs_three_scales():
    with pytest.raises(TooFewScales):
        box_dimension(ScaleProfile(((F(1, 2), 2), (F(1, 4), 4))))


def test_profile_rejects_bad_scales():
    with pytest.raises(ValueError):
        ScaleProfile(((F(1, 4), 2), (F(1, 2), 4)))


def test_profile_csv_round_trip():
    p = ScaleProfile.from_construction(golden_mean(6), range(7))
    text = p.to_csv()
    assert text.splitlines()[0] == "r_num,r_den,count"
    assert text.splitlines()[1] == "1,1,1"
    assert ScaleProfile.from_csv(text) == p


def _cylinders(max_len):
    return [Ball.cylinder(format(k, f"0{n}b")) if n else Ball.cylinder("")
            for n in range(max_len + 1) for k in range(2 ** n)]


def test_uniform_shift_measure_is_one_regular():
    cert = ahlfors_check(uniform_shift_measure, 1, _cylinders(8))
    assert cert.C == 1 and cert.samples == 511


def test_wrong_exponent_fails():
    with pytest.raises(NotRegularAtSample):
        ahlfors_check(uniform_shift_measure, half, _cylinders(16)[::97])


def test_middle_thirds_natural_measure():
    c = middle_thirds(6)
    mu = construction_measure(c)
    samples = [b for n in range(7) for b in c.levels[n]]
    assert mu(c.levels[3][0]) == F(1, 8)
    # delta = log 2 / log 3 is irrational; a close rational keeps C small
    cert = ahlfors_check(mu, F(6309, 10000), samples)
    assert cert.C < 2
    # balls straddling a removed gap see only the surviving mass
    assert mu(Ball.from_endpoints(F(1, 3), F(2, 3))) == 0


def test_packing_example():
    balls = separated_packing(UNIT, F(1, 10))
    assert [b.center for b in balls] == [F(1, 20) + 3 * k * F(1, 20) for k in range(7)]
    assert all(b.radius == F(1, 20) for b in balls)


@pytest.mark.parametrize("alpha, count", [(F(1, 10), 7), (F(1, 20), 13), (F(1, 40), 27),
                                          (half, 1)])
def test_packing_counts_and_separation(alpha, count):
    balls = separated_packing(UNIT, alpha)
    assert len(balls) == count
    sep = 3 * alpha * UNIT.radius
    for i, a in enumerate(balls):
        assert UNIT.contains(a)
        for b in balls[i + 1:]:
            assert abs(a.center - b.center) >= sep


def test_packing_counts_scale_with_alpha():
    alphas = [F(1, 2 ** k) for k in range(2, 10)]
    counts = [len(separated_packing(UNIT, a)) for a in alphas]
    for a, b in zip(counts, counts[1:]):
        assert 2 * a - 2 <= b <= 2 * a + 2
    for a, n in zip(alphas, counts):
        assert F(1, 2) <= n * a <= 2
    assert packing_constant(UNIT, F(1, 10)) == F(7, 10)


def test_packing_needs_line():
    with pytest.raises(ValueError):
        separated_packing(Ball.cylinder("0"), F(1, 4))


def test_diffuse_interval_passes():
    K = IntervalSet(((0, 1),))
    v = diffuse_check(K, F(1, 8), 1, random_triples(K, 1, 1000, seed=3))
    assert v.passed and v.checked == 1000
    assert all(K.contains(z) for z in v.witnesses)


def test_diffuse_singleton_fails():
    K = IntervalSet.point(half)
    v = diffuse_check(K, F(1, 8), 1, [(half, half, F(1, 10))])
    assert not v.passed and v.failure == (half, half, F(1, 10))


@pytest.mark.parametrize("K", [IntervalSet(((0, 1),)),
                               IntervalSet.from_construction(middle_thirds(5), 5),
                               IntervalSet(((0, 0), (F(1, 3), F(1, 2)), (1, 1)))])
def test_two_diffuse_forms_agree(K):
    # rho = (1 + b/2) r is at least (1 - b) r and b' rho = b r / 2 is at most
    # 2 b r, so a centre-form witness is always a ball-form witness
    beta = F(1, 8)
    bp = beta / (2 + beta)
    agree = 0
    for x, y, r in random_triples(K, half, 300, seed=11):
        rho = (1 + beta / 2) * r
        a = diffuse_check(K, beta, 1, [(x, y, r)]).passed
        b = diffuse_check(K, bp, 1, [(x, y, rho)], form="ball").passed
        assert a <= b
        agree += a == b
    assert agree >= 250


def test_uniformly_perfect_examples():
    K = IntervalSet(((0, 1),))
    pairs = [(x, r) for x, _y, r in random_triples(K, 1, 200, seed=1)]
    assert uniformly_perfect_check(K, half, 1, pairs).passed
    two = IntervalSet(((0, 0), (1, 1)))
    assert not uniformly_perfect_check(two, half, 1, [(0, half)]).passed
    cantor = IntervalSet.from_construction(middle_thirds(6), 6)
    assert uniformly_perfect_check(cantor, F(1, 10), 1, [(0, half)]).passed
    assert not uniformly_perfect_check(cantor, F(9, 10), 1, [(0, half)]).passed


@pytest.mark.parametrize("beta, want", [(F(1, 4), 0.5), (half, 1.0)])
def test_diffuse_to_regular_dimension(beta, want):
    tree = diffuse_to_regular(IntervalSet(((0, 1),)), beta, 8)
    assert [len(level) for level in tree.levels] == [2 ** n for n in range(9)]
    est, _ = box_dimension(tree.profile(range(2, 9)))
    assert abs(est - want) < 0.05


def test_diffuse_to_regular_children_nest():
    tree = diffuse_to_regular(IntervalSet.from_construction(middle_thirds(6), 6), F(1, 9), 3)
    for n in range(1, 4):
        for b in tree.levels[n]:
            assert tree.parent[b].contains(b)


def test_diffuse_to_regular_degenerate():
    with pytest.raises(WitnessNotFound):
        diffuse_to_regular(IntervalSet.point(0), F(1, 4), 2)


def test_regular_branching():
    assert regular_branching(half, F(1, 48), 1) == 4
    assert regular_branching(half, F(1, 100), half) == 2
    assert regular_branching(half, F(1, 2), 1) == 0
    with pytest.raises(ValueError):
        regular_from_bob(avoiding_bob(half), half, F(1, 2), 1, 1)


def test_regular_from_bob():
    tree = regular_from_bob(avoiding_bob(half), half, F(1, 48), 1, 3)
    assert [len(level) for level in tree.levels] == [1, 4, 16, 64]
    for n in range(1, 4):
        level = tree.levels[n]
        for i, a in enumerate(level):
            assert tree.parent[a].contains(a)
            assert not any(a.meets(b) for b in level[i + 1:])
    # every child was reached by legal play
    assert all(not t.finished for t in tree.transcripts.values())
    est, _ = box_dimension(tree.profile())
    assert abs(est - math.log(4) / math.log(48)) < 0.05


def test_neighborhoods():
    assert neighborhood(Ball.interval(0, 1), half) == Ball.interval(0, F(3, 2))
    assert neighborhood(Ball.cylinder("0110"), F(1, 4)) == Ball.cylinder("01")
    assert neighborhood(Ball.cylinder("0"), F(1, 8)) == Ball.cylinder("0")


def _float_root(lam, gam):
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = (lo + hi) / 2
        if lam ** mid + 2 * gam ** mid > 1:
            lo = mid
        else:
            hi = mid
    return lo


@settings(max_examples=40, deadline=None)
@given(hs.fractions(F(1, 20), F(9, 10)), hs.fractions(F(1, 500), F(1, 20)))
def test_similarity_dim_against_float_bisection(lam, gam):
    if lam + 2 * gam >= 1:
        return
    lo, hi = ifs_similarity_dim(lam, gam)
    assert hi - lo <= F(1, 10 ** 9)
    s = _float_root(float(lam), float(gam))
    assert float(lo) - 1e-12 <= s <= float(hi) + 1e-12


def test_similarity_dim_examples():
    lo, hi = ifs_similarity_dim(F(2, 3), F(1, 128))
    assert hi < half and hi - lo <= F(1, 10 ** 9)
    lo, hi = ifs_similarity_dim(F(4, 9), F(1, 36))
    assert lo <= half <= hi
    assert ifs_similarity_dim(F(1, 3), F(1, 3)) == (1, 1)
    with pytest.raises(NoRootInUnitInterval):
        ifs_similarity_dim(F(1, 2), F(1, 3))
