import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from cantorgames.cantor import (BudgetTable, ancestor, avoiding_words, build, dump,
                                extend_level, full_split, golden_mean, level_cells_meeting,
                                load, middle_thirds, new_construction, reindex_to_rich,
                                rich_budget_check, survivors, validate_budgets)
from cantorgames.errors import (BudgetExceeded, DepthNotBuilt, NotADescendant, NotLocal,
                                RNotAboveM)
from cantorgames.space import REAL_LINE, SHIFT, Ball

UNIT = Ball.from_endpoints(0, 1)


def words_avoiding(n, forbidden=("11",)):
    return sorted("".join(w) for w in itertools.product("01", repeat=n)
                  if not any(f in "".join(w) for f in forbidden))


def test_middle_child_removed():
    c = new_construction(UNIT, 3, BudgetTable({(0, 0): 1}))
    c = extend_level(c, {(0, UNIT): [Ball.from_endpoints(F(1, 3), F(2, 3))]})
    assert c.levels[1] == (Ball.from_endpoints(0, F(1, 3)), Ball.from_endpoints(F(2, 3), 1))


def test_empty_removals_split_fully():
    c = extend_level(new_construction(UNIT, 3))
    assert c.levels[1] == tuple(REAL_LINE.split(UNIT, 3))


def test_budget_exceeded_is_atomic():
    c = new_construction(UNIT, 3, BudgetTable({(0, 0): 1}))
    kids = REAL_LINE.split(UNIT, 3)
    with pytest.raises(BudgetExceeded):
        extend_level(c, {(0, UNIT): kids[:2]})
    assert c.depth == 0


def test_removal_must_be_descendant():
    c = new_construction(UNIT, 3, BudgetTable({(0, 0): 1}))
    with pytest.raises(NotADescendant):
        extend_level(c, {(0, UNIT): [Ball.from_endpoints(F(1, 4), F(1, 2))]})


def _with_budget(entries, R=4, depth=2):
    return build(Ball.cylinder(""), R, BudgetTable(entries), depth)


def test_validate_budgets_boundary():
    assert validate_budgets(_with_budget({(0, 1): 4}), F(1, 2), 4).passed
    rep = validate_budgets(_with_budget({(0, 1): 5}), F(1, 2), 4)
    assert not rep.passed
    assert (rep.violations[0].m, rep.violations[0].n) == (0, 1)


def test_validate_budgets_eps_one():
    ones = build(Ball.cylinder(""), 2, BudgetTable(rule=lambda m, n: 1), 4)
    assert validate_budgets(ones, 1, 2).passed
    assert validate_budgets(golden_mean(6), 1, 2).passed
    assert not validate_budgets(_with_budget({(1, 1): 2}), 1, 4).passed


def test_middle_thirds_depth_two():
    level = survivors(middle_thirds(2), 2)
    assert len(level) == 4
    assert {b.diameter for b in level} == {F(1, 9)}
    assert [b.lo for b in level] == [0, F(2, 9), F(6, 9), F(8, 9)]


def test_zero_removal_counts():
    assert len(survivors(full_split(Ball.cylinder(""), 4, 3), 3)) == 4 ** 3


def test_over_removal_empties_level():
    def all_kids(c):
        n = c.depth
        return {(n, b): c.structure.split(b, 2) for b in c.levels[n]}
    c = build(Ball.cylinder(""), 2, BudgetTable.diagonal(2), 2, all_kids)
    assert survivors(c, 1) == []
    assert survivors(c, 2) == []


def test_depth_not_built():
    with pytest.raises(DepthNotBuilt):
        survivors(golden_mean(3), 4)


def test_golden_mean_matches_word_oracle():
    c = golden_mean(10)
    for n in range(11):
        assert sorted(b.word for b in c.levels[n]) == words_avoiding(n)
    assert len(c.levels[10]) == 144


def test_lazy_agrees_with_eager():
    lazy = avoiding_words(["11", "000"])
    eager = avoiding_words(["11", "000"], depth=8)
    for n in range(9):
        assert lazy.level(n) == list(eager.levels[n])
        assert sorted(b.word for b in eager.levels[n]) == words_avoiding(n, ("11", "000"))


@settings(max_examples=25, deadline=None)
@given(hs.integers(2, 4), hs.integers(1, 4), hs.data())
def test_nesting_and_counting(R, depth, data):
    def remover(c):
        n = c.depth
        out = {}
        for b in c.levels[n]:
            kids = c.structure.split(b, R)
            k = data.draw(hs.integers(0, 1))
            if k:
                out[(n, b)] = [kids[data.draw(hs.integers(0, R - 1))]]
        return out
    c = build(UNIT, R, BudgetTable.diagonal(1), depth, remover)
    for n in range(depth):
        for child in c.levels[n + 1]:
            assert sum(p.contains(child) for p in c.levels[n]) == 1
        removed = sum(len(v) for (m, nn, _p), v in c.removals.items() if nn == n)
        assert len(c.levels[n + 1]) >= R * len(c.levels[n]) - removed


def test_ancestor_and_cells():
    b0 = UNIT
    b = Ball.from_endpoints(F(5, 9), F(6, 9))
    assert ancestor(b0, 3, b, 1) == Ball.from_endpoints(F(1, 3), F(2, 3))
    cells = level_cells_meeting(b0, 3, 2, Ball.from_endpoints(F(1, 3), F(2, 3)))
    assert len(cells) == 3
    assert level_cells_meeting(Ball.cylinder(""), 2, 3, Ball.cylinder("1")) == \
        [Ball.cylinder(w) for w in ("100", "101", "110", "111")]


def test_reindex_identity():
    c = golden_mean(5)
    c2, table = reindex_to_rich(c, 1, 2)
    assert c2 is c and table is c.budgets


def _local_golden(R_bits: int, depth: int):
    """Binary words avoiding 11, grown R_bits letters per level."""
    R = 2 ** R_bits

    def remover(c):
        n = c.depth
        out = {}
        for b in c.levels[n]:
            bad = [k for k in SHIFT.split(b, R) if "11" in k.word]
            if bad:
                out[(n, b)] = bad
        return out
    return build(Ball.cylinder(""), R, BudgetTable.diagonal(R), depth, remover)


def test_reindex_survivors_agree_golden():
    ell = 3
    c = _local_golden(ell, 2)
    c2, table = reindex_to_rich(c, ell, 2)
    for k in range(3):
        assert set(c2.levels[ell * k]) == set(c.levels[k])
        assert sorted(b.word for b in c2.levels[ell * k]) == words_avoiding(ell * k)
    # pure splitting between multiples of ell
    assert len(c2.levels[1]) == 2 and len(c2.levels[2]) == 4
    nz = {(m, n) for m, n, _v in table.nonzero(5)}
    assert nz == {(0, 2), (3, 5)}


def test_reindex_budget_value():
    c = build(UNIT, 289, BudgetTable.diagonal(17), 1)
    _c2, table = reindex_to_rich(c, 2, 17, F(1, 2))
    assert table[0, 1] == 17 and table[2, 3] == 17
    assert table[0, 2] == 0 and table[1, 2] == 0


def test_reindex_rejects_nonlocal():
    c = build(Ball.cylinder(""), 4, BudgetTable({(0, 1): 1}), 2,
              lambda c: {(0, c.b0): [Ball.cylinder("0000")]} if c.depth == 1 else None)
    with pytest.raises(NotLocal):
        reindex_to_rich(c, 2, 2)


def test_rich_check_examples():
    assert rich_budget_check(BudgetTable.zero(), 17, F(1, 100), 10).passed
    R, y = 16, F(1, 4)
    bad = rich_budget_check(BudgetTable({(0, 0): F(R, 4) * y + 1}), R, y, 3)
    assert not bad.passed and bad.first_violation[0] == 0
    with pytest.raises(RNotAboveM):
        rich_budget_check(BudgetTable.zero(), 4, y, 3)


def test_rich_sum_of_reindexed_table():
    # one removal stage per ell levels: weight (4/R)^ell per entry
    table = BudgetTable(rule=lambda m, n: 17 if m % 2 == 0 and n == m + 1 else 0, band=1)
    rep = rich_budget_check(table, 17, F(1, 4), 5)
    assert dict(rep.sums)[1] == F(16, 17)
    assert dict(rep.sums)[0] == 0


def test_dump_load_round_trip():
    for c in (golden_mean(5), middle_thirds(3)):
        text = dump(c)
        assert text.splitlines()[0].startswith(f"CANTOR R={c.R} B0=")
        back = load(text)
        assert back.levels == c.levels
        assert dict(back.removals) == dict(c.removals)


def test_load_rejects_tampered_level():
    text = dump(golden_mean(3)).replace("S:000\n", "S:011\n", 1)
    with pytest.raises(Exception):
        load(text)
