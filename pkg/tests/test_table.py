from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rocalearn.automata import dfa_shortest_difference, roca_to_dict, roca_to_level_dfa
from rocalearn.table import (ObservationTable, RepairLimitExceeded, TableContractError,
                             render_word, suffixes)
from rocalearn.teachers import RocaTeacher

from conftest import AB, W, all_words, oracle_accepts, oracle_bounded, oracle_run, rocas

SAMPLE_DUMP = """\
     | ε    | a | ba
---- | ---- | - | --
ε    | 0, 0 | 0 | 1
a    | 0, 1 | 0 | 1
ab   | 0, 1 | 1 | 1
aba  | 1, 0 | 1 | 1
aa   | 0, ⊥ | 0 | 0
---- | ---- | - | --
b    | 1, 0 | 1 | 1
abb  | 0, 1 | 1 | 1
abaa | 1, 0 | 1 | 1
abab | 1, 0 | 1 | 1
aaa  | 0, ⊥ | 0 | 0
aab  | 0, ⊥ | 0 | 0
"""

OPEN_AFTER_ONE = """\
     | ε
---- | ----
ε    | 0, 0
a    | 0, 1
ab   | 0, 1
aba  | 1, 0
abb  | 0, 1
---- | ----
b    | 1, 0
aa   | 0, ⊥
abaa | 1, 0
abab | 1, 0
abba | 1, 0
abbb | 0, ⊥
"""

OPEN_AFTER_TWO = """\
      | ε
----- | ----
ε     | 0, 0
a     | 0, 1
ab    | 0, 1
aba   | 1, 0
abb   | 0, 1
abbb  | 0, 1
----- | ----
b     | 1, 0
aa    | 0, ⊥
abaa  | 1, 0
abab  | 1, 0
abba  | 1, 0
abbba | 1, 0
abbbb | 0, ⊥
"""


def words(*xs):
    return [W(x) for x in xs]


@pytest.fixture
def teacher(ref_roca):
    return RocaTeacher(ref_roca)


@pytest.fixture
def sample(teacher):
    t = ObservationTable.from_sets(AB, words("", "a", "ab", "aba", "aa"), words(""),
                                   words("", "a", "ba"), limit=1)
    t.fill(teacher)
    return t


@pytest.fixture
def open_table(teacher):
    t = ObservationTable.from_sets(AB, words("", "a", "ab", "aba"), words(""), limit=1)
    t.fill(teacher)
    return t


class TestInit:
    def test_rows(self):
        t = ObservationTable(AB)
        assert t.ordered_rows() == words("", "a", "b") and t.S == t.Shat == [()]
        assert t.limit == 0

    def test_unary(self):
        assert ObservationTable(("a",)).ordered_rows() == words("", "a")

    def test_empty_alphabet(self):
        with pytest.raises(ValueError):
            ObservationTable(())

    def test_first_fill(self, teacher):
        t = ObservationTable(AB)
        t.fill(teacher)
        assert t.membership_cell(W("b"), ()) is True
        assert t.counter_cell((), ()) == 0
        assert t.counter_cell(W("a"), ()) is None
        assert t.prefix_set() == {(), W("b")}


class TestFill:
    def test_sample_dump(self, sample):
        assert sample.dump() == SAMPLE_DUMP

    def test_sample_cells(self, sample):
        assert sample.counter_cell(W("ab"), ()) == 1 and not sample.membership_cell(W("ab"), ())
        assert sample.membership_cell(W("aa"), W("ba")) is False

    def test_refill_is_free(self, sample, teacher):
        before = teacher.stats.as_dict()
        sample.fill(teacher)
        assert teacher.stats.as_dict() == before

    def test_ledger_matches_teacher(self, sample, teacher):
        assert sample.tree.ledger() == (teacher.stats.membership, teacher.stats.counter_value)

    def test_render(self):
        assert render_word(()) == "ε" and render_word(W("ab")) == "ab"
        assert render_word(("{", '"k"')) == '{ "k"'

    def test_suffixes(self):
        assert suffixes(W("ab")) == [W("ab"), W("b"), ()]


class TestApprox:
    def test_epsilon(self, sample):
        assert sample.approx(()) == set(words("", "aa", "aaa", "aab"))

    def test_aa(self, sample):
        assert sample.approx(W("aa")) == set(words("", "a", "ab", "aa", "abb", "aaa", "aab"))

    def test_not_a_row(self, sample):
        with pytest.raises(KeyError):
            sample.approx(W("bbbb"))

    def test_not_transitive(self, sample):
        # a ~ aa ~ ε but a is not approximately ε
        assert W("a") in sample.approx(W("aa")) and W("aa") in sample.approx(())
        assert W("a") not in sample.approx(())


class TestConditions:
    def test_sample_closed(self, sample):
        assert sample.find_openness() is None
        assert W("aba") in sample.approx(W("b"))

    def test_sample_sigma(self, sample):
        assert sample.find_sigma_inconsistency() == ((), W("aa"), "b", ())

    def test_sample_bot(self, sample):
        assert sample.find_bot_inconsistency() == (W("aa"), (), ())

    def test_open_table_classically_open(self, open_table):
        # both (0, ⊥) rows match no R row exactly; resolving abb, then abbb,
        # gives the next two frozen tables
        assert open_table.open_rows(exact=True) == words("aa", "abb")

    def test_open_table_closed_with_wildcards(self, open_table):
        assert open_table.is_closed()

    def test_single_class_table_is_closed(self):
        t = ObservationTable(("a",))
        t.fill(_Const())
        assert t.is_closed() and t.is_sigma_consistent() and t.is_bot_consistent()

    def test_all_bottom_column_is_bot_consistent(self):
        t = ObservationTable(AB)
        t.fill(_Const())
        assert all(t.counter_cell(u, ()) is None for u in t.ordered_rows())
        assert t.find_bot_inconsistency() is None


class _Const:
    """Teacher for the empty language."""

    def membership(self, w):
        return False

    def counter_value(self, w):
        return 0


class TestResolve:
    def test_open_table_openness_chain(self, open_table, teacher):
        open_table.resolve_openness(W("abb"), teacher)
        assert open_table.dump() == OPEN_AFTER_ONE
        assert open_table.open_rows(exact=True) == words("aa", "abbb")
        open_table.resolve_openness(W("abbb"), teacher)
        assert open_table.dump() == OPEN_AFTER_TWO

    def test_open_table_terminates(self, open_table, teacher):
        open_table.make_consistent(teacher, max_repairs=50)
        assert open_table.is_closed() and open_table.is_sigma_consistent() and open_table.is_bot_consistent()

    def test_sigma(self, sample, teacher):
        sample.resolve_sigma_inconsistency(((), W("aa"), "b", ()), teacher)
        assert sample.S == [(), W("b")]
        assert W("aa") not in sample.approx(())
        w = sample.find_sigma_inconsistency()
        assert w is None or w[:3] != ((), W("aa"), "b")

    def test_bot_case_three(self, sample, teacher):
        assert sample.bot_witness((), ()) == (W("b"), (), W("b"))
        # aab leaves L_1: the counter reaches 2
        assert max(oracle_run(roca_to_dict(teacher.target), "aab")[1]) == 2
        assert sample.resolve_bot_inconsistency((W("aa"), (), ()), teacher) == 3
        assert sample.S == [(), W("b")] and W("b") in sample.Shat
        assert W("aa") not in sample.approx(())
        assert sample.find_bot_inconsistency() != (W("aa"), (), ())

    def test_bot_rejects_non_mismatch(self, sample, teacher):
        with pytest.raises(TableContractError):
            sample.resolve_bot_inconsistency(((), W("b"), ()), teacher)

    def test_make_consistent(self, sample, teacher, ref_roca):
        sample.make_consistent(teacher)
        assert sample.is_closed() and sample.is_sigma_consistent() and sample.is_bot_consistent()
        adfa = sample.build_dfa()
        assert adfa.dfa.accepts(W("aba")) and not adfa.dfa.accepts(W("aabaa"))
        assert dfa_shortest_difference(adfa.dfa, roca_to_level_dfa(ref_roca, 1)) is None

    def test_consistent_table_untouched(self, sample, teacher):
        sample.make_consistent(teacher)
        before = (sample.dump(), teacher.stats.as_dict())
        assert sample.make_consistent(teacher) == 0
        assert (sample.dump(), teacher.stats.as_dict()) == before

    def test_repair_limit(self, sample, teacher):
        with pytest.raises(RepairLimitExceeded):
            sample.make_consistent(teacher, max_repairs=1)

    def test_build_dfa_requires_consistency(self, sample):
        with pytest.raises(TableContractError):
            sample.build_dfa()


class TestGrowth:
    def test_prefix_closure(self, teacher):
        t = ObservationTable(AB)
        t.add_counterexample(W("ab"), 0, teacher)
        assert t.R == words("", "a", "ab")

    def test_raising_limit_flips_membership(self, teacher):
        t = ObservationTable(AB, limit=1)
        t.add_counterexample(W("aabaa"), 1, teacher)
        assert t.membership_cell(W("aabaa"), ()) is False
        t.set_limit(2, teacher)
        t.fill(teacher)
        assert t.membership_cell(W("aabaa"), ()) is True
        assert t.counter_cell(W("aa"), ()) == 2

    def test_extend_alphabet(self):
        target = _Const()
        t = ObservationTable(("{", "}"))
        t.fill(target)
        t.extend_alphabet(['"name"'], target)
        assert ('"name"',) in t.ordered_rows()
        with pytest.raises(ValueError):
            t.extend_alphabet(["{"], target)


def test_single_class_dfa():
    t = ObservationTable(AB)
    t.fill(_Const())
    adfa = t.build_dfa()
    assert len(adfa.dfa.states) == 1 and adfa.bin_state == "c0"


# -- properties on random tables ---------------------------------------------------

short_words = st.lists(st.sampled_from(AB), max_size=4).map(tuple)


@st.composite
def tables(draw):
    """A filled random table together with its teacher and target data."""
    roca = draw(rocas(max_states=3))
    limit = draw(st.integers(0, 2))
    teacher = RocaTeacher(roca)
    t = ObservationTable(AB, limit)
    for w in draw(st.lists(short_words, max_size=3)):
        for i in range(len(w) + 1):
            t.add_representative(w[:i])
    for core in (True, False):
        for s in draw(st.lists(short_words, max_size=2)):
            for x in suffixes(s):
                t.add_separator(x, core=core)
    t.fill(teacher)
    return t, teacher, roca_to_dict(roca)


def _brute_prefix_set(t, data):
    accepted = [u + s for u in t.ordered_rows() for s in t.Shat
                if oracle_bounded(data, u + s, t.limit)]
    return {w[:i] for w in accepted for i in range(len(w) + 1)}


@settings(max_examples=60, deadline=None)
@given(tables())
def test_cells_follow_their_definition(case):
    t, _, data = case
    t.check_structure()
    pre = _brute_prefix_set(t, data)
    assert t.prefix_set() == pre
    for u in t.ordered_rows():
        for s in t.Shat:
            assert t.membership_cell(u, s) == oracle_bounded(data, u + s, t.limit)
        for s in t.S:
            expected = oracle_run(data, u + s)[1][-1] if u + s in pre else None
            assert t.counter_cell(u, s) == expected


@settings(max_examples=60, deadline=None)
@given(tables())
def test_query_accounting(case):
    t, teacher, _ = case
    assert t.tree.ledger() == (teacher.stats.membership, teacher.stats.counter_value)
    words_ = {u + s for u in t.ordered_rows() for s in t.Shat}
    closure = {w[:i] for w in words_ for i in range(len(w) + 1)}
    assert teacher.stats.membership <= len(words_)
    assert teacher.stats.counter_value <= len(closure)
    before = teacher.stats.as_dict()
    t.fill(teacher)
    assert teacher.stats.as_dict() == before


@settings(max_examples=60, deadline=None)
@given(tables())
def test_approx_reflexive_symmetric(case):
    t = case[0]
    rows = t.ordered_rows()
    ax = {u: t.approx(u) for u in rows}
    for u in rows:
        assert u in ax[u]
        for v in ax[u]:
            assert u in ax[v]


@settings(max_examples=40, deadline=None)
@given(tables())
def test_make_consistent_gives_a_congruence(case):
    t, teacher, data = case
    t.make_consistent(teacher, max_repairs=2000)
    t.check_structure()
    rows = t.ordered_rows()
    ax = {u: t.approx(u) for u in rows}
    for u in rows:
        for v in ax[u]:
            assert ax[u] == ax[v]  # transitivity: classes are identical
    adfa = t.build_dfa()
    for u in rows:
        assert adfa.dfa.accepts(u) == t.membership_cell(u, ())


@settings(max_examples=40, deadline=None)
@given(tables())
def test_bin_words_share_one_approx_set(case):
    t = case[0]
    bins = [u for u in t.ordered_rows() if t.counter_cell(u, ()) is None]
    sets = {frozenset(t.approx(u)) for u in bins}
    assert len(sets) <= 1


def _behaviour_equivalent(data, u, v, depth):
    """Same membership on every continuation up to `depth`, and same counter on
    every prefix of an accepted continuation."""
    for z in all_words(AB, depth):
        if oracle_accepts(data, u + z) != oracle_accepts(data, v + z):
            return False
        if oracle_accepts(data, u + z):
            tu, tv = oracle_run(data, u + z)[1], oracle_run(data, v + z)[1]
            if tu[len(u):] != tv[len(v):]:
                return False
    return True


@settings(max_examples=30, deadline=None)
@given(tables())
def test_behaviour_equivalent_rows_are_approximate(case):
    t, _, data = case
    depth = max(len(s) for s in t.S)
    good = [u for u in t.ordered_rows() if t.counter_cell(u, ()) is not None]
    for u, v in product(good, repeat=2):
        if _behaviour_equivalent(data, u, v, depth):
            assert u in t.approx(v)


@settings(max_examples=40, deadline=None)
@given(tables(), st.lists(short_words, max_size=2), st.lists(short_words, max_size=2),
       st.booleans())
def test_extensions_only_shrink_approx(case, extra_r, extra_s, core):
    t, teacher, _ = case
    rows = t.ordered_rows()
    before = {u: t.approx(u) for u in rows}
    for w in extra_r:
        for i in range(len(w) + 1):
            t.add_representative(w[:i])
    for s in extra_s:
        for x in suffixes(s):
            t.add_separator(x, core=core)
    t.fill(teacher)
    for u in rows:
        assert t.approx(u) & set(rows) <= before[u]
