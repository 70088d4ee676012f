import json
from itertools import product

import pytest
from hypothesis import strategies as st

from rocalearn import DATA, load_roca
from rocalearn.automata import PushdownAlphabet, Roca, Vca, VisiblySymbol

REF_PATH = DATA / "fig1.json"
REF_DATA = json.loads(REF_PATH.read_text())
AB = ("a", "b")


def W(s: str) -> tuple:
    """Word over single-character symbols."""
    return tuple(s)


def all_words(alphabet, max_len):
    for n in range(max_len + 1):
        yield from product(alphabet, repeat=n)


def oracle_run(data: dict, word):
    """Straight simulation of an automaton file, independent of the library.

    Returns (state or None for the sink, trace of counter values).
    """
    dz = {(e["from"], e["symbol"]): (e["to"], e["op"]) for e in data["delta_zero"]}
    dp = {(e["from"], e["symbol"]): (e["to"], e["op"]) for e in data["delta_pos"]}
    q, n, trace = data["initial"], 0, [0]
    for a in word:
        if q is not None:
            q, op = (dz if n == 0 else dp).get((q, a), (None, 0))
            n += op
        trace.append(n)
    return q, trace


def oracle_accepts(data: dict, word) -> bool:
    q, trace = oracle_run(data, word)
    return q in data["finals"] and trace[-1] == 0


def oracle_bounded(data: dict, word, limit: int) -> bool:
    q, trace = oracle_run(data, word)
    return q in data["finals"] and trace[-1] == 0 and max(trace) <= limit


@pytest.fixture
def ref_roca() -> Roca:
    return load_roca(REF_PATH)


def ref_vca() -> Vca:
    c, r, i = (lambda a: VisiblySymbol(a, "c")), (lambda a: VisiblySymbol(a, "r")), \
        (lambda a: VisiblySymbol(a, "int"))
    dz = {("q0", c("a")): "q0", ("q0", i("b")): "q2", ("q1", i("a")): "q2",
          ("q1", i("b")): "q2", ("q2", i("a")): "q2", ("q2", i("b")): "q2"}
    dp = {("q0", c("a")): "q0", ("q0", i("b")): "q1", ("q1", r("a")): "q1",
          ("q1", i("b")): "q1", ("q2", i("a")): "q2", ("q2", i("b")): "q2"}
    return Vca(PushdownAlphabet.over(AB), ("q0", "q1", "q2"), "q0", frozenset({"q1", "q2"}), dz, dp)


@st.composite
def rocas(draw, max_states=4, alphabet=AB, total=True):
    """Small ROCAs; with total=False some transitions are left to the sink."""
    n = draw(st.integers(1, max_states))
    states = [f"q{i}" for i in range(n)]
    finals = draw(st.sets(st.sampled_from(states)))
    dz, dp = {}, {}
    for q in states:
        for a in alphabet:
            if total or draw(st.booleans()):
                dz[(q, a)] = (draw(st.sampled_from(states)), draw(st.sampled_from((0, 1))))
            if total or draw(st.booleans()):
                dp[(q, a)] = (draw(st.sampled_from(states)), draw(st.sampled_from((-1, 0, 1))))
    return Roca(alphabet, states, "q0", finals, dz, dp)


# -- acceptance report ---------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def report(criterion: int, ok: bool, detail: str) -> None:
    """Record and print one acceptance verdict, then fail the test if it did not pass."""
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
