"""Realtime one-counter automata, DFAs and visibly one-counter automata.

Words are tuples of symbols; a symbol is any string. Transition tables may be
partial: every missing entry leads to an implicit rejecting sink that loops on
every symbol with counter operation 0.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional

Word = tuple[str, ...]
# key of an edge: (state, symbol); value (target, op) for ROCAs
Edge = tuple[str, str]


class InvalidSymbol(ValueError):
    def __init__(self, symbol: str, position: int):
        super().__init__(f"symbol {symbol!r} at position {position} is not in the alphabet")
        self.symbol = symbol
        self.position = position


class AutomatonFormatError(ValueError):
    pass


class Configuration(NamedTuple):
    state: Optional[str]  # None is the implicit sink
    counter: int


def as_word(symbols: Iterable[str]) -> Word:
    return tuple(symbols)


def words_up_to(alphabet: Iterable[str], length: int) -> Iterator[Word]:
    """All words of length <= `length`, shortest first, then in alphabet order."""
    alphabet = tuple(alphabet)
    for n in range(length + 1):
        yield from product(alphabet, repeat=n)


def word_key(alphabet_index: Mapping[str, int]):
    """Sort key: shorter words first, then lexicographic in alphabet order."""
    return lambda w: (len(w), tuple(alphabet_index[a] for a in w))


def _check_alphabet(alphabet: tuple[str, ...]) -> None:
    if len(set(alphabet)) != len(alphabet):
        raise AutomatonFormatError(f"duplicate symbols in alphabet {alphabet}")


@dataclass(frozen=True, eq=False)
class Roca:
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    initial: str
    finals: frozenset[str]
    delta_zero: Mapping[Edge, tuple[str, int]]
    delta_pos: Mapping[Edge, tuple[str, int]]
    _symbols: frozenset = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "delta_zero", dict(self.delta_zero))
        object.__setattr__(self, "delta_pos", dict(self.delta_pos))
        object.__setattr__(self, "_symbols", frozenset(self.alphabet))
        _check_alphabet(self.alphabet)
        known = set(self.states)
        if len(known) != len(self.states):
            raise AutomatonFormatError("duplicate state ids")
        if self.initial not in known:
            raise AutomatonFormatError(f"initial state {self.initial!r} is not a state")
        if not self.finals <= known:
            raise AutomatonFormatError(f"final states {sorted(self.finals - known)} are not states")
        for name, table, ops in (("delta_zero", self.delta_zero, (0, 1)),
                                 ("delta_pos", self.delta_pos, (-1, 0, 1))):
            for (q, a), (p, op) in table.items():
                if q not in known or p not in known:
                    raise AutomatonFormatError(f"{name}: unknown state in {q!r} -{a}-> {p!r}")
                if a not in self._symbols:
                    raise AutomatonFormatError(f"{name}: unknown symbol {a!r}")
                if op not in ops:
                    raise AutomatonFormatError(f"{name}: illegal op {op} on {q!r} -{a}->")

    def is_total(self) -> bool:
        n = len(self.states) * len(self.alphabet)
        return len(self.delta_zero) == n and len(self.delta_pos) == n

    def size(self) -> int:
        """Number of states, counting the sink when some transition is missing."""
        return len(self.states) + (0 if self.is_total() else 1)

    def transition(self, c: Configuration, a: str) -> tuple[Configuration, int]:
        if c.state is None:
            return c, 0
        table = self.delta_zero if c.counter == 0 else self.delta_pos
        target = table.get((c.state, a))
        if target is None:
            return Configuration(None, c.counter), 0
        p, op = target
        return Configuration(p, c.counter + op), op

    def step(self, c: Configuration, a: str) -> Configuration:
        if a not in self._symbols:
            raise InvalidSymbol(a, 0)
        return self.transition(c, a)[0]

    def run(self, w: Iterable[str]) -> tuple[Configuration, list[int]]:
        c = Configuration(self.initial, 0)
        trace = [0]
        for i, a in enumerate(w):
            if a not in self._symbols:
                raise InvalidSymbol(a, i)
            c = self.transition(c, a)[0]
            trace.append(c.counter)
        return c, trace

    def accepts(self, w: Iterable[str]) -> bool:
        c, _ = self.run(w)
        return c.counter == 0 and c.state in self.finals

    def counter_value(self, w: Iterable[str]) -> int:
        return self.run(w)[0].counter

    def height(self, w: Iterable[str]) -> int:
        return max(self.run(w)[1])

    def ops(self, w: Iterable[str]) -> list[int]:
        c = Configuration(self.initial, 0)
        out = []
        for i, a in enumerate(w):
            if a not in self._symbols:
                raise InvalidSymbol(a, i)
            c, op = self.transition(c, a)
            out.append(op)
        return out

    def coreachable_states(self) -> frozenset[str]:
        """States from which a final state is reachable in the transition graph.

        Every other state (and the sink) can never lead to acceptance.
        """
        preds: dict[str, set[str]] = {q: set() for q in self.states}
        for table in (self.delta_zero, self.delta_pos):
            for (q, _), (p, _) in table.items():
                preds[p].add(q)
        seen = set(self.finals)
        todo = list(self.finals)
        while todo:
            p = todo.pop()
            for q in preds[p]:
                if q not in seen:
                    seen.add(q)
                    todo.append(q)
        return frozenset(seen)


@dataclass(frozen=True, eq=False)
class Dfa:
    alphabet: tuple[str, ...]
    states: tuple[str, ...]
    initial: str
    finals: frozenset[str]
    delta: Mapping[Edge, str]

    def __post_init__(self):
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "finals", frozenset(self.finals))
        object.__setattr__(self, "delta", dict(self.delta))
        _check_alphabet(self.alphabet)
        known = set(self.states)
        if self.initial not in known:
            raise AutomatonFormatError(f"initial state {self.initial!r} is not a state")
        if not self.finals <= known:
            raise AutomatonFormatError("final states must be states")
        for (q, a), p in self.delta.items():
            if q not in known or p not in known:
                raise AutomatonFormatError(f"delta: unknown state in {q!r} -{a}-> {p!r}")

    def run(self, w: Iterable[str]) -> Optional[str]:
        q: Optional[str] = self.initial
        for a in w:
            q = self.delta.get((q, a))
            if q is None:
                return None
        return q

    def accepts(self, w: Iterable[str]) -> bool:
        return self.run(w) in self.finals


@dataclass(frozen=True, eq=False)
class AnnotatedDfa:
    """A DFA whose states carry a counter level; `bin_state` is the class of
    words that cannot be extended to an accepted word."""

    dfa: Dfa
    levels: Mapping[str, int]
    bin_state: Optional[str] = None
    representatives: Mapping[str, Word] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.dfa.states)


# -- visibly encoding ------------------------------------------------------

KIND_OF_OP = {1: "c", -1: "r", 0: "int"}
SIGN_OF_KIND = {"c": 1, "r": -1, "int": 0}


class VisiblySymbol(NamedTuple):
    symbol: str
    kind: str  # "c" (call), "r" (return) or "int" (internal)

    @property
    def sign(self) -> int:
        return SIGN_OF_KIND[self.kind]

    def __str__(self) -> str:
        return f"{self.symbol}_{self.kind}"


@dataclass(frozen=True)
class PushdownAlphabet:
    calls: frozenset
    returns: frozenset
    internals: frozenset

    def __post_init__(self):
        if self.calls & self.returns or self.calls & self.internals or self.returns & self.internals:
            raise ValueError("call, return and internal symbols must be disjoint")

    @classmethod
    def over(cls, alphabet: Iterable[str]) -> "PushdownAlphabet":
        alphabet = tuple(alphabet)
        return cls(frozenset(VisiblySymbol(a, "c") for a in alphabet),
                   frozenset(VisiblySymbol(a, "r") for a in alphabet),
                   frozenset(VisiblySymbol(a, "int") for a in alphabet))

    def sign(self, a) -> int:
        if a in self.calls:
            return 1
        if a in self.returns:
            return -1
        if a in self.internals:
            return 0
        raise InvalidSymbol(str(a), 0)


@dataclass(frozen=True, eq=False)
class Vca:
    alphabet: PushdownAlphabet
    states: tuple[str, ...]
    initial: str
    finals: frozenset[str]
    delta_zero: Mapping[tuple[str, VisiblySymbol], str]
    delta_pos: Mapping[tuple[str, VisiblySymbol], str]

    def __post_init__(self):
        for q, a in self.delta_zero:
            if a in self.alphabet.returns:
                raise AutomatonFormatError(f"return symbol {a} in delta_zero")


@dataclass(frozen=True)
class VcaRun:
    accepted: bool
    trace: list[int]

    @property
    def counter_value(self) -> int:
        return self.trace[-1]

    @property
    def height(self) -> int:
        return max(self.trace)


def to_visibly(roca: Roca, w: Iterable[str]) -> tuple[VisiblySymbol, ...]:
    w = tuple(w)
    return tuple(VisiblySymbol(a, KIND_OF_OP[op]) for a, op in zip(w, roca.ops(w)))


def sigma(vw: Iterable[VisiblySymbol]) -> Word:
    return tuple(a.symbol for a in vw)


def sign_sum(vw: Iterable[VisiblySymbol]) -> int:
    return sum(a.sign for a in vw)


def vca_run(vca: Vca, w: Iterable[VisiblySymbol]) -> VcaRun:
    q: Optional[str] = vca.initial
    n = 0
    trace = [0]
    for a in w:
        sign = vca.alphabet.sign(a)
        if q is not None:
            if n == 0 and sign < 0:
                q = None
            else:
                q = (vca.delta_zero if n == 0 else vca.delta_pos).get((q, a))
        if q is None:
            # rejected; the counter stops being meaningful, keep it frozen
            trace.append(n)
            continue
        n += sign
        trace.append(n)
    return VcaRun(q is not None and n == 0 and q in vca.finals, trace)


def roca_to_vca(roca: Roca) -> Vca:
    """Relabel each transition by the kind of its counter operation."""
    dz = {(q, VisiblySymbol(a, KIND_OF_OP[op])): p for (q, a), (p, op) in roca.delta_zero.items()}
    dp = {(q, VisiblySymbol(a, KIND_OF_OP[op])): p for (q, a), (p, op) in roca.delta_pos.items()}
    return Vca(PushdownAlphabet.over(roca.alphabet), roca.states, roca.initial, roca.finals, dz, dp)


# -- DFA utilities -----------------------------------------------------------

def dfa_shortest_difference(a: Dfa, b: Dfa) -> Optional[Word]:
    """Shortest word accepted by exactly one of the DFAs (BFS over the product)."""
    if set(a.alphabet) != set(b.alphabet):
        raise ValueError(f"alphabet mismatch: {a.alphabet} vs {b.alphabet}")
    start = (a.initial, b.initial)
    parent: dict = {start: None}
    queue = deque([start])
    while queue:
        pair = queue.popleft()
        p, q = pair
        if (p in a.finals) != (q in b.finals):
            word = []
            while parent[pair] is not None:
                pair, sym = parent[pair]
                word.append(sym)
            return tuple(reversed(word))
        for sym in a.alphabet:
            nxt = (a.delta.get((p, sym)) if p is not None else None,
                   b.delta.get((q, sym)) if q is not None else None)
            if nxt == (None, None) or nxt in parent:
                continue
            parent[nxt] = (pair, sym)
            queue.append(nxt)
    return None


def config_name(q: str, n: int) -> str:
    return f"{q}@{n}"


def roca_to_level_dfa(roca: Roca, limit: int) -> Dfa:
    """DFA over the reachable configurations with counter <= limit.

    Leaving that band (or entering the ROCA sink) goes to the DFA's implicit
    reject sink, so the DFA accepts exactly the height-bounded sublanguage.
    """
    start = Configuration(roca.initial, 0)
    seen = {start}
    order = [start]
    delta = {}
    queue = deque([start])
    while queue:
        c = queue.popleft()
        for a in roca.alphabet:
            d, _ = roca.transition(c, a)
            if d.state is None or d.counter > limit:
                continue
            delta[(config_name(*c), a)] = config_name(*d)
            if d not in seen:
                seen.add(d)
                order.append(d)
                queue.append(d)
    finals = {config_name(*c) for c in order if c.counter == 0 and c.state in roca.finals}
    return Dfa(roca.alphabet, tuple(config_name(*c) for c in order), config_name(*start),
               finals, delta)


def trim_states(dfa: Dfa) -> set[str]:
    """States both reachable from the initial state and co-reachable to a final state."""
    reach = {dfa.initial}
    todo = [dfa.initial]
    while todo:
        q = todo.pop()
        for a in dfa.alphabet:
            p = dfa.delta.get((q, a))
            if p is not None and p not in reach:
                reach.add(p)
                todo.append(p)
    preds: dict[str, set[str]] = {}
    for (q, _), p in dfa.delta.items():
        preds.setdefault(p, set()).add(q)
    co = set(dfa.finals)
    todo = list(co)
    while todo:
        p = todo.pop()
        for q in preds.get(p, ()):
            if q not in co:
                co.add(q)
                todo.append(q)
    return reach & co


def minimize_annotated(dfa: Dfa, levels: Mapping[str, int]) -> AnnotatedDfa:
    """Trim, then merge states with the same future and the same level.

    Moore-style refinement starting from the partition by (final, level); the
    result has no bin class because every remaining state is co-reachable.
    """
    keep = trim_states(dfa)
    if dfa.initial not in keep:
        empty = Dfa(dfa.alphabet, ("bin",), "bin", frozenset(), {})
        return AnnotatedDfa(empty, {}, "bin", {"bin": ()})
    states = [q for q in dfa.states if q in keep]
    block = {q: (q in dfa.finals, levels[q]) for q in states}
    while True:
        sig = {q: (block[q],) + tuple(block.get(dfa.delta.get((q, a))) for a in dfa.alphabet)
               for q in states}
        ids: dict = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in states}
        if len(ids) == len(set(block.values())):
            block = new
            break
        block = new
    # name classes in BFS order from the initial state
    names: dict[int, str] = {}
    reps: dict[str, Word] = {}
    queue = deque([(dfa.initial, ())])
    seen = {dfa.initial}
    while queue:
        q, w = queue.popleft()
        if block[q] not in names:
            names[block[q]] = f"s{len(names)}"
            reps[names[block[q]]] = w
        for a in dfa.alphabet:
            p = dfa.delta.get((q, a))
            if p in keep and p not in seen:
                seen.add(p)
                queue.append((p, w + (a,)))
    delta = {}
    finals = set()
    lv = {}
    for q in states:
        if q not in seen:
            continue
        n = names[block[q]]
        lv[n] = levels[q]
        if q in dfa.finals:
            finals.add(n)
        for a in dfa.alphabet:
            p = dfa.delta.get((q, a))
            if p in seen:
                delta[(n, a)] = names[block[p]]
    order = sorted(names.values(), key=lambda s: int(s[1:]))
    return AnnotatedDfa(Dfa(dfa.alphabet, order, names[block[dfa.initial]], finals, delta),
                        lv, None, reps)


def behavior_dfa(roca: Roca, limit: int) -> AnnotatedDfa:
    """Minimal level-annotated recognizer of the height-bounded sublanguage."""
    dfa = roca_to_level_dfa(roca, limit)
    levels = {q: int(q.rsplit("@", 1)[1]) for q in dfa.states}
    return minimize_annotated(dfa, levels)


def dfa_as_roca(dfa: Dfa) -> Roca:
    delta = {edge: (p, 0) for edge, p in dfa.delta.items()}
    return Roca(dfa.alphabet, dfa.states, dfa.initial, dfa.finals, delta, delta)


# -- serialization -----------------------------------------------------------

def roca_to_dict(roca: Roca) -> dict:
    def edges(table):
        return [{"from": q, "symbol": a, "to": p, "op": op} for (q, a), (p, op) in table.items()]
    return {"alphabet": list(roca.alphabet), "states": list(roca.states),
            "initial": roca.initial, "finals": sorted(roca.finals),
            "delta_zero": edges(roca.delta_zero), "delta_pos": edges(roca.delta_pos)}


def dfa_to_dict(dfa: Dfa) -> dict:
    return {"alphabet": list(dfa.alphabet), "states": list(dfa.states),
            "initial": dfa.initial, "finals": sorted(dfa.finals),
            "delta": [{"from": q, "symbol": a, "to": p} for (q, a), p in dfa.delta.items()]}


def _require(data: dict, *keys):
    missing = [k for k in keys if k not in data]
    if missing:
        raise AutomatonFormatError(f"missing fields {missing}")


def automaton_from_dict(data: dict) -> Roca | Dfa:
    if not isinstance(data, dict):
        raise AutomatonFormatError("automaton file must contain a JSON object")
    _require(data, "alphabet", "states", "initial", "finals")
    if "delta" in data:
        delta = {}
        for e in data["delta"]:
            _require(e, "from", "symbol", "to")
            if (e["from"], e["symbol"]) in delta:
                raise AutomatonFormatError(f"nondeterministic edge {e}")
            delta[(e["from"], e["symbol"])] = e["to"]
        return Dfa(data["alphabet"], data["states"], data["initial"], data["finals"], delta)
    tables = []
    for name in ("delta_zero", "delta_pos"):
        table = {}
        for e in data.get(name, []):
            _require(e, "from", "symbol", "to", "op")
            if (e["from"], e["symbol"]) in table:
                raise AutomatonFormatError(f"{name}: nondeterministic edge {e}")
            table[(e["from"], e["symbol"])] = (e["to"], int(e["op"]))
        tables.append(table)
    return Roca(data["alphabet"], data["states"], data["initial"], data["finals"], *tables)


def roca_from_dict(data: dict) -> Roca:
    a = automaton_from_dict(data)
    if not isinstance(a, Roca):
        raise AutomatonFormatError("expected a ROCA (delta_zero/delta_pos), got a DFA")
    return a


def load_automaton(path) -> Roca | Dfa:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise AutomatonFormatError(f"{path}: {e}") from None
    return automaton_from_dict(data)


def load_roca(path) -> Roca:
    a = load_automaton(path)
    if not isinstance(a, Roca):
        raise AutomatonFormatError(f"{path}: expected a ROCA, got a DFA")
    return a


def save_automaton(a: Roca | Dfa, path) -> None:
    data = roca_to_dict(a) if isinstance(a, Roca) else dfa_to_dict(a)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def _dot_id(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def to_dot(a: Roca | Dfa, name: str = "automaton") -> str:
    lines = [f"digraph {_dot_id(name)} {{", "  rankdir=LR;", '  __start [shape=point];']
    for q in a.states:
        shape = "doublecircle" if q in a.finals else "circle"
        lines.append(f"  {_dot_id(q)} [shape={shape}];")
    lines.append(f"  __start -> {_dot_id(a.initial)};")
    if isinstance(a, Roca):
        for guard, table in (("=0", a.delta_zero), ("≠0", a.delta_pos)):
            for (q, sym), (p, op) in table.items():
                label = f"{sym}, {guard}, {op:+d}" if op else f"{sym}, {guard}, 0"
                lines.append(f"  {_dot_id(q)} -> {_dot_id(p)} [label={_dot_id(label)}];")
    else:
        for (q, sym), p in a.delta.items():
            lines.append(f"  {_dot_id(q)} -> {_dot_id(p)} [label={_dot_id(sym)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_word(text: str, alphabet: Iterable[str]) -> Word:
    """Read a word from the command line.

    Whitespace-separated tokens when the text contains whitespace or some symbol
    is longer than one character; otherwise one character per symbol.
    """
    alphabet = tuple(alphabet)
    if any(c.isspace() for c in text) or any(len(a) != 1 for a in alphabet):
        return tuple(text.split())
    return tuple(text)
