"""Teachers answering membership, counter-value and (partial) equivalence queries."""

from __future__ import annotations

import enum
import random
import time
from dataclasses import asdict, dataclass
from typing import Optional

from .automata import (Configuration, Dfa, InvalidSymbol, Roca, Word, dfa_shortest_difference,
                       roca_to_level_dfa, words_up_to)


class LearningTimeout(RuntimeError):
    pass


class CounterQueryError(ValueError):
    pass


@dataclass
class QueryCounter:
    membership: int = 0
    counter_value: int = 0
    partial_equivalence: int = 0
    equivalence: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


class Teacher:
    """Base class: counts queries and delegates to the `_answer_*` hooks."""

    def __init__(self, alphabet):
        self._alphabet = tuple(alphabet)
        self.stats = QueryCounter()
        self.deadline: Optional[float] = None

    @property
    def alphabet(self) -> tuple[str, ...]:
        return self._alphabet

    def membership(self, w) -> bool:
        self.stats.membership += 1
        return self._answer_membership(tuple(w))

    def counter_value(self, w) -> int:
        self.stats.counter_value += 1
        return self._answer_counter_value(tuple(w))

    def partial_equivalence(self, dfa: Dfa, limit: int) -> Optional[Word]:
        self.stats.partial_equivalence += 1
        return self._answer_partial_equivalence(dfa, limit)

    def equivalence(self, hypothesis: Roca, period: int = 0) -> Optional[Word]:
        """`period` is the period of the description the hypothesis came from."""
        self.stats.equivalence += 1
        return self._answer_equivalence(hypothesis, period)

    def check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise LearningTimeout("time limit reached")

    def _answer_membership(self, w: Word) -> bool:
        raise NotImplementedError

    def _answer_counter_value(self, w: Word) -> int:
        raise NotImplementedError

    def _answer_partial_equivalence(self, dfa: Dfa, limit: int) -> Optional[Word]:
        raise NotImplementedError

    def _answer_equivalence(self, hypothesis: Roca, period: int) -> Optional[Word]:
        raise NotImplementedError


class EquivalenceMode(enum.Enum):
    RANDOMIZED = "randomized"
    BOUNDED_EXACT = "bounded-exact"
    BRUTE_FORCE = "brute-force"


def _accepting(roca: Roca, c: Configuration) -> bool:
    return c.counter == 0 and c.state in roca.finals


def algorithm2_equivalence(a: Roca, b: Roca, k: int, seed=None, *, rng: random.Random = None,
                           extensions: Optional[int] = None,
                           deadline: Optional[float] = None) -> Optional[Word]:
    """Parallel breadth-first exploration of both configuration spaces.

    Counters are explored up to (|Qa|·|Qb|)² (sinks included). When nothing is
    found, the bound grows by `k` and the search restarts; with `extensions`
    set this happens exactly that many times, otherwise a fair coin decides
    whether to go on. A returned word always separates the two automata.
    """
    if set(a.alphabet) != set(b.alphabet):
        raise ValueError(f"alphabet mismatch: {a.alphabet} vs {b.alphabet}")
    if rng is None:
        rng = random.Random(seed)
    bound = (a.size() * b.size()) ** 2
    rounds = 0
    while True:
        w = _explore(a, b, bound, deadline)
        if w is not None:
            return w
        if k <= 0:
            return None
        if extensions is not None:
            if rounds >= extensions:
                return None
        elif rng.random() < 0.5:
            return None
        rounds += 1
        bound += k


def _explore(a: Roca, b: Roca, bound: int, deadline: Optional[float]) -> Optional[Word]:
    live_a, live_b = a.coreachable_states(), b.coreachable_states()
    dead = Configuration(None, 0)

    def canon(c: Configuration, live) -> Configuration:
        return c if c.state in live else dead

    start = (canon(Configuration(a.initial, 0), live_a), canon(Configuration(b.initial, 0), live_b))
    parent: dict = {start: None}
    layer = [start]
    alphabet = a.alphabet
    while layer:
        if deadline is not None and time.monotonic() >= deadline:
            raise LearningTimeout("time limit reached during equivalence exploration")
        nxt = []
        for pair in layer:
            ca, cb = pair
            if _accepting(a, ca) != _accepting(b, cb):
                word = []
                while parent[pair] is not None:
                    pair, sym = parent[pair]
                    word.append(sym)
                return tuple(reversed(word))
            for sym in alphabet:
                da = canon(a.transition(ca, sym)[0], live_a)
                db = canon(b.transition(cb, sym)[0], live_b)
                if da.counter > bound or db.counter > bound:
                    continue
                if da.state is None and db.state is None:
                    continue
                key = (da, db)
                if key not in parent:
                    parent[key] = (pair, sym)
                    nxt.append(key)
        layer = nxt
    return None


def brute_force_difference(a: Roca, b: Roca, length: int) -> Optional[Word]:
    for w in words_up_to(a.alphabet, length):
        if a.accepts(w) != b.accepts(w):
            return w
    return None


class RocaTeacher(Teacher):
    def __init__(self, target: Roca, mode: EquivalenceMode | str = EquivalenceMode.BOUNDED_EXACT,
                 seed=0, *, extensions: int = 3, brute_length: int = 10, strict: bool = False):
        super().__init__(target.alphabet)
        self.target = target
        self.mode = EquivalenceMode(mode)
        self.rng = random.Random(seed)
        self.extensions = extensions
        self.brute_length = brute_length
        self.strict = strict
        self._level_dfas: dict[int, Dfa] = {}

    def _answer_membership(self, w: Word) -> bool:
        return self.target.accepts(w)

    def _answer_counter_value(self, w: Word) -> int:
        c, _ = self.target.run(w)
        if self.strict and not self._can_accept_from(c):
            raise CounterQueryError(f"{w} is not a prefix of the target language")
        return c.counter

    def _can_accept_from(self, c: Configuration) -> bool:
        # counters beyond c.counter + |Q|² are not needed to witness acceptance
        # at the scales this mode is used for
        t = self.target
        cap = c.counter + t.size() ** 2
        seen = {c}
        todo = [c]
        while todo:
            x = todo.pop()
            if _accepting(t, x):
                return True
            for a in t.alphabet:
                y = t.transition(x, a)[0]
                if y.state is not None and y.counter <= cap and y not in seen:
                    seen.add(y)
                    todo.append(y)
        return False

    def level_dfa(self, limit: int) -> Dfa:
        d = self._level_dfas.get(limit)
        if d is None:
            d = self._level_dfas[limit] = roca_to_level_dfa(self.target, limit)
        return d

    def _answer_partial_equivalence(self, dfa: Dfa, limit: int) -> Optional[Word]:
        return dfa_shortest_difference(dfa, self.level_dfa(limit))

    def _answer_equivalence(self, hypothesis: Roca, period: int) -> Optional[Word]:
        if self.mode is EquivalenceMode.BRUTE_FORCE:
            return brute_force_difference(self.target, hypothesis, self.brute_length)
        extensions = self.extensions if self.mode is EquivalenceMode.BOUNDED_EXACT else None
        return algorithm2_equivalence(self.target, hypothesis, period, rng=self.rng,
                                      extensions=extensions, deadline=self.deadline)


def roca_teacher(target: Roca, mode=EquivalenceMode.BOUNDED_EXACT, seed=0, **kw) -> RocaTeacher:
    return RocaTeacher(target, mode, seed, **kw)


def reachable_state_count(roca: Roca) -> int:
    """States occurring in some reachable configuration.

    Configurations are explored with counters up to |Q|² + |Q|, which is enough
    for a shortest run to any state at the sizes generated here.
    """
    cap = len(roca.states) ** 2 + len(roca.states)
    start = Configuration(roca.initial, 0)
    seen = {start}
    todo = [start]
    while todo:
        c = todo.pop()
        for a in roca.alphabet:
            d = roca.transition(c, a)[0]
            if d.state is not None and d.counter <= cap and d not in seen:
                seen.add(d)
                todo.append(d)
    return len({c.state for c in seen})


def _random_candidate(n: int, alphabet: tuple[str, ...], rng: random.Random) -> Roca:
    states = [f"q{i}" for i in range(n)]
    finals = {q for q in states if rng.random() < 0.5}
    dz, dp = {}, {}
    for q in states:
        for a in alphabet:
            dz[(q, a)] = (states[rng.randrange(n)], rng.choice((0, 1)))
            dp[(q, a)] = (states[rng.randrange(n)], rng.choice((-1, 0, 1)))
    return Roca(alphabet, states, states[0], finals, dz, dp)


def random_roca(n: int, alphabet, seed=None, candidates: int = 100) -> Roca:
    """Best of `candidates` uniform draws by number of reachable states."""
    if n < 1:
        raise ValueError("a ROCA needs at least one state")
    rng = random.Random(seed)
    alphabet = tuple(alphabet)
    best, best_count = None, -1
    for _ in range(candidates):
        cand = _random_candidate(n, alphabet, rng)
        count = reachable_state_count(cand)
        if count > best_count:
            best, best_count = cand, count
    return best


def safe_accepts(roca: Roca, w: Word) -> bool:
    """Acceptance where symbols unknown to the automaton simply reject."""
    try:
        return roca.accepts(w)
    except InvalidSymbol:
        return False
