"""The ROCA learning loop.

Each round learns the height-bounded sublanguage exactly (partial equivalence
queries), turns every periodic description of the resulting DFA into a
candidate ROCA and asks equivalence queries. Counterexamples taller than the
current limit raise it; the loop ends when some candidate is accepted.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, Optional

from .automata import AnnotatedDfa, Roca, Word, dfa_as_roca
from .descriptions import decompose, description_to_roca, find_descriptions
from .table import ObservationTable
from .teachers import LearningTimeout, Teacher

log = logging.getLogger(__name__)


class IndexGrowthError(AssertionError):
    """A partial-equivalence counterexample failed to split a class."""


class RoundLimitExceeded(RuntimeError):
    pass


@dataclass
class LearnerConfig:
    max_rounds: int = 1000
    max_repairs: int = 100_000
    max_partial_queries: int = 100_000
    seed: Optional[int] = None
    search_descriptions: bool = True
    timeout: Optional[float] = None  # seconds

    def __post_init__(self):
        if min(self.max_rounds, self.max_repairs, self.max_partial_queries) < 1:
            raise ValueError("caps must be at least 1")


@dataclass
class QueryStats:
    membership: int = 0
    counter_value: int = 0
    partial_equivalence: int = 0
    equivalence: int = 0
    rounds: int = 0
    limit: int = 0
    longest_counterexample: int = 0
    R: int = 0
    S: int = 0
    Shat: int = 0
    learned_size: int = 0
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class ProgressEvent:
    round: int
    limit: int
    R: int
    S: int
    Shat: int
    queries: dict


class Learner:
    def __init__(self, teacher: Teacher, config: Optional[LearnerConfig] = None,
                 on_event: Optional[Callable[[ProgressEvent], None]] = None):
        self.teacher = teacher
        self.config = config or LearnerConfig()
        self.on_event = on_event
        self.table = ObservationTable(teacher.alphabet)
        self.rounds = 0
        self.longest = 0
        self._deadline: Optional[float] = None
        self._started = 0.0

    # -- helpers ---------------------------------------------------------------

    def _check_time(self) -> None:
        if self._deadline is not None and time.monotonic() >= self._deadline:
            raise LearningTimeout("time limit reached")

    def _consistent(self) -> None:
        self.table.make_consistent(self.teacher, self.config.max_repairs, check=self._check_time)

    def _note(self, w: Word) -> None:
        self.longest = max(self.longest, len(w))

    def _key(self, w: Word):
        index = self.table._index
        return (len(w), tuple((index.get(a, math.inf), a) for a in w))

    def _absorb_alphabet(self, w: Word) -> bool:
        new = []
        for a in w:
            if a not in self.table._index and a not in new:
                new.append(a)
        if new:
            log.info("alphabet grows by %s", new)
            self.table.extend_alphabet(new, self.teacher)
        return bool(new)

    def _process_partial(self, w: Word, old_index: int) -> None:
        grew = self._absorb_alphabet(w)
        self.table.add_counterexample(w, self.table.limit, self.teacher)
        self._consistent()
        if not grew and self.table.index() <= old_index:
            raise IndexGrowthError(
                f"counterexample {w} left the index at {self.table.index()}\n{self.table.dump()}")

    # -- the two loops -----------------------------------------------------------

    def learn_limited(self) -> AnnotatedDfa:
        """Refine the table until its DFA accepts exactly the bounded sublanguage."""
        if self._deadline is None and self.config.timeout is not None:
            self._start_clock()
        for _ in range(self.config.max_partial_queries):
            self._check_time()
            self._consistent()
            adfa = self.table.build_dfa()
            w = self.teacher.partial_equivalence(adfa.dfa, self.table.limit)
            if w is None:
                return adfa
            w = tuple(w)
            self._note(w)
            self._process_partial(w, adfa.size)
        raise RoundLimitExceeded(
            f"no exact bounded hypothesis after {self.config.max_partial_queries} queries\n"
            f"{self.table.dump()}")

    def _start_clock(self) -> None:
        self._started = time.monotonic()
        if self.config.timeout is not None:
            self._deadline = self._started + self.config.timeout
            self.teacher.deadline = self._deadline

    def learn(self) -> tuple[Roca, QueryStats]:
        self._start_clock()
        self._check_time()
        self.table.fill(self.teacher)
        while True:
            self.rounds += 1
            if self.rounds > self.config.max_rounds:
                raise RoundLimitExceeded(f"no ROCA after {self.config.max_rounds} rounds")
            self._check_time()
            adfa = self.learn_limited()
            self._emit()
            limit = self.table.limit
            kept: list[Word] = []
            candidates = []
            if self.config.search_descriptions:
                for d in find_descriptions(decompose(adfa, limit), limit):
                    candidates.append((description_to_roca(d), d.k))
            for roca, k in candidates:
                self._check_time()
                w = self.teacher.equivalence(roca, period=k)
                if w is None:
                    return roca, self.stats(roca)
                w = tuple(w)
                self._note(w)
                if self.table.tree.word_height(w, self.teacher) > limit or \
                        any(a not in self.table._index for a in w):
                    kept.append(w)
            fallback = False
            if not kept:
                roca = dfa_as_roca(adfa.dfa)
                w = self.teacher.equivalence(roca, period=0)
                if w is None:
                    return roca, self.stats(roca)
                w = tuple(w)
                self._note(w)
                kept.append(w)
                fallback = True
            w = min(kept, key=self._key)
            height = self.table.tree.word_height(w, self.teacher)
            if height > limit:
                self._absorb_alphabet(w)
                self.table.add_counterexample(w, height, self.teacher)
            else:
                # only reachable with an approximate partial oracle: the word
                # shows the bounded hypothesis itself was wrong
                log.info("counterexample %s of height %d <= %d handled as partial (fallback=%s)",
                         w, height, limit, fallback)
                self._process_partial(w, adfa.size)

    def _emit(self) -> None:
        t = self.table
        event = ProgressEvent(self.rounds, t.limit, len(t.R), len(t.S), len(t.Shat),
                              self.teacher.stats.as_dict())
        log.debug("round %d: limit=%d |R|=%d |S|=%d |Shat|=%d", event.round, event.limit,
                  event.R, event.S, event.Shat)
        if self.on_event is not None:
            self.on_event(event)

    def stats(self, learned: Optional[Roca] = None) -> QueryStats:
        q = self.teacher.stats
        t = self.table
        return QueryStats(q.membership, q.counter_value, q.partial_equivalence, q.equivalence,
                          self.rounds, t.limit, self.longest, len(t.R), len(t.S), len(t.Shat),
                          learned.size() if learned is not None else 0,
                          time.monotonic() - self._started)


def learn_limited(teacher: Teacher, table: ObservationTable,
                  config: Optional[LearnerConfig] = None) -> AnnotatedDfa:
    learner = Learner(teacher, config)
    learner.table = table
    table.fill(teacher)
    return learner.learn_limited()


def learn(teacher: Teacher, config: Optional[LearnerConfig] = None,
          on_event: Optional[Callable[[ProgressEvent], None]] = None) -> tuple[Roca, QueryStats]:
    return Learner(teacher, config, on_event).learn()
