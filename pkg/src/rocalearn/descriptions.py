"""Periodic descriptions of level-annotated DFAs and the ROCAs they denote.

A description stores, for each level i < m+k, the map τ_i from (state number,
symbol) to (target number, counter delta). Levels from m on repeat with period
k, which is what lets a finite counter-bounded DFA stand for an ROCA.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional

from .automata import AnnotatedDfa, Roca, trim_states

Tau = dict[tuple[int, str], tuple[int, int]]


class DescriptionError(ValueError):
    pass


@dataclass
class LevelDecomposition:
    alphabet: tuple[str, ...]
    limit: int
    levels: list[list[str]]  # per level, states in numbering order
    number: dict[str, int]  # 1-based, unique within a level
    level_of: dict[str, int]
    succ: dict[tuple[str, str], str]  # edges between kept states only
    initial: Optional[str]
    finals: frozenset[str]

    @property
    def width(self) -> int:
        return max((len(l) for l in self.levels), default=0)

    def level(self, i: int) -> list[str]:
        return self.levels[i] if 0 <= i < len(self.levels) else []


def decompose(adfa: AnnotatedDfa, limit: Optional[int] = None) -> LevelDecomposition:
    """Group the trim, non-bin states by level, numbering them in BFS order."""
    dfa = adfa.dfa
    keep = trim_states(dfa) - {adfa.bin_state}
    for q in keep:
        if q not in adfa.levels:
            raise DescriptionError(f"state {q} has no level")
    top = max((adfa.levels[q] for q in keep), default=0)
    limit = top if limit is None else max(limit, top)
    succ = {(q, a): p for (q, a), p in dfa.delta.items() if q in keep and p in keep}
    levels: list[list[str]] = [[] for _ in range(limit + 1)]
    number: dict[str, int] = {}
    initial = dfa.initial if dfa.initial in keep else None
    if initial is not None:
        seen = {initial}
        frontier = [initial]
        while frontier:
            nxt = []
            for q in frontier:
                lvl = adfa.levels[q]
                levels[lvl].append(q)
                number[q] = len(levels[lvl])
                for a in dfa.alphabet:
                    p = succ.get((q, a))
                    if p is not None and p not in seen:
                        seen.add(p)
                        nxt.append(p)
            frontier = nxt
    while len(levels) > 1 and not levels[-1]:
        levels.pop()
    level_of = {q: adfa.levels[q] for q in number}
    return LevelDecomposition(tuple(dfa.alphabet), limit, levels, number, level_of, succ,
                              initial, frozenset(q for q in number if q in dfa.finals))


@dataclass
class PeriodicDescription:
    alphabet: tuple[str, ...]
    K: int
    m: int
    k: int
    taus: list[Tau]
    initial: int = 1
    finals: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        self.finals = frozenset(self.finals)
        if len(self.taus) != self.m + self.k:
            raise DescriptionError(f"expected {self.m + self.k} maps, got {len(self.taus)}")

    def to_dict(self) -> dict:
        return {"alphabet": list(self.alphabet), "K": self.K, "m": self.m, "k": self.k,
                "initial": self.initial, "finals": sorted(self.finals),
                "taus": [[{"i": i, "symbol": a, "j": j, "op": op}
                          for (i, a), (j, op) in sorted(t.items(), key=lambda e: (e[0][0], self.alphabet.index(e[0][1])))]
                         for t in self.taus]}

    @classmethod
    def from_dict(cls, data: Mapping) -> "PeriodicDescription":
        taus = [{(e["i"], e["symbol"]): (e["j"], e["op"]) for e in t} for t in data["taus"]]
        return cls(tuple(data["alphabet"]), data["K"], data["m"], data["k"], taus,
                   data.get("initial", 1), frozenset(data.get("finals", ())))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class _Search:
    """Builds the shift-by-k bijection between levels m..m+k-1 and m+k..m+2k-1.

    Pairing one state forces the images of everything reachable from it inside
    the band. Separate pieces are combined by backtracking, since two forced
    maps may clash on injectivity or on how level m-1 is renumbered.
    """

    def __init__(self, dec: LevelDecomposition, m: int, k: int):
        self.dec, self.m, self.k = dec, m, k
        self.phi: dict[str, str] = {}
        self.inv: dict[str, str] = {}
        # level-(m-1) state reached from level m -> its counterpart at level m+k-1
        self.down: dict[str, str] = {}
        self.down_inv: dict[str, str] = {}
        self._forced: dict[tuple[str, str], Optional[tuple[dict, dict]]] = {}

    def run(self) -> bool:
        dec, m, k = self.dec, self.m, self.k
        for j in range(k):
            if len(dec.level(m + j)) != len(dec.level(m + k + j)):
                return False
        order = [x for lvl in range(m, m + k) for x in dec.level(lvl)]
        return self._extend(order, 0)

    def _extend(self, order: list[str], pos: int) -> bool:
        while pos < len(order) and order[pos] in self.phi:
            pos += 1
        if pos == len(order):
            return True
        x = order[pos]
        for y in self.dec.level(self.dec.level_of[x] + self.k):
            if y in self.inv:
                continue
            forced = self.forced(x, y)
            if forced is None or not self._fits(*forced):
                continue
            added = self._commit(*forced)
            if self._extend(order, pos + 1):
                return True
            self._undo(added)
        return False

    def _fits(self, phi: dict, down: dict) -> bool:
        for maps, inverse, part in ((self.phi, self.inv, phi), (self.down, self.down_inv, down)):
            for a, b in part.items():
                if maps.get(a, b) != b or inverse.get(b, a) != a:
                    return False
        return True

    def _commit(self, phi: dict, down: dict) -> list:
        added = []
        for maps, inverse, part in ((self.phi, self.inv, phi), (self.down, self.down_inv, down)):
            for a, b in part.items():
                if a not in maps:
                    maps[a], inverse[b] = b, a
                    added.append((maps, inverse, a, b))
        return added

    @staticmethod
    def _undo(added: list) -> None:
        for maps, inverse, a, b in added:
            del maps[a], inverse[b]

    def forced(self, x0: str, y0: str) -> Optional[tuple[dict, dict]]:
        """Maps implied by pairing x0 with y0, or None if that pairing breaks."""
        key = (x0, y0)
        if key not in self._forced:
            self._forced[key] = self._propagate(x0, y0)
        return self._forced[key]

    def _propagate(self, x0: str, y0: str) -> Optional[tuple[dict, dict]]:
        dec, m, k = self.dec, self.m, self.k
        lev = dec.level_of
        phi, inv, down, down_inv = {x0: y0}, {y0: x0}, {}, {}
        queue = [(x0, y0)]
        while queue:
            x, y = queue.pop()
            if (x in dec.finals) != (y in dec.finals):
                return None
            for a in dec.alphabet:
                tx, ty = dec.succ.get((x, a)), dec.succ.get((y, a))
                if tx is None:
                    if ty is not None:
                        return None
                    continue
                c = lev[tx] - lev[x]
                if ty is None:
                    if lev[tx] == m + k and lev[y] + c > dec.limit:
                        continue  # the copy's edge is cut off by the counter limit
                    return None
                if lev[ty] - lev[y] != c:
                    return None
                if lev[tx] == m + k:
                    continue
                if lev[tx] == m - 1:
                    if down.get(tx, ty) != ty or down_inv.get(ty, tx) != tx:
                        return None
                    down[tx], down_inv[ty] = ty, tx
                    continue
                if tx not in phi and ty not in inv:
                    phi[tx], inv[ty] = ty, tx
                    queue.append((tx, ty))
                elif phi.get(tx) != ty or inv.get(ty) != tx:
                    return None
        return phi, down

    def description(self) -> PeriodicDescription:
        dec, m, k = self.dec, self.m, self.k
        K = dec.width
        num = dict(dec.number)
        for y, x in self.inv.items():
            num[y] = dec.number[x]
        if m >= 1 and dec.level(m - 1):
            fixed = {tx: dec.number[ty] for tx, ty in self.down.items()}
            free = iter(sorted(set(range(1, K + 1)) - set(fixed.values())))
            for z in dec.level(m - 1):
                num[z] = fixed[z] if z in fixed else next(free)
        lev = dec.level_of
        taus: list[Tau] = []
        for i in range(m + k):
            tau: Tau = {}
            for x in dec.level(i):
                for a in dec.alphabet:
                    t = dec.succ.get((x, a))
                    if t is not None:
                        tau[(num[x], a)] = (num[t], lev[t] - i)
            taus.append(tau)
        finals = frozenset(num[q] for q in dec.level(0) if q in dec.finals)
        initial = num[dec.initial] if dec.initial is not None else 1
        return PeriodicDescription(dec.alphabet, K, m, k, taus, initial, finals)


def find_description(dec: LevelDecomposition, m: int, k: int) -> Optional[PeriodicDescription]:
    if m < 1 or k < 1:
        raise ValueError("offset and period must be positive")
    if dec.initial is None:
        return None
    search = _Search(dec, m, k)
    if not search.run():
        return None
    return search.description()


def find_descriptions(dec: LevelDecomposition, limit: Optional[int] = None) -> list[PeriodicDescription]:
    """All (m, k) with m + 2k - 1 <= limit whose level bands repeat, in (m, k) order."""
    limit = dec.limit if limit is None else limit
    out = []
    for m in range(1, limit + 1):
        for k in range(1, (limit - m + 1) // 2 + 1):
            if not dec.level(m) and (k > 1 or not dec.level(m - 1)):
                # every higher level is empty too: one candidate is enough
                continue
            d = find_description(dec, m, k)
            if d is not None:
                out.append(d)
    return out


def state_name(i: int, level: int) -> str:
    return f"{i},{level}"


def description_to_roca(d: PeriodicDescription, finals: Optional[Iterable[int]] = None,
                        initial: Optional[int] = None) -> Roca:
    """ROCA whose finite control tracks (number, level modulo the period)."""
    K, m, k = d.K, d.m, d.k
    finals = d.finals if finals is None else frozenset(finals)
    initial = d.initial if initial is None else initial
    top = m if k == 0 else m + k
    dz, dp = {}, {}

    def check(i, lvl, a, j, c):
        if c not in (-1, 0, 1) or not 1 <= j <= K or not 1 <= i <= K:
            raise DescriptionError(f"τ_{lvl}({i},{a}) = ({j},{c}) is out of range")
        if lvl + c < 0 or (k == 0 and lvl + c >= m):
            raise DescriptionError(f"τ_{lvl}({i},{a}) leaves the levels of the description")

    for lvl, tau in enumerate(d.taus):
        for (i, a), (j, c) in tau.items():
            check(i, lvl, a, j, c)
            src = state_name(i, lvl)
            if k == 0 or lvl < m:
                dz[(src, a)] = (state_name(j, lvl + c), 0)
            elif lvl == m:
                if c == 0:
                    dz[(src, a)] = dp[(src, a)] = (state_name(j, m), 0)
                elif c == 1:
                    dz[(src, a)] = dp[(src, a)] = (state_name(j, m + 1 % k), 1)
                else:
                    dz[(src, a)] = (state_name(j, m - 1), 0)
                    dp[(src, a)] = (state_name(j, m + k - 1), -1)
            elif lvl < m + k - 1:
                dp[(src, a)] = (state_name(j, lvl + c), c)
            else:
                target = m if c == 1 else lvl + c
                dp[(src, a)] = (state_name(j, target), c)
    states = [state_name(i, lvl) for lvl in range(top) for i in range(1, K + 1)]
    return Roca(d.alphabet, states, state_name(initial, 0),
                frozenset(state_name(j, 0) for j in finals), dz, dp)
