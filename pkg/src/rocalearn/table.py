"""Observation table with wildcard counter cells, backed by a prefix tree.

Rows are R ∪ RΣ, `S` are the separators whose counter values are recorded and
`Shat` ⊇ S the separators used for membership. A counter cell holds the counter
value of `us` only when `us` is a prefix of some accepted table word; otherwise
it holds ⊥ (None here), which matches anything when rows are compared.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

from .automata import AnnotatedDfa, Dfa, Word, word_key

BOTTOM = None


class TableContractError(RuntimeError):
    pass


class RepairLimitExceeded(RuntimeError):
    pass


class ObservationNode:
    __slots__ = ("word", "parent", "children", "member", "cv", "height", "in_prefix",
                 "s_rows", "cells")

    def __init__(self, word: Word, parent: Optional["ObservationNode"]):
        self.word = word
        self.parent = parent
        self.children: dict[str, ObservationNode] = {}
        self.member: Optional[bool] = None
        self.cv: Optional[int] = None
        self.height: Optional[int] = None
        self.in_prefix = False
        # rows whose counter cells (over S) point at this node
        self.s_rows: list[int] = []
        # (row, separator) pairs of membership cells spelling this word
        self.cells: list[tuple[int, Word]] = []


class ObservationTree:
    """Caches every answer of the teacher; each word is asked at most once."""

    def __init__(self):
        self.root = ObservationNode((), None)
        self.nodes: dict[Word, ObservationNode] = {(): self.root}
        self.membership_queries = 0
        self.counter_value_queries = 0

    def node(self, w: Word) -> ObservationNode:
        n = self.nodes.get(w)
        if n is not None:
            return n
        i = len(w)
        while w[:i] not in self.nodes:
            i -= 1
        n = self.nodes[w[:i]]
        for j in range(i, len(w)):
            child = ObservationNode(w[:j + 1], n)
            n.children[w[j]] = child
            self.nodes[child.word] = child
            n = child
        return n

    def member(self, n: ObservationNode, teacher) -> bool:
        if n.member is None:
            n.member = bool(teacher.membership(n.word))
            self.membership_queries += 1
        return n.member

    def counter_value(self, n: ObservationNode, teacher) -> int:
        if n.cv is None:
            n.cv = int(teacher.counter_value(n.word))
            self.counter_value_queries += 1
        return n.cv

    def height(self, n: ObservationNode, teacher) -> int:
        chain = []
        while n is not None and n.height is None:
            chain.append(n)
            n = n.parent
        h = -1 if n is None else n.height
        for m in reversed(chain):
            h = max(h, self.counter_value(m, teacher))
            m.height = h
        return h

    def in_language(self, n: ObservationNode, limit: int, teacher) -> bool:
        return self.member(n, teacher) and self.height(n, teacher) <= limit

    def word_height(self, w: Word, teacher) -> int:
        return self.height(self.node(tuple(w)), teacher)

    def ledger(self) -> tuple[int, int]:
        """(words with a membership answer, words with a counter-value answer)."""
        members = sum(1 for n in self.nodes.values() if n.member is not None)
        cvs = sum(1 for n in self.nodes.values() if n.cv is not None)
        return members, cvs


def suffixes(w: Word) -> list[Word]:
    return [w[i:] for i in range(len(w) + 1)]


def render_word(w: Word) -> str:
    if not w:
        return "ε"
    if all(len(a) == 1 for a in w):
        return "".join(w)
    return " ".join(w)


def _compatible(x: tuple, y: tuple) -> bool:
    for (bx, cx), (by, cy) in zip(x, y):
        if bx != by or (cx is not None and cy is not None and cx != cy):
            return False
    return True


def _clash_index(x: tuple, y: tuple, order: list[int]) -> int:
    for i in order:
        (bx, cx), (by, cy) = x[i], y[i]
        if bx != by or (cx is not None and cy is not None and cx != cy):
            return i
    raise ValueError("rows are compatible")


def _mismatch_index(x: tuple, y: tuple, order: list[int]) -> Optional[int]:
    for i in order:
        if (x[i][1] is None) != (y[i][1] is None):
            return i
    return None


@dataclass
class _Analysis:
    """Row signatures and the derived approximation structure (cached)."""

    sig_of_row: list[int]
    sigs: list[tuple]
    compatible: list[list[int]]  # per signature id, compatible signature ids


class ObservationTable:
    def __init__(self, alphabet: Iterable[str], limit: int = 0,
                 tree: Optional[ObservationTree] = None):
        alphabet = list(alphabet)
        if not alphabet:
            raise ValueError("the alphabet must not be empty")
        if len(set(alphabet)) != len(alphabet):
            raise ValueError("duplicate symbols in alphabet")
        self.alphabet: list[str] = alphabet
        self._index = {a: i for i, a in enumerate(alphabet)}
        self.limit = limit
        self.tree = tree or ObservationTree()
        self.rows: list[Word] = []
        self.row_id: dict[Word, int] = {}
        self.R: list[Word] = []
        self._in_R: set[Word] = set()
        self.S: list[Word] = [()]
        self.Shat: list[Word] = [()]
        self._S_set = {()}
        self._Shat_set = {()}
        self._col_filled: dict[Word, int] = {}
        self._s_cells: list[list[ObservationNode]] = []
        self._sig_cache: dict[int, tuple] = {}
        self._analysis: Optional[_Analysis] = None
        self.add_representative(())

    @classmethod
    def from_sets(cls, alphabet, R: Iterable[Word], S: Iterable[Word] = (),
                  Shat: Iterable[Word] = (), limit: int = 0) -> "ObservationTable":
        """Unfilled table with the given representatives and separators."""
        t = cls(alphabet, limit)
        for u in R:
            t.add_representative(tuple(u))
        for s in S:
            t.add_separator(tuple(s), core=True)
        for s in Shat:
            t.add_separator(tuple(s), core=False)
        return t

    def check_structure(self) -> None:
        """R prefix-closed, S and Shat suffix-closed, S ⊆ Shat."""
        if any(u[:-1] not in self._in_R for u in self.R if u):
            raise TableContractError("R is not prefix-closed")
        for name, cols in (("S", self._S_set), ("Shat", self._Shat_set)):
            if any(s[1:] not in cols for s in cols if s):
                raise TableContractError(f"{name} is not suffix-closed")
        if not self._S_set <= self._Shat_set:
            raise TableContractError("S is not contained in Shat")

    # -- structure -----------------------------------------------------------

    def key(self, w: Word):
        return (len(w), tuple(self._index[a] for a in w))

    def _new_row(self, w: Word) -> int:
        rid = self.row_id.get(w)
        if rid is None:
            rid = len(self.rows)
            self.rows.append(w)
            self.row_id[w] = rid
            self._s_cells.append([])
            self._analysis = None
        return rid

    def add_representative(self, w: Word) -> None:
        if w in self._in_R:
            return
        self._new_row(w)
        self.R.append(w)
        self._in_R.add(w)
        for a in self.alphabet:
            self._new_row(w + (a,))
        self._analysis = None

    def add_separator(self, s: Word, core: bool) -> None:
        if s not in self._Shat_set:
            self.Shat.append(s)
            self._Shat_set.add(s)
        if core and s not in self._S_set:
            self.S.append(s)
            self._S_set.add(s)
            self._sig_cache.clear()
        self._analysis = None

    def ordered_rows(self) -> list[Word]:
        """R in insertion order, followed by RΣ∖R in (R order, alphabet order)."""
        out = list(self.R)
        seen = set(self._in_R)
        for r in self.R:
            for a in self.alphabet:
                w = r + (a,)
                if w not in seen:
                    seen.add(w)
                    out.append(w)
        return out

    def is_in_R(self, w: Word) -> bool:
        return w in self._in_R

    def sorted_S(self) -> list[Word]:
        return sorted(self.S, key=self.key)

    def sorted_Shat(self) -> list[Word]:
        return sorted(self.Shat, key=self.key)

    # -- filling -------------------------------------------------------------

    def fill(self, teacher) -> None:
        tree = self.tree
        n = len(self.rows)
        for s in self.Shat:
            start = self._col_filled.get(s, 0)
            for rid in range(start, n):
                node = tree.node(self.rows[rid] + s)
                node.cells.append((rid, s))
                if tree.in_language(node, self.limit, teacher):
                    self._mark_prefix(node)
            self._col_filled[s] = n
        # register counter cells over S
        for rid in range(n):
            cells = self._s_cells[rid]
            if len(cells) < len(self.S):
                u = self.rows[rid]
                for s in self.S[len(cells):]:
                    node = tree.node(u + s)
                    node.s_rows.append(rid)
                    cells.append(node)

    def _mark_prefix(self, node: Optional[ObservationNode]) -> None:
        while node is not None and not node.in_prefix:
            node.in_prefix = True
            for rid in node.s_rows:
                self._sig_cache.pop(rid, None)
            self._analysis = None
            node = node.parent

    def set_limit(self, limit: int, teacher) -> None:
        if limit < self.limit:
            raise ValueError("the counter limit never decreases")
        if limit == self.limit:
            return
        self.limit = limit
        self._sig_cache.clear()
        self._analysis = None
        for s, n in self._col_filled.items():
            for rid in range(n):
                node = self.tree.node(self.rows[rid] + s)
                if not node.in_prefix and self.tree.in_language(node, limit, teacher):
                    self._mark_prefix(node)

    # -- cells -----------------------------------------------------------------

    def _node_ol(self, node: ObservationNode) -> bool:
        return bool(node.member) and node.height <= self.limit

    def membership_cell(self, u: Word, s: Word) -> bool:
        node = self.tree.nodes.get(u + s)
        if node is None or node.member is None:
            raise KeyError(f"cell ({render_word(u)}, {render_word(s)}) is not filled")
        return self._node_ol(node)

    def counter_cell(self, u: Word, s: Word) -> Optional[int]:
        node = self.tree.nodes.get(u + s)
        if node is None or not node.in_prefix:
            return BOTTOM
        return node.cv

    def prefix_set(self) -> set[Word]:
        return {w for w, n in self.tree.nodes.items() if n.in_prefix}

    def _sig(self, rid: int) -> tuple:
        sig = self._sig_cache.get(rid)
        if sig is None:
            limit = self.limit
            sig = tuple((bool(n.member) and n.height <= limit, n.cv if n.in_prefix else None)
                        for n in self._s_cells[rid])
            self._sig_cache[rid] = sig
        return sig

    def signature(self, u: Word) -> tuple:
        return self._sig(self.row_id[u])

    # -- approximation -------------------------------------------------------

    def _analyse(self) -> _Analysis:
        if self._analysis is not None:
            return self._analysis
        if any(len(c) < len(self.S) for c in self._s_cells):
            raise TableContractError("table is not filled")
        ids: dict[tuple, int] = {}
        sigs: list[tuple] = []
        sig_of_row = []
        for rid in range(len(self.rows)):
            sig = self._sig(rid)
            i = ids.get(sig)
            if i is None:
                i = ids[sig] = len(sigs)
                sigs.append(sig)
            sig_of_row.append(i)
        groups: dict[tuple, list[int]] = {}
        for i, sig in enumerate(sigs):
            groups.setdefault(tuple(b for b, _ in sig), []).append(i)
        compatible = [[] for _ in sigs]
        for members in groups.values():
            for x in members:
                for y in members:
                    if x == y or _compatible(sigs[x], sigs[y]):
                        compatible[x].append(y)
        self._analysis = _Analysis(sig_of_row, sigs, compatible)
        return self._analysis

    def approx(self, v: Word) -> set[Word]:
        if v not in self.row_id:
            raise KeyError(f"{render_word(v)} is not a row")
        an = self._analyse()
        ok = set(an.compatible[an.sig_of_row[self.row_id[v]]])
        return {w for rid, w in enumerate(self.rows) if an.sig_of_row[rid] in ok}

    def equivalent(self, u: Word, v: Word) -> bool:
        an = self._analyse()
        return an.sig_of_row[self.row_id[v]] in an.compatible[an.sig_of_row[self.row_id[u]]]

    def _s_order(self) -> list[int]:
        pos = {s: i for i, s in enumerate(self.S)}
        return [pos[s] for s in self.sorted_S()]

    def open_rows(self, exact: bool = False) -> list[Word]:
        """Rows of RΣ∖R matching no row of R, in row order.

        With `exact`, rows must be identical (⊥ is then an ordinary value), which
        is the closedness notion of plain L* rather than the approximate one.
        """
        an = self._analyse()
        r_sigs = {an.sig_of_row[self.row_id[r]] for r in self.R}
        out = []
        for w in self.ordered_rows()[len(self.R):]:
            sid = an.sig_of_row[self.row_id[w]]
            if exact:
                if sid not in r_sigs:
                    out.append(w)
            elif not any(c in r_sigs for c in an.compatible[sid]):
                out.append(w)
        return out

    def find_openness(self, exact: bool = False) -> Optional[Word]:
        rows = self.open_rows(exact)
        return rows[0] if rows else None

    def find_sigma_inconsistency(self) -> Optional[tuple[Word, Word, str, Word]]:
        an = self._analyse()
        sig_of = lambda w: an.sig_of_row[self.row_id[w]]
        r_pos = {r: i for i, r in enumerate(self.R)}
        by_sig: dict[int, list[Word]] = {}
        for r in self.R:
            by_sig.setdefault(sig_of(r), []).append(r)
        # per (signature group, symbol): successor signature -> first row in R order
        succ_cache: dict[tuple[int, str], dict[int, Word]] = {}

        def successors(sid: int, a: str) -> dict[int, Word]:
            d = succ_cache.get((sid, a))
            if d is None:
                d = {}
                for v in by_sig[sid]:
                    d.setdefault(sig_of(v + (a,)), v)
                succ_cache[(sid, a)] = d
            return d

        order = self._s_order()
        for u in self.R:
            su = sig_of(u)
            groups = [g for g in an.compatible[su] if g in by_sig]
            for a in self.alphabet:
                x = sig_of(u + (a,))
                ok = an.compatible[x]
                best = None
                for g in groups:
                    for y, v in successors(g, a).items():
                        if v != u and y not in ok and (best is None or r_pos[v] < r_pos[best[0]]):
                            best = (v, y)
                if best is not None:
                    v, y = best
                    i = _clash_index(an.sigs[x], an.sigs[y], order)
                    return u, v, a, self.S[i]
        return None

    def find_bot_inconsistency(self) -> Optional[tuple[Word, Word, Word]]:
        an = self._analyse()
        rows = self.ordered_rows()
        first_pos: dict[int, int] = {}
        for pos, w in enumerate(rows):
            first_pos.setdefault(an.sig_of_row[self.row_id[w]], pos)
        order = self._s_order()
        for v in rows:
            sv = an.sig_of_row[self.row_id[v]]
            best = None
            for su in an.compatible[sv]:
                if su in first_pos and _mismatch_index(an.sigs[su], an.sigs[sv], order) is not None:
                    if best is None or first_pos[su] < first_pos[best]:
                        best = su
            if best is not None:
                u = rows[first_pos[best]]
                i = _mismatch_index(an.sigs[best], an.sigs[sv], order)
                return u, v, self.S[i]
        return None

    def is_closed(self) -> bool:
        return self.find_openness() is None

    def is_sigma_consistent(self) -> bool:
        return self.find_sigma_inconsistency() is None

    def is_bot_consistent(self) -> bool:
        return self.find_bot_inconsistency() is None

    # -- repairs ---------------------------------------------------------------

    def resolve_openness(self, u: Word, teacher) -> None:
        self.add_representative(u)
        self.fill(teacher)

    def resolve_sigma_inconsistency(self, witness, teacher) -> None:
        _, _, a, s = witness
        self.add_separator((a,) + s, core=True)
        self.fill(teacher)

    def bot_witness(self, u: Word, s: Word) -> tuple[Word, Word, Word]:
        """Shortest accepted table word u's' having us as a prefix.

        Returns (u', s', s'') with us'' = u's'. Among several ways to split the
        word into row and separator, one whose row is a prefix of u wins.
        """
        start = self.tree.nodes.get(u + s)
        if start is None or not start.in_prefix:
            raise TableContractError(f"{render_word(u + s)} is not in the prefix set")
        queue = deque([start])
        while queue:
            node = queue.popleft()
            hits = [(rid, sep) for (rid, sep) in node.cells if self._node_ol(node)]
            if hits:
                z = node.word
                chosen = next(((rid, sep) for rid, sep in hits
                               if z[:len(self.rows[rid])] == self.rows[rid]
                               and len(self.rows[rid]) <= len(u)), hits[0])
                return self.rows[chosen[0]], chosen[1], z[len(u):]
            for a in sorted(node.children, key=self._index.__getitem__):
                child = node.children[a]
                if child.in_prefix:
                    queue.append(child)
        raise TableContractError(f"no accepted table word extends {render_word(u + s)}")

    def resolve_bot_inconsistency(self, witness, teacher) -> int:
        """Repair a mismatch; returns which of the three cases applied."""
        u, v, s = witness
        if self.counter_cell(u, s) is BOTTOM:
            u, v = v, u
        if self.counter_cell(u, s) is BOTTOM or self.counter_cell(v, s) is not BOTTOM:
            raise TableContractError("witness is not a mismatch")
        u1, _, s2 = self.bot_witness(u, s)
        new = suffixes(s2)
        if len(u1) <= len(u):
            case = 1
            for x in new:
                self.add_separator(x, core=True)
        else:
            node = self.tree.node(v + s2)
            if self.tree.in_language(node, self.limit, teacher):
                case = 2
                for x in new:
                    self.add_separator(x, core=False)
            else:
                case = 3
                for x in new:
                    self.add_separator(x, core=True)
        self.fill(teacher)
        return case

    def make_consistent(self, teacher, max_repairs: int = 100_000, check=None) -> int:
        """Repair until closed, Σ-consistent and ⊥-consistent; returns the repair count."""
        repairs = 0

        def bump():
            nonlocal repairs
            repairs += 1
            if repairs > max_repairs:
                raise RepairLimitExceeded(
                    f"table still inconsistent after {max_repairs} repairs\n{self.dump()}")
            if check is not None:
                check()

        while True:
            before = repairs
            while (u := self.find_openness()) is not None:
                bump()
                self.resolve_openness(u, teacher)
            while (w := self.find_sigma_inconsistency()) is not None:
                bump()
                self.resolve_sigma_inconsistency(w, teacher)
            while (w := self.find_bot_inconsistency()) is not None:
                bump()
                self.resolve_bot_inconsistency(w, teacher)
            if repairs == before:
                return repairs

    # -- counterexamples and alphabet ----------------------------------------

    def add_counterexample(self, w: Word, new_limit: int, teacher) -> None:
        self.set_limit(new_limit, teacher)
        for i in range(len(w) + 1):
            self.add_representative(tuple(w[:i]))
        self.fill(teacher)

    def extend_alphabet(self, symbols: Iterable[str], teacher) -> None:
        symbols = list(symbols)
        for a in symbols:
            if a in self._index or symbols.count(a) > 1:
                raise ValueError(f"duplicate symbol {a!r}")
        for a in symbols:
            self._index[a] = len(self.alphabet)
            self.alphabet.append(a)
        for r in list(self.R):
            for a in symbols:
                self._new_row(r + (a,))
        self.fill(teacher)

    # -- hypothesis --------------------------------------------------------------

    def classes(self) -> list[list[Word]]:
        """Classes of R under the approximation relation (representative first)."""
        an = self._analyse()
        out: list[list[Word]] = []
        reps: list[int] = []
        for r in self.R:
            sid = an.sig_of_row[self.row_id[r]]
            for ci, rep in enumerate(reps):
                if rep in an.compatible[sid]:
                    out[ci].append(r)
                    break
            else:
                reps.append(sid)
                out.append([r])
        return out

    def index(self) -> int:
        return len(self.classes())

    def build_dfa(self) -> AnnotatedDfa:
        if not (self.is_closed() and self.is_sigma_consistent() and self.is_bot_consistent()):
            raise TableContractError("the table must be closed and consistent")
        an = self._analyse()
        classes = self.classes()
        names = [f"c{i}" for i in range(len(classes))]
        rep_sig = [an.sig_of_row[self.row_id[c[0]]] for c in classes]

        def class_of(w: Word) -> str:
            sid = an.sig_of_row[self.row_id[w]]
            for name, rs in zip(names, rep_sig):
                if rs in an.compatible[sid]:
                    return name
            raise TableContractError(f"{render_word(w)} has no class")

        eps = self.S.index(())
        delta = {}
        finals = set()
        levels = {}
        bins = []
        for name, members in zip(names, classes):
            rep = members[0]
            sig = self._sig(self.row_id[rep])
            if sig[eps][0]:
                finals.add(name)
            if sig[eps][1] is None:
                bins.append(name)
            else:
                levels[name] = sig[eps][1]
            for a in self.alphabet:
                delta[(name, a)] = class_of(rep + (a,))
        if len(bins) > 1:
            raise TableContractError(f"several bin classes {bins}")
        dfa = Dfa(tuple(self.alphabet), tuple(names), class_of(()), finals, delta)
        return AnnotatedDfa(dfa, levels, bins[0] if bins else None,
                            {n: c[0] for n, c in zip(names, classes)})

    # -- debugging ---------------------------------------------------------------

    def dump(self) -> str:
        """Aligned text rendering: R rows, a rule, RΣ∖R rows; S columns first."""
        cols = self.sorted_S() + [s for s in self.sorted_Shat() if s not in self._S_set]

        def cell(u: Word, s: Word) -> str:
            try:
                b = str(int(self.membership_cell(u, s)))
            except KeyError:
                b = "?"
            if s in self._S_set:
                c = self.counter_cell(u, s)
                return f"{b}, {'⊥' if c is None else c}"
            return b

        rows = self.ordered_rows()
        grid = [[""] + [render_word(s) for s in cols]]
        grid += [[render_word(u)] + [cell(u, s) for s in cols] for u in rows]
        widths = [max(len(r[i]) for r in grid) for i in range(len(cols) + 1)]

        def line(r):
            return " | ".join(x.ljust(w) for x, w in zip(r, widths)).rstrip()

        out = [line(grid[0]), line(["-" * w for w in widths])]
        for i, r in enumerate(grid[1:]):
            if i == len(self.R):
                out.append(line(["-" * w for w in widths]))
            out.append(line(r))
        return "\n".join(out) + "\n"


def sorted_words(words: Iterable[Word], alphabet: Iterable[str]) -> list[Word]:
    return sorted(words, key=word_key({a: i for i, a in enumerate(alphabet)}))
