"""JSON documents as words over an abstract token alphabet, and a teacher
that answers queries with a validator for a small JSON-schema subset.

Keys are single tokens (the quoted key), scalar values collapse to one token
per type, and the counter tracks unmatched `{` plus unmatched `[`.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .automata import Dfa, Roca, Word, dfa_shortest_difference
from .teachers import Teacher, safe_accepts

OPEN = ("{", "[")
CLOSE = ("}", "]")
STRUCTURAL = ("{", "}", "[", "]", ",", ":")
STRING = '"\\S"'
INTEGER = '"\\I"'
DECIMAL = '"\\D"'
TRUE, FALSE = "true", "false"
WEIGHT = {"{": 1, "[": 1, "}": -1, "]": -1}

SCALARS = {"string": (STRING,), "integer": (INTEGER,), "number": (DECIMAL, INTEGER),
           "boolean": (TRUE, FALSE)}


class SchemaError(ValueError):
    pass


class LexicalError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class SchemaNode:
    kind: str
    properties: tuple[tuple[str, "SchemaNode"], ...] = ()
    items: Optional["SchemaNode"] = None
    max_items: Optional[int] = None  # "maxItems"; enforced by validate


KINDS = ("object", "array", "string", "integer", "number", "boolean", "self_ref")
IGNORED_KEYWORDS = {"$schema", "$id", "title", "description"}


def key_token(key: str) -> str:
    return json.dumps(key, ensure_ascii=False)


def parse_schema(data: dict, _root: bool = True) -> SchemaNode:
    if not isinstance(data, dict):
        raise SchemaError(f"schema must be an object, got {data!r}")
    if "$ref" in data:
        if data["$ref"] != "#":
            raise SchemaError(f"only the self reference '#' is supported, got {data['$ref']!r}")
        if _root:
            raise SchemaError("the root schema cannot be a self reference")
        return SchemaNode("self_ref")
    unknown = set(data) - {"type", "properties", "required", "items", "maxItems"} - IGNORED_KEYWORDS
    if unknown:
        raise SchemaError(f"unsupported keywords {sorted(unknown)}")
    kind = data.get("type")
    if _root and kind != "object":
        raise SchemaError("a document must be an object")
    if kind == "object":
        props = data.get("properties", {})
        required = list(data.get("required", []))
        if set(required) != set(props) or len(required) != len(set(required)):
            raise SchemaError("every property must be required exactly once (no optional keys)")
        return SchemaNode("object", tuple((key_token(k), parse_schema(v, False))
                                          for k, v in props.items()))
    if kind == "array":
        if "items" not in data:
            raise SchemaError("arrays need an 'items' schema")
        mx = data.get("maxItems")
        if mx is not None and (not isinstance(mx, int) or mx < 0):
            raise SchemaError("maxItems must be a non-negative integer")
        return SchemaNode("array", items=parse_schema(data["items"], False), max_items=mx)
    if kind in SCALARS:
        return SchemaNode(kind)
    raise SchemaError(f"unsupported type {kind!r}")


def load_schema(path) -> SchemaNode:
    with open(path, encoding="utf-8") as fh:
        return parse_schema(json.load(fh))


# -- tokens -------------------------------------------------------------------

_NUMBER = re.compile(r"-?(?:0|[1-9]\d*)(\.\d+)?([eE][+-]?\d+)?")
_WS = " \t\n\r"


def tokenize(text: str) -> Word:
    out = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c in _WS:
            i += 1
        elif c in STRUCTURAL:
            out.append(c)
            i += 1
        elif c == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 2 if text[j] == "\\" else 1
            if j >= n:
                raise LexicalError("unterminated string", i)
            try:
                value = json.loads(text[i:j + 1])
            except json.JSONDecodeError:
                raise LexicalError("malformed string", i) from None
            k = j + 1
            while k < n and text[k] in _WS:
                k += 1
            out.append(key_token(value) if k < n and text[k] == ":" else STRING)
            i = j + 1
        elif c == "-" or c.isdigit():
            m = _NUMBER.match(text, i)
            if m is None:
                raise LexicalError("malformed number", i)
            out.append(INTEGER if m.group(1) is None and m.group(2) is None else DECIMAL)
            i = m.end()
        else:
            for lit in ("true", "false", "null"):
                if text.startswith(lit, i):
                    out.append(lit)
                    i += len(lit)
                    break
            else:
                raise LexicalError(f"unexpected character {c!r}", i)
    return tuple(out)


def doc_counter_value(w: Iterable[str]) -> int:
    n = 0
    for i, a in enumerate(w):
        n += WEIGHT.get(a, 0)
        if n < 0:
            raise ValueError(f"unmatched closing token at position {i}")
    return n


def clamped_counter_value(w: Iterable[str]) -> int:
    """Running weight that never drops below zero; defined for every word."""
    n = 0
    for a in w:
        n = max(0, n + WEIGHT.get(a, 0))
    return n


def doc_height(w: Iterable[str]) -> int:
    n = h = 0
    for a in w:
        n = max(0, n + WEIGHT.get(a, 0))
        h = max(h, n)
    return h


# -- validation ---------------------------------------------------------------

def _parse(node: SchemaNode, root: SchemaNode, w: Word, i: int) -> Optional[int]:
    if node.kind == "self_ref":
        node = root
    n = len(w)
    if node.kind == "object":
        if i >= n or w[i] != "{":
            return None
        i += 1
        for idx, (key, sub) in enumerate(node.properties):
            if idx:
                if i >= n or w[i] != ",":
                    return None
                i += 1
            if i + 1 >= n or w[i] != key or w[i + 1] != ":":
                return None
            i = _parse(sub, root, w, i + 2)
            if i is None:
                return None
        return i + 1 if i < n and w[i] == "}" else None
    if node.kind == "array":
        if i >= n or w[i] != "[":
            return None
        i += 1
        if i < n and w[i] == "]":
            return i + 1
        count = 0
        while True:
            i = _parse(node.items, root, w, i)
            if i is None:
                return None
            count += 1
            if node.max_items is not None and count > node.max_items:
                return None
            if i < n and w[i] == ",":
                i += 1
                continue
            return i + 1 if i < n and w[i] == "]" else None
    if i < n and w[i] in SCALARS[node.kind]:
        return i + 1
    return None


def validate(schema: SchemaNode, w: Iterable[str]) -> bool:
    w = tuple(w)
    if schema.kind != "object":
        return False
    return _parse(schema, schema, w, 0) == len(w)


def schema_tokens(schema: SchemaNode) -> list[str]:
    """Tokens that occur in documents valid for the schema."""
    seen: list[str] = []

    def add(t):
        if t not in seen:
            seen.append(t)

    def walk(node: SchemaNode, visited: set):
        if node.kind == "self_ref" or id(node) in visited:
            return
        visited.add(id(node))
        if node.kind == "object":
            add("{")
            for i, (key, sub) in enumerate(node.properties):
                if i:
                    add(",")
                add(key)
                add(":")
                walk(sub, visited)
            add("}")
        elif node.kind == "array":
            add("[")
            add("]")
            if node.max_items is None or node.max_items >= 2:
                add(",")
            if node.max_items != 0:
                walk(node.items, visited)
        else:
            for t in SCALARS[node.kind]:
                add(t)

    walk(schema, set())
    return seen


# -- generation ---------------------------------------------------------------

@dataclass
class DocumentGenerator:
    """Seeded random documents; `max_items` caps arrays without a maxItems."""

    schema: SchemaNode
    max_items: int = 3
    unbounded_height: int = 16
    _root_height: float = field(init=False, default=float("inf"))

    def __post_init__(self):
        for _ in range(100):
            h = self._min_height(self.schema)
            if h == self._root_height:
                break
            self._root_height = h

    def _min_height(self, node: SchemaNode) -> float:
        if node.kind == "self_ref":
            return self._root_height
        if node.kind == "object":
            return 1 + max((self._min_height(s) for _, s in node.properties), default=0)
        if node.kind == "array":
            return 1
        return 0

    @property
    def min_height(self) -> float:
        return self._root_height

    def valid(self, rng: random.Random, height_bound: Optional[int] = None) -> Word:
        bound = self.unbounded_height if height_bound is None else height_bound
        if self._root_height > bound:
            raise GenerationError(f"no document of height <= {bound} exists")
        out: list[str] = []
        self._value(self.schema, bound, rng, out)
        return tuple(out)

    def _value(self, node: SchemaNode, budget: int, rng: random.Random, out: list) -> None:
        if node.kind == "self_ref":
            node = self.schema
        if node.kind == "object":
            out.append("{")
            for i, (key, sub) in enumerate(node.properties):
                if i:
                    out.append(",")
                out += [key, ":"]
                self._value(sub, budget - 1, rng, out)
            out.append("}")
        elif node.kind == "array":
            out.append("[")
            limit = self.max_items if node.max_items is None else node.max_items
            n = rng.randint(0, limit)
            if self._min_height(node.items) + 1 > budget:
                n = 0
            for i in range(n):
                if i:
                    out.append(",")
                self._value(node.items, budget - 1, rng, out)
            out.append("]")
        else:
            out.append(rng.choice(SCALARS[node.kind]))

    def invalid(self, rng: random.Random, height_bound: Optional[int] = None,
                tokens: Optional[list[str]] = None, attempts: int = 100) -> Word:
        """A single-token edit of a valid document that no longer validates."""
        tokens = tokens or schema_tokens(self.schema)
        for _ in range(attempts):
            doc = list(self.valid(rng, height_bound))
            op = rng.choice(("delete", "replace", "insert"))
            pos = rng.randrange(len(doc) + (op == "insert"))
            if op == "delete":
                del doc[pos]
            elif op == "replace":
                doc[pos] = rng.choice(tokens)
            else:
                doc.insert(pos, rng.choice(tokens))
            if not validate(self.schema, doc):
                return tuple(doc)
        raise GenerationError("could not produce an invalid mutant")


def generate_docs(schema: SchemaNode, count: int, height_bound: Optional[int] = None,
                  valid_fraction: float = 0.5, seed=None, *, rng: random.Random = None,
                  generator: Optional[DocumentGenerator] = None) -> list[Word]:
    if count < 1:
        raise ValueError("count must be positive")
    if not 0 <= valid_fraction <= 1:
        raise ValueError("valid_fraction must lie in [0, 1]")
    rng = rng or random.Random(seed)
    gen = generator or DocumentGenerator(schema)
    tokens = schema_tokens(schema)
    return [gen.valid(rng, height_bound) if rng.random() < valid_fraction
            else gen.invalid(rng, height_bound, tokens) for _ in range(count)]


class JsonTeacher(Teacher):
    def __init__(self, schema: SchemaNode, docs_per_query: int = 1000, seed=0,
                 valid_fraction: float = 0.5, max_items: int = 3, unbounded_height: int = 16):
        if docs_per_query < 1:
            raise ValueError("docs_per_query must be positive")
        super().__init__(("{", "}"))
        self.schema = schema
        self.docs_per_query = docs_per_query
        self.valid_fraction = valid_fraction
        self.rng = random.Random(seed)
        self.generator = DocumentGenerator(schema, max_items, unbounded_height)
        self._valid_cache: dict[Word, bool] = {}

    def is_valid(self, w: Word) -> bool:
        v = self._valid_cache.get(w)
        if v is None:
            v = self._valid_cache[w] = validate(self.schema, w)
        return v

    def _answer_membership(self, w: Word) -> bool:
        return self.is_valid(w)

    def _answer_counter_value(self, w: Word) -> int:
        return clamped_counter_value(w)

    def _docs(self, height_bound: Optional[int]) -> list[Word]:
        return generate_docs(self.schema, self.docs_per_query, height_bound, self.valid_fraction,
                             rng=self.rng, generator=self.generator)

    def _answer_partial_equivalence(self, dfa: Dfa, limit: int) -> Optional[Word]:
        if self.generator.min_height > limit:
            # the bounded sublanguage is empty: anything accepted is wrong
            empty = Dfa(dfa.alphabet, ("x",), "x", set(), {})
            return dfa_shortest_difference(dfa, empty)
        for doc in self._docs(limit):
            expected = self.is_valid(doc) and doc_height(doc) <= limit
            if dfa.accepts(doc) != expected:
                return doc
        return None

    def _answer_equivalence(self, hypothesis: Roca, period: int) -> Optional[Word]:
        for doc in self._docs(None):
            if safe_accepts(hypothesis, doc) != self.is_valid(doc):
                return doc
        return None


def json_teacher(schema: SchemaNode, docs_per_query: int = 1000, seed=0, **kw) -> JsonTeacher:
    return JsonTeacher(schema, docs_per_query, seed, **kw)
