"""Command-line front end: ``python -m rocalearn <command> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Optional

try:
    import fcntl
except ImportError:  # not on Windows
    fcntl = None

from .automata import (AutomatonFormatError, InvalidSymbol, Roca, load_automaton, parse_word,
                       save_automaton, to_dot)
from .jsonteacher import JsonTeacher, LexicalError, SchemaError, load_schema, tokenize
from .learner import Learner, LearnerConfig, QueryStats
from .teachers import EquivalenceMode, LearningTimeout, RocaTeacher, random_roca

EXIT_OK, EXIT_ERROR, EXIT_TIMEOUT = 0, 1, 2
# bump when the columns of BenchRecord change
BENCH_CSV_VERSION = 1
SEED_ENV = "ROCALEARN_SEED"


@dataclass
class BenchRecord:
    target_id: str
    seed: int
    states: str
    alphabet: int
    outcome: str
    time_ms: int
    t: int
    R: int
    S: int
    Shat: int
    learned_size: int
    ell_final: int
    membership: int
    counter_value: int
    partial_equivalence: int
    equivalence: int

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    @classmethod
    def from_run(cls, target_id, seed, states, alphabet, outcome, seconds, stats: QueryStats):
        return cls(target_id, seed, str(states), alphabet, outcome, int(seconds * 1000),
                   stats.longest_counterexample, stats.R, stats.S, stats.Shat, stats.learned_size,
                   stats.limit, stats.membership, stats.counter_value, stats.partial_equivalence,
                   stats.equivalence)


def append_records(path, records: list[BenchRecord]) -> None:
    """Append rows, writing the header first if the file is new; safe across processes."""
    with open(path, "a", newline="", encoding="utf-8") as fh:
        if fcntl is not None:
            fcntl.flock(fh, fcntl.LOCK_EX)
        w = csv.writer(fh)
        if fh.tell() == 0:
            w.writerow(BenchRecord.header())
        for r in records:
            w.writerow(astuple(r))


def run_learner(teacher, timeout: Optional[float]) -> tuple[str, Optional[Roca], QueryStats, float]:
    learner = Learner(teacher, LearnerConfig(timeout=timeout))
    start = time.monotonic()
    try:
        roca, stats = learner.learn()
        return "ok", roca, stats, time.monotonic() - start
    except LearningTimeout:
        return "timeout", None, learner.stats(), time.monotonic() - start


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


def cmd_learn(args) -> int:
    if args.target:
        target = load_automaton(args.target)
        if not isinstance(target, Roca):
            raise AutomatonFormatError(f"{args.target}: expected a ROCA")
        teacher = RocaTeacher(target, EquivalenceMode(args.eq_mode), args.seed,
                              extensions=args.extensions)
        target_id, states = Path(args.target).stem, len(target.states)
    else:
        schema = load_schema(args.schema)
        teacher = JsonTeacher(schema, args.docs_per_query, args.seed)
        target_id, states = Path(args.schema).name.split(".")[0], ""
    outcome, roca, stats, seconds = run_learner(teacher, args.timeout)
    alphabet = len(roca.alphabet) if roca is not None else len(teacher.alphabet)
    if args.stats:
        append_records(args.stats, [BenchRecord.from_run(target_id, args.seed, states, alphabet,
                                                         outcome, seconds, stats)])
    if roca is None:
        print(f"timeout after {seconds:.1f}s (limit {stats.limit}, |R|={stats.R})", file=sys.stderr)
        return EXIT_TIMEOUT
    if args.out:
        save_automaton(roca, args.out)
    else:
        from .automata import roca_to_dict
        json.dump(roca_to_dict(roca), sys.stdout, indent=1)
        print()
    if args.dot:
        Path(args.dot).write_text(to_dot(roca, target_id), encoding="utf-8")
    print(f"learned {roca.size()} states in {seconds:.2f}s: limit={stats.limit} |R|={stats.R} "
          f"|S|={stats.S} |Shat|={stats.Shat} queries={teacher.stats.as_dict()}", file=sys.stderr)
    return EXIT_OK


def cmd_bench_random(args) -> int:
    alphabet = [chr(ord("a") + i) for i in range(args.alphabet)]
    records = []
    for i in range(args.count):
        seed = args.seed + i
        target = random_roca(args.states, alphabet, seed)
        teacher = RocaTeacher(target, EquivalenceMode(args.eq_mode), seed, extensions=args.extensions)
        try:
            outcome, roca, stats, seconds = run_learner(teacher, args.timeout)
        except Exception as e:  # keep benchmarking; the row records the failure
            logging.getLogger(__name__).error("target %d: %s", i, e)
            outcome, stats, seconds = "error", QueryStats(), 0.0
        rec = BenchRecord.from_run(f"random-{args.states}-{args.alphabet}-{i}", seed, args.states,
                                   args.alphabet, outcome, seconds, stats)
        records.append(rec)
        if args.csv:
            append_records(args.csv, [rec])
    counts = {o: sum(r.outcome == o for r in records) for o in ("ok", "timeout", "error")}
    print(f"{args.count} targets: {counts['ok']} ok, {counts['timeout']} timeouts, "
          f"{counts['error']} errors")
    return EXIT_OK if counts["error"] == 0 else EXIT_ERROR


def cmd_run(args) -> int:
    a = load_automaton(args.automaton)
    w = parse_word(args.word, a.alphabet)
    if isinstance(a, Roca):
        c, trace = a.run(w)
        verdict = "accept" if c.counter == 0 and c.state in a.finals else "reject"
        print(f"{verdict} cv={c.counter} h={max(trace)}")
    else:
        for i, s in enumerate(w):
            if s not in a.alphabet:
                raise InvalidSymbol(s, i)
        print("accept" if a.accepts(w) else "reject")
    return EXIT_OK


def cmd_validate_json(args) -> int:
    a = load_automaton(args.automaton)
    if not isinstance(a, Roca):
        raise AutomatonFormatError(f"{args.automaton}: expected a ROCA")
    w = tokenize(Path(args.document).read_text(encoding="utf-8"))
    c, trace = a.run(w)
    verdict = "accept" if c.counter == 0 and c.state in a.finals else "reject"
    print(f"{verdict} cv={c.counter} h={max(trace)}")
    return EXIT_OK


def cmd_export_dot(args) -> int:
    a = load_automaton(args.automaton)
    dot = to_dot(a, Path(args.automaton).stem)
    if args.out:
        Path(args.out).write_text(dot, encoding="utf-8")
    else:
        sys.stdout.write(dot)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors, which would read as a timeout
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rocalearn", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)
    modes = [EquivalenceMode.RANDOMIZED.value, EquivalenceMode.BOUNDED_EXACT.value]

    lp = sub.add_parser("learn", help="learn a ROCA from a reference automaton or a schema")
    src = lp.add_mutually_exclusive_group(required=True)
    src.add_argument("--target", help="reference ROCA (JSON automaton file)")
    src.add_argument("--schema", help="JSON-schema fixture")
    lp.add_argument("--eq-mode", choices=modes, default=EquivalenceMode.BOUNDED_EXACT.value)
    lp.add_argument("--extensions", type=int, default=3, help="bound extensions in bounded-exact mode")
    lp.add_argument("--docs-per-query", type=int, default=1000)
    lp.add_argument("--seed", type=int, default=None)
    lp.add_argument("--timeout", type=float, default=None, help="seconds")
    lp.add_argument("--out", help="where to write the learned ROCA (default: stdout)")
    lp.add_argument("--dot", help="also write the learned ROCA as DOT")
    lp.add_argument("--stats", help="append one CSV row of statistics")
    lp.set_defaults(func=cmd_learn)

    bp = sub.add_parser("bench-random", help="learn seeded random ROCAs")
    bp.add_argument("--states", type=int, required=True)
    bp.add_argument("--alphabet", type=int, default=2)
    bp.add_argument("--count", type=int, default=20)
    bp.add_argument("--seed", type=int, default=None)
    bp.add_argument("--timeout", type=float, default=60.0)
    bp.add_argument("--eq-mode", choices=modes, default=EquivalenceMode.BOUNDED_EXACT.value)
    bp.add_argument("--extensions", type=int, default=3)
    bp.add_argument("--csv", help="append one row per target")
    bp.set_defaults(func=cmd_bench_random)

    rp = sub.add_parser("run", help="run a word through an automaton")
    rp.add_argument("automaton")
    rp.add_argument("word", help="symbols, one character each or whitespace separated")
    rp.set_defaults(func=cmd_run)

    vp = sub.add_parser("validate-json", help="tokenize a JSON document and run it")
    vp.add_argument("automaton")
    vp.add_argument("document")
    vp.set_defaults(func=cmd_validate_json)

    ep = sub.add_parser("export-dot", help="write an automaton as Graphviz DOT")
    ep.add_argument("automaton")
    ep.add_argument("--out")
    ep.set_defaults(func=cmd_export_dot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "seed", 0) is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except LearningTimeout as e:
        print(f"timeout: {e}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (OSError, AutomatonFormatError, SchemaError, LexicalError, InvalidSymbol,
            json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
