import csv
import subprocess
import sys

import pytest

from rocalearn import DATA
from rocalearn.automata import load_automaton
from rocalearn.cli import EXIT_ERROR, EXIT_OK, EXIT_TIMEOUT, BenchRecord, main

from conftest import AB, REF_PATH, all_words

BASIC_SCHEMA = DATA / "basic_types.schema.json"


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def untimed(row):
    return {k: v for k, v in row.items() if k != "time_ms"}


class TestLearn:
    def test_ref_roca(self, tmp_path, ref_roca, capsys):
        out, dot, stats = tmp_path / "l.json", tmp_path / "l.dot", tmp_path / "s.csv"
        code = main(["learn", "--target", str(REF_PATH), "--eq-mode", "bounded-exact",
                     "--seed", "7", "--out", str(out), "--dot", str(dot), "--stats", str(stats)])
        assert code == EXIT_OK
        learned = load_automaton(out)
        assert all(learned.accepts(w) == ref_roca.accepts(w) for w in all_words(AB, 12))
        assert dot.read_text().startswith("digraph")
        (row,) = rows(stats)
        assert row["outcome"] == "ok" and row["target_id"] == "fig1" and row["states"] == "3"
        assert "learned" in capsys.readouterr().err

    def test_deterministic_rows(self, tmp_path):
        stats = tmp_path / "s.csv"
        for _ in range(2):
            main(["learn", "--target", str(REF_PATH), "--seed", "7", "--eq-mode", "randomized",
                  "--out", str(tmp_path / "l.json"), "--stats", str(stats)])
        a, b = rows(stats)
        assert untimed(a) == untimed(b)

    def test_timeout(self, tmp_path):
        stats = tmp_path / "s.csv"
        code = main(["learn", "--target", str(REF_PATH), "--timeout", "0", "--stats", str(stats)])
        assert code == EXIT_TIMEOUT
        assert rows(stats)[0]["outcome"] == "timeout"

    def test_stdout(self, capsys):
        assert main(["learn", "--target", str(REF_PATH)]) == EXIT_OK
        assert '"delta_zero"' in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        assert main(["learn", "--target", str(tmp_path / "nope.json")]) == EXIT_ERROR
        assert capsys.readouterr().err.startswith("error:")

    def test_malformed_file(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"alphabet": ["a"]}')
        assert main(["learn", "--target", str(bad)]) == EXIT_ERROR


class TestBench:
    def test_rows(self, tmp_path, capsys):
        path = tmp_path / "b.csv"
        code = main(["bench-random", "--states", "2", "--count", "3", "--seed", "1",
                     "--timeout", "60", "--csv", str(path)])
        assert code == EXIT_OK
        got = rows(path)
        assert list(got[0]) == BenchRecord.header() and len(got) == 3
        assert all(r["outcome"] == "ok" and int(r["Shat"]) >= int(r["S"]) for r in got)
        assert "3 targets: 3 ok, 0 timeouts, 0 errors" in capsys.readouterr().out

    def test_single_row_reproduces(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for p in (a, b):
            main(["bench-random", "--states", "3", "--count", "1", "--seed", "5", "--csv", str(p)])
        assert untimed(rows(a)[0]) == untimed(rows(b)[0])


class TestRun:
    def test_accept(self, capsys):
        assert main(["run", str(REF_PATH), "aababaa"]) == EXIT_OK
        assert capsys.readouterr().out.strip() == "accept cv=0 h=2"

    def test_empty_word(self, capsys):
        main(["run", str(REF_PATH), ""])
        assert capsys.readouterr().out.strip() == "reject cv=0 h=0"

    def test_counter_left_over(self, capsys):
        main(["run", str(REF_PATH), "aab"])
        assert capsys.readouterr().out.strip() == "reject cv=2 h=2"

    def test_invalid_symbol(self, capsys):
        assert main(["run", str(REF_PATH), "abz"]) == EXIT_ERROR
        assert "position 2" in capsys.readouterr().err


@pytest.fixture(scope="module")
def learned(tmp_path_factory):
    out = tmp_path_factory.mktemp("json") / "learned.json"
    assert main(["learn", "--schema", str(BASIC_SCHEMA), "--seed", "0",
                 "--out", str(out)]) == EXIT_OK
    return out


class TestValidateJson:
    def test_valid_document(self, learned, tmp_path, capsys):
        doc = tmp_path / "doc.json"
        doc.write_text('{"title": "t", "count": 2, "ratio": 1.5, "enabled": false,\n'
                       ' "tags": ["x", "y"], "owner": {"id": 9}}')
        capsys.readouterr()
        assert main(["validate-json", str(learned), str(doc)]) == EXIT_OK
        assert capsys.readouterr().out.startswith("accept cv=0")

    def test_invalid_document(self, learned, tmp_path, capsys):
        doc = tmp_path / "doc.json"
        doc.write_text('{"title": "t"}')
        capsys.readouterr()
        main(["validate-json", str(learned), str(doc)])
        assert capsys.readouterr().out.startswith("reject")

    def test_lexical_error(self, learned, tmp_path, capsys):
        doc = tmp_path / "doc.json"
        doc.write_text('{"title": @}')
        assert main(["validate-json", str(learned), str(doc)]) == EXIT_ERROR
        assert "position 10" in capsys.readouterr().err


class TestExportDot:
    def test_stdout(self, capsys):
        assert main(["export-dot", str(REF_PATH)]) == EXIT_OK
        out = capsys.readouterr().out
        assert 'label="b, ≠0, 0"' in out and "doublecircle" in out

    def test_file(self, tmp_path):
        out = tmp_path / "f.dot"
        main(["export-dot", str(REF_PATH), "--out", str(out)])
        assert "digraph" in out.read_text(encoding="utf-8")


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "rocalearn", "run", str(REF_PATH), "b"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout.strip() == "accept cv=0 h=0"


def test_usage_error():
    with pytest.raises(SystemExit) as e:
        main(["learn"])
    assert e.value.code == EXIT_ERROR  # 2 is reserved for timeouts
