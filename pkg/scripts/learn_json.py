"""Learn the bundled JSON-schema fixtures over several seeds and report table sizes
and agreement with the validator on fresh documents.

    python scripts/learn_json.py --seeds 0 1 2 --docs-per-query 1000
"""

import argparse
import statistics
import time

from rocalearn import DATA
from rocalearn.jsonteacher import JsonTeacher, generate_docs, load_schema, validate
from rocalearn.learner import Learner
from rocalearn.teachers import safe_accepts

FIXTURES = {"basic_types": None, "recursive_list": 14}  # sample height bound for evaluation


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--docs-per-query", type=int, default=1000)
    p.add_argument("--sample", type=int, default=1000)
    args = p.parse_args()

    for name, bound in FIXTURES.items():
        schema = load_schema(DATA / f"{name}.schema.json")
        rows = []
        for seed in args.seeds:
            start = time.monotonic()
            roca, stats = Learner(JsonTeacher(schema, args.docs_per_query, seed)).learn()
            seconds = time.monotonic() - start
            docs = generate_docs(schema, args.sample, bound, seed=10_000 + seed)
            agree = sum(safe_accepts(roca, d) == validate(schema, d) for d in docs) / len(docs)
            rows.append((seconds, stats.R, stats.S, stats.Shat, roca.size(), agree))
            print(f"{name} seed={seed}: {seconds:.1f}s |R|={stats.R} |S|={stats.S} "
                  f"|Shat|={stats.Shat} states={roca.size()} limit={stats.limit} "
                  f"agreement={agree:.2%}")
        means = [statistics.mean(col) for col in zip(*rows)]
        print(f"{name} mean: {means[0]:.1f}s |R|={means[1]:.1f} |S|={means[2]:.1f} "
              f"|Shat|={means[3]:.1f} states={means[4]:.1f} agreement={means[5]:.2%}")


if __name__ == "__main__":
    main()
