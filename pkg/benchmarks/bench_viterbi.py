"""Benchmark the compiled trigram Viterbi kernel against the pure fallback.

Both kernels decode the same pre-built probability tables, so the timing
isolates the decoding inner loop: emission-table construction and model
training are done once, outside the timed region.  Results of the two
kernels are compared while timing, so a speed win can never hide a
correctness regression.

Usage:
    python3 benchmarks/bench_viterbi.py [--count N] [--seed S] [--repeats R]
"""

import argparse
import time

from losr import _viterbi_py
from losr.corpus import generate_corpus, train_artifacts

try:
    from losr import _viterbi as _compiled
except ImportError:  # pragma: no cover - depends on the build environment
    _compiled = None


def prepare(count: int, seed: int):
    """Decode tables plus one emission table per generated sentence."""
    records = generate_corpus(count, "standard", seed)
    model = train_artifacts(records).model
    trans, stop = model.decode_tables()
    jobs = [(list(r.tokens), model.emission_table(list(r.tokens)))
            for r in records]
    return trans, stop, jobs


def run(kernel, trans, stop, jobs, repeats: int):
    """(best wall seconds, decoded outputs) over the whole job list."""
    best = float("inf")
    outputs = None
    for _ in range(repeats):
        start = time.perf_counter()
        decoded = [kernel.decode(trans, stop, emit) for _, emit in jobs]
        elapsed = time.perf_counter() - start
        if elapsed < best:
            best, outputs = elapsed, decoded
    return best, outputs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--count", type=int, default=300,
                        help="number of generated sentences (default 300)")
    parser.add_argument("--seed", type=int, default=13)
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats; best run is reported")
    args = parser.parse_args(argv)

    trans, stop, jobs = prepare(args.count, args.seed)
    words = sum(len(tokens) for tokens, _ in jobs)
    print(f"decoding {len(jobs)} sentences ({words} words), "
          f"best of {args.repeats} runs")

    py_time, py_out = run(_viterbi_py, trans, stop, jobs, args.repeats)
    print(f"  pure-python  {py_time * 1000:8.1f} ms "
          f"({len(jobs) / py_time:10.0f} sentences/s)")

    if _compiled is None:
        print("  compiled     not built (pip install -e . rebuilds it)")
        return 0

    c_time, c_out = run(_compiled, trans, stop, jobs, args.repeats)
    print(f"  compiled     {c_time * 1000:8.1f} ms "
          f"({len(jobs) / c_time:10.0f} sentences/s)   "
          f"{py_time / c_time:.1f}x speedup")

    mismatches = sum(1 for a, b in zip(py_out, c_out) if a != b)
    if mismatches:
        print(f"  ERROR: kernels disagree on {mismatches} sentences")
        return 1
    print(f"  outputs identical on all {len(jobs)} sentences")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
