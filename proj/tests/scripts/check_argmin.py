#!/usr/bin/env python3
"""Recompute a sweep's winner from raw.csv and compare with summary.csv.

Usage: check_argmin.py SWEEP_DIR [EXPECTED_CELLS]

Exit status 0 when the best combination in summary.csv is the argmin of the
per-cell mean wall time in raw.csv, every (proc, thread) pair appears once
with the same number of repetitions, and the improvement matrix agrees with
the means. Uses only the standard library.
"""
import csv
import math
import sys
from collections import defaultdict
from pathlib import Path


def fail(msg):
    print(f"check_argmin: {msg}")
    sys.exit(1)


def main():
    if len(sys.argv) < 2:
        fail("usage: check_argmin.py SWEEP_DIR [EXPECTED_CELLS]")
    root = Path(sys.argv[1])
    expected = int(sys.argv[2]) if len(sys.argv) > 2 else None

    times = defaultdict(list)
    reps = defaultdict(set)
    with open(root / "raw.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    for r in rows:
        key = (r["proc_technique"], r["thread_technique"])
        rep = int(r["repetition"])
        if rep in reps[key]:
            fail(f"duplicate repetition {rep} for {key}")
        reps[key].add(rep)
        times[key].append(float(r["wall_time_s"]))

    if expected is not None and len(times) != expected:
        fail(f"{len(times)} cells in raw.csv, expected {expected}")
    if ("NODLB", "STATIC") not in times:
        fail("baseline NODLB/STATIC missing")
    counts = {len(v) for v in times.values()}
    if len(counts) != 1:
        fail(f"uneven repetition counts {sorted(counts)}")

    means = {k: math.fsum(v) / len(v) for k, v in times.items()}
    best = min(means, key=lambda k: (means[k], k))
    ties = [k for k in means if means[k] == means[best]]

    with open(root / "summary.csv", newline="") as f:
        summary = [r for r in csv.DictReader(f) if r["role"] == "best_combination"]
    if len(summary) != 1:
        fail("summary.csv has no best_combination row")
    got = (summary[0]["proc_technique"], summary[0]["thread_technique"])
    if got not in ties:
        fail(f"summary names {got}, raw.csv argmin is {best} ({means[best]!r} s)")

    base = means[("NODLB", "STATIC")]
    with open(root / "improvement.csv", newline="") as f:
        matrix = list(csv.DictReader(f))
    for row in matrix:
        p = row["proc_technique"]
        for t, v in row.items():
            if t == "proc_technique" or v == "":
                continue
            want = (base - means[(p, t)]) / base * 100.0
            if not math.isclose(float(v), want, rel_tol=1e-9, abs_tol=1e-9):
                fail(f"improvement[{p}][{t}] = {v}, recomputed {want}")

    print(f"check_argmin: ok: {len(means)} cells, argmin {got[0]}_{got[1]}")


if __name__ == "__main__":
    main()
