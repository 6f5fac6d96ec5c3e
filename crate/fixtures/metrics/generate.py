"""Writes per-case result logs (one JSON object per line) with prescribed totals.

    python3 generate.py            # regenerate every *.jsonl next to this file

Each log has exactly `cases` rows, `correct` of them correct, step counts
summing to `steps` and admitted-premise counts summing to `derived`.
"""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

# name, option labels, cases, correct, total steps, total derived premises
SPECS = [
    ("logiqa", "ABCD", 179, 97, 2101, 799),
    ("proofwriter", "ABC", 600, 475, 8778, 4045),
    ("folio", "ABC", 204, 154, 1748, 955),
    ("prontoqa", "AB", 500, 493, 4890, 2215),
    ("logicaldeduction", "ABCDEFG", 300, 255, 3705, 1825),
]


def spread(total, n, rng, floor):
    """n integers >= floor summing to total, jittered around the mean."""
    base, extra = divmod(total, n)
    values = [base + (1 if i < extra else 0) for i in range(n)]
    for _ in range(n * 3):
        i, j = rng.randrange(n), rng.randrange(n)
        d = rng.randint(1, 3)
        if i != j and values[i] - d >= floor:
            values[i] -= d
            values[j] += d
    assert sum(values) == total and min(values) >= floor
    return values


def rows(name, labels, cases, correct, steps, derived):
    rng = random.Random(name)
    step_counts = spread(steps, cases, rng, floor=5)
    derived_counts = spread(derived, cases, rng, floor=0)
    # every case pays at least one step per admitted premise plus two more
    for i in range(cases):
        while derived_counts[i] > step_counts[i] - 2:
            j = max(range(cases), key=lambda k: step_counts[k] - 2 - derived_counts[k])
            derived_counts[i] -= 1
            derived_counts[j] += 1
    right = set(rng.sample(range(cases), correct))
    for i in range(cases):
        gold = rng.choice(labels)
        if i in right:
            answer = gold
        elif i % 7 == 0:
            answer = "Abstain"
        else:
            answer = rng.choice([l for l in labels if l != gold])
        yield {
            "case_id": f"{name}-{i:04d}",
            "answer": answer,
            "gold": gold,
            "correct": i in right,
            "steps": step_counts[i],
            "derived": derived_counts[i],
            "backend_seconds": 0.0,
            "wall_seconds": 0.0,
            "backend_calls": step_counts[i],
        }


def main():
    for spec in SPECS:
        out = HERE / f"{spec[0]}.jsonl"
        with out.open("w") as f:
            for row in rows(*spec):
                f.write(json.dumps(row) + "\n")


if __name__ == "__main__":
    main()
