#!/usr/bin/env python3
"""Writes the bundled toy fixtures under data/toy/.

Each pair draws two short sentences from a small vocabulary; the score is the
Jaccard overlap of their word sets, rounded to 4 decimals.
"""
import csv
import random
from pathlib import Path

VOCAB = """sun moon star river stone tree bird fish cloud rain wind snow
road city house door bread milk salt lamp book song ship wall""".split()


def make_pair(rng):
    n1 = rng.randint(3, 6)
    s1 = rng.sample(VOCAB, n1)
    keep = rng.randint(0, n1)
    shared = rng.sample(s1, keep)
    others = [w for w in VOCAB if w not in s1]
    fresh = rng.sample(others, rng.randint(0 if keep else 1, 4))
    s2 = shared + fresh
    rng.shuffle(s2)
    a, b = set(s1), set(s2)
    score = round(len(a & b) / len(a | b), 4)
    return " ".join(s1), " ".join(s2), score


def write(path, rows, with_score=True):
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["PairID", "Text", "Score"] if with_score else ["PairID", "Text"])
        for pid, s1, s2, score in rows:
            text = f"{s1}\n{s2}"
            w.writerow([pid, text, repr(score)] if with_score else [pid, text])


def main():
    rng = random.Random(42)
    out = Path(__file__).resolve().parent.parent / "data" / "toy"
    for name, count in (("train", 64), ("dev", 16)):
        rows = [(f"{name}-{i:03d}", *make_pair(rng)) for i in range(count)]
        write(out / f"{name}.csv", rows)


if __name__ == "__main__":
    main()
