#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Writes the bundled toy knowledge graph (data/toy).

Each relation links a fixed domain of heads to a fixed range of tails, so
(head, relation) pairs fan out to several tails and intersections and
negations have something to work with. Triples are split 80/10/10.
"""

import argparse
import pathlib
import random

FIRST = ["Alder", "Brook", "Cedar", "Dale", "Ember", "Flint", "Grove", "Heath", "Ivy", "Juniper",
         "Kestrel", "Linden", "Moss", "North", "Oak", "Pike", "Quill", "Reed", "Sage", "Thorn"]
LAST = ["Ashford", "Bellamy", "Crane", "Dunmore", "Everly", "Fairbanks", "Galloway", "Hollis",
        "Irving"]
# a few labels that contain ", " so answer parsing has to rejoin them
COMMA_LABELS = ["Springfield, Ohio", "Paris, Texas", "Athens, Georgia"]
RELATIONS = ["born_in", "lives_in", "works_for", "located_in", "directed", "acted_in",
             "friend_of", "member_of", "founded", "studied_at"]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=pathlib.Path, default=pathlib.Path("data/toy"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--entities", type=int, default=180)
    ap.add_argument("--per-relation", type=int, default=120)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    names = [f"{a} {b}" for a in FIRST for b in LAST]
    rng.shuffle(names)
    labels = COMMA_LABELS + names[: args.entities - len(COMMA_LABELS)]
    rng.shuffle(labels)
    n = len(labels)

    triples = set()
    for r in range(len(RELATIONS)):
        heads = rng.sample(range(n), rng.randint(30, 50))
        tails = rng.sample(range(n), rng.randint(40, 70))
        while sum(1 for t in triples if t[1] == r) < args.per_relation:
            h, t = rng.choice(heads), rng.choice(tails)
            if h != t:
                triples.add((h, r, t))
    ordered = sorted(triples)
    rng.shuffle(ordered)
    cut1 = len(ordered) * 8 // 10
    cut2 = len(ordered) * 9 // 10
    parts = {"train": ordered[:cut1], "valid": ordered[cut1:cut2], "test": ordered[cut2:]}

    args.out.mkdir(parents=True, exist_ok=True)
    for name, rows in parts.items():
        with open(args.out / f"{name}.txt", "w", encoding="utf-8") as f:
            for h, r, t in sorted(rows):
                f.write(f"{h}\t{r}\t{t}\n")
    used = sorted({e for h, _, t in ordered for e in (h, t)})
    with open(args.out / "entity_labels.tsv", "w", encoding="utf-8") as f:
        for e in used:
            f.write(f"{e}\t{labels[e]}\n")
    with open(args.out / "relation_labels.tsv", "w", encoding="utf-8") as f:
        for r, name in enumerate(RELATIONS):
            f.write(f"{r}\t{name}\n")
    print(f"{len(used)} entities, {len(RELATIONS)} relations, "
          + ", ".join(f"{k}={len(v)}" for k, v in parts.items()))


if __name__ == "__main__":
    main()
