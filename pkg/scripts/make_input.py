#!/usr/bin/env python3
"""Generate store-file input for benchmarks and demos.

Rows carry an Id, an item, a colour, and a roman-numeral Number, the
shape the shipped caesar/dedup rules expect. With --dup-rate some Ids
repeat, which exercises the duplicate-elimination path (sort first).

    python scripts/make_input.py --rows 50000 --out bench_in.csv
"""

from __future__ import annotations

import argparse
import random

from gridpipe.functions import roman_text

ITEMS = ["Toga", "Sandal", "Laurel", "Belt", "Crown", "Amphora", "Scroll"]
COLOURS = ["Purple", "White", "Red", "Gold", "Green"]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=50_000)
    parser.add_argument("--out", default="store_raw.csv")
    parser.add_argument("--seed", type=int, default=2012)
    parser.add_argument(
        "--dup-rate",
        type=float,
        default=0.0,
        help="fraction of rows that reuse an earlier Id (0..1)",
    )
    args = parser.parse_args()

    rng = random.Random(args.seed)
    ids: list[int] = []
    with open(args.out, "w", encoding="utf-8", newline="\n") as out:
        out.write("Id,Item,Colour,Number\n")
        for i in range(args.rows):
            if ids and rng.random() < args.dup_rate:
                record_id = rng.choice(ids)
            else:
                record_id = i
                ids.append(i)
            out.write(
                f"{record_id},{rng.choice(ITEMS)},{rng.choice(COLOURS)},"
                f"{roman_text(rng.randint(1, 3999))}\n"
            )
    print(f"wrote {args.rows} rows to {args.out}")


if __name__ == "__main__":
    main()
