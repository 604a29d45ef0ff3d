"""Regenerate the bundled corpus (src/lspsched/data/corpus.txt).

The corpus is templated grade-school arithmetic solutions, written so that
clauses end in punctuation the snapping step can latch onto. Output is a
pure function of SEED.
"""

import random
from pathlib import Path

SEED = 20251019
N_LINES = 320

NAMES = ["Natalia", "John", "Mary", "Ali", "Rosa", "Ken", "Priya", "Tom",
         "Lena", "Omar", "Sara", "Ivan", "Mei", "Paul", "Nora", "Sam"]
ITEMS = ["clips", "apples", "books", "pencils", "stamps", "cookies",
         "marbles", "cards", "eggs", "shells", "coins", "stickers"]
PLACES = ["market", "school", "park", "library", "shop", "fair"]


def sold_then_bought(rng):
    name, item = rng.choice(NAMES), rng.choice(ITEMS)
    friends, each, more = rng.randint(2, 9), rng.randint(2, 9), rng.randint(3, 20)
    total = friends * each
    return (f"{name} sold {each} {item} to each of {friends} friends. "
            f"This means {name} sold a total of {friends} * {each} = {total} {item}. "
            f"Then {name} bought {more} more {item}, "
            f"so {name} now has {total} + {more} = {total + more} {item}. "
            f"The final answer is {total + more}.")


def half_and_twice(rng):
    a, b = rng.sample(NAMES, 2)
    item = rng.choice(ITEMS)
    start = 2 * rng.randint(3, 15)
    half = start // 2
    return (f"{a} has {start} {item}. {a} gives half to {b}, "
            f"so {b} receives {start} / 2 = {half} {item}. "
            f"Then {b} buys twice the number received, "
            f"which is 2 * {half} = {2 * half} {item}. "
            f"{b} now has {half} + {2 * half} = {3 * half} {item}. "
            f"Answer: {3 * half}.")


def price_problem(rng):
    name, item, place = rng.choice(NAMES), rng.choice(ITEMS), rng.choice(PLACES)
    count, price = rng.randint(2, 12), rng.randint(1, 9)
    cost = count * price
    paid = cost + rng.randint(1, 20)
    return (f"At the {place}, {name} buys {count} {item} for {price} dollars each. "
            f"The cost is {count} * {price} = {cost} dollars. "
            f"{name} pays with {paid} dollars, "
            f"so the change is {paid} - {cost} = {paid - cost} dollars. "
            f"The final answer is {paid - cost}.")


def split_problem(rng):
    name, item = rng.choice(NAMES), rng.choice(ITEMS)
    groups = rng.randint(2, 8)
    per = rng.randint(2, 12)
    total = groups * per
    kept = rng.randint(1, per)
    return (f"{name} has {total} {item} and puts them into {groups} equal boxes. "
            f"Each box holds {total} / {groups} = {per} {item}. "
            f"{name} keeps {kept} box{'es' if kept > 1 else ''}, "
            f"which is {kept} * {per} = {kept * per} {item}. "
            f"Answer: {kept * per}.")


def week_problem(rng):
    name, item = rng.choice(NAMES), rng.choice(ITEMS)
    per_day, days = rng.randint(2, 9), rng.randint(2, 7)
    extra = rng.randint(1, 10)
    total = per_day * days
    return (f"{name} collects {per_day} {item} every day for {days} days. "
            f"That gives {per_day} * {days} = {total} {item}. "
            f"On the last day {name} finds {extra} more; "
            f"the total is {total} + {extra} = {total + extra} {item}. "
            f"The final answer is {total + extra}.")


def code_line(rng):
    var, item = rng.choice(["x", "y", "n", "total", "count"]), rng.choice(ITEMS)
    a, b = rng.randint(1, 20), rng.randint(1, 20)
    return (f"def add_{item}({var}): return ({var} + {a}) * {b}; "
            f"print(add_{item}({a})) gives ({a} + {a}) * {b} = {(2 * a) * b}.")


TEMPLATES = [sold_then_bought, half_and_twice, price_problem, split_problem,
             week_problem, code_line]


def main():
    rng = random.Random(SEED)
    lines = [TEMPLATES[i % len(TEMPLATES)](rng) for i in range(N_LINES)]
    out = Path(__file__).resolve().parents[1] / "src" / "lspsched" / "data" / "corpus.txt"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines)} lines to {out}")


if __name__ == "__main__":
    main()
