"""Regenerate the bundled synthetic mixed-type dataset.

Zero-inflated incomes on (10, 9990) with a point mass at zero and a top-coded
mass at 10000; two groups, a categorical and a smooth covariate, and survey
weights.  Deterministic; writes data/synthetic_mixed.csv.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

SEED = 12345
N_TREATED = 180
N_CONTROL = 220

EDU_LEVELS = ["low", "mid", "high"]


def make_rows(rng, group, n):
    edu_probs = {"E": [0.45, 0.4, 0.15], "W": [0.3, 0.4, 0.3]}[group]
    zero_prob = {"E": 0.20, "W": 0.12}[group]
    scale = {"E": 7.6, "W": 7.9}[group]
    rows = []
    for _ in range(n):
        edu = rng.choice(EDU_LEVELS, p=edu_probs)
        age = float(np.round(rng.uniform(20, 65), 1))
        if rng.random() < zero_prob:
            income = 0.0
        else:
            bump = {"low": 0.0, "mid": 0.25, "high": 0.6}[edu]
            raw = float(np.exp(rng.normal(scale + bump + 0.004 * (age - 40), 0.55)))
            income = float(np.round(min(max(raw, 10.5), 12000.0), 2))
            if income > 9990.0:
                income = 12000.0  # loader maps values above the cap to the atom
        weight = float(np.round(rng.uniform(0.5, 2.0), 3))
        rows.append((group, edu, age, income, weight))
    return rows


def main():
    rng = np.random.default_rng(SEED)
    rows = make_rows(rng, "E", N_TREATED) + make_rows(rng, "W", N_CONTROL)
    out = Path(__file__).resolve().parent.parent / "data" / "synthetic_mixed.csv"
    out.parent.mkdir(exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "edu", "age", "income", "weight"])
        for row in rows:
            writer.writerow(row)
    print(f"wrote {out} ({len(rows)} rows)")


if __name__ == "__main__":
    main()
