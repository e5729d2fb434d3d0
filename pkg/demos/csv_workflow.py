"""
From a CSV file to an augmented CSV file
========================================

A schema tells the loader which columns are continuous, categorical or the
label; string modalities are encoded on the fly and decoded on output.
"""

import tempfile
from pathlib import Path

import numpy as np

from mgsgrf.data import Schema, load_csv, write_csv
from mgsgrf.samplers import resample

rng = np.random.default_rng(0)
workdir = Path(tempfile.mkdtemp())

# a toy churn table: 300 rows, 15 churners
n = 300
churn = np.zeros(n, dtype=int)
churn[:15] = 1
age = rng.normal(45, 8, n) - 6 * churn
spend = rng.gamma(2.0, 500, n) * (1 - 0.4 * churn)
card = rng.choice(["Blue", "Silver", "Gold"], n, p=[0.7, 0.2, 0.1])
gender = rng.choice(["F", "M"], n)
with open(workdir / "churn.csv", "w") as fh:
    fh.write("id,age,spend,card,gender,status\n")
    for i in range(n):
        status = "Attrited" if churn[i] else "Existing"
        fh.write(f"{i},{age[i]:.1f},{spend[i]:.2f},{card[i]},{gender[i]},{status}\n")

schema = Schema({"id": "ignore", "age": "continuous", "spend": "continuous",
                 "card": "categorical", "gender": "categorical", "status": "label"},
                positive_label="Attrited")
ds = load_csv(workdir / "churn.csv", schema)
print(f"loaded N={ds.n_rows}, d={ds.d}, p={ds.p}, positives={ds.n_minority}")
print("card dictionary:", schema.modalities["card"])

res = resample("mgs-grf", ds, np.random.default_rng(1))
write_csv(workdir / "augmented.csv", res.dataset, schema,
          extra={"synthetic": res.synthetic_mask.astype(int).tolist()})
lines = (workdir / "augmented.csv").read_text().splitlines()
print(f"wrote {len(lines) - 1} rows to {workdir / 'augmented.csv'}; last synthetic row:")
print(lines[0])
print(lines[-1])
