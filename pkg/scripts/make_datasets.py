"""Materialize the datasets the recipes expect under data/.

* wine.csv, iris.csv: exported from scikit-learn's bundled copies of the
  classic UCI datasets.
* synthetic.csv: planted-rule data from rulebox.synth.
* dermatology.csv: converted from the raw UCI file, which is NOT
  redistributed here.  Download it first (see README.md, "Datasets"):

      curl -o data/dermatology.data \\
        https://archive.ics.uci.edu/ml/machine-learning-databases/dermatology/dermatology.data

  The raw file has 366 lines of 35 comma-separated fields (34
  attributes + class 1..6); 8 lines have a missing age ('?') and are
  dropped, since every cell must be numeric.  The converter checks
  that shape and refuses files that do not match.

Usage: python3 scripts/make_datasets.py [--out data]
"""

import argparse
import csv
import sys
from pathlib import Path

from sklearn.datasets import load_iris, load_wine

from rulebox.synth import example_rectangles, planted_dataset
from rulebox.tabular import save_dataset


def _write_sklearn(bunch, names, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ["label"])
        for row, label in zip(bunch.data, bunch.target):
            writer.writerow([repr(float(v)) for v in row]
                            + [bunch.target_names[label]])


def write_wine(out: Path):
    wine = load_wine()
    names = [n.replace("od280/od315_of_diluted_wines", "od280_od315")
             for n in wine.feature_names]
    _write_sklearn(wine, names, out / "wine.csv")


def write_iris(out: Path):
    _write_sklearn(load_iris(), ["sepal_length", "sepal_width",
                                 "petal_length", "petal_width"],
                   out / "iris.csv")


def write_synthetic(out: Path):
    dataset = planted_dataset(example_rectangles(4), 600, 4, seed=1)
    save_dataset(dataset, out / "synthetic.csv", label_column="label")


def write_dermatology(out: Path):
    raw = out / "dermatology.data"
    if not raw.exists():
        print(f"note: {raw} not found; skipping dermatology "
              "(see the download instructions in this script's docstring)")
        return
    kept = 0
    dropped = 0
    rows = []
    with open(raw, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 35 or parts[-1] not in "123456":
                raise SystemExit(f"{raw}: does not look like the UCI "
                                 "dermatology file (35 fields, class 1..6)")
            if "?" in parts:
                dropped += 1
                continue
            # last column is the class 1..6; keep it last under a header
            rows.append(parts)
            kept += 1
    if kept + dropped != 366:
        print(f"warning: expected 366 raw rows, found {kept + dropped}")
    names = [f"a{j + 1}" for j in range(len(rows[0]) - 1)]
    with open(out / "dermatology.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names + ["label"])
        writer.writerows(rows)
    print(f"dermatology: kept {kept} rows, dropped {dropped} with missing cells")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data", help="output directory")
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_wine(out)
    write_iris(out)
    write_synthetic(out)
    write_dermatology(out)
    print(f"datasets written to {out}/")
    return 0


if __name__ == "__main__":
    sys.exit(main())
