#!/usr/bin/env python3
"""Write the Wisconsin diagnostic breast cancer table in the UCI wdbc.data layout.

scikit-learn ships the UCI table (same rows, same order) without the ID column and
with diagnosis encoded as 0 = malignant, 1 = benign. IDs are replaced by row numbers.
"""
import csv
import sys

from sklearn.datasets import load_breast_cancer


def main(out_path: str) -> None:
    data = load_breast_cancer()
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        for i, (row, target) in enumerate(zip(data.data, data.target), start=1):
            w.writerow([i, "M" if target == 0 else "B", *(repr(float(v)) for v in row)])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/wdbc.data")
