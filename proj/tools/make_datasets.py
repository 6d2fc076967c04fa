#!/usr/bin/env python3
"""Write the desk-scale benchmark datasets bundled under data/.

Iris, Wine and Breast Cancer are the UCI tables shipped with scikit-learn.
digits300 is a stratified 300-row subsample of the UCI Optical Digits table.
"""
import csv
import pathlib
import sys

import numpy as np
from sklearn import datasets


def write(path, names, X, y, label, class_names):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(names) + [label])
        for row, cls in zip(X, y):
            w.writerow([repr(float(v)) for v in row] + [class_names[cls]])


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    iris = datasets.load_iris()
    names = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
    write(out / "iris.csv", names, iris.data, iris.target, "species", list(iris.target_names))

    wine = datasets.load_wine()
    write(out / "wine.csv", wine.feature_names, wine.data, wine.target, "cultivar", list(wine.target_names))

    bc = datasets.load_breast_cancer()
    names = [n.replace(" ", "_") for n in bc.feature_names]
    write(out / "breast_cancer.csv", names, bc.data, bc.target, "diagnosis", list(bc.target_names))

    digits = datasets.load_digits()
    rng = np.random.default_rng(20240117)
    keep = []
    for c in range(10):
        idx = np.flatnonzero(digits.target == c)
        keep.extend(rng.choice(idx, size=30, replace=False).tolist())
    keep.sort()
    names = [f"px{i}" for i in range(64)]
    write(out / "digits300.csv", names, digits.data[keep], digits.target[keep], "digit",
          [str(c) for c in range(10)])


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data")
