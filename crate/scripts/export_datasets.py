"""Export the small benchmark datasets bundled with scikit-learn as CSV.

Every file gets the original feature columns followed by a `label` column
holding 1 (positive class) or 0 (negative class).
"""

import csv
import os

import numpy as np
from sklearn import datasets

OUT = os.path.join(os.path.dirname(__file__), "..", "data")


def write(name, x, y, feature_names=None):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=int)
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(x.shape[1])]
    path = os.path.join(OUT, f"{name}.csv")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([n.replace(" ", "_") for n in feature_names] + ["label"])
        for row, label in zip(x, y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    print(f"{path}: {x.shape[0]} rows, {x.shape[1]} features, {int(y.sum())} positive")


def main():
    os.makedirs(OUT, exist_ok=True)

    bc = datasets.load_breast_cancer()
    write("breast_cancer", bc.data, bc.target == 0, list(bc.feature_names))

    iris = datasets.load_iris()
    keep = iris.target > 0
    write("iris_versicolor_virginica", iris.data[keep], iris.target[keep] == 2,
          list(iris.feature_names))

    wine = datasets.load_wine()
    write("wine_class1", wine.data, wine.target == 1, list(wine.feature_names))

    digits = datasets.load_digits()
    for a, b in [(3, 8), (1, 7), (4, 9)]:
        keep = (digits.target == a) | (digits.target == b)
        write(f"digits_{a}v{b}", digits.data[keep], digits.target[keep] == a)

    diab = datasets.load_diabetes()
    write("diabetes_median", diab.data, diab.target > np.median(diab.target),
          list(diab.feature_names))


if __name__ == "__main__":
    main()
