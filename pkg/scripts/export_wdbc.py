"""Offline fallback: write the Wisconsin diagnostic breast cancer data bundled
with scikit-learn as data/openml/wdbc.arff, laid out like the OpenML copy
(V1..V30 numeric, Class {1,2} with 1 = benign)."""

import argparse
import os
import sys


def export(path: str) -> str:
    from sklearn.datasets import load_breast_cancer

    bunch = load_breast_cancer()
    X, y = bunch.data, bunch.target
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w") as fh:
        fh.write("@relation wdbc\n\n")
        for j in range(X.shape[1]):
            fh.write(f"@attribute V{j + 1} numeric\n")
        fh.write("@attribute Class {1,2}\n\n@data\n")
        for row, label in zip(X, y):
            # sklearn codes benign as 1, malignant as 0
            fh.write(",".join(repr(float(v)) for v in row) + f",{1 if label == 1 else 2}\n")
    return path


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=os.path.join("data", "openml", "wdbc.arff"))
    args = ap.parse_args(argv)
    print(export(args.out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
