"""Wall time of a single run, random search and grid search on one dataset.

    python scripts/timing_order.py data/openml/wdbc.arff --models FFNN DBN --epochs 2

Absolute seconds depend on the machine; the ordering is what to compare.
"""

import argparse
import csv
import logging
import os
import sys

from dltune.experiment import config_from_dict, run_tune


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dataset", help="ARFF or CSV file, label in the last column")
    ap.add_argument("--models", nargs="+", default=["FFNN"])
    ap.add_argument("--epochs", type=int, default=2)
    ap.add_argument("--n-trials", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2020)
    ap.add_argument("--out", default=os.path.join("runs", "timing"))
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    path = os.path.abspath(args.dataset)
    name = os.path.splitext(os.path.basename(path))[0]
    rows = []
    for strategy in ("baseline", "random", "grid"):
        out = os.path.join(args.out, strategy)
        cfg = config_from_dict({
            "seed": args.seed,
            "output_dir": out,
            "models": args.models,
            "datasets": [{"name": name, "path": path}],
            "strategy": {"name": strategy, "n_trials": args.n_trials},
            "training": {"epochs": args.epochs},
        })
        run_tune(cfg)
        with open(os.path.join(out, "timing.csv")) as fh:
            rows += list(csv.reader(fh))[1:]
    for method, seconds in sorted(rows):
        print(f"{method:28s} {float(seconds):10.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
