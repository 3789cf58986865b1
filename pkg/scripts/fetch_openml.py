"""Download the benchmark datasets from OpenML into data/openml/<name>.arff.

Needs network access; the tuner itself only reads local files.

    python scripts/fetch_openml.py [--out data/openml] [--only wdbc hill-valley]
"""

import argparse
import json
import logging
import os
import sys
import urllib.request

from dltune.catalog import BY_NAME, DATASETS, DEFAULT_DATA_DIR

API = "https://www.openml.org/api/v1/json/data/{id}"

log = logging.getLogger("fetch_openml")


def fetch(entry, out_dir: str, timeout: float) -> str:
    with urllib.request.urlopen(API.format(id=entry.openml_id), timeout=timeout) as resp:
        desc = json.load(resp)["data_set_description"]
    target = os.path.join(out_dir, f"{entry.name}.arff")
    with urllib.request.urlopen(desc["url"], timeout=timeout) as resp, open(target, "wb") as fh:
        fh.write(resp.read())
    return target


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=DEFAULT_DATA_DIR)
    ap.add_argument("--only", nargs="*", help="dataset names (default: all)")
    ap.add_argument("--timeout", type=float, default=60.0)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    os.makedirs(args.out, exist_ok=True)
    entries = [BY_NAME[n] for n in args.only] if args.only else list(DATASETS)
    failed = 0
    for entry in entries:
        try:
            log.info("%s (OpenML %d) -> %s", entry.name, entry.openml_id, fetch(entry, args.out, args.timeout))
        except OSError as exc:
            log.error("%s: %s", entry.name, exc)
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
