"""Prepare the Sachs observational protein data for ``golem-bench run-real``.

The data are not bundled. Point this script at a local copy (or a URL you
trust) of the 853-sample, 11-variable observational CSV; it validates the
shape, writes a clean numeric CSV and prints its SHA-256 so the file can be
pinned. The 17-edge consensus graph must be supplied separately as a
``source,target`` edge list in the same column order.

    python scripts/fetch_sachs.py --source sachs.csv --out data/sachs.csv
    GOLEM_SACHS_DATA=data/sachs.csv GOLEM_SACHS_TRUTH=data/sachs_truth.csv pytest tests/test_acceptance.py -k c8
"""

import argparse
import hashlib
import shutil
import sys
import tempfile
import urllib.request
from pathlib import Path

from golem_dag import sem

EXPECTED_SHAPE = (853, 11)


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--source", required=True, help="local path or URL of the raw CSV")
    p.add_argument("--out", required=True, help="where to write the cleaned CSV")
    p.add_argument("--sha256", help="expected digest of the cleaned CSV")
    args = p.parse_args(argv)

    with tempfile.TemporaryDirectory() as tmp:
        raw = Path(tmp) / "raw.csv"
        if "://" in args.source:
            with urllib.request.urlopen(args.source) as resp, open(raw, "wb") as fh:
                shutil.copyfileobj(resp, fh)
        else:
            shutil.copy(args.source, raw)
        x = sem.read_data(raw)
    if x.shape != EXPECTED_SHAPE:
        print(f"warning: got shape {x.shape}, expected {EXPECTED_SHAPE}", file=sys.stderr)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    sem.write_data(x, out)
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    print(f"{out}: {x.shape[0]} rows x {x.shape[1]} columns, sha256 {digest}")
    if args.sha256 and args.sha256 != digest:
        print("checksum mismatch", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
