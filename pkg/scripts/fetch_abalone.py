#!/usr/bin/env python3
"""Download the UCI Abalone table and write data/abalone.csv with a header.

The acceptance tests for the real-dataset oracles read this file. Row order
is preserved exactly as distributed (file order is stream order). Basic
integrity checks: 4,177 data rows, 9 columns, the canonical first row.
"""

import csv
import io
import sys
import urllib.request
import zipfile
from pathlib import Path

URLS = [
    "https://archive.ics.uci.edu/ml/machine-learning-databases/abalone/abalone.data",
    "https://archive.ics.uci.edu/static/public/1/abalone.zip",
]
HEADER = [
    "sex", "length", "diameter", "height", "whole_weight",
    "shucked_weight", "viscera_weight", "shell_weight", "rings",
]
FIRST_ROW = ["M", "0.455", "0.365", "0.095", "0.514", "0.2245", "0.101", "0.15", "15"]
OUT = Path(__file__).resolve().parent.parent / "data" / "abalone.csv"


def fetch() -> str:
    last = None
    for url in URLS:
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                blob = resp.read()
        except OSError as exc:
            last = exc
            continue
        if url.endswith(".zip"):
            with zipfile.ZipFile(io.BytesIO(blob)) as zf:
                name = next(n for n in zf.namelist() if n.endswith("abalone.data"))
                return zf.read(name).decode("utf-8")
        return blob.decode("utf-8")
    raise SystemExit(f"could not reach UCI: {last}")


def main() -> int:
    text = fetch()
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if len(rows) != 4177:
        raise SystemExit(f"expected 4177 rows, got {len(rows)}")
    if rows[0] != FIRST_ROW:
        raise SystemExit(f"unexpected first row: {rows[0]}")
    if any(len(r) != 9 for r in rows):
        raise SystemExit("malformed row width")
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with OUT.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        w.writerows(rows)
    print(f"wrote {OUT} ({len(rows)} rows)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
