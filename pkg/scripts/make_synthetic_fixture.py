"""Regenerate tests/data/synthetic_uk_like.csv (frozen; rerun only on purpose)."""
import datetime as dt
from pathlib import Path

import nuinarch as nu

OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "synthetic_uk_like.csv"
END = dt.date(2021, 6, 4)
N = 492

series = nu.simulate_inarch(nu.InarchParams(0.269, 0.997, 0), N, nu.RngStream(20210604))
counts = series.values[1:]
start = END - dt.timedelta(days=N - 1)
with open(OUT, "w", encoding="utf-8", newline="\n") as fh:
    fh.write("date,count\n")
    for i, c in enumerate(counts):
        fh.write(f"{(start + dt.timedelta(days=i)).isoformat()},{int(c)}\n")
print(f"wrote {OUT} ({N} rows, last count {counts[-1]})")
