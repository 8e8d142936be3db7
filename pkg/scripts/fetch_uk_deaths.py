"""Download daily UK COVID-19 deaths into data/uk_deaths.csv (``date,count``).

Not used by the test suite.  The opt-in acceptance check reads the file
named by the ``NUINARCH_UK_DATA`` environment variable.  The export is
truncated at 2021-06-04 and written oldest first.

    python scripts/fetch_uk_deaths.py --out data/uk_deaths.csv
    NUINARCH_UK_DATA=data/uk_deaths.csv pytest -m ukdata
"""
import argparse
import csv
import io
import urllib.request
from pathlib import Path

URL = ("https://api.coronavirus.data.gov.uk/v2/data?areaType=overview"
       "&metric=newDeaths28DaysByDeathDate&format=csv")
END = "2021-06-04"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--url", default=URL)
    ap.add_argument("--metric", default="newDeaths28DaysByDeathDate")
    ap.add_argument("--out", default="data/uk_deaths.csv")
    args = ap.parse_args()
    with urllib.request.urlopen(args.url, timeout=60) as resp:
        text = resp.read().decode("utf-8")
    rows = [r for r in csv.DictReader(io.StringIO(text)) if r["date"] <= END and r[args.metric]]
    rows.sort(key=lambda r: r["date"])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,count\n")
        for r in rows:
            fh.write(f"{r['date']},{int(float(r[args.metric]))}\n")
    print(f"wrote {out}: {len(rows)} rows, {rows[0]['date']} .. {rows[-1]['date']}")


if __name__ == "__main__":
    main()
