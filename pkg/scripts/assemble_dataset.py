#!/usr/bin/env python3
"""Assemble the public yield/recession dataset from locally downloaded files.

The experiment CLI consumes two CSVs (see README): ``yields_monthly.csv``
with monthly-averaged constant-maturity yields for nine (optionally ten)
maturities over June 1961 - July 2020, and ``recessions.csv`` with the
monthly NBER indicator. The component series are public but scattered
across sources and vintages; this script merges local downloads into the
two files. It never touches the network.

Expected inputs (CSV downloads placed in one directory, FRED's two-column
"fredgraph" layout, header then ``YYYY-MM-DD,value`` rows, ``.`` for
missing):

  TB3MS.csv  TB6MS.csv   3/6-month secondary-market bill rates (discount
                         basis; converted to bond-equivalent here)
  GS3M.csv   GS6M.csv    3/6-month constant-maturity yields (from 1982)
  GS1.csv GS2.csv GS3.csv GS5.csv GS7.csv GS10.csv GS20.csv [GS30.csv]
  USREC.csv              NBER recession indicator
  [USSLIND.csv]          leading index, optional control column
  [feds200628.csv]       the Fed research zero-coupon yield file (daily);
                         supplies 2y before 1976-06, 7y before 1969-07
  [GS20_FILL.csv]        monthly 20y values covering the 1987-01..1993-09
                         publication gap (e.g. monthly-averaged SVENY20)

Splice rules: bill rates (converted off the discount basis) are used
through 1981-08 and constant-maturity series afterwards; the 2y and 7y
columns start on the zero-coupon curve and switch to CMT at 1976-06 and
1969-07. Day counts for the bond-equivalent conversion are 91 and 182.

Usage:
    python scripts/assemble_dataset.py --raw ~/Downloads/fred --out data
"""

from __future__ import annotations

import argparse
import datetime as dt
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from termspread.data import (  # noqa: E402
    Month,
    discount_to_bond_equivalent,
    monthly_average,
)

SAMPLE_START = Month(1961, 6)
SAMPLE_END = Month(2020, 7)
BILLS_UNTIL = Month(1981, 8)
GS2_FROM = Month(1976, 6)
GS7_FROM = Month(1969, 7)
GS20_GAP = (Month(1987, 1), Month(1993, 9))


def read_fred_monthly(path: str) -> dict[Month, float]:
    """FRED two-column CSV -> {month: value}; missing markers dropped."""
    out: dict[Month, float] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if "," not in header:
            raise SystemExit(f"{path}: not a two-column FRED csv")
        for line in fh:
            line = line.strip()
            if not line:
                continue
            date_str, value_str = line.split(",")[:2]
            value_str = value_str.strip().strip('"')
            if value_str in (".", "", "NA"):
                continue
            day = dt.date.fromisoformat(date_str.strip().strip('"'))
            out[Month(day.year, day.month)] = float(value_str)
    return out


def read_gsw_monthly(path: str, column: str) -> dict[Month, float]:
    """Monthly averages of one column of the daily GSW zero-curve file."""
    dates: list[dt.date] = []
    values: list[float] = []
    with open(path, encoding="utf-8") as fh:
        col_idx = None
        for line in fh:
            cells = [c.strip().strip('"') for c in line.strip().split(",")]
            if col_idx is None:
                if cells and cells[0].lower() == "date" and column in cells:
                    col_idx = cells.index(column)
                continue
            if not cells or not cells[0]:
                continue
            raw = cells[col_idx] if col_idx < len(cells) else ""
            if raw in ("", "NA", "."):
                continue
            dates.append(dt.date.fromisoformat(cells[0]))
            values.append(float(raw))
    if col_idx is None:
        raise SystemExit(f"{path}: no header row carrying {column!r}")
    months, means = monthly_average(dates, values)
    return dict(zip(months, means))


def splice(
    early: dict[Month, float], late: dict[Month, float], switch: Month
) -> dict[Month, float]:
    """early series strictly before ``switch``, late from it onwards."""
    out = {m: v for m, v in early.items() if m < switch}
    out.update({m: v for m, v in late.items() if m >= switch})
    return out


def month_range(a: Month, b: Month) -> list[Month]:
    return [a + i for i in range(b - a + 1)]


def build_columns(raw: str) -> dict[str, dict[Month, float]]:
    def fred(name: str) -> dict[Month, float]:
        return read_fred_monthly(os.path.join(raw, f"{name}.csv"))

    def optional(name: str) -> dict[Month, float] | None:
        path = os.path.join(raw, f"{name}.csv")
        return read_fred_monthly(path) if os.path.exists(path) else None

    columns: dict[str, dict[Month, float]] = {}

    for code, days, bill, cmt in (("3m", 91, "TB3MS", "GS3M"), ("6m", 182, "TB6MS", "GS6M")):
        converted = {
            m: discount_to_bond_equivalent(v, days) for m, v in fred(bill).items()
        }
        columns[code] = splice(converted, fred(cmt), BILLS_UNTIL + 1)

    gsw_path = os.path.join(raw, "feds200628.csv")
    gsw02 = read_gsw_monthly(gsw_path, "SVENY02") if os.path.exists(gsw_path) else {}
    gsw07 = read_gsw_monthly(gsw_path, "SVENY07") if os.path.exists(gsw_path) else {}
    columns["2y"] = splice(gsw02, fred("GS2"), GS2_FROM)
    columns["7y"] = splice(gsw07, fred("GS7"), GS7_FROM)

    for code, name in (("1y", "GS1"), ("3y", "GS3"), ("5y", "GS5"), ("10y", "GS10")):
        columns[code] = fred(name)

    gs20 = fred("GS20")
    fill = optional("GS20_FILL")
    if fill:
        for m in month_range(*GS20_GAP):
            if m in fill:
                gs20.setdefault(m, fill[m])
    columns["20y"] = gs20

    gs30 = optional("GS30")
    if gs30:
        columns["30y"] = gs30
    lead = optional("USSLIND")
    if lead:
        columns["lead_idx"] = lead
    return columns


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--raw", required=True, help="directory of downloaded CSVs")
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--start", default=str(SAMPLE_START))
    parser.add_argument("--end", default=str(SAMPLE_END))
    args = parser.parse_args()

    start, end = Month.parse(args.start), Month.parse(args.end)
    columns = build_columns(args.raw)

    core = [c for c in ("3m", "6m", "1y", "2y", "3y", "5y", "7y", "10y", "20y")]
    missing_report = []
    for code in core:
        gaps = [m for m in month_range(start, end) if m not in columns[code]]
        if gaps:
            missing_report.append((code, gaps[:6], len(gaps)))
    if missing_report:
        for code, head, count in missing_report:
            print(
                f"error: column {code} misses {count} months, first "
                f"{', '.join(map(str, head))}",
                file=sys.stderr,
            )
        if any(code == "20y" for code, _, _ in missing_report):
            print(
                "hint: the 20y CMT was not published 1987-01..1993-09; provide "
                "GS20_FILL.csv (e.g. monthly-averaged GSW SVENY20) to bridge it",
                file=sys.stderr,
            )
        return 1

    os.makedirs(args.out, exist_ok=True)

    def write_wide(path: str, codes: list[str], months: list[Month]) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("date," + ",".join(codes) + "\n")
            for m in months:
                cells = [str(m)] + [
                    f"{columns[c][m]:.6f}".rstrip("0").rstrip(".") for c in codes
                ]
                fh.write(",".join(cells) + "\n")
        print(f"wrote {path}")

    write_wide(
        os.path.join(args.out, "yields_monthly.csv"), core, month_range(start, end)
    )

    # a second file for runs that force the 30y yield / leading indicator:
    # it starts where every optional column exists
    optional_cols = [c for c in columns if c not in core]
    if optional_cols:
        wide = core + sorted(optional_cols)
        common = [
            m
            for m in month_range(start, end)
            if all(m in columns[c] for c in wide)
        ]
        if common and common == month_range(common[0], common[-1]):
            write_wide(
                os.path.join(args.out, "yields_monthly_extended.csv"), wide, common
            )
        else:
            print(
                "warning: optional columns have internal gaps in the sample "
                "(the 30y CMT stopped 2002-03..2006-01); no extended file written",
                file=sys.stderr,
            )

    rec = read_fred_monthly(os.path.join(args.raw, "USREC.csv"))
    rec_path = os.path.join(args.out, "recessions.csv")
    with open(rec_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("date,recession\n")
        last = max(rec)
        for m in month_range(start, min(last, end + 24)):
            if m not in rec:
                print(f"error: USREC misses {m}", file=sys.stderr)
                return 1
            fh.write(f"{m},{int(rec[m])}\n")
    print(f"wrote {rec_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
