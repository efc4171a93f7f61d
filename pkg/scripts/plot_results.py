#!/usr/bin/env python3
"""Plot columns from a kfdr CSV (constants, mixture, or simulate output).

Examples:
    kfdr constants --n 500 --k 8 --output c.csv
    python3 scripts/plot_results.py c.csv --x i --y proc1,gen-hochberg,sarkar-kfwer --out constants.png

    kfdr simulate study.json --seed 7 --output power.csv
    python3 scripts/plot_results.py power.csv --x n1 --y avg_power --group procedure --out power.png
"""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv_file")
    parser.add_argument("--x", required=True, help="column for the x axis")
    parser.add_argument("--y", required=True, help="comma-separated y columns")
    parser.add_argument("--group", default=None, help="draw one line per value of this column")
    parser.add_argument("--logy", action="store_true")
    parser.add_argument("--out", default="plot.png")
    args = parser.parse_args()

    with open(args.csv_file, newline="") as handle:
        rows = list(csv.DictReader(handle))
    if not rows:
        raise SystemExit("error: empty CSV")

    ycols = [c.strip() for c in args.y.split(",")]
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if args.group:
        series = defaultdict(list)
        for row in rows:
            series[row[args.group]].append(row)
        for label, grp in series.items():
            for ycol in ycols:
                suffix = f" {ycol}" if len(ycols) > 1 else ""
                ax.plot(
                    [float(r[args.x]) for r in grp],
                    [float(r[ycol]) for r in grp],
                    marker="o",
                    label=f"{label}{suffix}",
                )
    else:
        for ycol in ycols:
            ax.plot(
                [float(r[args.x]) for r in rows],
                [float(r[ycol]) for r in rows],
                label=ycol,
            )
    if args.logy:
        ax.set_yscale("log")
    ax.set_xlabel(args.x)
    ax.set_ylabel(", ".join(ycols))
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
