#!/usr/bin/env python3
"""Plot the reproduced latency curves next to the reported values.

Needs matplotlib (``pip install -e .[plot]``). Writes fig3.png and fig4.png.

Usage: python scripts/plot_figures.py [--out DIR]
"""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from fogrobotics.cli import fig3_rows, fig4_rows  # noqa: E402

REPORTED_FIG3 = {"D2D": {1: 3.8, 5: 6.75}, "FR": {1: 8.82, 4: 10.96, 5: 19.75},
                 "Cloud": {1: 276.58, 5: 276.97}}
REPORTED_FIG4 = {"FR": {n: 10.967 for n in (2, 5, 10, 15, 20)},
                 "Cloud": {2: 277.27, 5: 278.47, 10: 2126.52, 15: 3152.94, 20: 3666.07}}


def _plot(rows, reported, xlabel, path, logy):
    fig, ax = plt.subplots(figsize=(6, 4))
    series = {}
    for name, x, mean_us in rows:
        series.setdefault(name, ([], []))
        series[name][0].append(x)
        series[name][1].append(mean_us / 1000)
    for name, (xs, ys) in series.items():
        line, = ax.plot(xs, ys, marker="o", label=f"{name} (simulated)")
        rep = reported.get(name, {})
        ax.scatter(list(rep), list(rep.values()), marker="x", s=60, color=line.get_color(),
                   label=f"{name} (reported)")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("mean latency (ms)")
    if logy:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("."))
    args = ap.parse_args(argv)
    args.out.mkdir(parents=True, exist_ok=True)
    _plot(fig3_rows(), REPORTED_FIG3, "robots", args.out / "fig3.png", logy=True)
    _plot(fig4_rows(), REPORTED_FIG4, "number of FRS (4 robots each)", args.out / "fig4.png", logy=True)
    print(f"wrote {args.out / 'fig3.png'} and {args.out / 'fig4.png'}")


if __name__ == "__main__":
    main()
