#!/usr/bin/env python3
"""Plot convergence curves from an experiment's trajectories.csv.

Not part of the tested package surface; the CSVs are the deliverable.

Usage:
    python docs/plot_trajectories.py out/trajectories.csv [plot.png]
"""
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from qnggc.bench import read_trajectory_csv


def main(argv):
    if not 2 <= len(argv) <= 3:
        print(__doc__)
        return 1
    rows = read_trajectory_csv(argv[1])
    out_path = argv[2] if len(argv) == 3 else "trajectories.png"

    curves = defaultdict(lambda: defaultdict(list))  # optimizer -> iter -> gaps
    corr = defaultdict(lambda: defaultdict(list))
    for row in rows:
        curves[row.optimizer][row.iter].append(row.log10_delta_e)
        corr[row.optimizer][row.iter].append(row.correction_norm)

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for name, by_iter in curves.items():
        iters = sorted(by_iter)
        mean_log = [sum(by_iter[i]) / len(by_iter[i]) for i in iters]
        ax1.plot(iters, mean_log, label=name)
        mean_corr = [sum(corr[name][i]) / len(corr[name][i]) for i in iters]
        ax2.plot(iters, mean_corr, label=name)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel(r"mean $\log_{10} \Delta E$")
    ax1.legend()
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("mean geodesic-correction norm")
    ax2.set_yscale("symlog", linthresh=1e-12)
    ax2.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    print(f"wrote {out_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
