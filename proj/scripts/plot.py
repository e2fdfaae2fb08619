"""Plot field.csv, contours.csv and traj_*.csv from an spf output directory."""

import argparse
import glob
import os

import matplotlib.pyplot as plt
import numpy as np


def read_csv(path):
    return np.genfromtxt(path, delimiter=",", names=True)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("directory")
    ap.add_argument("--save", help="write the figure here instead of showing it")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(8, 6))
    field = os.path.join(args.directory, "field.csv")
    if os.path.exists(field):
        f = read_csv(field)
        ax.quiver(f["x0"], f["x1"], f["v0"], f["v1"], f["w"], cmap="viridis", angles="xy", width=0.002)

    contours = os.path.join(args.directory, "contours.csv")
    if os.path.exists(contours):
        c = read_csv(contours)
        for level, style in zip(np.unique(c["level"]), ("k-", "k--")):
            at = c[c["level"] == level]
            for pid in np.unique(at["polyline"]):
                line = at[at["polyline"] == pid]
                ax.plot(line["x0"], line["x1"], style, lw=1)

    for path in sorted(glob.glob(os.path.join(args.directory, "traj_*.csv"))):
        t = read_csv(path)
        ax.plot(t["x0"], t["x1"], lw=1.2)
        ax.plot(t["x0"][0], t["x1"][0], "o", ms=3)

    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if args.save:
        fig.savefig(args.save, dpi=150, bbox_inches="tight")
    else:
        plt.show()


if __name__ == "__main__":
    main()
