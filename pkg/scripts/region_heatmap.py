#!/usr/bin/env python3
"""Scan the solvability region Omega_tau^n over the fundamental cell and
render a membership heatmap next to the forward image of the closed-form
solution (the witnesses the scan certified).

Example:
    python scripts/region_heatmap.py --tau 0,1 --n 0 --res 96 --png region.png
"""

import argparse

import numpy as np

from painleve_torus import PVIIndex, omega_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tau", default="0,1", help="tau as re,im")
    ap.add_argument("--n", default="0", help="index: 0 or 1000")
    ap.add_argument("--res", type=int, default=96)
    ap.add_argument("--csv", default=None, help="also write the sample as CSV")
    ap.add_argument("--png", default=None, help="write a heatmap image")
    args = ap.parse_args()

    re_s, im_s = args.tau.split(",")
    tau = complex(float(re_s), float(im_s))
    index = PVIIndex.parse(args.n)

    sample = omega_scan(tau, index, args.res)
    frac = sample.member.sum() / (~sample.excluded).sum()
    print(f"tau={tau}  n={index.nk}  resolution={args.res}")
    print(f"member cells: {sample.member.sum()} "
          f"({100 * frac:.1f}% of the {int((~sample.excluded).sum())} tested)")
    res_vals = sample.residual[np.isfinite(sample.residual) & sample.member]
    if res_vals.size:
        print(f"witness residuals: median {np.median(res_vals):.2e} "
              f"max {res_vals.max():.2e}")

    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(sample.to_csv())
        print(f"wrote {args.csv}")

    if args.png:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        img = np.where(sample.excluded, np.nan, sample.member.astype(float))
        fig, ax = plt.subplots(figsize=(5, 5 * tau.imag))
        ax.imshow(img.T, origin="lower", extent=(0, 1, 0, 1), cmap="viridis",
                  vmin=0, vmax=1, interpolation="nearest")
        ax.set_xlabel("r")
        ax.set_ylabel("s")
        ax.set_title(f"membership of p = r + s*tau,  tau = {tau},  n = {index.nk}")
        fig.tight_layout()
        fig.savefig(args.png, dpi=160)
        print(f"wrote {args.png}")


if __name__ == "__main__":
    main()
