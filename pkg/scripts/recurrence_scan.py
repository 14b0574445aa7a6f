"""Recurrence time of the survival probability vs. number of modes.

The revival time grows with the inverse level spacing, i.e. linearly in the
number of modes; the exponential decay becomes irreversible only in the
continuum limit."""

import argparse

import numpy as np

from leedissip import sector, spectral
from leedissip.config import load_config
from leedissip.model import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/benchmark.ini")
    ap.add_argument("--modes", default="64,128,256,512,1024")
    ap.add_argument("--out")
    args = ap.parse_args()
    cfg = load_config(args.config)
    p = cfg.model_params()
    rows = []
    for n in map(int, args.modes.split(",")):
        g = make_grid(p, n, cfg.grid.k_max)
        pole = spectral.find_pole(p, g)
        H = sector.build_sector(p, g)
        t_rec = sector.recurrence_estimate(H, width=pole.Gamma, Z_V=pole.Z_V)
        spacing = float(np.min(np.diff(H.diag[1:])))
        rows.append((n, np.nan if t_rec is None else t_rec, 2 * np.pi / spacing))
        print(f"n={n:5d}  t_rec={rows[-1][1]:10.3f}  2pi/min_spacing={rows[-1][2]:10.3f}")
    ratios = [b[1] / a[1] for a, b in zip(rows, rows[1:])]
    print("ratios:", ", ".join(f"{r:.3f}" for r in ratios))
    if args.out:
        np.savetxt(args.out, rows, delimiter=",", fmt="%.16e",
                   header="n_modes,t_recurrence,revival_period")


if __name__ == "__main__":
    main()
