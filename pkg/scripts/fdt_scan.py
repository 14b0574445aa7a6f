"""Stationary <|phi|^2> of the Langevin ensemble over several couplings and
bare masses. With B_loc = gamma*m_V the expected value is 1/2 throughout."""

import argparse

from leedissip import commands, langevin
from leedissip.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/benchmark.ini")
    ap.add_argument("--couplings", default="0.2,0.3,0.4")
    ap.add_argument("--masses", default="12,14")
    ap.add_argument("--trajectories", type=int, default=1000)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    cfg = load_config(args.config)
    for lam in map(float, args.couplings.split(",")):
        for m0 in map(float, args.masses.split(",")):
            p = cfg.model_params(lambda0=lam, m_V0=m0)
            pole, lk, spec, paths, times = commands.langevin_run(
                cfg, params=p, n_trajectories=args.trajectories, threads=args.threads)
            rate = langevin.mean_decay_rate(pole, cfg.langevin.p)
            ms, se = langevin.stationary_mean_square(paths, times, 4.0 / rate)
            print(f"lambda0={lam:.2f}  m_V0={m0:5.1f}  gamma={pole.gamma_friction:.4e}  "
                  f"m_V={pole.m_V:.4f}  <|phi|^2>={ms:.4f} +/- {se:.4f}  "
                  f"z={(ms - 0.5) / se:+.2f}")


if __name__ == "__main__":
    main()
