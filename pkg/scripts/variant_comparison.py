"""Hermitized vs. literal dissipator on the same initial state.

Reports trace drift, Hermiticity defect and linear entropy over time. The
literal form keeps the trace but lets rho drift away from Hermitian once the
vacuum-V coherence is populated."""

import argparse

import numpy as np

from leedissip import master, spectral
from leedissip.config import load_config
from leedissip.model import make_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", default="configs/benchmark.ini")
    ap.add_argument("--modes", type=int, default=32)
    ap.add_argument("--initial", default="superposition", choices=["V", "superposition", "mixed"])
    ap.add_argument("--t-max", type=float, default=100.0)
    args = ap.parse_args()
    cfg = load_config(args.config)
    p = cfg.model_params()
    g = make_grid(p, args.modes, cfg.grid.k_max)
    pole = spectral.find_pole(p, g)
    t = np.linspace(0.0, args.t_max, 11)
    for variant in master.Variant:
        gen = master.build_generator(p, g, pole, variant)
        evo = master.evolve_density(gen, master.initial_state(args.initial, gen.basis_dim), t,
                                    master.max_step(gen))
        print(f"--- {variant.value} (kappa={gen.decoherence_rate:.5g})")
        for ti, s, S in zip(t, evo.states, evo.entropy()):
            print(f"t={ti:8.2f}  |Tr-1|={abs(s.trace - 1):.1e}  herm={s.hermiticity_defect:.3e}  "
                  f"S={S:+.6f}  |rho_0V|={abs(s.elements[master.VAC, master.V]):.5f}")


if __name__ == "__main__":
    main()
