"""Computations behind the CLI subcommands.

Each ``run_*`` function takes a validated :class:`RunConfig` and an output
directory, writes its artifacts there and returns the JSON summary.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from . import langevin, master, sector, spectral
from .artifacts import write_csv, write_json
from .config import RunConfig
from .model import make_grid


def _grid(cfg: RunConfig, n_modes: int | None = None, **overrides):
    params = cfg.model_params(**overrides)
    return params, make_grid(params, n_modes or cfg.grid.n_modes, cfg.grid.k_max)


def run_pole(cfg: RunConfig, out: Path) -> dict:
    params, grid = _grid(cfg)
    pole = spectral.find_pole(params, grid)
    lk = spectral.local_kernels(pole, params)
    summary = {"pole": pole.as_dict(), "local": lk._asdict(), "n_modes": grid.n_modes}
    write_json(out / "pole.json", summary, cfg)
    return summary


def symmetric_edge(params, grid) -> float:
    """``m_N`` plus the outermost grid node; the grid edge itself is a log singularity."""
    return params.m_N + float(grid.omegas[-1])


def symmetric_grid(edge: float, n: int) -> np.ndarray:
    """``n`` points on ``[-edge, edge]`` with ``E[::-1] == -E`` exactly."""
    E = np.linspace(-edge, edge, n)
    return (E - E[::-1]) / 2


def kernel_energies(cfg: RunConfig, params, grid) -> np.ndarray:
    edge = symmetric_edge(params, grid)
    if cfg.kernels.E_min is None and cfg.kernels.E_max is None:
        return symmetric_grid(edge, cfg.kernels.n_E)
    lo = -edge if cfg.kernels.E_min is None else cfg.kernels.E_min
    hi = edge if cfg.kernels.E_max is None else cfg.kernels.E_max
    return np.linspace(lo, hi, cfg.kernels.n_E)


def run_kernels(cfg: RunConfig, out: Path) -> dict:
    params, grid = _grid(cfg)
    table = spectral.kernel_table(params, grid, kernel_energies(cfg, params, grid))
    write_csv(out / "kernels.csv", ["E", "D", "B", "A"], table.rows(), cfg)
    summary = {
        "n_E": len(table.energies),
        "max_abs_A_minus_signE_B": float(np.max(np.abs(table.A - np.sign(table.energies) * table.B))),
        "max_B_below_threshold": float(np.max(table.B[table.energies <= params.threshold], initial=0.0)),
        "epsilon_scheme": table.epsilon_scheme,
    }
    write_json(out / "kernels.json", summary, cfg)
    return summary


def run_sector(cfg: RunConfig, out: Path) -> dict:
    params, grid = _grid(cfg)
    H = sector.build_sector(params, grid)
    pole = spectral.find_pole(params, grid)
    E, U = H.eigh
    summary = {"n_modes": grid.n_modes, "Gamma_pole": pole.Gamma,
               "completeness_defect": float(abs(np.sum(U[0] ** 2) - 1.0))}
    if pole.unstable:
        width, rec = sector.fitted_width(
            H, pole.Gamma, (cfg.sector.fit_start, cfg.sector.fit_stop), cfg.sector.n_points)
        summary.update(Gamma_fit=width, relative_difference=width / pole.Gamma - 1.0,
                       fit_window=[cfg.sector.fit_start / pole.Gamma,
                                   cfg.sector.fit_stop / pole.Gamma],
                       regime="unstable")
    else:
        summary["regime"] = "stable"
        try:
            m_V, _, z = sector.diagonalize_stable(H)
            summary.update(m_V_sector=m_V, m_V_pole=pole.m_V, Z_V_discrete=z)
        except Exception as exc:  # no bound state: report, still emit survival
            summary["note"] = str(exc)
        rec = sector.evolve_survival(H, np.linspace(0.0, 100.0, cfg.sector.n_points))
    write_csv(out / "survival.csv", ["t", "re_c", "im_c", "abs_c2"], rec.rows(), cfg)
    write_json(out / "sector.json", summary, cfg)
    return summary


def master_run(cfg: RunConfig, *, variant=None, t_max=None, n_out=None):
    """Build and integrate the configured master equation."""
    params, grid = _grid(cfg, cfg.master.n_modes)
    pole = spectral.find_pole(params, grid)
    gen = master.build_generator(params, grid, pole, variant or cfg.master.variant,
                                 kappa=cfg.master.kappa)
    dt = cfg.master.dt if cfg.master.dt is not None else master.max_step(gen)
    if t_max is None:
        t_max = cfg.master.t_max
    if t_max is None:
        t_max = 3.0 / pole.Gamma if pole.Gamma > 0 else 50.0
    if not math.isfinite(dt):
        dt = t_max / 1000.0
    t_grid = np.linspace(0.0, t_max, (n_out or cfg.master.n_out) + 1)
    rho0 = master.initial_state(cfg.master.initial, gen.basis_dim)
    evo = master.evolve_density(gen, rho0, t_grid, dt)
    return pole, gen, evo


def master_summary(gen, evo) -> dict:
    S = evo.entropy()
    pur = -S
    coh = evo.coherence(master.VAC, master.V)
    return {
        "final_entropy": float(S[-1]),
        "coherence_decay_rate": master.coherence_decay_rate(evo.times, coh),
        "max_trace_defect": evo.max_trace_defect,
        "max_entropy_drop": evo.max_entropy_drop,
        "max_hermiticity_defect": float(np.max(evo.step_hermiticity)),
        "max_purity_defect": float(np.max(np.abs(pur - pur[0]))),
        "kappa": gen.decoherence_rate,
        "dt": evo.dt,
        "n_steps": len(evo.step_times) - 1,
        "variant": evo.variant.value,
        "notes": evo.notes[:20],
    }


def run_master(cfg: RunConfig, out: Path) -> dict:
    pole, gen, evo = master_run(cfg)
    S = evo.entropy()
    rows = np.column_stack([
        evo.times,
        [s.trace.real for s in evo.states],
        S,
        evo.population(master.V),
        np.abs(evo.coherence(master.VAC, master.V)),
        [s.hermiticity_defect for s in evo.states],
    ])
    write_csv(out / "master.csv", ["t", "trace", "S", "rho_VV", "abs_rho_0V", "hermiticity_defect"],
              rows, cfg)
    summary = master_summary(gen, evo)
    write_json(out / "master.json", summary, cfg)
    return summary


def langevin_run(cfg: RunConfig, *, params=None, n_trajectories=None, t_max=None, seed=None,
                 threads: int = 1):
    if params is None:
        params, grid = _grid(cfg)
    else:
        grid = make_grid(params, cfg.grid.n_modes, cfg.grid.k_max)
    pole = spectral.find_pole(params, grid)
    lk = spectral.local_kernels(pole, params)
    rate = langevin.mean_decay_rate(pole, cfg.langevin.p)
    if t_max is None:
        t_max = cfg.langevin.t_max
    if t_max is None:
        t_max = 8.0 / rate if rate > 0 else 50.0
    n_steps = max(1, int(math.ceil(t_max / cfg.langevin.dt)))
    spec = langevin.NoiseSpec(lk.B_loc, cfg.langevin.dt,
                              cfg.langevin.seed if seed is None else seed, n_steps,
                              n_trajectories or cfg.langevin.n_trajectories)
    paths = langevin.run_ensemble(cfg.langevin.phi0, pole, spec, cfg.langevin.p,
                                  stride=cfg.langevin.stride, threads=threads)
    times = langevin.record_times(spec, cfg.langevin.stride)
    return pole, lk, spec, paths, times


def run_langevin(cfg: RunConfig, out: Path, threads: int = 1) -> dict:
    pole, lk, spec, paths, times = langevin_run(cfg, threads=threads)
    rate = langevin.mean_decay_rate(pole, cfg.langevin.p)
    fit_until = 2.0 / rate if rate > 0 else None
    ens = langevin.ensemble_stats(paths, times, seed=spec.seed, fit_until=fit_until)
    summary = {
        "B_loc": lk.B_loc,
        "gamma_friction": pole.gamma_friction,
        "m_V": pole.m_V,
        "expected_decay_rate": rate,
        "decay_rate": ens.decay_rate,
        "decay_rate_stderr": ens.decay_rate_stderr,
        "fit_degenerate": ens.fit_degenerate,
        "n_trajectories": spec.n_trajectories,
        "dt": spec.dt,
        "n_steps": spec.n_steps,
    }
    if rate > 0 and times[-1] >= 4.0 / rate:
        ms, se = langevin.stationary_mean_square(paths, times, 4.0 / rate)
        summary.update(stationary_mean_square=ms, stationary_stderr=se,
                       expected_stationary=lk.B_loc / (2.0 * pole.gamma_friction * pole.m_V))
    write_csv(out / "langevin.csv",
              ["t", "re_mean", "im_mean", "mean_abs2", "stderr_mean", "stderr_abs2"],
              ens.rows(), cfg)
    write_json(out / "langevin.json", summary, cfg)
    return summary
