"""Cross-module checks run by ``leedissip verify``.

Each check returns an :class:`Outcome`; an exception inside a check is
recorded as a failure with the exception text as detail. Checks that need a
decaying V level are skipped (not failed) when the configured model is
stable or uncoupled.
"""

from __future__ import annotations

import filecmp
import tempfile
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import commands, langevin, master, sector, spectral
from .config import RunConfig
from .errors import LeeModelError
from .model import make_grid

STABLE_NOTE = "stable regime: no decay to fit"


@dataclass
class Outcome:
    id: int
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)
    skipped: bool = False

    def line(self) -> str:
        status = "SKIP" if self.skipped else ("PASS" if self.passed else "FAIL")
        return f"[{status}] {self.id:2d} {self.name}: {self.detail}"

    def as_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": self.passed,
                "skipped": self.skipped, "detail": self.detail, "values": self.values}


class Context:
    """Shared, lazily computed objects for one verification run."""

    def __init__(self, cfg: RunConfig, threads: int = 1):
        self.cfg = cfg
        self.threads = threads
        self.params = cfg.model_params()
        self.grid = make_grid(self.params, cfg.grid.n_modes, cfg.grid.k_max)

    @cached_property
    def pole(self) -> spectral.PoleResult:
        return spectral.find_pole(self.params, self.grid)

    @property
    def decaying(self) -> bool:
        return self.params.lambda0 > 0 and self.pole.unstable

    @cached_property
    def master(self):
        cfg = self.cfg.replace("master", variant="hermitized", initial="V")
        t_max = 3.0 / self.pole.Gamma if self.pole.Gamma > 0 else None
        return commands.master_run(cfg, t_max=t_max)


def _skip(id_, name):
    return Outcome(id_, name, True, STABLE_NOTE, skipped=True)


def kernel_identities(ctx: Context) -> Outcome:
    name = "kernel identities"
    p, g = ctx.params, ctx.grid
    edge = commands.symmetric_edge(p, g)
    E = commands.symmetric_grid(edge, ctx.cfg.kernels.n_E)
    table = spectral.kernel_table(p, g, E)
    odd = float(np.max(np.abs(table.A - np.sign(E) * table.B)))
    below = float(np.max(np.abs(table.B[E <= p.threshold]), initial=0.0))
    neg = float(min(0.0, table.B.min()))
    ok = odd == 0.0 and below == 0.0 and neg == 0.0
    return Outcome(1, name, ok, f"max|A-sign(E)B|={odd:.3g}, max B below threshold={below:.3g}, "
                   f"min B={table.B.min():.3g}",
                   {"odd_defect": odd, "B_below_threshold": below, "B_min": float(table.B.min())})


def width_crosscheck(ctx: Context) -> Outcome:
    name = "width cross-check"
    if not ctx.decaying:
        return _skip(2, name)
    H = sector.build_sector(ctx.params, ctx.grid)
    s = ctx.cfg.sector
    fit, _ = sector.fitted_width(H, ctx.pole.Gamma, (s.fit_start, s.fit_stop), s.n_points)
    rel = abs(fit / ctx.pole.Gamma - 1.0)
    return Outcome(2, name, rel < 0.05,
                   f"Gamma_pole={ctx.pole.Gamma:.6g}, Gamma_fit={fit:.6g}, rel={rel:.3g} (< 0.05)",
                   {"Gamma_pole": ctx.pole.Gamma, "Gamma_fit": fit, "relative": rel})


def stable_eigenvalue(ctx: Context) -> Outcome:
    name = "stable-case eigenvalue"
    p = ctx.params.with_(m_V0=ctx.cfg.verify.stable_m_V0)
    g = make_grid(p, ctx.cfg.grid.n_modes, ctx.cfg.grid.k_max)
    H = sector.build_sector(p, g)
    m_sec, amp, _ = sector.diagonalize_stable(H)
    m_root = spectral.physical_mass(p, g)
    ref = sector.continuum_weight(m_sec, p, g.omegas)
    scale = np.abs(ref)
    mask = scale > 0
    dev = float(np.max(np.abs(amp[mask] - ref[mask]) / scale[mask], initial=0.0))
    dev_zero = float(np.max(np.abs(amp[~mask]), initial=0.0))
    dm = abs(m_sec - m_root)
    ok = dm < 1e-4 and dev < 1e-6 and dev_zero < 1e-12
    return Outcome(3, name, ok,
                   f"|m_sector-m_root|={dm:.3g} (< 1e-4), max rel dev g_k={dev:.3g} (< 1e-6)",
                   {"m_sector": m_sec, "m_root": m_root, "mass_diff": dm, "g_rel_dev": dev})


def probability_conservation(ctx: Context) -> Outcome:
    _, _, evo = ctx.master
    d = evo.max_trace_defect
    return Outcome(4, "probability conservation", d < 1e-10,
                   f"max|Tr rho - 1|={d:.3g} over {len(evo.step_times) - 1} steps (< 1e-10)",
                   {"max_trace_defect": d, "n_steps": len(evo.step_times) - 1, "dt": evo.dt})


def _fd_slope(evo, k_step):
    """Five-point central derivative of the per-step entropy at step index ``k_step``."""
    S = evo.step_entropy
    h = evo.step_times[k_step + 1] - evo.step_times[k_step]
    return (-S[k_step + 2] + 8 * S[k_step + 1] - 8 * S[k_step - 1] + S[k_step - 2]) / (12 * h)


def entropy_monotonicity(ctx: Context) -> Outcome:
    _, gen, evo = ctx.master
    S0 = float(evo.step_entropy[0])
    drop = evo.max_entropy_drop
    worst = 0.0
    n_checked = 0
    snap_idx = np.searchsorted(evo.step_times, evo.times)
    for k, idx in enumerate(snap_idx[1:-1], start=1):
        if idx < 2 or idx + 2 >= len(evo.step_times):
            continue
        exact = master.entropy_production(gen, evo.states[k])
        fd = _fd_slope(evo, idx)
        if exact == 0.0:
            err = abs(fd)
        else:
            err = abs(fd / exact - 1.0)
        worst = max(worst, err)
        n_checked += 1
    ok = S0 == -1.0 and drop <= 1e-12 and worst < 1e-6 and n_checked > 0
    return Outcome(5, "entropy monotonicity", ok,
                   f"S(0)={S0}, max per-step drop={drop:.3g} (<= 1e-12), "
                   f"max rel FD error={worst:.3g} at {n_checked} steps (< 1e-6)",
                   {"S0": S0, "max_entropy_drop": drop, "fd_rel_error": worst,
                    "n_checked": n_checked})


def two_level_dephasing(ctx: Context) -> Outcome:
    kappa = ctx.cfg.master.kappa
    if kappa is None:
        kappa = ctx.pole.gamma_friction * ctx.pole.m_V if ctx.pole.gamma_friction > 0 else 1.0
    gen = master.GeneratorSpec(np.zeros((2, 2)), kappa, master.Variant.HERMITIZED)
    dt = 0.02 / kappa
    n = int(round(5.0 / (kappa * dt)))
    t = np.linspace(0.0, 5.0 / kappa, n + 1)
    rho0 = master.initial_state("superposition", 2)
    evo = master.evolve_density(gen, rho0, t, dt)
    c = evo.coherence(master.VAC, master.V)
    err = float(np.max(np.abs(c - 0.5 * np.exp(-kappa * t))))
    return Outcome(6, "2-level closed form", err < 1e-8,
                   f"kappa={kappa:.6g}, max|rho_0V - rho_0V(0)exp(-kappa t)|={err:.3g} (< 1e-8)",
                   {"kappa": kappa, "max_abs_error": err})


def langevin_mean_decay(ctx: Context) -> Outcome:
    name = "Langevin mean decay"
    if not ctx.decaying:
        return _skip(7, name)
    rate = langevin.mean_decay_rate(ctx.pole, ctx.cfg.langevin.p)
    pole, _, spec, paths, times = commands.langevin_run(
        ctx.cfg, n_trajectories=10_000, t_max=2.0 / rate, threads=ctx.threads)
    ens = langevin.ensemble_stats(paths, times, seed=spec.seed)
    if ens.decay_rate is None or ens.decay_rate_stderr is None:
        return Outcome(7, name, False, "fit degenerate: mean drowned in noise")
    z = (ens.decay_rate - rate) / ens.decay_rate_stderr
    return Outcome(7, name, abs(z) < 3.0,
                   f"fit={ens.decay_rate:.6g} +/- {ens.decay_rate_stderr:.2g}, "
                   f"expected={rate:.6g}, z={z:.2f} (|z| < 3)",
                   {"decay_rate": ens.decay_rate, "stderr": ens.decay_rate_stderr,
                    "expected": rate, "z": z})


def fluctuation_dissipation(ctx: Context) -> Outcome:
    name = "fluctuation-dissipation"
    if not ctx.decaying:
        return _skip(8, name)
    v = ctx.cfg.verify
    settings = [ctx.params, ctx.params.with_(lambda0=v.fdt_lambda0, m_V0=v.fdt_m_V0)]
    values, parts, ok = {}, [], True
    seen = set()
    for i, p in enumerate(settings):
        # t_max defaults to 8 relaxation times; the average starts after 4
        pole, _, spec, paths, times = commands.langevin_run(
            ctx.cfg, params=p, n_trajectories=v.fdt_trajectories, threads=ctx.threads)
        rate = langevin.mean_decay_rate(pole, ctx.cfg.langevin.p)
        ms, se = langevin.stationary_mean_square(paths, times, 4.0 / rate)
        z = (ms - 0.5) / se
        ok &= abs(z) < 3.0
        seen.add((round(pole.gamma_friction, 12), round(pole.m_V, 12)))
        values[f"setting_{i}"] = {"gamma": pole.gamma_friction, "m_V": pole.m_V,
                                  "mean_square": ms, "stderr": se, "z": z}
        parts.append(f"(gamma={pole.gamma_friction:.4g}, m_V={pole.m_V:.4g}): "
                     f"{ms:.4f} +/- {se:.4f}, z={z:.2f}")
    ok &= len(seen) == 2
    return Outcome(8, name, bool(ok), "; ".join(parts) + " (|z| < 3, expected 0.5)", values)


def scaling_laws(ctx: Context) -> Outcome:
    p1 = ctx.params if ctx.params.lambda0 > 0 else ctx.params.with_(lambda0=0.2)
    p2 = p1.with_(lambda0=2.0 * p1.lambda0)
    g = ctx.grid
    E = np.linspace(p1.threshold + 0.1, p1.threshold + 0.9 * (g.omega_max - g.omega_min), 7)
    E = np.concatenate([[p1.threshold - 1.0], E])
    ratios = {}

    def rel(a, b):
        a, b = np.atleast_1d(a), np.atleast_1d(b)
        m = a != 0
        return float(np.max(np.abs(b[m] / a[m] / 4.0 - 1.0), initial=0.0))

    ratios["Sigma"] = rel(spectral.self_energy(E, p1, g).view(float),
                          spectral.self_energy(E, p2, g).view(float))
    m_trial = ctx.pole.m_V if ctx.params.lambda0 > 0 else p1.m_V0
    c1 = spectral.renorm_constants(p1, g, m_trial)
    c2 = spectral.renorm_constants(p2, g, m_trial)
    ratios["C0"] = rel(c1[0], c2[0])
    ratios["C1"] = rel(c1[1], c2[1])
    ratios["B"] = rel(spectral.kernel_table(p1, g, E).B, spectral.kernel_table(p2, g, E).B)
    ratios["gamma"] = rel(spectral.friction_coefficient(p1, m_trial),
                          spectral.friction_coefficient(p2, m_trial))
    worst = max(ratios.values())

    free = ctx.params.with_(lambda0=0.0)
    pole0 = spectral.find_pole(free, g)
    cfg0 = ctx.cfg.replace("model", lambda0=0.0).replace(
        "master", variant="hermitized", initial="superposition", n_out=20, dt=None, kappa=None)
    _, gen0, evo0 = commands.master_run(cfg0, t_max=10.0)
    s_var = float(np.max(np.abs(evo0.step_entropy - evo0.step_entropy[0])))
    free_ok = pole0.Gamma == 0.0 and pole0.Z_V == 1.0 and gen0.decoherence_rate == 0.0 \
        and s_var < 1e-12
    ok = worst <= 1e-12 and free_ok
    return Outcome(9, "scaling laws", ok,
                   f"max|ratio/4 - 1|={worst:.3g} (<= 1e-12); free theory: Gamma={pole0.Gamma}, "
                   f"Z_V={pole0.Z_V}, max|S(t)-S(0)|={s_var:.3g}",
                   {"ratio_errors": ratios, "free_Gamma": pole0.Gamma, "free_Z_V": pole0.Z_V,
                    "free_entropy_variation": s_var})


def recurrence_scaling(ctx: Context) -> Outcome:
    name = "recurrence scaling"
    if not ctx.decaying:
        return _skip(10, name)
    times = []
    for n in ctx.cfg.recurrence_modes:
        g = make_grid(ctx.params, n, ctx.cfg.grid.k_max)
        pole = spectral.find_pole(ctx.params, g)
        H = sector.build_sector(ctx.params, g)
        times.append(sector.recurrence_estimate(H, width=pole.Gamma, Z_V=pole.Z_V))
    if any(t is None for t in times):
        return Outcome(10, name, False, f"no recurrence found: {times}", {"times": times})
    ratios = [b / a for a, b in zip(times, times[1:])]
    ok = all(abs(r - 2.0) <= 0.3 for r in ratios)
    return Outcome(10, name, ok,
                   "t_rec=" + ", ".join(f"{t:.4g}" for t in times)
                   + "; ratios=" + ", ".join(f"{r:.3f}" for r in ratios) + " (2.0 +/- 0.3)",
                   {"modes": ctx.cfg.recurrence_modes, "times": times, "ratios": ratios})


def _light_config(cfg: RunConfig) -> RunConfig:
    return (cfg.replace("grid", n_modes=min(cfg.grid.n_modes, 128))
            .replace("kernels", n_E=min(cfg.kernels.n_E, 201))
            .replace("sector", n_points=min(cfg.sector.n_points, 200))
            .replace("langevin", n_trajectories=min(cfg.langevin.n_trajectories, 50),
                     t_max=cfg.langevin.t_max or 20.0))


def determinism(ctx: Context) -> Outcome:
    """Regenerate a light set of artifacts twice and compare bytes."""
    cfg = _light_config(ctx.cfg)
    runs = (commands.run_pole, commands.run_kernels, commands.run_sector, commands.run_langevin)
    with tempfile.TemporaryDirectory() as d1, tempfile.TemporaryDirectory() as d2:
        for out in (Path(d1), Path(d2)):
            for run in runs:
                run(cfg, out)
        names = sorted(p.name for p in Path(d1).iterdir())
        match, mismatch, errors = filecmp.cmpfiles(d1, d2, names, shallow=False)
    ok = not mismatch and not errors and len(match) == len(names)
    return Outcome(11, "determinism", ok,
                   f"{len(match)}/{len(names)} artifacts byte-identical"
                   + (f"; differ: {mismatch + errors}" if not ok else ""),
                   {"files": names, "mismatch": mismatch + errors})


CRITERIA = (kernel_identities, width_crosscheck, stable_eigenvalue, probability_conservation,
            entropy_monotonicity, two_level_dephasing, langevin_mean_decay,
            fluctuation_dissipation, scaling_laws, recurrence_scaling, determinism)

_NAMES = {1: "kernel identities", 2: "width cross-check", 3: "stable-case eigenvalue",
          4: "probability conservation", 5: "entropy monotonicity", 6: "2-level closed form",
          7: "Langevin mean decay", 8: "fluctuation-dissipation", 9: "scaling laws",
          10: "recurrence scaling", 11: "determinism"}


def run_criterion(index: int, ctx: Context) -> Outcome:
    """Run criterion ``index`` (1-based); exceptions become failures."""
    try:
        return CRITERIA[index - 1](ctx)
    except (LeeModelError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return Outcome(index, _NAMES[index], False, f"{type(exc).__name__}: {exc}")


def run_all(cfg: RunConfig, only=None, echo=None, threads: int = 1) -> list[Outcome]:
    ctx = Context(cfg, threads)
    results = []
    for i in range(1, len(CRITERIA) + 1):
        if only is not None and i not in only:
            continue
        res = run_criterion(i, ctx)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results


def report(results: list[Outcome]) -> dict:
    return {"all_passed": all(r.passed for r in results),
            "criteria": [r.as_dict() for r in results]}
