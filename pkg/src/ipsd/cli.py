"""Command-line interface.

    ipsd SUBCOMMAND [--config PATH] [--seed U64] [--reps N] [--out DIR]
                    [--threads N] [--set section.key=value ...]

Subcommands: spin-run, dual-run, parity-check, exact-check, meanfield,
diffusion-run, walker-run, moment-check, coexist-probe, extinct-probe,
sweep.  Values come from the INI config file (see configs/ for examples),
overridden by repeated ``--set`` flags; the master seed resolves as
--seed > config [run] seed > the IPSD_SEED environment variable.

Outputs are CSV tables plus one JSON report per run, written under --out
(default ``ipsd-results``).  Output bytes are a pure function of the
configuration and seed: worker count and wall clock never enter them.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import DiffusionParams, ensemble_observable, parse_field_initial
from .dualspin import ZBDistribution, evolve_dual_replay, parity, parity_overlap, simulate_dual_fresh
from .exact import (MAX_EXACT_SITES, build_generator_dual, build_generator_from_events,
                    build_generator_np, feynman_kac_check)
from .harness import RunConfig, load_config_file, parallel_map, resolve_seed, write_csv, write_json
from .kernel import Kernel, complete_kernel, explicit_kernel, torus_kernel
from .lattice import Stencil, Torus
from .meanfield import density_rhs, equilibrium, integrate_ode, meanfield_comparator
from .momdual import coexistence_probe, extinction_probe, generator_duality_battery, moment_duality_mc
from .rng import derive_stream
from .spin import EventTable, NPParams, parse_initial, replay_forward, sample_event_log, simulate_gillespie
from .stats import MCEstimate, two_sample_z
from .walkers import BCRW, CRW, DBARW, simulate_walker
from .stats import wilson_lower

CHUNK = 256  # replicates per worker task; fixed so scheduling cannot reorder results


# -- config plumbing -----------------------------------------------------------


def _parse_sites(spec: str) -> list[int]:
    return [int(tok) for tok in str(spec).split(",") if tok.strip() != ""]


def _parse_grid(spec: str) -> list[float]:
    return [float(tok) for tok in str(spec).split(",") if tok.strip() != ""]


def _parse_counts(spec: str) -> dict[int, int]:
    """Particle placement string: "site:count,site:count" (count default 1)."""
    out: dict[int, int] = {}
    for tok in str(spec).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            site, cnt = tok.split(":", 1)
            out[int(site)] = out.get(int(site), 0) + int(cnt)
        else:
            out[int(tok)] = out.get(int(tok), 0) + 1
    return out


def _build_kernel(cfg: RunConfig) -> Kernel:
    ktype = cfg.opt("kernel", "type", "torus")
    if ktype == "torus":
        return torus_kernel(cfg.opt("kernel", "d", 1, int), cfg.opt("kernel", "l", 8, int))
    if ktype == "complete":
        return complete_kernel(cfg.opt("kernel", "n", 8, int))
    if ktype == "explicit":
        n = cfg.opt("kernel", "n", cast=int)
        edges = []
        for tok in cfg.opt("kernel", "edges").split(";"):
            tok = tok.strip()
            if tok:
                x, y, w = tok.split(",")
                edges.append((int(x), int(y), float(w)))
        return explicit_kernel(n, edges)
    raise ValueError(f"unknown kernel type {ktype!r}")


def _build_params(cfg: RunConfig) -> NPParams:
    sec = cfg.options.get("params", {})
    if "alpha" in sec:
        return NPParams.symmetric(float(sec["alpha"]))
    return NPParams(lam=float(sec.get("lam", 1.0)),
                    alpha01=float(sec.get("alpha01", 0.0)),
                    alpha10=float(sec.get("alpha10", 0.0)))


def _build_torus(cfg: RunConfig) -> Torus:
    return Torus(cfg.opt("lattice", "d", 1, int), cfg.opt("lattice", "l", 8, int))


def _build_stencil(cfg: RunConfig, torus: Torus) -> Stencil:
    return Stencil.parse(cfg.opt("model", "m", "nn:1.0"), torus.d)


def _build_diffusion(cfg: RunConfig) -> DiffusionParams:
    torus = _build_torus(cfg)
    return DiffusionParams(
        torus=torus,
        stencil=_build_stencil(cfg, torus),
        s=cfg.opt("model", "s", 0.0, float),
        mu=cfg.opt("model", "mu", 0.0, float),
        noise_n=cfg.opt("model", "noise_n", 1.0, float),
        dt=cfg.opt("model", "dt", 1e-3, float),
    )


def _chunks(reps: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + CHUNK, reps)) for lo in range(0, reps, CHUNK)]


# -- chunk workers (module level so process pools can pickle them) -------------


def _spin_chunk(payload):
    p, k, init_spec, horizon, grid, seed, lo, hi = payload
    dens = np.empty((hi - lo, len(grid)))
    terminal = np.empty(hi - lo)
    for i, r in enumerate(range(lo, hi)):
        eta0 = parse_initial(init_spec, k.n, derive_stream(seed, "spin-init", r))
        traj = simulate_gillespie(p, k, eta0, horizon, derive_stream(seed, "spin-run", r))
        ts, ds = traj.density_path()
        idx = np.searchsorted(ts, grid, side="right") - 1
        dens[i] = ds[idx]
        terminal[i] = ds[-1]
    return lo, dens, terminal


def _dual_chunk(payload):
    p, k, B, grid, seed, lo, hi = payload
    table = EventTable.build(p, k)
    horizon = max(grid)
    sizes = np.empty((hi - lo, len(grid)), dtype=np.int64)
    for i, r in enumerate(range(lo, hi)):
        rng = derive_stream(seed, "dual-run", r)
        snaps = simulate_dual_fresh(p, k, B, horizon, rng, record=list(grid), table=table)
        sizes[i] = [int(cfg.sum()) for _, cfg in snaps]
    return lo, sizes


def _parity_chunk(payload):
    p, k, A, B, horizon, seed, lo, hi = payload
    table = EventTable.build(p, k)
    grid = [horizon / 2.0, horizon]
    n = hi - lo
    fwd = np.empty((n, len(grid)), dtype=np.int64)
    dual = np.empty((n, len(grid)), dtype=np.int64)
    dualmc = np.empty(n, dtype=np.int64)
    from .kernel import config_indicator

    etaA = config_indicator(k.n, A)
    for i, r in enumerate(range(lo, hi)):
        log = sample_event_log(p, k, horizon, derive_stream(seed, "parity-log", r), table=table)
        for j, t in enumerate(grid):
            fwd[i, j] = parity(replay_forward(etaA, log, t), B)
            dual[i, j] = parity_overlap(evolve_dual_replay(B, log, t, k.n), etaA)
        rngd = derive_stream(seed, "parity-dual", r)
        (_, xi), = simulate_dual_fresh(p, k, B, horizon, rngd, record=[horizon], table=table)
        dualmc[i] = parity_overlap(xi, etaA)
    return lo, fwd, dual, dualmc


def _walker_chunk(payload):
    kind, xi0, torus, stencil, grid, cap, seed, lo, hi = payload
    n = hi - lo
    sizes = np.empty((n, len(grid)), dtype=np.int64)
    occupied = np.empty((n, len(grid)), dtype=np.int64)
    alive = np.empty(n)
    capped = np.zeros(n)
    for i, r in enumerate(range(lo, hi)):
        rng = derive_stream(seed, "walker-run", r)
        run = simulate_walker(kind, xi0, torus, stencil, max(grid), rng, cap=cap,
                              grid=grid, keep_snapshots=True)
        sizes[i] = run.sizes
        occupied[i] = [len(s) for s in run.snapshots]
        if run.cap_time is not None:
            capped[i] = 1.0
            alive[i] = 1.0
        else:
            alive[i] = 0.0 if run.extinction_time is not None else 1.0
    return lo, sizes, occupied, alive, capped


# -- subcommands ----------------------------------------------------------------


def cmd_spin_run(cfg: RunConfig) -> dict:
    p = _build_params(cfg)
    k = _build_kernel(cfg)
    horizon = cfg.opt("run", "t", 10.0, float)
    grid = _parse_grid(cfg.opt("run", "grid", "")) or [horizon * j / 20.0 for j in range(21)]
    init_spec = cfg.opt("run", "init", "bernoulli:0.5")
    parts = parallel_map(_spin_chunk,
                         [(p, k, init_spec, horizon, grid, cfg.seed, lo, hi)
                          for lo, hi in _chunks(cfg.reps)], cfg.threads)
    parts.sort(key=lambda x: x[0])
    dens = np.concatenate([d for _, d, _ in parts])
    terminal = np.concatenate([t for _, _, t in parts])
    rows = [(r, t, dens[r, j]) for r in range(cfg.reps) for j, t in enumerate(grid)]
    if cfg.out:
        write_csv(Path(cfg.out) / "spin_density.csv", ["replicate", "time", "density"], rows)
    est = MCEstimate.from_samples(terminal)
    return {"terminal_density": est, "kernel_sites": k.n, "horizon": horizon}


def cmd_dual_run(cfg: RunConfig) -> dict:
    p = _build_params(cfg)
    k = _build_kernel(cfg)
    horizon = cfg.opt("run", "t", 10.0, float)
    grid = _parse_grid(cfg.opt("run", "grid", "")) or [horizon]
    B = _parse_sites(cfg.opt("run", "b"))
    cap = cfg.opt("run", "cap", 10, int)
    parts = parallel_map(_dual_chunk,
                         [(p, k, B, grid, cfg.seed, lo, hi) for lo, hi in _chunks(cfg.reps)],
                         cfg.threads)
    parts.sort(key=lambda x: x[0])
    sizes = np.concatenate([s for _, s in parts])
    if cfg.out:
        write_csv(Path(cfg.out) / "dual_sizes.csv", ["replicate", "t", "size"],
                  [(r, t, int(sizes[r, j])) for r in range(cfg.reps) for j, t in enumerate(grid)])
    table_rows = []
    report_rows = []
    for j, t in enumerate(grid):
        col = sizes[:, j]
        alive = MCEstimate.from_samples((col >= 1).astype(float))
        window = MCEstimate.from_samples(((col >= 1) & (col <= cap)).astype(float))
        table_rows.append((t, alive.mean, alive.stderr, alive.reps))
        report_rows.append({"t": t, "survival": alive, "window": window})
    if cfg.out:
        write_csv(Path(cfg.out) / "dual_survival.csv", ["t", "estimate", "stderr", "reps"], table_rows)
    zb = ZBDistribution.from_samples(sizes[:, -1], cap=cap)
    return {"rows": report_rows, "cap": cap,
            "terminal_size_atoms": {int(s): float(q) for s, q in zip(zb.sizes, zb.probs)},
            "terminal_overflow_mass": zb.infinite_mass}


def cmd_parity_check(cfg: RunConfig) -> dict:
    p = _build_params(cfg)
    k = _build_kernel(cfg)
    horizon = cfg.opt("run", "t", 5.0, float)
    A = _parse_sites(cfg.opt("run", "a"))
    B = _parse_sites(cfg.opt("run", "b"))
    parts = parallel_map(_parity_chunk,
                         [(p, k, A, B, horizon, cfg.seed, lo, hi) for lo, hi in _chunks(cfg.reps)],
                         cfg.threads)
    parts.sort(key=lambda x: x[0])
    fwd = np.concatenate([f for _, f, _, _ in parts])
    dual = np.concatenate([d for _, _, d, _ in parts])
    dualmc = np.concatenate([m for _, _, _, m in parts])
    grid = [horizon / 2.0, horizon]
    if cfg.out:
        rows = [(r, t, int(fwd[r, j]), int(dual[r, j]))
                for r in range(cfg.reps) for j, t in enumerate(grid)]
        write_csv(Path(cfg.out) / "parity_pathwise.csv",
                  ["replicate", "t", "parity_forward", "parity_dual"], rows)
    violations = int((fwd != dual).sum())
    f_est = MCEstimate.from_samples(fwd[:, -1].astype(float))
    d_est = MCEstimate.from_samples(dualmc.astype(float))
    z = two_sample_z(f_est, d_est)
    if cfg.out:
        write_csv(Path(cfg.out) / "parity_mc.csv", ["t", "estimate", "stderr", "reps"],
                  [(horizon, f_est.mean, f_est.stderr, f_est.reps),
                   (horizon, d_est.mean, d_est.stderr, d_est.reps)])
    return {"violations": violations, "forward": f_est, "dual_chain": d_est, "z": z,
            "passed": violations == 0 and abs(z) < 4.0}


def cmd_exact_check(cfg: RunConfig) -> dict:
    alphas = _parse_grid(cfg.opt("run", "alphas", "0,0.3,0.7"))
    tgrid = _parse_grid(cfg.opt("run", "tgrid", "0.1,1,5"))
    kernels = []
    spec = cfg.opt("run", "kernels", "torus:1:3,torus:1:4,complete:3,complete:4")
    for tok in spec.split(","):
        bits = tok.strip().split(":")
        if bits[0] == "torus":
            kernels.append((tok.strip(), torus_kernel(int(bits[1]), int(bits[2]))))
        elif bits[0] == "complete":
            kernels.append((tok.strip(), complete_kernel(int(bits[1]))))
        else:
            raise ValueError(f"unknown kernel spec {tok!r}")
    battery = []
    max_gap = 0.0
    max_res = 0.0
    rng = derive_stream(cfg.seed, "exact-check")
    for name, k in kernels:
        if k.n > MAX_EXACT_SITES:
            raise ValueError(f"kernel {name} too large for exact checks")
        for alpha in alphas:
            p = NPParams.symmetric(alpha)
            g_np = build_generator_np(p, k)
            g_ev = build_generator_from_events(p, k)
            gap = float(np.abs(g_np.matrix - g_ev.matrix).max())
            g_dual = build_generator_dual(p, k)
            res = 0.0
            n_pairs = min(64, 4 ** k.n)
            for _ in range(n_pairs):
                A = [x for x in range(k.n) if rng.random() < 0.5]
                B = [x for x in range(k.n) if rng.random() < 0.5]
                for t in tgrid:
                    res = max(res, feynman_kac_check(p, k, t, A, B, g_np, g_dual))
            battery.append({"kernel": name, "alpha": alpha,
                            "generator_gap": gap, "fk_residual": res})
            max_gap = max(max_gap, gap)
            max_res = max(max_res, res)
    return {"max_generator_gap": max_gap, "max_fk_residual": max_res, "battery": battery}


def cmd_meanfield(cfg: RunConfig) -> dict:
    lam = cfg.opt("params", "lam", 1.0, float)
    a01 = cfg.opt("params", "alpha01", 0.0, float)
    a10 = cfg.opt("params", "alpha10", 0.0, float)
    if "alpha" in cfg.options.get("params", {}):
        lam, a01, a10 = 1.0, cfg.opt("params", "alpha", cast=float), cfg.opt("params", "alpha", cast=float)
    p0 = cfg.opt("run", "p0", 0.5, float)
    horizon = cfg.opt("run", "t", 50.0, float)
    dt = cfg.opt("run", "dt", 1e-3, float)
    stride = cfg.opt("run", "stride", 100, int)
    ts, xs = integrate_ode(lambda x: density_rhs(x, lam, a01, a10), [p0], horizon,
                           dt=dt, self_check=True)
    if cfg.out:
        rows = [(ts[i], xs[i, 0]) for i in range(0, len(ts), stride)]
        if rows[-1][0] != ts[-1]:
            rows.append((ts[-1], xs[-1, 0]))
        write_csv(Path(cfg.out) / "meanfield_path.csv", ["t", "p0"], rows)
    eq = equilibrium(lam, a01, a10)
    payload = {"equilibrium": eq, "terminal": float(xs[-1, 0]),
               "terminal_gap": abs(float(xs[-1, 0]) - eq)}
    n_vertices = cfg.opt("run", "compare_n", 0, int)
    if n_vertices:
        rep = meanfield_comparator(n_vertices, NPParams(lam=lam, alpha01=a01, alpha10=a10),
                                   1.0 - p0, cfg.opt("run", "compare_t", 3.0, float),
                                   cfg.reps, derive_stream(cfg.seed, "meanfield-compare"))
        payload["comparator_median_sup"] = rep.median
    return payload


def cmd_diffusion_run(cfg: RunConfig) -> dict:
    params = _build_diffusion(cfg)
    horizon = cfg.opt("run", "t", 1.0, float)
    grid = _parse_grid(cfg.opt("run", "grid", "")) or [horizon * j / 10.0 for j in range(1, 11)]
    init = cfg.opt("run", "init", "const:0.5")
    kappa = cfg.opt("run", "kappa", 0.1, float)
    site = cfg.opt("run", "site", 0, int)
    p0 = parse_field_initial(init, params.torus, derive_stream(cfg.seed, "diffusion-init"))

    flat_idx = site

    def obs_stack(fields):
        flat = fields.reshape(fields.shape[0], -1)
        return flat[:, flat_idx]

    site_vals = ensemble_observable(params, p0, grid, obs_stack, cfg.reps, cfg.seed, "diffusion-site")
    mean_vals = ensemble_observable(params, p0, grid, lambda f: f.reshape(f.shape[0], -1).mean(axis=1),
                                    cfg.reps, cfg.seed, "diffusion-mean")
    rows = []
    report = []
    for j, t in enumerate(sorted(grid)):
        het = float(((site_vals[j] > kappa) & (site_vals[j] < 1.0 - kappa)).mean())
        rows.append((t, float(mean_vals[j].mean()), float(site_vals[j].var(ddof=1)), het))
        report.append({"t": t, "mean_p": rows[-1][1], "var_p": rows[-1][2], "het_stat": het})
    if cfg.out:
        write_csv(Path(cfg.out) / "diffusion_summary.csv",
                  ["t", "mean_p", "var_p", "het_stat"], rows)
    return {"rows": report, "site": site, "kappa": kappa}


def cmd_walker_run(cfg: RunConfig) -> dict:
    torus = _build_torus(cfg)
    stencil = _build_stencil(cfg, torus)
    kind_name = cfg.opt("walker", "kind", "crw")
    if kind_name == "crw":
        kind = CRW()
    elif kind_name == "dbarw":
        kind = DBARW(branch_rate=cfg.opt("walker", "branch_rate", cast=float))
    elif kind_name == "bcrw":
        kind = BCRW(s=cfg.opt("walker", "s", cast=float), mu=cfg.opt("walker", "mu", cast=float))
    else:
        raise ValueError(f"unknown walker kind {kind_name!r}")
    xi0 = _parse_counts(cfg.opt("run", "xi0"))
    horizon = cfg.opt("run", "t", 10.0, float)
    grid = _parse_grid(cfg.opt("run", "grid", "")) or [horizon]
    cap = cfg.opt("run", "cap", 100000, int)
    parts = parallel_map(_walker_chunk,
                         [(kind, xi0, torus, stencil, grid, cap, cfg.seed, lo, hi)
                          for lo, hi in _chunks(cfg.reps)], cfg.threads)
    parts.sort(key=lambda x: x[0])
    sizes = np.concatenate([s for _, s, _, _, _ in parts])
    occupied = np.concatenate([o for _, _, o, _, _ in parts])
    alive = np.concatenate([a for _, _, _, a, _ in parts])
    capped = np.concatenate([c for _, _, _, _, c in parts])
    if cfg.out:
        rows = [(r, t, int(sizes[r, j]), int(occupied[r, j]))
                for r in range(cfg.reps) for j, t in enumerate(grid)]
        write_csv(Path(cfg.out) / "walker_sizes.csv",
                  ["replicate", "t", "total", "occupied_sites"], rows)
    surv = MCEstimate.from_samples(alive)
    return {"survival": surv, "survival_lcb99": wilson_lower(int(alive.sum()), cfg.reps, 0.99),
            "cap_fraction": float(capped.mean()), "kind": kind_name}


def cmd_moment_check(cfg: RunConfig) -> dict:
    params = _build_diffusion(cfg)
    regime = cfg.opt("run", "regime", "auto")
    grid = _parse_grid(cfg.opt("run", "grid", "0.25,0.5"))
    xi0 = _parse_counts(cfg.opt("run", "xi0", "0:2"))
    p0_val = cfg.opt("run", "p0", 0.5, float)
    cap = cfg.opt("run", "cap", 100000, int)
    p0 = np.full(params.torus.shape, p0_val)
    rows = moment_duality_mc(params, p0, xi0, grid, cfg.reps, cfg.seed, regime=regime, cap=cap)
    ok = all(abs(r["z"]) < 4.0 and abs(r.get("z_half", 0.0)) < 4.0 for r in rows)
    if regime in ("dbarw", "auto") and params.mu == 2.0:
        gap = generator_duality_battery("dbarw", [params.s], 200, params.torus,
                                        params.stencil, cfg.seed)
    elif params.s <= 0 and -1.0 <= params.mu <= 0.0:
        gap = generator_duality_battery("bcrw", [(params.s, params.mu)], 200,
                                        params.torus, params.stencil, cfg.seed)
    else:
        gap = None
    return {"rows": rows, "passed": ok, "generator_gap": gap}


def cmd_coexist_probe(cfg: RunConfig) -> dict:
    torus = _build_torus(cfg)
    stencil = _build_stencil(cfg, torus)
    rep = coexistence_probe(
        s=cfg.opt("model", "s", cast=float), torus=torus, stencil=stencil,
        master_seed=cfg.seed,
        t_het=cfg.opt("run", "t_het", 10.0, float),
        horizon_surv=cfg.opt("run", "t_surv", 50.0, float),
        kappa=cfg.opt("run", "kappa", 0.1, float),
        reps_het=cfg.opt("run", "reps_het", max(2, cfg.reps), int),
        reps_surv=cfg.opt("run", "reps_surv", max(2, cfg.reps), int),
        cap=cfg.opt("run", "cap", 2000, int),
        dt=cfg.opt("model", "dt", 1e-3, float))
    return {
        "heterozygosity": rep.heterozygosity, "het_lcb99": rep.het_lcb99,
        "survival": rep.survival, "survival_lcb99": rep.survival_lcb99,
        "cap_fraction": rep.cap_fraction,
        "sigma_sq": rep.sigma_sq, "sigma_sq_bound": rep.sigma_sq_bound,
        "inconsistent": rep.inconsistent,
        "passed": rep.het_lcb99 > 0.0 and rep.survival_lcb99 > 0.0 and not rep.inconsistent,
    }


def cmd_extinct_probe(cfg: RunConfig) -> dict:
    torus = _build_torus(cfg)
    stencil = _build_stencil(cfg, torus)
    rep = extinction_probe(
        s=cfg.opt("model", "s", cast=float), mu=cfg.opt("model", "mu", cast=float),
        torus=torus, stencil=stencil,
        p0_value=cfg.opt("run", "p0", 0.5, float),
        xi0=_parse_counts(cfg.opt("run", "xi0", "0")),
        # default margin 0.1: tight margins make the bound comparison sensitive
        # to the Euler scheme's boundary bias at late grid times (see README)
        eps=cfg.opt("run", "eps", 0.1, float),
        grid=_parse_grid(cfg.opt("run", "grid", "1,2,5,10")),
        reps_fwd=cfg.opt("run", "reps_fwd", max(2, cfg.reps), int),
        reps_dual=cfg.opt("run", "reps_dual", max(2, cfg.reps), int),
        master_seed=cfg.seed,
        cap=cfg.opt("run", "cap", 400, int),
        dt=cfg.opt("model", "dt", 1e-3, float))
    return {
        "rows": list(rep.rows),
        "forward_below_bound": rep.forward_below_bound,
        "forward_decreasing": rep.forward_decreasing,
        "dual_decreasing": rep.dual_decreasing,
        "cap_fraction": rep.cap_fraction,
        "passed": rep.forward_below_bound and rep.forward_decreasing and rep.dual_decreasing,
    }


_COMMANDS = {
    "spin-run": cmd_spin_run,
    "dual-run": cmd_dual_run,
    "parity-check": cmd_parity_check,
    "exact-check": cmd_exact_check,
    "meanfield": cmd_meanfield,
    "diffusion-run": cmd_diffusion_run,
    "walker-run": cmd_walker_run,
    "moment-check": cmd_moment_check,
    "coexist-probe": cmd_coexist_probe,
    "extinct-probe": cmd_extinct_probe,
}


def cmd_sweep(cfg: RunConfig) -> dict:
    """Repeat a subcommand while varying one config key over a value list."""
    target = cfg.opt("sweep", "over")
    if target not in _COMMANDS:
        raise ValueError(f"sweep target must be one of {sorted(_COMMANDS)}")
    vary = cfg.opt("sweep", "vary")  # "section.key"
    values = [tok.strip() for tok in cfg.opt("sweep", "values").split(",") if tok.strip()]
    section, key = vary.split(".", 1)
    reports = []
    csv_rows = []
    for val in values:
        sub_options = {s: dict(kv) for s, kv in cfg.options.items()}
        sub_options.setdefault(section, {})[key] = val
        sub_out = Path(cfg.out) / f"{vary.replace('.', '_')}={val}" if cfg.out else None
        sub = RunConfig(subcommand=target, seed=cfg.seed, reps=cfg.reps,
                        out=sub_out, threads=cfg.threads, options=sub_options)
        payload = _COMMANDS[target](sub)
        if sub_out:
            write_json(sub_out / f"{target}.json", payload, sub)
        reports.append({"value": val, "report": payload})
        for path, num in _numeric_leaves(payload):
            csv_rows.append((val, path, num))
    if cfg.out:
        write_csv(Path(cfg.out) / "sweep.csv", ["value", "metric", "metric_value"], csv_rows)
    return {"over": target, "vary": vary, "values": values, "reports": reports}


def _numeric_leaves(obj, prefix=""):
    out = []
    if isinstance(obj, MCEstimate):
        out.append((f"{prefix}.mean".lstrip("."), obj.mean))
        out.append((f"{prefix}.stderr".lstrip("."), obj.stderr))
    elif isinstance(obj, bool):
        out.append((prefix, float(obj)))
    elif isinstance(obj, (int, float, np.floating, np.integer)):
        out.append((prefix, float(obj)))
    elif isinstance(obj, dict):
        for kk, vv in obj.items():
            out.extend(_numeric_leaves(vv, f"{prefix}.{kk}".lstrip(".")))
    elif isinstance(obj, (list, tuple)):
        for i, vv in enumerate(obj):
            out.extend(_numeric_leaves(vv, f"{prefix}[{i}]"))
    return out


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipsd", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"ipsd {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="INI config file")
    common.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    common.add_argument("--reps", type=int, default=None, help="replicate count")
    common.add_argument("--out", type=Path, default=None, help="output directory")
    common.add_argument("--threads", type=int, default=None, help="worker processes")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in list(_COMMANDS) + ["sweep"]:
        sub.add_parser(name, parents=[common])
    return parser


def _merge_config(args) -> RunConfig:
    options = load_config_file(args.config) if args.config else {}
    for item in args.set:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ValueError(f"--set expects section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        section, key = lhs.split(".", 1)
        options.setdefault(section.strip(), {})[key.strip().lower()] = value.strip()
    run_sec = options.get("run", {})
    seed = resolve_seed(args.seed, run_sec.get("seed"))
    reps = args.reps if args.reps is not None else int(run_sec.get("reps", 1000))
    threads = args.threads if args.threads is not None else int(run_sec.get("threads", 1))
    out = args.out if args.out is not None else Path(run_sec.get("out", "ipsd-results"))
    return RunConfig(subcommand=args.subcommand, seed=seed, reps=reps,
                     out=out, threads=threads, options=options)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _merge_config(args)
    fn = cmd_sweep if cfg.subcommand == "sweep" else _COMMANDS[cfg.subcommand]
    payload = fn(cfg)
    if cfg.out:
        path = write_json(Path(cfg.out) / f"{cfg.subcommand}.json", payload, cfg)
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
