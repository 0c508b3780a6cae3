"""Moment dualities between the lattice diffusions and the walker systems.

The bridging functional is the mixed moment

    H(v, xi) = prod_{x: xi(x) >= 1} v(x)^{xi(x)}      (empty product = 1)

evaluated either on a diffusion field (v = sigma for the mu = 2 pairing,
v = p for the branching-coalescing pairing) and a frozen particle
configuration, or the other way around.  Two independent evaluations of
the generator action on H are provided:

* closed forms (:func:`gen_sigma_on_H`, :func:`gen_p_on_H`) obtained by
  applying the diffusion generator to H and collecting terms in
  pre-division polynomial form, so sites with v(x) = 0 never divide;
* the walker route (:func:`gen_walker_on_H`), a plain sum of
  rate * (H(after) - H(before)) over the walker transition table.

Their pointwise equality (generator duality) is the exact oracle; the
Monte Carlo comparison :func:`moment_duality_mc` checks the integrated
identity E[H(v_t, xi_0)] = E[H(v_0, xi_t)] with a two-sample z test and a
mandatory dt-halving repeat on the diffusion side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import DiffusionParams, ensemble_observable, sigma_of_p
from .lattice import Stencil, Torus
from .rng import derive_stream
from .stats import MCEstimate, two_sample_z, wilson_lower, wilson_upper
from .walkers import BCRW, CRW, DBARW, DEFAULT_CAP, WalkerKind, simulate_walker, walker_rates, apply_transition, survival_probability

__all__ = [
    "moment_eval",
    "gen_sigma_on_H",
    "gen_p_on_H",
    "gen_walker_on_H",
    "generator_duality_battery",
    "moment_duality_mc",
    "coexistence_probe",
    "extinction_probe",
]

WALKER_BATCH = 1024  # replicates per derived dual stream (fixed for determinism)


def moment_eval(vals: np.ndarray, counts: dict[int, int]) -> float:
    """H(vals, counts) = prod vals[x]^counts[x]; empty product is 1."""
    out = 1.0
    flat = np.asarray(vals).reshape(-1)
    for x, c in counts.items():
        if c < 0:
            raise ValueError("counts must be nonnegative")
        if c:
            out *= float(flat[x]) ** int(c)
    return out


def _rest_products(flat: np.ndarray, items: list[tuple[int, int]]) -> list[float]:
    """rest[i] = prod over j != i of flat[x_j]^{c_j}, computed without division."""
    powers = [float(flat[x]) ** int(c) for x, c in items]
    k = len(powers)
    rests = []
    for i in range(k):
        r = 1.0
        for j in range(k):
            if j != i:
                r *= powers[j]
        rests.append(r)
    return rests


def gen_sigma_on_H(sigma: np.ndarray, counts: dict[int, int], s: float,
                   torus: Torus, stencil: Stencil) -> float:
    """Action of the sigma-diffusion generator (mu = 2 pairing) on H.

    All terms are evaluated as polynomials in sigma(x), so sigma(x) = 0 is
    handled exactly (never a 0/0).
    """
    flat = np.asarray(sigma).reshape(-1)
    items = [(x, c) for x, c in sorted(counts.items()) if c > 0]
    if not items:
        return 0.0
    rests = _rest_products(flat, items)
    table = torus.move_table(stencil)
    disp_w = stencil.weights
    total = 0.0
    for (x, c), rest in zip(items, rests):
        sx = float(flat[x])
        pow_c = sx**c
        pow_cm1 = sx ** (c - 1)
        mig = 0.0
        for j, w in enumerate(disp_w):
            if w > 0:
                y = int(table[x, j])
                sy_pow = float(flat[y]) if y != x else sx
                mig += w * (sy_pow * pow_cm1 - pow_c)
        total += c * mig * rest
        total += 0.5 * s * c * (sx ** (c + 2) - pow_c) * rest
        if c >= 2:
            total += 0.5 * c * (c - 1) * (sx ** (c - 2) - pow_c) * rest
    return total


def gen_p_on_H(p: np.ndarray, counts: dict[int, int], s: float, mu: float,
               torus: Torus, stencil: Stencil) -> float:
    """Action of the p-diffusion generator (s <= 0, mu in [-1,0]) on H."""
    if s > 0:
        raise ValueError("this pairing needs s <= 0")
    if not (-1.0 <= mu <= 0.0):
        raise ValueError("this pairing needs mu in [-1, 0]")
    flat = np.asarray(p).reshape(-1)
    items = [(x, c) for x, c in sorted(counts.items()) if c > 0]
    if not items:
        return 0.0
    rests = _rest_products(flat, items)
    table = torus.move_table(stencil)
    disp_w = stencil.weights
    total = 0.0
    for (x, c), rest in zip(items, rests):
        px = float(flat[x])
        pow_c = px**c
        pow_cm1 = px ** (c - 1)
        mig = 0.0
        for j, w in enumerate(disp_w):
            if w > 0:
                y = int(table[x, j])
                py = float(flat[y]) if y != x else px
                mig += w * (py * pow_cm1 - pow_c)
        total += c * mig * rest
        total += s * c * (pow_c - (mu + 1.0) * px ** (c + 1) + mu * px ** (c + 2)) * rest
        if c >= 2:
            total += 0.5 * c * (c - 1) * (pow_cm1 - pow_c) * rest
    return total


def gen_walker_on_H(vals: np.ndarray, counts: dict[int, int], kind: WalkerKind,
                    torus: Torus, stencil: Stencil) -> float:
    """Walker-route generator action: sum of rate * (H(after) - H(before))."""
    h0 = moment_eval(vals, counts)
    total = 0.0
    for transition, rate in walker_rates(kind, counts, torus, stencil):
        after = apply_transition(kind, counts, transition)
        total += rate * (moment_eval(vals, after) - h0)
    return total


def _random_counts(rng: np.random.Generator, n_sites: int, max_total: int) -> dict[int, int]:
    total = int(rng.integers(1, max_total + 1))
    sites = rng.integers(0, n_sites, size=total)
    counts: dict[int, int] = {}
    for x in sites:
        counts[int(x)] = counts.get(int(x), 0) + 1
    return counts


def generator_duality_battery(regime: str, param_list, n_pairs: int, torus: Torus,
                              stencil: Stencil, seed: int, max_total: int = 6) -> float:
    """Max |closed form - walker route| over random (field, particle) pairs.

    ``regime`` is "dbarw" (sigma fields in [-1,1], DBARW with branch rate
    s/2, param_list holds s values) or "bcrw" (p fields in [0,1], BCRW,
    param_list holds (s, mu) pairs).  Fields get exact zeros (and exact
    endpoint values) sprinkled in to exercise the polynomial forms.
    """
    rng = derive_stream(seed, f"genbattery-{regime}")
    n = torus.n_sites
    worst = 0.0
    for i in range(n_pairs):
        par = param_list[i % len(param_list)]
        counts = _random_counts(rng, n, max_total)
        if regime == "dbarw":
            field = rng.uniform(-1.0, 1.0, size=n)
        elif regime == "bcrw":
            field = rng.uniform(0.0, 1.0, size=n)
        else:
            raise ValueError(f"unknown regime {regime!r}")
        # exact special values at a few sites, including occupied ones
        for x in rng.integers(0, n, size=2):
            field[int(x)] = 0.0
        if i % 7 == 0:
            field[int(rng.integers(0, n))] = 1.0 if regime == "bcrw" else -1.0
        if regime == "dbarw":
            s = float(par)
            closed = gen_sigma_on_H(field, counts, s, torus, stencil)
            walk = gen_walker_on_H(field, counts, DBARW(branch_rate=s / 2.0), torus, stencil)
        else:
            s, mu = float(par[0]), float(par[1])
            closed = gen_p_on_H(field, counts, s, mu, torus, stencil)
            walk = gen_walker_on_H(field, counts, BCRW(s=s, mu=mu), torus, stencil)
        worst = max(worst, abs(closed - walk))
    return worst


# -- Monte Carlo duality -------------------------------------------------------


def _moment_observable(counts: dict[int, int], transform=None):
    """Vectorized H(., counts) over a batch of fields (flattened site axes)."""
    items = sorted((x, c) for x, c in counts.items() if c > 0)

    def obs(fields: np.ndarray) -> np.ndarray:
        vals = fields.reshape(fields.shape[0], -1)
        if transform is not None:
            vals = transform(vals)
        out = np.ones(fields.shape[0])
        for x, c in items:
            out *= vals[:, x] ** c
        return out

    return obs


def _dual_walker_moments(kind: WalkerKind, xi0: dict[int, int], v0_flat: np.ndarray,
                         grid, reps: int, master_seed: int, role: str, torus: Torus,
                         stencil: Stencil, cap: int) -> tuple[np.ndarray, int]:
    """H(v0, xi_t) samples at each grid time, shape (len(grid), reps)."""
    grid = sorted(grid)
    horizon = max(grid)
    out = np.empty((len(grid), reps))
    capped = 0
    start = 0
    bi = 0
    while start < reps:
        b = min(WALKER_BATCH, reps - start)
        rng = derive_stream(master_seed, role, bi)
        for r in range(b):
            run = simulate_walker(kind, xi0, torus, stencil, horizon, rng,
                                  cap=cap, grid=grid, keep_snapshots=True)
            if run.cap_time is not None:
                capped += 1
            for gi in range(len(grid)):
                out[gi, start + r] = moment_eval(v0_flat, run.snapshots[gi])
        start += b
        bi += 1
    return out, capped


def moment_duality_mc(params: DiffusionParams, p0: np.ndarray, xi0: dict[int, int],
                      grid, reps: int, master_seed: int, regime: str = "auto",
                      cap: int = DEFAULT_CAP, halving: bool = True) -> list[dict]:
    """Both sides of the moment duality along a time grid, with z scores.

    Forward side: E[H(v_t, xi_0)] from the diffusion ensemble, where v is
    sigma = 1 - 2p for the mu = 2 pairing and p itself otherwise.  Dual
    side: E[H(v_0, xi_t)] from walker replicates.  The forward run is
    repeated at dt/2 (``halving``) and both runs are z-tested against the
    dual and against each other.
    """
    if regime == "auto":
        if params.mu == 2.0:
            regime = "dbarw"
        elif params.s == 0.0:
            regime = "crw"
        else:
            regime = "bcrw"
    grid = sorted(grid)
    p0 = np.asarray(p0, dtype=np.float64)

    if regime == "dbarw":
        if params.mu != 2.0:
            raise ValueError("the DBARW pairing needs mu = 2")
        kind: WalkerKind = DBARW(branch_rate=params.s / 2.0)
        transform = lambda v: 1.0 - 2.0 * v
        v0_flat = sigma_of_p(p0).reshape(-1)
    elif regime == "crw":
        if params.s != 0.0:
            raise ValueError("the CRW pairing needs s = 0")
        kind = CRW()
        transform = None
        v0_flat = p0.reshape(-1)
    elif regime == "bcrw":
        if params.s > 0 or not (-1.0 <= params.mu <= 0.0):
            raise ValueError("the BCRW pairing needs s <= 0 and mu in [-1, 0]")
        kind = BCRW(s=params.s, mu=params.mu)
        transform = None
        v0_flat = p0.reshape(-1)
    else:
        raise ValueError(f"unknown regime {regime!r}")

    obs = _moment_observable(xi0, transform)
    fwd = ensemble_observable(params, p0, grid, obs, reps, master_seed, "momdual-fwd")
    fwd_half = None
    if halving:
        fwd_half = ensemble_observable(params.with_dt(params.dt / 2.0), p0, grid, obs,
                                       reps, master_seed, "momdual-fwd-half")
    dual, capped = _dual_walker_moments(kind, xi0, v0_flat, grid, reps, master_seed,
                                        "momdual-dual", params.torus, params.stencil, cap)

    rows = []
    for gi, t in enumerate(grid):
        f = MCEstimate.from_samples(fwd[gi])
        d = MCEstimate.from_samples(dual[gi])
        row = {"t": float(t), "regime": regime, "forward": f, "dual": d,
               "z": two_sample_z(f, d), "cap_fraction": capped / reps}
        if fwd_half is not None:
            fh = MCEstimate.from_samples(fwd_half[gi])
            row["forward_half"] = fh
            row["z_half"] = two_sample_z(fh, d)
            row["z_steps"] = two_sample_z(f, fh)
        rows.append(row)
    return rows


# -- probes --------------------------------------------------------------------


@dataclass(frozen=True)
class CoexistenceReport:
    heterozygosity: MCEstimate
    het_lcb99: float
    survival: MCEstimate
    survival_lcb99: float
    cap_fraction: float
    sigma_sq: MCEstimate
    sigma_sq_bound: float
    inconsistent: bool


def coexistence_probe(s: float, torus: Torus, stencil: Stencil, master_seed: int,
                      t_het: float = 10.0, horizon_surv: float = 50.0,
                      kappa: float = 0.1, reps_het: int = 800, reps_surv: int = 500,
                      cap: int = 2000, dt: float = 1e-3) -> CoexistenceReport:
    """Coexistence-side diagnostics at mu = 2 (balancing selection).

    (i) Diffusion heterozygosity P(kappa < p_t(0) < 1 - kappa) started flat
    at 1/2; (ii) DBARW survival from two particles at the origin with
    branch rate s/2 (a cap hit counts as survival and is reported); and
    (iii) the second-moment bound E[sigma_t(0)^2] <= (1-2kappa)^2 * delta
    + (1 - delta) with delta the heterozygosity.  The report flags the
    inconsistent regime where (i) is bounded away from zero while (ii)
    vanishes beyond its error bars.
    """
    if s <= 0:
        raise ValueError("the coexistence probe is for s > 0")
    params = DiffusionParams(torus=torus, stencil=stencil, s=s, mu=2.0, dt=dt)
    p0 = np.full(torus.shape, 0.5)

    def obs_site0(fields):
        return fields.reshape(fields.shape[0], -1)[:, 0]

    vals = ensemble_observable(params, p0, [t_het], obs_site0, reps_het,
                               master_seed, "coexist-het")[0]
    inside = ((vals > kappa) & (vals < 1.0 - kappa)).astype(float)
    het = MCEstimate.from_samples(inside)
    het_lcb = wilson_lower(int(inside.sum()), reps_het, 0.99)
    sig2 = MCEstimate.from_samples((1.0 - 2.0 * vals) ** 2)
    bound = (1.0 - 2.0 * kappa) ** 2 * het.mean + (1.0 - het.mean)

    rng = derive_stream(master_seed, "coexist-surv")
    surv = survival_probability(DBARW(branch_rate=s / 2.0), {0: 2}, torus, stencil,
                                horizon_surv, reps_surv, rng, cap=cap)
    surv_lcb = wilson_lower(surv["successes"], reps_surv, 0.99)
    surv_ucb = wilson_upper(surv["successes"], reps_surv, 0.99)

    inconsistent = het_lcb > 0.0 and surv_ucb < 0.01
    return CoexistenceReport(het, het_lcb, surv["survival"], surv_lcb,
                             surv["cap_fraction"], sig2, float(bound), inconsistent)


@dataclass(frozen=True)
class ExtinctionReport:
    rows: tuple
    forward_below_bound: bool
    forward_decreasing: bool
    dual_decreasing: bool
    cap_fraction: float


def extinction_probe(s: float, mu: float, torus: Torus, stencil: Stencil,
                     p0_value: float, xi0: dict[int, int], eps: float, grid,
                     reps_fwd: int, reps_dual: int, master_seed: int,
                     cap: int = 400, dt: float = 1e-3) -> ExtinctionReport:
    """Extinction-side diagnostics for s < 0, mu in [-1, 0].

    Forward: E[prod_x p_t(x)^{xi0(x)}] from a flat start p0 < 1 - eps.
    Dual bound: E[(1 - eps)^{|xi_t|}] from the BCRW started at xi0 (a cap
    hit carries its over-cap size forward, contributing essentially zero).
    Checks the bound within 3 combined standard errors and that both point
    estimates decrease along the grid.
    """
    if s >= 0 or not (-1.0 <= mu <= 0.0):
        raise ValueError("the extinction probe needs s < 0 and mu in [-1, 0]")
    if not (0.0 < eps < 1.0) or p0_value >= 1.0 - eps:
        raise ValueError("need 0 < eps < 1 and p0 < 1 - eps")
    grid = sorted(grid)
    params = DiffusionParams(torus=torus, stencil=stencil, s=s, mu=mu, dt=dt)
    p0 = np.full(torus.shape, p0_value)

    fwd = ensemble_observable(params, p0, grid, _moment_observable(xi0), reps_fwd,
                              master_seed, "extinct-fwd")

    kind = BCRW(s=s, mu=mu)
    base = 1.0 - eps
    horizon = max(grid)
    sizes = np.empty((len(grid), reps_dual))
    capped = 0
    start = 0
    bi = 0
    while start < reps_dual:
        b = min(WALKER_BATCH, reps_dual - start)
        rng = derive_stream(master_seed, "extinct-dual", bi)
        for r in range(b):
            run = simulate_walker(kind, xi0, torus, stencil, horizon, rng, cap=cap, grid=grid)
            if run.cap_time is not None:
                capped += 1
            sizes[:, start + r] = run.sizes
        start += b
        bi += 1
    with np.errstate(under="ignore"):
        dual_vals = base ** sizes

    rows = []
    below = True
    for gi, t in enumerate(grid):
        f = MCEstimate.from_samples(fwd[gi])
        d = MCEstimate.from_samples(dual_vals[gi])
        z = two_sample_z(f, d)
        rows.append({"t": float(t), "forward": f, "dual_bound": d, "z": z})
        if z > 3.0:
            below = False
    fmeans = [r["forward"].mean for r in rows]
    dmeans = [r["dual_bound"].mean for r in rows]
    fdec = all(b < a for a, b in zip(fmeans, fmeans[1:]))
    ddec = all(b < a for a, b in zip(dmeans, dmeans[1:]))
    return ExtinctionReport(tuple(rows), below, fdec, ddec, capped / reps_dual)
