"""Exact finite-state machinery: dense generators, semigroups, parity algebra.

Configurations on n <= 12 sites are encoded as n-bit integers (bit x holds
the value at site x), so the full state space {0,1}^n fits in a dense
2^n x 2^n generator.  Three independent constructions of the same dynamics
live here:

* :func:`build_generator_np` accumulates the per-site flip rates directly;
* :func:`build_generator_from_events` accumulates the graphical
  construction's event types (annihilation / voter updates);
* :func:`build_generator_dual` accumulates the transposed event types.

Their agreement, and the Feynman-Kac interchange between the first and the
third, are the machine-checkable oracles the stochastic modules are tested
against.  Also here: the parity-deviation product identity with its
brute-force companion, and determination of a measure from its parity
functionals via character inversion.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import Kernel
from .spin import EventTable, NPParams, flip_rate

__all__ = [
    "MAX_EXACT_SITES",
    "DenseGenerator",
    "state_to_config",
    "config_to_state",
    "build_generator_np",
    "build_generator_from_events",
    "build_generator_dual",
    "semigroup_apply",
    "parity_vector",
    "feynman_kac_check",
    "parity_deviation",
    "parity_deviation_enum",
    "MeasureComparison",
    "measure_determination_check",
]

MAX_EXACT_SITES = 12


@dataclass(frozen=True)
class DenseGenerator:
    """Dense CTMC generator over bit-encoded configurations.

    Row-stochastic orientation: matrix[s, s'] is the jump rate s -> s',
    diagonal entries make rows sum to zero.
    """

    n_sites: int
    matrix: np.ndarray

    def __post_init__(self):
        if self.n_sites > MAX_EXACT_SITES:
            raise ValueError(f"exact machinery restricted to {MAX_EXACT_SITES} sites")
        m = self.matrix
        if m.shape != (1 << self.n_sites, 1 << self.n_sites):
            raise ValueError("generator shape does not match site count")
        off = m - np.diag(np.diag(m))
        if (off < 0).any():
            raise ValueError("off-diagonal rates must be nonnegative")
        if np.abs(m.sum(axis=1)).max() > 1e-10:
            raise ValueError("generator rows must sum to zero")


def state_to_config(s: int, n: int) -> np.ndarray:
    return np.array([(s >> x) & 1 for x in range(n)], dtype=np.uint8)


def config_to_state(cfg: np.ndarray) -> int:
    s = 0
    for x, v in enumerate(cfg):
        if v:
            s |= 1 << x
    return s


def build_generator_np(p: NPParams, k: Kernel) -> DenseGenerator:
    """Generator straight from the per-site flip rates (any parameters)."""
    n = k.n
    if n > MAX_EXACT_SITES:
        raise ValueError(f"exact machinery restricted to {MAX_EXACT_SITES} sites")
    size = 1 << n
    G = np.zeros((size, size))
    for s in range(size):
        cfg = state_to_config(s, n)
        for x in range(n):
            r = flip_rate(p, k, cfg, x)
            if r > 0.0:
                G[s, s ^ (1 << x)] += r
                G[s, s] -= r
    return DenseGenerator(n, G)


def _event_target(s: int, x: int, y: int, z: int) -> int:
    """Bit-encoded result of one graphical event applied to state s."""
    bx = (s >> x) & 1
    by = (s >> y) & 1
    if z < 0:
        new = by
    else:
        new = bx ^ by ^ ((s >> z) & 1)
    if new == bx:
        return s
    return s ^ (1 << x)


def _dual_event_target(s: int, x: int, y: int, z: int) -> int:
    """Bit-encoded result of one transposed event applied to dual state s."""
    bx = (s >> x) & 1
    if z < 0:
        out = s
        if bx:
            out ^= 1 << y   # xi(y) += xi(x)
            out &= ~(1 << x)  # xi(x) = 0
        return out
    if not bx:
        return s
    return s ^ (1 << y) ^ (1 << z)


def _generator_from_targets(p: NPParams, k: Kernel, target_fn) -> DenseGenerator:
    n = k.n
    if n > MAX_EXACT_SITES:
        raise ValueError(f"exact machinery restricted to {MAX_EXACT_SITES} sites")
    table = EventTable.build(p, k)
    size = 1 << n
    G = np.zeros((size, size))
    for x, y, z, r in zip(table.xa, table.ya, table.za, table.rates):
        for s in range(size):
            tgt = target_fn(s, int(x), int(y), int(z))
            if tgt != s:
                G[s, tgt] += r
                G[s, s] -= r
    return DenseGenerator(n, G)


def build_generator_from_events(p: NPParams, k: Kernel) -> DenseGenerator:
    """Generator accumulated from the graphical construction's event types.

    Must agree with :func:`build_generator_np` to 1e-12 for symmetric
    parameters; that agreement is the correctness proof of the event rates.
    """
    return _generator_from_targets(p, k, _event_target)


def build_generator_dual(p: NPParams, k: Kernel) -> DenseGenerator:
    """Generator of the fresh dual chain (transposed updates, same rates)."""
    return _generator_from_targets(p, k, _dual_event_target)


def semigroup_apply(gen: DenseGenerator, t: float, v: np.ndarray,
                    tail: float = 1e-14, self_check: bool = True) -> np.ndarray:
    """exp(t G) v by uniformization, with an optional halved-step self-check.

    Uniformization constant is max |diagonal| * 1.01; the Poisson series is
    truncated once its mass reaches 1 - tail.  With ``self_check`` the
    result is recomputed as two half steps and must agree to 1e-10
    relative error.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    v = np.asarray(v, dtype=np.float64)
    out = _uniformized(gen.matrix, t, v, tail)
    if self_check and t > 0:
        half = _uniformized(gen.matrix, t / 2.0, v, tail)
        two_step = _uniformized(gen.matrix, t / 2.0, half, tail)
        scale = max(1.0, float(np.abs(out).max()))
        err = float(np.abs(out - two_step).max()) / scale
        if err > 1e-10:
            raise ArithmeticError(f"semigroup self-check failed: relative error {err:.3e}")
    return out


def _uniformized(G: np.ndarray, t: float, v: np.ndarray, tail: float) -> np.ndarray:
    lam = float(np.abs(np.diag(G)).max()) * 1.01
    if lam == 0.0 or t == 0.0:
        return v.copy()
    P = np.eye(G.shape[0]) + G / lam
    mu = lam * t
    weight = np.exp(-mu)
    acc = weight * v
    term = v
    kmax = 10_000
    covered = weight
    for kk in range(1, kmax + 1):
        term = P @ term
        weight *= mu / kk
        acc = acc + weight * term
        covered += weight
        if covered >= 1.0 - tail and kk > mu:
            break
    else:
        raise ArithmeticError("uniformization series failed to converge")
    return acc


def parity_vector(n: int, B) -> np.ndarray:
    """phi_B over all 2^n states: phi_B[s] = <1_B, s> mod 2."""
    mask = 0
    for x in B:
        mask |= 1 << x
    states = np.arange(1 << n, dtype=np.uint64)
    overlap = states & np.uint64(mask)
    out = np.zeros(1 << n)
    for s in range(1 << n):
        out[s] = bin(int(overlap[s])).count("1") & 1
    return out


def feynman_kac_check(p: NPParams, k: Kernel, t: float, A, B,
                      gen_fwd: DenseGenerator | None = None,
                      gen_dual: DenseGenerator | None = None) -> float:
    """|P_t phi_B (1_A) - Q_t phi_A (1_B)| for the forward/dual semigroups.

    Both sides evaluate the same parity observable, once through the forward
    generator at state 1_A and once through the dual generator at state 1_B.
    The two matrix exponentials are independent computations; the residual
    should vanish to solver precision.
    """
    n = k.n
    if gen_fwd is None:
        gen_fwd = build_generator_np(p, k)
    if gen_dual is None:
        gen_dual = build_generator_dual(p, k)
    maskA = 0
    for x in A:
        maskA |= 1 << x
    maskB = 0
    for x in B:
        maskB |= 1 << x
    fwd = semigroup_apply(gen_fwd, t, parity_vector(n, B))[maskA]
    dual = semigroup_apply(gen_dual, t, parity_vector(n, A))[maskB]
    return abs(float(fwd) - float(dual))


# -- parity deviation ----------------------------------------------------------


def parity_deviation(u) -> float:
    """P(sum X_m even) - P(sum X_m odd) = prod_m (1 - 2 u_m).

    ``u`` lists the odd-value probabilities of independent nonnegative
    integer summands; only those parities matter.
    """
    u = np.asarray(u, dtype=np.float64)
    if ((u < 0) | (u > 1)).any():
        raise ValueError("odd-probabilities must lie in [0,1]")
    return float(np.prod(1.0 - 2.0 * u))


def parity_deviation_enum(u) -> float:
    """Brute-force companion: enumerate all 2^N parity patterns."""
    u = np.asarray(u, dtype=np.float64)
    N = len(u)
    if N > MAX_EXACT_SITES:
        raise ValueError(f"enumeration restricted to {MAX_EXACT_SITES} terms")
    even = 0.0
    odd = 0.0
    for pattern in range(1 << N):
        pr = 1.0
        bits = 0
        for m in range(N):
            if (pattern >> m) & 1:
                pr *= u[m]
                bits ^= 1
            else:
                pr *= 1.0 - u[m]
        if bits:
            odd += pr
        else:
            even += pr
    return even - odd


# -- determination of a measure by its parity functionals ----------------------


@dataclass(frozen=True)
class MeasureComparison:
    """Outcome of comparing two measures through their parity functionals."""

    equal: bool
    witness: frozenset | None
    detail: str


def _odd_masses(nu: np.ndarray, n: int) -> np.ndarray:
    """nu{<1_B, .> odd} for every B, indexed by the bitmask of B.

    Computed from the Walsh-Hadamard transform: the character sum
    hat(nu)(B) = sum_s (-1)^{<1_B,s>} nu(s) equals total - 2 * odd_mass(B).
    """
    wht = nu.astype(np.float64).copy()
    h = 1
    size = 1 << n
    while h < size:
        for lo in range(0, size, h * 2):
            a = wht[lo:lo + h].copy()
            b = wht[lo + h:lo + 2 * h].copy()
            wht[lo:lo + h] = a + b
            wht[lo + h:lo + 2 * h] = a - b
        h *= 2
    total = float(nu.sum())
    return (total - wht) / 2.0


def measure_determination_check(nu1: np.ndarray, nu2: np.ndarray, n: int,
                                tol: float = 1e-9) -> MeasureComparison:
    """Decide nu1 = nu2 from total mass plus all parity functionals.

    If every parity functional agrees (all site subsets B) and the totals
    agree, the measures are reconstructed from those functionals by
    character inversion and verified pointwise; otherwise the smallest
    disagreeing B is returned as a witness (or the total-mass mismatch is
    reported, which no B can witness).
    """
    nu1 = np.asarray(nu1, dtype=np.float64)
    nu2 = np.asarray(nu2, dtype=np.float64)
    size = 1 << n
    if nu1.shape != (size,) or nu2.shape != (size,):
        raise ValueError("measures must be vectors over all 2^n states")
    if (nu1 < 0).any() or (nu2 < 0).any():
        raise ValueError("measures must be nonnegative")
    t1, t2 = float(nu1.sum()), float(nu2.sum())
    if abs(t1 - t2) > tol:
        return MeasureComparison(False, None, f"total masses differ: {t1!r} vs {t2!r}")
    odd1 = _odd_masses(nu1, n)
    odd2 = _odd_masses(nu2, n)
    gaps = np.abs(odd1 - odd2)
    if gaps.max() > tol:
        bad = [b for b in range(size) if gaps[b] > tol]
        bad.sort(key=lambda b: (bin(b).count("1"), b))
        mask = bad[0]
        witness = frozenset(x for x in range(n) if (mask >> x) & 1)
        return MeasureComparison(False, witness,
                                 f"parity functional differs on B={sorted(witness)} by {gaps[mask]:.3e}")
    # inclusion-exclusion reconstruction: invert the character transform and
    # confirm it reproduces both inputs.
    hat = t1 - 2.0 * odd1
    recon = hat.copy()
    h = 1
    while h < size:
        for lo in range(0, size, h * 2):
            a = recon[lo:lo + h].copy()
            b = recon[lo + h:lo + 2 * h].copy()
            recon[lo:lo + h] = a + b
            recon[lo + h:lo + 2 * h] = a - b
        h *= 2
    recon /= size
    err = max(float(np.abs(recon - nu1).max()), float(np.abs(recon - nu2).max()))
    if err > max(tol, 1e-9 * max(1.0, t1)):
        return MeasureComparison(False, None,
                                 f"reconstruction failed to match inputs (error {err:.3e})")
    return MeasureComparison(True, None, "parity functionals determine the measure; reconstruction matches")
