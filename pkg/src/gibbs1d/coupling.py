"""Boundary-inward maximal coupling of two finite-volume Gibbs measures.

Stage ``m`` of a run couples the pair ``(sigma_{-l+m}, sigma_{l-m})`` of
both chains, each drawn from its exact conditional pair marginal given the
shells already generated; the final stage couples the origin alone.  The
house-of-cards value ``Z_k`` after stage ``k`` counts consecutive matches,
so ``Z_l = 0`` exactly when the origin pair mismatches.

The auxiliary chain ``S`` moves ``m -> m+1`` with probability
``1 - min(gamma_m, 1 - delta)`` and resets to 0 otherwise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .gibbs import compute_finite_gibbs, tv_distance
from .lattice import Interval, SpinConfig, check_enumeration
from .potential import (
    DecayProfile,
    Potential,
    TruncationSpec,
    decay_f,
    decay_profile,
    effective_radius,
    energy_tensor,
)

#: Tolerance on the total mass of a probability table.
MASS_TOL = 1e-9


def run_rng(seed: int, run_index: int) -> np.random.Generator:
    """Counter-based stream for one Monte Carlo run."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(run_index)])))


def _check_table(p) -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < 0) or not np.all(np.isfinite(p)):
        raise DomainError("not a probability table")
    if abs(p.sum() - 1.0) > MASS_TOL:
        raise DomainError(f"probability table sums to {p.sum()}")
    return p


class CouplingPlan:
    """Maximal coupling of two tables, prepared once and sampled many times.

    With probability ``sum min(p, q)`` both coordinates take the same value
    drawn from the normalized overlap; otherwise ``x`` and ``y`` come
    independently from the normalized residuals ``(p-q)+`` and ``(q-p)+``.
    """

    def __init__(self, p, q):
        p, q = _check_table(p), _check_table(q)
        if p.shape != q.shape:
            raise DomainError("tables of different sizes")
        overlap = np.minimum(p, q)
        self.size = p.size
        self.overlap_mass = float(overlap.sum())
        self._c_same = _cdf(overlap)
        self._c_p = _cdf(np.clip(p - q, 0, None))
        self._c_q = _cdf(np.clip(q - p, 0, None))

    def sample(self, rng: np.random.Generator, size: int | None = None):
        n = 1 if size is None else int(size)
        u = rng.random((3, n))
        same = u[0] < self.overlap_mass
        x = np.empty(n, dtype=np.int64)
        y = np.empty(n, dtype=np.int64)
        if self._c_same is not None:
            x[same] = _draw(self._c_same, u[1][same])
            y[same] = x[same]
        if self._c_p is not None:
            x[~same] = _draw(self._c_p, u[1][~same])
            y[~same] = _draw(self._c_q, u[2][~same])
        if size is None:
            return int(x[0]), int(y[0])
        return x, y


def _cdf(w):
    total = w.sum()
    if total <= 0:
        return None
    c = np.cumsum(w / total)
    c[-1] = 1.0
    return c


def _draw(cdf, u):
    return np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)


def maximal_coupling_sample(p, q, rng: np.random.Generator, size: int | None = None):
    """Draw ``(x, y)`` with ``x ~ p``, ``y ~ q`` and ``P(x != y) = TV(p, q)``.

    Off the diagonal the residuals are drawn independently.  With ``size``
    the result is a pair of index arrays.
    """
    return CouplingPlan(p, q).sample(rng, size)


# ---------------------------------------------------------------------------
# Coupling runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CouplingRun:
    """One coupled pair of trajectories.

    ``pairs[k] = ((s1_left, s1_right), (s2_left, s2_right))`` are the symbol
    indices generated at stage ``k`` on sites ``-l+k`` and ``l-k`` (both the
    origin at stage ``l``); ``Z[k]`` is the match count after stage ``k``.
    """

    l: int
    seed: int
    run_index: int
    pairs: tuple
    Z: tuple

    @property
    def matched_at_origin(self) -> bool:
        return self.Z[-1] > 0


class StageMarginals:
    """Memoized exact conditional pair marginals for one potential, volume radius
    and boundary, keyed by the shells generated so far."""

    def __init__(self, potential: Potential, l: int, trunc: TruncationSpec, boundary: SpinConfig):
        self.potential = potential
        self.l = l
        self.trunc = trunc
        check_enumeration(potential.alphabet.size, 2 * l + 1)
        self.boundary = boundary.restrict(_outer_window(potential, l, trunc))
        self._cache: dict = {}

    def table(self, shells: tuple) -> np.ndarray:
        """Joint law of the end sites of ``[-l+m, l-m]``, ``m = len(shells)``
        (origin law when ``m = l``); ``shells[k]`` is the pair placed at stage ``k``."""
        hit = self._cache.get(shells)
        if hit is not None:
            return hit
        l, m = self.l, len(shells)
        values = {}
        for k, (a, b) in enumerate(shells):
            values[-l + k] = a
            values[l - k] = b
        V = Interval(-l + m, l - m)
        g = compute_finite_gibbs(self.potential, V, self.boundary.with_values(values), self.trunc)
        q = self.potential.alphabet.size
        T = g.tensor
        if len(V) == 1:
            out = T.ravel()
        else:
            out = T.sum(axis=tuple(range(1, T.ndim - 1))).reshape(q * q)
        self._cache[shells] = out
        return out


def _outer_window(potential, l, trunc):
    return Interval(-l, l).expand(max(effective_radius(potential, trunc), 1))


class _PlanCache:
    def __init__(self, s1: StageMarginals, s2: StageMarginals):
        self.s1, self.s2 = s1, s2
        self._plans: dict = {}

    def plan(self, sh1, sh2) -> CouplingPlan:
        key = (sh1, sh2)
        p = self._plans.get(key)
        if p is None:
            p = self._plans[key] = CouplingPlan(self.s1.table(sh1), self.s2.table(sh2))
        return p


def _run(plans: _PlanCache, l, q, rng, seed, run_index) -> CouplingRun:
    sh1, sh2 = (), ()
    pairs, Z = [], []
    z = 0
    for m in range(l + 1):
        x, y = plans.plan(sh1, sh2).sample(rng)
        if m < l:
            s1, s2 = divmod(x, q), divmod(y, q)
            sh1, sh2 = sh1 + (s1,), sh2 + (s2,)
        else:
            s1, s2 = (x, x), (y, y)
        z = z + 1 if s1 == s2 else 0
        pairs.append((s1, s2))
        Z.append(z)
    return CouplingRun(l, seed, run_index, tuple(pairs), tuple(Z))


def iterative_coupling_run(
    potential: Potential,
    l: int,
    zeta: SpinConfig,
    zeta_prime: SpinConfig,
    rng: np.random.Generator,
    trunc: TruncationSpec,
    seed: int = 0,
    run_index: int = 0,
) -> CouplingRun:
    """One boundary-inward coupling run on ``[-l, l]``."""
    if l < 0:
        raise DomainError("l must be nonnegative")
    plans = _PlanCache(StageMarginals(potential, l, trunc, zeta), StageMarginals(potential, l, trunc, zeta_prime))
    return _run(plans, l, potential.alphabet.size, rng, seed, run_index)


def coupling_runs(
    potential: Potential,
    l: int,
    zeta: SpinConfig,
    zeta_prime: SpinConfig,
    runs: int,
    seed: int,
    trunc: TruncationSpec,
) -> list:
    """``runs`` independent runs; run ``r`` uses the stream ``run_rng(seed, r)``."""
    if l < 0:
        raise DomainError("l must be nonnegative")
    plans = _PlanCache(StageMarginals(potential, l, trunc, zeta), StageMarginals(potential, l, trunc, zeta_prime))
    q = potential.alphabet.size
    return [_run(plans, l, q, run_rng(seed, r), seed, r) for r in range(runs)]


def write_trajectories_csv(fh, runs_by_label: dict, alphabet) -> None:
    """One row per run and stage, for every boundary pair label."""
    sym = alphabet.symbols
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["boundaries", "run", "step", "left_site", "right_site",
                "s1_left", "s1_right", "s2_left", "s2_right", "Z"])
    for label, runs in runs_by_label.items():
        for run in runs:
            for k, ((a1, c1), (a2, c2)) in enumerate(run.pairs):
                w.writerow([label, run.run_index, k, -run.l + k, run.l - k,
                            sym[a1], sym[c1], sym[a2], sym[c2], run.Z[k]])


# ---------------------------------------------------------------------------
# Auxiliary chain
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AuxChain:
    """``gamma`` maps ``m`` to the mismatch bound after ``m`` matches."""

    gamma: Callable[[int], float]
    delta: float
    horizon: int

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise DomainError("delta must lie in (0, 1)")

    def reset_prob(self, m: int) -> float:
        return min(float(self.gamma(m)), 1.0 - self.delta)

    @classmethod
    def from_profile(cls, profile: DecayProfile, delta: float, horizon: int) -> "AuxChain":
        return cls(profile.gamma, delta, horizon)


def aux_chain_p0_sequence(chain: AuxChain, l: int | None = None) -> np.ndarray:
    """``P(S_k = 0)`` for ``k = 0..l`` from ``S_0 = 0`` (exact dynamic programming)."""
    l = chain.horizon if l is None else l
    if l < 0:
        raise DomainError("l must be nonnegative")
    r = np.array([chain.reset_prob(m) for m in range(l + 1)])
    dist = np.zeros(l + 2)
    dist[0] = 1.0
    out = [1.0]
    for k in range(l):
        live = dist[: k + 1]
        new = np.zeros_like(dist)
        new[0] = float(np.dot(live, r[: k + 1]))
        new[1 : k + 2] = live * (1.0 - r[: k + 1])
        dist = new
        out.append(dist[0])
    return np.asarray(out)


def aux_chain_p0(chain: AuxChain, l: int) -> float:
    return float(aux_chain_p0_sequence(chain, l)[l])


def delta_lower_bound(potential: Potential, trunc: TruncationSpec | None = None) -> float:
    """``|S|^-2 exp(-2B)`` with ``B = 2 f(0)``.

    Changing two spins moves any Hamiltonian by at most ``2B``, so every
    pair probability is at least ``|S|^-2 exp(-2B)``; hence no pair has
    probability above ``1 - delta`` and two pair laws overlap by at least
    ``delta``.  ``trunc`` is accepted for symmetry; truncating only lowers
    ``f``, so the bound for the full potential covers it.
    """
    q = potential.alphabet.size
    B = 2.0 * decay_f(potential, 0)
    delta = q**-2 * math.exp(-2.0 * B)
    return min(max(delta, np.nextafter(0.0, 1.0)), 0.5)


def model_chain(potential: Potential, horizon: int, trunc: TruncationSpec | None = None) -> AuxChain:
    return AuxChain.from_profile(decay_profile(potential), delta_lower_bound(potential, trunc), horizon)


# ---------------------------------------------------------------------------
# Lemma check
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaCheck:
    n1: int
    m: int
    depth: int
    measured_sup: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.measured_sup <= self.bound + 1e-12


def lemma_bound_check(
    potential: Potential,
    n1: int,
    m: int,
    trunc: TruncationSpec,
    depth: int | None = None,
    max_depth: int = 4,
) -> LemmaCheck:
    """Largest change of the end-pair marginal of ``[-n1, n1]`` between two boundaries
    that agree on the annulus ``n1 < |i| <= n1 + m``.

    Boundary symbols are enumerated on ``depth`` further sites per side
    (default: the truncation radius, at most ``max_depth``), with every
    constant tail beyond.  The bound is ``gamma_m = 2(exp(F_m) - 1)``.
    """
    if n1 < 1 or m < 0:
        raise DomainError("need n1 >= 1 and m >= 0")
    q = potential.alphabet.size
    R = effective_radius(potential, trunc)
    if depth is None:
        depth = min(max(R - m, 0), max_depth)
    n2 = n1 + m
    outer = n2 + depth
    free = list(range(-outer, outer + 1))
    check_enumeration(q, len(free))
    vol_axes = [s + outer for s in range(-n1, n1 + 1)]
    ann_axes = [s + outer for s in free if n1 < abs(s) <= n2]
    out_axes = [s + outer for s in free if abs(s) > n2]

    stacks = []
    for tail in range(q):
        bnd = SpinConfig(potential.alphabet, Interval(-outer - R, outer + R), (tail,) * (2 * (outer + R) + 1))
        E = energy_tensor(potential, free, bnd, trunc)
        logw = -E
        logw = logw - np.max(logw, axis=tuple(vol_axes), keepdims=True)
        w = np.exp(logw)
        w = w / w.sum(axis=tuple(vol_axes), keepdims=True)
        inner = [a for a in vol_axes if a not in (vol_axes[0], vol_axes[-1])]
        pair = w.sum(axis=tuple(inner)) if inner else w
        # reorder remaining axes to (annulus..., outer..., left, right)
        remaining = [a for a in range(len(free)) if a not in inner]
        order = [remaining.index(a) for a in ann_axes + out_axes + [vol_axes[0], vol_axes[-1]]]
        pair = np.transpose(pair, order)
        shape = (q ** len(ann_axes), q ** len(out_axes), q * q)
        stacks.append(pair.reshape(shape))
    allp = np.concatenate(stacks, axis=1)
    measured = float(np.max(allp.max(axis=1) - allp.min(axis=1)))
    bound = decay_profile(potential).gamma(m)
    return LemmaCheck(n1, m, depth, measured, float(bound))


# ---------------------------------------------------------------------------
# Mismatch versus bound
# ---------------------------------------------------------------------------


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


def origin_tv(potential: Potential, l: int, zeta: SpinConfig, zeta_prime: SpinConfig, trunc) -> float:
    """Exact TV distance of the origin marginals of ``mu_[-l,l]`` under both boundaries."""
    V = Interval(-l, l)
    g1 = compute_finite_gibbs(potential, V, zeta, trunc)
    g2 = compute_finite_gibbs(potential, V, zeta_prime, trunc)
    axes = tuple(k for k in range(len(V)) if k != l)
    return tv_distance(g1.tensor.sum(axis=axes), g2.tensor.sum(axis=axes))


def origin_max_diff(potential: Potential, l: int, zeta, zeta_prime, trunc) -> float:
    """``max_s |mu(sigma_0 = s) - mu'(sigma_0 = s)|`` (exact)."""
    V = Interval(-l, l)
    axes = tuple(k for k in range(len(V)) if k != l)
    a = compute_finite_gibbs(potential, V, zeta, trunc).tensor.sum(axis=axes)
    b = compute_finite_gibbs(potential, V, zeta_prime, trunc).tensor.sum(axis=axes)
    return float(np.max(np.abs(a - b)))


def mismatch_vs_bound(
    potential: Potential,
    l: int,
    boundary_pairs: Sequence,
    runs: int,
    seed: int,
    trunc: TruncationSpec,
    keep_runs: bool = False,
) -> list:
    """Per boundary pair: exact origin TV, empirical ``P(Z_l = 0)`` and exact ``P(S_l = 0)``.

    ``boundary_pairs`` holds ``(label, zeta, zeta_prime)`` triples.  Each
    record carries both inequality checks; with ``keep_runs`` the raw runs
    are attached under ``"_runs"``.
    """
    p_s0 = aux_chain_p0(model_chain(potential, l, trunc), l)
    out = []
    for label, zeta, zeta_prime in boundary_pairs:
        tv = origin_tv(potential, l, zeta, zeta_prime, trunc)
        rs = coupling_runs(potential, l, zeta, zeta_prime, runs, seed, trunc)
        k = sum(1 for r in rs if not r.matched_at_origin)
        p_hat = k / runs
        lo, hi = wilson_interval(k, runs)
        sigma = math.sqrt(max(p_hat * (1 - p_hat), p_s0 * (1 - p_s0)) / runs)
        rec = {
            "boundaries": label,
            "tv_exact": tv,
            "p_z0_empirical": p_hat,
            "p_z0_ci95": [lo, hi],
            "p_s0_exact": p_s0,
            "runs": runs,
            "seed": seed,
            "tv_below_ci": bool(tv <= hi),
            "z0_below_s0": bool(p_hat <= p_s0 + 3 * sigma),
        }
        if keep_runs:
            rec["_runs"] = rs
        out.append(rec)
    return out
