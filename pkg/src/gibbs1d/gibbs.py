"""Exact finite-volume Gibbs measures by complete enumeration.

Probability tables are dense arrays in the canonical enumeration order
(leftmost site slowest), i.e. C-order flattenings of ``(q,)*L`` tensors.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, UnsupportedConstraintError
from .lattice import (
    ENUMERATION_CAP,
    Alphabet,
    Interval,
    SpinConfig,
    check_enumeration,
    enumerate_configs,
)
from .potential import Potential, TruncationSpec, energy_tensor


@dataclass(frozen=True, eq=False)
class FiniteGibbs:
    """``mu_volume^{boundary}`` as an explicit table.

    ``sites`` lists the (sorted) sites carrying the table axes; it is an
    interval for measures built by :func:`compute_finite_gibbs` and may have
    holes after :func:`conditional`.  ``probs[k] == exp(-H(sigma_k) - logZ)``.
    """

    alphabet: Alphabet
    sites: tuple
    boundary: SpinConfig | None
    logZ: float
    probs: np.ndarray
    trunc: TruncationSpec

    @property
    def volume(self) -> Interval:
        lo, hi = self.sites[0], self.sites[-1]
        if hi - lo + 1 != len(self.sites):
            raise DomainError(f"sites {self.sites} do not form an interval")
        return Interval(lo, hi)

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape((self.alphabet.size,) * len(self.sites))

    def prob(self, sigma: SpinConfig) -> float:
        idx = tuple(sigma.index_at(s) for s in self.sites)
        return float(self.tensor[idx])

    def expectation(self, observable: np.ndarray) -> float:
        """Expectation of an observable given as a table in enumeration order."""
        return float(np.dot(self.probs, np.asarray(observable, dtype=float).ravel()))


def normalize_log_weights(log_w: np.ndarray) -> tuple:
    """Single max-shift log-sum-exp.  Returns ``(probs, logZ)``; ``-inf`` weights allowed."""
    top = np.max(log_w)
    if not np.isfinite(top):
        raise UnsupportedConstraintError("all configurations have zero weight")
    w = np.exp(log_w - top)
    total = w.sum()
    return w / total, float(top + np.log(total))


def compute_finite_gibbs(
    potential: Potential,
    volume: Interval,
    boundary: SpinConfig | None,
    trunc: TruncationSpec,
    cap: int = ENUMERATION_CAP,
) -> FiniteGibbs:
    """Finite-volume Gibbs measure with boundary condition ``boundary``.

    ``boundary`` is a configuration on any window enclosing
    ``volume.expand(trunc.radius)`` (values inside the volume are ignored);
    it may be ``None`` only if no term reaches outside the volume.
    """
    check_enumeration(potential.alphabet.size, len(volume), cap)
    E = energy_tensor(potential, list(volume), boundary, trunc)
    probs, logZ = normalize_log_weights(-E.ravel())
    return FiniteGibbs(potential.alphabet, tuple(volume), boundary, logZ, probs, trunc)


def _site_axes(g: FiniteGibbs, sites: Sequence[int]) -> list:
    pos = {s: k for k, s in enumerate(g.sites)}
    try:
        return [pos[s] for s in sites]
    except KeyError as e:
        raise DomainError(f"site {e.args[0]} is outside the volume {g.sites}") from None


def marginal(g: FiniteGibbs, sites: Sequence[int]) -> np.ndarray:
    """Exact marginal on ``sites``, flat, sites in ascending order."""
    sites = sorted(set(sites))
    axes = _site_axes(g, sites)
    other = tuple(k for k in range(len(g.sites)) if k not in axes)
    return g.tensor.sum(axis=other).ravel()


def _as_indices(g: FiniteGibbs, fixed) -> dict:
    if isinstance(fixed, SpinConfig):
        return fixed.as_dict()
    return {int(s): (v if isinstance(v, (int, np.integer)) else g.alphabet.index(v))
            for s, v in dict(fixed).items()}


def conditional(g: FiniteGibbs, fixed: SpinConfig | Mapping) -> FiniteGibbs:
    """Condition on the values of some sites; a measure on the remaining ones.

    ``fixed`` is a configuration or ``{site: symbol-or-index}``.  The
    returned boundary has the fixed values written in, so the result can be
    compared directly with a recomputation on the smaller volume.
    """
    values = _as_indices(g, fixed)
    if not values:
        return g
    axes = _site_axes(g, values)
    index = [slice(None)] * len(g.sites)
    for site, ax in zip(values, axes):
        index[ax] = values[site]
    sub = g.tensor[tuple(index)]
    mass = float(sub.sum())
    if not mass > 0:
        raise UnsupportedConstraintError("conditioning event has zero probability")
    rest = tuple(s for s in g.sites if s not in values)
    boundary = None
    if g.boundary is not None and all(s in g.boundary for s in values):
        boundary = g.boundary.with_values(values)
    return FiniteGibbs(
        g.alphabet, rest, boundary, g.logZ + np.log(mass), (sub / mass).ravel(), g.trunc
    )


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float).ravel()
    q = np.asarray(q, dtype=float).ravel()
    if p.shape != q.shape:
        raise DomainError(f"tables of different sizes {p.size} and {q.size}")
    return 0.5 * float(np.abs(p - q).sum())


def dlr_check(
    potential: Potential,
    inner: Interval,
    outer: Interval,
    boundary: SpinConfig,
    trunc: TruncationSpec,
) -> float:
    """Largest deviation between ``gamma_outer(gamma_inner(g))`` and ``gamma_outer(g)``.

    Taken over all indicator functions ``g`` of configurations on ``outer``.
    The inner kernel is recomputed from scratch for every configuration of
    ``outer \\ inner`` (boundary patched), not obtained by conditioning.
    """
    if not outer.covers(inner):
        raise DomainError(f"{inner} is not inside {outer}")
    big = compute_finite_gibbs(potential, outer, boundary, trunc)
    q = potential.alphabet.size
    ring = [s for s in outer if s not in inner]
    ring_marg = marginal(big, ring).reshape((q,) * len(ring)) if ring else np.ones(())
    lhs = np.zeros_like(big.tensor)
    ring_axes = [s - outer.lo for s in ring]
    for tau in np.ndindex(*((q,) * len(ring))):
        patched = boundary.with_values(dict(zip(ring, tau)))
        small = compute_finite_gibbs(potential, inner, patched, trunc)
        index = [slice(None)] * len(outer)
        for ax, v in zip(ring_axes, tau):
            index[ax] = v
        lhs[tuple(index)] = ring_marg[tau] * small.tensor
    return float(np.max(np.abs(lhs - big.tensor)))


def write_probability_csv(g: FiniteGibbs, path) -> None:
    """Columns ``site_<s>`` for every site, then ``probability`` (17 significant digits)."""
    configs = enumerate_configs(g.alphabet, Interval(0, len(g.sites) - 1))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"site_{s}" for s in g.sites] + ["probability"])
        for c, p in zip(configs, g.probs):
            w.writerow(list(c.symbols) + [format(float(p), ".17g")])
