"""Kozlov potential of a transformed measure on lattice intervals, with the "+" vacuum.

All image-layer conditionals are read off the exact pushforward of a
finite-volume Gibbs measure on a window around the interval; the original
layer carries the all-vacuum boundary beyond the window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, FitDegenerateError, UnsupportedConstraintError
from .gibbs import compute_finite_gibbs
from .lattice import Interval, SpinConfig, check_enumeration, enumeration_cap_sites
from .potential import Potential, TruncationSpec, effective_radius
from .transform import Channel, _image_indices, pushforward_tensor

#: Scan points below this sup are treated as numerically zero by fits.
FIT_FLOOR = 1e-13
#: Scan points whose window delta exceeds this fraction of the value are not fitted.
FIT_MAX_REL_DELTA = 0.1


def _plus_boundary(potential: Potential, window: Interval, trunc: TruncationSpec) -> SpinConfig:
    R = effective_radius(potential, trunc)
    return SpinConfig.constant(potential.alphabet, window.expand(max(R, 1)))


def image_law(potential: Potential, channel: Channel, window: Interval, trunc: TruncationSpec) -> np.ndarray:
    """Exact image law on ``window`` with the all-"+" original boundary; a tensor."""
    check_enumeration(channel.source.size, len(window))
    check_enumeration(channel.target.size, len(window))
    g = compute_finite_gibbs(potential, window, _plus_boundary(potential, window, trunc), trunc)
    return pushforward_tensor(g, channel)


def _interval_block(nu: np.ndarray, window: Interval, A: Interval) -> np.ndarray:
    """Slice of the image law with every site outside ``A`` set to "+" (index 0)."""
    index = tuple(slice(None) if s in A else 0 for s in window)
    return nu[index]


def default_window_radius(D: int, q_source: int, diameter: int | None = None) -> int:
    """``max(6, 2D)``, reduced to what the enumeration cap allows for ``diameter``."""
    d = D if diameter is None else diameter
    n_fit = (enumeration_cap_sites(q_source) - d - 1) // 2
    return max(1, min(max(6, 2 * D), n_fit))


def nu_conditional_pair(
    potential: Potential,
    channel: Channel,
    i: int,
    j: int,
    xi,
    n: int,
    trunc: TruncationSpec,
) -> tuple:
    """``(nu(xi_i | .), nu(xi_j | .), nu(xi_i xi_j | .))`` given ``xi`` strictly inside
    ``[i, j]`` and "+" on ``[i-n, j+n]`` outside it.

    ``xi`` covers ``[i, j]``; its end values are the ones being evaluated.
    In the single-site terms the other endpoint is summed out.
    """
    if j <= i:
        raise DomainError("need i < j")
    A = Interval(i, j)
    window = A.expand(n)
    idx = _image_indices(xi, A, channel.target)
    block = _interval_block(image_law(potential, channel, window, trunc), window, A)
    joint = block[(slice(None),) + idx[1:-1] + (slice(None),)]
    mass = float(joint.sum())
    if mass < 1e-300:
        raise UnsupportedConstraintError(f"conditioning on {idx[1:-1]} with '+' outside has zero mass")
    joint = joint / mass
    a, b = idx[0], idx[-1]
    return float(joint[a].sum()), float(joint[:, b].sum()), float(joint[a, b])


def _u_from_block(block: np.ndarray) -> np.ndarray:
    """``U`` for every configuration on an interval, from the "+"-sliced image law."""
    last = block.ndim - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        joint = block / block.sum(axis=(0, last), keepdims=True)
        left = joint.sum(axis=last, keepdims=True)
        right = joint.sum(axis=0, keepdims=True)
        return np.log(left) + np.log(right) - np.log(joint)


def _u_vacuum_from_block(block: np.ndarray) -> np.ndarray:
    """Cross-ratio form: ``-log[nu(ab) nu(++) / (nu(a+) nu(+b))]``, two-site conditionals."""
    last = block.ndim - 1
    with np.errstate(divide="ignore", invalid="ignore"):
        lb = np.log(block)
        return (
            np.take(lb, [0], axis=last) + np.take(lb, [0], axis=0)
            - lb - np.take(np.take(lb, [0], axis=0), [0], axis=last)
        )


def _singleton_from_block(block: np.ndarray, convention: str) -> np.ndarray:
    p = block / block.sum()
    if convention == "vacuum":
        return -np.log(p / p[0])
    return -np.log(p)


def _window_radii(n: int) -> tuple:
    return n, max(1, math.ceil(n / 2))


@dataclass(frozen=True)
class KozlovEstimate:
    """``U([i, j], xi)`` at window radius ``n`` plus ``|U_n - U_ceil(n/2)|``."""

    interval: Interval
    xi: tuple
    n: int
    value: float
    window_delta: float


CONVENTIONS = ("marginal", "vacuum")


def u_table(
    potential: Potential,
    channel: Channel,
    A: Interval,
    n: int,
    trunc: TruncationSpec,
    convention: str = "marginal",
) -> np.ndarray:
    """``U(A, xi)`` for all image configurations ``xi`` on ``A`` at window radius ``n``.

    ``"marginal"`` is the endpoint formula with the other endpoint summed
    out; ``"vacuum"`` the cross ratio of two-site conditionals, which
    vanishes whenever an endpoint is "+".
    """
    if convention not in CONVENTIONS:
        raise DomainError(f"unknown convention {convention!r}")
    window = A.expand(n)
    block = _interval_block(image_law(potential, channel, window, trunc), window, A)
    if A.diameter == 0:
        return _singleton_from_block(block, convention)
    if convention == "vacuum":
        return _u_vacuum_from_block(block)
    return _u_from_block(block)


def kozlov_U(
    potential: Potential,
    channel: Channel,
    A: Interval,
    xi,
    n: int,
    trunc: TruncationSpec,
    convention: str = "marginal",
) -> KozlovEstimate:
    """The interval term ``log[nu(xi_i) nu(xi_j) / nu(xi_i xi_j)]``; for a singleton
    ``-log nu(xi_i | all "+")``."""
    idx = _image_indices(xi, A, channel.target)
    values = [u_table(potential, channel, A, r, trunc, convention)[idx] for r in _window_radii(n)]
    if not np.all(np.isfinite(values)):
        raise UnsupportedConstraintError(f"U is undefined at {idx}: zero conditional mass")
    return KozlovEstimate(A, idx, n, float(values[0]), float(abs(values[0] - values[1])))


def kozlov_singleton(potential, channel, i, xi_i, n, trunc) -> KozlovEstimate:
    return kozlov_U(potential, channel, Interval(i, i), {i: xi_i}, n, trunc)


@dataclass(frozen=True)
class ScanPoint:
    diameter: int
    sup_abs_U: float
    window_delta: float
    n_used: int


def decay_scan(
    potential: Potential,
    channel: Channel,
    D: int,
    n: int | None,
    trunc: TruncationSpec,
    convention: str = "marginal",
) -> list:
    """``sup_xi |U([0, d], xi)|`` for ``d = 1..D``, every ``xi`` enumerated.

    ``n=None`` picks :func:`default_window_radius` per diameter.
    """
    out = []
    for d in range(1, D + 1):
        nd = n if n is not None else default_window_radius(D, channel.source.size, d)
        A = Interval(0, d)
        full, half = (u_table(potential, channel, A, r, trunc, convention) for r in _window_radii(nd))
        finite = np.isfinite(full) & np.isfinite(half)
        if not finite.any():
            raise UnsupportedConstraintError(f"no image configuration on {A} has positive mass")
        sup = float(np.max(np.abs(full[finite])))
        delta = float(np.max(np.abs(full[finite] - half[finite])))
        out.append(ScanPoint(d, sup, delta, nd))
    return out


@dataclass(frozen=True)
class DecayFit:
    """``log sup`` fitted linearly in ``d`` (exponential) or ``log d`` (power law).

    ``rate`` is the positive decay rate (``lambda`` or the exponent ``p``);
    ``residual`` the RMS of the log residuals.
    """

    model: str
    rate: float
    intercept: float
    residual: float
    diameters: tuple = field(default=())

    @property
    def points_used(self) -> int:
        return len(self.diameters)

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "rate_or_exponent": self.rate,
            "residual": self.residual,
            "points_used": self.points_used,
            "diameters": list(self.diameters),
        }


def fit_decay(
    scan: Sequence,
    model: str,
    min_diameter: int = 2,
    max_rel_delta: float = FIT_MAX_REL_DELTA,
    min_points: int = 4,
) -> DecayFit:
    """Least-squares decay fit of a scan.

    ``scan`` holds :class:`ScanPoint` or ``(d, sup)`` pairs.  Points with
    ``d < min_diameter``, ``sup <= FIT_FLOOR`` or a window delta above
    ``max_rel_delta * sup`` are dropped.
    """
    if model not in ("exponential", "power-law"):
        raise DomainError(f"unknown decay model {model!r}")
    ds, ys = [], []
    for p in scan:
        if isinstance(p, ScanPoint):
            d, s, delta = p.diameter, p.sup_abs_U, p.window_delta
        else:
            d, s = p
            delta = 0.0
        if d < min_diameter or not s > FIT_FLOOR or delta > max_rel_delta * s:
            continue
        ds.append(d)
        ys.append(math.log(s))
    if len(ds) < min_points:
        raise FitDegenerateError(f"{len(ds)} usable scan points, need at least {min_points}")
    x = np.asarray(ds, dtype=float)
    if model == "power-law":
        x = np.log(x)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    rms = float(np.sqrt(np.mean(resid**2)))
    return DecayFit(model, float(-slope), float(intercept), rms, tuple(ds))


@dataclass(frozen=True)
class ContinuityRate:
    """``phi(n)`` over a probe set of image configurations and tails (a lower bound on the sup)."""

    n_values: tuple
    phi: tuple
    probe_tails: tuple


def continuity_rate(
    potential: Potential,
    channel: Channel,
    i: int,
    n_values: Sequence[int],
    trunc: TruncationSpec,
    probe_tails: Sequence | None = None,
    tail_width: int = 2,
) -> ContinuityRate:
    """``sup |nu(xi_i | xi on [i-n, i+n], tail) - nu(xi_i | xi, tail')|``.

    Tails are constant image configurations on the ``tail_width`` sites on
    either side of the window; all ``xi`` inside the window are enumerated.
    Default tails: every target symbol.
    """
    tgt = channel.target
    if probe_tails is None:
        probe_tails = tuple(range(tgt.size))
    tails = tuple(t if isinstance(t, (int, np.integer)) else tgt.index(t) for t in probe_tails)
    if len(tails) < 2:
        raise DomainError("need at least two probe tails")
    phis = []
    for n in n_values:
        inner = Interval(i - n, i + n)
        window = inner.expand(tail_width)
        nu = image_law(potential, channel, window, trunc)
        conds = []
        for t in tails:
            block = nu[tuple(slice(None) if s in inner else t for s in window)]
            with np.errstate(divide="ignore", invalid="ignore"):
                conds.append(block / block.sum(axis=n, keepdims=True))
        best = 0.0
        for a in range(len(conds)):
            for b in range(a + 1, len(conds)):
                diff = np.abs(conds[a] - conds[b])
                diff = diff[np.isfinite(diff)]
                if diff.size:
                    best = max(best, float(diff.max()))
        phis.append(best)
    return ContinuityRate(tuple(n_values), tuple(phis), tails)


def kozlov_consistency(
    potential: Potential,
    channel: Channel,
    D: int,
    n: int,
    w: int,
    trunc: TruncationSpec,
    convention: str = "marginal",
) -> float:
    """Largest gap between ``nu``'s single-site conditional at 0 and the one
    rebuilt from the truncated ``U`` (diameters ``<= D``).

    Image configurations are enumerated on ``[-w, w]`` with "+" outside;
    ``nu`` itself is computed on ``[-w-n, w+n]``.
    """
    q = channel.target.size
    V = Interval(-w, w)
    tables = {}
    for lo in range(-D, 1):
        for hi in range(0, lo + D + 1):
            A = Interval(lo, hi)
            tables[A] = u_table(potential, channel, A, n, trunc, convention)

    window = V.expand(n)
    block = _interval_block(image_law(potential, channel, window, trunc), window, V)
    with np.errstate(divide="ignore", invalid="ignore"):
        exact = block / block.sum(axis=w, keepdims=True)

    worst = 0.0
    for idx in np.ndindex(*((q,) * len(V))):
        if not np.isfinite(exact[idx]):
            continue
        config = {s: idx[s + w] for s in V}
        logw = np.zeros(q)
        for x0 in range(q):
            config[0] = x0
            total = 0.0
            for A, tbl in tables.items():
                total += tbl[tuple(config.get(s, 0) for s in A)]
            logw[x0] = -total
        with np.errstate(invalid="ignore"):
            pred = np.exp(logw - np.max(logw))
        pred /= pred.sum()
        gap = abs(pred[idx[w]] - exact[idx])
        if np.isfinite(gap):
            worst = max(worst, float(gap))
    return worst
