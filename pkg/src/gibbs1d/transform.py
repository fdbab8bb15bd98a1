"""Single-site channels and the conditional probabilities of transformed measures.

Two channel types act site by site on a configuration over ``S``:

* :class:`SiteKernel` -- a stochastic matrix ``P(xi | sigma)``;
* :class:`DetMap`     -- a surjection ``S -> S'`` (fuzzy map).

For both we compute ``nu(xi_0 | xi_{[-n,n] minus 0})`` of the finite-volume
image law in two ways: directly from the exact pushforward, and from the
first-layer representations (a Gibbs measure with conditioning-dependent
single-site terms for kernels; the constrained first-layer measure with the
local weights ``psi``/``phi`` for maps).  The direct route is the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigurationError,
    DomainError,
    ModelError,
    PreconditionError,
    UnsupportedConstraintError,
)
from .gibbs import FiniteGibbs, compute_finite_gibbs, marginal, normalize_log_weights
from .lattice import (
    ENUMERATION_CAP,
    Alphabet,
    Interval,
    SpinConfig,
    check_enumeration,
)
from .potential import (
    Potential,
    SiteFields,
    TruncationSpec,
    effective_radius,
    energy_tensor,
    evaluate,
)

#: Conditioning mass below which the brute-force path reports an impossible event.
ZERO_MASS = 1e-300


@dataclass(frozen=True)
class SiteKernel:
    """Site-homogeneous stochastic kernel; ``matrix[s][x] = P(x | s)``."""

    source: Alphabet
    target: Alphabet
    matrix: tuple

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (self.source.size, self.target.size):
            raise ModelError(
                f"kernel matrix must be {self.source.size}x{self.target.size}, got {m.shape}"
            )
        if self.target.size > self.source.size:
            raise ModelError("target alphabet may not be larger than the source")
        if np.any(m < 0) or np.max(np.abs(m.sum(axis=1) - 1.0)) > 1e-12:
            raise ModelError("kernel rows must be probability vectors")
        object.__setattr__(self, "matrix", tuple(tuple(r) for r in m))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.matrix)

    @property
    def strictly_positive(self) -> bool:
        return bool(np.min(self.array) > 0)


@dataclass(frozen=True)
class DetMap:
    """A map ``S -> S'`` given by the target index of every source symbol."""

    source: Alphabet
    target: Alphabet
    mapping: tuple
    require_surjective: bool = True

    def __post_init__(self):
        m = tuple(int(x) for x in self.mapping)
        if len(m) != self.source.size or any(x < 0 or x >= self.target.size for x in m):
            raise ModelError("map must send every source symbol to a target symbol")
        if self.require_surjective and set(m) != set(range(self.target.size)):
            raise ModelError("map is not surjective")
        object.__setattr__(self, "mapping", m)

    @classmethod
    def from_symbols(cls, source: Alphabet, target: Alphabet, mapping: Mapping, **kw) -> "DetMap":
        return cls(source, target, tuple(target.index(mapping[s]) for s in source.symbols), **kw)

    @property
    def array(self) -> np.ndarray:
        out = np.zeros((self.source.size, self.target.size))
        out[np.arange(self.source.size), self.mapping] = 1.0
        return out

    def preimage(self, t: int) -> list:
        return [s for s, x in enumerate(self.mapping) if x == t]


def flip_kernel(alphabet: Alphabet, eps: float) -> SiteKernel:
    """Keep the symbol with probability ``1 - eps``, else move uniformly to another one."""
    q = alphabet.size
    m = np.full((q, q), eps / (q - 1))
    np.fill_diagonal(m, 1.0 - eps)
    return SiteKernel(alphabet, alphabet, tuple(map(tuple, m)))


def identity_map(alphabet: Alphabet) -> DetMap:
    return DetMap(alphabet, alphabet, tuple(range(alphabet.size)))


def fuzzy_potts_map(q: int = 3, target=("a", "b"), groups=((1, 2), (3,))) -> DetMap:
    """The fuzzy map of a ``q``-state Potts alphabet ``1..q`` onto ``target``."""
    source = Alphabet(tuple(str(i + 1) for i in range(q)))
    tgt = Alphabet(tuple(target))
    mapping = {}
    for t, grp in zip(tgt.symbols, groups):
        for s in grp:
            mapping[str(s)] = t
    return DetMap.from_symbols(source, tgt, mapping)


Channel = SiteKernel | DetMap


def channel_matrix(channel: Channel) -> np.ndarray:
    return channel.array


# ---------------------------------------------------------------------------
# Brute-force route
# ---------------------------------------------------------------------------


def pushforward_tensor(g: FiniteGibbs, channel: Channel, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Image law on ``(S')^sites`` as a ``(q',)*L`` tensor."""
    if channel.source != g.alphabet:
        raise DomainError("channel source alphabet differs from the measure's alphabet")
    check_enumeration(channel.target.size, len(g.sites), cap)
    M = channel_matrix(channel)
    T = g.tensor
    for _ in range(T.ndim):
        # contracting axis 0 appends the image axis last; after L steps the order is restored
        T = np.tensordot(T, M, axes=([0], [0]))
    return T


def pushforward_exact(g: FiniteGibbs, channel: Channel, cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Exact finite-volume image law, flat in enumeration order."""
    return pushforward_tensor(g, channel, cap).ravel()


def _centered(n: int) -> Interval:
    if n < 0:
        raise DomainError("window radius must be nonnegative")
    return Interval(-n, n)


def _image_indices(xi: SpinConfig | Mapping, window: Interval, target: Alphabet) -> tuple:
    if isinstance(xi, SpinConfig):
        if xi.alphabet != target:
            raise DomainError("image configuration is not over the target alphabet")
        return tuple(xi.index_at(s) for s in window)
    return tuple(
        (v if isinstance(v, (int, np.integer)) else target.index(v)) for v in (xi[s] for s in window)
    )


def conditional_table_bruteforce(
    potential: Potential,
    channel: Channel,
    n: int,
    boundary: SpinConfig,
    trunc: TruncationSpec,
) -> np.ndarray:
    """``nu(xi_0 | rest)`` for every image window on ``[-n, n]`` at once.

    Entries whose conditioning event has mass below ``ZERO_MASS`` are NaN.
    """
    window = _centered(n)
    g = compute_finite_gibbs(potential, window, boundary, trunc)
    nu = pushforward_tensor(g, channel)
    denom = nu.sum(axis=n, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = nu / denom
    out[np.broadcast_to(denom < ZERO_MASS, out.shape)] = np.nan
    return out


def transformed_conditional_bruteforce(
    potential: Potential,
    channel: Channel,
    n: int,
    xi: SpinConfig | Mapping,
    boundary: SpinConfig,
    trunc: TruncationSpec,
) -> float:
    """``nu_L(xi) / sum_x nu_L(x xi_rest)`` on ``L = [-n, n]``."""
    window = _centered(n)
    idx = _image_indices(xi, window, channel.target)
    g = compute_finite_gibbs(potential, window, boundary, trunc)
    nu = pushforward_tensor(g, channel)
    rest = list(idx)
    rest[n] = slice(None)
    column = nu[tuple(rest)]
    mass = float(column.sum())
    if mass < ZERO_MASS:
        raise UnsupportedConstraintError(
            f"image window {idx} outside the origin has (numerically) zero probability"
        )
    return float(column[idx[n]] / mass)


# ---------------------------------------------------------------------------
# Stochastic first layer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModifiedPotential:
    """Base potential plus ``-log P(xi_i | sigma_i)`` on every singleton of ``xi``'s window."""

    base: Potential
    xi: SpinConfig
    kernel: SiteKernel

    def __post_init__(self):
        if not self.kernel.strictly_positive:
            raise PreconditionError("the first-layer representation needs a strictly positive kernel")
        if self.kernel.source != self.base.alphabet or self.xi.alphabet != self.kernel.target:
            raise DomainError("alphabets of potential, kernel and image configuration disagree")

    @property
    def site_fields(self) -> SiteFields:
        logP = np.log(self.kernel.array)  # [sigma, xi]
        fields = tuple((s, tuple(-logP[:, self.xi.index_at(s)])) for s in self.xi.window)
        return SiteFields(self.base.alphabet, fields)

    @property
    def potential(self) -> Potential:
        return Potential(self.base.alphabet, self.base.terms + (self.site_fields,))

    def evaluate(self, A: Interval, sigma: SpinConfig) -> float:
        return evaluate(self.potential, A, sigma)


def transformed_conditional_firstlayer_stochastic(
    potential: Potential,
    kernel: SiteKernel,
    n: int,
    xi: SpinConfig,
    boundary: SpinConfig,
    trunc: TruncationSpec,
) -> float:
    """``1 / E[1 / P(xi_0 | sigma_0)]`` under the modified Gibbs measure on ``[-n, n]``."""
    window = _centered(n)
    if xi.window != window:
        raise DomainError(f"image configuration must live on {window}")
    modified = ModifiedPotential(potential, xi, kernel)
    g = compute_finite_gibbs(modified.potential, window, boundary, trunc)
    origin = marginal(g, [0])
    inv_p = 1.0 / kernel.array[:, xi.index_at(0)]
    return 1.0 / float(np.dot(origin, inv_p))


# ---------------------------------------------------------------------------
# Deterministic first layer
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ConstrainedFirstLayer:
    """The constrained restricted first-layer measure on ``volume minus {center}``.

    ``probs`` is a flat table over ``S^sites`` (zero off the compatible set);
    ``logN`` is the log of its normalizer.
    """

    sites: tuple
    center: int
    boundary: SpinConfig | None
    constraint: tuple  # image symbol index per site of ``sites``
    detmap: DetMap
    probs: np.ndarray
    logN: float

    @property
    def tensor(self) -> np.ndarray:
        return self.probs.reshape((self.detmap.source.size,) * len(self.sites))

    @property
    def support_size(self) -> int:
        return int(np.count_nonzero(self.probs))


def _reduced_sites(volume: Interval, center: int) -> tuple:
    if center not in volume:
        raise DomainError(f"center {center} is not in {volume}")
    return tuple(s for s in volume if s != center)


def _constraint_mask(detmap: DetMap, constraint: Sequence[int]) -> np.ndarray:
    """Log of prod_i K(eta_i | sigma_i) as a broadcastable tensor (0 or -inf)."""
    q = detmap.source.size
    L = len(constraint)
    mask = np.zeros((q,) * L)
    allowed = np.asarray(detmap.mapping)
    for k, eta in enumerate(constraint):
        shape = [1] * L
        shape[k] = q
        mask = mask + np.where(allowed == eta, 0.0, -np.inf).reshape(shape)
    return mask


def _eta_indices(eta, sites, target: Alphabet) -> tuple:
    if isinstance(eta, SpinConfig):
        if eta.alphabet != target:
            raise DomainError("constraint is not over the target alphabet")
        return tuple(eta.index_at(s) for s in sites)
    return tuple(
        (eta[s] if isinstance(eta[s], (int, np.integer)) else target.index(eta[s])) for s in sites
    )


def constrained_first_layer(
    potential: Potential,
    detmap: DetMap,
    volume: Interval,
    boundary: SpinConfig | None,
    eta,
    trunc: TruncationSpec,
    center: int = 0,
) -> ConstrainedFirstLayer:
    """Exact table of the constrained first-layer measure.

    Its Hamiltonian keeps every interval meeting ``volume minus {center}``
    whose support avoids ``center``.  ``eta`` gives the image symbol on
    every site of the reduced volume (a configuration on ``volume`` whose
    value at the center is ignored, or a mapping).
    """
    sites = _reduced_sites(volume, center)
    check_enumeration(detmap.source.size, len(sites))
    constraint = _eta_indices(eta, sites, detmap.target)
    E = energy_tensor(potential, sites, boundary, trunc, exclude_site=center)
    log_w = -E + _constraint_mask(detmap, constraint)
    try:
        probs, logN = normalize_log_weights(log_w.ravel())
    except UnsupportedConstraintError:
        raise UnsupportedConstraintError(
            f"no first-layer configuration is compatible with the constraint {constraint}"
        ) from None
    return ConstrainedFirstLayer(sites, center, boundary, constraint, detmap, probs, logN)


def _h0_tensor(potential, volume, boundary, trunc, center):
    """``h_center`` for every configuration on ``volume``; axes follow the volume."""
    return energy_tensor(potential, list(volume), boundary, trunc, only_site=center)


def psi_phi_zero(
    potential: Potential,
    detmap: DetMap,
    volume: Interval,
    boundary: SpinConfig | None,
    sigma,
    eta0,
    trunc: TruncationSpec,
    center: int = 0,
) -> tuple:
    """``(psi, phi)``: the local weights of the center given the other sites.

    ``psi = sum_s exp(-h0(s sigma zeta)) K(eta0 | s)``, ``phi`` the same sum
    without the indicator; ``h0`` sums the intervals whose support contains
    the center, up to the truncation radius.
    """
    sites = _reduced_sites(volume, center)
    if isinstance(sigma, SpinConfig):
        values = {s: sigma.index_at(s) for s in sites}
    else:
        values = {s: (v if isinstance(v, (int, np.integer)) else detmap.source.index(v))
                  for s, v in ((s, sigma[s]) for s in sites)}
    if boundary is None:
        full = SpinConfig(detmap.source, volume, tuple(values.get(s, 0) for s in volume))
    else:
        full = boundary.with_values(values) if boundary.window.covers(volume) else None
        if full is None:
            raise DomainError("boundary must cover the volume")
    h0 = energy_tensor(potential, [center], full, trunc, only_site=center)
    e0 = eta0 if isinstance(eta0, (int, np.integer)) else detmap.target.index(eta0)
    w = np.exp(-h0)
    k = np.asarray(detmap.mapping) == e0
    return float(w[k].sum()), float(w.sum())


def transformed_conditional_firstlayer_deterministic(
    potential: Potential,
    detmap: DetMap,
    n: int,
    eta,
    boundary: SpinConfig | None,
    trunc: TruncationSpec,
) -> float:
    """``E[psi(eta_0, .)] / E[phi(.)]`` under the constrained first-layer measure on ``[-n, n]``."""
    volume = _centered(n)
    e0 = _eta_indices(eta, [0], detmap.target)[0]
    layer = constrained_first_layer(potential, detmap, volume, boundary, eta, trunc)
    h0 = _h0_tensor(potential, volume, boundary, trunc, 0)
    # shift by a constant: it cancels in the ratio and keeps exp() finite
    h0 = h0 - np.min(h0)
    w = np.exp(-h0)
    center_axis = n
    psi = np.take(w, detmap.preimage(e0), axis=center_axis).sum(axis=center_axis)
    phi = w.sum(axis=center_axis)
    p = layer.tensor
    return float(np.sum(p * psi) / np.sum(p * phi))


def constrained_consistency_check(
    potential: Potential,
    detmap: DetMap,
    inner: Interval,
    outer: Interval,
    boundary: SpinConfig,
    eta,
    trunc: TruncationSpec,
    center: int = 0,
) -> float:
    """Largest deviation in ``gamma_outer(gamma_inner(g)) = gamma_outer(g)`` for the
    eta-dependent kernels, over indicator functions ``g``.
    """
    if not outer.covers(inner) or center not in inner:
        raise DomainError("need center in inner and inner inside outer")
    big = constrained_first_layer(potential, detmap, outer, boundary, eta, trunc, center)
    q = detmap.source.size
    sites = big.sites
    inner_sites = _reduced_sites(inner, center)
    ring = [s for s in sites if s not in inner_sites]
    ring_axes = [sites.index(s) for s in ring]
    T = big.tensor
    ring_marg = T.sum(axis=tuple(k for k in range(len(sites)) if k not in ring_axes))
    lhs = np.zeros_like(T)
    for tau in np.ndindex(*((q,) * len(ring))):
        if ring_marg[tau] == 0:
            continue
        patched = boundary.with_values(dict(zip(ring, tau)))
        small = constrained_first_layer(potential, detmap, inner, patched, eta, trunc, center)
        index = [slice(None)] * len(sites)
        for ax, v in zip(ring_axes, tau):
            index[ax] = v
        lhs[tuple(index)] = ring_marg[tau] * small.tensor
    return float(np.max(np.abs(lhs - T)))


# ---------------------------------------------------------------------------
# Local approximation of psi_0 / phi_0
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LocalApproximation:
    """Cauchy-difference estimates of ``||psi_0 - psi_0^k||`` and ``||phi_0 - phi_0^k||``.

    The sup runs over a probe set only: inner configurations (all of them
    when ``enumerated``), annulus fillings and tails from ``probe_tails``.
    """

    k: int
    psi_error: float
    phi_error: float
    enumerated: bool
    n_inner: int
    probe_tails: tuple

    @property
    def error(self) -> float:
        return max(self.psi_error, self.phi_error)


def _inner_probes(q, n_sites, rng_seed=0, n_random=32):
    probes = [(s,) * n_sites for s in range(q)]
    probes.append(tuple(k % q for k in range(n_sites)))
    probes.append(tuple((k + 1) % q for k in range(n_sites)))
    rng = np.random.default_rng(rng_seed)
    probes.extend(tuple(int(x) for x in rng.integers(0, q, n_sites)) for _ in range(n_random))
    return probes


def local_approximation_error(
    potential: Potential,
    detmap: DetMap,
    k: int,
    trunc: TruncationSpec,
    probe_tails: Sequence | None = None,
    inner_cap: int = 4096,
) -> LocalApproximation:
    """Compare ``psi_0``/``phi_0`` computed with the configuration known on
    ``[-k, k]`` (tail beyond) against known on ``[-2k, 2k]``.

    ``psi^k`` puts the tail ``tau`` on every site beyond ``k``;
    ``psi^{2k}`` fills ``k < |i| <= 2k`` with ``rho`` and keeps ``tau``
    beyond ``2k``; both ``tau`` and ``rho`` range over ``probe_tails``
    (default: first and last source symbol).
    """
    if k < 1:
        raise DomainError("k must be at least 1")
    src = detmap.source
    if probe_tails is None:
        probe_tails = (0, src.size - 1)
    probe_tails = tuple(t if isinstance(t, (int, np.integer)) else src.index(t) for t in probe_tails)
    R = effective_radius(potential, trunc)
    if potential.range is None and R < 2 * k:
        raise ConfigurationError(f"truncation radius {R} is below 2k = {2 * k}")
    reach = max(R, 2 * k)
    full = Interval(-reach, reach)
    inner = Interval(-k, k)
    n_inner_sites = 2 * k
    enumerated = src.size**n_inner_sites <= inner_cap
    q = src.size
    masks = [np.asarray(detmap.mapping) == t for t in range(detmap.target.size)]

    def weights(tau, rho, inner_cfg=None):
        vals = []
        for s in full:
            if abs(s) > 2 * k or (abs(s) > k and rho is None):
                vals.append(tau)
            elif abs(s) > k:
                vals.append(rho)
            elif s == 0 or inner_cfg is None:
                vals.append(0)
            else:
                vals.append(inner_cfg[s + k if s < 0 else s + k - 1])
        cfg = SpinConfig(src, full, tuple(vals))
        if inner_cfg is None:
            h0 = energy_tensor(potential, list(inner), cfg, trunc, only_site=0)
        else:
            h0 = energy_tensor(potential, [0], cfg, trunc, only_site=0)
        return np.exp(-h0)

    psi_err = phi_err = 0.0
    if enumerated:
        n_inner = q**n_inner_sites
        for tau in probe_tails:
            base = weights(tau, None)
            for rho in probe_tails:
                far = weights(tau, rho)
                for w1, w2 in ((base, far),):
                    c = k  # axis of site 0 in [-k, k]
                    phi_err = max(phi_err, float(np.max(np.abs(w1.sum(axis=c) - w2.sum(axis=c)))))
                    for m in masks:
                        d = np.compress(m, w1, axis=c).sum(axis=c) - np.compress(m, w2, axis=c).sum(axis=c)
                        psi_err = max(psi_err, float(np.max(np.abs(d))))
    else:
        probes = _inner_probes(q, n_inner_sites)
        n_inner = len(probes)
        for cfg in probes:
            for tau in probe_tails:
                w1 = weights(tau, None, cfg)
                for rho in probe_tails:
                    w2 = weights(tau, rho, cfg)
                    phi_err = max(phi_err, abs(float(w1.sum() - w2.sum())))
                    for m in masks:
                        psi_err = max(psi_err, abs(float(w1[m].sum() - w2[m].sum())))
    return LocalApproximation(k, psi_err, phi_err, enumerated, n_inner, probe_tails)


def log_ratio(a: float, b: float) -> float:
    return math.log(a) - math.log(b)
