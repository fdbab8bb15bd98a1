"""Interval potentials, truncated Hamiltonians and the decay calculus.

A potential assigns a real number to every lattice interval ``[lo, hi]`` and
configuration; the value may depend only on the spins inside the interval.
Pair families only look at the two endpoints, so their *support* (the set
of sites a term actually reads) is ``{lo, hi}``; "A contains site x" and
"A meets the volume" are always decided on the support.

Boltzmann weights are ``exp(-H)``; there is no inverse temperature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import integrate, special

from .errors import (
    BoundaryWindowError,
    DivergenceError,
    DomainError,
    ModelError,
    UncoveredSiteError,
)
from .lattice import Alphabet, Interval, SpinConfig, ising_alphabet

SUMMABILITY = "sum_n f(n) < inf"


# ---------------------------------------------------------------------------
# Term families
# ---------------------------------------------------------------------------


class Term:
    """One family of interactions.  Subclasses are frozen dataclasses."""

    alphabet: Alphabet
    family: str = ""
    translation_invariant = True

    #: largest diameter carrying a nonzero interaction, ``None`` when unbounded
    @property
    def range(self) -> int | None:
        raise NotImplementedError

    def support(self, lo: int, hi: int) -> tuple:
        """Sites read by the term on ``[lo, hi]``; empty when it vanishes there."""
        raise NotImplementedError

    def value(self, lo: int, hi: int, spins: Sequence[int]) -> float:
        """Scalar evaluation from the symbol indices on ``support(lo, hi)``."""
        raise NotImplementedError

    def table(self, lo: int, hi: int) -> np.ndarray:
        """All values as a ``(q,)*len(support)`` array."""
        q = self.alphabet.size
        sup = self.support(lo, hi)
        out = np.empty((q,) * len(sup))
        for idx in np.ndindex(*out.shape):
            out[idx] = self.value(lo, hi, idx)
        return out

    def sup_norm(self, lo: int, hi: int) -> float:
        if not self.support(lo, hi):
            return 0.0
        return float(np.max(np.abs(self.table(lo, hi))))

    def decay_f(self, K: int) -> float:
        raise NotImplementedError

    def big_F(self, k: int) -> float:
        raise NotImplementedError


def _pair_support(lo, hi):
    return (lo, hi) if hi > lo else ()


@dataclass(frozen=True)
class ExponentialPair(Term):
    """``coupling * exp(-rate*d) * v(s_lo) * v(s_hi)`` on intervals of diameter ``d >= 1``."""

    alphabet: Alphabet
    coupling: float
    rate: float
    family = "exponential-pair"

    def __post_init__(self):
        if not self.rate > 0:
            raise ModelError("exponential-pair needs rate > 0")
        self.alphabet.spin_values()

    @property
    def range(self):
        return None if self.coupling != 0 else 0

    def strength(self, d: int) -> float:
        return self.coupling * math.exp(-self.rate * d)

    def support(self, lo, hi):
        return _pair_support(lo, hi) if self.coupling != 0 else ()

    def value(self, lo, hi, spins):
        v = self.alphabet.values or tuple(self.alphabet.spin_values())
        return self.strength(hi - lo) * v[spins[0]] * v[spins[1]]

    def table(self, lo, hi):
        v = self.alphabet.spin_values()
        return self.strength(hi - lo) * np.outer(v, v)

    def _c(self):
        return 2.0 * abs(self.coupling) * float(np.max(np.abs(self.alphabet.spin_values())) ** 2)

    def decay_f(self, K):
        k0 = max(int(K), 1)
        lam = self.rate
        return self._c() * math.exp(-lam * k0) / -math.expm1(-lam)

    def big_F(self, k):
        k = int(k)
        if k == 0:
            return 2.0 * self.decay_f(0) + self.big_F(1)
        lam = self.rate
        return 2.0 * self._c() * math.exp(-lam * k) / math.expm1(-lam) ** 2


@dataclass(frozen=True)
class PowerLawPair(Term):
    """``coupling * v(s_lo) * v(s_hi) / d**exponent`` on intervals of diameter ``d >= 1``."""

    alphabet: Alphabet
    coupling: float
    exponent: float
    family = "power-law-pair"

    def __post_init__(self):
        self.alphabet.spin_values()

    @property
    def range(self):
        return None if self.coupling != 0 else 0

    def strength(self, d: int) -> float:
        return self.coupling / float(d) ** self.exponent

    def support(self, lo, hi):
        return _pair_support(lo, hi) if self.coupling != 0 else ()

    def value(self, lo, hi, spins):
        v = self.alphabet.values or tuple(self.alphabet.spin_values())
        return self.strength(hi - lo) * v[spins[0]] * v[spins[1]]

    def table(self, lo, hi):
        v = self.alphabet.spin_values()
        return self.strength(hi - lo) * np.outer(v, v)

    def _c(self):
        return 2.0 * abs(self.coupling) * float(np.max(np.abs(self.alphabet.spin_values())) ** 2)

    def decay_f(self, K):
        if self.coupling == 0:
            return 0.0
        if self.exponent <= 1:
            raise DivergenceError(
                f"power-law exponent {self.exponent} <= 1: the potential is not "
                "uniformly absolutely convergent"
            )
        return self._c() * float(special.zeta(self.exponent, max(int(K), 1)))

    def big_F(self, k):
        if self.coupling == 0:
            return 0.0
        g = self.exponent
        if g <= 2:
            raise DivergenceError(
                f"condition {SUMMABILITY} fails: f(n) ~ n^-{g - 1:g} for power-law exponent {g:g}"
            )
        k = int(k)
        if k == 0:
            return 2.0 * self.decay_f(0) + self.big_F(1)
        # sum_{n>=k} zeta(g, n) = zeta(g-1, k) - (k-1) zeta(g, k)
        tail = float(special.zeta(g - 1, k)) - (k - 1) * float(special.zeta(g, k))
        return 2.0 * self._c() * tail


@dataclass(frozen=True)
class SingleSiteField(Term):
    """``field[s_i]`` on every singleton."""

    alphabet: Alphabet
    field: tuple
    family = "single-site-field"

    def __post_init__(self):
        f = tuple(float(x) for x in self.field)
        if len(f) != self.alphabet.size:
            raise ModelError("single-site-field needs one value per symbol")
        object.__setattr__(self, "field", f)

    @property
    def range(self):
        return 0

    def support(self, lo, hi):
        return (lo,) if lo == hi and any(self.field) else ()

    def value(self, lo, hi, spins):
        return self.field[spins[0]]

    def table(self, lo, hi):
        return np.asarray(self.field)

    def decay_f(self, K):
        return max(abs(x) for x in self.field) if K == 0 else 0.0

    def big_F(self, k):
        return 2.0 * self.decay_f(k)


@dataclass(frozen=True)
class FiniteRangeTable(Term):
    """Explicit translation-invariant table ``(s_lo, ..., s_hi) -> value``.

    ``entries`` holds ``(indices, value)`` pairs; a missing local
    configuration contributes zero.
    """

    alphabet: Alphabet
    entries: tuple
    family = "finite-range-table"

    def __post_init__(self):
        cleaned = {}
        q = self.alphabet.size
        for idx, val in self.entries:
            idx = tuple(int(i) for i in idx)
            if not idx or any(i < 0 or i >= q for i in idx):
                raise ModelError(f"bad table key {idx}")
            cleaned[idx] = cleaned.get(idx, 0.0) + float(val)
        object.__setattr__(self, "entries", tuple(sorted(cleaned.items())))

    @property
    def _lookup(self):
        return _table_lookup(self)

    @property
    def range(self):
        diams = [len(k) - 1 for k, v in self.entries if v != 0]
        return max(diams) if diams else 0

    def support(self, lo, hi):
        return tuple(range(lo, hi + 1)) if (hi - lo) in self._lookup else ()

    def value(self, lo, hi, spins):
        return float(self._lookup[hi - lo][tuple(spins)])

    def table(self, lo, hi):
        return self._lookup[hi - lo]

    def decay_f(self, K):
        return sum(
            (d + 1) * float(np.max(np.abs(t))) for d, t in self._lookup.items() if d >= K
        )

    def big_F(self, k):
        r = self.range
        return 2.0 * sum(self.decay_f(j) for j in range(int(k), r + 1))


@lru_cache(maxsize=None)
def _table_lookup(term: FiniteRangeTable) -> dict:
    q = term.alphabet.size
    out = {}
    for idx, val in term.entries:
        d = len(idx) - 1
        if d not in out:
            out[d] = np.zeros((q,) * (d + 1))
        out[d][idx] += val
    return {d: t for d, t in out.items() if np.any(t)}


@dataclass(frozen=True)
class SiteFields(Term):
    """Site-dependent singleton terms ``fields[i][s_i]`` (not translation invariant)."""

    alphabet: Alphabet
    fields: tuple  # ((site, (v_0, ..., v_{q-1})), ...)
    family = "site-fields"
    translation_invariant = False

    def __post_init__(self):
        cleaned = tuple(sorted((int(s), tuple(float(x) for x in v)) for s, v in self.fields))
        object.__setattr__(self, "fields", cleaned)

    @property
    def _map(self):
        return dict(self.fields)

    @property
    def range(self):
        return 0

    def support(self, lo, hi):
        return (lo,) if lo == hi and lo in self._map else ()

    def value(self, lo, hi, spins):
        return self._map[lo][spins[0]]

    def table(self, lo, hi):
        return np.asarray(self._map[lo])

    def decay_f(self, K):
        if K > 0 or not self.fields:
            return 0.0
        return max(max(abs(x) for x in v) for _, v in self.fields)

    def big_F(self, k):
        return 2.0 * self.decay_f(k)


# ---------------------------------------------------------------------------
# Potentials (finite sums of terms)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential:
    """A finite sum of interval terms over one alphabet."""

    alphabet: Alphabet
    terms: tuple = ()

    def __post_init__(self):
        terms = tuple(self.terms)
        for t in terms:
            if t.alphabet != self.alphabet:
                raise ModelError("all terms of a potential must share its alphabet")
        object.__setattr__(self, "terms", terms)

    @property
    def family(self) -> str:
        if not self.terms:
            return "zero"
        if len(self.terms) == 1:
            return self.terms[0].family
        return "sum-of-potentials"

    @property
    def translation_invariant(self) -> bool:
        return all(t.translation_invariant for t in self.terms)

    @property
    def range(self) -> int | None:
        r = 0
        for t in self.terms:
            if t.range is None:
                return None
            r = max(r, t.range)
        return r

    def __add__(self, other: "Potential") -> "Potential":
        return Potential(self.alphabet, self.terms + other.terms)

    def support(self, lo, hi) -> tuple:
        """Union of the term supports on ``[lo, hi]`` (sorted)."""
        s = set()
        for t in self.terms:
            s.update(t.support(lo, hi))
        return tuple(sorted(s))


def zero_potential(alphabet: Alphabet | None = None) -> Potential:
    return Potential(alphabet or ising_alphabet(), ())


def nearest_neighbor_ising(coupling: float, field: float = 0.0, alphabet=None) -> Potential:
    """``-coupling * s_i s_{i+1} - field * s_i`` (ferromagnetic for ``coupling > 0``)."""
    a = alphabet or ising_alphabet()
    v = a.spin_values()
    entries = [((x, y), -coupling * v[x] * v[y]) for x in range(a.size) for y in range(a.size)]
    terms = [FiniteRangeTable(a, tuple(entries))]
    if field:
        terms.append(SingleSiteField(a, tuple(-field * v)))
    return Potential(a, tuple(terms))


def potts(q: int, coupling: float, alphabet=None) -> Potential:
    """Nearest-neighbour Potts model: ``-coupling`` on equal neighbours."""
    a = alphabet or Alphabet(tuple(str(i + 1) for i in range(q)))
    entries = [((x, x), -coupling) for x in range(a.size)]
    return Potential(a, (FiniteRangeTable(a, tuple(entries)),))


def exponential_ising(coupling: float, rate: float, alphabet=None) -> Potential:
    a = alphabet or ising_alphabet()
    return Potential(a, (ExponentialPair(a, coupling, rate),))


def long_range_ising(exponent: float, coupling: float = 1.0, alphabet=None) -> Potential:
    a = alphabet or ising_alphabet()
    return Potential(a, (PowerLawPair(a, coupling, exponent),))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def evaluate(potential: Potential, A: Interval, sigma: SpinConfig) -> float:
    """``Phi(A, sigma)``; reads only the sites of ``A``."""
    if sigma.window is None or not sigma.window.covers(A):
        raise UncoveredSiteError(f"configuration does not cover {A}")
    total = 0.0
    for t in potential.terms:
        sup = t.support(A.lo, A.hi)
        if sup:
            total += t.value(A.lo, A.hi, [sigma.index_at(s) for s in sup])
    return total


@dataclass(frozen=True)
class TruncationSpec:
    """Keep intervals of diameter ``<= radius``.

    ``tail_bound`` bounds the omitted interaction per site, ``f(radius+1)``.
    """

    radius: int
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.radius < 0:
            raise DomainError("truncation radius must be nonnegative")


def truncation(potential: Potential, radius: int) -> TruncationSpec:
    return TruncationSpec(int(radius), decay_f(potential, int(radius) + 1))


def auto_truncation(potential: Potential, tol: float = 1e-12, max_radius: int = 64) -> TruncationSpec:
    """Smallest radius whose tail bound is below ``tol``, capped at ``max_radius``."""
    r = potential.range
    if r is not None:
        return truncation(potential, min(max(r, 1), max_radius))
    R = 1
    while R < max_radius and decay_f(potential, R + 1) > tol:
        R += 1
    return truncation(potential, R)


def effective_radius(potential: Potential, trunc: TruncationSpec) -> int:
    r = potential.range
    return trunc.radius if r is None else min(trunc.radius, r)


def _intervals(potential: Potential, free: Sequence[int], radius: int) -> Iterator:
    """Yield ``(term, lo, hi, support)`` for every term touching ``free``.

    Order is fixed (diameter, then ``lo``, then term order) so that sums are
    reproducible bit for bit.
    """
    free_set = set(free)
    lo_f, hi_f = min(free), max(free)
    for d in range(radius + 1):
        for lo in range(lo_f - d, hi_f + 1):
            hi = lo + d
            for t in potential.terms:
                if t.range is not None and d > t.range:
                    continue
                sup = t.support(lo, hi)
                if sup and not free_set.isdisjoint(sup):
                    yield t, lo, hi, sup


def _fixed_value(boundary: SpinConfig | None, site: int, radius: int) -> int:
    if boundary is None or site not in boundary:
        raise BoundaryWindowError(
            f"boundary does not cover site {site} (needed for truncation radius {radius})"
        )
    return boundary.index_at(site)


def hamiltonian(
    potential: Potential,
    volume: Interval,
    boundary: SpinConfig | None,
    sigma: SpinConfig,
    trunc: TruncationSpec,
) -> float:
    """Truncated ``H_volume^boundary(sigma)``, summed interval by interval.

    The omitted remainder is at most ``len(volume) * trunc.tail_bound``.
    """
    if sigma.window != volume:
        raise DomainError("sigma must live exactly on the volume")
    R = effective_radius(potential, trunc)
    total = 0.0
    for t, lo, hi, sup in _intervals(potential, list(volume), R):
        spins = [
            sigma.index_at(s) if s in volume else _fixed_value(boundary, s, R) for s in sup
        ]
        total += t.value(lo, hi, spins)
    return total


def energy_tensor(
    potential: Potential,
    free: Sequence[int],
    boundary: SpinConfig | None,
    trunc: TruncationSpec,
    exclude_site: int | None = None,
    only_site: int | None = None,
) -> np.ndarray:
    """Truncated Hamiltonian for every configuration of the ``free`` sites.

    Returns a ``(q,)*len(free)`` array whose axes follow ``free`` (sorted).
    Terms whose support contains ``exclude_site`` are dropped; if
    ``only_site`` is given, only terms whose support contains it are kept.
    Sites outside ``free`` are read from ``boundary``.
    """
    free = tuple(sorted(free))
    q = potential.alphabet.size
    axis_of = {s: k for k, s in enumerate(free)}
    R = effective_radius(potential, trunc)
    grouped: dict = {}
    for t, lo, hi, sup in _intervals(potential, free, R):
        if exclude_site is not None and exclude_site in sup:
            continue
        if only_site is not None and only_site not in sup:
            continue
        tbl = t.table(lo, hi)
        axes = []
        index = []
        for s in sup:
            if s in axis_of:
                axes.append(axis_of[s])
                index.append(slice(None))
            else:
                index.append(_fixed_value(boundary, s, R))
        tbl = tbl[tuple(index)]
        key = tuple(axes)
        if key in grouped:
            grouped[key] = grouped[key] + tbl
        else:
            grouped[key] = np.array(tbl, dtype=float)
    E = np.zeros((q,) * len(free))
    for axes in sorted(grouped):
        shape = [1] * len(free)
        for a in axes:
            shape[a] = q
        E += grouped[axes].reshape(shape)
    return E


# ---------------------------------------------------------------------------
# Decay calculus
# ---------------------------------------------------------------------------


def decay_f(potential: Potential, K: int) -> float:
    """Upper bound on ``f(K)``, the sup-norm interaction per site over diameters ``>= K``.

    Closed forms per family; a sum of families gets the sum of their bounds.
    """
    if K < 0:
        raise DomainError("K must be nonnegative")
    return float(sum(t.decay_f(K) for t in potential.terms))


@dataclass
class DecayProfile:
    """``f``, ``F_k = sum_j 2 f(j+k)`` and ``gamma_m = 2 (exp(F_m) - 1)``.

    Build with :func:`decay_profile` from a potential (closed forms) or with
    :meth:`from_function` for an arbitrary nonincreasing ``f`` (partial sum
    plus an integral-comparison tail majorant).
    """

    f: Callable[[int], float]
    F: Callable[[int], float]
    tail_method: str = "closed-form"

    @classmethod
    def from_function(cls, f: Callable[[float], float], cutoff: int = 64) -> "DecayProfile":
        def F(k):
            n_cut = max(10 * int(k), cutoff, int(k) + 1)
            partial = math.fsum(f(n) for n in range(int(k), n_cut))
            a, b = f(n_cut), f(2 * n_cut)
            if a > 0:
                if b <= 0:
                    tail = 0.0 if f(n_cut + 1) == 0 else _integral_tail(f, n_cut)
                else:
                    local_exponent = math.log(a / b) / math.log(2.0)
                    if local_exponent <= 1.0 + 1e-9:
                        raise DivergenceError(
                            f"condition {SUMMABILITY} fails: f decays like n^-{local_exponent:.3g}"
                        )
                    tail = _integral_tail(f, n_cut)
            else:
                tail = 0.0
            return 2.0 * (partial + tail)

        return cls(f=lambda K: float(f(K)), F=F, tail_method="summed-with-analytic-tail")

    def gamma(self, m: int) -> float:
        return 2.0 * math.expm1(self.F(m))


def _integral_tail(f, n_cut):
    # nonincreasing f: sum_{n >= N} f(n) <= integral_{N-1}^inf f
    val, _err = integrate.quad(lambda x: f(x), n_cut - 1, np.inf, limit=200)
    if not np.isfinite(val):
        raise DivergenceError(f"condition {SUMMABILITY} fails: tail integral diverges")
    return float(val)


def decay_profile(potential: Potential) -> DecayProfile:
    return DecayProfile(
        f=lambda K: decay_f(potential, K),
        F=lambda k: float(sum(t.big_F(k) for t in potential.terms)),
    )


def big_F(profile: DecayProfile | Potential, k: int) -> float:
    if isinstance(profile, Potential):
        profile = decay_profile(profile)
    if k < 0:
        raise DomainError("k must be nonnegative")
    return profile.F(k)


def gamma_m(profile: DecayProfile | Potential, m: int) -> float:
    if isinstance(profile, Potential):
        profile = decay_profile(profile)
    return profile.gamma(m)
