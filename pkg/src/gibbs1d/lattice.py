"""Finite alphabets, lattice intervals and spin configurations on finite windows.

Configurations store symbol *indices* into their alphabet; the symbols
themselves are only used at the edges (construction, printing, I/O).
The first symbol of an alphabet is the designated vacuum ``"+"``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DomainError, EnumerationTooLargeError, ModelError, UncoveredSiteError

#: Maximal number of configurations any complete enumeration may visit.
ENUMERATION_CAP = 2**24

_DEFAULT_VALUES = {"+": 1.0, "-": -1.0, "−": -1.0}


@dataclass(frozen=True)
class Alphabet:
    """An ordered finite single-site space.

    ``values`` optionally attaches a real number to every symbol; pair
    potentials of Ising type multiply these values.
    """

    symbols: tuple
    values: tuple | None = None

    def __post_init__(self):
        symbols = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", symbols)
        if len(symbols) < 2:
            raise ModelError("an alphabet needs at least two symbols")
        if len(set(symbols)) != len(symbols):
            raise ModelError(f"alphabet symbols are not distinct: {symbols}")
        if self.values is not None:
            values = tuple(float(v) for v in self.values)
            if len(values) != len(symbols):
                raise ModelError("alphabet values must match the symbols one to one")
            object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def plus(self) -> str:
        """The vacuum symbol (first in order)."""
        return self.symbols[0]

    def index(self, symbol) -> int:
        try:
            return self.symbols.index(str(symbol))
        except ValueError:
            raise DomainError(f"symbol {symbol!r} is not in alphabet {self.symbols}") from None

    def spin_values(self) -> np.ndarray:
        """Numeric value of every symbol, for Ising-type couplings."""
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        out = []
        for s in self.symbols:
            if s in _DEFAULT_VALUES:
                out.append(_DEFAULT_VALUES[s])
                continue
            try:
                out.append(float(s))
            except ValueError:
                raise ModelError(
                    f"alphabet {self.symbols} carries no numeric spin values"
                ) from None
        return np.asarray(out)


def ising_alphabet() -> Alphabet:
    return Alphabet(("+", "-"), (1.0, -1.0))


@dataclass(frozen=True, order=True)
class Interval:
    """The lattice interval ``[lo, hi]`` of consecutive integer sites."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty interval [{self.lo}, {self.hi}]")

    @classmethod
    def centered(cls, n: int) -> "Interval":
        return cls(-n, n)

    @property
    def diameter(self) -> int:
        return self.hi - self.lo

    @property
    def sites(self) -> range:
        return range(self.lo, self.hi + 1)

    def __len__(self):
        return self.hi - self.lo + 1

    def __iter__(self) -> Iterator[int]:
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        return self.lo <= site <= self.hi

    def expand(self, r: int) -> "Interval":
        return Interval(self.lo - r, self.hi + r)

    def covers(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def __str__(self):
        return f"[{self.lo},{self.hi}]"


@dataclass(frozen=True)
class SpinConfig:
    """Symbols assigned to every site of a window.

    ``window`` is ``None`` only for the empty configuration.
    """

    alphabet: Alphabet
    window: Interval | None
    indices: tuple = ()

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        n = 0 if self.window is None else len(self.window)
        if len(idx) != n:
            raise DomainError(f"{len(idx)} values given for a window of {n} sites")
        if any(i < 0 or i >= self.alphabet.size for i in idx):
            raise DomainError("configuration value outside the alphabet")

    @classmethod
    def from_symbols(cls, alphabet: Alphabet, window: Interval, symbols: Iterable) -> "SpinConfig":
        if isinstance(symbols, str) and len(symbols) == len(window):
            symbols = list(symbols)
        return cls(alphabet, window, tuple(alphabet.index(s) for s in symbols))

    @classmethod
    def constant(cls, alphabet: Alphabet, window: Interval, symbol=None) -> "SpinConfig":
        i = 0 if symbol is None else alphabet.index(symbol)
        return cls(alphabet, window, (i,) * len(window))

    @classmethod
    def empty(cls, alphabet: Alphabet) -> "SpinConfig":
        return cls(alphabet, None, ())

    @classmethod
    def from_mapping(cls, alphabet: Alphabet, values: Mapping[int, object]) -> "SpinConfig":
        """Build from ``{site: symbol}``; the sites must form an interval."""
        if not values:
            return cls.empty(alphabet)
        lo, hi = min(values), max(values)
        window = Interval(lo, hi)
        missing = [s for s in window if s not in values]
        if missing:
            raise UncoveredSiteError(f"sites {missing} are not assigned")
        return cls(alphabet, window, tuple(alphabet.index(values[s]) for s in window))

    def __len__(self):
        return len(self.indices)

    def __contains__(self, site) -> bool:
        return self.window is not None and site in self.window

    @property
    def symbols(self) -> tuple:
        return tuple(self.alphabet.symbols[i] for i in self.indices)

    def index_at(self, site: int) -> int:
        if site not in self:
            raise UncoveredSiteError(f"site {site} is not covered by window {self.window}")
        return self.indices[site - self.window.lo]

    def at(self, site: int) -> str:
        return self.alphabet.symbols[self.index_at(site)]

    def as_dict(self) -> dict:
        if self.window is None:
            return {}
        return dict(zip(self.window.sites, self.indices))

    def restrict(self, window: Interval) -> "SpinConfig":
        if self.window is None or not self.window.covers(window):
            raise UncoveredSiteError(f"window {window} is not covered by {self.window}")
        a = window.lo - self.window.lo
        return SpinConfig(self.alphabet, window, self.indices[a:a + len(window)])

    def with_values(self, values: Mapping[int, int]) -> "SpinConfig":
        """Copy with some sites replaced (by symbol index); sites must be covered."""
        idx = list(self.indices)
        for site, v in values.items():
            if site not in self:
                raise UncoveredSiteError(f"site {site} is not covered by window {self.window}")
            idx[site - self.window.lo] = int(v)
        return SpinConfig(self.alphabet, self.window, tuple(idx))

    def __str__(self):
        return "".join(self.symbols)


def enumeration_cap_sites(size: int, cap: int = ENUMERATION_CAP) -> int:
    """Largest number of sites ``n`` with ``size**n <= cap``."""
    n = 0
    while size ** (n + 1) <= cap:
        n += 1
    return n


def check_enumeration(size: int, n_sites: int, cap: int = ENUMERATION_CAP) -> int:
    required = size**n_sites
    if required > cap:
        raise EnumerationTooLargeError(required, cap)
    return required


def enumerate_configs(alphabet: Alphabet, window: Interval, cap: int = ENUMERATION_CAP) -> list:
    """All configurations on ``window`` in lexicographic order.

    The leftmost site varies slowest, symbols follow alphabet order, so the
    position of a configuration in the list equals its flat index in a
    C-ordered ``(q,)*len(window)`` tensor.
    """
    check_enumeration(alphabet.size, len(window), cap)
    return [
        SpinConfig(alphabet, window, idx)
        for idx in itertools.product(range(alphabet.size), repeat=len(window))
    ]


def flat_index(indices: Sequence[int], size: int) -> int:
    out = 0
    for i in indices:
        out = out * size + int(i)
    return out


def patch(inner: SpinConfig | None, outer: SpinConfig) -> SpinConfig:
    """``inner`` on its window, ``outer`` elsewhere, on the hull of both windows."""
    if inner is None or inner.window is None:
        return outer
    if outer.window is None:
        return inner
    if inner.alphabet != outer.alphabet:
        raise DomainError("cannot patch configurations over different alphabets")
    hull = Interval(min(inner.window.lo, outer.window.lo), max(inner.window.hi, outer.window.hi))
    idx = []
    for s in hull:
        if s in inner:
            idx.append(inner.index_at(s))
        elif s in outer:
            idx.append(outer.index_at(s))
        else:
            raise UncoveredSiteError(f"site {s} is covered by neither configuration")
    return SpinConfig(inner.alphabet, hull, tuple(idx))
