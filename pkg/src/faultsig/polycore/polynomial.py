"""Sparse multivariate polynomials with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping

from .order import MonomialOrder
from .universe import VarUniverse

Monomial = tuple  # exponent vector, one entry per universe variable


def _coerce(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, str):
        return Fraction(c)
    if isinstance(c, float):
        raise TypeError("floating coefficients are not allowed in exact polynomials")
    raise TypeError(f"cannot use {type(c).__name__} as a coefficient")


class Polynomial:
    """Immutable polynomial over a :class:`VarUniverse`.

    Terms are stored as ``{exponent tuple: Fraction}`` with no zero
    coefficients, so equal polynomials have equal term maps.
    """

    __slots__ = ("universe", "terms", "_hash")

    def __init__(self, universe: VarUniverse, terms: Mapping[Monomial, object] | None = None):
        n = len(universe)
        clean = {}
        for mon, c in (terms or {}).items():
            mon = tuple(mon)
            if len(mon) != n or any(e < 0 for e in mon):
                raise ValueError(f"bad exponent vector {mon} for universe of size {n}")
            c = _coerce(c)
            if c:
                clean[mon] = c
        self.universe = universe
        self.terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, universe: VarUniverse, terms: dict) -> "Polynomial":
        # trusted constructor: terms already clean
        p = cls.__new__(cls)
        p.universe = universe
        p.terms = terms
        p._hash = None
        return p

    # -- constructors -------------------------------------------------
    @classmethod
    def zero(cls, universe: VarUniverse) -> "Polynomial":
        return cls._raw(universe, {})

    @classmethod
    def constant(cls, universe: VarUniverse, c) -> "Polynomial":
        c = _coerce(c)
        return cls._raw(universe, {(0,) * len(universe): c} if c else {})

    @classmethod
    def var(cls, universe: VarUniverse, name: str, power: int = 1) -> "Polynomial":
        mon = [0] * len(universe)
        mon[universe.index(name)] = power
        return cls._raw(universe, {tuple(mon): Fraction(1)})

    @classmethod
    def monomial(cls, universe: VarUniverse, mon: Monomial, coeff=1) -> "Polynomial":
        return cls(universe, {tuple(mon): coeff})

    # -- basic queries ------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_constant(self) -> bool:
        return all(not any(m) for m in self.terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("polynomial is not constant")
        return next(iter(self.terms.values()), Fraction(0))

    def total_degree(self) -> int:
        return max((sum(m) for m in self.terms), default=-1)

    def degree_in(self, name: str) -> int:
        i = self.universe.index(name)
        return max((m[i] for m in self.terms), default=-1)

    def variables(self) -> set[str]:
        names = self.universe.names
        used = set()
        for m in self.terms:
            used.update(names[i] for i, e in enumerate(m) if e)
        return used

    def __len__(self) -> int:
        return len(self.terms)

    # -- ordering -----------------------------------------------------
    def sorted_terms(self, order: MonomialOrder | None = None) -> list[tuple[Monomial, Fraction]]:
        order = order or MonomialOrder.for_universe(self.universe)
        key = order.key(self.universe)
        return sorted(self.terms.items(), key=lambda t: key(t[0]), reverse=True)

    def leading_term(self, order: MonomialOrder | None = None) -> tuple[Monomial, Fraction]:
        if not self.terms:
            raise ValueError("zero polynomial has no leading term")
        order = order or MonomialOrder.for_universe(self.universe)
        key = order.key(self.universe)
        mon = max(self.terms, key=key)
        return mon, self.terms[mon]

    def monic(self, order: MonomialOrder | None = None) -> "Polynomial":
        if not self.terms:
            return self
        _, lc = self.leading_term(order)
        return self.scale(1 / lc)

    # -- arithmetic ---------------------------------------------------
    def _check(self, other: "Polynomial"):
        if other.universe.names != self.universe.names:
            raise ValueError("polynomials live in different universes")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check(other)
            return other
        return Polynomial.constant(self.universe, other)

    def __add__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Polynomial._raw(self.universe, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self.universe, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        try:
            other = self._lift(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c) -> "Polynomial":
        c = _coerce(c)
        if not c:
            return Polynomial.zero(self.universe)
        return Polynomial._raw(self.universe, {m: v * c for m, v in self.terms.items()})

    def mul_term(self, mon: Monomial, c: Fraction) -> "Polynomial":
        return Polynomial._raw(
            self.universe,
            {tuple(a + b for a, b in zip(m, mon)): v * c for m, v in self.terms.items()},
        )

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        self._check(other)
        out: dict = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                s = out.get(m, 0) + c1 * c2
                if s:
                    out[m] = s
                else:
                    out.pop(m, None)
        return Polynomial._raw(self.universe, out)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ValueError("exponent must be a nonnegative integer")
        result = Polynomial.constant(self.universe, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __truediv__(self, other):
        c = _coerce(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return self.scale(1 / c)

    # -- equality / hashing -------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.universe.names == other.universe.names and self.terms == other.terms
        try:
            return self == Polynomial.constant(self.universe, other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.universe.names, frozenset(self.terms.items())))
        return self._hash

    # -- substitution / evaluation ------------------------------------
    def to_universe(self, universe: VarUniverse) -> "Polynomial":
        """Re-embed into another universe containing all used variables."""
        if universe.names == self.universe.names:
            return self
        idx = {self.universe.index(v): universe.index(v) for v in self.variables()}
        n = len(universe)
        out = {}
        for m, c in self.terms.items():
            mon = [0] * n
            for i, e in enumerate(m):
                if e:
                    mon[idx[i]] = e
            out[tuple(mon)] = c
        return Polynomial._raw(universe, out)

    def subs(self, values: Mapping[str, object]) -> "Polynomial":
        """Substitute variables by polynomials (same universe) or rationals."""
        if not values:
            return self
        pos = {self.universe.index(k): v for k, v in values.items()}
        cache: dict = {}

        def power(i, e):
            key = (i, e)
            if key not in cache:
                v = pos[i]
                if isinstance(v, Polynomial):
                    self._check(v)
                    cache[key] = v ** e
                else:
                    cache[key] = Polynomial.constant(self.universe, _coerce(v) ** e)
            return cache[key]

        out = Polynomial.zero(self.universe)
        for m, c in self.terms.items():
            rest = list(m)
            term = None
            for i in pos:
                if m[i]:
                    rest[i] = 0
                    f = power(i, m[i])
                    term = f if term is None else term * f
            base = Polynomial._raw(self.universe, {tuple(rest): c})
            out = out + (base if term is None else base * term)
        return out

    def evaluate(self, values: Mapping[str, object]):
        """Evaluate at a full point. Exact when all values are rational."""
        names = self.universe.names
        used = self.variables()
        missing = used - set(values)
        if missing:
            raise KeyError(f"missing values for {sorted(missing)}")
        vals = [values.get(n, 0) for n in names]
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in zip(vals, m):
                if e:
                    t = t * v ** e
            total = total + t
        return total

    # -- printing -----------------------------------------------------
    def format(self, order: MonomialOrder | None = None) -> str:
        if not self.terms:
            return "0"
        names = self.universe.names
        parts = []
        for mon, c in self.sorted_terms(order):
            factors = []
            for n, e in zip(names, mon):
                if e == 1:
                    factors.append(n)
                elif e:
                    factors.append(f"{n}^{e}")
            mag = abs(c)
            if not factors:
                body = str(mag)
            elif mag == 1:
                body = "*".join(factors)
            else:
                body = f"{mag}*" + "*".join(factors)
            parts.append(("-" if c < 0 else "+", body))
        first_sign, first = parts[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __str__(self):
        return self.format()

    def __repr__(self):
        return f"Polynomial({self.format()!r})"


def polys_in(universe: VarUniverse, polys: Iterable[Polynomial]) -> list[Polynomial]:
    return [p.to_universe(universe) for p in polys]
