"""Buchberger's algorithm, normal forms and elimination.

Internally polynomials are dicts keyed by *permuted* exponent tuples, so
plain tuple comparison is the active lex order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .order import MonomialOrder
from .polynomial import Polynomial
from .universe import VarUniverse


class GroebnerBlowup(RuntimeError):
    """Pair queue or basis exceeded the configured budget."""


@dataclass(frozen=True)
class GroebnerBasis:
    polys: tuple[Polynomial, ...]
    order: MonomialOrder
    universe: VarUniverse

    def __iter__(self):
        return iter(self.polys)

    def __len__(self):
        return len(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def is_unit(self) -> bool:
        return len(self.polys) == 1 and self.polys[0].is_constant() and not self.polys[0].is_zero()

    def leading_monomials(self) -> list[tuple]:
        return [p.leading_term(self.order)[0] for p in self.polys]

    def contains(self, p: Polynomial) -> bool:
        return normal_form(p, self).is_zero()


# -- internal dict representation ---------------------------------------------

def _to_internal(p: Polynomial, perm: Sequence[int]) -> dict:
    return {tuple(m[i] for i in perm): c for m, c in p.terms.items()}


def _from_internal(d: dict, universe: VarUniverse, perm: Sequence[int]) -> Polynomial:
    n = len(perm)
    out = {}
    for k, c in d.items():
        mon = [0] * n
        for pos, i in enumerate(perm):
            mon[i] = k[pos]
        out[tuple(mon)] = c
    return Polynomial._raw(universe, out)


def _divides(a: tuple, b: tuple) -> bool:
    return all(x <= y for x, y in zip(a, b))


def _lcm(a: tuple, b: tuple) -> tuple:
    return tuple(max(x, y) for x, y in zip(a, b))


def _monic(d: dict) -> dict:
    lm = max(d)
    lc = d[lm]
    if lc == 1:
        return d
    inv = 1 / lc
    return {m: c * inv for m, c in d.items()}


def _sub_multiple(p: dict, g: dict, shift: tuple, c: Fraction) -> None:
    """In place: p -= c * x^shift * g."""
    for m, v in g.items():
        k = tuple(a + b for a, b in zip(m, shift))
        s = p.get(k, 0) - c * v
        if s:
            p[k] = s
        else:
            p.pop(k, None)


def _reduce(p: dict, basis: list[tuple[tuple, dict]]) -> dict:
    """Full normal form of p modulo monic polynomials given as (lm, poly)."""
    p = dict(p)
    rem = {}
    while p:
        m = max(p)
        c = p[m]
        for lm, g in basis:
            if _divides(lm, m):
                shift = tuple(a - b for a, b in zip(m, lm))
                _sub_multiple(p, g, shift, c)
                break
        else:
            del p[m]
            rem[m] = c
    return rem


def _spoly(f: dict, lf: tuple, g: dict, lg: tuple) -> dict:
    l = _lcm(lf, lg)
    out: dict = {}
    sf = tuple(a - b for a, b in zip(l, lf))
    sg = tuple(a - b for a, b in zip(l, lg))
    for m, c in f.items():
        out[tuple(a + b for a, b in zip(m, sf))] = c
    _sub_multiple(out, g, sg, Fraction(1))
    return out


def _buchberger(gens: list[dict], max_pairs: int, max_basis: int) -> list[dict]:
    basis: list[dict] = []
    lms: list[tuple] = []
    pending: set[tuple[int, int]] = set()
    heap: list = []
    processed = 0

    def add(poly: dict) -> None:
        poly = _monic(poly)
        j = len(basis)
        basis.append(poly)
        lms.append(max(poly))
        for i in range(j):
            pending.add((i, j))
            heapq.heappush(heap, (_lcm(lms[i], lms[j]), j, i))
        if len(basis) > max_basis:
            raise GroebnerBlowup(
                f"basis grew past {max_basis} elements "
                f"({len(pending)} pairs pending, max degree {max(sum(m) for m in lms)})"
            )

    for g in gens:
        if g:
            r = _reduce(g, list(zip(lms, basis)))
            if r:
                if all(not any(m) for m in r):
                    return [{next(iter(r)): Fraction(1)}]
                add(r)

    while heap:
        l, j, i = heapq.heappop(heap)
        if (i, j) not in pending:
            continue
        pending.discard((i, j))
        lm_i, lm_j = lms[i], lms[j]
        # first criterion: coprime leading monomials
        if all(not (a and b) for a, b in zip(lm_i, lm_j)):
            continue
        # second criterion: chain through a third element with both pairs done
        chain = False
        for k in range(len(basis)):
            if k == i or k == j or not _divides(lms[k], l):
                continue
            if (min(i, k), max(i, k)) not in pending and (min(j, k), max(j, k)) not in pending:
                chain = True
                break
        if chain:
            continue
        processed += 1
        if processed > max_pairs:
            raise GroebnerBlowup(
                f"processed more than {max_pairs} S-pairs "
                f"(basis size {len(basis)}, {len(pending)} pending)"
            )
        s = _spoly(basis[i], lm_i, basis[j], lm_j)
        r = _reduce(s, list(zip(lms, basis)))
        if r:
            if all(not any(m) for m in r):
                return [{next(iter(r)): Fraction(1)}]
            add(r)
    return _interreduce(basis)


def _interreduce(basis: list[dict]) -> list[dict]:
    # minimal basis: drop elements whose lm is divisible by an earlier/other lm
    items = [(max(g), idx, g) for idx, g in enumerate(basis)]
    keep = []
    for lm, idx, g in items:
        redundant = False
        for lm2, idx2, _ in items:
            if idx2 == idx:
                continue
            if _divides(lm2, lm) and (lm2 != lm or idx2 < idx):
                redundant = True
                break
        if not redundant:
            keep.append((lm, g))
    keep.sort(key=lambda t: t[0], reverse=True)
    reduced = []
    for k, (lm, g) in enumerate(keep):
        others = [(l2, g2) for j, (l2, g2) in enumerate(keep) if j != k]
        tail = {m: c for m, c in g.items() if m != lm}
        r = _reduce(tail, others)
        r[lm] = g[lm]
        reduced.append(_monic(r))
    return reduced


# -- public API ----------------------------------------------------------------

def groebner_basis(
    gens: Iterable[Polynomial],
    order: MonomialOrder,
    universe: VarUniverse | None = None,
    *,
    max_pairs: int = 200_000,
    max_basis: int = 2_000,
) -> GroebnerBasis:
    """Reduced Groebner basis of the ideal generated by ``gens``.

    The result is monic, sorted by decreasing leading monomial, and does not
    depend on the order in which the generators are listed.
    """
    gens = list(gens)
    if universe is None:
        if not gens:
            raise ValueError("universe is required for an empty generator list")
        universe = gens[0].universe
    perm = order.permutation(universe)
    internal = [_to_internal(g.to_universe(universe), perm) for g in gens]
    internal = [g for g in internal if g]
    # deterministic processing order independent of caller ordering
    internal.sort(key=lambda d: sorted(d.items(), reverse=True))
    result = _buchberger(internal, max_pairs, max_basis) if internal else []
    polys = tuple(_from_internal(d, universe, perm) for d in result)
    return GroebnerBasis(polys, order, universe)


def normal_form(p: Polynomial, basis: GroebnerBasis) -> Polynomial:
    """Remainder of ``p`` on division by the basis (fully reduced)."""
    universe = basis.universe
    perm = basis.order.permutation(universe)
    gs = [_to_internal(g, perm) for g in basis.polys]
    r = _reduce(_to_internal(p.to_universe(universe), perm), [(max(g), _monic(g)) for g in gs])
    return _from_internal(r, universe, perm)


def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder) -> Polynomial:
    universe = f.universe
    perm = order.permutation(universe)
    a, b = _to_internal(f, perm), _to_internal(g, perm)
    a, b = _monic(a), _monic(b)
    return _from_internal(_spoly(a, max(a), b, max(b)), universe, perm)


def reduce_by(p: Polynomial, divisors: Sequence[Polynomial], order: MonomialOrder) -> Polynomial:
    """Multivariate division remainder by an arbitrary list (not necessarily a basis)."""
    universe = p.universe
    perm = order.permutation(universe)
    ds = [_monic(_to_internal(d.to_universe(universe), perm)) for d in divisors if d]
    r = _reduce(_to_internal(p, perm), [(max(d), d) for d in ds])
    return _from_internal(r, universe, perm)


def is_groebner(polys: Sequence[Polynomial], order: MonomialOrder) -> bool:
    """Buchberger criterion: every S-polynomial reduces to zero."""
    polys = [p for p in polys if p]
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if reduce_by(s_polynomial(polys[i], polys[j], order), polys, order):
                return False
    return True


class EliminationOrderError(ValueError):
    pass


def eliminate(basis: GroebnerBasis, keep: Iterable[str]) -> list[Polynomial]:
    """Basis elements lying in the subring generated by ``keep``."""
    keep = set(keep)
    unknown = keep - set(basis.universe.names)
    if unknown:
        raise KeyError(f"unknown variables {sorted(unknown)}")
    drop = [n for n in basis.universe.names if n not in keep]
    kept = [n for n in basis.universe.names if n in keep]
    if not basis.order.is_elimination_order(drop, kept):
        raise EliminationOrderError(
            "order must rank every eliminated variable above every kept variable"
        )
    return [g for g in basis.polys if g.variables() <= keep]
