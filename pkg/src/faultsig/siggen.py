"""Fault-pattern ideals and the algebraic signature.

For each subset N of the faults, the ideal I_N is generated by
``gamma_k - phi_k`` for every slot, ``v_i*f_i - 1`` for i in N and ``f_i``
for i outside N.  Eliminating v and f under the block order
v > f > phi > p leaves polynomials in (phi, p) that vanish whenever a fault of
pattern N is active.  Their union, minus whatever vanishes for every pattern,
is the signature.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .model import ExhaustiveSummary
from .polycore import (
    GroebnerBasis,
    MonomialOrder,
    Polynomial,
    VarClass,
    VarUniverse,
    eliminate,
    groebner_basis,
    normal_form,
)

log = logging.getLogger(__name__)

DEFAULT_MAX_FAULTS = 8


class TooManyFaults(ValueError):
    pass


@dataclass(frozen=True, order=True)
class FaultPattern:
    """Set of active faults, stored as sorted 1-based indices."""

    indices: tuple[int, ...]
    faults: tuple[str, ...] = field(compare=False)

    def __post_init__(self):
        if len(set(self.indices)) != len(self.indices):
            raise ValueError("duplicate fault index")
        for i in self.indices:
            if not 1 <= i <= len(self.faults):
                raise ValueError(f"fault index {i} out of range 1..{len(self.faults)}")
        object.__setattr__(self, "indices", tuple(sorted(self.indices)))

    @classmethod
    def from_names(cls, names: Iterable[str], faults: Sequence[str]) -> "FaultPattern":
        faults = tuple(faults)
        idx = []
        for n in names:
            if n not in faults:
                raise ValueError(f"undeclared fault {n!r}")
            idx.append(faults.index(n) + 1)
        return cls(tuple(idx), faults)

    @classmethod
    def parse(cls, text: str, faults: Sequence[str]) -> "FaultPattern":
        """Accept ``{1,3}``, ``1,3``, ``{}`` or fault names like ``f1,f3``."""
        body = text.strip().strip("{}").strip()
        if not body:
            return cls((), tuple(faults))
        items = [s.strip() for s in body.split(",") if s.strip()]
        if all(s.isdigit() for s in items):
            return cls(tuple(int(s) for s in items), tuple(faults))
        return cls.from_names(items, faults)

    @property
    def active(self) -> tuple[str, ...]:
        return tuple(self.faults[i - 1] for i in self.indices)

    @property
    def inactive(self) -> tuple[str, ...]:
        return tuple(f for i, f in enumerate(self.faults, 1) if i not in self.indices)

    @property
    def label(self) -> str:
        return "{" + ",".join(str(i) for i in self.indices) + "}"

    def __str__(self):
        return f"f_{self.label}"

    def sort_key(self):
        return (len(self.indices), self.indices)


def all_patterns(faults: Sequence[str]) -> list[FaultPattern]:
    """Every subset of the faults, by size then lexicographically."""
    faults = tuple(faults)
    out = []
    for k in range(len(faults) + 1):
        for combo in itertools.combinations(range(1, len(faults) + 1), k):
            out.append(FaultPattern(combo, faults))
    return out


def inverse_name(fault: str) -> str:
    return f"v_{fault}"


def signature_universe(summary: ExhaustiveSummary) -> VarUniverse:
    """Universe ordered v > w > f > phi > p (also the elimination precedence)."""
    return VarUniverse.build(
        [(inverse_name(f), VarClass.AUXILIARY) for f in summary.faults]
        + [(w, VarClass.AUXILIARY) for w, _ in summary.inverses]
        + [(f, VarClass.FAULT) for f in summary.faults]
        + [(s, VarClass.SLOT) for s in summary.slots]
        + [(p, VarClass.PARAMETER) for p in summary.parameters]
    )


def elimination_order(summary: ExhaustiveSummary) -> MonomialOrder:
    u = signature_universe(summary)
    return MonomialOrder.block_lex([
        u.of_class(VarClass.AUXILIARY),
        u.of_class(VarClass.FAULT),
        u.of_class(VarClass.SLOT),
        u.of_class(VarClass.PARAMETER),
    ])


def component_universe(summary: ExhaustiveSummary) -> VarUniverse:
    """Universe of signature components: slots then parameters."""
    return VarUniverse.build(
        [(s, VarClass.SLOT) for s in summary.slots]
        + [(p, VarClass.PARAMETER) for p in summary.parameters]
    )


def build_e_n(summary: ExhaustiveSummary, pattern: FaultPattern) -> list[Polynomial]:
    """Generators of I_N over :func:`signature_universe`."""
    if pattern.faults != summary.faults:
        raise ValueError("pattern was built for a different fault list")
    u = signature_universe(summary)
    gens = [e.gamma.to_universe(u) - Polynomial.var(u, e.slot) for e in summary.entries]
    gens += [r.to_universe(u) for r in summary.inverse_relations()]
    for f in pattern.active:
        gens.append(Polynomial.var(u, inverse_name(f)) * Polynomial.var(u, f) - 1)
    for f in pattern.inactive:
        gens.append(Polynomial.var(u, f))
    return gens


@dataclass(frozen=True)
class PatternBasis:
    pattern: FaultPattern
    basis: GroebnerBasis
    eliminated: tuple[Polynomial, ...]  # G_N, over the component universe


def pattern_basis(summary: ExhaustiveSummary, pattern: FaultPattern) -> PatternBasis:
    order = elimination_order(summary)
    u = signature_universe(summary)
    gb = groebner_basis(build_e_n(summary, pattern), order, u)
    keep = set(summary.slots) | set(summary.parameters)
    cu = component_universe(summary)
    g_n = tuple(g.to_universe(cu) for g in eliminate(gb, keep))
    return PatternBasis(pattern, gb, g_n)


def _pattern_basis_job(args):
    summary, pattern = args
    return pattern_basis(summary, pattern)


def pattern_bases(summary: ExhaustiveSummary, *, max_faults: int = DEFAULT_MAX_FAULTS,
                  workers: int = 1) -> list[PatternBasis]:
    """Groebner data for all 2^e patterns, in :func:`all_patterns` order."""
    e = len(summary.faults)
    if e > max_faults:
        raise TooManyFaults(f"{e} faults means {2 ** e} pattern bases; cap is {max_faults} faults")
    patterns = all_patterns(summary.faults)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_pattern_basis_job, [(summary, p) for p in patterns]))
    out = []
    for p in patterns:
        pb = pattern_basis(summary, p)
        log.debug("pattern %s: basis of %d, %d eliminated", p, len(pb.basis), len(pb.eliminated))
        out.append(pb)
    return out


def in_ideal(component: Polynomial, pb: PatternBasis) -> bool:
    """Membership of a (phi, p) polynomial in I_N."""
    return normal_form(component.to_universe(pb.basis.universe), pb.basis).is_zero()


@dataclass(frozen=True)
class AlgebraicSignature:
    components: tuple[Polynomial, ...]
    provenance: tuple[tuple[FaultPattern, ...], ...]
    universe: VarUniverse
    warnings: tuple[str, ...] = ()

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, k):
        return self.components[k]

    @property
    def is_empty(self) -> bool:
        return not self.components

    def strings(self) -> list[str]:
        return [c.format() for c in self.components]


def component_order(universe: VarUniverse) -> MonomialOrder:
    slots = universe.of_class(VarClass.SLOT)
    params = universe.of_class(VarClass.PARAMETER)
    return MonomialOrder.block_lex([slots, params])


def _canonical_poly(p: Polynomial, order: MonomialOrder) -> Polynomial:
    return p.monic(order)


def _sort_key(p: Polynomial, order: MonomialOrder):
    key = order.key(p.universe)
    # larger leading terms first inside a degree class
    terms = tuple((tuple(-e for e in key(m)), -c) for m, c in p.sorted_terms(order))
    return (p.total_degree(), terms)


def canonicalize(sig: AlgebraicSignature) -> AlgebraicSignature:
    """Monic components, duplicates merged, sorted by (degree, terms)."""
    order = component_order(sig.universe)
    merged: dict[Polynomial, set] = {}
    for comp, prov in zip(sig.components, sig.provenance):
        c = _canonical_poly(comp, order)
        if c.is_zero():
            continue
        merged.setdefault(c, set()).update(prov)
    items = sorted(merged.items(), key=lambda kv: _sort_key(kv[0], order))
    return AlgebraicSignature(
        tuple(c for c, _ in items),
        tuple(tuple(sorted(prov, key=FaultPattern.sort_key)) for _, prov in items),
        sig.universe,
        sig.warnings,
    )


def algebraic_signature(summary: ExhaustiveSummary, *, bases: Sequence[PatternBasis] | None = None,
                        max_faults: int = DEFAULT_MAX_FAULTS, workers: int = 1) -> AlgebraicSignature:
    """Signature polynomials in R[p][phi] discriminating the fault patterns."""
    if bases is None:
        bases = pattern_bases(summary, max_faults=max_faults, workers=workers)
    cu = component_universe(summary)
    candidates: dict[Polynomial, list[FaultPattern]] = {}
    for pb in bases:
        for g in pb.eliminated:
            candidates.setdefault(g.to_universe(cu), []).append(pb.pattern)
    kept, prov = [], []
    for g, pats in candidates.items():
        if all(in_ideal(g, pb) for pb in bases):
            log.debug("dropping %s: vanishes for every pattern", g)
            continue
        kept.append(g)
        prov.append(tuple(pats))
    warnings = ()
    if not kept:
        warnings = ("signature is empty: no eliminated polynomial separates any fault pattern",)
    return canonicalize(AlgebraicSignature(tuple(kept), tuple(prov), cu, warnings))


def substitute_summary(component: Polynomial, summary: ExhaustiveSummary,
                       pattern: FaultPattern | None = None) -> Polynomial:
    """Replace every slot by its gamma; inactive faults of ``pattern`` set to 0.

    Result lives over the summary universe (inverses, faults, parameters).
    """
    u = summary.universe
    merged = VarUniverse.build(
        list(zip(u.names, u.classes))
        + [(s, VarClass.SLOT) for s in summary.slots]
    )
    values = {e.slot: e.gamma.to_universe(merged) for e in summary.entries}
    if pattern is not None:
        values.update({f: 0 for f in pattern.inactive})
    out = component.to_universe(merged).subs(values)
    if pattern is not None:
        # gamma may contain inactive faults too
        out = out.subs({f: 0 for f in pattern.inactive})
    return out.to_universe(u)
