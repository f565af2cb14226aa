"""Shared reference data and small utilities for the tests."""

from fractions import Fraction
import random

from faultsig.siggen import component_order, substitute_summary
from faultsig.sigtable import reference_component

# reference signatures and expected-value tables, in the reference column order
EXAMPLE1_COMPONENTS = ["phi2 - 1", "p2 + phi2 - phi3", "phi3 - 1 - p2"]
EXAMPLE1_TABLE = {
    "{}": "0 0 0",
    "{1}": "!0 0 !0",
    "{2}": "0 !0 !0",
    "{1,2}": "!0 !0 ?",
}

WATERTANK_COMPONENTS = [
    "phi1",
    "phi4",
    "p1*p5^2 + phi2",
    "-p2*p5 + phi3",
    "-phi3*phi4 + 2*phi1",
    "-p2*p5*phi4 + 2*phi1",
]
WATERTANK_TABLE = {
    "{}": "0 0 0 0 0 0",
    "{1}": "!0 0 0 0 !0 !0",
    "{2}": "!0 !0 0 0 0 0",
    "{3}": "0 0 !0 !0 0 0",
    "{1,2}": "? !0 0 0 !0 !0",
    "{1,3}": "!0 0 !0 !0 !0 !0",
    "{2,3}": "!0 !0 !0 !0 0 !0",
    "{1,2,3}": "? !0 !0 !0 !0 ?",
}
# input-independent columns that discriminate everything (1-based, reference order)
WATERTANK_SUFFICIENT = {2, 4, 5}


def column_map(signature, reference):
    """Index of each reference component in ``signature`` (equal up to a scalar)."""
    order = component_order(signature.universe)
    ours = [c.monic(order) for c in signature.components]
    out = []
    for text in reference:
        ref = reference_component(text, signature).monic(order)
        matches = [k for k, c in enumerate(ours) if c == ref]
        out.append(matches[0] if len(matches) == 1 else None)
    return out


def table_in_reference_order(table, cols):
    return {p.label: " ".join(table.value(i, k).value for k in cols)
            for i, p in enumerate(table.patterns)}


def random_fault_point(model, pattern, rng: random.Random):
    """Exact rational point with the pattern's faults active and constraints met."""
    summary = model.summary
    box = model.box_dict
    for _ in range(1000):
        point = {}
        for p in summary.parameters:
            point[p] = Fraction(rng.randint(1, 400), rng.randint(1, 40))
        for f in summary.faults:
            if f in pattern.active:
                lo, hi = box.get(f, (-5.0, 5.0))
                v = Fraction(0)
                while v == 0:
                    v = Fraction(rng.randint(int(lo * 1000), int(hi * 1000)), 1000)
                point[f] = v
            else:
                point[f] = Fraction(0)
        for w, d in summary.inverses:
            den = d.evaluate(point)
            if den == 0:
                break
            point[w] = 1 / den
        else:
            if model.constraints.satisfied(point):
                return point
    raise RuntimeError("no admissible point found")


def sound_components(bundle, pattern):
    """Components contributed by the pattern's own eliminated basis."""
    sig = bundle.signature
    return [c for c, prov in zip(sig.components, sig.provenance) if pattern in prov]


def exact_value(component, model, pattern, point):
    return substitute_summary(component, model.summary, pattern).evaluate(point)


