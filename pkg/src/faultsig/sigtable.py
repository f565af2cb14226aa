"""Expected-value table of the signature and diagnosability verdicts.

Each (pattern, component) cell is decided in tiers:

1. component in I_N                       -> Zero      (ideal-membership)
2. E_N + {t*c - 1} has basis {1}          -> Zero      (gb-unit-certificate)
3. E_N + {c} has basis {1}                -> NonZero   (gb-unit-certificate)
4. numeric search over the constraint box -> MayVanish (numeric-witness-pair)
                                             or NonZero (exhausted-search)

Tiers 2 and 3 also add ``r*g - 1`` for every constraint ``g`` that the
constraints force to be nonzero (strict inequalities, ``!=``), which keeps the
certificates sound while letting them use positivity of parameters.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from .model import ConstraintSet, ExhaustiveSummary
from .polycore import MonomialOrder, Polynomial, VarClass, VarUniverse, groebner_basis, parse_poly
from .siggen import (
    AlgebraicSignature,
    FaultPattern,
    PatternBasis,
    all_patterns,
    build_e_n,
    in_ideal,
    pattern_basis,
    signature_universe,
    substitute_summary,
)
from .witness import (
    NONZERO_FLOOR,
    Region,
    RegionInfeasible,
    SearchConfig,
    WitnessSearch,
    default_bounds,
)


class Cell(str, Enum):
    ZERO = "0"
    NONZERO = "!0"
    MAY_VANISH = "?"


IDEAL_MEMBERSHIP = "ideal-membership"
GB_UNIT = "gb-unit-certificate"
WITNESS_PAIR = "numeric-witness-pair"
EXHAUSTED = "exhausted-search"


class CellError(RuntimeError):
    def __init__(self, message: str, pattern: FaultPattern | None = None, column: int | None = None):
        self.pattern = pattern
        self.column = column
        where = []
        if pattern is not None:
            where.append(f"pattern {pattern}")
        if column is not None:
            where.append(f"component {column + 1}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


@dataclass(frozen=True)
class CellValue:
    value: Cell
    certificate: str
    witnesses: dict = field(default_factory=dict, compare=False)
    diagnostic: str = field(default="", compare=False)

    def to_json(self) -> dict:
        d = {"value": self.value.value, "certificate": self.certificate}
        if self.witnesses:
            d["witnesses"] = self.witnesses
        if self.diagnostic:
            d["diagnostic"] = self.diagnostic
        return d

    @classmethod
    def from_json(cls, d: dict) -> "CellValue":
        return cls(Cell(d["value"]), d["certificate"], d.get("witnesses", {}), d.get("diagnostic", ""))


@dataclass
class TableConfig:
    seed: int = 0
    search: SearchConfig = field(default_factory=SearchConfig)
    use_constraints: bool = True


# -- certificates ----------------------------------------------------------------

def _certificate_setup(summary: ExhaustiveSummary, constraints: ConstraintSet, n_extra: int):
    base = signature_universe(summary)
    extra_names = [f"_t{i}" for i in range(n_extra)]
    rab_names = [f"_r{i}" for i in range(len(constraints.nonvanishing()))]
    slots = base.of_class(VarClass.SLOT)
    rest = [n for n in base.names if n not in slots]
    universe = VarUniverse.build(
        [(s, VarClass.SLOT) for s in slots]
        + [(n, VarClass.AUXILIARY) for n in extra_names + rab_names]
        + [(n, base.class_of(n)) for n in rest]
    )
    # slots first: every gamma - phi generator has phi as leading term
    return universe, MonomialOrder.lex(universe.names), extra_names, rab_names


def _constraint_generators(constraints: ConstraintSet, universe: VarUniverse, rab_names):
    gens = []
    for name, g in zip(rab_names, constraints.nonvanishing()):
        gens.append(Polynomial.var(universe, name) * g.to_universe(universe) - 1)
    gens += [g.to_universe(universe) for g in constraints.equations()]
    return gens


def unit_ideal(summary: ExhaustiveSummary, constraints: ConstraintSet, base_gens: Sequence[Polynomial],
               extra: Sequence, use_constraints: bool = True) -> bool:
    """Whether ``base_gens`` plus ``extra`` (and constraint inverses) generate (1).

    ``extra`` items are either polynomials (added as is) or ``("inverse", p)``
    pairs meaning ``t*p - 1`` for a fresh ``t``.
    """
    n_inv = sum(1 for e in extra if isinstance(e, tuple))
    cons = constraints if use_constraints else ConstraintSet()
    universe, order, t_names, rab_names = _certificate_setup(summary, cons, n_inv)
    gens = [g.to_universe(universe) for g in base_gens]
    t_iter = iter(t_names)
    for e in extra:
        if isinstance(e, tuple):
            gens.append(Polynomial.var(universe, next(t_iter)) * e[1].to_universe(universe) - 1)
        else:
            gens.append(e.to_universe(universe))
    gens += _constraint_generators(cons, universe, rab_names)
    return groebner_basis(gens, order, universe).is_unit()


def summary_equations(summary: ExhaustiveSummary) -> list[Polynomial]:
    """gamma_k - phi_k for all slots plus denominator relations (no pattern)."""
    u = signature_universe(summary)
    gens = [e.gamma.to_universe(u) - Polynomial.var(u, e.slot) for e in summary.entries]
    gens += [r.to_universe(u) for r in summary.inverse_relations()]
    return gens


# -- numeric regions -------------------------------------------------------------

def _region(summary: ExhaustiveSummary, constraints: ConstraintSet, config: SearchConfig,
            zero: Sequence[str], nonzero: Sequence[str], free: Sequence[str]) -> Region:
    variables = tuple(v for v in summary.faults if v not in zero) + tuple(summary.parameters)
    bounds = default_bounds(variables, summary.faults, config, constraints)
    for v, (lo, hi) in bounds.items():
        if lo > hi:
            raise RegionInfeasible(f"empty sampling interval for {v}: [{lo}, {hi}]")
    fixed = {f: 0 for f in zero}
    return Region(
        variables=variables,
        bounds=bounds,
        fixed={k: v for k, v in fixed.items()},
        nonzero=frozenset(nonzero),
        maybe_zero=frozenset(free),
        constraints=constraints,
        inverses=tuple((w, d) for w, d in summary.inverses),
        margin=config.margin,
    )


def _seed(global_seed: int, *parts: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([global_seed, *parts])


def _search_cell(c_sub: Polynomial, region: Region, config: TableConfig, seed) -> CellValue:
    res = WitnessSearch(c_sub, region, config.search, seed).run()
    wit = {}
    if res.zero is not None:
        wit["zero"] = res.zero.to_json()
    if res.nonzero is not None:
        wit["nonzero"] = res.nonzero.to_json()
    if res.zero is not None and res.nonzero is not None:
        return CellValue(Cell.MAY_VANISH, WITNESS_PAIR, wit)
    if res.zero is None and res.nonzero is not None and res.min_scaled >= NONZERO_FLOOR:
        return CellValue(Cell.NONZERO, EXHAUSTED, wit,
                         f"{res.samples} feasible samples, min scaled value {res.min_scaled:.3g}")
    if res.all_zero or res.nonzero is None:
        return CellValue(Cell.MAY_VANISH, EXHAUSTED, wit,
                         "component vanished at every sample but no algebraic certificate was found")
    return CellValue(Cell.MAY_VANISH, EXHAUSTED, wit,
                     f"inconclusive: scaled value reached {res.min_scaled:.3g} without a confirmed root")


def cell_value(component: Polynomial, pattern: FaultPattern, summary: ExhaustiveSummary,
               constraints: ConstraintSet, *, basis: PatternBasis | None = None,
               config: TableConfig | None = None, seed=None) -> CellValue:
    """Expected behaviour of ``component`` when a fault of ``pattern`` acts."""
    config = config or TableConfig()
    if basis is None:
        basis = pattern_basis(summary, pattern)
    if in_ideal(component, basis):
        return CellValue(Cell.ZERO, IDEAL_MEMBERSHIP)
    e_n = build_e_n(summary, pattern)
    if unit_ideal(summary, constraints, e_n, [("inverse", component)], config.use_constraints):
        return CellValue(Cell.ZERO, GB_UNIT, diagnostic="component cannot be nonzero")
    if unit_ideal(summary, constraints, e_n, [component], config.use_constraints):
        return CellValue(Cell.NONZERO, GB_UNIT)
    c_sub = substitute_summary(component, summary, pattern)
    try:
        region = _region(summary, constraints, config.search, pattern.inactive, pattern.active, ())
        return _search_cell(c_sub, region, config, seed if seed is not None else _seed(config.seed))
    except RegionInfeasible as exc:
        raise CellError(f"constraint region is numerically infeasible: {exc}", pattern) from None


# -- table -----------------------------------------------------------------------

@dataclass
class SignatureTable:
    patterns: list[FaultPattern]
    components: list[str]
    cells: list[list[CellValue]]
    input_independent: list[bool]

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.patterns), len(self.components)

    def value(self, row: int, col: int) -> Cell:
        return self.cells[row][col].value

    def row_values(self, row: int) -> tuple[Cell, ...]:
        return tuple(c.value for c in self.cells[row])

    def row_index(self, pattern: FaultPattern | str) -> int:
        label = pattern.label if isinstance(pattern, FaultPattern) else pattern
        for i, p in enumerate(self.patterns):
            if p.label == label:
                return i
        raise KeyError(label)

    def symbols(self) -> list[list[str]]:
        return [[c.value.value for c in row] for row in self.cells]

    def to_markdown(self) -> str:
        head = "| f | " + " | ".join(f"ASig{k + 1}" for k in range(len(self.components))) + " |"
        sep = "|---|" + "---|" * len(self.components)
        rows = [f"| {p} | " + " | ".join(s for s in sym) + " |"
                for p, sym in zip(self.patterns, self.symbols())]
        legend = ["", "Components:"]
        for k, (c, ind) in enumerate(zip(self.components, self.input_independent)):
            legend.append(f"- ASig{k + 1} = {c}" + ("" if ind else "  (input-dependent)"))
        return "\n".join([head, sep, *rows, *legend]) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pattern"] + [f"ASig{k + 1}" for k in range(len(self.components))])
        for p, sym in zip(self.patterns, self.symbols()):
            w.writerow([p.label] + sym)
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "faults": list(self.patterns[0].faults) if self.patterns else [],
            "patterns": [p.label for p in self.patterns],
            "components": list(self.components),
            "input_independent": list(self.input_independent),
            "cells": [[c.to_json() for c in row] for row in self.cells],
        }

    @classmethod
    def from_json(cls, d: dict) -> "SignatureTable":
        faults = d["faults"]
        return cls(
            [FaultPattern.parse(lbl, faults) for lbl in d["patterns"]],
            list(d["components"]),
            [[CellValue.from_json(c) for c in row] for row in d["cells"]],
            list(d["input_independent"]),
        )


def input_independent(component: Polynomial, summary: ExhaustiveSummary) -> bool:
    return not (component.variables() & summary.input_slots())


def build_table(sig: AlgebraicSignature, summary: ExhaustiveSummary, constraints: ConstraintSet, *,
                bases: Sequence[PatternBasis] | None = None, config: TableConfig | None = None) -> SignatureTable:
    """Evaluate every (pattern, component) cell."""
    if sig.is_empty:
        raise ValueError("cannot tabulate an empty signature")
    config = config or TableConfig()
    patterns = all_patterns(summary.faults)
    by_label = {pb.pattern.label: pb for pb in bases} if bases else {}
    cells = []
    for r, pattern in enumerate(patterns):
        pb = by_label.get(pattern.label) or pattern_basis(summary, pattern)
        row = []
        for k, comp in enumerate(sig.components):
            try:
                row.append(cell_value(comp, pattern, summary, constraints, basis=pb,
                                      config=config, seed=_seed(config.seed, r, k)))
            except CellError as exc:
                raise CellError(str(exc).split(" (")[0], pattern, k) from None
        cells.append(row)
    table = SignatureTable(
        patterns,
        [c.format() for c in sig.components],
        cells,
        [input_independent(c, summary) for c in sig.components],
    )
    empty_row = table.row_index("{}")
    if any(v is not Cell.ZERO for v in table.row_values(empty_row)):
        raise CellError("fault-free row is not identically zero", patterns[empty_row])
    return table


# -- verdicts --------------------------------------------------------------------

def _opposed(a: Cell, b: Cell) -> bool:
    return {a, b} == {Cell.ZERO, Cell.NONZERO}


def separating_columns(table: SignatureTable, i: int, j: int) -> list[int]:
    return [k for k in range(len(table.components)) if _opposed(table.value(i, k), table.value(j, k))]


@dataclass
class DiagnosabilityVerdict:
    patterns: list[FaultPattern]
    discriminable: list[list[bool]]
    input_strong_pairs: list[list[bool]]
    verdict: str
    detectable: dict[str, bool]
    sufficient_columns: list[int]
    notes: list[str] = field(default_factory=list)

    def summary(self) -> str:
        text = {
            "input-strong": "input-strongly algebraically diagnosable",
            "strong-given-input-dependence": "all patterns discriminable, but some pairs only "
                                             "through input-dependent components",
            "undecided": "not all pattern pairs are discriminable by the table",
        }[self.verdict]
        lines = [f"verdict: {text}"]
        if self.sufficient_columns:
            cols = ", ".join(f"ASig{k + 1}" for k in self.sufficient_columns)
            lines.append(f"input-independent columns sufficient for discrimination: {cols}")
        undetectable = [lbl for lbl, ok in self.detectable.items() if not ok and lbl != "{}"]
        lines.append("detectable: all faulty patterns" if not undetectable
                     else f"not detectable: {', '.join(undetectable)}")
        lines += self.notes
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "patterns": [p.label for p in self.patterns],
            "discriminable": self.discriminable,
            "input_strong_pairs": self.input_strong_pairs,
            "verdict": self.verdict,
            "detectable": self.detectable,
            "sufficient_columns": self.sufficient_columns,
            "notes": self.notes,
        }

    @classmethod
    def from_json(cls, d: dict, faults: Sequence[str]) -> "DiagnosabilityVerdict":
        return cls([FaultPattern.parse(lbl, faults) for lbl in d["patterns"]], d["discriminable"],
                   d["input_strong_pairs"], d["verdict"], dict(d["detectable"]),
                   list(d["sufficient_columns"]), list(d["notes"]))


def _separates_all(table: SignatureTable, cols: Sequence[int]) -> bool:
    n = len(table.patterns)
    for i, j in itertools.combinations(range(n), 2):
        if not any(_opposed(table.value(i, k), table.value(j, k)) for k in cols):
            return False
    return True


def diagnosability_verdict(table: SignatureTable) -> DiagnosabilityVerdict:
    n = len(table.patterns)
    indep = [k for k, ok in enumerate(table.input_independent) if ok]
    disc = [[False] * n for _ in range(n)]
    strong = [[False] * n for _ in range(n)]
    for i, j in itertools.combinations(range(n), 2):
        cols = separating_columns(table, i, j)
        disc[i][j] = disc[j][i] = bool(cols)
        strong[i][j] = strong[j][i] = any(k in indep for k in cols)
    all_pairs = list(itertools.combinations(range(n), 2))
    if all(strong[i][j] for i, j in all_pairs):
        verdict = "input-strong"
    elif all(disc[i][j] for i, j in all_pairs):
        verdict = "strong-given-input-dependence"
    else:
        verdict = "undecided"
    sufficient: list[int] = []
    if verdict == "input-strong":
        for size in range(1, len(indep) + 1):
            found = next((list(c) for c in itertools.combinations(indep, size) if _separates_all(table, c)), None)
            if found:
                sufficient = found
                break
    empty = table.row_index("{}")
    detectable = {p.label: (i != empty and disc[i][empty]) for i, p in enumerate(table.patterns)}
    notes = ["input-weak diagnosability (search over inputs) is not assessed"]
    return DiagnosabilityVerdict(list(table.patterns), disc, strong, verdict, detectable, sufficient, notes)


# -- criterion 3 -------------------------------------------------------------------

@dataclass
class Criterion3Result:
    outcome: str  # "holds" | "fails" | "undecided"
    first: str    # "empty" | "nonempty" | "unknown"
    second: str
    witnesses: dict = field(default_factory=dict)


def _emptiness(summary, constraints, gens_extra, region: Region | None, poly_sub: Polynomial,
               want: str, config: TableConfig, seed) -> tuple[str, dict]:
    base = summary_equations(summary)
    if unit_ideal(summary, constraints, base, gens_extra, config.use_constraints):
        return "empty", {}
    if region is None:
        return "unknown", {}
    try:
        res = WitnessSearch(poly_sub, region, config.search, seed).run(
            want_zero=(want == "zero"), want_nonzero=(want == "nonzero"))
    except RegionInfeasible:
        return "unknown", {}
    w = res.zero if want == "zero" else res.nonzero
    if w is not None:
        return "nonempty", {want: w.to_json()}
    return "unknown", {}


def criterion3_check(sig_component_index: int, fault_index: int, sig: AlgebraicSignature,
                     summary: ExhaustiveSummary, constraints: ConstraintSet, *,
                     orientation: str = "vanishes-iff-fault-absent",
                     config: TableConfig | None = None) -> Criterion3Result:
    """Check that a component's vanishing is equivalent to a fault's (non)occurrence.

    ``orientation="vanishes-iff-fault-absent"`` tests ``ASig_j = 0 <=> f_i = 0``,
    i.e. that {ASig_j = 0, f_i != 0} and {ASig_j != 0, f_i = 0} are both empty.
    ``orientation="literal"`` tests ``ASig_j = 0 <=> f_i != 0`` through
    {ASig_j = 0, f_i = 0} and {ASig_j != 0, f_i != 0}.
    Indices are 1-based.
    """
    config = config or TableConfig()
    if not 1 <= sig_component_index <= len(sig):
        raise IndexError("component index out of range")
    if not 1 <= fault_index <= len(summary.faults):
        raise IndexError("fault index out of range")
    comp = sig.components[sig_component_index - 1]
    fault = summary.faults[fault_index - 1]
    u = signature_universe(summary)
    fpoly = Polynomial.var(u, fault)
    c_sub = substitute_summary(comp, summary)
    others = [f for f in summary.faults if f != fault]

    def region(fault_zero: bool) -> Region | None:
        try:
            if fault_zero:
                return _region(summary, constraints, config.search, [fault], [], others)
            return _region(summary, constraints, config.search, [], [fault], others)
        except RegionInfeasible:
            return None

    if orientation == "literal":
        specs = [(True, "zero"), (False, "nonzero")]
    elif orientation == "vanishes-iff-fault-absent":
        specs = [(False, "zero"), (True, "nonzero")]
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    results, wits = [], {}
    for n, (fault_zero, want) in enumerate(specs):
        extra = [fpoly] if fault_zero else [("inverse", fpoly)]
        extra.append(comp if want == "zero" else ("inverse", comp))
        status, w = _emptiness(summary, constraints, extra, region(fault_zero), c_sub, want,
                               config, _seed(config.seed, 1000 + sig_component_index, fault_index, n))
        results.append(status)
        if w:
            wits[f"set{n + 1}"] = w
    if all(s == "empty" for s in results):
        outcome = "holds"
    elif any(s == "nonempty" for s in results):
        outcome = "fails"
    else:
        outcome = "undecided"
    return Criterion3Result(outcome, results[0], results[1], wits)


def reference_component(text: str, sig: AlgebraicSignature) -> Polynomial:
    """Parse a component written over the signature universe (helper for tests/CLI)."""
    return parse_poly(text, sig.universe)
