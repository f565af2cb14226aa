"""Model files: exhaustive summary, constraints and estimation mapping.

A model file is YAML::

    name: example1
    parameters: [p1, p2]
    faults: [f1, f2]
    summary:
      - {slot: phi1, gamma: "1", monomial: "y''", depends_on_input: false}
      - {slot: phi2, gamma: "f1^2*p1^2+1", monomial: "y'", depends_on_input: false}
    constraints: ["p1 > 0", "0 <= f3 < 1"]
    box: {f3: [0, 0.99]}          # optional sampling box overrides
    known: {p5: 1}                # optional numeric parameter values
    estimation:                   # optional, used by the numeric stage
      xf: [phi1, phi2, phi3, phi4]
      xf_sign: [1, 1, 1, 1]
      x0: [phi2, phi3]
      x0_sign: [-1, 1]
      fixed: {phi5: 2}

A summary entry may carry ``denominator: "<expr>"``; the entry is then read
as ``gamma * w`` with a fresh auxiliary ``w`` tied by ``w*denominator - 1``.
"""

from __future__ import annotations

import copy
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

import yaml

from .polycore import Polynomial, VarClass, VarUniverse, parse_poly


class ModelError(ValueError):
    """Malformed model file."""


_OPS = ("<=", ">=", "!=", "==", "<", ">", "=")
_CMP_SPLIT = re.compile(r"(<=|>=|!=|==|<|>|=)")


@dataclass(frozen=True)
class Constraint:
    """``poly op 0`` with ``op`` one of ``< <= > >= != ==``."""

    poly: Polynomial
    op: str
    text: str = ""

    def holds(self, value) -> bool:
        return {
            "<": value < 0,
            "<=": value <= 0,
            ">": value > 0,
            ">=": value >= 0,
            "!=": value != 0,
            "==": value == 0,
        }[self.op]

    @property
    def implies_nonzero(self) -> bool:
        return self.op in ("<", ">", "!=")

    @property
    def is_equation(self) -> bool:
        return self.op == "=="


def parse_constraint(text: str, universe: VarUniverse) -> list[Constraint]:
    """Parse ``a op b [op c ...]`` into one constraint per comparison."""
    parts = _CMP_SPLIT.split(text)
    if len(parts) < 3 or len(parts) % 2 == 0:
        raise ModelError(f"constraint {text!r} needs a comparison operator")
    exprs = [parse_poly(p, universe) for p in parts[0::2]]
    ops = parts[1::2]
    out = []
    for lhs, op, rhs in zip(exprs, ops, exprs[1:]):
        op = "==" if op == "=" else op
        out.append(Constraint(lhs - rhs, op, text.strip()))
    return out


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...] = ()

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return len(self.constraints)

    def satisfied(self, point: Mapping[str, Any]) -> bool:
        return all(c.holds(c.poly.evaluate(point)) for c in self.constraints)

    def nonvanishing(self) -> list[Polynomial]:
        """Polynomials the constraints force to be nonzero."""
        return [c.poly for c in self.constraints if c.implies_nonzero]

    def equations(self) -> list[Polynomial]:
        return [c.poly for c in self.constraints if c.is_equation]


@dataclass(frozen=True)
class SummaryEntry:
    slot: str
    gamma: Polynomial
    monomial: str = ""
    depends_on_input: bool = False


@dataclass(frozen=True)
class Estimation:
    """How the linear-system unknowns map onto summary slots."""

    xf: tuple[str, ...] = ()
    xf_sign: tuple[int, ...] = ()
    x0: tuple[str, ...] = ()
    x0_sign: tuple[int, ...] = ()
    fixed: tuple[tuple[str, Fraction], ...] = ()


@dataclass(frozen=True)
class ExhaustiveSummary:
    parameters: tuple[str, ...]
    faults: tuple[str, ...]
    entries: tuple[SummaryEntry, ...]
    m0: str = ""
    # auxiliary inverse variables introduced for denominators: (name, denominator)
    inverses: tuple[tuple[str, Polynomial], ...] = ()

    def __post_init__(self):
        if not self.entries:
            raise ModelError("summary needs at least one entry")
        slots = [e.slot for e in self.entries]
        if len(set(slots)) != len(slots):
            raise ModelError("summary slot names must be unique")
        allowed = set(self.parameters) | set(self.faults) | {w for w, _ in self.inverses}
        for e in self.entries:
            extra = e.gamma.variables() - allowed
            if extra:
                raise ModelError(f"slot {e.slot} uses undeclared variables {sorted(extra)}")

    @property
    def slots(self) -> tuple[str, ...]:
        return tuple(e.slot for e in self.entries)

    @property
    def universe(self) -> VarUniverse:
        """Universe of the gamma polynomials: inverses, faults, parameters."""
        return VarUniverse.build(
            [(w, VarClass.AUXILIARY) for w, _ in self.inverses]
            + [(f, VarClass.FAULT) for f in self.faults]
            + [(p, VarClass.PARAMETER) for p in self.parameters]
        )

    def entry(self, slot: str) -> SummaryEntry:
        for e in self.entries:
            if e.slot == slot:
                return e
        raise KeyError(slot)

    def inverse_relations(self) -> list[Polynomial]:
        u = self.universe
        return [Polynomial.var(u, w) * d.to_universe(u) - 1 for w, d in self.inverses]

    def input_slots(self) -> set[str]:
        return {e.slot for e in self.entries if e.depends_on_input}


@dataclass(frozen=True)
class Model:
    name: str
    summary: ExhaustiveSummary
    constraints: ConstraintSet
    box: tuple[tuple[str, float, float], ...] = ()
    known: tuple[tuple[str, Fraction], ...] = ()
    estimation: Estimation = Estimation()
    source: dict = field(default_factory=dict, compare=False, hash=False, repr=False)

    @property
    def box_dict(self) -> dict[str, tuple[float, float]]:
        return {n: (lo, hi) for n, lo, hi in self.box}

    def with_known_parameters(self, values: Mapping[str, Any] | None = None) -> "Model":
        """Substitute numeric parameter values (defaults to the file's ``known``)."""
        values = {k: Fraction(str(v)) if isinstance(v, float) else Fraction(v)
                  for k, v in (dict(self.known) if values is None else values).items()}
        if not values:
            return self
        src = copy.deepcopy(self.source)
        src["parameters"] = [p for p in src["parameters"] if p not in values]
        src.pop("known", None)
        src["substituted"] = {k: str(v) for k, v in values.items()}
        return load_model_dict(src)


def _frac(v) -> Fraction:
    if isinstance(v, float):
        return Fraction(str(v))
    return Fraction(v)


def load_model_dict(data: Mapping[str, Any]) -> Model:
    data = dict(data)
    try:
        params = [str(p) for p in data.get("parameters", [])]
        faults = [str(f) for f in data["faults"]]
        raw_entries = data["summary"]
    except KeyError as exc:
        raise ModelError(f"model is missing required key {exc}") from None
    subst = {k: _frac(v) for k, v in (data.get("substituted") or {}).items()}
    inverse_names = [f"w_{e['slot']}" for e in raw_entries if e.get("denominator")]
    names = inverse_names + faults + params + list(subst)
    if len(set(names)) != len(names):
        raise ModelError("variable names must be unique across parameters and faults")
    full = VarUniverse.build(
        [(w, VarClass.AUXILIARY) for w in inverse_names]
        + [(f, VarClass.FAULT) for f in faults]
        + [(p, VarClass.PARAMETER) for p in params + list(subst)]
    )
    target = VarUniverse.build(
        [(w, VarClass.AUXILIARY) for w in inverse_names]
        + [(f, VarClass.FAULT) for f in faults]
        + [(p, VarClass.PARAMETER) for p in params]
    )

    def poly(text: str) -> Polynomial:
        p = parse_poly(str(text), full)
        if subst:
            p = p.subs(subst)
        return p.to_universe(target)

    entries = []
    inverses = []
    for e in raw_entries:
        try:
            slot = str(e["slot"])
            gamma = poly(e["gamma"])
        except KeyError as exc:
            raise ModelError(f"summary entry {e!r} is missing {exc}") from None
        if e.get("denominator"):
            w = f"w_{slot}"
            d = poly(e["denominator"])
            inverses.append((w, d))
            gamma = gamma * Polynomial.var(target, w)
        entries.append(SummaryEntry(slot, gamma, str(e.get("monomial", "")),
                                    bool(e.get("depends_on_input", False))))
    summary = ExhaustiveSummary(tuple(params), tuple(faults), tuple(entries),
                                str(data.get("m0", "")), tuple(inverses))

    cons = []
    for text in data.get("constraints", []) or []:
        for c in parse_constraint(str(text), full):
            p = c.poly.subs(subst) if subst else c.poly
            if p.is_constant():
                if not Constraint(p, c.op).holds(p.constant_value()):
                    raise ModelError(f"constraint {text!r} is violated by the known parameters")
                continue
            cons.append(Constraint(p.to_universe(target), c.op, c.text))
    for w, d in inverses:
        cons.append(Constraint(d, "!=", f"denominator of {w} is nonzero"))

    box = []
    for name, bounds in (data.get("box") or {}).items():
        if name not in target:
            if name in subst:
                continue
            raise ModelError(f"box refers to unknown variable {name!r}")
        lo, hi = (float(b) for b in bounds)
        if not lo <= hi:
            raise ModelError(f"empty box for {name}")
        box.append((str(name), lo, hi))

    known = tuple((str(k), _frac(v)) for k, v in (data.get("known") or {}).items())
    for k, _ in known:
        if k not in params:
            raise ModelError(f"known value for undeclared parameter {k!r}")

    est = data.get("estimation") or {}
    slots = set(summary.slots)
    for key in ("xf", "x0"):
        for s in est.get(key, []) or []:
            if s not in slots:
                raise ModelError(f"estimation.{key} names unknown slot {s!r}")
    estimation = Estimation(
        tuple(est.get("xf", []) or []),
        tuple(int(s) for s in est.get("xf_sign", [1] * len(est.get("xf", []) or []))),
        tuple(est.get("x0", []) or []),
        tuple(int(s) for s in est.get("x0_sign", [1] * len(est.get("x0", []) or []))),
        tuple((str(k), _frac(v)) for k, v in (est.get("fixed") or {}).items()),
    )
    if len(estimation.xf_sign) != len(estimation.xf) or len(estimation.x0_sign) != len(estimation.x0):
        raise ModelError("estimation sign lists must match their slot lists")

    return Model(str(data.get("name", "model")), summary, ConstraintSet(tuple(cons)),
                 tuple(box), known, estimation, source=copy.deepcopy(dict(data)))


def load_model(path: str | Path) -> Model:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ModelError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ModelError(f"{path}: model file must be a mapping")
    data.setdefault("name", path.stem)
    return load_model_dict(data)


def fixture_path(name: str) -> Path:
    """Path of a shipped model or scenario fixture."""
    return Path(__file__).parent / "data" / name
