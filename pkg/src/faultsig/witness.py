"""Numeric search for vanishing / non-vanishing points of a polynomial.

Used where no algebraic certificate settles a cell.  The search samples a
box-shaped region (tightened by single-variable constraints, filtered by the
remaining ones), then tries to pin an actual root:

* along coordinate lines through the most promising samples, where the
  restriction is univariate and its roots can be found exactly (linear case,
  rational roots) or bracketed by an exact sign change;
* by coordinate descent on the scaled value |c| / sum|terms| otherwise.

Every reported witness is re-checked with exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .model import ConstraintSet
from .polycore import Polynomial

DEFAULT_PARAMETER_BOX = (0.0, 10.0)
DEFAULT_FAULT_BOX = (-10.0, 10.0)
DEFAULT_MARGIN = 1e-3
ZERO_TOL = 1e-12      # scaled value counted as a root after descent
NONZERO_FLOOR = 1e-6  # smallest scaled value accepted as "bounded away from 0"


class RegionInfeasible(RuntimeError):
    pass


@dataclass
class SearchConfig:
    samples: int = 10_000
    margin: float = DEFAULT_MARGIN
    parameter_box: tuple[float, float] = DEFAULT_PARAMETER_BOX
    fault_box: tuple[float, float] = DEFAULT_FAULT_BOX
    box: dict = field(default_factory=dict)
    line_starts: int = 24
    descent_sweeps: int = 40
    max_draws: int = 50


@dataclass
class Region:
    """Sampling region over ``variables`` with ``fixed`` values elsewhere."""

    variables: tuple[str, ...]
    bounds: dict[str, tuple[float, float]]
    fixed: dict[str, Fraction]
    nonzero: frozenset[str]
    maybe_zero: frozenset[str]
    constraints: ConstraintSet
    inverses: tuple[tuple[str, Polynomial], ...] = ()
    margin: float = DEFAULT_MARGIN

    def point(self, values: Mapping[str, object]) -> dict:
        """Complete point: fixed values and inverse variables filled in."""
        pt = dict(self.fixed)
        pt.update(values)
        for w, d in self.inverses:
            dv = d.evaluate(pt)
            pt[w] = (1 / dv) if dv != 0 else math.inf
        return pt

    def feasible(self, values: Mapping[str, object]) -> bool:
        for v in self.variables:
            x = values[v]
            lo, hi = self.bounds[v]
            if not lo <= x <= hi:
                return False
            if v in self.nonzero and x == 0:
                return False
        pt = self.point(values)
        if any(pt[w] == math.inf for w, _ in self.inverses):
            return False
        return self.constraints.satisfied(pt)

    def interval(self, var: str) -> tuple[float, float]:
        return self.bounds[var]

    def sample(self, n: int, rng: np.random.Generator, max_draws: int = 50) -> np.ndarray:
        k = len(self.variables)
        got: list[np.ndarray] = []
        total = 0
        for _ in range(max_draws):
            batch = self._draw(max(n, 64), rng)
            mask = self._mask(batch)
            if mask.any():
                got.append(batch[mask])
                total += int(mask.sum())
            if total >= n:
                break
        if total == 0:
            raise RegionInfeasible("no feasible sample found")
        return np.concatenate(got)[:n] if k else np.zeros((min(total, n), 0))

    def _draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        cols = []
        for v in self.variables:
            lo, hi = self.bounds[v]
            u = rng.uniform(lo, hi, n)
            # half the draws log-uniform in magnitude to reach small scales
            if hi > lo:
                mag_hi = max(abs(lo), abs(hi))
                mag_lo = max(self.margin, 0.0 if lo < 0 < hi else min(abs(lo), abs(hi)))
                if mag_hi > mag_lo > 0:
                    mags = np.exp(rng.uniform(np.log(mag_lo), np.log(mag_hi), n))
                    if lo >= 0:
                        signs = np.ones(n)
                    elif hi <= 0:
                        signs = -np.ones(n)
                    else:
                        signs = rng.choice([-1.0, 1.0], n)
                    logd = signs * mags
                    pick = rng.random(n) < 0.5
                    u = np.where(pick & (logd >= lo) & (logd <= hi), logd, u)
            if v in self.maybe_zero and lo <= 0 <= hi:
                u = np.where(rng.random(n) < 0.25, 0.0, u)
            cols.append(u)
        return np.column_stack(cols) if cols else np.zeros((n, 0))

    def _mask(self, batch: np.ndarray) -> np.ndarray:
        mask = np.ones(len(batch), dtype=bool)
        for j, v in enumerate(self.variables):
            if v in self.nonzero:
                mask &= np.abs(batch[:, j]) >= self.margin
        env = self.env(batch)
        for c in self.constraints:
            val = _numeric(c.poly, env)
            mask &= _holds_with_margin(c.op, val, self.margin)
        return mask

    def env(self, batch: np.ndarray) -> dict:
        env = {v: batch[:, j] for j, v in enumerate(self.variables)}
        n = len(batch)
        for v, x in self.fixed.items():
            env[v] = np.full(n, float(x))
        with np.errstate(divide="ignore", invalid="ignore"):
            for w, d in self.inverses:
                env[w] = 1.0 / _numeric(d, env)
        return env


def _holds_with_margin(op: str, val: np.ndarray, margin: float) -> np.ndarray:
    return {
        "<": val <= -margin,
        ">": val >= margin,
        "<=": val <= 0,
        ">=": val >= 0,
        "!=": np.abs(val) >= margin,
        "==": np.abs(val) <= 1e-12,
    }[op]


def _numeric(poly: Polynomial, env: Mapping[str, np.ndarray]) -> np.ndarray:
    value, _ = evaluate_terms(poly, env)
    return value


def evaluate_terms(poly: Polynomial, env: Mapping[str, np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised value and sum of absolute term values."""
    n = len(next(iter(env.values()))) if env else 1
    names = poly.universe.names
    value = np.zeros(n)
    scale = np.zeros(n)
    for mon, c in poly.terms.items():
        t = np.full(n, float(c))
        for name, e in zip(names, mon):
            if e:
                t = t * env[name] ** e
        value += t
        scale += np.abs(t)
    return value, scale


def scaled_value(value: np.ndarray, scale: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(scale > 0, np.abs(value) / np.where(scale > 0, scale, 1), 0.0)


@dataclass
class Witness:
    point: dict[str, Fraction]
    value: float
    kind: str  # "exact", "bracket", "descent"
    bracket: tuple[dict, dict] | None = None

    def to_json(self) -> dict:
        d = {
            "point": {k: str(v) for k, v in self.point.items()},
            "value": self.value,
            "kind": self.kind,
        }
        if self.bracket:
            d["bracket"] = [{k: str(v) for k, v in b.items()} for b in self.bracket]
        return d


@dataclass
class SearchResult:
    zero: Witness | None
    nonzero: Witness | None
    min_scaled: float
    all_zero: bool
    samples: int


def _exact(values: Mapping[str, float]) -> dict[str, Fraction]:
    return {k: Fraction(v) for k, v in values.items()}


def _univariate(poly: Polynomial, var: str, point: Mapping[str, Fraction]) -> list[Fraction]:
    """Coefficients (low to high) of poly restricted to the line through point along var."""
    i = poly.universe.index(var)
    deg = poly.degree_in(var)
    coeffs = [Fraction(0)] * (deg + 1)
    names = poly.universe.names
    for mon, c in poly.terms.items():
        t = c
        for j, (name, e) in enumerate(zip(names, mon)):
            if e and j != i:
                t *= point[name] ** e
        coeffs[mon[i]] += t
    return coeffs


def _peval(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def _candidate_roots(coeffs: list[Fraction]) -> list[tuple[Fraction | float, bool]]:
    """Real roots as (value, exact?) of a univariate polynomial."""
    while coeffs and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    if len(coeffs) <= 1:
        return []
    out: list = []
    k = 0
    while coeffs[k] == 0:
        k += 1
    if k:
        out.append((Fraction(0), True))
    rest = coeffs[k:]
    if len(rest) == 2:
        out.append((-rest[0] / rest[1], True))
    elif len(rest) > 2:
        top = max(abs(float(c)) for c in rest)
        roots = np.roots([float(c) / top for c in reversed(rest)])
        for r in roots:
            if abs(r.imag) <= 1e-9 * max(1.0, abs(r.real)):
                x = float(r.real)
                q = Fraction(x).limit_denominator(10**6)
                if _peval(rest, q) == 0:
                    out.append((q, True))
                else:
                    out.append((x, False))
    return out


class WitnessSearch:
    """Search one region for zeros and non-zeros of a polynomial."""

    def __init__(self, poly: Polynomial, region: Region, config: SearchConfig, seed):
        self.poly = poly
        self.region = region
        self.config = config
        self.rng = np.random.default_rng(seed)

    def exact_value(self, values: Mapping[str, Fraction]) -> Fraction:
        return self.poly.evaluate(self.region.point(values))

    def run(self, want_zero: bool = True, want_nonzero: bool = True) -> SearchResult:
        region = self.region
        pts = region.sample(self.config.samples, self.rng, self.config.max_draws)
        value, scale = evaluate_terms(self.poly, region.env(pts))
        rel = scaled_value(value, scale)
        finite = np.isfinite(rel)
        rel = np.where(finite, rel, np.inf)
        order = np.argsort(rel, kind="stable")
        min_scaled = float(rel[order[0]])
        all_zero = bool(np.all(value[finite] == 0))

        nonzero = None
        if want_nonzero:
            for idx in order[::-1][:32]:
                cand = _exact(dict(zip(region.variables, pts[idx])))
                if not region.feasible(cand):
                    continue
                v = self.exact_value(cand)
                if v != 0:
                    nonzero = Witness(cand, float(v), "exact")
                    break

        zero = None
        if want_zero:
            starts = list(order[: self.config.line_starts])
            extra = self.rng.choice(len(pts), size=min(8, len(pts)), replace=False)
            starts += [int(i) for i in extra if int(i) not in starts]
            for idx in starts:
                start = _exact(dict(zip(region.variables, pts[idx])))
                if self.exact_value(start) == 0 and region.feasible(start):
                    zero = Witness(start, 0.0, "exact")
                    break
                zero = self._line_search(start)
                if zero is not None:
                    break
            if zero is None and region.variables:
                zero, descent_min = self._descent(pts[order[0]])
                min_scaled = min(min_scaled, descent_min)
        return SearchResult(zero, nonzero, min_scaled, all_zero, len(pts))

    def _line_search(self, start: dict[str, Fraction]) -> Witness | None:
        region = self.region
        if region.inverses:
            # restrictions through inverse variables are not polynomial; descent handles them
            return None
        for var in region.variables:
            lo, hi = region.interval(var)
            sub = dict(region.fixed)
            sub.update((k, v) for k, v in start.items() if k != var)
            coeffs = _univariate(self.poly, var, sub)
            for root, exact in _candidate_roots(coeffs):
                r = float(root)
                if not lo <= r <= hi:
                    continue
                if exact:
                    cand = dict(start)
                    cand[var] = Fraction(root)
                    if region.feasible(cand) and self.exact_value(cand) == 0:
                        return Witness(cand, 0.0, "exact")
                    continue
                delta = 1e-9 * max(1.0, abs(r))
                a, b = Fraction(r - delta), Fraction(r + delta)
                ca, cb = dict(start), dict(start)
                ca[var], cb[var] = a, b
                if not (region.feasible(ca) and region.feasible(cb)):
                    continue
                va, vb = self.exact_value(ca), self.exact_value(cb)
                if va == 0 or vb == 0 or (va > 0) != (vb > 0):
                    mid = dict(start)
                    mid[var] = Fraction(r)
                    return Witness(mid, float(self.exact_value(mid)), "bracket", (ca, cb))
        return None

    def _descent(self, x0: np.ndarray) -> tuple[Witness | None, float]:
        region = self.region
        x = np.array(x0, dtype=float)

        def scaled(xv):
            env = region.env(xv[None, :])
            val, sc = evaluate_terms(self.poly, env)
            r = scaled_value(val, sc)[0]
            if not np.isfinite(r):
                return 1e300
            feas = region._mask(xv[None, :])[0]
            return float(r) if feas else 1e300

        best = scaled(x)
        for _ in range(self.config.descent_sweeps):
            before = best
            for j, var in enumerate(region.variables):
                lo, hi = region.interval(var)
                if hi <= lo:
                    continue

                def f(t, j=j):
                    y = x.copy()
                    y[j] = t
                    return scaled(y)

                res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                                      options={"xatol": 1e-12 * max(1.0, hi - lo)})
                if res.fun < best:
                    best = float(res.fun)
                    x[j] = res.x
            if best < ZERO_TOL or before - best < 1e-15:
                break
        if best >= ZERO_TOL:
            return None, best
        approx = {v: Fraction(float(t)).limit_denominator(10**6) for v, t in zip(region.variables, x)}
        if region.feasible(approx) and self.exact_value(approx) == 0:
            return Witness(approx, 0.0, "exact"), 0.0
        cand = _exact(dict(zip(region.variables, x)))
        if region.feasible(cand):
            return Witness(cand, float(self.exact_value(cand)), "descent"), best
        return None, best


def default_bounds(variables: Sequence[str], faults: Sequence[str], config: SearchConfig,
                   constraints: ConstraintSet) -> dict[str, tuple[float, float]]:
    """Sampling box per variable: defaults, file overrides, then simple bounds."""
    bounds = {}
    for v in variables:
        if v in config.box:
            bounds[v] = tuple(config.box[v])
        elif v in faults:
            bounds[v] = config.fault_box
        else:
            bounds[v] = config.parameter_box
    m = config.margin
    for c in constraints:
        used = c.poly.variables()
        if len(used) != 1 or c.poly.total_degree() != 1:
            continue
        (v,) = used
        if v not in bounds:
            continue
        a = float(c.poly.terms[next(m_ for m_ in c.poly.terms if any(m_))])
        b = float(c.poly.terms.get((0,) * len(c.poly.universe), 0))
        root = -b / a
        lo, hi = bounds[v]
        op = c.op
        if a < 0:
            op = {"<": ">", ">": "<", "<=": ">=", ">=": "<="}.get(op, op)
        if op == ">":
            lo = max(lo, root + m)
        elif op == ">=":
            lo = max(lo, root)
        elif op == "<":
            hi = min(hi, root - m)
        elif op == "<=":
            hi = min(hi, root)
        bounds[v] = (lo, hi)
    return bounds
