from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from faultsig.polycore import (
    EliminationOrderError,
    MonomialOrder,
    Polynomial,
    PolySyntaxError,
    UnknownVariableError,
    VarUniverse,
    eliminate,
    groebner_basis,
    is_groebner,
    normal_form,
    parse_poly,
    reduce_by,
    s_polynomial,
)

U = VarUniverse.of("x y z")


def P(text, u=U):
    return parse_poly(text, u)


# -- arithmetic ----------------------------------------------------------------

def test_exact_rational_coefficients():
    p = P("1/3*x + 1/6*x")
    assert p == P("1/2*x")
    assert p.terms[(1, 0, 0)] == Fraction(1, 2)


def test_zero_terms_are_dropped():
    assert (P("x + y") - P("y + x")).is_zero()
    assert not P("x - x + 1").is_zero()


def test_power_and_product():
    assert P("(x + y)^2") == P("x^2 + 2*x*y + y^2")
    assert P("(x - 1)*(x + 1)") == P("x^2 - 1")


def test_evaluate_and_subs():
    p = P("x^2*y - 3*z + 1/2")
    assert p.evaluate({"x": 2, "y": Fraction(1, 4), "z": 1}) == Fraction(-3, 2)
    assert p.subs({"x": 2}) == P("4*y - 3*z + 1/2")


def test_leading_term_lex():
    order = MonomialOrder.lex("x y z")
    mon, c = P("3*y^5 + 2*x*z").leading_term(order)
    assert mon == (1, 0, 1) and c == 2
    order = MonomialOrder.lex("z y x")
    mon, c = P("3*y^5 + 2*x*z").leading_term(order)
    assert mon == (1, 0, 1)
    mon, c = P("3*y^5 + 2*x").leading_term(order)
    assert mon == (0, 5, 0)


def test_format_parses_back():
    p = P("-1/2*x^2*y + 3*z - 7")
    assert P(p.format()) == p


@pytest.mark.parametrize("text", ["x +", "x^-1", "x^1.5", "(x", "2**"])
def test_parse_errors(text):
    with pytest.raises(PolySyntaxError):
        P(text)


def test_unknown_variable():
    with pytest.raises(UnknownVariableError):
        P("x + w")


# -- Groebner bases -------------------------------------------------------------

def _sympy_basis(gens, names):
    syms = sympy.symbols(names)
    exprs = [sympy.sympify(g.format().replace("^", "**")) for g in gens]
    G = sympy.groebner(exprs, *syms, order="lex")
    return [sympy.Poly(g, *syms) for g in G.exprs]


def _as_sympy(p, names):
    return sympy.Poly(sympy.sympify(p.format().replace("^", "**")), *sympy.symbols(names))


@pytest.mark.parametrize("gens", [
    ["x^2 + y^2 - 1", "x - y"],
    ["x*y - 1", "y^2 - x"],
    ["x^2 - y", "x^3 - z"],
    ["x*y*z - 1", "x - y", "y - z^2"],
])
def test_reduced_basis_matches_independent_implementation(gens):
    gens = [P(g) for g in gens]
    gb = groebner_basis(gens, MonomialOrder.lex("x y z"))
    ours = sorted(str(_as_sympy(g, "x y z").as_expr()) for g in gb)
    ref = sorted(str(g.monic().as_expr()) for g in _sympy_basis(gens, "x y z"))
    assert ours == ref


def test_unit_ideal():
    gb = groebner_basis([P("x*y - 1"), P("x")], MonomialOrder.lex("x y z"))
    assert gb.is_unit()


def test_basis_independent_of_generator_order():
    gens = [P("x^2 - y"), P("x*y - z"), P("y^2 - x*z")]
    order = MonomialOrder.lex("x y z")
    a = groebner_basis(gens, order)
    b = groebner_basis(list(reversed(gens)), order)
    assert a.polys == b.polys


def test_elimination():
    # x = t, y = t^2, z = t^3: eliminating t leaves the twisted cubic
    u = VarUniverse.of("t x y z")
    gens = [P("x - t", u), P("y - t^2", u), P("z - t^3", u)]
    gb = groebner_basis(gens, MonomialOrder.lex("t x y z"))
    kept = eliminate(gb, ["x", "y", "z"])
    assert kept
    for q in [P("y - x^2", u), P("z - x^3", u), P("z - x*y", u)]:
        assert gb.contains(q)
    for g in kept:
        assert "t" not in g.variables()


def test_elimination_requires_elimination_order():
    u = VarUniverse.of("t x")
    gb = groebner_basis([P("x - t^2", u)], MonomialOrder.lex("x t"))
    with pytest.raises(EliminationOrderError):
        eliminate(gb, ["x"])


def test_normal_form_is_remainder():
    order = MonomialOrder.lex("x y z")
    gb = groebner_basis([P("x - y"), P("y - z")], order)
    assert normal_form(P("x^2 - z^2"), gb).is_zero()
    assert normal_form(P("x + 1"), gb) == P("z + 1")


# -- property: random small ideals --------------------------------------------

_names = ("x", "y", "z", "w")


@st.composite
def small_ideals(draw):
    nvars = draw(st.integers(1, 4))
    u = VarUniverse.of(_names[:nvars])
    ngens = draw(st.integers(1, 4))
    gens = []
    for _ in range(ngens):
        nterms = draw(st.integers(1, 3))
        terms = {}
        for _ in range(nterms):
            exps = draw(st.lists(st.integers(0, 3), min_size=nvars, max_size=nvars))
            while sum(exps) > 3:
                exps[exps.index(max(exps))] -= 1
            terms[tuple(exps)] = Fraction(draw(st.integers(-5, 5)), draw(st.integers(1, 3)))
        gens.append(Polynomial(u, terms))
    return u, gens


@settings(max_examples=40, deadline=None)
@given(small_ideals())
def test_property_basis_generates_and_is_groebner(data):
    u, gens = data
    order = MonomialOrder.for_universe(u)
    gb = groebner_basis(gens, order, u)
    for g in gens:
        assert normal_form(g, gb).is_zero()
    assert is_groebner(list(gb.polys), order)


@settings(max_examples=40, deadline=None)
@given(small_ideals())
def test_property_s_polynomials_reduce_to_zero(data):
    u, gens = data
    order = MonomialOrder.for_universe(u)
    gb = list(groebner_basis(gens, order, u).polys)
    for i in range(len(gb)):
        for j in range(i + 1, len(gb)):
            assert reduce_by(s_polynomial(gb[i], gb[j], order), gb, order).is_zero()


@settings(max_examples=60, deadline=None)
@given(small_ideals())
def test_property_ring_axioms(data):
    u, gens = data
    p = gens[0]
    q = gens[-1]
    r = Polynomial(u, {tuple([1] + [0] * (len(u) - 1)): 2})
    assert p * (q + r) == p * q + p * r
    assert (p + q) - q == p
    assert p * q == q * p
