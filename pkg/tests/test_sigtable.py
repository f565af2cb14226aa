import pytest

from faultsig.bundle import EmptySignature, analyze
from faultsig.model import load_model_dict
from faultsig.sigtable import (
    Cell,
    SignatureTable,
    criterion3_check,
    diagnosability_verdict,
    separating_columns,
)

from helpers import (
    EXAMPLE1_COMPONENTS,
    EXAMPLE1_TABLE,
    WATERTANK_COMPONENTS,
    WATERTANK_SUFFICIENT,
    WATERTANK_TABLE,
    column_map,
    table_in_reference_order,
)


def test_example1_table_cell_for_cell(example1_bundle):
    cols = column_map(example1_bundle.signature, EXAMPLE1_COMPONENTS)
    assert table_in_reference_order(example1_bundle.table, cols) == EXAMPLE1_TABLE


def test_watertank_table_cell_for_cell(watertank_bundle):
    cols = column_map(watertank_bundle.signature, WATERTANK_COMPONENTS)
    assert table_in_reference_order(watertank_bundle.table, cols) == WATERTANK_TABLE


def test_watertank_input_dependence(watertank_bundle):
    cols = column_map(watertank_bundle.signature, WATERTANK_COMPONENTS)
    indep = [watertank_bundle.table.input_independent[k] for k in cols]
    # only the component carrying phi2 (the u coefficient) depends on the input
    assert indep == [True, True, False, True, True, True]


def test_every_cell_has_certificate(watertank_bundle):
    for row in watertank_bundle.table.cells:
        for cell in row:
            assert cell.certificate
            if cell.value == Cell.MAY_VANISH:
                assert set(cell.witnesses) >= {"zero", "nonzero"}


def test_watertank_verdict(watertank_bundle):
    v = watertank_bundle.verdict
    assert v.verdict == "input-strong"
    assert "input-strongly algebraically diagnosable" in v.summary()
    assert all(v.detectable[p] for p in v.detectable if p != "{}")
    cols = column_map(watertank_bundle.signature, WATERTANK_COMPONENTS)
    reference = sorted(cols[k - 1] for k in WATERTANK_SUFFICIENT)
    assert len(v.sufficient_columns) == len(reference)
    # the reference column set separates every pair as well
    t = watertank_bundle.table
    n = len(t.patterns)
    for i in range(n):
        for j in range(i + 1, n):
            assert set(separating_columns(t, i, j)) & set(reference)


def test_example1_verdict(example1_bundle):
    v = example1_bundle.verdict
    assert v.verdict == "input-strong"
    assert all(all(row[j] for j in range(len(row)) if j != i) for i, row in enumerate(v.discriminable))


def test_verdict_undecided_when_rows_collide(example1_bundle):
    t = example1_bundle.table
    # keep only the column that cannot tell {} from {2}
    k = column_map(example1_bundle.signature, ["phi2 - 1"])[0]
    sub = SignatureTable(t.patterns, [t.components[k]], [[row[k]] for row in t.cells],
                         [t.input_independent[k]])
    assert diagnosability_verdict(sub).verdict == "undecided"


def test_table_json_roundtrip(watertank_bundle):
    t = watertank_bundle.table
    back = SignatureTable.from_json(t.to_json())
    assert back.symbols() == t.symbols()
    assert back.components == t.components


def test_markdown_and_csv(example1_bundle):
    md = example1_bundle.table.to_markdown()
    assert md.startswith("| f | ASig1 | ASig2 | ASig3 |")
    csv = example1_bundle.table.to_csv().splitlines()
    assert len(csv) == 1 + 4


def test_criterion3_fault_absence_equivalence(example1_bundle):
    b = example1_bundle
    k = column_map(b.signature, ["phi2 - 1"])[0]
    res = criterion3_check(k + 1, 1, b.signature, b.model.summary, b.model.constraints)
    assert res.outcome == "holds"
    assert res.first == res.second == "empty"


def test_criterion3_literal_orientation_fails(example1_bundle):
    b = example1_bundle
    k = column_map(b.signature, ["phi2 - 1"])[0]
    res = criterion3_check(k + 1, 1, b.signature, b.model.summary, b.model.constraints,
                           orientation="literal")
    assert res.outcome == "fails"


def test_criterion3_index_checks(example1_bundle):
    b = example1_bundle
    with pytest.raises(IndexError):
        criterion3_check(9, 1, b.signature, b.model.summary, b.model.constraints)
    with pytest.raises(ValueError):
        criterion3_check(1, 1, b.signature, b.model.summary, b.model.constraints, orientation="x")


def test_empty_signature_reported():
    src = {"name": "blind", "parameters": ["p1", "p2"], "faults": ["f1"],
           "summary": [{"slot": "phi1", "gamma": "p1"}, {"slot": "phi2", "gamma": "p2 + 1"}]}
    with pytest.raises(EmptySignature) as info:
        analyze(load_model_dict(src))
    assert info.value.bundle.table is None
    assert info.value.bundle.signature.warnings


# -- table invariants ------------------------------------------------------------

def _point(raw, pattern):
    from fractions import Fraction
    pt = {k: Fraction(v) for k, v in raw.items()}
    pt.update({f: Fraction(0) for f in pattern.inactive})
    return pt


@pytest.mark.parametrize("name", ["example1", "watertank"])
def test_may_vanish_witnesses_reproduce(name, request):
    from faultsig.siggen import substitute_summary
    b = request.getfixturevalue(f"{name}_bundle")
    seen = 0
    for pattern, row in zip(b.table.patterns, b.table.cells):
        for comp, cell in zip(b.signature.components, row):
            if cell.value != Cell.MAY_VANISH:
                continue
            seen += 1
            sub = substitute_summary(comp, b.model.summary, pattern)
            zero = sub.evaluate(_point(cell.witnesses["zero"]["point"], pattern))
            nonzero = sub.evaluate(_point(cell.witnesses["nonzero"]["point"], pattern))
            if cell.witnesses["zero"]["kind"] == "exact":
                assert zero == 0
            else:
                assert abs(float(zero)) < 1e-9
            assert nonzero != 0
    if name == "watertank":
        assert seen == 3


@pytest.mark.parametrize("name", ["example1", "watertank"])
def test_zero_cells_vanish_exactly(name, request):
    import random
    from helpers import exact_value, random_fault_point
    b = request.getfixturevalue(f"{name}_bundle")
    rng = random.Random(11)
    for pattern, row in zip(b.table.patterns, b.table.cells):
        for _ in range(10):
            point = random_fault_point(b.model, pattern, rng)
            for comp, cell in zip(b.signature.components, row):
                v = exact_value(comp, b.model, pattern, point)
                if cell.value == Cell.ZERO:
                    assert v == 0
                elif cell.value == Cell.NONZERO:
                    assert v != 0


@pytest.mark.parametrize("name", ["example1", "watertank"])
def test_empty_row_zero_and_no_all_zero_column(name, request):
    t = request.getfixturevalue(f"{name}_bundle").table
    empty = t.row_index("{}")
    assert all(c == Cell.ZERO for c in t.row_values(empty))
    assert len(t.patterns) == 2 ** len(t.patterns[-1].indices)
    for k in range(len(t.components)):
        assert any(t.value(i, k) != Cell.ZERO for i in range(len(t.patterns)))


def test_discriminability_symmetric(watertank_bundle):
    d = watertank_bundle.verdict.discriminable
    assert d == [list(r) for r in zip(*d)]


def test_no_component_in_every_pattern_ideal(watertank_bundle):
    from faultsig.siggen import in_ideal, pattern_bases
    bases = pattern_bases(watertank_bundle.model.summary)
    assert len(bases) == 8
    for c in watertank_bundle.signature.components:
        assert not all(in_ideal(c, pb) for pb in bases)


def test_criterion3_second_fault(example1_bundle):
    b = example1_bundle
    k = column_map(b.signature, ["p2 + phi2 - phi3"])[0]
    res = criterion3_check(k + 1, 2, b.signature, b.model.summary, b.model.constraints)
    assert res.outcome == "holds"


def test_criterion3_wrong_fault_fails(example1_bundle):
    b = example1_bundle
    k = column_map(b.signature, ["phi2 - 1"])[0]
    res = criterion3_check(k + 1, 2, b.signature, b.model.summary, b.model.constraints)
    assert res.outcome == "fails"
