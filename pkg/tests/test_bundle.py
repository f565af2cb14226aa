import json

import pytest

from faultsig.bundle import AnalysisBundle, BundleError, content_hash


def test_roundtrip_hash_identical(watertank_bundle, watertank_bundle_file):
    back = AnalysisBundle.load(watertank_bundle_file)
    assert back.hash == watertank_bundle.hash
    assert back.table.symbols() == watertank_bundle.table.symbols()
    assert back.signature.strings() == watertank_bundle.signature.strings()
    assert back.verdict.to_json() == watertank_bundle.verdict.to_json()
    assert back.dumps() == watertank_bundle.dumps()


def test_example1_roundtrip(example1_bundle, tmp_path):
    path = example1_bundle.save(tmp_path / "e1.json")
    assert AnalysisBundle.load(path).hash == example1_bundle.hash


def test_hash_excludes_itself(watertank_bundle):
    payload = watertank_bundle.to_json()
    assert payload["hash"] == content_hash(payload)


def test_tampered_bundle_rejected(watertank_bundle_file, tmp_path):
    payload = json.loads(watertank_bundle_file.read_text())
    payload["table"]["cells"][1][0]["value"] = "0"
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(payload))
    with pytest.raises(BundleError, match="hash"):
        AnalysisBundle.load(bad)


@pytest.mark.parametrize("mutate", [
    lambda p: p.pop("signature"),
    lambda p: p.__setitem__("version", 99),
    lambda p: p["table"]["cells"][0][0].__setitem__("value", "maybe"),
])
def test_schema_violations(watertank_bundle_file, tmp_path, mutate):
    payload = json.loads(watertank_bundle_file.read_text())
    mutate(payload)
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(payload))
    with pytest.raises(BundleError, match="schema"):
        AnalysisBundle.load(bad)


def test_unreadable_bundle(tmp_path):
    p = tmp_path / "junk.json"
    p.write_text("{not json")
    with pytest.raises(BundleError):
        AnalysisBundle.load(p)
    with pytest.raises(BundleError):
        AnalysisBundle.load(tmp_path / "missing.json")
