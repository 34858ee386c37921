import dataclasses
import json

import pytest

from jetzoom.claims import (PROCEDURES, Claim, UnknownFilter, check, claims_csv, homogeneous_pairs,
                            load_claims, run_claims)


def _claim(compare, expected, tol=0.0, run="jet_norm"):
    return Claim("x", "", "", run, {"germ": "abs"}, expected, tol, compare)


def test_load_sorted_unique_and_registered():
    cs = load_claims()
    ids = [c.id for c in cs]
    assert ids == sorted(ids) and len(set(ids)) == len(ids) >= 12
    assert all(c.run in PROCEDURES for c in cs)
    assert all(c.anchor and c.description for c in cs)


def test_load_rejects_bad_files(tmp_path):
    rec = dataclasses.asdict(load_claims()[0])
    p = tmp_path / "c.json"
    p.write_text(json.dumps([rec, rec]))
    with pytest.raises(ValueError, match="duplicate"):
        load_claims(p)
    p.write_text(json.dumps([dict(rec, run="nope")]))
    with pytest.raises(ValueError, match="unknown procedure"):
        load_claims(p)


@pytest.mark.parametrize("mode,expected,tol,measured,ok", [
    ("abs", 1.0, 1e-9, 1.0 + 5e-10, True),
    ("abs", 1.0, 1e-9, 1.0 + 2e-9, False),
    ("le", 0.0, 1e-6, 5e-7, True),
    ("le", 0.0, 0.0, 1e-300, False),
    ("ge", 0.1, 0.0, 0.1, True),
    ("range", [1.40, 1.42], 0.0, 1.413, True),
    ("range", [1.40, 1.42], 0.0, 1.43, False),
    ("eq", "TL", 0.0, "TL", True),
    ("eq", 8, 0.0, 7, False),
    ("abs", 1.0, 1.0, float("nan"), False),
])
def test_check_modes(mode, expected, tol, measured, ok):
    assert check(_claim(mode, expected, tol), measured) is ok


def test_check_unknown_mode():
    with pytest.raises(ValueError):
        check(_claim("approx", 1.0), 1.0)


def test_filter_and_unknown_filter():
    rs = run_claims("giseh_*")
    assert [r.claim.id for r in rs] == sorted(r.claim.id for r in rs)
    assert all(r.claim.id.startswith("giseh_") and r.passed for r in rs)
    with pytest.raises(UnknownFilter):
        run_claims("no_such_claim*")


def test_csv_deterministic_without_timing():
    a = claims_csv(run_claims("property_*"), timing=False)
    b = claims_csv(run_claims("property_*"), timing=False)
    assert a == b
    lines = a.splitlines()
    assert lines[0] == "claim_id,expected,tolerance,measured,pass,seconds"
    assert all(line.endswith(",") for line in lines[1:])
    timed = claims_csv(run_claims("property_cantor*"), timing=True)
    assert not timed.splitlines()[1].endswith(",")


def test_homogeneous_pairs_are_composable():
    pairs = homogeneous_pairs()
    assert len(pairs) == 20
    assert all(f.dim_out == g.dim_in for f, g in pairs)


def test_full_suite_passes():
    rs = run_claims()
    failed = [(r.claim.id, r.measured) for r in rs if not r.passed]
    assert not failed
