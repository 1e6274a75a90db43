import json

import pytest

from mtlab.report import (
    FAIL,
    PASS,
    REJECTED,
    Report,
    emit_csv,
    load_reports,
    make_report,
    rejected_report,
    reports_csv,
    reports_to_json,
    saturated_report,
    worst_status,
    write_reports,
)


def test_margin_sign_decides_status():
    r = make_report("t", {}, lhs=1.0, rhs=1.0)
    assert r.status == PASS and r.margin == 0.0
    r = make_report("t", {}, lhs=1.0 + 1e-9, rhs=1.0)
    assert r.status == FAIL
    r = make_report("t", {}, lhs=1.0 + 1e-9, rhs=1.0, disc_error=1e-8)
    assert r.status == PASS


def test_pass_invariant_enforced():
    with pytest.raises(ValueError, match="negative margin"):
        Report("t", {}, lhs=2.0, rhs=1.0, margin=1.0, disc_error=0.0, status=PASS)
    with pytest.raises(ValueError, match="status"):
        Report("t", {}, 0.0, 1.0, 1.0, 0.0, "MAYBE")


def test_warn_never_hides_failure():
    r = make_report("t", {}, lhs=5.0, rhs=1.0, warn=True)
    assert r.status == FAIL
    r = make_report("t", {}, lhs=0.5, rhs=1.0, warn=True)
    assert r.status == "WARN"


def test_rejected_and_saturated_carry_reason():
    r = rejected_report("t", {"N": 3}, "below threshold")
    assert r.status == REJECTED and r.lhs is None
    assert r.extra["reason"] == "below threshold"
    s = saturated_report("t", {}, "exponent overflow", {"ln_lhs": 900.0})
    assert s.status == "SATURATED" and s.extra["ln_lhs"] == 900.0


def test_worst_status():
    ok = make_report("a", {}, 0.0, 1.0)
    bad = make_report("b", {}, 2.0, 1.0)
    assert worst_status([ok, ok]) == PASS
    assert worst_status([ok, bad]) == FAIL


def test_json_roundtrip_and_determinism(tmp_path):
    reports = [
        make_report("alpha", {"N": 2, "eps": 0.25}, 1.2345678901234567, 2.0),
        rejected_report("beta", {"N": 1}, "tiny"),
    ]
    p = tmp_path / "r.json"
    write_reports(p, reports, meta={"timestamp": "ignored"})
    data = load_reports(p)
    assert [r["check"] for r in data["reports"]] == ["alpha", "beta"]
    assert data["reports"][0]["lhs"] == 1.2345678901234567
    assert data["reports"][1]["lhs"] is None
    # serialization is canonical: same reports, same bytes
    assert reports_to_json(reports) == reports_to_json(list(reports))


def test_csv_header_only_for_empty(tmp_path):
    p = tmp_path / "empty.csv"
    emit_csv(p, ["a", "b"], [])
    assert p.read_bytes() == b"a,b\n"


def test_csv_quoting_and_roundtrip(tmp_path):
    p = tmp_path / "vals.csv"
    x = 0.1 + 0.2  # not representable; 17 digits must round-trip it
    emit_csv(p, ["name", "x"], [('he,llo "q"', x), ("plain", 1.0 / 3.0)])
    raw = p.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().strip().split("\n")
    assert lines[1].startswith('"he,llo ""q""",')
    assert float(lines[1].rsplit(",", 1)[1]) == x
    assert float(lines[2].rsplit(",", 1)[1]) == 1.0 / 3.0


def test_reports_csv_params_json(tmp_path):
    p = tmp_path / "r.csv"
    reports_csv(p, [make_report("c", {"alpha": 12.566}, 1.0, 2.0)])
    body = p.read_text().split("\n")[1]
    payload = body.split(",", 8)[8]
    assert json.loads(payload.replace('""', '"').strip('"')) == {"alpha": 12.566}
