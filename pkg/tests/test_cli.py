import json
import subprocess
import sys
from pathlib import Path

import pytest

from momentarb.cli import main
from momentarb.marketfile import (
    InputError,
    dumps_report,
    load_market,
    market_to_dict,
    parse_market,
    parse_target,
    validate_report,
)
from momentarb.engine import Call
from momentarb.payoffs import AbsLinear, Asset

DOCS = Path(__file__).resolve().parents[1] / "docs"
SINGLE = DOCS / "examples" / "single_asset.json"
SPREAD = DOCS / "examples" / "spread_market.json"
INFEASIBLE = DOCS / "examples" / "infeasible_market.json"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    report = json.loads(out)
    assert validate_report(report) == []
    assert report["exit_code"] == code
    return code, report


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


def test_check_feasible(capsys):
    code, rep = run(capsys, "check", SINGLE)
    assert code == 0
    assert rep["check"]["verdict"] == "no_arbitrage_detected_at_degree"
    assert rep["input_digest"].startswith("sha256:")
    assert rep["check"]["blocks"][0] == {"label": "moment", "dim": 3}


def test_check_price_above_support(capsys, tmp_path):
    path = write(tmp_path, "m.json", {"assets": [{"name": "x1", "price": 1.2, "support_max": 1.0}]})
    code, rep = run(capsys, "check", path, "--degree", "1")
    assert code == 1
    assert rep["check"]["verdict"] == "arbitrage_detected"
    assert "static price-range violation" in rep["check"]["note"]


def test_check_infeasible_example(capsys):
    code, rep = run(capsys, "check", INFEASIBLE)
    assert code == 1
    assert rep["conversions"][0]["straddle_price"] == pytest.approx(0.0, abs=1e-15)


def test_malformed_json(capsys, tmp_path):
    code, rep = run(capsys, "check", write(tmp_path, "bad.json", "{not json"))
    assert code == 64
    assert "not valid JSON" in rep["error"]["message"]


def test_schema_violation_has_pointer(capsys, tmp_path):
    doc = {"assets": [{"name": "x1", "price": "high", "support_max": 1.0}], "extra": 1}
    code, rep = run(capsys, "check", write(tmp_path, "m.json", doc))
    assert code == 64
    paths = {d["path"] for d in rep["error"]["details"]}
    assert "/assets/0/price" in paths
    assert "" in paths  # unknown top-level key


def test_discount_rejected(capsys, tmp_path):
    doc = {"assets": [{"name": "x1", "price": 0.5, "support_max": 1.0}], "discount": 0.97}
    code, rep = run(capsys, "check", write(tmp_path, "m.json", doc))
    assert code == 64
    assert rep["error"]["details"][0]["path"] == "/discount"


def test_missing_file_and_bad_flags(capsys, tmp_path):
    assert run(capsys, "check", tmp_path / "nope.json")[0] == 64
    assert run(capsys, "check", SINGLE, "--degree", "0")[0] == 64
    assert run(capsys, "frobnicate")[0] == 64
    assert run(capsys, "bound", SINGLE)[0] == 64


def test_bound_pinned(capsys):
    code, rep = run(capsys, "bound", SINGLE, "--target", "x1", "--direction", "upper")
    assert code == 0
    assert rep["bound"]["value"] == 0.5
    assert rep["bound"]["pinned"]


def test_bound_call_reports_both_spaces(capsys):
    code, rep = run(capsys, "bound", SINGLE, "--target", "call:x1:0.4")
    assert code == 0
    b = rep["bound"]
    assert b["value"] >= 0.3 - 1e-6
    conv = b["conversion"]
    assert conv["call_price"] == b["value"]
    assert conv["straddle_price"] == b["straddle_value"]
    assert b["value"] == pytest.approx((conv["straddle_price"] - conv["strike"] + conv["forward"]) / 2, abs=1e-11)


def test_bound_spread_ordering_and_hierarchy(capsys):
    vals = {}
    for d in (1, 2):
        for direction in ("upper", "lower"):
            code, rep = run(capsys, "bound", SPREAD, "--target", "spread_straddle:x1:x2:0",
                            "--direction", direction, "--degree", d)
            assert code == 0
            vals[d, direction] = rep["bound"]["value"]
        assert vals[d, "lower"] <= vals[d, "upper"]
    assert vals[2, "upper"] <= vals[1, "upper"] + 1e-6


def test_bound_on_infeasible_market(capsys):
    code, rep = run(capsys, "bound", INFEASIBLE, "--target", "x1")
    assert code == 1
    assert rep["check"]["verdict"] == "arbitrage_detected"
    assert "bound" not in rep


def test_oracle_feasible_witness(capsys):
    code, rep = run(capsys, "oracle", SPREAD, "--grid", "51")
    assert code == 0
    assert sum(rep["oracle"]["witness"]["weights"]) == pytest.approx(1.0, abs=1e-9)


def test_oracle_infeasible(capsys, tmp_path):
    path = write(tmp_path, "m.json", {"assets": [{"name": "x1", "price": 1.2, "support_max": 1.0}]})
    assert run(capsys, "oracle", path)[0] == 1


def test_oracle_call_target(capsys):
    code, rep = run(capsys, "oracle", SINGLE, "--target", "call:x1:0.4", "--direction", "upper")
    assert code == 0
    assert rep["oracle"]["value"] == pytest.approx(0.3, abs=1e-6)


def test_oracle_grid_cap(capsys):
    code, rep = run(capsys, "oracle", SPREAD, "--grid", "2000")
    assert code == 64
    assert "2000^2 = 4000000" in rep["error"]["message"]


def test_martingale(capsys, tmp_path):
    mu = write(tmp_path, "mu.json", {"points": [0, 0.5, 1], "weights": [0, 1, 0]})
    nu = write(tmp_path, "nu.json", {"points": [0, 0.5, 1], "weights": [0.5, 0, 0.5]})
    code, rep = run(capsys, "martingale", mu, nu)
    assert code == 0
    assert rep["martingale"]["transition"][1] == pytest.approx([0.5, 0, 0.5], abs=1e-9)
    assert rep["martingale"]["convex_order"]["ordered"]
    code, rep = run(capsys, "martingale", nu, mu)
    assert code == 1
    bad = write(tmp_path, "bad.json", {"points": [0, 1], "weights": [0.5, 0.5]})
    assert run(capsys, "martingale", mu, bad)[0] == 64


def test_out_flag(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["check", str(SINGLE), "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert validate_report(json.loads(out.read_text())) == []


def test_market_round_trip():
    for path in (SINGLE, SPREAD, INFEASIBLE):
        mf = load_market(path)
        doc = market_to_dict(mf)
        assert doc == json.loads(path.read_text())
        again = parse_market(json.loads(json.dumps(doc)))
        assert again.market == mf.market


def test_call_conversion_exact():
    doc = {
        "assets": [{"name": "a", "price": 0.37, "support_max": 2.0}],
        "derivatives": [{"type": "call", "asset": "a", "strike": 0.41, "price": 0.123}],
    }
    mf = parse_market(doc)
    conv = mf.conversions[0]
    assert mf.market.derivative_prices[0] == conv.straddle_price
    back = (conv.straddle_price - conv.strike + conv.forward) / 2
    assert back == pytest.approx(0.123, abs=1e-16)
    assert market_to_dict(mf)["derivatives"][0]["price"] == 0.123


def test_unknown_asset_reference():
    doc = {
        "assets": [{"name": "a", "price": 0.5, "support_max": 1.0}],
        "derivatives": [{"type": "straddle", "asset": "b", "strike": 0.5, "price": 0.2}],
    }
    with pytest.raises(InputError) as info:
        parse_market(doc)
    assert info.value.details[0][0] == "/derivatives/0"


def test_parse_target_forms():
    m = load_market(SPREAD).market
    assert isinstance(parse_target("x2", m), Asset)
    assert parse_target("asset:x1", m).index == 0
    s = parse_target("spread_straddle:x1:x2:0.1", m)
    assert isinstance(s, AbsLinear) and s.coefficients == (1.0, -1.0) and s.offset == 0.1
    c = parse_target("call:x1=2,x2=1:0.3", m)
    assert isinstance(c, Call) and c.coefficients == (2.0, 1.0)
    assert isinstance(parse_target("spread_call:x2:x1:0", m), Call)
    single = load_market(SINGLE).market
    assert parse_target("call:0.4", single).strike == 0.4
    for bad in ("x9", "call:x1", "put:x1:0.3", "straddle:x1=0:0.3", "call:x1:abc"):
        with pytest.raises(InputError):
            parse_target(bad, m)


def test_report_round_trip_is_lossless(capsys):
    _, rep = run(capsys, "check", SPREAD)
    text = dumps_report(rep)
    assert dumps_report(json.loads(text)) == text


def test_docs_schemas_match_package():
    pkg = Path(__file__).resolve().parents[1] / "src" / "momentarb" / "schemas"
    for name in ("market.schema.json", "report.schema.json"):
        assert (DOCS / "schemas" / name).read_bytes() == (pkg / name).read_bytes()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "momentarb", "check", str(SINGLE)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["exit_code"] == 0
    assert "momentarb check" in proc.stderr
