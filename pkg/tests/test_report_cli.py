import csv
import io
import json

import pytest

from synkit import cli
from synkit.errors import EmptyReport
from synkit.ir import SignalRef
from synkit.lau import SpeedGrade, gen_macc
from synkit.liberty import demo_library
from synkit.report import QorRecord, measure, report_at, report_json, strip_volatile
from synkit.snl import write_netlist
from synkit.techmap import compile_timing

from circuits import part_select

DEMO = "src/synkit/data/demo7.slf"


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_report_one_record():
    text = report_at([QorRecord("x", 1.5, 20.0, 3, 7, 0.25)])
    assert text.splitlines() == ["label,area_ge,arrival_ps,logic_levels,gates,wall_s",
                                 "x,1.5000,20.0000,3,7,0.250"]
    assert json.loads(report_json([QorRecord("x", 1.5, 20.0, 3, 7, 0.25)])) == _rows(text)
    assert strip_volatile(text).splitlines()[1] == "x,1.5000,20.0000,3,7"


def test_report_empty():
    with pytest.raises(EmptyReport) as ei:
        report_at([])
    assert ei.value.code == "E_EMPTY_REPORT"


def test_record_fields_non_negative():
    with pytest.raises(ValueError):
        QorRecord("x", -1, 0, 0, 0)


@pytest.mark.slow
def test_macc_grades_fast_has_min_arrival():
    lib = demo_library()
    timing = compile_timing(lib)
    recs = [measure(gen_macc(53, 53, 163, 163, g), g.value, lib, timing) for g in SpeedGrade]
    rows = _rows(report_at(recs))
    assert len(rows) == 3
    fast = next(r for r in rows if r["label"] == "fast")
    assert float(fast["arrival_ps"]) == min(float(r["arrival_ps"]) for r in rows)


# --------------------------------------------------------------------- CLI

@pytest.fixture
def stride_file(tmp_path):
    p = tmp_path / "stride.snl"
    p.write_text(write_netlist(part_select(4, 24)))
    return p


def _run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def test_pipeline_rows_non_increasing(stride_file, tmp_path, capsys):
    rep = tmp_path / "q.csv"
    code, _, err = _run(["opt", stride_file, "--pass", "shift2mux,constprop,dce", "-o",
                         tmp_path / "o.snl", "--report", rep], capsys)
    assert code == 0, err
    rows = _rows(rep.read_text())
    assert [r["label"] for r in rows] == ["shift2mux", "constprop", "dce"]
    gates = [int(r["gates"]) for r in rows]
    assert gates == sorted(gates, reverse=True)


def test_unknown_pass(stride_file, capsys):
    code, _, err = _run(["opt", stride_file, "--pass", "nosuch"], capsys)
    assert code == 2
    assert "E_UNKNOWN_PASS" in err
    assert len(err.strip().splitlines()) == 1


def test_broken_pass_detected(stride_file, tmp_path, capsys):
    def broken(nl, ctx):
        # invert bit 0 of the shifter output
        out = nl.copy()
        c = out.cells["sh"]
        y = list(c.pins["Y"].bits())
        t = out.fresh("t")
        out.add_net(t)
        y0, y[0] = y[0], (t, 0)
        c.pins["Y"] = SignalRef.from_bits(y)
        out.add_cell("NOT", "evil", {"A": [(t, 0)], "Y": [y0]})
        return out

    cli.register_pass("broken", broken)
    try:
        dest = tmp_path / "out.snl"
        code, _, err = _run(["opt", stride_file, "--pass", "broken", "--check", "-o", dest], capsys)
    finally:
        del cli.REGISTRY["broken"]
    assert code == 3
    assert "E_EQUIV_FAIL" in err
    cex = tmp_path / "out.snl.cex.json"
    assert cex.exists() and str(cex) in err
    doc = json.loads(cex.read_text())
    assert doc["stage"] == "broken" and doc["output"] == "y"
    assert not dest.exists()


def test_exit_codes(tmp_path, stride_file, capsys):
    assert _run(["opt", tmp_path / "missing.snl", "--pass", "dce"], capsys)[0] == 1
    assert _run(["map", stride_file], capsys)[0] == 2  # needs --lib
    assert _run(["opt", stride_file, "--pass", "lau:grade=huge"], capsys)[0] == 2
    assert _run(["report"], capsys)[0] == 2
    bad = tmp_path / "bad.snl"
    bad.write_text("module t\ninput a[1]\n")
    code, _, err = _run(["parse", bad], capsys)
    assert code == 2 and "E_" in err


def test_color_switch(stride_file, capsys, monkeypatch):
    monkeypatch.setenv("SYNKIT_COLOR", "1")
    _, _, err = _run(["opt", stride_file, "--pass", "nosuch"], capsys)
    assert "\x1b[" in err
    monkeypatch.setenv("SYNKIT_COLOR", "0")
    _, _, err = _run(["opt", stride_file, "--pass", "nosuch"], capsys)
    assert "\x1b[" not in err


def test_parse_roundtrip_commands(tmp_path, stride_file, capsys):
    code, out, _ = _run(["parse", stride_file], capsys)
    assert code == 0 and out == stride_file.read_text()
    code, out, _ = _run(["parse", DEMO], capsys)
    assert code == 0 and out.startswith("library")


def test_arith_and_record_flow(tmp_path, capsys):
    mul = tmp_path / "mul.snl"
    assert _run(["arith", "gen", "mul", "--width", "4", "--grade", "fast", "-o", mul], capsys)[0] == 0
    code, out, _ = _run(["arith", "cost", mul], capsys)
    assert code == 0 and out.startswith("area,delay\n")
    recs = tmp_path / "r.srl"
    assert _run(["record", "add", mul, "--records", recs], capsys)[0] == 0
    code, out, _ = _run(["record", "probe", "--records", recs, "--tt", "0x8", "--k", "2"], capsys)
    assert code == 0 and out.startswith("hit")
    trace = tmp_path / "t.csv"
    code, _, err = _run(["lms", mul, "--records", recs, "--iters", "3", "--trace", trace, "--check",
                         "-o", tmp_path / "l.snl"], capsys)
    assert code == 0, err
    assert trace.read_text().startswith("iteration,ands,depth\n")


def test_map_sta_eq(tmp_path, capsys):
    add = tmp_path / "add.snl"
    _run(["arith", "gen", "add", "--width", "6", "-o", add], capsys)
    mapped = tmp_path / "m.snl"
    code, _, err = _run(["map", add, "--lib", DEMO, "--check", "-o", mapped], capsys)
    assert code == 0, err
    code, out, _ = _run(["sta", mapped, "--lib", DEMO, "--report", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["arrival_ps"] > 0 and doc["logic_levels"] >= 1
    code, out, _ = _run(["eq", add, mapped, "--lib", DEMO], capsys)
    assert code == 0 and "equivalent" in out
    other = tmp_path / "o.snl"
    _run(["arith", "gen", "add", "--width", "6", "--arch", "ripple", "-o", other], capsys)
    text = other.read_text().replace("cell XOR", "cell XNOR", 1)
    other.write_text(text)
    code, _, err = _run(["eq", add, other, "-o", tmp_path / "x"], capsys)
    assert code == 3 and (tmp_path / "x.cex.json").exists()


def test_report_command(tmp_path, stride_file, capsys):
    code, out, _ = _run(["report", stride_file, "--format", "json"], capsys)
    assert code == 0 and json.loads(out)[0]["label"] == "stride"


def test_pipeline_determinism(stride_file, tmp_path, capsys):
    outs = []
    for k in range(2):
        o, r = tmp_path / f"o{k}.snl", tmp_path / f"r{k}.csv"
        assert _run(["opt", stride_file, "--pass", "shift2mux,constprop,dce,strash,balance",
                     "--seed", "42", "--check", "-o", o, "--report", r], capsys)[0] == 0
        outs.append((o.read_text(), strip_volatile(r.read_text())))
    assert outs[0] == outs[1]
