import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from granulog import buchi, ftree, rabin
from granulog.cli import run
from granulog.core import LassoWord, PropSet, SymbolTable, dumps, parse_model
from granulog.mso import mso_atomic
from granulog.temporalized import TemporalizedAutomaton, t_to_json

ROOT = Path(__file__).resolve().parent.parent
POWER = str(ROOT / "examples" / "paper-sec4" / "power-of-two.tl")
CHANGE_BAR = str(ROOT / "examples" / "hv-station" / "change-bar.tl")
AB = SymbolTable(["a", "b"])


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, _ = call(*argv, "--json")
    report = json.loads(out)
    assert report["exit"] == code
    return code, report


def write(path, obj):
    path.write_text(dumps(obj))
    return path


@pytest.fixture
def files(tmp_path):
    only_a = buchi.BuchiAutomaton(1, 0, [(0, AB.letter_guard("a"), 0)], {0}, AB)
    nothing = buchi.BuchiAutomaton(1, 0, [(0, AB.letter_guard("a"), 0)], set(), AB)
    fta = ftree.universal_fta(2, AB)
    rab = rabin.RabinTreeAutomaton(2, 1, 0, [(0, AB.letter_guard("a"), (0, 0))], [((), (0,))], AB)
    names = SymbolTable(["X"])
    bundle = TemporalizedAutomaton(
        buchi.BuchiAutomaton(1, 0, [(0, names.letter_guard("X"), 0)], {0}, names),
        {"X": ftree.universal_fta(2, AB, "almost")})
    return {
        "buchi": write(tmp_path / "a.json", buchi.buchi_to_json(only_a)),
        "none": write(tmp_path / "none.json", buchi.buchi_to_json(nothing)),
        "ftree": write(tmp_path / "t.json", ftree.fta_to_json(fta)),
        "props": write(tmp_path / "p.json", ftree.fta_to_json(
            ftree.fta_shape(2, 1, PropSet(["p", "q"])))),
        "rabin": write(tmp_path / "r.json", rabin.rabin_to_json(rab)),
        "bundle": write(tmp_path / "b.json", t_to_json(bundle)),
        "mso": write(tmp_path / "m.json", t_to_json(mso_atomic("subset", 1, 2, 2))),
        "graph": write(tmp_path / "g.json", {"nodes": 2, "edges": [[0, 1], [1, 1]],
                                             "q1": 0, "q2": 1}),
        "dir": tmp_path,
    }


# --------------------------------------------------------------- formulas


def test_power_of_two_sat(tmp_path):
    code, report = call_json("sat", "--semantics", "uuls:k=2", POWER,
                             "--witness", tmp_path / "cert.json")
    assert code == 0 and report["verdict"] == "SAT"
    assert call("member", POWER, tmp_path / "cert.json")[0] == 0


def test_hv_witness_reverifies(tmp_path):
    code, out, _ = call("sat", CHANGE_BAR, "--witness", tmp_path / "w.json")
    assert code == 0 and out.startswith("SAT")
    parse_model((tmp_path / "w.json").read_text())
    assert call("member", CHANGE_BAR, tmp_path / "w.json")[0] == 0


def test_unsat_exit_code():
    code, out, _ = call("sat", "-s", "seq-of-seq", "-f", "G [p] & F [!p]")
    assert code == 1 and out.strip() == "UNSAT"


def test_non_executable_entry():
    code, _, err = call("sat", ROOT / "examples" / "paper-sec4" / "densely.tl")
    assert code == 2 and "non-executable" in err


def test_formula_errors():
    assert call("sat", "-s", "seq-of-seq", "-f", "G [p")[0] == 2
    assert call("sat", "-s", "bogus", "-f", "G [p]")[0] == 2
    assert call("sat", "-f", "G [p]")[0] == 2
    assert call("sat", "-s", "seq-of-seq", "-f", "!(EQ. Q & [p])")[0] == 2


def test_demo_groups():
    code, out, _ = call("demo", "hv-station")
    assert code == 0 and "all checks passed" in out
    code, report = call_json("demo", "paper-sec4")
    assert code == 0
    status = {r["name"]: r["status"] for r in report["results"]}
    assert status["densely"] == "skipped" and status["power-of-two"] == "ok"


def test_member_with_inline_formula(tmp_path):
    write(tmp_path / "m.json", {"kind": "lasso-treeseq", "stem": [],
                                "loop": [{"kind": "lasso-word", "stem": [], "loop": [["p"]]}]})
    assert call("member", "-s", "seq-of-seq", "-f", "G [p]", tmp_path / "m.json")[0] == 0
    assert call("member", "-s", "seq-of-seq", "-f", "F [!p]", tmp_path / "m.json")[0] == 1


def test_partition_formula():
    code, report = call_json("partition", "-s", "layered:k=2,depth=1",
                             "-f", "[E X0 p] U [A X q]")
    assert code == 0 and len(report["cells"]) == 3 and report["rest"]


# -------------------------------------------------------------- automata


def test_empty_missing_file():
    code, _, err = call("empty", "missing.json")
    assert code == 2 and "missing.json" in err


def test_empty_malformed(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    assert call("empty", tmp_path / "bad.json")[0] == 2
    (tmp_path / "odd.json").write_text('{"kind": "buchi", "states": 1}')
    assert call("empty", tmp_path / "odd.json")[0] == 2


def test_empty_and_member(files):
    w = files["dir"] / "w.json"
    code, report = call_json("empty", files["buchi"], "--witness", w)
    assert code == 0 and report["empty"] is False
    assert parse_model(w.read_text()) == LassoWord([], ["a"])
    assert call("member", files["buchi"], w)[0] == 0
    assert call("empty", files["none"])[0] == 1
    for kind in ("ftree", "rabin", "bundle"):
        assert call("empty", files[kind])[0] == 0


def test_not_member(files):
    write(files["dir"] / "b.json", {"kind": "lasso-word", "stem": [], "loop": ["b"]})
    code, out, _ = call("member", files["buchi"], files["dir"] / "b.json")
    assert code == 1 and out.strip() == "not a member"


def test_its_empty(files):
    code, report = call_json("its-empty", files["bundle"], "--witness", files["dir"] / "c.json")
    assert code == 0 and report["certificate_valid"]
    assert call("member", files["bundle"], files["dir"] / "c.json")[0] == 0
    assert call("its-empty", files["buchi"])[0] == 2


def test_boolean_operations(files):
    out = files["dir"] / "u.json"
    assert call("bool", "union", files["buchi"], files["none"], "-o", out)[0] == 0
    assert json.loads(out.read_text())["kind"] == "buchi"
    code, report = call_json("bool", "complement", files["buchi"], "--method", "rank")
    assert code == 0 and report["automaton"]["kind"] == "buchi"
    assert call("bool", "intersect", files["ftree"], files["ftree"])[0] == 0
    assert call("bool", "union", files["bundle"], files["bundle"])[0] == 0


def test_boolean_errors(files):
    assert call("bool", "complement", files["rabin"])[0] == 2
    assert call("bool", "union", files["buchi"])[0] == 2
    assert call("bool", "union", files["buchi"], files["ftree"])[0] == 2
    assert call("bool", "union", files["buchi"], files["none"], "--method", "rank")[0] == 2
    assert call("bool", "xor", files["buchi"], files["none"])[0] == 2


def test_project(files):
    code, report = call_json("project", files["props"], "--drop", "q")
    assert code == 0 and report["automaton"]["alphabet"] == ["p"]
    assert call("project", files["bundle"], "--drop", "a")[0] == 2


def test_partition_bundle(files):
    code, report = call_json("partition", files["bundle"])
    assert code == 0 and report["automaton"]["kind"] == "temporalized"


def test_ppp(files):
    code, report = call_json("ppp", files["graph"], "--a", "1", "--l", "2")
    assert code == 0 and report["holds"]
    assert call("ppp", files["graph"], "--a", "0", "--l", "1")[0] == 1


def test_emit_mso_and_dot(files):
    code, out, _ = call("emit-mso", files["mso"])
    assert code == 0 and "ex2 Q0." in out
    assert call("emit-mso", files["bundle"])[0] == 2
    for kind in ("buchi", "ftree", "rabin", "bundle"):
        code, out, _ = call("dot", files[kind])
        assert code == 0 and out.startswith("digraph")


# ----------------------------------------------------- usage and limits


def test_usage_errors():
    assert call()[0] == 2
    assert call("frobnicate")[0] == 2
    assert call("demo", "nowhere")[0] == 2
    assert call("--help")[0] == 0


def test_state_cap(monkeypatch):
    f = "G ([p] -> X [q]) & G F [p] & G F [!q]"
    assert call("sat", "-s", "seq-of-seq", "-f", f, "--max-states", "1")[0] == 3
    monkeypatch.setenv("GRANULOG_MAX_STATES", "1")
    assert call("sat", "-s", "seq-of-seq", "-f", f)[0] == 3
    monkeypatch.delenv("GRANULOG_MAX_STATES")
    assert call("sat", "-s", "seq-of-seq", "-f", f)[0] == 0


def test_output_is_deterministic():
    first = call("sat", CHANGE_BAR, "--json")
    assert first == call("sat", CHANGE_BAR, "--json")


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "granulog.cli", "sat", "-s", "uuls:k=2", POWER],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("SAT")
