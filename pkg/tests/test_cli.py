import json
import subprocess
import sys

import pytest

from mapkit.cli import main
from mapkit.core import Instance
from mapkit.lang import parse_instance, parse_mapping
from mapkit.oracle import check_fagin_inverse, check_max_recovery, relations_equal
from mapkit.oracle.pools import Pools
from mapkit.oracle.relations import Standard

from conftest import fixture_path, load_map

F = fixture_path

NON_TOTAL = """schema S { S/1, }
schema T { T/1, }
map M : S -> T {
  S(x) -> exists y . T(y);
}
"""
NON_TOTAL_INV = """schema T { T/1, }
schema S { S/1, }
map W : T -> S [ts] {
  T(x) -> S(x);
}
"""


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def blocks(text):
    """Instance blocks in the order printed."""
    out, cur = [], None
    for line in text.splitlines(keepends=True):
        if line.startswith("instance "):
            cur = [line]
        elif cur is not None:
            cur.append(line)
            if line.strip() == "}":
                out.append("".join(cur))
                cur = None
    return out


# -- chase --------------------------------------------------------------------

def test_chase_takes(capsys):
    code, out, _ = run(capsys, "chase", F("takes12.map"), F("takes_instance.inst"))
    assert code == 0
    m = load_map("takes12")
    J = parse_instance(blocks(out)[0], [m.source, m.target])
    assert len(J.facts) == 2
    assert "Student(Chris, ?n1)." in out
    assert "?n1 <- dependency 2" in out


def test_chase_json(capsys):
    code, out, _ = run(capsys, "chase", "--format", "json", F("takes12.map"), F("takes_instance.inst"))
    data = json.loads(out)
    assert code == data["exit"] == 0
    assert {"relation": "Student", "args": ["Chris", "?n1"]} in data["facts"]
    assert data["nulls"] == [{"null": "?n1", "dependency": 2, "variable": "s", "trigger": {"c": "logic", "n": "Chris"}}]
    # the text field parses back to the same facts
    m = load_map("takes12")
    J = parse_instance(data["text"], [m.source, m.target])
    assert {(f.rel, tuple(map(repr, f.args))) for f in J.facts} == {
        (d["relation"], tuple(d["args"])) for d in data["facts"]
    }


def test_chase_empty_instance(capsys, tmp_path):
    p = tmp_path / "empty.inst"
    p.write_text("instance I over R1 { }\n")
    code, out, _ = run(capsys, "chase", F("takes12.map"), p)
    assert code == 0
    J = parse_instance(blocks(out)[0], [load_map("takes12").target])
    assert not J.facts


def test_malformed_file_reports_location(capsys, tmp_path):
    p = tmp_path / "bad.map"
    p.write_text("schema S { S/1, }\nschema T { T/1, }\nmap M : S -> T {\n  S(x) -> T(x\n}\n")
    code, _, err = run(capsys, "chase", p, F("takes_instance.inst"))
    assert code == 2
    assert "bad.map:5:1:" in err


def test_malformed_file_json(capsys, tmp_path):
    p = tmp_path / "bad.map"
    p.write_text("schema S { S/1 }")
    code, out, _ = run(capsys, "parse", "--format", "json", p)
    data = json.loads(out)
    assert code == data["exit"] == 2 and data["error"] == "parse"


def test_missing_file_is_semantic_error(capsys, tmp_path):
    code, _, err = run(capsys, "invert", tmp_path / "nope.map")
    assert code == 3 and "nope.map" in err


# -- compose and invert -------------------------------------------------------------

def test_compose_takes(capsys):
    code, out, _ = run(capsys, "compose", F("takes12.map"), F("takes23.map"))
    assert code == 0
    composed = parse_mapping(out)
    assert composed.is_sotgd
    pools = Pools.for_mapping(composed, 1, 1)
    assert relations_equal(Standard(composed, pools), Standard(load_map("takes13_expected"), pools)) is None


def test_compose_plain_emp(capsys):
    code, out, _ = run(capsys, "compose", "--plain", F("emp12.map"), F("emp23.map"))
    assert code == 0
    plain = parse_mapping(out)
    assert plain.is_sotgd and plain.body.is_plain
    assert "Emp(x1) -> Mgr(x1, f_m(x1));" in out
    assert "SelfMgr" not in out.split("{", 3)[-1]


def test_compose_chain_mismatch(capsys):
    code, _, err = run(capsys, "compose", F("takes12.map"), F("emp23.map"))
    assert code == 3 and "semantic" in err


def test_compose_json_round_trips(capsys):
    code, out, _ = run(capsys, "compose", "--format", "json", F("emp12.map"), F("emp23.map"))
    data = json.loads(out)
    m = parse_mapping(data["mapping"])
    code2, out2, _ = run(capsys, "parse", "--format", "json", F("emp12.map"))
    assert code == 0 and m.is_sotgd and not data["plain"]
    assert parse_mapping(json.loads(out2)["text"]) == load_map("emp12")


@pytest.mark.parametrize("name", ["efm", "projection", "copy"])
def test_invert_writes_a_maximum_recovery(capsys, tmp_path, name):
    target = tmp_path / f"{name}_rec.map"
    code, out, _ = run(capsys, "invert", "-o", target, F(f"{name}.map"))
    assert code == 0 and out == ""
    rec = parse_mapping(target.read_text())
    assert check_max_recovery(load_map(name), rec).passed


def test_invert_rejects_sotgd(capsys):
    code, _, _ = run(capsys, "invert", F("takes13_expected.map"))
    assert code == 3


# -- certain --------------------------------------------------------------------

def test_certain_answers(capsys, tmp_path):
    q = tmp_path / "enrolled.q"
    q.write_text("query q(x): exists y . Takes1(x, y);\n")
    code, out, _ = run(capsys, "certain", "--format", "json", F("takes12.map"), F("takes_instance.inst"), q)
    assert code == 0 and json.loads(out)["answers"] == [["Chris"]]
    code, out, _ = run(capsys, "certain", "--format", "json", F("takes12.map"), F("takes_instance.inst"), F("student_query.q"))
    assert json.loads(out)["answers"] == []


def test_certain_rejects_sotgd(capsys):
    code, _, _ = run(capsys, "certain", F("takes13_expected.map"), F("takes_instance.inst"), F("student_query.q"))
    assert code == 3


# -- verify -----------------------------------------------------------------------

def test_verify_fagin_pass(capsys):
    code, out, _ = run(capsys, "verify", "--property", "fagin-inverse", F("uv.map"), F("uv_inverse_u.map"))
    assert code == 0 and "PASS" in out


def test_verify_fagin_fail_prints_replayable_pair(capsys):
    code, out, _ = run(capsys, "verify", "--property", "fagin-inverse", F("projection.map"), F("projection_quasi.map"))
    assert code == 1
    m = load_map("projection")
    I1, I2 = (parse_instance(b, m.source) for b in blocks(out))
    assert not I1.facts <= I2.facts
    from mapkit.compose import composition_member

    assert composition_member(m, load_map("projection_quasi"), I1, I2) is not None


def test_verify_max_recovery_pass(capsys):
    code, _, _ = run(capsys, "verify", "--property", "max-recovery", F("efm.map"), F("efm_recovery.map"))
    assert code == 0


def test_verify_defaults_to_computed_recovery(capsys):
    code, out, _ = run(capsys, "verify", "--property", "max-recovery", "--property", "recovery", F("join.map"))
    assert code == 0 and out.count("PASS") == 2


def test_verify_inapplicable(capsys, tmp_path):
    (tmp_path / "m.map").write_text(NON_TOTAL)
    (tmp_path / "w.map").write_text(NON_TOTAL_INV)
    code, out, _ = run(
        capsys, "verify", "--property", "max-extended-recovery", "--pool-constants", "0", "--pool-nulls", "0",
        "--source-nulls", "1", tmp_path / "m.map", tmp_path / "w.map",
    )
    assert code == 4 and "INAPPLICABLE" in out


def test_verify_negative_budget(capsys):
    code, _, err = run(capsys, "verify", "--pool-constants", "-1", F("copy.map"))
    assert code == 3


def test_verify_cq_equivalent_needs_two(capsys):
    code, _, _ = run(capsys, "verify", "--property", "cq-equivalent", F("copy.map"))
    assert code == 3


def test_verify_json(capsys):
    code, out, _ = run(capsys, "verify", "--format", "json", "--property", "fagin-inverse",
                       F("projection.map"), F("projection_quasi.map"))
    data = json.loads(out)
    assert code == data["exit"] == 1
    (res,) = data["results"]
    assert res["status"] == "fail" and res["property"] == "fagin-inverse"


@pytest.mark.parametrize(
    "argv",
    [
        ("verify", "--property", "fagin-inverse", "projection.map", "projection_quasi.map"),
        ("verify", "--format", "json", "--random", "3", "--seed", "11"),
        ("chase", "takes12.map", "takes_instance.inst"),
        ("compose", "--plain", "emp12.map", "emp23.map"),
        ("invert", "path.map"),
    ],
)
def test_identical_config_gives_identical_bytes(capsys, argv):
    argv = [str(F(a)) if a.endswith((".map", ".inst")) else a for a in argv]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_jobs_do_not_change_output(capsys):
    base = ("verify", "--random", "4", "--seed", "5", "--property", "recovery")
    assert run(capsys, *base, "--jobs", "1") == run(capsys, *base, "--jobs", "2")


def test_jobs_env_default(capsys, monkeypatch):
    monkeypatch.setenv("MAPKIT_JOBS", "2")
    code, _, _ = run(capsys, "verify", "--random", "2", "--seed", "1", "--property", "recovery")
    assert code == 0


def test_console_script_entry():
    res = subprocess.run(
        [sys.executable, "-m", "mapkit.cli", "verify", "--property", "fagin-inverse",
         str(F("uv.map")), str(F("uv_inverse_v.map"))],
        capture_output=True, text=True,
    )
    assert res.returncode == 0, res.stderr
