import subprocess
import sys
from pathlib import Path

import pytest

from genpuiseux.cli import (
    cmd_arith,
    cmd_expand,
    cmd_verify,
    main,
    parse_problem,
    parse_poly,
)
from genpuiseux.errors import ParseError

CLASSICAL = """\
mode equichar
char 0
weights 1
var y
poly y^2 - t^3
budget_terms 10
verify all
seed 11
trials 30
"""

ARTIN = """\
mode equichar
char 2
weights 1
var y
poly y^2 + t*y + t
budget_terms 8
verify caltron,min,ent
seed 11
trials 30
"""

MIXED = """\
p 5
weights 1
var y
poly y^2 - p
witt_prec 6
budget_terms 6
verify off
"""

ARITH = """\
mode equichar
char 0
weights 1
let f = 1 + t
let g2 = 1 - t
print f*g2
print inv(f, 3)
print trunc_open(f, 1)
"""

ARITH_PADIC = """\
p 2
weights 1
witt_prec 5
let f = 3*p^(1/2)
print f
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_parse_problem_roundtrip_fields():
    spec = parse_problem(CLASSICAL)
    assert spec.mode == "equichar"
    assert spec.char == 0
    assert spec.poly_text == "y^2 - t^3"
    assert spec.budget_terms == 10
    assert spec.verify == ("caltron", "prodfini", "stab", "min", "ent", "taylor")


def test_parse_problem_errors_have_positions():
    with pytest.raises(ParseError) as err:
        parse_problem("mode equichar\nbogus_key 1\npoly y - t\n")
    assert "line 2" in str(err.value)
    with pytest.raises(ParseError):
        parse_problem("mode equichar\n")  # missing poly


def test_parse_poly_expressions():
    got = parse_poly("y^2 - t^3", ["t", "y"])
    assert got == {(0, 2): 1, (3, 0): -1}
    got = parse_poly("(y^2 - t^3)^2 - t^7", ["t", "y"])
    assert got == {(0, 4): 1, (3, 2): -2, (6, 0): 1, (7, 0): -1}
    got = parse_poly("y^2 + t*y + t", ["t", "y"])
    assert got == {(0, 2): 1, (1, 1): 1, (1, 0): 1}


def test_cmd_expand_classical():
    spec = parse_problem(CLASSICAL)
    code, out, res = cmd_expand(spec)
    assert code == 0
    assert "series: t^(3/2)" in out
    assert "status: COMPLETE" in out
    assert "1: Q_1=y beta=3/2" in out


def test_cmd_expand_records_format():
    spec = parse_problem(ARTIN)
    code, out, res = cmd_expand(spec, fmt="records")
    lines = out.splitlines()
    assert lines[0].startswith("beta=1/2 coeff=1 i_beta=1 beta_plus=3/4 branch=STEP")
    assert any(l.startswith("result=") and "status=BUDGET" in l for l in lines)
    assert any(l.startswith("chain 1: Q_1=y") for l in lines)


def test_cmd_expand_mixed():
    spec = parse_problem(MIXED)
    code, out, res = cmd_expand(spec)
    assert "series: p^(1/2)" in out
    assert "status: COMPLETE" in out


def test_cmd_verify_all_pass():
    for text in (CLASSICAL, ARTIN):
        spec = parse_problem(text)
        code, out = cmd_verify(spec)
        assert code == 0
        for line in out.splitlines():
            assert "status=PASS" in line


def test_cmd_verify_corruption_fails():
    spec = parse_problem(ARTIN)
    code, out = cmd_verify(spec, corrupt=True)
    assert code == 1
    assert any("status=FAIL" in line for line in out.splitlines())


def test_cmd_verify_off_is_empty():
    spec = parse_problem(MIXED)
    code, out = cmd_verify(spec)
    assert code == 0
    assert out == ""


def test_cmd_arith():
    out = cmd_arith(ARITH)
    lines = out.splitlines()
    assert lines[0] == "1 - t^2"
    assert lines[1] == "1 - t + t^2 + O(t^3)"
    assert lines[2] == "1 + O(t)"


def test_cmd_arith_padic_carrying():
    out = cmd_arith(ARITH_PADIC)
    # carried normal form; the O-term flags the mod-p^N knowledge horizon
    assert out.splitlines()[0].startswith("p^(1/2) + p^(3/2)")


def test_main_exit_codes(tmp_path):
    good = write(tmp_path, "good.spec", CLASSICAL)
    bad = write(tmp_path, "bad.spec", "mode equichar\nnonsense\n")
    assert main(["expand", good]) == 0
    assert main(["expand", bad]) == 2
    assert main(["expand", str(tmp_path / "missing.spec")]) == 2


def test_main_trace_file(tmp_path, capsys):
    good = write(tmp_path, "good.spec", CLASSICAL)
    trace = tmp_path / "out.trace"
    assert main(["expand", good, "--trace", str(trace)]) == 0
    capsys.readouterr()
    content = trace.read_text()
    assert content.strip().endswith("result=t^(3/2) status=COMPLETE")


def test_budget_flag_overrides(tmp_path, capsys):
    good = write(tmp_path, "as.spec", ARTIN)
    assert main(["expand", good, "--budget-terms", "3", "--format", "records"]) == 0
    out = capsys.readouterr().out
    steps = [l for l in out.splitlines() if l.startswith("beta=")]
    assert len(steps) == 3


def test_determinism_byte_identical(tmp_path):
    spec = parse_problem(ARTIN)
    runs = []
    for _ in range(2):
        code, out, _ = cmd_expand(spec, fmt="records")
        code2, out2 = cmd_verify(spec)
        runs.append(out + "\n" + out2)
    assert runs[0] == runs[1]


def test_console_entry_point(tmp_path):
    good = write(tmp_path, "good.spec", CLASSICAL)
    proc = subprocess.run(
        [sys.executable, "-m", "genpuiseux.cli", "expand", good],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert "t^(3/2)" in proc.stdout
