import json

import pytest
from conftest import fixture_path

from setautomata.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, capsys.readouterr().out


def fx(*parts):
    return fixture_path(*parts)


def test_linear_band_verdicts(capsys):
    assert run(capsys, "semigroup", "linear-band", fx("semigroups", "n2.json")) == (0, "no: non-idempotent x1\n")
    assert run(capsys, "semigroup", "linear-band", fx("semigroups", "u1.json")) == (0, "yes: linear band\n")
    code, out = run(capsys, "--format", "json", "semigroup", "linear-band", fx("semigroups", "u1sq.json"))
    assert code == 0 and json.loads(out)["verdict"] == "no: J-incomparable idempotents r, s"


def test_semigroup_analyze_and_green(capsys):
    code, out = run(capsys, "--format", "json", "semigroup", "analyze", fx("semigroups", "ab_band.json"))
    assert code == 0 and json.loads(out)["in_DA"] is True
    code, out = run(capsys, "semigroup", "green", fx("semigroups", "u1sq.json"))
    assert code == 0 and out.startswith("R:")


def test_sa_commands(capsys):
    counter_automaton = fx("automata", "counter_words.json")
    assert run(capsys, "sa", "run", counter_automaton, fx("words", "id_z.txt")) == (0, "accepted: (i,1)(d,1)(z,2)\n")
    assert run(capsys, "sa", "run", counter_automaton, "i:1,z:2,d:1") == (0, "rejected: (i,1)(z,2)(d,1)\n")
    assert run(capsys, "sa", "run", counter_automaton, "eps")[1].startswith("accepted")
    code, out = run(capsys, "--format", "json", "sa", "analyze", counter_automaton)
    assert code == 0 and json.loads(out)["stable"] == ["Y3"]
    code, out = run(capsys, "sa", "convert-acceptance", counter_automaton, "--to", "1")
    assert code == 0 and json.loads(out)["acceptance"]["mode"] == 1
    code, out = run(capsys, "sa", "normalize", fx("automata", "on_drain.json"))
    assert code == 0 and json.loads(out)["sets"]


def test_logic_commands(capsys):
    id_or_z = fx("formulas", "id_or_z.fo")
    assert run(capsys, "logic", "check", id_or_z, fx("words", "iid_one_class.txt"))[1].startswith("false")
    assert run(capsys, "logic", "check", id_or_z, fx("words", "nested.json"))[1].startswith("true")
    code, out = run(capsys, "logic", "snf", id_or_z)
    assert code == 0 and "AE:" in out


def test_compile_and_oma(capsys, tmp_path):
    code, out = run(capsys, "compile", "formula", fx("formulas", "id_or_z.fo"), "--to", "oma")
    assert code == 0
    path = tmp_path / "id_or_z.oma.json"
    path.write_text(out)
    assert run(capsys, "oma", "empty", path, "--max-len", "2") == (0, "nonempty: ε\n")
    assert run(capsys, "oma", "run", path, "z")[1].startswith("accepted")
    for target in ("sa", "ordered", "normal"):
        code, out = run(capsys, "compile", "formula", fx("formulas", "ae_next_position_same.fo"), "--to", target)
        assert code == 0 and json.loads(out)["states"]


def test_decide_sat(capsys):
    code, out = run(capsys, "decide-sat", fx("formulas", "id_or_z.fo"), "--morphism", fx("formulas", "u1_z.json"),
                    "--max-len", "3")
    assert code == 0 and out.startswith("Sat")
    assert run(capsys, "decide-sat", fx("formulas", "id_or_z.fo"), "--max-len", "2", "--nonempty") == (0, "Sat (z,1)\n")


def test_oracles(capsys):
    code, out = run(capsys, "oracle", "formula", fx("formulas", "id_or_z.fo"), "--max-len", "2")
    assert out.split("\n")[:4] == ["ε", "(z,1)", "(i,1)(d,1)", "(z,1)(z,2)"]
    code, out = run(capsys, "oracle", "2cm", fx("automata", "2cm_inc_dec.json"))
    assert out == "t1 t2 t3: (t1,1)(t2,1)(t3,2) True\n"
    code, out = run(capsys, "oracle", "2cm", fx("automata", "2cm_zero_zero.json"), "--family", "2")
    assert out.endswith("True\n")


def test_unknown_exit_code(capsys, tmp_path):
    stuck = tmp_path / "stuck.json"
    stuck.write_text(json.dumps({"states": ["p", "f"], "alphabet": ["a"], "counters": [],
                                 "transitions": [["p", "a", "zero:<=0", "p"]], "initial": ["p"], "final": ["f"]}))
    assert run(capsys, "oma", "empty", stuck, "--max-len", "3")[0] == 1


@pytest.mark.parametrize("argv", [
    ["sa", "run", "missing.json", "eps"],
    ["semigroup", "analyze", "missing.json"],
    ["no-such-command"],
    ["sa", "run", str(fx("automata", "counter_words.json")), "i:x"],
    ["logic", "check", str(fx("formulas", "id_or_z.fo")), "a 1 2"],
])
def test_input_errors(capsys, argv):
    assert main(argv) == 2
