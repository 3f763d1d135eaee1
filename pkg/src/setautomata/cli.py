"""Command-line entry point.

Exit codes: 0 when a verdict was reached, 1 when the bounded search gave up
("unknown"), 2 for unreadable or malformed input.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .core import DataWord, DataWordError, load_data_word
from .logic import FormulaError, load_formula, model_check, scott_normal_form, to_text
from .semigroup import SemigroupError, load_morphism, load_semigroup
from .set_automaton import AutomatonError

UNKNOWN = 1
INPUT_ERROR = 2

INPUT_ERRORS = (OSError, json.JSONDecodeError, KeyError, ValueError, DataWordError, FormulaError,
                SemigroupError, AutomatonError)


class Unknown(Exception):
    pass


def emit(ctx, payload: dict, text: str):
    if ctx.obj["format"] == "json":
        click.echo(json.dumps(payload, indent=2, sort_keys=True, default=str))
    else:
        click.echo(text)


def read_word(text: str) -> DataWord:
    """A file (JSON or ``letter value`` lines), ``-``/``eps`` for the empty
    word, or inline ``a:1 b:2``."""
    if text in ("-", "eps", "ε", ""):
        return DataWord((), ())
    if Path(text).is_file():
        return load_data_word(text)
    pairs = []
    for tok in text.replace(",", " ").split():
        letter, sep, value = tok.rpartition(":")
        if not sep or not value.isdigit():
            raise DataWordError(f"cannot read {tok!r}; expected letter:value")
        pairs.append((letter, int(value)))
    return DataWord.of(pairs)


def formula_and_morphism(path, morphism_path):
    h = load_morphism(morphism_path) if morphism_path else None
    ff = load_formula(path, h)
    if ff.morphism is None:
        raise FormulaError("no morphism given (use --morphism or an @morphism header)")
    return ff.formula, ff.morphism


@click.group()
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.pass_context
def main_group(ctx, fmt):
    """Set automata, semigroups and two-variable logic over data words."""
    ctx.ensure_object(dict)
    ctx.obj["format"] = fmt


# --- semigroup ----------------------------------------------------------------------


@main_group.group()
def semigroup():
    """Finite semigroup analyses."""


@semigroup.command("analyze")
@click.argument("path")
@click.pass_context
def semigroup_analyze(ctx, path):
    from .semigroup import idempotents, is_aperiodic, is_band, is_in_DA, non_linear_witness
    S = load_semigroup(path)
    info = {
        "size": len(S),
        "monoid": S.is_monoid,
        "band": is_band(S),
        "aperiodic": is_aperiodic(S),
        "in_DA": is_in_DA(S),
        "idempotents": sorted(S.name(e) for e in idempotents(S)),
    }
    if S.is_monoid:
        info["linear_band"] = non_linear_witness(S).describe()
    emit(ctx, info, "\n".join(f"{k}: {v}" for k, v in info.items()))


@semigroup.command("linear-band")
@click.argument("path")
@click.pass_context
def semigroup_linear_band(ctx, path):
    from .semigroup import non_linear_witness
    S = load_semigroup(path)
    if not S.is_monoid:
        S = S.with_identity()
    w = non_linear_witness(S)
    emit(ctx, {"verdict": w.describe()}, w.describe())


@semigroup.command("green")
@click.argument("path")
@click.pass_context
def semigroup_green(ctx, path):
    from .semigroup import green
    S = load_semigroup(path)
    g = green(S)
    info = {k: [sorted(S.name(x) for x in block) for block in getattr(g, k)] for k in ("R", "L", "J", "H", "D")}
    lines = [f"{k}: " + " ".join("{" + ",".join(b) + "}" for b in v) for k, v in info.items()]
    emit(ctx, info, "\n".join(lines))


# --- set automata -----------------------------------------------------------------


@main_group.group()
def sa():
    """Set automata."""


@sa.command("run")
@click.argument("aut")
@click.argument("word")
@click.pass_context
def sa_run(ctx, aut, word):
    from .set_automaton import accepts, load_automaton
    A = load_automaton(aut)
    w = read_word(word)
    ok = accepts(A, w)
    emit(ctx, {"word": str(w), "accepted": ok}, f"{'accepted' if ok else 'rejected'}: {w}")


@sa.command("normalize")
@click.argument("aut")
@click.pass_context
def sa_normalize(ctx, aut):
    from .set_automaton import convert_acceptance, load_automaton, normalize
    A = load_automaton(aut)
    if A.acceptance.mode != 1:
        A = convert_acceptance(A, 1)
    click.echo(json.dumps(normalize(A).to_json(), indent=2))


@sa.command("analyze")
@click.argument("aut")
@click.pass_context
def sa_analyze(ctx, aut):
    from .set_automaton import bounded_sets, find_order, is_normal, is_quasi_normal, load_automaton, stable_sets
    A = load_automaton(aut)
    normal = is_normal(A)
    info = {
        "states": len(A.states),
        "sets": list(A.sets),
        "normal": normal,
        "quasi_normal": is_quasi_normal(A),
        "stable": sorted(stable_sets(A)),
        "bounded": sorted(bounded_sets(A)) if normal else None,
        "order": find_order(A) if is_quasi_normal(A) else None,
    }
    emit(ctx, info, "\n".join(f"{k}: {v}" for k, v in info.items()))


@sa.command("convert-acceptance")
@click.argument("aut")
@click.option("--to", "mode", type=click.IntRange(1, 4), required=True)
def sa_convert(aut, mode):
    from .set_automaton import convert_acceptance, load_automaton
    A = load_automaton(aut)
    click.echo(json.dumps(convert_acceptance(A, mode).to_json(), indent=2))


# --- multicounter -------------------------------------------------------------------


@main_group.group()
def oma():
    """Ordered multicounter automata."""


@oma.command("run")
@click.argument("machine")
@click.argument("word")
@click.option("--budget", type=int, default=None, help="step budget (default grows with the word)")
@click.pass_context
def oma_run(ctx, machine, word, budget):
    from .compile import default_budget
    from .multicounter import load_oma, run_bounded
    M = load_oma(machine)
    letters = tuple(word.split()) if word not in ("-", "eps", "ε") else ()
    b = budget if budget is not None else default_budget(len(letters))
    ok = run_bounded(M, letters, b)
    emit(ctx, {"word": list(letters), "accepted": ok, "budget": b},
         f"{'accepted' if ok else 'no accepting run within budget'} ({b} steps)")
    if not ok:
        raise Unknown()


@oma.command("empty")
@click.argument("machine")
@click.option("--max-len", type=int, required=True)
@click.option("--budget", type=int, default=None)
@click.pass_context
def oma_empty(ctx, machine, max_len, budget):
    from .compile import default_budget
    from .multicounter import NonEmpty, emptiness_bounded, load_oma
    M = load_oma(machine)
    res = emptiness_bounded(M, max_len, budget if budget is not None else default_budget)
    if isinstance(res, NonEmpty):
        emit(ctx, {"verdict": "nonempty", "witness": list(res.witness)}, "nonempty: " + (" ".join(res.witness) or "ε"))
        return
    emit(ctx, {"verdict": "unknown", "max_len": max_len}, f"unknown up to length {max_len}")
    raise Unknown()


# --- logic ----------------------------------------------------------------------------


@main_group.group()
def logic():
    """Formulas over data words."""


@logic.command("check")
@click.argument("formula")
@click.argument("word")
@click.option("--morphism", default=None)
@click.pass_context
def logic_check(ctx, formula, word, morphism):
    h = load_morphism(morphism) if morphism else None
    ff = load_formula(formula, h)
    w = read_word(word)
    ok = model_check(ff.formula, w, ff.morphism)
    emit(ctx, {"word": str(w), "holds": ok}, f"{'true' if ok else 'false'}: {w}")


@logic.command("snf")
@click.argument("formula")
@click.pass_context
def logic_snf(ctx, formula):
    ff = load_formula(formula)
    s = scott_normal_form(ff.formula)
    info = {"predicates": list(s.predicates), "forall_forall": to_text(s.chi),
            "forall_exists": [to_text(c) for c in s.chis], "empty_word": s.empty_value}
    lines = [f"predicates: {' '.join(s.predicates) or '-'}", f"AA: {info['forall_forall']}"]
    lines += [f"AE: {c}" for c in info["forall_exists"]]
    lines.append(f"empty word: {s.empty_value}")
    emit(ctx, info, "\n".join(lines))


# --- compilation --------------------------------------------------------------------


@main_group.group("compile")
def compile_group():
    """Formula to automaton."""


@compile_group.command("formula")
@click.argument("formula")
@click.option("--morphism", default=None)
@click.option("--to", "target", type=click.Choice(["sa", "ordered", "normal", "oma"]), default="sa",
              show_default=True)
@click.option("--max-vectors", type=int, default=20000, show_default=True)
def compile_formula_cmd(formula, morphism, target, max_vectors):
    from .compile import build_pipeline, compile_formula, to_ordered
    from .set_automaton import materialize
    phi, h = formula_and_morphism(formula, morphism)
    if target == "sa":
        A = compile_formula(phi, h)
        out = materialize(A, max_vectors, name_sets=A.sets).to_json()
    elif target == "ordered":
        B = to_ordered(compile_formula(phi, h))
        out = B.materialize(max_vectors).to_json()
        out["order"] = [str(y) for y in B.order]
    elif target == "normal":
        N = build_pipeline(phi, h).normal
        out = N.automaton.to_json()
        out["order"] = [str(y) for y in N.order]
    else:
        out = build_pipeline(phi, h).oma.to_json()
    click.echo(json.dumps(out, indent=2))


@main_group.command("decide-sat")
@click.argument("formula")
@click.option("--morphism", default=None)
@click.option("--max-len", type=int, required=True)
@click.option("--budget", type=int, default=None)
@click.option("--nonempty", is_flag=True, help="ignore the empty word as a model")
@click.pass_context
def decide_sat_cmd(ctx, formula, morphism, max_len, budget, nonempty):
    from .compile import Sat, decide_sat
    phi, h = formula_and_morphism(formula, morphism)
    res = decide_sat(phi, h, max_len, budget, nonempty=nonempty)
    if isinstance(res, Sat):
        w = res.witness
        emit(ctx, {"verdict": "sat", "witness": w.to_json(), "length": len(w)}, f"Sat {w}")
        return
    emit(ctx, {"verdict": "unknown", "max_len": max_len}, f"UnknownUpTo({max_len})")
    raise Unknown()


# --- oracles ----------------------------------------------------------------------------


@main_group.group()
def oracle():
    """Brute-force bounded languages."""


@oracle.command("formula")
@click.argument("formula")
@click.option("--morphism", default=None)
@click.option("--max-len", type=int, required=True)
@click.pass_context
def oracle_formula(ctx, formula, morphism, max_len):
    from .harness import bounded_language, sorted_words
    phi, h = formula_and_morphism(formula, morphism)
    words = sorted_words(bounded_language(phi, max_len, morphism=h))
    emit(ctx, {"words": [w.to_json() for w in words]}, "\n".join(str(w) for w in words))


@oracle.command("automaton")
@click.argument("aut")
@click.option("--max-len", type=int, required=True)
@click.pass_context
def oracle_automaton(ctx, aut, max_len):
    from .harness import bounded_language, sorted_words
    from .set_automaton import load_automaton
    words = sorted_words(bounded_language(load_automaton(aut), max_len))
    emit(ctx, {"words": [w.to_json() for w in words]}, "\n".join(str(w) for w in words))


@oracle.command("2cm")
@click.argument("machine")
@click.option("--family", type=click.Choice(["1", "2"]), default="1", show_default=True)
@click.option("--max-steps", type=int, default=4, show_default=True)
@click.pass_context
def oracle_2cm(ctx, machine, family, max_steps):
    """Halting runs of a two-counter machine and whether their encodings
    satisfy the family's formula."""
    from . import harness
    M = harness.load_machine(machine)
    enc = harness.encode_2cm_family1(M) if family == "1" else harness.encode_2cm_family2(M)
    build = harness.run_word_family1 if family == "1" else harness.run_word_family2
    rows = []
    for run in M.halting_runs(max_steps):
        w = build(M, run)
        if family == "1":
            ok = model_check(enc.formula, w, enc.morphism)
        else:
            ok = model_check(enc.matrix(), w, enc.morphism, enc.certificate(M, w))
        rows.append({"run": list(run), "word": str(w), "holds": ok})
    text = "\n".join(f"{' '.join(r['run'])}: {r['word']} {r['holds']}" for r in rows) or "no halting run"
    emit(ctx, {"runs": rows}, text)


def main(argv=None) -> int:
    args = sys.argv[1:] if argv is None else list(argv)
    try:
        main_group.main(args=args, prog_name="setautomata", standalone_mode=False)
    except Unknown:
        return UNKNOWN
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return INPUT_ERROR
    except click.exceptions.Abort:
        return INPUT_ERROR
    except INPUT_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return INPUT_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
