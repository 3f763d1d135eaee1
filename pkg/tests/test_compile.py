import pytest
from conftest import formula, golden, digest, semigroup

from setautomata.boolalg import Relation
from setautomata.compile import (AA_CASES, AA_MIRRORED, AE_CASES, AE_PAST, CompileError, Sat, accepts_checked,
                                 build_pipeline, case_report, compile_formula, decide_sat, qnsa_to_ordered_normal,
                                 sa_to_formula, to_ordered)
from setautomata.core import EMPTY as EMPTY_WORD, enumerate_data_words
from setautomata.harness import bounded_language
from setautomata.logic import conj, model_check, parse_formula
from setautomata.multicounter import UnknownUpTo
from setautomata.semigroup import Morphism, from_cayley_table
from setautomata.set_automaton import Acceptance, SetAutomaton, Transition, accepts, is_normal, is_ordered

E = frozenset()
AA_LABELS = ["distant_same", "class_successor", "adjacent_successor",
             "distant_same_reversed", "class_successor_reversed", "adjacent_successor_reversed"]
AE_LABELS = ["later_same", "next_occurrence", "next_position_same",
             "earlier_same", "previous_occurrence", "previous_position_same"]
AA = [f"aa_{label}" for label in AA_LABELS]
AE = [f"ae_{label}" for label in AE_LABELS]


def trivial_morphism(letters="ab"):
    return Morphism(from_cayley_table(["1"], [[0]]), {a: "1" for a in letters}, {})


def test_case_tables_are_consistent():
    assert set(AA_CASES.values()) >= {"distant_same", "class_successor", "adjacent_successor"}
    assert set(AA_MIRRORED.values()) == {"distant_same_reversed", "class_successor_reversed", "adjacent_successor_reversed"}
    assert len(set(AE_CASES.values())) == len(AE_CASES)
    for (order, _), label in AE_CASES.items():
        assert (label in AE_PAST) == (order in ("y<<x", "y+1=x", "x=y"))


@pytest.mark.parametrize("name", AA + AE)
def test_fixture_hits_its_case(name):
    ff = formula(name)
    label = name[3:]
    assert label in case_report(ff.formula, ff.morphism)


@pytest.mark.parametrize("name", AA + AE + ["id_or_z", "no_z_between", "counter_words"])
def test_compiled_languages_match_golden(name):
    ff = formula(name)
    A = compile_formula(ff.formula, ff.morphism)
    want = {k: golden("formula_languages")[name][k] for k in ("by_length", "sha256")}
    assert digest(bounded_language(A, 4)) == want


def test_compiled_runs_keep_invariants(id_or_z):
    A = compile_formula(id_or_z.formula, id_or_z.morphism)
    for word in enumerate_data_words("idz", 3):
        assert accepts_checked(A, word) == model_check(id_or_z.formula, word, id_or_z.morphism)


def test_unsatisfiable_premise_accepts_everything():
    h = trivial_morphism()
    A = compile_formula(parse_formula("(forall x (forall y (imp (and (lt x y) (not (lt x y))) (lt y x))))"), h)
    assert len(bounded_language(A, 3)) == len(list(enumerate_data_words("ab", 3)))


def test_trivial_monoid_reordering():
    h = trivial_morphism()
    B = to_ordered(compile_formula(parse_formula("(forall x (forall y (imp (lt x y) (not (sim x y)))))"), h))
    # the adjoined identity for "just read" sits on top of the single element
    M = B.monoid
    assert B.k[M.index("1")] == 1 and B.k[M.index("1^")] == 2
    assert len(B.y_sets) == 2
    assert bounded_language(B, 3) == {w for w in enumerate_data_words("ab", 3) if len(set(w.data)) == len(w)}


def test_non_linear_band_rejected():
    u1sq = semigroup("u1sq")
    h = Morphism(u1sq, {"a": "r", "b": "s"}, {})
    with pytest.raises(CompileError, match="J-incomparable"):
        to_ordered(compile_formula(parse_formula("(forall x (a x))"), h))
    with pytest.raises(CompileError):
        decide_sat(parse_formula("(forall x (a x))"), h, 2)


def test_phi1_reordering(id_or_z):
    B = to_ordered(compile_formula(id_or_z.formula, id_or_z.morphism))
    M = B.materialize()
    assert is_ordered(M, list(B.order))
    assert bounded_language(B, 4) == bounded_language(id_or_z.formula, 4, morphism=id_or_z.morphism)


def test_phi1_ordered_normal(id_or_z):
    N = qnsa_to_ordered_normal(to_ordered(compile_formula(id_or_z.formula, id_or_z.morphism)))
    assert is_normal(N.automaton)
    assert is_ordered(N.automaton, N.order)
    assert bounded_language(N.automaton, 4) == bounded_language(id_or_z.formula, 4, morphism=id_or_z.morphism)


def test_pipeline_stages_agree(no_z_between):
    pipe = build_pipeline(no_z_between.formula, no_z_between.morphism)
    want = bounded_language(no_z_between.formula, 3, morphism=no_z_between.morphism)
    assert bounded_language(pipe.compiled, 3) == want
    assert bounded_language(pipe.ordered, 3) == want
    assert bounded_language(pipe.normal.automaton, 3) == want
    assert bounded_language(pipe.oma, 3) == {w.letters for w in want}


def one_state_mode2(transitions, sets=("Y",), alphabet=("a", "b"), final=("q",)):
    return SetAutomaton(["q"], list(sets), list(alphabet), transitions, ["q"], list(final),
                        Acceptance(2, local_final=frozenset(final)))


def check_sa_to_formula(A):
    phi, h = sa_to_formula(A)
    for word in enumerate_data_words(A.alphabet, 3):
        assert model_check(phi, word, h) == accepts(A, word), str(word)


def test_sa_to_formula_accept_all():
    check_sa_to_formula(one_state_mode2([Transition("q", a, E, Relation([]), E, E, "q") for a in "ab"], sets=()))


def test_sa_to_formula_fresh_data():
    ident = Relation.identity(["Y"])
    check_sa_to_formula(one_state_mode2([Transition("q", a, E, ident, frozenset({"Y"}), E, "q") for a in "ab"]))


def test_sa_to_formula_empty():
    check_sa_to_formula(one_state_mode2([], final=()))


def test_decide_sat_examples(id_or_z, no_z_between):
    res = decide_sat(id_or_z.formula, id_or_z.morphism, 2, nonempty=True)
    assert isinstance(res, Sat) and len(res.witness) == 1
    assert model_check(id_or_z.formula, res.witness, id_or_z.morphism)
    assert decide_sat(no_z_between.formula, no_z_between.morphism, 2) == Sat(EMPTY_WORD)
    stuck = conj(id_or_z.formula, parse_formula("(forall x (i x))"), parse_formula("(exists x (eq x x))"))
    assert decide_sat(stuck, id_or_z.morphism, 4) == UnknownUpTo(4)
