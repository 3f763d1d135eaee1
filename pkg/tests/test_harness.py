import random

import pytest
from conftest import fixture_path, golden

from setautomata.core import DataWord, enumerate_data_words
from setautomata.harness import (DFA, LanguageOracle, TwoCounterMachine, bounded_language, encode_2cm_family1,
                                 encode_2cm_family2, load_machine, minimize, projections, random_ordered_normal_sa,
                                 random_set_automaton, restrict_to_image, run_word_family1, run_word_family2,
                                 sorted_words, syntactic_classes_brute, syntactic_monoid, tiny_machines)
from setautomata.logic import model_check
from setautomata.semigroup import is_linear_band
from setautomata.set_automaton import find_order, is_normal

MACHINES = ["zero_zero", "inc_dec", "dec_at_zero"]


def w(*pairs):
    return DataWord.of(pairs)


def test_phi1_short_language(id_or_z):
    L = bounded_language(id_or_z.formula, 2, morphism=id_or_z.morphism)
    assert w(("z", 1)) in L and w(("i", 1), ("d", 1)) in L
    assert w(("i", 1), ("i", 2)) not in L


def test_oracle_kinds(id_or_z, counter_automaton):
    assert LanguageOracle(id_or_z.formula, morphism=id_or_z.morphism).kind() == "formula"
    assert LanguageOracle(counter_automaton).kind() == "automaton"
    assert LanguageOracle(lambda x: True, alphabet="a").kind() == "predicate"


def test_accept_all_predicate():
    assert len(bounded_language(lambda x: True, 2, alphabet="a")) == 4
    assert bounded_language(lambda x: False, 3, alphabet="ab") == frozenset()


def test_workers_give_same_language(counter_automaton):
    assert bounded_language(counter_automaton, 4, workers=3) == bounded_language(counter_automaton, 4)


def test_projections():
    assert projections({w(("a", 1), ("b", 1)), w(("a", 1), ("b", 2))}) == {("a", "b")}


def test_sorted_words_by_length_first():
    words = list(enumerate_data_words("ab", 2))
    shuffled = words[::-1]
    assert sorted_words(shuffled) == sorted_words(words)
    assert [len(x) for x in sorted_words(shuffled)] == sorted(len(x) for x in words)


def ab_dfa():
    return DFA.from_json({
        "states": ["s0", "s1", "s2", "dup"], "alphabet": ["a", "b"], "initial": "s0", "finals": ["s0", "s1"],
        "delta": {"s0": {"a": "s0", "b": "s1"}, "s1": {"a": "s2", "b": "s1"},
                  "s2": {"a": "dup", "b": "s1"}, "dup": {"a": "s2", "b": "s1"}},
    })


def test_minimize_merges_duplicates():
    D = ab_dfa()
    m = minimize(D)
    assert len(m.states) == 3
    for n in range(6):
        for i in range(2 ** n):
            word = "".join("ab"[(i >> k) & 1] for k in range(n))
            assert m.accepts(word) == D.accepts(word)


def test_syntactic_monoid_of_ab_language():
    M, h = syntactic_monoid(ab_dfa())
    assert sorted(M.elements) == ["1", "a", "b", "ba"]
    assert is_linear_band(M)
    assert {M.name(m) for m in h.language("L")} == {"1", "a", "b"}
    brute = syntactic_classes_brute(ab_dfa().accepts, "ab", 4, 3)
    assert len(brute) == 4


def test_restrict_to_image_drops_unused_elements():
    M = tiny_machines()["zero_zero"]
    full = encode_2cm_family1(M).morphism
    assert len(restrict_to_image(full).monoid) <= len(full.monoid)


@pytest.mark.parametrize("name", MACHINES)
def test_machine_files_match_builtins(name):
    M = load_machine(fixture_path("automata", f"2cm_{name}.json"))
    assert M.to_json() == tiny_machines()[name].to_json()
    assert TwoCounterMachine.from_json(M.to_json()).to_json() == M.to_json()
    assert M.follows_final_convention() == (name != "dec_at_zero")


def test_halting_runs():
    ms = tiny_machines()
    assert ms["zero_zero"].halting_runs(6) == [("t1", "t2")]
    assert ms["inc_dec"].halting_runs(6) == [("t1", "t2", "t3")]
    assert ms["dec_at_zero"].halting_runs(6) == []


@pytest.mark.parametrize("name", ["zero_zero", "inc_dec"])
def test_family1_run_word_satisfies_encoding(name):
    M = tiny_machines()[name]
    enc = encode_2cm_family1(M)
    for run in M.halting_runs(6):
        assert model_check(enc.formula, run_word_family1(M, run), enc.morphism)


@pytest.mark.parametrize("name", ["zero_zero", "inc_dec"])
def test_family2_run_word_satisfies_encoding(name):
    M = tiny_machines()[name]
    enc = encode_2cm_family2(M)
    for run in M.halting_runs(6):
        word = run_word_family2(M, run)
        assert model_check(enc.matrix(), word, enc.morphism, interp=enc.certificate(M, word))
        assert model_check(enc.formula, word, enc.morphism)


def test_family1_rejects_broken_runs():
    M = tiny_machines()["inc_dec"]
    enc = encode_2cm_family1(M)
    good = run_word_family1(M, ("t1", "t2", "t3"))
    assert model_check(enc.formula, good, enc.morphism)
    # decrement in a class of its own, or the zero test sharing a class
    for bad in [w(("t1", 1), ("t2", 2), ("t3", 3)), w(("t1", 1), ("t2", 1), ("t3", 1)),
                w(("t1", 1), ("t3", 2), ("t2", 1))]:
        assert not model_check(enc.formula, bad, enc.morphism)


@pytest.mark.parametrize("name", MACHINES)
def test_family1_bounded_language(name):
    M = tiny_machines()[name]
    enc = encode_2cm_family1(M)
    L = bounded_language(enc.formula, 4, morphism=enc.morphism)
    assert L == {run_word_family1(M, r) for r in M.halting_runs(4)}


def test_family2_non_halting_is_empty():
    M = tiny_machines()["dec_at_zero"]
    enc = encode_2cm_family2(M)
    assert bounded_language(enc.formula, 4, morphism=enc.morphism) == frozenset()


def test_random_generators():
    rng = random.Random(4)
    for _ in range(5):
        A = random_set_automaton(rng)
        assert all(not (t.u & t.v) for t in A.transitions)
        B = random_ordered_normal_sa(rng)
        assert is_normal(B) and find_order(B) is not None


def test_enumeration_matches_direct_filter(counter_automaton):
    from setautomata.set_automaton import accepts
    direct = {x for x in enumerate_data_words(counter_automaton.alphabet, 3) if accepts(counter_automaton, x)}
    assert bounded_language(counter_automaton, 3) == direct


@pytest.mark.parametrize("name", MACHINES)
def test_run_words_match_golden(name):
    M = tiny_machines()[name]
    want = golden("two_counter")[f"2cm_{name}"]
    runs = M.halting_runs(12)
    assert [list(r) for r in runs] == want["halting_runs"]
    assert [str(run_word_family1(M, r)) for r in runs] == want["family1_words"]
    assert [str(run_word_family2(M, r)) for r in runs] == want["family2_words"]
