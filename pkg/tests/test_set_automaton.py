import json
import random

import pytest
from conftest import automaton, fixture_path, golden, digest
from hypothesis import given, settings
from hypothesis import strategies as st

from setautomata.boolalg import Relation
from setautomata.core import DataWord, enumerate_data_words, permute_data
from setautomata.harness import bounded_language, random_set_automaton
from setautomata.set_automaton import (Acceptance, AutomatonError, ClassMemoryAutomaton, Configuration,
                                       SetAutomaton, Transition, accepts, bounded_sets, class_automaton_from_json,
                                       class_automaton_to_sa, cma_to_sa, convert_acceptance, find_order,
                                       intersect_with_stable, is_normal, is_ordered, is_quasi_normal,
                                       normalize, normalized_update, rename_letters, sa_to_class_automaton,
                                       stable_sets, step, union_with_stable)

E = frozenset()


def one_state(sets, transitions, acceptance, alphabet=("a", "b")):
    return SetAutomaton(["q"], sets, list(alphabet), transitions, ["q"], ["q"], acceptance)


def accept_all(alphabet=("a", "b")):
    return one_state([], [Transition("q", a, E, Relation([]), E, E, "q") for a in alphabet],
                     Acceptance.explicit([E]), alphabet)


def fresh_only():
    """Every value occurs once: a value already in Y is never read again."""
    names = ["Y"]
    ident = Relation.identity(names)
    return one_state(names, [Transition("q", a, E, ident, frozenset({"Y"}), E, "q") for a in "ab"],
                     Acceptance.explicit([{"Y"}]))


def w(*pairs):
    return DataWord.of(pairs)


def test_step_adds_then_removes():
    A = fresh_only()
    cfg = Configuration.initial(A, "q")
    t = A.transitions[0]
    after = step(A, cfg, t, ("a", 4))
    assert after.contents["Y"] == {4}
    both = Transition("q", "a", E, Relation.identity(["Y"]), frozenset({"Y"}), frozenset({"Y"}), "q")
    assert step(A, cfg, both, ("a", 4)).contents["Y"] == frozenset()


def test_l12_examples(counter_automaton):
    assert accepts(counter_automaton, w(("i", 1), ("d", 1), ("z", 2)))
    assert not accepts(counter_automaton, w(("i", 1), ("z", 2), ("d", 1)))
    assert not is_normal(counter_automaton)
    assert stable_sets(counter_automaton) == {"Y3"}


def test_no_initial_state_accepts_nothing():
    A = accept_all()
    B = SetAutomaton(A.states, A.sets, A.alphabet, A.transitions, [], A.final, A.acceptance)
    assert bounded_language(B, 3) == frozenset()


def test_normalized_update_example():
    names = ("Y1", "Y2", "Y3")
    rho = Relation.from_map(names, {"Y1": {"Y1", "Y2"}})
    units = [frozenset({y}) for y in names]
    assert normalized_update(rho, units) == {
        frozenset({"Y1"}): frozenset({"Y1", "Y2"}),
        frozenset({"Y2"}): frozenset({"Y2"}),
        frozenset({"Y3"}): frozenset({"Y3"}),
    }


def test_normalize_l12(counter_automaton):
    N = normalize(convert_acceptance(counter_automaton, 1))
    assert is_normal(N)
    assert bounded_language(N, 4) == bounded_language(counter_automaton, 4)


def test_identity_only_automaton():
    A = fresh_only()
    assert stable_sets(A) == {"Y"}
    assert is_quasi_normal(A)
    assert bounded_sets(A) == frozenset()
    N = normalize(A)
    assert all(t.rho == Relation.identity(N.sets) for t in N.transitions)


def test_bounded_sets():
    names = ["y1", "y2"]
    drain = Relation(names, [("y1", "y2"), ("y2", "y2")])
    A = one_state(names, [Transition("q", "a", E, drain, E, E, "q")], Acceptance.explicit([E]))
    assert bounded_sets(A) == {"y1"}
    B = one_state(names, [], Acceptance.explicit([E]))
    assert bounded_sets(B) == {"y1", "y2"}


def test_order_checks():
    names = ["y1", "y2"]
    ident = Relation.identity(names)
    drain = Relation(names, [("y1", "y2"), ("y2", "y2")])
    A = one_state(names, [Transition("q", "a", E, ident, frozenset({"y1"}), E, "q"),
                          Transition("q", "b", E, drain, E, E, "q")], Acceptance.explicit([E]))
    assert is_ordered(A, ["y1", "y2"])
    back = Relation(names, [("y2", "y1"), ("y1", "y1")])
    B = one_state(names, [Transition("q", "a", E, ident, frozenset({"y2"}), E, "q"),
                          Transition("q", "b", E, back, E, E, "q")], Acceptance.explicit([E]))
    assert not is_ordered(B, ["y1", "y2"])
    assert find_order(B) == ["y2", "y1"]


def test_mode4_to_mode1(counter_automaton):
    B = convert_acceptance(counter_automaton, 1)
    assert B.acceptance.mode == 1
    for vec in [E, {"Y3"}, {"Y1"}, {"Y2", "Y3"}]:
        assert B.acceptance.vector_ok(frozenset(vec)) == (not ({"Y1", "Y2"} & set(vec)))


def test_empty_language_survives_conversions():
    A = SetAutomaton(["q"], ["Y"], ["a"], [], ["q"], [], Acceptance.explicit([{"Y"}]))
    for mode in (2, 3, 4, 1):
        A = convert_acceptance(A, mode)
        assert bounded_language(A, 3) == frozenset()


@pytest.mark.parametrize("seed", range(6))
def test_round_trip_small(seed):
    A = random_set_automaton(random.Random(seed), density=0.4)
    L = bounded_language(A, 3)
    B = A
    for mode in (2, 3, 4, 1):
        B = convert_acceptance(B, mode)
        assert bounded_language(B, 3) == L, mode


def test_rename_letters(counter_automaton):
    B = rename_letters(counter_automaton, {"i": "a", "d": "a", "z": "b"})
    image = set()
    for word in bounded_language(counter_automaton, 3):
        image.add(DataWord(tuple({"i": "a", "d": "a", "z": "b"}[c] for c in word.letters), word.data))
    renamed = bounded_language(B, 3)
    assert image <= renamed
    for word in renamed:
        assert any(word.data == v.data for v in image)
    assert is_quasi_normal(B) == is_quasi_normal(counter_automaton)


def test_union_and_intersection_with_stable():
    A = convert_acceptance(automaton("counter_words"), 1)
    empty = SetAutomaton(["s"], ["S"], A.alphabet, [], ["s"], [], Acceptance.explicit([E]))
    U = union_with_stable(A, empty)
    assert bounded_language(U, 3) == bounded_language(A, 3)
    fresh = one_state(["F"], [Transition("q", a, E, Relation.identity(["F"]), frozenset({"F"}), E, "q")
                              for a in A.alphabet], Acceptance.explicit([{"F"}]), A.alphabet)
    I = intersect_with_stable(A, fresh)
    LA = bounded_language(A, 3)
    assert bounded_language(I, 3) == {x for x in LA if len(set(x.data)) == len(x)}
    with pytest.raises(AutomatonError):
        union_with_stable(A, A)


def test_accept_all_sizes():
    assert len(bounded_language(accept_all(("a",)), 2)) == 4


def test_json_round_trip(counter_automaton):
    again = SetAutomaton.from_json(json.loads(json.dumps(counter_automaton.to_json())))
    assert bounded_language(again, 3) == bounded_language(counter_automaton, 3)


@pytest.mark.parametrize("name", ["cma_distinct", "cma_ab_pairs", "cma_even"])
def test_cma_fixtures(name):
    M = ClassMemoryAutomaton.from_json(json.loads(fixture_path("automata", f"{name}.json").read_text()))
    A = cma_to_sa(M)
    assert digest(bounded_language(A, 4)) == {k: golden("automaton_languages")[name][k]
                                             for k in ("by_length", "sha256")}


def test_cma_small_cases():
    everything = ClassMemoryAutomaton(["p"], ["a"], [("p", "a", None, "p"), ("p", "a", "p", "p")], "p", ["p"], ["p"])
    A = cma_to_sa(everything)
    assert len(A.sets) == 0
    assert len(bounded_language(A, 3)) == len(list(enumerate_data_words("a", 3)))
    assert len(A.sets) == 0
    even = ClassMemoryAutomaton.from_json(json.loads(fixture_path("automata", "cma_even.json").read_text()))
    assert len(cma_to_sa(even).sets) == 1


@pytest.mark.parametrize("name", ["ca_one_a", "ca_starts_b", "ca_sorted_small"])
def test_class_automaton_fixtures(name):
    C = class_automaton_from_json(json.loads(fixture_path("automata", f"{name}.json").read_text()))
    want = {k: golden("automaton_languages")[name][k] for k in ("by_length", "sha256")}
    A = class_automaton_to_sa(C)
    assert digest(bounded_language(A, 4)) == want
    back = sa_to_class_automaton(convert_acceptance(A, 2))
    assert digest(bounded_language(back.accepts, 4, alphabet=C.alphabet)) == want


@pytest.mark.parametrize("name", ["counter_words", "on_drain", "on_two_phase"])
def test_sa_fixtures_match_golden(name):
    A = automaton(name)
    want = {k: golden("automaton_languages")[name][k] for k in ("by_length", "sha256")}
    assert digest(bounded_language(A, 4)) == want


def test_accepts_checks_invariants_on_normal_runs():
    A = automaton("on_drain")
    for word in enumerate_data_words(A.alphabet, 4):
        assert accepts(A, word, invariants=True) == accepts(A, word)


words = st.lists(st.tuples(st.sampled_from("idz"), st.integers(0, 4)), max_size=5).map(DataWord.of)


@settings(max_examples=60, deadline=None)
@given(words, st.permutations(range(5)))
def test_accepts_is_permutation_invariant(word, perm):
    A = automaton("counter_words")
    moved = permute_data(word, {d: perm[d] + 7 for d in range(5)})
    assert accepts(A, moved) == accepts(A, word)
