"""Acceptance suite: one PASS/FAIL line per criterion, runtime limits pinned.

Run alone with ``pytest -v tests/test_acceptance.py``; the lines are printed
to the terminal even when output capture is on.
"""

import json
import random
import time

import numpy as np
import pytest
from checks import green_problems
from conftest import fixture_path, formula, golden, semigroup

from setautomata.boolalg import Relation, compose
from setautomata.compile import (accepts_checked, case_report, compile_formula, decide_sat, default_budget,
                                 Sat, to_ordered)
from setautomata.core import enumerate_data_words
from setautomata.harness import (bounded_language, encode_2cm_family1, projections, random_ordered_normal_sa,
                                 random_set_automaton, random_transformation_submonoid, tiny_machines)
from setautomata.logic import conj, model_check
from setautomata.multicounter import UnknownUpTo, accepted_projections, from_ordered_normal_sa
from setautomata.semigroup import (IncomparableIdempotents, LinearBand, NonIdempotent, full_transformation_monoid,
                                   is_in_DA, is_linear_band, non_linear_witness)
from setautomata.set_automaton import (ClassMemoryAutomaton, class_automaton_from_json, class_automaton_to_sa,
                                       cma_to_sa, convert_acceptance, is_ordered, load_automaton, normalize,
                                       normalized_update, sa_to_class_automaton)

LIMITS = {1: 1, 2: 30, 3: 60, 4: 5, 5: 300, 6: 300, 7: 300, 8: 600, 9: 600, 10: 600, 11: 300}
SEMIGROUPS = ["u1", "u1sq", "n2", "n3", "z2", "ab_band"]
AA_LABELS = ["distant_same", "class_successor", "adjacent_successor",
             "distant_same_reversed", "class_successor_reversed", "adjacent_successor_reversed"]
AE_LABELS = ["later_same", "next_occurrence", "next_position_same",
             "earlier_same", "previous_occurrence", "previous_position_same"]
CASES = [f"aa_{x}" for x in AA_LABELS] + [f"ae_{x}" for x in AE_LABELS]
FORMULAS = ["id_or_z", "no_z_between", "counter_words"] + CASES
MAX_LEN = 4


@pytest.fixture
def report(capsys):
    def emit(number, title, problems, started):
        elapsed = time.perf_counter() - started
        limit = LIMITS[number]
        ok = not problems and elapsed < limit
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} ({elapsed:.2f}s, limit {limit}s)"
        if problems:
            line += f" -- {len(problems)} problem(s), first: {problems[0]}"
        with capsys.disabled():
            print("\n" + line)
        assert not problems, problems[:5]
        assert elapsed < limit, f"took {elapsed:.1f}s, limit {limit}s"
    return emit


def language(recognizer, **kw):
    return bounded_language(recognizer, MAX_LEN, **kw)


def test_criterion_01_linear_band_classification(report):
    t0 = time.perf_counter()
    want = {"u1": LinearBand(), "ab_band": LinearBand(), "n2": NonIdempotent("x1"),
            "u1sq": IncomparableIdempotents("r", "s")}
    problems = []
    for name, expected in want.items():
        got = non_linear_witness(semigroup(name))
        if got != expected or is_linear_band(semigroup(name)) != isinstance(expected, LinearBand):
            problems.append(f"{name}: {got}")
    report(1, "linear-band classification of U1, U1², N2, ab band", problems, t0)


def test_criterion_02_linear_bands_in_da(report):
    t0 = time.perf_counter()
    rng = random.Random(20240601)
    sample = [random_transformation_submonoid(rng) for _ in range(200)] + [semigroup(n) for n in SEMIGROUPS]
    problems = [f"{M.elements}" for M in sample if is_linear_band(M) and not is_in_DA(M)]
    bands = sum(1 for M in sample if is_linear_band(M))
    if bands < 10:
        problems.append(f"only {bands} linear bands sampled")
    report(2, f"linear band => DA on {len(sample)} monoids ({bands} linear bands)", problems, t0)


def test_criterion_03_green_facts(report):
    t0 = time.perf_counter()
    problems = []
    for name, M in [("T2", full_transformation_monoid(2)), ("T3", full_transformation_monoid(3))] + \
            [(n, semigroup(n)) for n in SEMIGROUPS]:
        problems += [f"{name}: {p}" for p in green_problems(M)]
    report(3, "Green's facts on T2, T3 and fixtures", problems, t0)


def test_criterion_04_relation_algebra(report):
    t0 = time.perf_counter()
    problems = []
    rho = Relation((0, 1), [(0, 0), (0, 1), (1, 1)])
    sigma = Relation((0, 1), [(0, 0), (1, 0)])
    if compose(rho, sigma).pairs != {(0, 0), (1, 0)}:
        problems.append("rho sigma")
    if compose(sigma, rho).pairs != {(0, 0), (0, 1), (1, 0), (1, 1)}:
        problems.append("sigma rho")
    rng = random.Random(4)
    for i in range(10 ** 4):
        names = tuple(range(rng.randint(1, 5)))
        density = rng.random()
        r1, r2, r3 = (Relation(names, [(a, b) for a in names for b in names if rng.random() < density])
                      for _ in range(3))
        r12 = compose(r1, r2)
        product = (r1.matrix().astype(np.int64) @ r2.matrix().astype(np.int64)) > 0
        if not np.array_equal(r12.matrix(), product):
            problems.append(f"matrix of product, triple {i}")
        if compose(r12, r3) != compose(r1, compose(r2, r3)):
            problems.append(f"associativity, triple {i}")
    report(4, "relation products on 10^4 triples plus the two-element example", problems, t0)


def test_criterion_05_normalization(report):
    t0 = time.perf_counter()
    problems = []
    names = ("Y1", "Y2", "Y3")
    rho = Relation.from_map(names, {"Y1": {"Y1", "Y2"}})
    got = normalized_update(rho, [frozenset({y}) for y in names])
    if got != {frozenset({"Y1"}): frozenset({"Y1", "Y2"}), frozenset({"Y2"}): frozenset({"Y2"}),
               frozenset({"Y3"}): frozenset({"Y3"})}:
        problems.append(f"power-set update example: {got}")
    rng = random.Random(505)
    rich = 0
    for i in range(50):
        A = random_set_automaton(rng, n_states=rng.randint(1, 3), sets=("A", "B")[:rng.randint(1, 2)],
                                 density=0.7)
        L = language(A)
        rich += len(L) > 2
        if language(normalize(A)) != L:
            problems.append(f"automaton {i}")
    report(5, f"normalize preserves language on 50 random automata ({rich} with >2 words)", problems, t0)


def test_criterion_06_acceptance_round_trip(report):
    t0 = time.perf_counter()
    problems = []
    rng = random.Random(606)
    nonempty = 0
    for i in range(20):
        A = random_set_automaton(rng, n_states=rng.randint(1, 3), density=0.4)
        L = language(A)
        nonempty += bool(L)
        B = A
        for mode in (2, 3, 4, 1):
            B = convert_acceptance(B, mode)
            if language(B) != L:
                problems.append(f"automaton {i}, mode {mode}")
                break
    report(6, f"acceptance modes 1->2->3->4->1 on 20 automata ({nonempty} nonempty)", problems, t0)


def test_criterion_07_oma_projections(report):
    t0 = time.perf_counter()
    problems = []
    autos = [(n, load_automaton(fixture_path("automata", f"{n}.json"))) for n in ("on_drain", "on_two_phase")]
    rng = random.Random(707)
    autos += [(f"random {i}", random_ordered_normal_sa(rng, n_sets=rng.choice([2, 3]))) for i in range(20)]
    for name, A in autos:
        O = from_ordered_normal_sa(A)
        small = accepted_projections(O, MAX_LEN, default_budget)
        big = accepted_projections(O, MAX_LEN, lambda n: 2 * default_budget(n))
        if small != big:
            problems.append(f"{name}: budget not stable")
        if small != projections(language(A)):
            problems.append(f"{name}: projections differ")
    report(7, "OMA projections on 2 fixtures + 20 random ordered normal automata", problems, t0)


def test_criterion_08_logic_to_automata(report):
    t0 = time.perf_counter()
    problems = []
    for name, label in zip(CASES, AA_LABELS + AE_LABELS):
        ff = formula(name)
        if label not in case_report(ff.formula, ff.morphism):
            problems.append(f"{name} does not exercise {label}")
    for name in FORMULAS:
        ff = formula(name)
        A = compile_formula(ff.formula, ff.morphism)
        for w in enumerate_data_words(sorted(ff.morphism.letters), MAX_LEN):
            want = model_check(ff.formula, w, ff.morphism)
            if accepts_checked(A, w) != want:
                problems.append(f"{name}: {w}")
                break
    report(8, f"compiled automata vs model_check on {len(FORMULAS)} formulas, invariants checked", problems, t0)


def test_criterion_09_reordering(report):
    t0 = time.perf_counter()
    problems = []
    for name in FORMULAS:
        ff = formula(name)
        B = to_ordered(compile_formula(ff.formula, ff.morphism), check_claims=True)
        if not is_ordered(B.materialize(), list(B.order)):
            problems.append(f"{name}: not ordered")
        if language(B) != language(ff.formula, morphism=ff.morphism):
            problems.append(f"{name}: language changed")
    report(9, f"to_ordered on {len(FORMULAS)} formulas over U1 and the ab band", problems, t0)


def test_criterion_10_decide_sat(report):
    t0 = time.perf_counter()
    problems = []
    id_or_z, f2 = formula("id_or_z"), formula("no_z_between")
    res = decide_sat(id_or_z.formula, id_or_z.morphism, 2, nonempty=True)
    if not (isinstance(res, Sat) and 0 < len(res.witness) <= 2 and model_check(id_or_z.formula, res.witness,
                                                                               id_or_z.morphism)):
        problems.append(f"id_or_z: {res}")
    both = conj(id_or_z.formula, f2.formula)
    for nonempty in (False, True):
        res = decide_sat(both, id_or_z.morphism, 3, nonempty=nonempty)
        if not (isinstance(res, Sat) and model_check(both, res.witness, id_or_z.morphism)):
            problems.append(f"id_or_z and no_z_between (nonempty={nonempty}): {res}")
    enc = encode_2cm_family1(tiny_machines()["dec_at_zero"])
    res = decide_sat(enc.formula, enc.morphism, 4)
    if res != UnknownUpTo(4):
        problems.append(f"dec_at_zero: {res}")
    if language(enc.formula, morphism=enc.morphism):
        problems.append("dec_at_zero: bounded language not empty")
    report(10, "decide_sat on id_or_z, id_or_z and no_z_between, and the non-halting machine", problems, t0)


def test_criterion_11_cma_and_class_automata(report):
    t0 = time.perf_counter()
    problems = []
    gold = golden("automaton_languages")
    for name in ("cma_distinct", "cma_ab_pairs", "cma_even"):
        M = ClassMemoryAutomaton.from_json(json.loads(fixture_path("automata", f"{name}.json").read_text()))
        direct = language(M.accepts, alphabet=M.alphabet)
        if language(cma_to_sa(M)) != direct:
            problems.append(f"{name}: CMA -> SA")
        if sum(gold[name]["by_length"]) != len(direct):
            problems.append(f"{name}: golden count")
    for name in ("ca_one_a", "ca_starts_b", "ca_sorted_small"):
        C = class_automaton_from_json(json.loads(fixture_path("automata", f"{name}.json").read_text()))
        direct = language(C.accepts, alphabet=C.alphabet)
        A = class_automaton_to_sa(C)
        if language(A) != direct:
            problems.append(f"{name}: CA -> SA")
        back = sa_to_class_automaton(convert_acceptance(A, 2))
        if language(back.accepts, alphabet=C.alphabet) != direct:
            problems.append(f"{name}: SA -> CA")
        if sum(gold[name]["by_length"]) != len(direct):
            problems.append(f"{name}: golden count")
    report(11, "CMA -> SA and CA <-> SA on three fixtures each", problems, t0)
