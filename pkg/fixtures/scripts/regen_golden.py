"""Regenerate fixtures/golden/ from the reference semantics.

Semigroup facts are recomputed here by brute force from the Cayley tables
(no use of setautomata.semigroup).  Bounded languages come from the direct
semantics only: model_check for formulas, the set automaton run for SA
fixtures, and the CMA / class automaton runs for those fixtures.

    python3 fixtures/scripts/regen_golden.py
"""

import hashlib
import json
from pathlib import Path

from setautomata.core import enumerate_data_words
from setautomata.harness import (load_machine, run_word_family1, run_word_family2,
                                 sorted_words)
from setautomata.logic import load_formula, model_check
from setautomata.set_automaton import (ClassMemoryAutomaton, accepts, class_automaton_from_json,
                                       load_automaton)

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "golden"
MAX_LEN = 4


# --- semigroups ----------------------------------------------------------------


def brute_facts(obj):
    names = obj["elements"]
    t = obj["table"]
    n = len(names)
    idx = range(n)
    mul = lambda a, b: t[a][b]  # noqa: E731
    ones = [e for e in idx if all(mul(e, x) == x == mul(x, e) for x in idx)]
    right = [frozenset({s} | {mul(s, x) for x in idx}) for s in idx]
    left = [frozenset({s} | {mul(x, s) for x in idx}) for s in idx]
    two = [frozenset(left[s] | {mul(y, x) for y in left[s] for x in idx}) for s in idx]
    idem = [e for e in idx if mul(e, e) == e]
    band = len(idem) == n
    linear = band and all(mul(mul(x, y), x) == x or mul(mul(y, x), y) == y for x in idx for y in idx)
    # e <=_J s  iff  two-sided ideal of e is inside that of s
    da = all(mul(mul(e, s), e) == e for e in idem for s in idx if two[e] <= two[s])

    def count(ideals):
        return len(set(ideals))

    h_classes = len({(right[s], left[s]) for s in idx})
    return {
        "size": n,
        "identity": names[ones[0]] if ones else None,
        "idempotents": sorted(names[e] for e in idem),
        "band": band,
        "linear_band": linear,
        "in_DA": da,
        "aperiodic": all(len({_power(mul, s, k) for k in (n, n + 1)}) == 1 for s in idx),
        "classes": {"R": count(right), "L": count(left), "J": count(two), "H": h_classes},
    }


def _power(mul, s, k):
    out = s
    for _ in range(k - 1):
        out = mul(out, s)
    return out


def semigroups():
    out = {}
    for p in sorted((ROOT / "semigroups").glob("*.json")):
        out[p.stem] = brute_facts(json.loads(p.read_text()))
    return out


# --- languages -----------------------------------------------------------------


def summary(member, alphabet):
    words = [w for w in enumerate_data_words(alphabet, MAX_LEN) if member(w)]
    words = sorted_words(words)
    by_len = [sum(1 for w in words if len(w) == k) for k in range(MAX_LEN + 1)]
    text = "\n".join(str(w) for w in words)
    return {
        "alphabet": list(alphabet),
        "max_len": MAX_LEN,
        "by_length": by_len,
        "sha256": hashlib.sha256(text.encode()).hexdigest(),
        "short": [str(w) for w in words if len(w) <= 2],
    }


def formulas():
    out = {}
    for p in sorted((ROOT / "formulas").glob("*.fo")):
        ff = load_formula(p)
        alphabet = sorted(ff.morphism.letters)
        out[p.stem] = summary(lambda w: model_check(ff.formula, w, ff.morphism), alphabet)
    return out


def automata():
    out = {}
    for p in sorted((ROOT / "automata").glob("*.json")):
        obj = json.loads(p.read_text())
        if p.stem.startswith("cma_"):
            M = ClassMemoryAutomaton.from_json(obj)
            out[p.stem] = summary(M.accepts, M.alphabet)
        elif p.stem.startswith("ca_"):
            C = class_automaton_from_json(obj)
            out[p.stem] = summary(C.accepts, C.alphabet)
        elif p.stem.startswith("2cm_"):
            continue
        else:
            A = load_automaton(p)
            out[p.stem] = summary(lambda w: accepts(A, w), A.alphabet)
    return out


def machines():
    out = {}
    for p in sorted((ROOT / "automata").glob("2cm_*.json")):
        M = load_machine(p)
        runs = M.halting_runs(12)
        out[p.stem] = {
            "halting_runs": [list(r) for r in runs],
            "family1_words": [str(run_word_family1(M, r)) for r in runs],
            "family2_words": [str(run_word_family2(M, r)) for r in runs],
        }
    return out


def main():
    GOLDEN.mkdir(exist_ok=True)
    for name, data in [("semigroups", semigroups()), ("formula_languages", formulas()),
                       ("automaton_languages", automata()), ("two_counter", machines())]:
        (GOLDEN / f"{name}.json").write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")
        print(f"golden/{name}.json: {len(data)} entries")


if __name__ == "__main__":
    main()
