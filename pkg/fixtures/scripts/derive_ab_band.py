"""Derive a small linear band: the syntactic monoid of (a+b)*b + a*.

Writes semigroups/ab_band.json and formulas/ab_band.json (the syntactic
morphism, language named L).  Run from anywhere:

    python3 fixtures/scripts/derive_ab_band.py

The table is computed twice, from the minimal DFA's transition monoid and
by brute-force context equivalence, and the script refuses to write if the
two disagree on the number of classes.
"""

import json
import re
from pathlib import Path

from setautomata.harness import DFA, syntactic_classes_brute, syntactic_monoid

ROOT = Path(__file__).resolve().parent.parent

# s0: only a's so far, s1: ends in b, s2: has a b and ends in a
DFA_TABLE = {
    "states": ["s0", "s1", "s2"],
    "alphabet": ["a", "b"],
    "initial": "s0",
    "finals": ["s0", "s1"],
    "delta": {"s0": {"a": "s0", "b": "s1"}, "s1": {"a": "s2", "b": "s1"}, "s2": {"a": "s2", "b": "s1"}},
}


def member(word: str) -> bool:
    return re.fullmatch(r"[ab]*b|a*", word) is not None


def main():
    D = DFA.from_json(DFA_TABLE)
    for n in range(7):
        for i in range(2 ** n):
            w = "".join("ab"[(i >> k) & 1] for k in range(n))
            assert D.accepts(w) == member(w), w
    M, h = syntactic_monoid(D)
    brute = syntactic_classes_brute(member, "ab", 4, 3)
    if len(brute) != len(M):
        raise SystemExit(f"disagreement: {len(M)} elements vs {len(brute)} context classes")
    (ROOT / "semigroups" / "ab_band.json").write_text(json.dumps(M.to_json()) + "\n")
    morph = h.to_json(semigroup_ref="../semigroups/ab_band.json")
    (ROOT / "formulas" / "ab_band.json").write_text(json.dumps(morph, sort_keys=True) + "\n")
    print(f"{len(M)} elements: {[M.name(i) for i in range(len(M))]}")


if __name__ == "__main__":
    main()
