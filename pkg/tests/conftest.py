import hashlib
import json
from pathlib import Path

import pytest

from setautomata.harness import sorted_words
from setautomata.logic import load_formula
from setautomata.semigroup import load_semigroup
from setautomata.set_automaton import load_automaton

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def fixture_path(*parts) -> Path:
    return FIXTURES.joinpath(*parts)


def semigroup(name):
    return load_semigroup(fixture_path("semigroups", f"{name}.json"))


def formula(name):
    return load_formula(fixture_path("formulas", f"{name}.fo"))


def automaton(name):
    return load_automaton(fixture_path("automata", f"{name}.json"))


def golden(name):
    return json.loads(fixture_path("golden", f"{name}.json").read_text())


def digest(words) -> dict:
    """Same summary as fixtures/scripts/regen_golden.py."""
    words = sorted_words(words)
    max_len = 4
    return {
        "by_length": [sum(1 for w in words if len(w) == k) for k in range(max_len + 1)],
        "sha256": hashlib.sha256("\n".join(str(w) for w in words).encode()).hexdigest(),
    }


@pytest.fixture(scope="session")
def id_or_z():
    return formula("id_or_z")


@pytest.fixture(scope="session")
def no_z_between():
    return formula("no_z_between")


@pytest.fixture(scope="session")
def counter_automaton():
    return automaton("counter_words")
