import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setautomata.core import (EMPTY, DataWord, DataWordError, bell, canonicalize, classes,
                              data_assignments, enumerate_data_words, is_canonical, parse_data_word,
                              permute_data, string_projection)

words = st.lists(st.tuples(st.sampled_from("abc"), st.integers(0, 6)), max_size=7).map(DataWord.of)


def test_parse_reads_pairs_and_classes():
    w = parse_data_word("i 1\nd 1\nz 2")
    assert w == DataWord.of([("i", 1), ("d", 1), ("z", 2)])
    assert set(classes(w).partition) == {frozenset({1, 2}), frozenset({3})}


def test_parse_empty_and_errors():
    assert len(parse_data_word("")) == 0
    with pytest.raises(DataWordError):
        parse_data_word("a x")


def test_class_structure():
    cs = classes(DataWord.of([("i", 1), ("z", 2), ("d", 1)]))
    assert set(cs.partition) == {frozenset({1, 3}), frozenset({2})}
    assert cs.class_successor == {1: 3}
    single = classes(DataWord.of([("a", 7)]))
    assert single.partition == (frozenset({1}),) and single.class_successor == {}
    assert classes(DataWord.of([("a", 1)] * 3)).class_successor == {1: 2, 2: 3}


def test_projection():
    assert string_projection(DataWord.of([("i", 1), ("d", 1), ("z", 2)])) == ("i", "d", "z")
    assert string_projection(EMPTY) == ()
    assert string_projection(DataWord.of([("a", 5), ("b", 5)])) == ("a", "b")


def test_canonicalize_examples():
    assert canonicalize(DataWord.of([("a", 9), ("b", 4), ("a", 9)])) == DataWord.of([("a", 1), ("b", 2), ("a", 1)])
    assert canonicalize(DataWord.of([("a", 2), ("a", 2)])) == DataWord.of([("a", 1), ("a", 1)])
    w = DataWord.of([("a", 1), ("b", 2)])
    assert canonicalize(w) == w


def test_enumeration_counts():
    assert [str(w) for w in enumerate_data_words("a", 2)] == ["ε", "(a,1)", "(a,1)(a,1)", "(a,1)(a,2)"]
    assert list(enumerate_data_words("ab", 0)) == [EMPTY]
    assert len(list(enumerate_data_words("ab", 1))) == 3
    assert [bell(n) for n in range(7)] == [1, 1, 2, 5, 15, 52, 203]
    for n in range(5):
        assert len(list(enumerate_data_words("ab", n))) == sum(2 ** k * bell(k) for k in range(n + 1))


def test_data_assignments_cover_partitions():
    ws = list(data_assignments(("a", "b", "a")))
    assert len(ws) == bell(3) and all(is_canonical(w) for w in ws)


def test_json_round_trip():
    w = DataWord.of([("a", 3), ("b", 0)])
    assert DataWord.from_json(w.to_json()) == w
    with pytest.raises(DataWordError):
        DataWord.from_json({"letters": ["a"], "data": [-1]})


@given(words)
def test_canonicalize_is_idempotent_and_keeps_structure(w):
    c = canonicalize(w)
    assert canonicalize(c) == c and is_canonical(c)
    assert string_projection(c) == string_projection(w)
    assert classes(c) == classes(w)


@given(words, st.randoms())
def test_permutation_invariance_of_canonical_form(w, rnd):
    values = sorted(set(w.data))
    shuffled = values[:]
    rnd.shuffle(shuffled)
    perm = dict(zip(values, [v + 10 for v in shuffled]))
    assert canonicalize(permute_data(w, perm)) == canonicalize(w)


@settings(max_examples=50)
@given(words)
def test_enumeration_is_complete(w):
    if len(w) <= 4:
        assert canonicalize(w) in set(enumerate_data_words("abc", 4))


def test_enumeration_is_duplicate_free():
    ws = list(enumerate_data_words("ab", 4))
    assert len(ws) == len(set(ws)) and all(is_canonical(w) for w in ws)
    assert ws == list(enumerate_data_words("ab", 4))
