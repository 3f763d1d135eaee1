"""Data words, their class structure, canonical forms and bounded enumeration."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterator, Sequence


class DataWordError(ValueError):
    pass


@dataclass(frozen=True)
class ClassStructure:
    """Partition of positions (1-based) by data value plus the class successor map."""

    partition: tuple
    class_successor: dict = field(hash=False, compare=False)

    def class_of(self, pos: int) -> frozenset:
        for block in self.partition:
            if pos in block:
                return block
        raise KeyError(pos)


@dataclass(frozen=True)
class DataWord:
    letters: tuple
    data: tuple

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        object.__setattr__(self, "data", tuple(self.data))
        if len(self.letters) != len(self.data):
            raise DataWordError("letters and data differ in length")

    @classmethod
    def of(cls, pairs) -> "DataWord":
        pairs = list(pairs)
        return cls(tuple(a for a, _ in pairs), tuple(d for _, d in pairs))

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(zip(self.letters, self.data))

    def __getitem__(self, i):
        return self.letters[i], self.data[i]

    def __str__(self):
        if not self.letters:
            return "ε"
        return "".join(f"({a},{d})" for a, d in self)

    def to_text(self) -> str:
        return "".join(f"{a} {d}\n" for a, d in self)

    def to_json(self) -> dict:
        return {"letters": list(self.letters), "data": list(self.data)}

    @classmethod
    def from_json(cls, obj) -> "DataWord":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            letters, data = obj["letters"], obj["data"]
        except (KeyError, TypeError) as exc:
            raise DataWordError(f"bad data word object: {obj!r}") from exc
        for d in data:
            if not isinstance(d, int) or isinstance(d, bool) or d < 0:
                raise DataWordError(f"data value must be a natural number: {d!r}")
        return cls(tuple(str(a) for a in letters), tuple(data))


EMPTY = DataWord((), ())


def parse_data_word(text: str) -> DataWord:
    """Parse lines of ``<letter> <nat>``; blank lines and ``#`` comments are skipped."""
    letters, data = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise DataWordError(f"line {lineno}: expected '<letter> <nat>', got {raw!r}")
        letter, value = parts
        if not value.isdigit():
            raise DataWordError(f"line {lineno}: data value {value!r} is not a natural number")
        letters.append(letter)
        data.append(int(value))
    return DataWord(tuple(letters), tuple(data))


def load_data_word(path) -> DataWord:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return DataWord.from_json(json.loads(text))
    return parse_data_word(text)


def classes(w: DataWord) -> ClassStructure:
    blocks: dict = {}
    succ = {}
    last: dict = {}
    for pos, d in enumerate(w.data, 1):
        blocks.setdefault(d, []).append(pos)
        if d in last:
            succ[last[d]] = pos
        last[d] = pos
    partition = tuple(frozenset(b) for b in blocks.values())
    return ClassStructure(partition, succ)


def string_projection(w: DataWord) -> tuple:
    return w.letters


def canonicalize(w: DataWord) -> DataWord:
    rename: dict = {}
    data = tuple(rename.setdefault(d, len(rename) + 1) for d in w.data)
    return DataWord(w.letters, data)


def is_canonical(w: DataWord) -> bool:
    return canonicalize(w) == w


def permute_data(w: DataWord, perm) -> DataWord:
    """Apply a renaming of data values (a dict or callable)."""
    f = perm.__getitem__ if isinstance(perm, dict) else perm
    return DataWord(w.letters, tuple(f(d) for d in w.data))


def restricted_growth_strings(n: int) -> Iterator[tuple]:
    """All set partitions of n positions, as first-occurrence labelings 1, 2, ..."""
    if n == 0:
        yield ()
        return

    def rec(prefix, top):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for v in range(1, top + 2):
            prefix.append(v)
            yield from rec(prefix, max(top, v))
            prefix.pop()

    yield from rec([], 0)


def bell(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for x in row:
            nxt.append(nxt[-1] + x)
        row = nxt
    return row[0]


def data_assignments(letters: Sequence) -> Iterator[DataWord]:
    """Every canonical data word with the given string projection."""
    for data in restricted_growth_strings(len(letters)):
        yield DataWord(tuple(letters), data)


def enumerate_data_words(alphabet, max_len: int) -> Iterator[DataWord]:
    """One canonical representative per data-permutation class, shortest first."""
    alphabet = list(alphabet)
    for n in range(max_len + 1):
        partitions = list(restricted_growth_strings(n))
        for letters in itertools.product(alphabet, repeat=n):
            for data in partitions:
                yield DataWord(letters, data)
