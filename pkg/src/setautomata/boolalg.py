"""Boolean vectors and binary relations over an ordered family of set names.

Vectors are also handled internally as frozensets of names; a relation acts on
such a set by taking the union of images (the transposed-matrix product).
"""

from __future__ import annotations

import json
from functools import cached_property
from typing import Iterable

import numpy as np


class IndexMismatch(ValueError):
    pass


class BitVector:
    __slots__ = ("names", "bits")

    def __init__(self, names, bits):
        self.names = tuple(names)
        self.bits = tuple(bool(b) for b in bits)
        if len(self.bits) != len(self.names):
            raise ValueError("bit vector length does not match index set")

    @classmethod
    def from_set(cls, names, members) -> "BitVector":
        members = set(members)
        unknown = members - set(names)
        if unknown:
            raise IndexMismatch(f"unknown set names {sorted(map(str, unknown))}")
        return cls(names, [n in members for n in names])

    @classmethod
    def from_string(cls, names, text: str) -> "BitVector":
        text = text.strip()
        if len(text) != len(names) or set(text) - {"0", "1"}:
            raise ValueError(f"expected a 0/1 string of length {len(names)}, got {text!r}")
        return cls(names, [c == "1" for c in text])

    @classmethod
    def zero(cls, names) -> "BitVector":
        return cls(names, [False] * len(tuple(names)))

    @classmethod
    def unit(cls, names, name) -> "BitVector":
        return cls.from_set(names, [name])

    def as_set(self) -> frozenset:
        return frozenset(n for n, b in zip(self.names, self.bits) if b)

    def to_string(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)

    def is_zero(self) -> bool:
        return not any(self.bits)

    def is_unit(self) -> bool:
        return sum(self.bits) == 1

    def _check(self, other):
        if self.names != other.names:
            raise IndexMismatch("bit vectors over different index sets")

    def __or__(self, other):
        self._check(other)
        return BitVector(self.names, [a or b for a, b in zip(self.bits, other.bits)])

    def __and__(self, other):
        self._check(other)
        return BitVector(self.names, [a and b for a, b in zip(self.bits, other.bits)])

    def __invert__(self):
        return BitVector(self.names, [not b for b in self.bits])

    def restrict(self, subset) -> "BitVector":
        keep = [n for n in self.names if n in set(subset)]
        s = self.as_set()
        return BitVector(keep, [n in s for n in keep])

    def __eq__(self, other):
        return isinstance(other, BitVector) and self.names == other.names and self.bits == other.bits

    def __hash__(self):
        return hash((self.names, self.bits))

    def __repr__(self):
        return f"BitVector({self.to_string()})"


class Relation:
    """A binary relation on an ordered set of names."""

    def __init__(self, names, pairs: Iterable = ()):
        self.names = tuple(names)
        self.pairs = frozenset((a, b) for a, b in pairs)
        known = set(self.names)
        for a, b in self.pairs:
            if a not in known or b not in known:
                raise IndexMismatch(f"pair ({a}, {b}) outside index set")

    @classmethod
    def identity(cls, names) -> "Relation":
        return cls(names, [(n, n) for n in names])

    @classmethod
    def from_map(cls, names, mapping: dict, identity_elsewhere=True) -> "Relation":
        pairs = []
        for n in names:
            if n in mapping:
                targets = mapping[n]
                if isinstance(targets, (set, frozenset, list, tuple)):
                    pairs.extend((n, t) for t in targets)
                else:
                    pairs.append((n, targets))
            elif identity_elsewhere:
                pairs.append((n, n))
        return cls(names, pairs)

    @cached_property
    def image(self) -> dict:
        img = {n: set() for n in self.names}
        for a, b in self.pairs:
            img[a].add(b)
        return {n: frozenset(v) for n, v in img.items()}

    @cached_property
    def preimage(self) -> dict:
        pre = {n: set() for n in self.names}
        for a, b in self.pairs:
            pre[b].add(a)
        return {n: frozenset(v) for n, v in pre.items()}

    def apply(self, members: frozenset) -> frozenset:
        """Image of a membership set: y is in the result iff some x in members has (x, y)."""
        img = self.image
        out = set()
        for m in members:
            out |= img.get(m, ())
        return frozenset(out)

    def inverse(self) -> "Relation":
        return Relation(self.names, [(b, a) for a, b in self.pairs])

    def restrict(self, subset) -> "Relation":
        subset = set(subset)
        keep = [n for n in self.names if n in subset]
        return Relation(keep, [(a, b) for a, b in self.pairs if a in subset and b in subset])

    def matrix(self) -> np.ndarray:
        idx = {n: i for i, n in enumerate(self.names)}
        m = np.zeros((len(self.names), len(self.names)), dtype=bool)
        for a, b in self.pairs:
            m[idx[a], idx[b]] = True
        return m

    @classmethod
    def from_matrix(cls, names, m) -> "Relation":
        names = tuple(names)
        rows, cols = np.nonzero(np.asarray(m, dtype=bool))
        return cls(names, [(names[i], names[j]) for i, j in zip(rows, cols)])

    def to_json(self) -> dict:
        return {"names": list(self.names), "pairs": sorted([a, b] for a, b in self.pairs)}

    @classmethod
    def from_json(cls, obj) -> "Relation":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(obj["names"], [tuple(p) for p in obj["pairs"]])

    def __eq__(self, other):
        return isinstance(other, Relation) and set(self.names) == set(other.names) and self.pairs == other.pairs

    def __hash__(self):
        return hash((frozenset(self.names), self.pairs))

    def __repr__(self):
        body = ", ".join(f"({a},{b})" for a, b in sorted(self.pairs, key=str))
        return "{" + body + "}"


def _same_index(r1: Relation, r2: Relation):
    if set(r1.names) != set(r2.names):
        raise IndexMismatch("relations over different index sets")


def compose(r1: Relation, r2: Relation) -> Relation:
    """Relational product r1 r2: first r1, then r2."""
    _same_index(r1, r2)
    img2 = r2.image
    return Relation(r1.names, [(a, c) for a, b in r1.pairs for c in img2[b]])


def apply_update(r: Relation, z: BitVector) -> BitVector:
    if set(r.names) != set(z.names):
        raise IndexMismatch("relation and vector over different index sets")
    return BitVector.from_set(z.names, r.apply(z.as_set()))


def is_transformation(r: Relation) -> bool:
    return all(len(r.image[n]) == 1 for n in r.names)


def is_partial_transformation(r: Relation) -> bool:
    return all(len(r.image[n]) <= 1 for n in r.names)


def transitive_closure(r: Relation) -> Relation:
    img = {n: set(v) for n, v in r.image.items()}
    closure = {}
    for start in r.names:
        seen = set()
        stack = list(img[start])
        while stack:
            x = stack.pop()
            if x in seen:
                continue
            seen.add(x)
            stack.extend(img[x])
        closure[start] = seen
    return Relation(r.names, [(a, b) for a, bs in closure.items() for b in bs])


def union(relations: Iterable[Relation], names=None) -> Relation:
    relations = list(relations)
    if names is None:
        if not relations:
            raise ValueError("union of no relations needs explicit names")
        names = relations[0].names
    pairs = set()
    for r in relations:
        pairs |= r.pairs
    return Relation(names, pairs)


def generate_monoid(generators: Iterable[Relation], names=None) -> set:
    """Closure of the generators and the identity under composition."""
    gens = list(generators)
    if names is None:
        if not gens:
            raise ValueError("generate_monoid of no generators needs explicit names")
        names = gens[0].names
    for g in gens:
        if set(g.names) != set(names):
            raise IndexMismatch("generators over different index sets")
    ident = Relation.identity(names)
    found = {ident}
    work = [ident]
    while work:
        r = work.pop()
        for g in gens:
            p = compose(r, g)
            if p not in found:
                found.add(p)
                work.append(p)
    return found
