"""Finite semigroups given by Cayley tables: Green's relations, band tests,
linear bands, DA membership and the height order used for reordering sets."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np


class SemigroupError(ValueError):
    pass


class NotAMonoid(SemigroupError):
    pass


class FiniteSemigroup:
    """Elements are addressed by index; ``table[a][b]`` is the index of a·b."""

    def __init__(self, elements: Sequence[str], table, identity: Optional[str] = None, check=True):
        self.elements = tuple(str(e) for e in elements)
        n = len(self.elements)
        if len(set(self.elements)) != n:
            raise SemigroupError("duplicate element names")
        tab = np.asarray(table, dtype=np.int64)
        if tab.shape != (n, n):
            raise SemigroupError(f"table must be {n}x{n}")
        if n and (tab.min() < 0 or tab.max() >= n):
            raise SemigroupError("table entry out of range")
        self.table = tab
        self._index = {e: i for i, e in enumerate(self.elements)}
        if check:
            self._check_associative()
        if identity is None:
            self.identity = self._find_identity()
        else:
            if identity not in self._index:
                raise SemigroupError(f"unknown identity {identity!r}")
            self.identity = self._index[identity]
            i = self.identity
            if not (all(tab[i, s] == s for s in range(n)) and all(tab[s, i] == s for s in range(n))):
                raise SemigroupError(f"{identity!r} is not a two-sided identity")

    def _check_associative(self):
        t = self.table
        # (ab)c == a(bc) for all triples, vectorised per a
        for a in range(len(self.elements)):
            left = t[t[a]]          # left[b, c] = (ab)c
            right = t[a][t]         # right[b, c] = a(bc)
            if not np.array_equal(left, right):
                b, c = map(int, np.argwhere(left != right)[0])
                e = self.elements
                raise SemigroupError(f"not associative: ({e[a]}{e[b]}){e[c]} != {e[a]}({e[b]}{e[c]})")

    def _find_identity(self):
        n = len(self.elements)
        for i in range(n):
            if all(self.table[i, s] == s and self.table[s, i] == s for s in range(n)):
                return i
        return None

    @property
    def is_monoid(self) -> bool:
        return self.identity is not None

    def __len__(self):
        return len(self.elements)

    def index(self, name) -> int:
        if isinstance(name, (int, np.integer)):
            return int(name)
        try:
            return self._index[str(name)]
        except KeyError:
            raise SemigroupError(f"unknown element {name!r}") from None

    def name(self, i: int) -> str:
        return self.elements[i]

    def mul(self, a: int, b: int) -> int:
        return int(self.table[a, b])

    def product(self, items: Iterable[int]) -> int:
        acc = self.identity
        for x in items:
            acc = x if acc is None else int(self.table[acc, x])
        if acc is None:
            raise NotAMonoid("empty product in a semigroup without identity")
        return acc

    def power(self, a: int, k: int) -> int:
        acc = a
        for _ in range(k - 1):
            acc = self.mul(acc, a)
        return acc

    def with_identity(self, name: str = "1") -> "FiniteSemigroup":
        """S¹: returns self if already a monoid."""
        if self.is_monoid:
            return self
        return self.adjoin_identity(name)

    def adjoin_identity(self, name: str) -> "FiniteSemigroup":
        """Adjoin a fresh identity element even if one exists already."""
        if name in self._index:
            raise SemigroupError(f"element name {name!r} already in use")
        n = len(self.elements)
        tab = np.empty((n + 1, n + 1), dtype=np.int64)
        tab[:n, :n] = self.table
        tab[n, :] = np.arange(n + 1)
        tab[:, n] = np.arange(n + 1)
        return FiniteSemigroup(self.elements + (name,), tab, identity=name, check=False)

    def to_json(self) -> dict:
        out = {"elements": list(self.elements), "table": self.table.tolist()}
        if self.identity is not None:
            out["identity"] = self.elements[self.identity]
        return out

    @classmethod
    def from_json(cls, obj) -> "FiniteSemigroup":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            return cls(obj["elements"], obj["table"], obj.get("identity"))
        except (KeyError, TypeError) as exc:
            raise SemigroupError(f"bad semigroup object: {exc}") from exc

    def __repr__(self):
        return f"FiniteSemigroup({list(self.elements)})"


def from_cayley_table(elements, table, identity=None) -> FiniteSemigroup:
    return FiniteSemigroup(elements, table, identity)


def load_semigroup(path) -> FiniteSemigroup:
    with open(path, encoding="utf-8") as fh:
        return FiniteSemigroup.from_json(json.load(fh))


# --- morphisms -------------------------------------------------------------


class Morphism:
    """A letter map into a finite monoid together with named accepting subsets.

    ``predicate_images`` optionally assigns elements to monadic predicates; the
    image of a position is then the image of its letter times the images of
    the listed predicates holding there (sorted by name).
    """

    def __init__(self, monoid: FiniteSemigroup, letters: dict, accepting: Optional[dict] = None,
                 predicate_images: Optional[dict] = None):
        if not monoid.is_monoid:
            raise NotAMonoid("morphisms target monoids; use with_identity()")
        self.monoid = monoid
        self.letters = {str(a): monoid.index(m) for a, m in letters.items()}
        self.accepting = {str(k): frozenset(monoid.index(m) for m in v) for k, v in (accepting or {}).items()}
        self.predicate_images = {str(k): monoid.index(v) for k, v in (predicate_images or {}).items()}

    @property
    def alphabet(self) -> tuple:
        return tuple(self.letters)

    @property
    def unit_reflecting(self) -> bool:
        one = self.monoid.identity
        return all(m != one for m in self.letters.values()) and \
            all(m != one for m in self.predicate_images.values())

    def letter_image(self, letter) -> int:
        try:
            return self.letters[letter]
        except KeyError:
            raise SemigroupError(f"letter {letter!r} outside the morphism's alphabet") from None

    def position_image(self, letter, preds=frozenset()) -> int:
        m = self.letter_image(letter)
        if self.predicate_images:
            for p in sorted(preds):
                if p in self.predicate_images:
                    m = self.monoid.mul(m, self.predicate_images[p])
        return m

    def image(self, word) -> int:
        m = self.monoid.identity
        for a in word:
            m = self.monoid.mul(m, self.letter_image(a))
        return m

    def language(self, name) -> frozenset:
        try:
            return self.accepting[name]
        except KeyError:
            raise SemigroupError(f"language {name!r} not recognised by the morphism") from None

    def with_languages(self, extra: dict) -> "Morphism":
        acc = dict(self.accepting)
        acc.update({k: frozenset(v) for k, v in extra.items()})
        out = Morphism.__new__(Morphism)
        out.monoid, out.letters, out.predicate_images = self.monoid, dict(self.letters), dict(self.predicate_images)
        out.accepting = acc
        return out

    def to_json(self, semigroup_ref=None) -> dict:
        S = self.monoid
        out = {
            "letters": {a: S.name(m) for a, m in self.letters.items()},
            "accepting": {k: sorted(S.name(m) for m in v) for k, v in self.accepting.items()},
        }
        if self.predicate_images:
            out["predicates"] = {k: S.name(m) for k, m in self.predicate_images.items()}
        if semigroup_ref is None:
            out["semigroup"] = S.to_json()
        else:
            out["semigroup"] = semigroup_ref
        return out

    @classmethod
    def from_json(cls, obj, base_dir=None) -> "Morphism":
        if isinstance(obj, str):
            obj = json.loads(obj)
        sg = obj.get("semigroup")
        if sg is None:
            raise SemigroupError("morphism needs a 'semigroup' entry (object or file name)")
        if isinstance(sg, str):
            path = Path(base_dir or ".") / sg
            S = load_semigroup(path)
        else:
            S = FiniteSemigroup.from_json(sg)
        return cls(S, obj["letters"], obj.get("accepting"), obj.get("predicates"))


def load_morphism(path) -> Morphism:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        return Morphism.from_json(json.load(fh), base_dir=path.parent)


def image(h: Morphism, word) -> str:
    return h.monoid.name(h.image(word))


# --- Green's relations -----------------------------------------------------


@dataclass
class GreenStructure:
    r_le: np.ndarray    # r_le[s, t]: s <=_R t
    l_le: np.ndarray
    j_le: np.ndarray
    R: list
    L: list
    J: list
    H: list
    D: list

    def class_index(self, kind: str) -> dict:
        return {x: i for i, block in enumerate(getattr(self, kind)) for x in block}


def _classes(le: np.ndarray) -> list:
    n = le.shape[0]
    seen, out = set(), []
    eq = le & le.T
    for s in range(n):
        if s in seen:
            continue
        block = frozenset(int(t) for t in np.nonzero(eq[s])[0])
        seen |= block
        out.append(block)
    return out


def green(S: FiniteSemigroup) -> GreenStructure:
    n = len(S)
    t = S.table
    # s <=_R u  iff  s in u S¹ ; s <=_L u iff s in S¹ u
    r_le = np.eye(n, dtype=bool)
    l_le = np.eye(n, dtype=bool)
    for u in range(n):
        r_le[t[u, :], u] = True
        l_le[t[:, u], u] = True
    j_le = np.eye(n, dtype=bool)
    for u in range(n):
        left = set(int(x) for x in t[:, u]) | {u}
        two = set(left)
        for x in left:
            two |= set(int(y) for y in t[x, :])
        j_le[list(two), u] = True
    R, L, J = _classes(r_le), _classes(l_le), _classes(j_le)
    H = [frozenset(a & b) for a in R for b in L if a & b]
    # D = R∘L, computed as connected components of R ∪ L
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for block in R + L:
        items = sorted(block)
        for x in items[1:]:
            parent[find(x)] = find(items[0])
    comps: dict = {}
    for x in range(n):
        comps.setdefault(find(x), set()).add(x)
    D = [frozenset(c) for c in comps.values()]
    return GreenStructure(r_le, l_le, j_le, R, L, J, H, D)


def _green(S: FiniteSemigroup) -> GreenStructure:
    cached = getattr(S, "_green_cache", None)
    if cached is None:
        cached = green(S)
        S._green_cache = cached
    return cached


def idempotents(S: FiniteSemigroup) -> set:
    return {s for s in range(len(S)) if S.mul(s, s) == s}


def is_band(S: FiniteSemigroup) -> bool:
    return len(idempotents(S)) == len(S)


def omega_power(S: FiniteSemigroup, s: int) -> int:
    """The unique idempotent power of s."""
    p = s
    while S.mul(p, p) != p:
        p = S.mul(p, s)
    return p


def is_aperiodic(S: FiniteSemigroup) -> bool:
    return all(S.mul(omega_power(S, s), s) == omega_power(S, s) for s in range(len(S)))


def is_linear_band(M: FiniteSemigroup) -> bool:
    if not M.is_monoid:
        raise NotAMonoid("linear-band test requires a monoid")
    if not is_band(M):
        return False
    n = len(M)
    for x in range(n):
        for y in range(x + 1, n):
            xyx = M.mul(M.mul(x, y), x)
            yxy = M.mul(M.mul(y, x), y)
            if xyx != x and yxy != y:
                return False
    return True


def is_in_DA(S: FiniteSemigroup) -> bool:
    g = _green(S)
    for e in idempotents(S):
        for s in range(len(S)):
            if g.j_le[e, s] and S.mul(S.mul(e, s), e) != e:
                return False
    return True


@dataclass(frozen=True)
class LinearBand:
    def describe(self):
        return "yes: linear band"


@dataclass(frozen=True)
class NonIdempotent:
    x: str

    def describe(self):
        return f"no: non-idempotent {self.x}"


@dataclass(frozen=True)
class IncomparableIdempotents:
    e: str
    f: str

    def describe(self):
        return f"no: J-incomparable idempotents {self.e}, {self.f}"


def non_linear_witness(M: FiniteSemigroup):
    """LinearBand, or the witness behind N2 or U1² dividing M."""
    if not M.is_monoid:
        raise NotAMonoid("linear-band test requires a monoid")
    for x in range(len(M)):
        if M.mul(x, x) != x:
            return NonIdempotent(M.name(x))
    g = _green(M)
    for e in range(len(M)):
        for f in range(e + 1, len(M)):
            if not g.j_le[e, f] and not g.j_le[f, e]:
                return IncomparableIdempotents(M.name(e), M.name(f))
    return LinearBand()


def is_l_total(M: FiniteSemigroup, subset) -> bool:
    g = _green(M)
    items = list(subset)
    return all(g.l_le[a, b] or g.l_le[b, a] for a, b in itertools.combinations(items, 2))


# --- the height order ------------------------------------------------------


@dataclass
class LOrderExtension:
    monoid: FiniteSemigroup
    below: np.ndarray       # below[x, y]: x strictly below y
    heights: tuple          # heights[m] = length of longest strict chain starting at m

    @property
    def max_height(self) -> int:
        return max(self.heights) if self.heights else 0

    def strictly_below(self, x: int, y: int) -> bool:
        return bool(self.below[x, y])

    def height(self, m: int) -> int:
        return self.heights[m]


def build_L_extension(M: FiniteSemigroup) -> LOrderExtension:
    """Strict order: x below y iff x <_L y strictly, or x, y share an L-class and
    the R-class of x precedes that of y in a fixed per-J-class row order
    (rows ranked by least element index)."""
    g = _green(M)
    n = len(M)
    r_of = g.class_index("R")
    l_of = g.class_index("L")
    row_rank = {}
    for block in g.J:
        rows = sorted({r_of[x] for x in block}, key=lambda r: min(g.R[r]))
        for rank, r in enumerate(rows):
            row_rank[r] = rank
    below = np.zeros((n, n), dtype=bool)
    for x in range(n):
        for y in range(n):
            if x == y:
                continue
            if g.l_le[x, y] and not g.l_le[y, x]:
                below[x, y] = True
            elif l_of[x] == l_of[y] and row_rank[r_of[x]] < row_rank[r_of[y]]:
                below[x, y] = True
    heights = [0] * n
    # longest chain m = m1 > m2 > ...; process elements bottom-up
    order = sorted(range(n), key=lambda m: int(below[:, m].sum()))
    memo: dict = {}

    def h(m):
        if m not in memo:
            lower = np.nonzero(below[:, m])[0]
            memo[m] = 1 + max((h(int(x)) for x in lower), default=0)
        return memo[m]

    for m in order:
        heights[m] = h(m)
    return LOrderExtension(M, below, tuple(heights))


def check_L_extension(ext: LOrderExtension) -> list:
    """Return violated condition descriptions (empty when all hold)."""
    M = ext.monoid
    g = _green(M)
    n = len(M)
    b = ext.below
    r_of = g.class_index("R")
    l_of = g.class_index("L")
    problems = []
    for x in range(n):
        for y in range(n):
            if b[x, y] and not g.l_le[x, y]:
                problems.append(f"strict pair ({M.name(x)}, {M.name(y)}) not L-ordered")
            if b[x, y] and b[y, x]:
                problems.append(f"antisymmetry fails on {M.name(x)}, {M.name(y)}")
            if g.l_le[x, y] and not g.l_le[y, x] and not b[x, y]:
                problems.append(f"strict L-pair ({M.name(x)}, {M.name(y)}) not extended")
            if x != y and l_of[x] == l_of[y] and not (b[x, y] or b[y, x]):
                problems.append(f"L-related {M.name(x)}, {M.name(y)} incomparable")
            if b[x, y]:
                if ext.heights[x] >= ext.heights[y]:
                    problems.append(f"heights not decreasing from {M.name(y)} to {M.name(x)}")
                for x2 in g.R[r_of[x]]:
                    for y2 in g.R[r_of[y]]:
                        if b[y2, x2] or (x2 == y2 and x != y):
                            problems.append(f"R-compatibility fails for {M.name(x2)}, {M.name(y2)}")
    return problems


def check_height_claims(M: FiniteSemigroup, ext: Optional[LOrderExtension] = None) -> list:
    """Exhaustively test the three height claims used by the reordering construction."""
    ext = ext or build_L_extension(M)
    g = _green(M)
    n = len(M)
    k = ext.heights
    problems = []
    # Claim 1 on all L-total subsets
    for size in range(1, n + 1):
        for sub in itertools.combinations(range(n), size):
            if not is_l_total(M, sub):
                continue
            for m in range(n):
                if not is_l_total(M, {M.mul(x, m) for x in sub}):
                    problems.append(f"claim 1: {[M.name(x) for x in sub]}·{M.name(m)} not L-total")
    for block in g.R:
        if len({k[x] for x in block}) > 1:
            problems.append(f"claim 2: R-class {[M.name(x) for x in block]} has unequal heights")
    for m1 in range(n):
        for m2 in range(n):
            if not ext.below[m1, m2]:
                continue
            for m in range(n):
                if k[M.mul(m1, m)] < k[m1] and not (k[M.mul(m2, m)] < k[m1] < k[m2]):
                    problems.append(f"claim 3: m1={M.name(m1)} m2={M.name(m2)} m={M.name(m)}")
    return problems


# --- small constructions ---------------------------------------------------


def direct_product(S: FiniteSemigroup, T: FiniteSemigroup, names=None) -> FiniteSemigroup:
    pairs = [(a, b) for a in range(len(S)) for b in range(len(T))]
    idx = {p: i for i, p in enumerate(pairs)}
    table = [[idx[(S.mul(a1, a2), T.mul(b1, b2))] for (a2, b2) in pairs] for (a1, b1) in pairs]
    if names is None:
        names = [f"({S.name(a)},{T.name(b)})" for a, b in pairs]
    return FiniteSemigroup(names, table, check=False)


def transformation_monoid(generators: Iterable[Sequence[int]], degree: int) -> tuple:
    """Closure of transformations on {0..degree-1} (as tuples) under composition,
    including the identity; returns (semigroup, list of transformations).
    Product a·b means apply a first, then b."""
    ident = tuple(range(degree))
    elems = [ident]
    seen = {ident}
    gens = [tuple(g) for g in generators]
    i = 0
    while i < len(elems):
        a = elems[i]
        for g in gens:
            p = tuple(g[a[x]] for x in range(degree))
            if p not in seen:
                seen.add(p)
                elems.append(p)
        i += 1
    idx = {e: j for j, e in enumerate(elems)}
    table = [[idx[tuple(b[a[x]] for x in range(degree))] for b in elems] for a in elems]
    names = ["".join(map(str, e)) for e in elems]
    return FiniteSemigroup(names, table, identity=names[0], check=False), elems


def full_transformation_monoid(degree: int) -> FiniteSemigroup:
    gens = list(itertools.product(range(degree), repeat=degree))
    return transformation_monoid(gens, degree)[0]
