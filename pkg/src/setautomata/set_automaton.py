"""Set automata: run semantics, normal forms, order analyses, acceptance
conversions, closure constructions, class-memory and class automata.

Membership vectors are frozensets of set names.  Global updates are any
objects with ``apply(frozenset) -> frozenset``; explicit automata use
:class:`~setautomata.boolalg.Relation`.  Lazily generated automata expose the
same small interface as :class:`SetAutomaton`:

* ``initial`` (iterable of states), ``is_final(q)``, ``acceptance``;
* ``moves(q, letter, z)`` yielding objects with ``rho, u, v, target``.
"""

from __future__ import annotations

import itertools
import json
import math
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

from .boolalg import BitVector, Relation, generate_monoid, is_partial_transformation, transitive_closure, union
from .core import DataWord


class AutomatonError(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


EMPTY = frozenset()


# --- acceptance -------------------------------------------------------------


@dataclass(frozen=True)
class Acceptance:
    """One of four equivalent acceptance conditions.

    mode 1: final state and every present value's vector is accepted;
    mode 2: final state and the state after each class-maximal position is in ``local_final``;
    mode 3: final state and each value's vector right after its class-maximal position is accepted;
    mode 4: final state and the sets in ``sink`` are empty.

    Accepted vectors (modes 1 and 3) are given by exactly one of ``vectors``
    (explicit), ``zero_on`` (disjoint from these names), ``meets_any``
    (intersects these names) or ``predicate``.
    """

    mode: int
    vectors: Optional[frozenset] = None
    zero_on: Optional[frozenset] = None
    meets_any: Optional[frozenset] = None
    local_final: Optional[frozenset] = None
    sink: Optional[frozenset] = None
    predicate: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in (1, 2, 3, 4):
            raise AutomatonError(f"unknown acceptance mode {self.mode}")
        if self.mode in (1, 3):
            given = [x is not None for x in (self.vectors, self.zero_on, self.meets_any, self.predicate)]
            if sum(given) != 1:
                raise AutomatonError("modes 1 and 3 need exactly one description of accepted vectors")
        if self.mode == 2 and self.local_final is None:
            raise AutomatonError("mode 2 needs local final states")
        if self.mode == 4 and self.sink is None:
            raise AutomatonError("mode 4 needs the sets that must end empty")

    @classmethod
    def explicit(cls, vectors, mode=1):
        return cls(mode, vectors=frozenset(frozenset(v) for v in vectors))

    def vector_ok(self, vec: frozenset) -> bool:
        if self.vectors is not None:
            return vec in self.vectors
        if self.zero_on is not None:
            return not (vec & self.zero_on)
        if self.meets_any is not None:
            return bool(vec & self.meets_any)
        return bool(self.predicate(vec))

    def final_ok(self, vecs) -> bool:
        if self.mode == 1:
            return all(not v or self.vector_ok(v) for v in vecs)
        if self.mode == 4:
            return all(not (v & self.sink) for v in vecs)
        return True

    def to_json(self, sets) -> dict:
        out: dict = {"mode": self.mode}
        if self.mode in (1, 3):
            if self.zero_on is not None:
                out["zero_on"] = sorted(map(str, self.zero_on))
            elif self.meets_any is not None:
                out["meets_any"] = sorted(map(str, self.meets_any))
            else:
                vecs = self.vectors
                if vecs is None:
                    if len(sets) > 14:
                        raise AutomatonError("cannot serialise a predicate over this many sets")
                    vecs = [frozenset(c) for r in range(len(sets) + 1)
                            for c in itertools.combinations(sets, r) if self.predicate(frozenset(c))]
                out["vectors"] = sorted(BitVector.from_set(sets, v).to_string() for v in vecs)
        elif self.mode == 2:
            out["local_final"] = sorted(map(str, self.local_final))
        else:
            out["sink"] = sorted(map(str, self.sink))
        return out

    @classmethod
    def from_json(cls, obj, sets, state_of=lambda s: s) -> "Acceptance":
        mode = obj.get("mode", 1)
        if mode in (1, 3):
            if "zero_on" in obj:
                return cls(mode, zero_on=frozenset(obj["zero_on"]))
            if "meets_any" in obj:
                return cls(mode, meets_any=frozenset(obj["meets_any"]))
            vecs = frozenset(BitVector.from_string(sets, s).as_set() for s in obj.get("vectors", []))
            return cls(mode, vectors=vecs)
        if mode == 2:
            return cls(2, local_final=frozenset(state_of(q) for q in obj["local_final"]))
        return cls(4, sink=frozenset(obj["sink"]))


# --- explicit automata ------------------------------------------------------


@dataclass(frozen=True)
class Transition:
    source: object
    letter: str
    z: frozenset
    rho: Relation
    u: frozenset
    v: frozenset
    target: object
    info: object = None


@dataclass(frozen=True)
class Move:
    rho: object
    u: frozenset
    v: frozenset
    target: object
    info: object = None


class SetAutomaton:
    def __init__(self, states, sets, alphabet, transitions, initial, final, acceptance: Acceptance):
        self.states = tuple(dict.fromkeys(states))
        self.sets = tuple(sets)
        self.alphabet = tuple(alphabet)
        self.transitions = tuple(dict.fromkeys(transitions))
        self.initial = frozenset(initial)
        self.final = frozenset(final)
        self.acceptance = acceptance
        known_states = set(self.states)
        known_sets = set(self.sets)
        self._by_key = defaultdict(list)
        for t in self.transitions:
            if t.source not in known_states or t.target not in known_states:
                raise AutomatonError(f"transition {t} uses an unknown state")
            if not (t.z | t.u | t.v) <= known_sets or set(t.rho.names) != known_sets:
                raise AutomatonError(f"transition {t} is not indexed by the automaton's sets")
            self._by_key[(t.source, t.letter, t.z)].append(t)
        if not self.initial <= known_states or not self.final <= known_states:
            raise AutomatonError("initial/final states must be states")
        if acceptance.mode == 2 and not acceptance.local_final <= known_states:
            raise AutomatonError("local final states must be states")

    def moves(self, q, letter, z):
        return self._by_key.get((q, letter, z), ())

    def is_final(self, q) -> bool:
        return q in self.final

    def updates(self) -> set:
        return {t.rho for t in self.transitions}

    def relabel(self, prefix="q") -> "SetAutomaton":
        """Rename states to ``prefix0, prefix1, ...`` in state order."""
        name = {q: f"{prefix}{i}" for i, q in enumerate(self.states)}
        acc = self.acceptance
        if acc.mode == 2:
            acc = Acceptance(2, local_final=frozenset(name[q] for q in acc.local_final))
        ts = [Transition(name[t.source], t.letter, t.z, t.rho, t.u, t.v, name[t.target]) for t in self.transitions]
        return SetAutomaton(name.values(), self.sets, self.alphabet, ts,
                            [name[q] for q in self.initial], [name[q] for q in self.final], acc)

    def with_acceptance(self, acc: Acceptance) -> "SetAutomaton":
        return SetAutomaton(self.states, self.sets, self.alphabet, self.transitions, self.initial, self.final, acc)

    def to_json(self) -> dict:
        Y = self.sets
        ident = Relation.identity(Y)

        def bits(s):
            return BitVector.from_set(Y, s).to_string()

        trans = []
        for t in self.transitions:
            trans.append({
                "from": str(t.source), "letter": t.letter, "z": bits(t.z),
                "rho": "id" if t.rho == ident else sorted([str(a), str(b)] for a, b in t.rho.pairs),
                "u": bits(t.u), "v": bits(t.v), "to": str(t.target),
            })
        return {
            "states": [str(q) for q in self.states],
            "sets": [str(y) for y in Y],
            "alphabet": list(self.alphabet),
            "initial": sorted(map(str, self.initial)),
            "final": sorted(map(str, self.final)),
            "transitions": trans,
            "acceptance": self.acceptance.to_json(Y),
        }

    @classmethod
    def from_json(cls, obj) -> "SetAutomaton":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            Y = tuple(obj["sets"])
            ts = []
            for t in obj["transitions"]:
                rho = t.get("rho", "id")
                rel = Relation.identity(Y) if rho == "id" else Relation(Y, [tuple(p) for p in rho])
                zero = "0" * len(Y)
                ts.append(Transition(
                    t["from"], t["letter"], BitVector.from_string(Y, t.get("z", zero)).as_set(), rel,
                    BitVector.from_string(Y, t.get("u", zero)).as_set(),
                    BitVector.from_string(Y, t.get("v", zero)).as_set(), t["to"]))
            acc = Acceptance.from_json(obj.get("acceptance", {"mode": 1, "vectors": []}), Y)
            alphabet = obj.get("alphabet") or sorted({t.letter for t in ts})
            return cls(obj["states"], Y, alphabet, ts, obj["initial"], obj["final"], acc)
        except (KeyError, TypeError) as exc:
            raise AutomatonError(f"bad automaton object: {exc}") from exc

    def __repr__(self):
        return f"SetAutomaton({len(self.states)} states, sets={list(self.sets)}, {len(self.transitions)} transitions)"


def load_automaton(path) -> SetAutomaton:
    with open(path, encoding="utf-8") as fh:
        return SetAutomaton.from_json(json.load(fh))


def updates(A) -> set:
    return set(A.updates())


# --- configurations and runs -------------------------------------------------


@dataclass(frozen=True)
class Configuration:
    state: object
    contents: dict = field(compare=False, hash=False)

    def vector(self, d) -> frozenset:
        return frozenset(y for y, vals in self.contents.items() if d in vals)

    @classmethod
    def initial(cls, A, q) -> "Configuration":
        return cls(q, {y: frozenset() for y in A.sets})


def step(A, cfg: Configuration, t, letter_data) -> Configuration:
    letter, d = letter_data
    if t.source != cfg.state or t.letter != letter or cfg.vector(d) != t.z:
        raise AutomatonError("transition not applicable")
    moved = {y: set() for y in cfg.contents}
    for x, vals in cfg.contents.items():
        for y in t.rho.apply(frozenset([x])):
            moved[y] |= vals
    for y in t.u:
        moved[y].add(d)
    for y in t.v:
        moved[y].discard(d)
    return Configuration(t.target, {y: frozenset(v) for y, v in moved.items()})


def _class_max_positions(w: DataWord) -> set:
    last = {}
    for i, d in enumerate(w.data):
        last[d] = i
    return set(last.values())


def accepts(A, w: DataWord, invariants: bool = False) -> bool:
    """Exhaustive search for an accepting run; memoised on
    (position, state, vectors of the word's data values)."""
    n = len(w)
    vid = {}
    for d in w.data:
        vid.setdefault(d, len(vid))
    pos_val = [vid[d] for d in w.data]
    maxpos = _class_max_positions(w)
    acc = A.acceptance
    check = _normal_checker(A) if invariants else None
    apply_cache: dict = {}

    def apply(rho, vec):
        key = (rho, vec)
        r = apply_cache.get(key)
        if r is None:
            r = rho.apply(vec) if vec else EMPTY
            apply_cache[key] = r
        return r

    @lru_cache(maxsize=None)
    def run(i, q, vecs):
        if i == n:
            return A.is_final(q) and acc.final_ok(vecs)
        d = pos_val[i]
        for mv in A.moves(q, w.letters[i], vecs[d]):
            new = [apply(mv.rho, v) for v in vecs]
            cur = (new[d] | mv.u) - mv.v
            new[d] = cur
            if i in maxpos:
                if acc.mode == 2 and mv.target not in acc.local_final:
                    continue
                if acc.mode == 3 and not acc.vector_ok(cur):
                    continue
            new = tuple(new)
            if check is not None:
                check(new)
            if run(i + 1, mv.target, new):
                return True
        return False

    return any(run(0, q, tuple(EMPTY for _ in vid)) for q in A.initial)


def _normal_checker(A):
    """Checks the at-most-one-set property and the bounded-set size bound."""
    if not isinstance(A, SetAutomaton):
        return None
    stable = stable_sets(A)
    core = [y for y in A.sets if y not in stable]
    rels = [t.rho.restrict(core) for t in A.transitions]
    if not is_quasi_normal(A):
        return None
    bnd = _bounded(rels, core)
    plus = transitive_closure(union(rels, core)) if rels else Relation(core)
    limit = {y: 1 + len(plus.preimage[y]) for y in bnd}

    def check(vecs):
        counts = defaultdict(int)
        for v in vecs:
            inside = v - stable
            if len(inside) > 1:
                raise InvariantViolation(f"value in several non-stable sets {sorted(map(str, inside))}")
            for y in inside:
                counts[y] += 1
        for y, lim in limit.items():
            if counts[y] > lim:
                raise InvariantViolation(f"bounded set {y} holds {counts[y]} > {lim} values")

    return check


# --- analyses ---------------------------------------------------------------


def update_monoid(A) -> set:
    return generate_monoid(A.updates(), A.sets)


def stable_sets(A) -> frozenset:
    ups = list(A.updates())
    return frozenset(y for y in A.sets
                     if all(r.image[y] == {y} and r.preimage[y] == {y} for r in ups))


def _is_normal_transition(t, names) -> bool:
    names = set(names)
    rho = t.rho.restrict(names) if set(t.rho.names) != names else t.rho
    if not is_partial_transformation(rho):
        return False
    z, u, v = t.z & names, t.u & names, t.v & names
    if len(z) > 1 or len(u) > 1:
        return False
    moved = rho.apply(z)
    if u != moved:
        return v == moved
    return not v


def is_normal(A, allow_partial: bool = True) -> bool:
    """Updates are (partial) transformations, the current value is added to at
    most one set and removed from where the update put it."""
    for t in A.transitions:
        if not _is_normal_transition(t, A.sets):
            return False
        if not allow_partial and not all(len(t.rho.image[y]) == 1 for y in A.sets):
            return False
    return True


def is_quasi_normal(A) -> bool:
    core = set(A.sets) - stable_sets(A)
    return all(_is_normal_transition(t, core) for t in A.transitions)


def _bounded(rels, names) -> frozenset:
    if not rels:
        return frozenset(names)
    plus = transitive_closure(union(rels, names))
    cyclic = {y for y in names if (y, y) in plus.pairs}
    return frozenset(y for y in names if y not in cyclic and not (plus.preimage[y] & cyclic))


def bounded_sets(A) -> frozenset:
    if not is_normal(A):
        raise AutomatonError("bounded sets are defined for normal automata")
    return _bounded(list(A.updates()), A.sets)


def _order_ok(rels, order) -> bool:
    names = list(order)
    bnd = _bounded(rels, names)
    nb = [y for y in names if y not in bnd]
    pos = {y: i for i, y in enumerate(names)}
    if bnd and nb and max(pos[y] for y in nb) > min(pos[y] for y in bnd):
        return False
    for rho in rels:
        fixed = {y for y in nb if rho.image[y] == {y}}
        moved = [y for y in nb if y not in fixed]
        if set(nb[:len(moved)]) != set(moved):
            return False
        if any(not rho.image[y] <= fixed for y in moved):
            return False
    return True


def _core_relations(A):
    stable = stable_sets(A)
    core = [y for y in A.sets if y not in stable]
    return core, [r.restrict(core) for r in A.updates()]


def is_ordered(A, order) -> bool:
    core, rels = _core_relations(A)
    order = [y for y in order if y in set(core)]
    if set(order) != set(core):
        raise AutomatonError("order must list every non-stable set")
    return _order_ok(rels, order)


def find_order(A) -> Optional[list]:
    core, rels = _core_relations(A)
    stable = [y for y in A.sets if y not in set(core)]
    for perm in itertools.permutations(sorted(core, key=str)):
        if _order_ok(rels, perm):
            return list(perm) + stable
    return None


# --- normalisation ----------------------------------------------------------


def vector_name(sets, vec) -> str:
    return "(" + BitVector.from_set(sets, vec).to_string() + ")"


def normalized_update(rho: Relation, vectors) -> dict:
    """The map induced on nonzero vectors: s ↦ Mᵀ(ρ)·s (omitted when zero)."""
    out = {}
    for s in vectors:
        img = rho.apply(frozenset(s))
        if img:
            out[frozenset(s)] = img
    return out


def reachable_vectors(A) -> set:
    """Nonzero membership vectors that can occur in some run (over-approximation
    that ignores which states are reachable)."""
    V: set = set()
    rels = list(A.updates())
    changed = True
    while changed:
        changed = False
        for t in A.transitions:
            if t.z and t.z not in V:
                continue
            c = (t.rho.apply(t.z) | t.u) - t.v
            if c and c not in V:
                V.add(c)
                changed = True
        for rho in rels:
            for s in list(V):
                img = rho.apply(s)
                if img and img not in V:
                    V.add(img)
                    changed = True
    return V


def normalize(A: SetAutomaton) -> SetAutomaton:
    if A.acceptance.mode != 1:
        raise AutomatonError("normalize expects acceptance mode 1")
    V = sorted(reachable_vectors(A), key=lambda s: BitVector.from_set(A.sets, s).to_string(), reverse=True)
    name = {s: vector_name(A.sets, s) for s in V}
    names = [name[s] for s in V]
    rel_cache = {}
    ts = []
    for t in A.transitions:
        if t.z and t.z not in name:
            continue
        if t.rho not in rel_cache:
            m = normalized_update(t.rho, V)
            rel_cache[t.rho] = Relation(names, [(name[s], name[img]) for s, img in m.items()])
        rz = t.rho.apply(t.z)
        c = (rz | t.u) - t.v
        u = frozenset([name[c]]) if c else EMPTY
        v = frozenset([name[rz]]) if rz and rz != c else EMPTY
        z = frozenset([name[t.z]]) if t.z else EMPTY
        ts.append(Transition(t.source, t.letter, z, rel_cache[t.rho], u, v, t.target))
    accepted = [name[s] for s in V if A.acceptance.vector_ok(s)]
    acc = Acceptance(1, vectors=frozenset(frozenset([n]) for n in accepted))
    return SetAutomaton(A.states, names, A.alphabet, ts, A.initial, A.final, acc)


class _VectorUpdate:
    """Update on vector-named sets induced by an update on the underlying sets."""

    __slots__ = ("rho", "keep", "_h")

    def __init__(self, rho, keep=None):
        self.rho = rho
        self.keep = keep
        self._h = hash(rho)

    def apply(self, members):
        out = set()
        for s in members:
            img = self.rho.apply(s)
            if img and (self.keep is None or self.keep(img)):
                out.add(img)
        return frozenset(out)

    def __eq__(self, other):
        return isinstance(other, _VectorUpdate) and self.rho == other.rho

    def __hash__(self):
        return self._h


class NormalizedView:
    """Lazy normalisation: each reachable membership vector becomes one set,
    named by the vector itself.  ``keep`` optionally restricts which vectors
    may be used as sets."""

    def __init__(self, A, keep: Optional[Callable] = None):
        self.base = A
        self.keep = keep
        self.initial = tuple(A.initial)
        self.alphabet = tuple(A.alphabet)
        base_acc = A.acceptance
        if base_acc.mode != 1:
            raise AutomatonError("normalisation expects acceptance mode 1")
        self.acceptance = Acceptance(1, predicate=lambda names: all(base_acc.vector_ok(s) for s in names))
        self._cache: dict = {}

    def is_final(self, q):
        return self.base.is_final(q)

    def moves(self, q, letter, z):
        key = (q, letter, z)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if len(z) > 1:
            out = ()
        else:
            vec = next(iter(z)) if z else EMPTY
            out = []
            for mv in self.base.moves(q, letter, vec):
                rz = mv.rho.apply(vec) if vec else EMPTY
                c = (rz | mv.u) - mv.v
                if c and self.keep is not None and not self.keep(c):
                    raise InvariantViolation(f"vector {sorted(map(str, c))} outside the kept family")
                u = frozenset([c]) if c else EMPTY
                v = frozenset([rz]) if rz and rz != c else EMPTY
                out.append(Move(_VectorUpdate(mv.rho, self.keep), u, v, mv.target, mv.info))
            out = tuple(out)
        self._cache[key] = out
        return out


def materialize(A, max_vectors: int = 5000, name_sets=None) -> SetAutomaton:
    """Explicit automaton over reachable states and reachable membership
    vectors of a lazily given automaton (over-approximating fixpoint)."""
    letters = tuple(A.alphabet)
    states = list(dict.fromkeys(A.initial))
    seen_states = set(states)
    vectors: set = set()
    trans = {}
    done: set = set()
    rhos: set = set()
    changed = True
    while changed:
        changed = False
        for q in list(seen_states):
            for a in letters:
                for z in [EMPTY] + list(vectors):
                    if (q, a, z) in done:
                        continue
                    done.add((q, a, z))
                    if len(done) > 50 * max_vectors:
                        raise AutomatonError("materialisation exceeds its work budget")
                    for mv in A.moves(q, a, z):
                        trans[(q, a, z, mv)] = mv
                        rhos.add(mv.rho)
                        if mv.target not in seen_states:
                            seen_states.add(mv.target)
                            states.append(mv.target)
                            changed = True
                        c = ((mv.rho.apply(z) if z else EMPTY) | mv.u) - mv.v
                        if c and c not in vectors:
                            vectors.add(c)
                            changed = True
                            if len(vectors) > max_vectors:
                                raise AutomatonError("too many reachable vectors to materialise")
        for rho in list(rhos):
            for s in list(vectors):
                img = rho.apply(s)
                if img and img not in vectors:
                    vectors.add(img)
                    changed = True
        if len(vectors) > max_vectors:
            raise AutomatonError("too many reachable vectors to materialise")
    names = set()
    for s in vectors:
        names |= s
    for (q, a, z, mv) in trans:
        names |= z | mv.u | mv.v
    sets = list(getattr(A, "sets", None) or [])
    if name_sets is not None:
        sets = list(name_sets)
    sets = [y for y in sets if y in names] + sorted(names - set(sets), key=str)
    rel_cache = {}

    def rel(rho):
        if rho not in rel_cache:
            rel_cache[rho] = Relation(sets, [(y, y2) for y in sets for y2 in rho.apply(frozenset([y]))])
        return rel_cache[rho]

    ts = [Transition(q, a, z, rel(mv.rho), mv.u, mv.v, mv.target, mv.info) for (q, a, z, mv) in trans]
    acc = A.acceptance
    if acc.mode in (1, 3) and acc.predicate is not None:
        acc = Acceptance(acc.mode, vectors=frozenset(s for s in vectors if acc.vector_ok(s)))
    final = [q for q in states if A.is_final(q)]
    return SetAutomaton(states, sets, letters, ts, A.initial, final, acc)


# --- acceptance conversions -------------------------------------------------


def convert_acceptance(A: SetAutomaton, target_mode: int) -> SetAutomaton:
    if target_mode not in (1, 2, 3, 4):
        raise AutomatonError(f"unknown acceptance mode {target_mode}")
    if A.acceptance.mode == target_mode:
        raise AutomatonError("source and target acceptance modes coincide")
    step_fn = {1: _one_to_two, 2: _two_to_three, 3: _three_to_four, 4: _four_to_one}
    cur = A
    while cur.acceptance.mode != target_mode:
        cur = step_fn[cur.acceptance.mode](cur)
    return cur


def _one_to_two(A: SetAutomaton) -> SetAutomaton:
    """States carry the pending obligations: vectors recorded at guessed
    class-maximal positions, moved along by later global updates.  They must
    all be zero or accepted at the end; a state records whether the last step
    recorded an obligation (the local final states)."""
    acc = A.acceptance
    by_source = defaultdict(list)
    for t in A.transitions:
        by_source[t.source].append(t)
    start = [(q, EMPTY, False) for q in A.initial]
    seen = set(start)
    queue = deque(start)
    ts = []
    while queue:
        st = queue.popleft()
        q, S, _ = st
        for t in by_source[q]:
            moved = frozenset(x for x in (t.rho.apply(s) for s in S) if x)
            c = (t.rho.apply(t.z) | t.u) - t.v
            for flag in (False, True):
                S2 = moved | {c} if (flag and c) else moved
                nxt = (t.target, S2, flag)
                ts.append(Transition(st, t.letter, t.z, t.rho, t.u, t.v, nxt))
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
    states = list(seen)
    final = [s for s in states if s[0] in A.final and all(acc.vector_ok(v) for v in s[1])]
    local = frozenset(s for s in states if s[2])
    out = SetAutomaton(states, A.sets, A.alphabet, ts, start, final, Acceptance(2, local_final=local))
    return out.relabel()


def _two_to_three(A: SetAutomaton) -> SetAutomaton:
    tag = {q: f"X[{q}]" for q in A.states}
    extra = [tag[q] for q in A.states]
    clash = set(extra) & set(A.sets)
    if clash:
        raise AutomatonError(f"set names {clash} already used")
    sets = tuple(A.sets) + tuple(extra)
    ts = []
    ident_extra = [(x, x) for x in extra]
    for t in A.transitions:
        rho = Relation(sets, set(t.rho.pairs) | set(ident_extra))
        u = t.u | {tag[t.target]}
        v = t.v | {tag[p] for p in A.states if p != t.target}
        for prev in [None] + list(A.states):
            z = t.z | ({tag[prev]} if prev is not None else EMPTY)
            ts.append(Transition(t.source, t.letter, z, rho, u, v, t.target))
    acc = Acceptance(3, meets_any=frozenset(tag[q] for q in A.acceptance.local_final))
    return SetAutomaton(A.states, sets, A.alphabet, ts, A.initial, A.final, acc)


def _three_to_four(A: SetAutomaton) -> SetAutomaton:
    X, sink = "X[open]", "X[sink]"
    if {X, sink} & set(A.sets):
        raise AutomatonError("set names for the conversion already used")
    sets = tuple(A.sets) + (X, sink)
    acc = A.acceptance
    ts = []
    for t in A.transitions:
        rho = Relation(sets, set(t.rho.pairs) | {(X, X), (sink, sink)})
        c = (t.rho.apply(t.z) | t.u) - t.v
        for open_ in (False, True):
            z = t.z | ({X} if open_ else EMPTY)
            ts.append(Transition(t.source, t.letter, z, rho, t.u | {X}, t.v, t.target))
            if acc.vector_ok(c):
                ts.append(Transition(t.source, t.letter, z, rho, frozenset([sink]),
                                     frozenset(A.sets) | {X}, t.target))
    return SetAutomaton(A.states, sets, A.alphabet, ts, A.initial, A.final,
                        Acceptance(4, sink=frozenset([X])))


def _four_to_one(A: SetAutomaton) -> SetAutomaton:
    return A.with_acceptance(Acceptance(1, zero_on=A.acceptance.sink))


# --- closure constructions ----------------------------------------------------


def rename_letters(A: SetAutomaton, mapping: dict) -> SetAutomaton:
    ts = [Transition(t.source, mapping.get(t.letter, t.letter), t.z, t.rho, t.u, t.v, t.target)
          for t in A.transitions]
    alphabet = list(dict.fromkeys(mapping.get(a, a) for a in A.alphabet))
    return SetAutomaton(A.states, A.sets, alphabet, ts, A.initial, A.final, A.acceptance)


def _require_mode1(*automata):
    for A in automata:
        if A.acceptance.mode != 1:
            raise AutomatonError("closure constructions expect acceptance mode 1")


def _require_all_stable(B):
    if set(stable_sets(B)) != set(B.sets):
        raise AutomatonError("second automaton must have only stable sets")


def union_with_stable(A: SetAutomaton, B: SetAutomaton) -> SetAutomaton:
    _require_mode1(A, B)
    _require_all_stable(B)
    if set(A.sets) & set(B.sets):
        raise AutomatonError("set names must be disjoint")
    sets = tuple(A.sets) + tuple(B.sets)
    ts = []
    for side, M, other in ((0, A, B.sets), (1, B, A.sets)):
        for t in M.transitions:
            rho = Relation(sets, set(t.rho.pairs) | {(y, y) for y in other})
            ts.append(Transition((side, t.source), t.letter, t.z, rho, t.u, t.v, (side, t.target)))
    a_sets = frozenset(A.sets)

    def ok(vec):
        if vec <= a_sets:
            return A.acceptance.vector_ok(vec)
        if not (vec & a_sets):
            return B.acceptance.vector_ok(vec)
        return False

    states = [(0, q) for q in A.states] + [(1, q) for q in B.states]
    out = SetAutomaton(states, sets, tuple(dict.fromkeys(A.alphabet + B.alphabet)), ts,
                       [(0, q) for q in A.initial] + [(1, q) for q in B.initial],
                       [(0, q) for q in A.final] + [(1, q) for q in B.final],
                       Acceptance(1, predicate=ok))
    return out


def intersect_with_stable(A: SetAutomaton, B: SetAutomaton) -> SetAutomaton:
    _require_mode1(A, B)
    _require_all_stable(B)
    if set(A.sets) & set(B.sets):
        raise AutomatonError("set names must be disjoint")
    sets = tuple(A.sets) + tuple(B.sets)
    by_letter = defaultdict(list)
    for t in B.transitions:
        by_letter[t.letter].append(t)
    ts = []
    for ta in A.transitions:
        for tb in by_letter[ta.letter]:
            rho = Relation(sets, set(ta.rho.pairs) | set(tb.rho.pairs))
            ts.append(Transition((ta.source, tb.source), ta.letter, ta.z | tb.z, rho,
                                 ta.u | tb.u, ta.v | tb.v, (ta.target, tb.target)))
    a_sets, b_sets = frozenset(A.sets), frozenset(B.sets)

    def ok(vec):
        va, vb = vec & a_sets, vec & b_sets
        return (not va or A.acceptance.vector_ok(va)) and (not vb or B.acceptance.vector_ok(vb))

    states = list(itertools.product(A.states, B.states))
    return SetAutomaton(states, sets, [a for a in A.alphabet if a in B.alphabet], ts,
                        itertools.product(A.initial, B.initial), itertools.product(A.final, B.final),
                        Acceptance(1, predicate=ok))


# --- class memory automata ----------------------------------------------------


BOTTOM = None


@dataclass
class ClassMemoryAutomaton:
    """Transitions (p, letter, remembered, q); ``remembered`` is the state
    stored for the current data value, or None if the value is fresh."""

    states: tuple
    alphabet: tuple
    transitions: tuple
    initial: object
    local_final: frozenset
    global_final: frozenset

    def __post_init__(self):
        self.states = tuple(self.states)
        self.alphabet = tuple(self.alphabet)
        self.transitions = tuple(self.transitions)
        self.local_final = frozenset(self.local_final)
        self.global_final = frozenset(self.global_final)
        if not self.local_final <= self.global_final:
            raise AutomatonError("local final states must be globally final")

    def accepts(self, w: DataWord) -> bool:
        by = defaultdict(list)
        for p, a, s, q in self.transitions:
            by[(p, a, s)].append(q)

        @lru_cache(maxsize=None)
        def run(i, p, memory):
            if i == len(w):
                return p in self.global_final and all(m in self.local_final for _, m in memory)
            a, d = w[i]
            mem = dict(memory)
            for q in by[(p, a, mem.get(d))]:
                m2 = dict(mem)
                m2[d] = q
                if run(i + 1, q, tuple(sorted(m2.items()))):
                    return True
            return False

        return run(0, self.initial, ())

    @classmethod
    def from_json(cls, obj):
        return cls(obj["states"], obj["alphabet"],
                   [(t[0], t[1], t[2], t[3]) for t in obj["transitions"]],
                   obj["initial"], obj["local_final"], obj["global_final"])

    def to_json(self):
        return {"states": list(self.states), "alphabet": list(self.alphabet),
                "transitions": [list(t) for t in self.transitions], "initial": self.initial,
                "local_final": sorted(self.local_final), "global_final": sorted(self.global_final)}


def cma_to_sa(M: ClassMemoryAutomaton) -> SetAutomaton:
    """Binary encoding of the memory function in stable sets.  Code 0 stands for
    'fresh'; a locally final state that behaves exactly like a fresh value may
    share code 0, which saves a bit."""
    succ = defaultdict(set)
    for p, a, s, q in M.transitions:
        succ[s].add((p, a, q))
    merged = None
    for q in M.states:
        if q in M.local_final and succ[q] == succ[BOTTOM]:
            merged = q
            break
    rest = [q for q in M.states if q != merged]
    code = {BOTTOM: 0}
    if merged is not None:
        code[merged] = 0
    for i, q in enumerate(rest, 1):
        code[q] = i
    width = math.ceil(math.log2(len(rest) + 1)) if rest else 0
    bits = [f"b{i}" for i in range(width)]

    def enc(q):
        c = code[q]
        return frozenset(bits[i] for i in range(width) if c >> i & 1)

    ident = Relation.identity(bits)
    ts = []
    for p, a, s, q in M.transitions:
        ts.append(Transition(p, a, enc(s), ident, enc(q), enc(s) - enc(q), q))
    vectors = frozenset(enc(q) for q in M.local_final)
    return SetAutomaton(M.states, bits, M.alphabet, ts, [M.initial], M.global_final,
                        Acceptance(1, vectors=vectors))


# --- class automata -----------------------------------------------------------


@dataclass
class NFA:
    states: tuple
    initial: frozenset
    final: frozenset
    delta: dict           # (state, symbol) -> frozenset of states

    def step(self, S: frozenset, symbol) -> frozenset:
        out = set()
        for s in S:
            out |= self.delta.get((s, symbol), frozenset())
        return frozenset(out)


@dataclass
class ClassAutomaton:
    """A letter-to-letter transducer (transitions (p, letter, output, q)) and an
    automaton over (output, bit) reading one class string per class."""

    b_states: tuple
    b_initial: frozenset
    b_final: frozenset
    b_transitions: tuple
    classes_nfa: NFA
    alphabet: tuple = ()

    def accepts(self, w: DataWord) -> bool:
        by = defaultdict(list)
        for p, a, g, q in self.b_transitions:
            by[(p, a)].append((g, q))
        C = self.classes_nfa
        vid = {}
        for d in w.data:
            vid.setdefault(d, len(vid))
        pos = [vid[d] for d in w.data]

        @lru_cache(maxsize=None)
        def run(i, p, subsets, fresh):
            if i == len(w):
                return p in self.b_final and all(S & C.final for S in subsets)
            d = pos[i]
            for g, q in by[(p, w.letters[i])]:
                new = []
                for j, S in enumerate(subsets):
                    new.append(C.step(S, (g, 1 if j == d else 0)))
                if d == len(subsets):
                    new.append(C.step(fresh, (g, 1)))
                if any(not S for S in new):
                    continue
                if run(i + 1, q, tuple(new), C.step(fresh, (g, 0))):
                    return True
            return False

        return any(run(0, p, (), C.initial) for p in self.b_initial)


def sa_to_class_automaton(A: SetAutomaton) -> ClassAutomaton:
    """Output letters are (z, rho, u, v, target) of the simulated transition; the
    class-string automaton follows one value's vector along the run."""
    if A.acceptance.mode != 2:
        raise AutomatonError("the class automaton construction expects acceptance mode 2")
    lf = A.acceptance.local_final
    outputs = [(t.z, t.rho, t.u, t.v, t.target) for t in A.transitions]
    bt = [(t.source, t.letter, (t.z, t.rho, t.u, t.v, t.target), t.target) for t in A.transitions]
    gamma = list(dict.fromkeys(outputs))
    start = ("new",)
    delta: dict = defaultdict(set)
    seen = {start}
    queue = deque([start])
    finals = set()
    while queue:
        s = queue.popleft()
        for g in gamma:
            z, rho, u, v, tgt = g
            for bit in (0, 1):
                if bit == 0:
                    nxt = s if s == start else (rho.apply(s[0]), s[1])
                else:
                    cur = EMPTY if s == start else s[0]
                    if z != cur:
                        continue
                    nxt = ((rho.apply(z) | u) - v, tgt in lf)
                delta[(s, (g, bit))].add(nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
                    if nxt != start and nxt[1]:
                        finals.add(nxt)
    nfa = NFA(tuple(seen), frozenset([start]), frozenset(finals),
              {k: frozenset(v) for k, v in delta.items()})
    return ClassAutomaton(A.states, A.initial, A.final, tuple(bt), nfa, A.alphabet)


def class_automaton_to_sa(CA: ClassAutomaton) -> SetAutomaton:
    """One set per class-string state (holding values whose class string may be
    there) plus a stable set marking values already seen; fresh classes start
    from the subset reached on an all-zero prefix, kept in the control state."""
    C = CA.classes_nfa
    cstates = list(C.states)
    tag = {s: f"C{i}" for i, s in enumerate(cstates)}
    SEEN = "seen"
    sets = [tag[s] for s in cstates] + [SEEN]
    by_source = defaultdict(list)
    for p, a, g, q in CA.b_transitions:
        by_source[p].append((a, g, q))
    outputs = list(dict.fromkeys(g for _, _, g, _ in CA.b_transitions))

    # subsets a seen value can be in: close under both kinds of steps
    subsets = {frozenset()}
    fresh_sets = {C.initial}
    changed = True
    while changed:
        changed = False
        for g in outputs:
            for T in list(fresh_sets):
                T2 = C.step(T, (g, 0))
                if T2 not in fresh_sets:
                    fresh_sets.add(T2)
                    changed = True
            for S in list(subsets) + list(fresh_sets):
                for bit in (0, 1):
                    S2 = C.step(S, (g, bit))
                    if S2 not in subsets:
                        subsets.add(S2)
                        changed = True

    def enc(S):
        return frozenset(tag[s] for s in S)

    rel_cache = {}

    def rel(g):
        if g not in rel_cache:
            pairs = [(tag[s], tag[s2]) for s in cstates for s2 in C.delta.get((s, (g, 0)), ())]
            rel_cache[g] = Relation(sets, pairs + [(SEEN, SEEN)])
        return rel_cache[g]

    start = [(p, C.initial) for p in CA.b_initial]
    seen_states = set(start)
    queue = deque(start)
    ts = []
    all_c = frozenset(tag[s] for s in cstates)
    while queue:
        st = queue.popleft()
        p, T = st
        for a, g, q in by_source[p]:
            nxt = (q, C.step(T, (g, 0)))
            rho = rel(g)
            options = [(EMPTY, T)] + [(enc(S) | {SEEN}, S) for S in subsets]
            for z, S in options:
                after = C.step(S, (g, 1))
                if not after:
                    continue
                u = enc(after) | {SEEN}
                ts.append(Transition(st, a, z, rho, u, all_c - u, nxt))
            if nxt not in seen_states:
                seen_states.add(nxt)
                queue.append(nxt)
    final_tags = frozenset(tag[s] for s in C.final)
    acc = Acceptance(1, predicate=lambda vec: SEEN in vec and bool(vec & final_tags))
    states = list(seen_states)
    alphabet = CA.alphabet or tuple(dict.fromkeys(a for _, a, _, _ in CA.b_transitions))
    out = SetAutomaton(states, sets, alphabet, ts, start, [s for s in states if s[0] in CA.b_final], acc)
    return out


def class_automaton_from_json(obj) -> ClassAutomaton:
    """JSON form: transducer {states, initial, final, transitions: [p, letter, out, q]},
    classes {states, initial, final, transitions: [s, out, bit, s2]}."""
    b = obj["transducer"]
    c = obj["classes"]
    delta = defaultdict(set)
    for s, g, bit, s2 in c["transitions"]:
        delta[(s, (g, int(bit)))].add(s2)
    nfa = NFA(tuple(c["states"]), frozenset(c["initial"]), frozenset(c["final"]),
              {k: frozenset(v) for k, v in delta.items()})
    return ClassAutomaton(tuple(b["states"]), frozenset(b["initial"]), frozenset(b["final"]),
                          tuple(tuple(t) for t in b["transitions"]), nfa, tuple(obj.get("alphabet", ())))
