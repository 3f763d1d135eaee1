"""Ordered multicounter automata and the reduction from ordered normal set automata.

Operations are tuples ``("inc", i)``, ``("dec", i)`` and ``("zero", j)``; the
last tests counters ``0 .. j-1`` (so ``("zero", 0)`` tests nothing and serves
as a labelled no-op).
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .set_automaton import AutomatonError, SetAutomaton, bounded_sets, find_order, is_normal, is_ordered, stable_sets


class CounterError(AssertionError):
    pass


def parse_op(text: str, counters) -> tuple:
    kind, _, arg = text.partition(":")
    if kind in ("inc", "dec"):
        if arg not in counters:
            raise ValueError(f"unknown counter {arg!r}")
        return (kind, list(counters).index(arg))
    if kind == "zero":
        j = int(arg.lstrip("<="))
        if not 0 <= j <= len(counters):
            raise ValueError(f"zero test bound {j} out of range")
        return ("zero", j)
    raise ValueError(f"unknown operation {text!r}")


def format_op(op, counters) -> str:
    kind, i = op
    if kind == "zero":
        return f"zero:<={i}"
    return f"{kind}:{counters[i]}"


class OrderedMulticounterAutomaton:
    def __init__(self, states, alphabet, counters, transitions, initial, final):
        self.states = tuple(dict.fromkeys(states))
        self.alphabet = tuple(alphabet)
        self.counters = tuple(counters)
        self.transitions = tuple(dict.fromkeys(transitions))
        self.initial = frozenset(initial)
        self.final = frozenset(final)
        k = len(self.counters)
        self._out = defaultdict(list)
        known = set(self.states)
        for p, a, op, q in self.transitions:
            if p not in known or q not in known:
                raise ValueError(f"transition {(p, a, op, q)} uses an unknown state")
            kind, i = op
            if kind in ("inc", "dec") and not 0 <= i < k or kind == "zero" and not 0 <= i <= k:
                raise ValueError(f"counter index out of range in {op}")
            if kind not in ("inc", "dec", "zero"):
                raise ValueError(f"unknown operation {op}")
            self._out[(p, a)].append((op, q))

    def moves(self, q, letter):
        return self._out.get((q, letter), ())

    def to_json(self) -> dict:
        names = [str(c) for c in self.counters]
        return {
            "states": [str(q) for q in self.states],
            "alphabet": list(self.alphabet),
            "counters": names,
            "transitions": [[str(p), a, format_op(op, names), str(q)] for p, a, op, q in self.transitions],
            "initial": sorted(map(str, self.initial)),
            "final": sorted(map(str, self.final)),
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        counters = obj["counters"]
        ts = [(p, a, parse_op(op, counters), q) for p, a, op, q in obj["transitions"]]
        return cls(obj["states"], obj["alphabet"], counters, ts, obj["initial"], obj["final"])

    def __repr__(self):
        return f"OMA({len(self.states)} states, counters={list(self.counters)}, {len(self.transitions)} transitions)"


def load_oma(path) -> OrderedMulticounterAutomaton:
    with open(path, encoding="utf-8") as fh:
        return OrderedMulticounterAutomaton.from_json(json.load(fh))


def apply_op(op, counters: tuple) -> Optional[tuple]:
    kind, i = op
    if kind == "inc":
        return counters[:i] + (counters[i] + 1,) + counters[i + 1:]
    if kind == "dec":
        if counters[i] == 0:
            return None
        return counters[:i] + (counters[i] - 1,) + counters[i + 1:]
    if any(counters[:i]):
        return None
    return counters


def _checked(op, counters, nxt):
    if nxt is None:
        return None
    if min(nxt, default=0) < 0:
        raise CounterError(f"negative counter after {op}")
    if op[0] == "zero" and any(counters[:op[1]]):
        raise CounterError(f"zero test {op} passed with counters {counters}")
    return nxt


def _closure(M, frontier: dict, budget: int) -> dict:
    """Extend a map config -> steps with every ε-reachable config within budget."""
    out = dict(frontier)
    queue = sorted(frontier.items(), key=lambda kv: kv[1])
    while queue:
        nxt_queue = []
        for (q, cs), steps in queue:
            if steps >= budget or out.get((q, cs), budget + 1) < steps:
                continue
            for op, q2 in M.moves(q, None):
                cs2 = _checked(op, cs, apply_op(op, cs))
                if cs2 is None:
                    continue
                key = (q2, cs2)
                if out.get(key, budget + 1) > steps + 1:
                    out[key] = steps + 1
                    nxt_queue.append((key, steps + 1))
        queue = nxt_queue
    return out


def _read(M, configs: dict, letter, budget: int) -> dict:
    out: dict = {}
    for (q, cs), steps in configs.items():
        if steps >= budget:
            continue
        for op, q2 in M.moves(q, letter):
            cs2 = _checked(op, cs, apply_op(op, cs))
            if cs2 is None:
                continue
            key = (q2, cs2)
            if out.get(key, budget + 1) > steps + 1:
                out[key] = steps + 1
    return _closure(M, out, budget)


def _initial(M, budget):
    zero = tuple(0 for _ in M.counters)
    return _closure(M, {(q, zero): 0 for q in M.initial}, budget)


def _accepting(M, configs) -> bool:
    return any(q in M.final and not any(cs) for (q, cs) in configs)


def run_bounded(M, word, step_budget: int) -> bool:
    configs = _initial(M, step_budget)
    for a in word:
        configs = _read(M, configs, a, step_budget)
        if not configs:
            return False
    return _accepting(M, configs)


@dataclass(frozen=True)
class NonEmpty:
    witness: tuple


@dataclass(frozen=True)
class UnknownUpTo:
    max_len: int


def _budget(step_budget, n):
    return step_budget(n) if callable(step_budget) else step_budget


def emptiness_bounded(M, max_len: int, step_budget) -> object:
    """Breadth-first by word length, letters in alphabet order; the first
    accepted word found is a shortest one and the lexicographically least
    among those."""
    for n in range(max_len + 1):
        budget = _budget(step_budget, n)
        layer = {(): _initial(M, budget)}
        for _ in range(n):
            nxt = {}
            for word, configs in layer.items():
                for a in M.alphabet:
                    c2 = _read(M, configs, a, budget)
                    if c2:
                        nxt[word + (a,)] = c2
            layer = _merge_by_config(nxt)
        for word in sorted(layer):
            if _accepting(M, layer[word]):
                return NonEmpty(word)
    return UnknownUpTo(max_len)


def _merge_by_config(layer: dict) -> dict:
    """Drop words whose configuration sets (with steps) are subsumed by a
    lexicographically smaller word; keeps the search linear in distinct sets."""
    seen = {}
    for word in sorted(layer):
        key = frozenset(layer[word].items())
        if key not in seen:
            seen[key] = word
    return {w: layer[w] for w in seen.values()}


def accepted_projections(M, max_len: int, step_budget) -> set:
    """Every word of length ≤ max_len with an accepting run within budget."""
    out = set()
    for n in range(max_len + 1):
        budget = _budget(step_budget, n)
        layer = {(): _initial(M, budget)}
        for _ in range(n):
            layer = {w + (a,): c for w, cs in layer.items() for a in M.alphabet
                     for c in [_read(M, cs, a, budget)] if c}
        out |= {w for w, cs in layer.items() if _accepting(M, cs)}
    return out


# --- reduction from ordered normal set automata -------------------------------


def _bounded_limits(A: SetAutomaton, bnd) -> dict:
    from .boolalg import transitive_closure, union
    rels = list(A.updates())
    if not rels:
        return {y: 1 << 30 for y in bnd}
    plus = transitive_closure(union(rels, A.sets))
    return {y: 1 + len(plus.preimage[y]) for y in bnd}


def from_ordered_normal_sa(A: SetAutomaton, order=None) -> OrderedMulticounterAutomaton:
    """Counters for non-bounded sets (in the automaton's order); the contents
    of bounded sets are counted in the control state."""
    if A.acceptance.mode != 1:
        raise AutomatonError("the reduction expects acceptance mode 1")
    if not is_normal(A):
        raise AutomatonError("the reduction expects a normal automaton")
    if order is None:
        order = find_order(A)
        if order is None:
            raise AutomatonError("automaton is not ordered")
    elif not is_ordered(A, order):
        raise AutomatonError("given order is not an order of the automaton")
    bnd = bounded_sets(A)
    stable = stable_sets(A)
    counters = [y for y in order if y not in bnd and y not in stable]
    counters += [y for y in A.sets if y in stable and y not in bnd]
    bounded = [y for y in A.sets if y in bnd]
    cidx = {y: i for i, y in enumerate(counters)}
    bidx = {y: i for i, y in enumerate(bounded)}
    limits = _bounded_limits(A, bnd)
    accepted = {y for y in A.sets if A.acceptance.vector_ok(frozenset([y]))}

    states, trans = [], []
    seen = set()
    mid = [0]

    def add_state(s):
        if s not in seen:
            seen.add(s)
            states.append(s)
            return True
        return False

    def fresh():
        mid[0] += 1
        s = ("mid", mid[0])
        add_state(s)
        return s

    def chain(src, letter, ops, dst):
        """Straight-line ops from src to dst; the first op carries the letter.
        ('loops', [body, ...]) is one hub state carrying several loops, each
        of which may repeat any number of times."""
        if not ops:
            ops = [("zero", 0)]
        cur, lab = src, letter
        for k, op in enumerate(ops):
            last = k == len(ops) - 1
            if op[0] == "loops":
                hub = fresh()
                trans.append((cur, lab, ("zero", 0), hub))
                lab = None
                for body in op[1]:
                    pos = hub
                    for j, bop in enumerate(body):
                        nxt = hub if j == len(body) - 1 else fresh()
                        trans.append((pos, None, bop, nxt))
                        pos = nxt
                cur = hub
                if last:
                    trans.append((cur, None, ("zero", 0), dst))
                continue
            nxt = dst if last else fresh()
            trans.append((cur, lab, op, nxt))
            lab = None
            cur = nxt

    def drain(pairs):
        bodies = []
        for y, target in pairs:
            body = [("dec", cidx[y])]
            if target is not None:
                body.append(("inc", cidx[target]))
            bodies.append(body)
        return ("loops", bodies)

    zero_b = tuple(0 for _ in bounded)
    start = [(q, zero_b) for q in sorted(A.initial, key=str)]
    work = list(start)
    for s in start:
        add_state(s)
    by_source = defaultdict(list)
    for t in A.transitions:
        by_source[t.source].append(t)
    done_final = set()

    while work:
        p, b = work.pop()
        if p in A.final and (p, b) not in done_final:
            done_final.add((p, b))
            if all(b[bidx[y]] == 0 or y in accepted for y in bounded):
                ops = [drain([(y, None) for y in counters if y in accepted])]
                ops.append(("zero", len(counters)))
                add_state("accept")
                chain((p, b), None, ops, "accept")
        for t in by_source[p]:
            b2 = list(b)
            ops = []
            if t.z:
                (y,) = tuple(t.z)
                if y in bidx:
                    if b2[bidx[y]] == 0:
                        continue
                    b2[bidx[y]] -= 1
                else:
                    ops.append(("dec", cidx[y]))
            img = {y: next(iter(t.rho.image[y]), None) for y in A.sets}
            nb = [y for y in counters if y not in bidx]
            moved = [y for y in nb if img[y] != y]
            if moved:
                ops.append(drain([(y, img[y]) for y in moved]))
                ops.append(("zero", max(cidx[y] for y in moved) + 1))
            b3 = [0] * len(bounded)
            for x in bounded:
                n = b2[bidx[x]]
                tgt = img[x]
                if not n or tgt is None:
                    continue
                if tgt in bidx:
                    b3[bidx[tgt]] += n
                else:
                    ops.extend([("inc", cidx[tgt])] * n)
            c = (t.rho.apply(t.z) | t.u) - t.v
            if c:
                (y,) = tuple(c)
                if y in bidx:
                    b3[bidx[y]] += 1
                else:
                    ops.append(("inc", cidx[y]))
            for y in bounded:
                if b3[bidx[y]] > limits[y]:
                    raise CounterError(f"bounded set {y} would hold {b3[bidx[y]]} > {limits[y]} values")
            dst = (t.target, tuple(b3))
            if add_state(dst):
                work.append(dst)
            chain((p, b), t.letter, ops, dst)

    return OrderedMulticounterAutomaton(states, A.alphabet, counters, trans, start, ["accept"] if "accept" in seen else [])
