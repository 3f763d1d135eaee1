"""Brute-force oracles, syntactic monoids and two-counter-machine gadgets.

The oracles here are deliberately naive: they enumerate canonical data words
and ask a recognizer about each one.  Everything else in the package is
checked against them.
"""

from __future__ import annotations

import copy
import itertools
import json
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from .core import DataWord, canonicalize, enumerate_data_words, restricted_growth_strings
from .logic import (
    TRUE, Binary, Exists, Exists2, Forall, Iff, Imp, Lang, Not, Unary, conj, disj, model_check,
)
from .semigroup import FiniteSemigroup, Morphism, direct_product


def word_key(w: DataWord):
    return (len(w), w.letters, w.data)


def sorted_words(words) -> list:
    return sorted(words, key=word_key)


# --- bounded languages ------------------------------------------------------------


@dataclass
class LanguageOracle:
    """A recognizer plus what is needed to enumerate its bounded language.

    ``recognizer`` may be a formula (needs ``morphism`` when it uses guarded
    predicates), anything with ``moves``/``is_final`` (set automata, lazy
    views), an ordered multicounter automaton (compared on string
    projections), a :class:`DFA` (read on the string projection) or a plain
    predicate on data words.
    """

    recognizer: object
    alphabet: tuple = ()
    morphism: Optional[Morphism] = None
    step_budget: object = None

    def kind(self) -> str:
        from .multicounter import OrderedMulticounterAutomaton
        r = self.recognizer
        if isinstance(r, OrderedMulticounterAutomaton):
            return "oma"
        if isinstance(r, DFA):
            return "regular"
        if hasattr(r, "moves") and hasattr(r, "is_final"):
            return "automaton"
        if callable(r):
            return "predicate"
        return "formula"

    def letters(self) -> tuple:
        if self.alphabet:
            return tuple(self.alphabet)
        r = self.recognizer
        if hasattr(r, "alphabet"):
            return tuple(r.alphabet)
        if self.morphism is not None:
            return self.morphism.alphabet
        raise ValueError("no alphabet given for the oracle")

    def membership(self) -> Callable[[DataWord], bool]:
        kind = self.kind()
        r = self.recognizer
        if kind == "automaton":
            from .set_automaton import accepts
            return lambda w: accepts(r, w)
        if kind == "regular":
            return lambda w: r.accepts(w.letters)
        if kind == "predicate":
            return r
        if kind == "formula":
            return lambda w: model_check(r, w, self.morphism)
        raise ValueError("multicounter automata are compared on projections only")


def _enumerate_with_first(letters, max_len, first):
    for n in range(1, max_len + 1):
        partitions = list(restricted_growth_strings(n))
        for rest in itertools.product(letters, repeat=n - 1):
            word = (first,) + rest
            for data in partitions:
                yield DataWord(word, data)


def bounded_language(r, max_len: int, alphabet=None, morphism=None, step_budget=None, workers: int = 1) -> frozenset:
    """Canonical data words of length at most ``max_len`` accepted by ``r``.

    For an ordered multicounter automaton the result is the set of accepted
    string projections (tuples of letters) instead.  With ``workers > 1`` the
    words are partitioned by their first letter; each worker gets its own
    deep copy of the recognizer.
    """
    oracle = r if isinstance(r, LanguageOracle) else LanguageOracle(r, tuple(alphabet or ()), morphism, step_budget)
    letters = oracle.letters()
    if oracle.kind() == "oma":
        from .compile import default_budget
        from .multicounter import accepted_projections
        return frozenset(accepted_projections(oracle.recognizer, max_len, oracle.step_budget or default_budget))
    if workers <= 1:
        member = oracle.membership()
        return frozenset(w for w in enumerate_data_words(letters, max_len) if member(w))

    def job(first):
        mine = copy.deepcopy(oracle)
        member = mine.membership()
        return {w for w in _enumerate_with_first(letters, max_len, first) if member(w)}

    member = oracle.membership()
    out = {DataWord((), ())} if member(DataWord((), ())) else set()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(job, letters):
            out |= part
    return frozenset(out)


def projections(words) -> frozenset:
    return frozenset(w.letters for w in words)


# --- regular languages and syntactic monoids -------------------------------------


@dataclass
class DFA:
    states: tuple
    alphabet: tuple
    delta: dict
    initial: object
    finals: frozenset

    def run(self, word, start=None):
        q = self.initial if start is None else start
        for a in word:
            q = self.delta[(q, a)]
        return q

    def accepts(self, word) -> bool:
        return self.run(word) in self.finals

    @classmethod
    def from_json(cls, obj) -> "DFA":
        if isinstance(obj, str):
            obj = json.loads(obj)
        delta = {(p, a): q for p, row in obj["delta"].items() for a, q in row.items()}
        return cls(tuple(obj["states"]), tuple(obj["alphabet"]), delta, obj["initial"], frozenset(obj["finals"]))


def minimize(D: DFA) -> DFA:
    """Moore partition refinement on the reachable part."""
    reach = [D.initial]
    seen = {D.initial}
    for q in reach:
        for a in D.alphabet:
            t = D.delta[(q, a)]
            if t not in seen:
                seen.add(t)
                reach.append(t)
    block = {q: int(q in D.finals) for q in reach}
    while True:
        sig = {q: (block[q],) + tuple(block[D.delta[(q, a)]] for a in D.alphabet) for q in reach}
        ids: dict = {}
        new = {q: ids.setdefault(sig[q], len(ids)) for q in reach}
        if len(ids) == len(set(block.values())):
            break
        block = new
    rep = {}
    for q in reach:
        rep.setdefault(block[q], q)
    states = tuple(sorted(rep))
    delta = {(b, a): block[D.delta[(rep[b], a)]] for b in states for a in D.alphabet}
    return DFA(states, D.alphabet, delta, block[D.initial], frozenset(block[q] for q in reach if q in D.finals))


def syntactic_monoid(D: DFA, language_name: str = "L"):
    """Transition monoid of the minimal automaton, with elements named by
    their shortest (then alphabetically least) representative word and the
    identity named ``1``.  Returns ``(monoid, morphism)``; the morphism
    recognises the language under ``language_name``."""
    D = minimize(D)
    states = D.states
    ident = tuple(states)
    rep = {ident: ""}
    order = [ident]
    queue = deque([ident])
    while queue:
        f = queue.popleft()
        for a in sorted(D.alphabet):
            g = tuple(D.delta[(q, a)] for q in f)
            if g not in rep:
                rep[g] = rep[f] + a
                order.append(g)
                queue.append(g)
    pos = {q: i for i, q in enumerate(states)}
    idx = {f: i for i, f in enumerate(order)}
    table = [[idx[tuple(g[pos[f[i]]] for i in range(len(states)))] for g in order] for f in order]
    names = [rep[f] or "1" for f in order]
    M = FiniteSemigroup(names, table, identity="1")
    letters = {a: names[idx[tuple(D.delta[(q, a)] for q in states)]] for a in D.alphabet}
    accepting = [names[idx[f]] for f in order if f[pos[D.initial]] in D.finals]
    return M, Morphism(M, letters, {language_name: accepting})


def syntactic_classes_brute(member: Callable, alphabet, max_len: int, context_len: int) -> list:
    """Group words up to ``max_len`` by their behaviour in every context
    (u, v) with |u|, |v| ≤ context_len.  An independent check of
    :func:`syntactic_monoid` on small languages."""
    def words(n):
        for k in range(n + 1):
            for t in itertools.product(sorted(alphabet), repeat=k):
                yield "".join(t)
    contexts = [(u, v) for u in words(context_len) for v in words(context_len)]
    groups: dict = {}
    for w in words(max_len):
        sig = tuple(member(u + w + v) for u, v in contexts)
        groups.setdefault(sig, []).append(w)
    return sorted(groups.values(), key=lambda g: (len(g[0]), g[0]))


def restrict_to_image(h: Morphism) -> Morphism:
    """The same morphism with its target cut down to the submonoid generated
    by the letter and predicate images."""
    M = h.monoid
    gens = set(h.letters.values()) | set(h.predicate_images.values())
    elems = [M.identity]
    seen = {M.identity}
    i = 0
    while i < len(elems):
        for g in sorted(gens):
            p = M.mul(elems[i], g)
            if p not in seen:
                seen.add(p)
                elems.append(p)
        i += 1
    elems.sort()
    pos = {e: k for k, e in enumerate(elems)}
    table = [[pos[M.mul(a, b)] for b in elems] for a in elems]
    sub = FiniteSemigroup([M.name(e) for e in elems], table, identity=M.name(M.identity), check=False)
    acc = {k: [M.name(e) for e in v if e in seen] for k, v in h.accepting.items()}
    return Morphism(sub, {a: M.name(m) for a, m in h.letters.items()}, acc,
                    {k: M.name(m) for k, m in h.predicate_images.items()})


# --- two-counter machines ----------------------------------------------------------


OPS = ("inc", "dec", "zero")


@dataclass(frozen=True)
class CMTransition:
    name: str
    source: str
    op: str
    counter: int
    target: str


@dataclass
class TwoCounterMachine:
    states: tuple
    initial: str
    final: str
    transitions: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.states = tuple(self.states)
        self.transitions = tuple(self.transitions)
        names = [t.name for t in self.transitions]
        if len(set(names)) != len(names):
            raise ValueError("transition names must be distinct")
        for t in self.transitions:
            if t.op not in OPS or t.counter not in (1, 2):
                raise ValueError(f"bad operation in {t}")
            if t.source not in self.states or t.target not in self.states:
                raise ValueError(f"{t.name} uses an unknown state")
            if t.name in ("c1", "c2"):
                raise ValueError("c1 and c2 are reserved for counter letters")

    @property
    def letters(self) -> tuple:
        return tuple(t.name for t in self.transitions)

    def by_name(self, name) -> CMTransition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(name)

    def kind(self, op, counter) -> list:
        return [t.name for t in self.transitions if t.op == op and t.counter == counter]

    def follows_final_convention(self) -> bool:
        return all(t.op == "zero" for t in self.transitions if t.target == self.final)

    def step(self, config, t: CMTransition):
        q, c = config[0], list(config[1:])
        if q != t.source:
            return None
        k = t.counter - 1
        if t.op == "inc":
            c[k] += 1
        elif t.op == "dec":
            if c[k] == 0:
                return None
            c[k] -= 1
        elif c[k] != 0:
            return None
        return (t.target, *c)

    def halting_runs(self, max_steps: int) -> list:
        """Transition-name sequences from (q0,0,0) to (q_f,0,0), shortest first."""
        out = []
        layer = [((), (self.initial, 0, 0))]
        for _ in range(max_steps + 1):
            out += [run for run, cfg in layer if cfg == (self.final, 0, 0)]
            nxt = []
            for run, cfg in layer:
                for t in self.transitions:
                    c2 = self.step(cfg, t)
                    if c2 is not None:
                        nxt.append((run + (t.name,), c2))
            layer = nxt
        return out

    def to_json(self) -> dict:
        return {"states": list(self.states), "initial": self.initial, "final": self.final,
                "transitions": [{"name": t.name, "from": t.source, "op": f"{t.op}{t.counter}", "to": t.target}
                                for t in self.transitions]}

    @classmethod
    def from_json(cls, obj) -> "TwoCounterMachine":
        if isinstance(obj, str):
            obj = json.loads(obj)
        ts = []
        for i, t in enumerate(obj["transitions"]):
            op = t["op"]
            ts.append(CMTransition(t.get("name", f"t{i + 1}"), t["from"], op[:-1], int(op[-1]), t["to"]))
        return cls(obj["states"], obj["initial"], obj["final"], ts)


def load_machine(path) -> TwoCounterMachine:
    with open(path, encoding="utf-8") as fh:
        return TwoCounterMachine.from_json(json.load(fh))


def run_word_family1(M: TwoCounterMachine, run) -> DataWord:
    """One position per transition; an increment and the decrement that undoes
    it share a value (stack discipline), every other position is fresh."""
    stacks = {1: [], 2: []}
    fresh = itertools.count(1)
    data = []
    for name in run:
        t = M.by_name(name)
        if t.op == "inc":
            d = next(fresh)
            stacks[t.counter].append(d)
        elif t.op == "dec":
            d = stacks[t.counter].pop()
        else:
            d = next(fresh)
        data.append(d)
    return canonicalize(DataWord(tuple(run), tuple(data)))


def run_word_family2(M: TwoCounterMachine, run) -> DataWord:
    """Each transition is followed by one c1 per pending increment of counter
    1 and one c2 per pending increment of counter 2; a c carries the value of
    the increment it stands for."""
    stacks = {1: [], 2: []}
    fresh = itertools.count(1)
    pairs = []
    for name in run:
        t = M.by_name(name)
        if t.op == "inc":
            d = next(fresh)
            stacks[t.counter].append(d)
        elif t.op == "dec":
            d = stacks[t.counter].pop()
        else:
            d = next(fresh)
        pairs.append((name, d))
        for i in (1, 2):
            pairs += [(f"c{i}", v) for v in stacks[i]]
    return canonicalize(DataWord.of(pairs))


@dataclass
class Encoding:
    formula: object
    morphism: Morphism
    parts: dict
    state_bits: tuple = ()
    state_code: dict = field(default_factory=dict)

    def certificate(self, M: TwoCounterMachine, w: DataWord) -> dict:
        """Intended values of the state predicates on a family-2 run word:
        each position carries the code of the state reached by the latest
        transition at or before it."""
        interp = {b: set() for b in self.state_bits}
        q = M.initial
        for i, a in enumerate(w.letters):
            if a not in ("c1", "c2"):
                q = M.by_name(a).target
            for j, b in enumerate(self.state_bits):
                if self.state_code[q][j]:
                    interp[b].add(i)
        return {k: frozenset(v) for k, v in interp.items()}

    def matrix(self):
        f = self.formula
        while isinstance(f, Exists2):
            f = f.body
        return f


def _any_letter(names, var):
    return disj(*[Unary(a, var) for a in names])


def _starts_with(names):
    # "the first position carries one of names", kept in forall-exists shape
    return Forall("x", disj(_any_letter(names, "x"), Exists("y", Binary("lt", "y", "x"))))


def _ends_with(names):
    return Forall("x", disj(_any_letter(names, "x"), Exists("y", Binary("lt", "x", "y"))))


def _class_singleton(var):
    other = "y" if var == "x" else "x"
    return Forall(other, Imp(Binary("sim", var, other), Binary("eq", var, other)))


def _compatible_pairs(M: TwoCounterMachine):
    return [(s.name, t.name) for s in M.transitions for t in M.transitions if s.target == t.source]


def _endpoints(M: TwoCounterMachine):
    start = [t.name for t in M.transitions if t.source == M.initial]
    end = [t.name for t in M.transitions if t.target == M.final]
    return start, end


def encode_2cm_family1(M: TwoCounterMachine) -> Encoding:
    """Formula over the transition alphabet whose models are run encodings
    (see :func:`run_word_family1`).  The zero-test languages ``Lz1``/``Lz2``
    ("some zero test of counter i occurs") are recognised by U1 x U1,
    cut down to the image of the letters."""
    start, end = _endpoints(M)
    parts = {
        "nonempty": Exists("x", TRUE),
        "first": _starts_with(start),
        "last": _ends_with(end),
        "compatible": Forall("x", Forall("y", Imp(
            Binary("succ", "x", "y"),
            disj(*[conj(Unary(a, "x"), Unary(b, "y")) for a, b in _compatible_pairs(M)])))),
        "pairs": Forall("x", Forall("y", Imp(
            conj(Binary("lt", "x", "y"), Binary("sim", "x", "y")),
            disj(*[conj(_any_letter(M.kind("inc", i), "x"), _any_letter(M.kind("dec", i), "y")) for i in (1, 2)])))),
        "singletons": Forall("x", Imp(_class_singleton("x"), _any_letter(M.kind("zero", 1) + M.kind("zero", 2), "x"))),
    }
    for i in (1, 2):
        inc, dec = M.kind("inc", i), M.kind("dec", i)
        parts[f"no_zero_test{i}"] = Forall("x", Forall("y", Imp(
            conj(disj(conj(_any_letter(inc, "x"), _any_letter(dec, "y")),
                      conj(_any_letter(dec, "x"), _any_letter(inc, "y"))),
                 Binary("sim", "x", "y")),
            Not(Lang(f"Lz{i}", "x", "y")))))
    U1 = FiniteSemigroup(["1", "0"], [[0, 1], [1, 1]], identity="1")
    U = direct_product(U1, U1, names=["11", "10", "01", "00"])
    letters = {}
    for t in M.transitions:
        letters[t.name] = {(1, "zero"): "01", (2, "zero"): "10"}.get((t.counter, t.op), "11")
    h = Morphism(U, letters, {"Lz1": ["01", "00"], "Lz2": ["10", "00"]})
    return Encoding(conj(*parts.values()), restrict_to_image(h), parts)


def _count_monoid(M: TwoCounterMachine) -> tuple:
    """Commutative monoid of (transitions seen: 0/1/many, zero test of
    counter 1 seen, zero test of counter 2 seen)."""
    elems = [(a, b, c) for a in range(3) for b in range(2) for c in range(2)]
    names = [f"{a}{b}{c}" for a, b, c in elems]
    pos = {e: k for k, e in enumerate(elems)}
    table = [[pos[(min(2, x[0] + y[0]), x[1] | y[1], x[2] | y[2])] for y in elems] for x in elems]
    S = FiniteSemigroup(names, table, identity="000", check=False)
    letters = {"c1": "000", "c2": "000"}
    for t in M.transitions:
        letters[t.name] = f"1{int(t.op == 'zero' and t.counter == 1)}{int(t.op == 'zero' and t.counter == 2)}"
    accepting = {
        "NoT": [n for n, e in zip(names, elems) if e[0] == 0],
        "OneT1": [n for n, e in zip(names, elems) if e[0] == 1 and not e[1]],
        "OneT2": [n for n, e in zip(names, elems) if e[0] == 1 and not e[2]],
    }
    return S, letters, accepting


def encode_2cm_family2(M: TwoCounterMachine) -> Encoding:
    """Formula over transitions plus counter letters c1, c2.

    Models look like (t c1* c2*)*: after each transition t, one c_i per
    pending increment of counter i.  Guarded languages (all recognised by a
    quotient of the one-occurrence monoids) pin each class down:
    ``NoT`` (no transition in the factor) and ``OneTi`` (exactly one
    transition, not a zero test of counter i).  Control-state agreement
    across c-blocks needs existential predicates ``st0, st1, ...`` holding
    a binary code of the current state.
    """
    start, end = _endpoints(M)
    k = max(1, (len(M.states) - 1).bit_length())
    bits = tuple(f"st{j}" for j in range(k))
    code = {q: tuple((n >> j) & 1 for j in range(k)) for n, q in enumerate(M.states)}

    def has_code(q, var):
        return conj(*[Unary(b, var) if code[q][j] else Not(Unary(b, var)) for j, b in enumerate(bits)])

    is_c = _any_letter(("c1", "c2"), "y")
    parts = {
        "nonempty": Exists("x", TRUE),
        "first": _starts_with(start),
        "last": _ends_with(end),
        "block_order": Forall("x", Forall("y", Imp(conj(Binary("succ", "x", "y"), Unary("c2", "x")),
                                                     Not(Unary("c1", "y"))))),
        "state_after": Forall("x", conj(*[Imp(Unary(t.name, "x"), has_code(t.target, "x")) for t in M.transitions])),
        "state_before": Forall("x", Forall("y", Imp(
            Binary("succ", "x", "y"),
            conj(*[Imp(Unary(t.name, "y"), has_code(t.source, "x")) for t in M.transitions])))),
        "state_kept": Forall("x", Forall("y", Imp(
            conj(Binary("succ", "x", "y"), is_c),
            conj(*[Iff(Unary(b, "x"), Unary(b, "y")) for b in bits])))),
    }
    steps = []
    for i in (1, 2):
        ci, inc, dec = f"c{i}", M.kind("inc", i), M.kind("dec", i)
        steps += [
            conj(_any_letter(inc, "x"), Unary(ci, "y"), Lang("NoT", "x", "y")),
            conj(Unary(ci, "x"), Unary(ci, "y"), Lang(f"OneT{i}", "x", "y")),
            conj(Unary(ci, "x"), _any_letter(dec, "y"), Lang("NoT", "x", "y")),
        ]
    parts["class_steps"] = Forall("x", Forall("y", Imp(Binary("csucc", "x", "y"), disj(*steps))))
    opens = M.kind("inc", 1) + M.kind("inc", 2) + M.kind("zero", 1) + M.kind("zero", 2)
    closes = M.kind("dec", 1) + M.kind("dec", 2) + M.kind("zero", 1) + M.kind("zero", 2)
    parts["class_first"] = Forall("x", Imp(Forall("y", Not(Binary("csucc", "y", "x"))), _any_letter(opens, "x")))
    parts["class_last"] = Forall("x", Imp(Forall("y", Not(Binary("csucc", "x", "y"))), _any_letter(closes, "x")))
    parts["zero_alone"] = Forall("x", Imp(_any_letter(M.kind("zero", 1) + M.kind("zero", 2), "x"),
                                          _class_singleton("x")))
    S, letters, accepting = _count_monoid(M)
    h = restrict_to_image(Morphism(S, letters, accepting))
    body = conj(*parts.values())
    phi = body
    for b in reversed(bits):
        phi = Exists2(b, phi)
    return Encoding(phi, h, parts, bits, code)


def tiny_machines() -> dict:
    """Fixture machines: two halting, one that can never move."""
    T = CMTransition
    return {
        "zero_zero": TwoCounterMachine(["q0", "q1", "qf"], "q0", "qf",
                                       [T("t1", "q0", "zero", 1, "q1"), T("t2", "q1", "zero", 2, "qf")]),
        "inc_dec": TwoCounterMachine(["q0", "q1", "q2", "qf"], "q0", "qf",
                                     [T("t1", "q0", "inc", 1, "q1"), T("t2", "q1", "dec", 1, "q2"),
                                      T("t3", "q2", "zero", 1, "qf")]),
        "dec_at_zero": TwoCounterMachine(["q0", "qf"], "q0", "qf", [T("t1", "q0", "dec", 1, "qf")]),
    }


# --- random generators ------------------------------------------------------------


def random_transformation_submonoid(rng, degree: int = 3, max_gens: int = 3) -> FiniteSemigroup:
    from .semigroup import transformation_monoid
    gens = [tuple(rng.randrange(degree) for _ in range(degree)) for _ in range(rng.randint(1, max_gens))]
    return transformation_monoid(gens, degree)[0]


def random_set_automaton(rng, n_states: int = 3, sets=("A", "B"), alphabet=("a", "b"), density: float = 0.3,
                         mode: int = 1):
    """Small random set automaton; global updates are random relations."""
    from .boolalg import Relation
    from .set_automaton import Acceptance, SetAutomaton, Transition
    states = [f"q{i}" for i in range(n_states)]
    subsets = [frozenset(c) for r in range(len(sets) + 1) for c in itertools.combinations(sets, r)]
    ts = []
    for p in states:
        for a in alphabet:
            for z in subsets:
                if rng.random() < density:
                    pairs = [(x, y) for x in sets for y in sets if rng.random() < 0.4]
                    if rng.random() < 0.5:
                        pairs = [(x, x) for x in sets]
                    u = frozenset(y for y in sets if rng.random() < 0.4)
                    v = frozenset(y for y in sets if y not in u and rng.random() < 0.3)
                    ts.append(Transition(p, a, z, Relation(sets, pairs), u, v, rng.choice(states)))
    final = [q for q in states if rng.random() < 0.5] or [states[-1]]
    vecs = [s for s in subsets if rng.random() < 0.5] or [frozenset()]
    return SetAutomaton(states, sets, alphabet, ts, [states[0]], final, Acceptance(mode, vectors=frozenset(vecs)))


def random_ordered_normal_sa(rng, n_states: int = 2, n_sets: int = 2, alphabet=("a", "b"), density: float = 0.5,
                             tries: int = 200):
    """Random normal automaton whose updates drain a prefix of Y1 < Y2 < ...
    into the remaining sets; retried until it passes is_normal/find_order."""
    from .boolalg import Relation
    from .set_automaton import Acceptance, SetAutomaton, Transition, find_order, is_normal
    sets = [f"Y{i + 1}" for i in range(n_sets)]
    states = [f"q{i}" for i in range(n_states)]
    vectors = [frozenset()] + [frozenset([y]) for y in sets]

    def update(low):
        m = rng.randrange(low, n_sets)
        pairs = [(y, y) for y in sets[m:]]
        for y in sets[:m]:
            if rng.random() < 0.8:
                pairs.append((y, rng.choice(sets[m:])))
        return Relation(sets, pairs)

    for _ in range(tries):
        low = 1 if n_sets > 1 and rng.random() < 0.5 else 0
        ts = []
        for p in states:
            for a in alphabet:
                for z in vectors:
                    if rng.random() >= density:
                        continue
                    rho = update(low)
                    moved = rho.apply(z)
                    u = frozenset([rng.choice(sets)]) if rng.random() < 0.6 else frozenset()
                    v = moved if u != moved else frozenset()
                    ts.append(Transition(p, a, z, rho, u, v, rng.choice(states)))
        final = [q for q in states if rng.random() < 0.5] or [states[-1]]
        acc = [vec for vec in vectors if rng.random() < 0.6] or [frozenset()]
        A = SetAutomaton(states, sets, list(alphabet), ts, [states[0]], final, Acceptance(1, vectors=frozenset(acc)))
        if ts and is_normal(A) and find_order(A) is not None:
            return A
    raise RuntimeError("no ordered normal automaton found")
