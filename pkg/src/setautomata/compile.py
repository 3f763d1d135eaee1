"""Translations between the logic and set automata, and the satisfiability
pipeline for morphisms into linear bands.

``compile_formula`` builds a suffix-storing automaton for a list of type-level
conjuncts.  It reads plain letters and guesses the monadic predicates of every
position, so its language is the projection of the models of the conjuncts.

The monoid of the automaton is ``M`` with a fresh identity adjoined (named
``FRESH``).  A value whose latest occurrence is the position just read sits in
``X[FRESH]``; this separates "adjacent" from "the factor in between maps to 1".
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

from .boolalg import Relation
from .core import DataWord, data_assignments
from .logic import (
    Conjunct, SNF, UnaryType, decompose, model_check, scott_normal_form, unary_types,
)
from .semigroup import (
    FiniteSemigroup, Morphism, build_L_extension, check_height_claims, is_linear_band, non_linear_witness,
)
from .set_automaton import (
    EMPTY, Acceptance, InvariantViolation, Move, NormalizedView, SetAutomaton,
    bounded_sets, materialize, stable_sets,
)

FRESH = "1^"


class CompileError(ValueError):
    pass


# --- case tables ----------------------------------------------------------
#
# Keys are (order type, equivalence type) of a conjunct after orientation.
# For forall-forall conjuncts x is the earlier position (mirrored shapes are
# flipped by ``decompose``); the value names the check run when the later
# position is read.  For forall-exists conjuncts x is the current position and
# the value names either a check on the past or an obligation on the future.

AA_CASES = {
    ("x=y", "x=y"): "forbid",
    ("x+1=y", "x!~y"): "adjacent_other",
    ("x<<y", "x!~y"): "distant_other",
    ("x<<y", "x~~y"): "distant_same",
    ("x<<y", "xs1=y"): "class_successor",
    ("x+1=y", "xs1=y"): "adjacent_successor",
}

# unoriented shapes of the mirrored cases, for reporting
AA_MIRRORED = {
    ("y<<x", "x~~y"): "distant_same_reversed",
    ("y<<x", "ys1=x"): "class_successor_reversed",
    ("y+1=x", "ys1=x"): "adjacent_successor_reversed",
}

AE_CASES = {
    ("x<<y", "x~~y"): "later_same",
    ("x<<y", "xs1=y"): "next_occurrence",
    ("x+1=y", "xs1=y"): "next_position_same",
    ("y<<x", "x~~y"): "earlier_same",
    ("y<<x", "ys1=x"): "previous_occurrence",
    ("y+1=x", "ys1=x"): "previous_position_same",
    ("x+1=y", "x!~y"): "next_position_other",
    ("x<<y", "x!~y"): "later_other",
    ("y+1=x", "x!~y"): "previous_position_other",
    ("y<<x", "x!~y"): "earlier_other",
    ("x=y", "x=y"): "itself",
}

AE_PAST = {"earlier_same", "previous_occurrence", "previous_position_same",
           "previous_position_other", "earlier_other", "itself"}


def aa_case(c: Conjunct) -> str:
    try:
        return AA_CASES[(c.order, c.equiv)]
    except KeyError:
        raise CompileError(f"no construction for {c.describe()}") from None


def ae_case(c: Conjunct) -> str:
    if c.beta is None:
        return "forbid"
    try:
        return AE_CASES[(c.order, c.equiv)]
    except KeyError:
        raise CompileError(f"no construction for {c.describe()}") from None


# --- helpers ----------------------------------------------------------------


class ShiftUpdate:
    """Global update ``X[m] -> X[m*g]``; every other set is left alone."""

    __slots__ = ("factor", "_map", "_h")

    def __init__(self, factor: int, mapping: dict):
        self.factor = factor
        self._map = mapping
        self._h = hash(("shift", factor))

    def apply(self, members):
        m = self._map
        return frozenset(m.get(y, y) for y in members)

    def __eq__(self, other):
        return isinstance(other, ShiftUpdate) and self.factor == other.factor and self._map is other._map

    def __hash__(self):
        return self._h


@dataclass(frozen=True)
class _Option:
    case: str
    beta: UnaryType
    accept: Optional[frozenset]
    slot: int = -1          # index of the obligation sets of future options


@dataclass(frozen=True)
class _Group:
    alpha: UnaryType
    past: tuple
    future: tuple
    forbidden: bool


@dataclass(frozen=True)
class _Context:
    """What the automaton knows about the current position before updating."""
    first: bool
    last_image: Optional[int]       # hat-monoid element stored in X, None if first
    last_type: Optional[UnaryType]
    adjacent_same: bool
    real: Optional[int]             # image of the factor since the latest occurrence
    history: dict                   # type -> frozenset of images (G sets)
    seen: frozenset                 # types of the Seen sets holding the value


class SuffixStoringAutomaton:
    """Lazy set automaton compiled from type-level conjuncts.

    States are tuples ``(started, prev_type, prev_first, counts, pending, far)``:

    * ``prev_type``/``prev_first``: type of the previous position and whether it
      was the first position of that type in its class;
    * ``counts``: per tracked type, number of classes having that type so far (capped at 3);
    * ``pending``: obligations on the next position, pairs (type, same class?);
    * ``far``: per "later position of another class" obligation the flags
      (marked, marked_old, marked_new, other_old, other_new).
    """

    def __init__(self, conjuncts, h: Morphism, predicates=(), empty_value=True, alphabet=None):
        self.h = h
        self.conjuncts = tuple(conjuncts)
        self.predicates = tuple(predicates)
        self.empty_value = bool(empty_value)
        self.alphabet = tuple(alphabet or h.alphabet)
        M = h.monoid
        try:
            self.monoid = M.adjoin_identity(FRESH)
        except Exception as exc:
            raise CompileError(str(exc)) from exc
        self.hat = self.monoid.identity
        self.one = M.identity
        self.types = unary_types(self.alphabet, self.predicates)
        self.type_image = {t: h.position_image(t.letter, t.preds) for t in self.types}
        self._build_tables()
        self._build_sets()
        self._cache: dict = {}
        self.initial = ((False, None, False, tuple(0 for _ in self.count_types), frozenset(),
                         tuple((False,) * 5 for _ in self.far_slots)),)
        self.acceptance = Acceptance(1, zero_on=frozenset(self.obligation_sets))

    # .. tables
    def _build_tables(self):
        for c in self.conjuncts:
            for t in (c.alpha, c.beta):
                if t is not None and t not in self.type_image:
                    raise CompileError(f"type {t} outside the alphabet/vocabulary")
            if c.accept is not None:
                for m in c.accept:
                    if not 0 <= m < len(self.h.monoid):
                        raise CompileError(f"accepting element {m} outside the monoid")
        self.aa_by_beta = defaultdict(list)
        for c in self.conjuncts:
            if c.kind == "AA":
                self.aa_by_beta[c.beta].append((aa_case(c), c))
        groups = defaultdict(list)
        for c in self.conjuncts:
            if c.kind == "AE":
                groups[c.group].append(c)
        slots = itertools.count()
        self.groups = defaultdict(list)
        self.slot_options = []
        for g in sorted(groups):
            cs = groups[g]
            past, future = [], []
            forbidden = False
            for c in cs:
                case = ae_case(c)
                if case == "forbid":
                    forbidden = True
                    continue
                if case in AE_PAST:
                    past.append(_Option(case, c.beta, c.accept))
                else:
                    opt = _Option(case, c.beta, c.accept, next(slots))
                    future.append(opt)
                    self.slot_options.append(opt)
            self.groups[cs[0].alpha].append(_Group(cs[0].alpha, tuple(past), tuple(future), forbidden))
        count_types, hist_types = set(), set()
        for c in self.conjuncts:
            case = aa_case(c) if c.kind == "AA" else ae_case(c)
            if case == "distant_other":
                count_types.add(c.alpha)
            elif case == "earlier_other":
                count_types.add(c.beta)
            elif case == "distant_same":
                hist_types.add(c.alpha)
            elif case == "earlier_same":
                hist_types.add(c.beta)
        self.count_types = tuple(sorted(count_types))
        self.count_index = {t: i for i, t in enumerate(self.count_types)}
        self.hist_types = tuple(sorted(hist_types))
        self.far_slots = tuple(o.slot for o in self.slot_options if o.case == "later_other")
        self.far_index = {s: i for i, s in enumerate(self.far_slots)}

    def _build_sets(self):
        M = self.monoid
        real = range(len(self.h.monoid))
        self.x_name = {m: f"X[{M.name(m)}]" for m in range(len(M))}
        self.a_name = {t: f"A[{t}]" for t in self.types}
        self.g_name = {(t, m): f"G[{t}|{M.name(m)}]" for t in self.hist_types for m in real}
        self.s_name = {t: f"S[{t}]" for t in self.count_types}
        self.n_name, self.p_name, self.l_name, self.e_name = {}, {}, {}, {}
        for o in self.slot_options:
            if o.case == "next_occurrence":
                self.n_name[o.slot] = f"N[{o.slot}]"
            elif o.case == "later_same":
                for m in real:
                    self.p_name[(o.slot, m)] = f"P[{o.slot}|{M.name(m)}]"
                self.l_name[o.slot] = f"P[{o.slot}|+]"
            elif o.case == "later_other":
                self.e_name[o.slot] = f"E[{o.slot}]"
        self.x_sets = tuple(self.x_name.values())
        self.obligation_sets = tuple(self.n_name.values()) + tuple(self.p_name.values()) + \
            tuple(self.l_name.values())
        self.stable = tuple(self.a_name.values()) + tuple(self.g_name.values()) + tuple(self.s_name.values()) + \
            self.obligation_sets + tuple(self.e_name.values())
        self.sets = self.x_sets + self.stable
        self.decode = {}
        for m, n in self.x_name.items():
            self.decode[n] = ("X", m)
        for t, n in self.a_name.items():
            self.decode[n] = ("A", t)
        for (t, m), n in self.g_name.items():
            self.decode[n] = ("G", t, m)
        for t, n in self.s_name.items():
            self.decode[n] = ("S", t)
        for s, n in self.n_name.items():
            self.decode[n] = ("N", s)
        for (s, m), n in self.p_name.items():
            self.decode[n] = ("P", s, m)
        for s, n in self.l_name.items():
            self.decode[n] = ("L", s)
        for s, n in self.e_name.items():
            self.decode[n] = ("E", s)
        self.shifts = {}
        for a in self.alphabet:
            g = self.h.letter_image(a)
            if g not in self.shifts:
                mapping = {self.x_name[m]: self.x_name[M.mul(m, g)] for m in range(len(M))}
                self.shifts[g] = ShiftUpdate(g, mapping)

    # .. monoid helpers
    def real(self, m: int) -> int:
        return self.one if m == self.hat else m

    def mul(self, *items) -> int:
        M = self.h.monoid
        out = M.identity
        for x in items:
            out = M.mul(out, x)
        return out

    # .. automaton interface
    def is_final(self, q) -> bool:
        started, _, _, _, pending, far = q
        if not started:
            return self.empty_value
        return not pending and not any(any(f[1:]) for f in far)

    def read(self, z: frozenset) -> Optional[_Context]:
        """Decode a membership vector; None for vectors no run produces."""
        xs, labels = [], []
        hist = defaultdict(set)
        seen = set()
        for name in z:
            d = self.decode.get(name)
            if d is None:
                return None
            if d[0] == "X":
                xs.append(d[1])
            elif d[0] == "A":
                labels.append(d[1])
            elif d[0] == "G":
                hist[d[1]].add(d[2])
            elif d[0] == "S":
                seen.add(d[1])
        if len(xs) > 1 or len(labels) > 1 or len(xs) != len(labels):
            return None
        if not xs:
            return _Context(True, None, None, False, None, {}, frozenset(seen))
        m = xs[0]
        return _Context(False, m, labels[0], m == self.hat, self.real(m),
                        {t: frozenset(v) for t, v in hist.items()}, frozenset(seen))

    def other_class_before(self, t: UnaryType, q, ctx: _Context) -> bool:
        """Is there a position of type t, at least two back, holding another value?"""
        _, prev_type, prev_first, counts, _, _ = q
        count = counts[self.count_index[t]]
        if count >= 3:
            return True
        fresh_prev = prev_type == t and prev_first
        classes = count - (1 if fresh_prev else 0)
        if classes <= 0:
            return False
        if classes >= 2:
            return True
        has_own = t in ctx.seen and not (fresh_prev and ctx.adjacent_same)
        return not has_own

    def _aa_ok(self, t: UnaryType, q, ctx: _Context) -> bool:
        prev_type = q[1]
        for case, c in self.aa_by_beta.get(t, ()):
            a = c.alpha
            if case == "forbid":
                if a == t:
                    return False
            elif case == "adjacent_other":
                if q[0] and prev_type == a and not ctx.adjacent_same:
                    return False
            elif case == "distant_other":
                if self.other_class_before(a, q, ctx):
                    return False
            elif ctx.first:
                continue
            elif case == "adjacent_successor":
                if ctx.adjacent_same and ctx.last_type == a and self.one not in c.accept:
                    return False
            elif case == "class_successor":
                if not ctx.adjacent_same and ctx.last_type == a and ctx.real not in c.accept:
                    return False
            elif case == "distant_same":
                lab = self.type_image[ctx.last_type]
                for g in ctx.history.get(a, ()):
                    if self.mul(g, lab, ctx.real) not in c.accept:
                        return False
        return True

    def _past_ok(self, opt: _Option, q, ctx: _Context) -> bool:
        b = opt.beta
        case = opt.case
        if case == "itself":
            return True
        if case == "previous_position_other":
            return q[0] and q[1] == b and not ctx.adjacent_same
        if case == "earlier_other":
            return self.other_class_before(b, q, ctx)
        if ctx.first:
            return False
        if case == "previous_position_same":
            return ctx.adjacent_same and ctx.last_type == b and self.one in opt.accept
        if case == "previous_occurrence":
            return not ctx.adjacent_same and ctx.last_type == b and ctx.real in opt.accept
        if case == "earlier_same":
            lab = self.type_image[ctx.last_type]
            return any(self.mul(g, lab, ctx.real) in opt.accept for g in ctx.history.get(b, ()))
        raise CompileError(case)

    def moves(self, q, letter, z):
        key = (q, letter, z)
        hit = self._cache.get(key)
        if hit is None:
            hit = tuple(self._moves(q, letter, z))
            self._cache[key] = hit
        return hit

    def _moves(self, q, letter, z):
        started, prev_type, prev_first, counts, pending, far = q
        ctx = self.read(z)
        if ctx is None:
            return
        rho = self.shifts[self.h.letter_image(letter)]
        moved = rho.apply(z) if z else EMPTY
        for t in self.types:
            if t.letter != letter:
                continue
            if not self._aa_ok(t, q, ctx):
                continue
            if any(b != t or same != ctx.adjacent_same for b, same in pending):
                continue
            # obligations carried by the value
            ok = True
            keep = set()
            for name in z:
                d = self.decode[name]
                if d[0] == "N":
                    o = self.slot_options[d[1]]
                    if ctx.adjacent_same or t != o.beta or ctx.real not in o.accept:
                        ok = False
                        break
            if not ok:
                continue
            carried = defaultdict(set)
            if not ctx.first:
                lab = self.type_image[ctx.last_type]
                for name in z:
                    d = self.decode[name]
                    if d[0] == "P":
                        o = self.slot_options[d[1]]
                        full = self.mul(d[2], lab, ctx.real)
                        if not (t == o.beta and full in o.accept):
                            carried[d[1]].add(full)
                    elif d[0] == "L":
                        carried[d[1]].add(ctx.real)
                    elif d[0] == "E":
                        keep.add(name)
            # groups for this type
            choices = []
            dead = False
            for grp in self.groups.get(t, ()):
                if grp.forbidden and not grp.past and not grp.future:
                    dead = True
                    break
                if any(self._past_ok(o, q, ctx) for o in grp.past):
                    continue
                if not grp.future:
                    dead = True
                    break
                choices.append(grp.future)
            if dead:
                continue
            base = self._base_vector(t, ctx, carried, keep)
            new_counts = list(counts)
            fresh_of_type = t not in ctx.seen
            if t in self.count_index:
                i = self.count_index[t]
                if fresh_of_type:
                    new_counts[i] = min(3, counts[i] + 1)
            else:
                fresh_of_type = False
            new_counts = tuple(new_counts)
            mark_slots = [s for s in self.far_slots if ctx.first and not far[self.far_index[s]][0]]
            for picks in itertools.product(*choices):
                for marks in itertools.product((False, True), repeat=len(mark_slots)):
                    yield self._make_move(t, q, ctx, rho, moved, base, new_counts, fresh_of_type,
                                          picks, dict(zip(mark_slots, marks)))

    def _base_vector(self, t, ctx, carried, keep):
        c = {self.x_name[self.hat], self.a_name[t]}
        for tt in self.hist_types:
            old = ctx.history.get(tt, ())
            if ctx.first:
                continue
            lab = self.type_image[ctx.last_type]
            for g in old:
                c.add(self.g_name[(tt, self.mul(g, lab, ctx.real))])
            if ctx.last_type == tt:
                c.add(self.g_name[(tt, ctx.real)])
        for tt in self.count_types:
            if tt in ctx.seen or tt == t:
                c.add(self.s_name[tt])
        for s, imgs in carried.items():
            for m in imgs:
                c.add(self.p_name[(s, m)])
        c |= keep
        return frozenset(c)

    def _make_move(self, t, q, ctx, rho, moved, base, counts, fresh_of_type, picks, marks):
        started, prev_type, prev_first, _, pending, far = q
        c = set(base)
        new_pending = set()
        for s, yes in marks.items():
            if yes:
                c.add(self.e_name[s])
        far = [list(f) for f in far]
        for s, f in zip(self.far_slots, far):
            if marks.get(s):
                f[0] = True
            beta = self.slot_options[s].beta
            if t == beta:
                if self.e_name[s] in c:
                    f[3] = False
                else:
                    f[1] = False
            f[1] = f[1] or f[2]
            f[3] = f[3] or f[4]
            f[2] = f[4] = False
        for o in picks:
            if o.case == "next_position_same":
                new_pending.add((o.beta, True))
            elif o.case == "next_position_other":
                new_pending.add((o.beta, False))
            elif o.case == "next_occurrence":
                c.add(self.n_name[o.slot])
            elif o.case == "later_same":
                c.add(self.l_name[o.slot])
            elif o.case == "later_other":
                f = far[self.far_index[o.slot]]
                if self.e_name[o.slot] in c:
                    f[2] = True
                else:
                    f[4] = True
        c = frozenset(c)
        target = (True, t, fresh_of_type, counts, frozenset(new_pending), tuple(tuple(f) for f in far))
        return Move(rho, c, moved - c, target, t)


def case_report(phi, h: Morphism, alphabet=None) -> set:
    """Labels of every construction case the formula needs, with the
    forall-forall shapes named before orientation (so mirrored cases show)."""
    from .logic import ORDER_TYPES, EQUIV_TYPES, _eval_types, _factor_images, consistent
    snf = phi if isinstance(phi, SNF) else scott_normal_form(phi)
    types = unary_types(tuple(alphabet or h.alphabet), frozenset(snf.predicates))
    table = {**AA_CASES, **AA_MIRRORED}
    out = set()
    for alpha in types:
        for beta in types:
            for order in ORDER_TYPES:
                for equiv in EQUIV_TYPES:
                    if not consistent(alpha, beta, order, equiv):
                        continue
                    imgs = _factor_images(h, order, equiv)
                    ok = all(_eval_types(snf.chi, alpha, beta, order, equiv, m, h) for m in (imgs or [None]))
                    if not ok and (order, equiv) in table:
                        out.add(table[(order, equiv)])
    for c in decompose(snf, h, alphabet):
        if c.kind == "AE":
            out.add(ae_case(c))
    return out


def _collect_vocabulary(conjuncts):
    vocab = set()
    for c in conjuncts:
        vocab |= set(c.vocabulary)
    return tuple(sorted(vocab))


def compile_formula(conjuncts, h: Morphism, predicates=None, empty_value=True, alphabet=None) -> SuffixStoringAutomaton:
    """Suffix-storing automaton for the conjunction of type-level conjuncts.

    ``conjuncts`` may also be an :class:`SNF` or a formula; they are brought
    into conjunct form first.
    """
    if isinstance(conjuncts, SNF):
        snf = conjuncts
        return SuffixStoringAutomaton(decompose(snf, h, alphabet), h, snf.predicates, snf.empty_value, alphabet)
    if not isinstance(conjuncts, (list, tuple)):
        snf = scott_normal_form(conjuncts)
        return SuffixStoringAutomaton(decompose(snf, h, alphabet), h, snf.predicates, snf.empty_value, alphabet)
    conjuncts = list(conjuncts)
    if predicates is None:
        predicates = _collect_vocabulary(conjuncts)
    return SuffixStoringAutomaton(conjuncts, h, predicates, empty_value, alphabet)


# --- runtime invariants -----------------------------------------------------


def _suffix_images(A: SuffixStoringAutomaton, letters) -> set:
    out = {A.hat}
    m = A.one
    for a in reversed(letters):
        m = A.h.monoid.mul(A.h.letter_image(a), m)
        out.add(m)
    return out


def check_step_invariants(A: SuffixStoringAutomaton, w: DataWord, types, vecs) -> None:
    """Compare the vectors after reading ``types`` (a prefix of ``w``) with
    what they should contain; raises InvariantViolation."""
    n = len(types)
    letters = w.letters[:n]
    M = A.h.monoid

    def factor(i, j):
        return A.h.image(letters[i + 1:j])

    names = {}
    for i in range(n):
        names.setdefault(w.data[i], []).append(i)
    nonempty = set()
    suffixes = _suffix_images(A, letters)
    for d, vec in vecs.items():
        if d not in names:
            if vec:
                raise InvariantViolation(f"unseen value {d} in {sorted(vec)}")
            continue
        pos = names[d]
        x0 = pos[-1]
        want_x = A.hat if x0 == n - 1 else factor(x0, n)
        xs = {A.decode[y][1] for y in vec if A.decode[y][0] == "X"}
        if xs != {want_x}:
            raise InvariantViolation(f"(X) value {d}: {xs} != {want_x}")
        nonempty |= xs
        labels = {A.decode[y][1] for y in vec if A.decode[y][0] == "A"}
        if labels != {types[x0]}:
            raise InvariantViolation(f"(A) value {d}: {labels} != {types[x0]}")
        for t in A.hist_types:
            got = {A.decode[y][2] for y in vec if A.decode[y][0] == "G" and A.decode[y][1] == t}
            want = {factor(y, x0) for y in pos[:-1] if types[y] == t}
            if got != want:
                raise InvariantViolation(f"(H) value {d}, type {t}: {got} != {want}")
        for t in A.count_types:
            if (A.s_name[t] in vec) != any(types[y] == t for y in pos):
                raise InvariantViolation(f"seen set of {t} wrong for value {d}")
        for y in vec:
            kind = A.decode[y]
            if kind[0] == "P":
                alpha = _group_alpha(A, kind[1])
                if not any(types[p] == alpha and factor(p, x0) == kind[2] for p in pos[:-1]):
                    raise InvariantViolation(f"(F) value {d}: no {alpha} position with factor {M.name(kind[2])}")
            elif kind[0] in ("L", "N"):
                if types[x0] != _group_alpha(A, kind[1]):
                    raise InvariantViolation(f"(F) value {d}: obligation without {_group_alpha(A, kind[1])}")
    if not nonempty <= suffixes:
        raise InvariantViolation(f"suffix-storing: {nonempty - suffixes} not suffix images")


def _group_alpha(A, slot):
    for alpha, groups in A.groups.items():
        for g in groups:
            if any(o.slot == slot for o in g.future):
                return alpha
    raise KeyError(slot)


def accepts_checked(A: SuffixStoringAutomaton, w: DataWord) -> bool:
    """Like ``accepts`` but asserts the runtime invariants along every explored run."""
    n = len(w)
    seen_keys = set()

    def run(i, q, vecs, types):
        if i == n:
            return A.is_final(q) and A.acceptance.final_ok(vecs.values())
        letter, d = w[i]
        z = vecs.get(d, EMPTY)
        for mv in A.moves(q, letter, z):
            new = {e: mv.rho.apply(v) for e, v in vecs.items()}
            new[d] = (new.get(d, EMPTY) | mv.u) - mv.v
            tt = types + (mv.info,)
            key = (i, mv.target, tuple(sorted((e, v) for e, v in new.items())), tt)
            if key in seen_keys:
                continue
            seen_keys.add(key)
            check_step_invariants(A, w, tt, new)
            if run(i + 1, mv.target, new, tt):
                return True
        return False

    return any(run(0, q, {}, ()) for q in A.initial)


# --- reordering for linear bands --------------------------------------------


class MapUpdate:
    """Global update given by a name map; names mapped to None are emptied and
    unlisted names stay where they are."""

    __slots__ = ("mapping", "_h")

    def __init__(self, mapping: dict):
        self.mapping = mapping
        self._h = hash(frozenset(mapping.items()))

    def apply(self, members):
        m = self.mapping
        out = set()
        for y in members:
            t = m.get(y, y)
            if t is not None:
                out.add(t)
        return frozenset(out)

    def __eq__(self, other):
        return isinstance(other, MapUpdate) and self.mapping == other.mapping

    def __hash__(self):
        return self._h


class OrderedAutomaton:
    """Lazy ordered quasi-normal automaton equivalent to a suffix-storing one
    over a linear band.

    The contents of ``X[m]`` live in ``Y[k_m]`` where ``k_m`` is the height of
    m; the state remembers the map height -> element.  On the guessed last
    step every ``Y`` set is copied into ``Z[m]`` (named by elements again).
    """

    def __init__(self, A: SuffixStoringAutomaton, check_claims: bool = True):
        if not is_linear_band(A.h.monoid):
            w = non_linear_witness(A.h.monoid)
            raise CompileError(f"monoid is not a linear band: {w.describe()}")
        self.base = A
        M = A.monoid
        self.monoid = M
        self.ext = build_L_extension(M)
        if check_claims:
            problems = check_height_claims(M, self.ext)
            if problems:
                raise InvariantViolation("; ".join(problems))
        self.k = self.ext.heights
        self.top = max(self.k)
        self.y_name = {i: f"Y[{i}]" for i in range(1, self.top + 1)}
        self.z_name = {m: f"Z[{M.name(m)}]" for m in range(len(M))}
        self.y_sets = tuple(self.y_name[i] for i in range(self.top, 0, -1))
        self.z_sets = tuple(self.z_name[m] for m in range(len(M)))
        self.sets = self.y_sets + self.z_sets + A.stable
        self.order = self.y_sets + self.z_sets
        self.alphabet = A.alphabet
        self.initial = tuple((q, (), False) for q in A.initial)
        self._y_index = {n: i for i, n in self.y_name.items()}
        self._z_index = {n: m for m, n in self.z_name.items()}
        acc = A.acceptance
        if acc.mode != 1:
            raise CompileError("expected acceptance mode 1")
        back = {self.z_name[m]: A.x_name[m] for m in range(len(M))}
        self.acceptance = Acceptance(1, predicate=lambda vec: acc.vector_ok(frozenset(back.get(y, y) for y in vec)))
        self._cache: dict = {}

    def is_final(self, q) -> bool:
        qa, f, done = q
        return self.base.is_final(qa) and (done or not f)

    def moves(self, q, letter, z):
        key = (q, letter, z)
        hit = self._cache.get(key)
        if hit is None:
            hit = tuple(self._moves(q, letter, z))
            self._cache[key] = hit
        return hit

    def _moves(self, q, letter, z):
        qa, f, done = q
        if done:
            return
        A = self.base
        M = self.monoid
        fmap = dict(f)
        zb = set()
        for y in z:
            if y in self._y_index:
                i = self._y_index[y]
                if i not in fmap:
                    return
                zb.add(A.x_name[fmap[i]])
            elif y in self._z_index:
                return
            else:
                zb.add(y)
        zb = frozenset(zb)
        g = A.h.letter_image(letter)
        new_f, step_map, final_map = self._shift(fmap, g)
        step_rho = MapUpdate(step_map)
        final_rho = MapUpdate(final_map)
        for mv in A.moves(qa, letter, zb):
            to_y = {A.x_name[m]: self.y_name[self.k[m]] for m in range(len(M))}
            u = frozenset(to_y.get(y, y) for y in mv.u)
            v = frozenset(to_y.get(y, y) for y in mv.v)
            f2 = dict(new_f)
            f2[self.k[A.hat]] = A.hat
            yield Move(step_rho, u, v, (mv.target, tuple(sorted(f2.items())), False), mv.info)
            if A.is_final(mv.target):
                to_z = {A.x_name[m]: self.z_name[m] for m in range(len(M))}
                u = frozenset(to_z.get(y, y) for y in mv.u)
                v = frozenset(to_z.get(y, y) for y in mv.v)
                yield Move(final_rho, u, v, (mv.target, (), True), mv.info)

    @lru_cache(maxsize=None)
    def _shift_cached(self, f, g):
        return self._shift_impl(dict(f), g)

    def _shift(self, fmap, g):
        return self._shift_cached(tuple(sorted(fmap.items())), g)

    def _shift_impl(self, fmap, g):
        M = self.monoid
        k = self.k
        new_f = {}
        step_map = {}
        final_map = {}
        for i, m in fmap.items():
            m2 = M.mul(m, g)
            i2 = k[m2]
            if new_f.get(i2, m2) != m2:
                raise InvariantViolation(
                    f"height collision: {M.name(new_f[i2])} and {M.name(m2)} at height {i2}")
            new_f[i2] = m2
            step_map[self.y_name[i]] = self.y_name[i2]
            final_map[self.y_name[i]] = self.z_name[m2]
        elems = list(new_f.values())
        for a, b in itertools.combinations(elems, 2):
            if not (self.ext.below[a, b] or self.ext.below[b, a]):
                raise InvariantViolation(f"stored elements {M.name(a)}, {M.name(b)} not a chain")
        moved = [i for i, m in fmap.items() if k[M.mul(m, g)] != i]
        low = min(moved) if moved else self.top + 1
        for i in fmap:
            if i >= low and i not in moved:
                raise InvariantViolation(f"height {i} stays while a lower height moves")
        for i in moved:
            if k[M.mul(fmap[i], g)] >= low:
                raise InvariantViolation(f"height {i} moves into the moved block")
        for i in range(1, self.top + 1):
            if i not in fmap:
                step_map[self.y_name[i]] = self.y_name[i] if i < low else None
                final_map[self.y_name[i]] = None
        return new_f, step_map, final_map

    def materialize(self, max_vectors: int = 20000) -> SetAutomaton:
        return materialize(self, max_vectors, name_sets=self.sets)


def to_ordered(A: SuffixStoringAutomaton, check_claims: bool = True) -> OrderedAutomaton:
    return OrderedAutomaton(A, check_claims)


# --- ordered quasi-normal -> ordered normal ----------------------------------


@dataclass
class OrderedNormal:
    automaton: SetAutomaton
    order: list


def qnsa_to_ordered_normal(A, order=None, max_vectors: int = 20000) -> OrderedNormal:
    """Normalise, keeping only vectors with at most one non-stable set.

    ``A`` is an explicit ordered quasi-normal automaton (or an
    :class:`OrderedAutomaton`, materialised first); ``order`` lists its
    non-stable sets.  The order on the vector-named sets follows the position
    of their non-stable member; purely stable vectors come after those.
    """
    if isinstance(A, OrderedAutomaton):
        order = list(A.order) if order is None else order
        A = A.materialize(max_vectors)
    if not isinstance(A, SetAutomaton):
        raise CompileError("expected an explicit set automaton")
    from .set_automaton import find_order, is_ordered, is_quasi_normal
    if not is_quasi_normal(A):
        raise CompileError("automaton is not quasi-normal")
    stable = stable_sets(A)
    if order is None:
        order = find_order(A)
        if order is None:
            raise CompileError("automaton is not ordered")
    order = [y for y in order if y not in stable]
    if not is_ordered(A, order):
        raise CompileError("automaton is not ordered under the given order")
    pos = {y: i for i, y in enumerate(order)}
    view = NormalizedView(A, keep=lambda vec: len(vec - stable) <= 1)
    N = materialize(view, max_vectors)

    def key(vec):
        core = vec - stable
        if core:
            return (0, pos[next(iter(core))], sorted(map(str, vec)))
        return (1, 0, sorted(map(str, vec)))

    bnd = bounded_sets(N)
    free = sorted((s for s in N.sets if s not in bnd), key=key)
    derived = free + sorted((s for s in N.sets if s in bnd), key=key)
    return OrderedNormal(N, derived)


# --- automaton -> formula ----------------------------------------------------


def _update_monoid_morphism(A: SetAutomaton, rel_names: dict):
    from .boolalg import compose
    ident = Relation.identity(A.sets)
    elems = [ident]
    index = {ident: 0}
    gens = list(dict.fromkeys(t.rho for t in A.transitions))
    i = 0
    while i < len(elems):
        for g in gens:
            p = compose(elems[i], g)
            if p not in index:
                index[p] = len(elems)
                elems.append(p)
        i += 1
    table = [[index[compose(a, b)] for b in elems] for a in elems]
    names = [f"m{k}" for k in range(len(elems))]
    names[0] = "id"
    S = FiniteSemigroup(names, table, identity="id")
    return S, elems, index


def sa_to_formula(A: SetAutomaton):
    """Formula (and morphism into the update monoid) with the same language.

    One fresh predicate ``T#k`` per transition guesses the run.  Positions map
    to the update of their transition, letters to the identity, so the guard
    between class successors sees the product of the updates in between.
    """
    from .logic import (TRUE, Binary, Exists, Exists2, Forall, Imp, Lang, Not, Unary,
                        conj, disj, neg)
    if A.acceptance.mode != 2:
        raise CompileError("expected acceptance mode 2")
    ts = list(A.transitions)
    pred = {t: f"T#{k + 1}" for k, t in enumerate(ts)}
    S, elems, index = _update_monoid_morphism(A, pred)

    def X(t, v):
        return Unary(pred[t], v)

    def after(t):
        return (t.rho.apply(t.z) | t.u) - t.v

    parts = []
    # each position carries exactly one transition, reading its letter
    parts.append(Forall("x", disj(*[conj(X(t, "x"), Unary(t.letter, "x")) for t in ts])))
    for t1, t2 in itertools.combinations(ts, 2):
        parts.append(Forall("x", neg(conj(X(t1, "x"), X(t2, "x")))))
    first = Not(Exists("y", Binary("lt", "y", "x")))
    last = Not(Exists("y", Binary("lt", "x", "y")))
    parts.append(Forall("x", Imp(first, disj(*[X(t, "x") for t in ts if t.source in A.initial]))))
    parts.append(Forall("x", Imp(last, disj(*[X(t, "x") for t in ts if t.target in A.final]))))
    compat = [conj(X(t1, "x"), X(t2, "y")) for t1 in ts for t2 in ts if t1.target == t2.source]
    parts.append(Forall("x", Forall("y", Imp(Binary("succ", "x", "y"), disj(*compat)))))
    class_first = Not(Exists("y", conj(Binary("lt", "y", "x"), Binary("sim", "x", "y"))))
    class_last = Not(Exists("y", conj(Binary("lt", "x", "y"), Binary("sim", "x", "y"))))
    parts.append(Forall("x", Imp(class_first, disj(*[X(t, "x") for t in ts if not t.z]))))
    local = A.acceptance.local_final
    parts.append(Forall("x", Imp(class_last, disj(*[X(t, "x") for t in ts if t.target in local]))))
    langs = {}
    guarded = []
    for t1 in ts:
        for t2 in ts:
            ok = frozenset(k for k, m in enumerate(elems) if m.apply(after(t1)) == t2.z)
            name = langs.setdefault(ok, f"R#{len(langs) + 1}")
            guarded.append(Imp(conj(X(t1, "x"), X(t2, "y")), Lang(name, "x", "y")))
    parts.append(Forall("x", Forall("y", Imp(Binary("csucc", "x", "y"), conj(*guarded)))))
    body = conj(*parts)
    nonempty = conj(Exists("x", TRUE), body)
    if A.initial & A.final:
        body = disj(Not(Exists("x", TRUE)), nonempty)
    else:
        body = nonempty
    for t in reversed(ts):
        body = Exists2(pred[t], body)
    letters = {a: "id" for a in A.alphabet}
    h = Morphism(S, letters, {name: [S.name(k) for k in ok] for ok, name in langs.items()},
                 {pred[t]: S.name(index[t.rho]) for t in ts})
    return body, h


# --- satisfiability -----------------------------------------------------------


@dataclass(frozen=True)
class Sat:
    witness: DataWord


@dataclass
class Pipeline:
    snf: SNF
    compiled: SuffixStoringAutomaton
    ordered: OrderedAutomaton
    normal: OrderedNormal
    oma: object


def default_budget(n: int) -> int:
    """Steps allowed for words of length n: each letter costs a bounded
    number of operations plus two per value moved by a drain loop."""
    return 8 * (n + 1) ** 2 + 16


def build_pipeline(phi, h: Morphism, alphabet=None) -> Pipeline:
    from .multicounter import from_ordered_normal_sa
    from .set_automaton import convert_acceptance
    if not is_linear_band(h.monoid):
        raise CompileError(f"monoid is not a linear band: {non_linear_witness(h.monoid).describe()}")
    snf = scott_normal_form(phi)
    A = SuffixStoringAutomaton(decompose(snf, h, alphabet), h, snf.predicates, snf.empty_value, alphabet)
    B = to_ordered(A)
    N = qnsa_to_ordered_normal(B)
    aut = N.automaton
    if aut.acceptance.mode != 1:
        aut = convert_acceptance(aut, 1)
    O = from_ordered_normal_sa(aut, N.order)
    return Pipeline(snf, A, B, N, O)


def recover_witness(phi, h: Morphism, projection) -> Optional[DataWord]:
    for w in data_assignments(tuple(projection)):
        if model_check(phi, w, h):
            return w
    return None


def decide_sat(phi, h: Morphism, max_len: int, step_budget=None, nonempty: bool = False, alphabet=None):
    """Sat(witness) or UnknownUpTo(max_len).  With ``nonempty`` the empty
    word does not count as a model."""
    from .logic import TRUE, Exists, conj
    from .multicounter import NonEmpty, emptiness_bounded
    if nonempty:
        phi = conj(phi, Exists("x", TRUE))
    pipe = build_pipeline(phi, h, alphabet)
    res = emptiness_bounded(pipe.oma, max_len, step_budget or default_budget)
    if isinstance(res, NonEmpty):
        w = recover_witness(phi, h, res.witness)
        if w is None:
            raise InvariantViolation(f"projection {res.witness} has no model")
        return Sat(w)
    return res
