"""Two-variable logic over data words with guarded regular predicates.

Concrete syntax is parenthesised prefix notation::

    (forall x (imp (and (lt x y) (sim x y)) (lang L x y)))

Keywords: ``exists2 X``, ``forall v``, ``exists v``, ``and``, ``or``, ``not``,
``imp``, ``iff``, ``true``, ``false``; binary atoms ``lt``, ``succ`` (v+1=w),
``eq``, ``sim``, ``csucc`` (w is the class successor of v) and
``(lang NAME v w)``.  Any other head with a single variable argument is a
monadic atom (a letter or a predicate).  Lines starting with ``@morphism``
bind languages to a morphism file.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .core import DataWord
from .semigroup import Morphism, load_morphism

VARS = ("x", "y")


class FormulaError(ValueError):
    pass


# --- syntax tree ------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: bool


TRUE, FALSE = Const(True), Const(False)


@dataclass(frozen=True)
class Unary:
    name: str
    var: str


@dataclass(frozen=True)
class Binary:
    """``op`` is one of lt, succ, eq, sim, csucc."""
    op: str
    left: str
    right: str


@dataclass(frozen=True)
class Lang:
    name: str
    left: str
    right: str


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple


@dataclass(frozen=True)
class Or:
    args: tuple


@dataclass(frozen=True)
class Imp:
    left: object
    right: object


@dataclass(frozen=True)
class Iff:
    left: object
    right: object


@dataclass(frozen=True)
class Forall:
    var: str
    body: object


@dataclass(frozen=True)
class Exists:
    var: str
    body: object


@dataclass(frozen=True)
class Exists2:
    pred: str
    body: object


BINARY_OPS = ("lt", "succ", "eq", "sim", "csucc")


def conj(*args):
    flat = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif a == TRUE:
            continue
        else:
            flat.append(a)
    if any(a == FALSE for a in flat):
        return FALSE
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args):
    flat = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif a == FALSE:
            continue
        else:
            flat.append(a)
    if any(a == TRUE for a in flat):
        return TRUE
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(a):
    if isinstance(a, Const):
        return Const(not a.value)
    if isinstance(a, Not):
        return a.arg
    return Not(a)


# --- printing -----------------------------------------------------------------


def to_text(f) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Unary):
        return f"({f.name} {f.var})"
    if isinstance(f, Binary):
        return f"({f.op} {f.left} {f.right})"
    if isinstance(f, Lang):
        return f"(lang {f.name} {f.left} {f.right})"
    if isinstance(f, Not):
        return f"(not {to_text(f.arg)})"
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        return f"({head} " + " ".join(to_text(a) for a in f.args) + ")"
    if isinstance(f, Imp):
        return f"(imp {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, Iff):
        return f"(iff {to_text(f.left)} {to_text(f.right)})"
    if isinstance(f, Forall):
        return f"(forall {f.var} {to_text(f.body)})"
    if isinstance(f, Exists):
        return f"(exists {f.var} {to_text(f.body)})"
    if isinstance(f, Exists2):
        return f"(exists2 {f.pred} {to_text(f.body)})"
    raise TypeError(f)


# --- parsing ------------------------------------------------------------------


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _tokens(text):
    lines = []
    for line in text.splitlines():
        line = line.split(";", 1)[0]
        if line.lstrip().startswith("#") or line.lstrip().startswith("@"):
            continue
        lines.append(line)
    return _TOKEN.findall("\n".join(lines))


def _read_sexpr(tokens, pos):
    if pos >= len(tokens):
        raise FormulaError("unexpected end of formula")
    tok = tokens[pos]
    if tok == ")":
        raise FormulaError("unexpected ')'")
    if tok != "(":
        return tok, pos + 1
    items = []
    pos += 1
    while True:
        if pos >= len(tokens):
            raise FormulaError("missing ')'")
        if tokens[pos] == ")":
            return items, pos + 1
        item, pos = _read_sexpr(tokens, pos)
        items.append(item)


def _var(tok):
    if tok not in VARS:
        raise FormulaError(f"{tok!r} is not a first-order variable (only x and y are allowed)")
    return tok


def _build(sx):
    if isinstance(sx, str):
        if sx == "true":
            return TRUE
        if sx == "false":
            return FALSE
        raise FormulaError(f"unexpected symbol {sx!r}")
    if not sx:
        raise FormulaError("empty expression")
    head, args = sx[0], sx[1:]
    if not isinstance(head, str):
        raise FormulaError("expression head must be a symbol")
    if head in ("forall", "exists"):
        if len(args) != 2:
            raise FormulaError(f"{head} takes a variable and a body")
        cls = Forall if head == "forall" else Exists
        return cls(_var(args[0]), _build(args[1]))
    if head == "exists2":
        if len(args) != 2 or not isinstance(args[0], str):
            raise FormulaError("exists2 takes a predicate name and a body")
        return Exists2(args[0], _build(args[1]))
    if head in ("and", "or"):
        parts = tuple(_build(a) for a in args)
        if not parts:
            return TRUE if head == "and" else FALSE
        return (And if head == "and" else Or)(parts) if len(parts) > 1 else parts[0]
    if head == "not":
        if len(args) != 1:
            raise FormulaError("not takes one argument")
        return Not(_build(args[0]))
    if head in ("imp", "iff"):
        if len(args) != 2:
            raise FormulaError(f"{head} takes two arguments")
        return (Imp if head == "imp" else Iff)(_build(args[0]), _build(args[1]))
    if head in BINARY_OPS:
        if len(args) != 2:
            raise FormulaError(f"{head} takes two variables")
        return Binary(head, _var(args[0]), _var(args[1]))
    if head == "lang":
        if len(args) != 3:
            raise FormulaError("lang takes a name and two variables")
        return Lang(args[0], _var(args[1]), _var(args[2]))
    if len(args) == 1 and isinstance(args[0], str):
        return Unary(head, _var(args[0]))
    raise FormulaError(f"cannot read expression headed by {head!r}")


@dataclass
class FormulaFile:
    formula: object
    morphism: Optional[Morphism] = None
    morphism_path: Optional[str] = None


def parse_formula(text: str, morphism: Optional[Morphism] = None):
    tokens = _tokens(text)
    if not tokens:
        raise FormulaError("empty formula")
    sx, pos = _read_sexpr(tokens, 0)
    if pos != len(tokens):
        raise FormulaError("trailing input after formula")
    f = _build(sx)
    if morphism is not None:
        for name in language_names(f):
            morphism.language(name)
    return f


def load_formula(path, morphism: Optional[Morphism] = None) -> FormulaFile:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    mpath = None
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("@morphism"):
            mpath = s.split(None, 1)[1].strip()
    if morphism is None and mpath is not None:
        morphism = load_morphism(path.parent / mpath)
    return FormulaFile(parse_formula(text, morphism), morphism, mpath)


# --- analysis -----------------------------------------------------------------


def children(f):
    if isinstance(f, Not):
        return (f.arg,)
    if isinstance(f, (And, Or)):
        return f.args
    if isinstance(f, (Imp, Iff)):
        return (f.left, f.right)
    if isinstance(f, (Forall, Exists, Exists2)):
        return (f.body,)
    return ()


def walk(f):
    yield f
    for c in children(f):
        yield from walk(c)


def language_names(f) -> set:
    return {g.name for g in walk(f) if isinstance(g, Lang)}


def monadic_names(f) -> set:
    return {g.name for g in walk(f) if isinstance(g, Unary)}


def second_order_names(f) -> set:
    return {g.pred for g in walk(f) if isinstance(g, Exists2)}


def free_vars(f) -> set:
    if isinstance(f, Unary):
        return {f.var}
    if isinstance(f, (Binary, Lang)):
        return {f.left, f.right}
    if isinstance(f, (Forall, Exists)):
        return free_vars(f.body) - {f.var}
    out = set()
    for c in children(f):
        out |= free_vars(c)
    return out


def is_quantifier_free(f) -> bool:
    return not any(isinstance(g, (Forall, Exists, Exists2)) for g in walk(f))


# --- semantics ------------------------------------------------------------------


class _Structure:
    def __init__(self, w: DataWord, h: Optional[Morphism], interp: dict):
        self.w = w
        self.n = len(w)
        self.h = h
        self.interp = interp
        nxt = {}
        last = {}
        for i, d in enumerate(w.data):
            if d in last:
                nxt[last[d]] = i
            last[d] = i
        self.class_next = nxt
        self._factor = {}

    def factor_image(self, i, j):
        key = (i, j)
        if key not in self._factor:
            h = self.h
            M = h.monoid
            m = M.identity
            preds = h.predicate_images
            for p in range(i + 1, j):
                held = frozenset(k for k in preds if p in self.interp.get(k, ())) if preds else frozenset()
                m = M.mul(m, h.position_image(self.w.letters[p], held))
            self._factor[key] = m
        return self._factor[key]


def _eval(f, S: _Structure, env: dict) -> bool:
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Unary):
        i = env[f.var]
        if f.name in S.interp:
            return i in S.interp[f.name]
        return S.w.letters[i] == f.name
    if isinstance(f, Binary):
        i, j = env[f.left], env[f.right]
        op = f.op
        if op == "lt":
            return i < j
        if op == "succ":
            return i + 1 == j
        if op == "eq":
            return i == j
        if op == "sim":
            return S.w.data[i] == S.w.data[j]
        return S.class_next.get(i) == j
    if isinstance(f, Lang):
        i, j = env[f.left], env[f.right]
        if not (i < j and S.w.data[i] == S.w.data[j]):
            return False
        if S.h is None:
            raise FormulaError("guarded predicates need a morphism")
        return S.factor_image(i, j) in S.h.language(f.name)
    if isinstance(f, Not):
        return not _eval(f.arg, S, env)
    if isinstance(f, And):
        return all(_eval(a, S, env) for a in f.args)
    if isinstance(f, Or):
        return any(_eval(a, S, env) for a in f.args)
    if isinstance(f, Imp):
        return (not _eval(f.left, S, env)) or _eval(f.right, S, env)
    if isinstance(f, Iff):
        return _eval(f.left, S, env) == _eval(f.right, S, env)
    if isinstance(f, (Forall, Exists)):
        test = all if isinstance(f, Forall) else any
        saved = env.get(f.var)
        try:
            def body(i):
                env[f.var] = i
                return _eval(f.body, S, env)
            return test(body(i) for i in range(S.n))
        finally:
            if saved is None:
                env.pop(f.var, None)
            else:
                env[f.var] = saved
    if isinstance(f, Exists2):
        saved = S.interp.get(f.pred)
        try:
            for r in range(S.n + 1):
                for chosen in itertools.combinations(range(S.n), r):
                    S.interp[f.pred] = frozenset(chosen)
                    S._factor = {}
                    if _eval(f.body, S, env):
                        return True
            return False
        finally:
            S._factor = {}
            if saved is None:
                S.interp.pop(f.pred, None)
            else:
                S.interp[f.pred] = saved
    raise TypeError(f)


def model_check(f, w: DataWord, h: Optional[Morphism] = None, interp: Optional[dict] = None, env=None) -> bool:
    """Exact evaluation.  ``interp`` maps free monadic predicate names to sets
    of (0-based) positions; ``env`` optionally binds free variables."""
    env = dict(env or {})
    missing = free_vars(f) - set(env)
    if missing:
        raise FormulaError(f"formula has free variables {sorted(missing)}")
    S = _Structure(w, h, dict(interp or {}))
    return _eval(f, S, env)


# --- Scott normal form ----------------------------------------------------------


def nnf(f, positive=True):
    """Negation normal form; implications and equivalences are expanded."""
    if isinstance(f, Const):
        return f if positive else Const(not f.value)
    if isinstance(f, (Unary, Binary, Lang)):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return nnf(f.arg, not positive)
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(f, Imp):
        return nnf(Or((Not(f.left), f.right)), positive)
    if isinstance(f, Iff):
        both = Or((And((f.left, f.right)), And((Not(f.left), Not(f.right)))))
        return nnf(both, positive)
    if isinstance(f, (Forall, Exists)):
        body = nnf(f.body, positive)
        if isinstance(f, Forall) == positive:
            return Forall(f.var, body)
        return Exists(f.var, body)
    if isinstance(f, Exists2):
        if not positive:
            raise FormulaError("second-order quantifiers may not occur under negation")
        return Exists2(f.pred, nnf(f.body))
    raise TypeError(f)


def rename_vars(f, mapping: dict):
    if isinstance(f, Unary):
        return Unary(f.name, mapping.get(f.var, f.var))
    if isinstance(f, Binary):
        return Binary(f.op, mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, Lang):
        return Lang(f.name, mapping.get(f.left, f.left), mapping.get(f.right, f.right))
    if isinstance(f, Not):
        return Not(rename_vars(f.arg, mapping))
    if isinstance(f, And):
        return And(tuple(rename_vars(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return Or(tuple(rename_vars(a, mapping) for a in f.args))
    if isinstance(f, Imp):
        return Imp(rename_vars(f.left, mapping), rename_vars(f.right, mapping))
    if isinstance(f, Iff):
        return Iff(rename_vars(f.left, mapping), rename_vars(f.right, mapping))
    if isinstance(f, (Forall, Exists)):
        return type(f)(mapping.get(f.var, f.var), rename_vars(f.body, mapping))
    return f


SWAP = {"x": "y", "y": "x"}


@dataclass
class SNF:
    """``exists2 preds . (forall x forall y chi) and each forall x exists y chis[i]``.

    ``chi`` and ``chis`` are quantifier-free over x, y.  The empty word is
    accepted iff ``empty_value``.
    """

    second_order: tuple
    fresh: tuple
    chi: object
    chis: tuple
    empty_value: bool
    alphabet: tuple = ()

    @property
    def predicates(self) -> tuple:
        return tuple(self.second_order) + tuple(self.fresh)

    def matrix_formula(self):
        """The first-order part, with all predicates free."""
        parts = [Forall("x", Forall("y", self.chi))]
        parts += [Forall("x", Exists("y", c)) for c in self.chis]
        return conj(*parts)

    def to_formula(self):
        body = self.matrix_formula()
        if not self.empty_value:
            body = conj(body, Exists("x", TRUE))
        else:
            body = disj(Not(Exists("x", TRUE)), body)
        for p in reversed(self.predicates):
            body = Exists2(p, body)
        return body

    def holds(self, w: DataWord, h=None, interp=None) -> bool:
        """Does some interpretation of the predicates satisfy the matrix?"""
        if len(w) == 0:
            return self.empty_value
        return model_check(self.to_formula(), w, h, interp)


def _strip_second_order(f):
    preds = []
    while isinstance(f, Exists2):
        preds.append(f.pred)
        f = f.body
    if second_order_names(f):
        raise FormulaError("second-order quantifiers must form a prefix")
    return tuple(preds), f


def scott_normal_form(f) -> SNF:
    preds, body = _strip_second_order(f)
    if free_vars(body):
        raise FormulaError("formula must be closed")
    empty_value = model_check(body, DataWord((), ()))
    body = nnf(body)
    counter = itertools.count(1)
    fresh = []
    aa, ae = [], []

    def name():
        p = f"Y#{next(counter)}"
        fresh.append(p)
        return p

    def replace(g):
        """Replace every quantified subformula by a fresh predicate atom."""
        if isinstance(g, (Forall, Exists)):
            inner = replace(g.body)
            v = g.var
            other = SWAP[v]
            p = name()
            # p(other) -> Q v inner ; normalised so that other=x, v=y
            ren = {other: "x", v: "y"}
            matrix = disj(Not(Unary(p, "x")), rename_vars(inner, ren))
            (aa if isinstance(g, Forall) else ae).append(matrix)
            return Unary(p, other)
        if isinstance(g, And):
            return conj(*[replace(a) for a in g.args])
        if isinstance(g, Or):
            return disj(*[replace(a) for a in g.args])
        return g

    def top(g):
        if isinstance(g, And):
            for a in g.args:
                top(a)
            return
        if isinstance(g, Forall):
            v = g.var
            b = g.body
            if isinstance(b, Forall) and is_quantifier_free(b.body):
                aa.append(rename_vars(b.body, {v: "x", b.var: "y"}) if v != b.var else rename_vars(b.body, {v: "x"}))
                return
            if isinstance(b, Exists) and is_quantifier_free(b.body):
                if b.var == v:
                    ae.append(rename_vars(b.body, {v: "y"}))
                else:
                    ae.append(rename_vars(b.body, {v: "x", b.var: "y"}))
                return
            if is_quantifier_free(b):
                aa.append(rename_vars(b, {v: "x", SWAP[v]: "y"}))
                return
            # forall v (alpha(v) or exists w psi): no fresh predicate needed
            if isinstance(b, Or):
                ex = [a for a in b.args if isinstance(a, Exists)]
                rest = [a for a in b.args if not isinstance(a, Exists)]
                if len(ex) == 1 and ex[0].var != v and is_quantifier_free(ex[0].body) \
                        and all(is_quantifier_free(a) for a in rest):
                    ren = {v: "x", ex[0].var: "y"}
                    ae.append(disj(*[rename_vars(a, ren) for a in rest], rename_vars(ex[0].body, ren)))
                    return
            aa.append(rename_vars(replace(b), {v: "x", SWAP[v]: "y"}))
            return
        if isinstance(g, Exists) and is_quantifier_free(g.body):
            ae.append(rename_vars(g.body, {g.var: "y", SWAP[g.var]: "x"}))
            return
        aa.append(replace(g))

    top(body)
    chi = conj(*aa) if aa else TRUE
    return SNF(preds, tuple(fresh), chi, tuple(ae), empty_value)


# --- types and conjuncts ----------------------------------------------------------


ORDER_TYPES = ("x<<y", "x+1=y", "x=y", "y+1=x", "y<<x")
EQUIV_TYPES = ("x!~y", "x~~y", "xs1=y", "ys1=x", "x=y")

MIRROR_ORDER = {"x<<y": "y<<x", "x+1=y": "y+1=x", "x=y": "x=y", "y+1=x": "x+1=y", "y<<x": "x<<y"}
MIRROR_EQUIV = {"x!~y": "x!~y", "x~~y": "x~~y", "xs1=y": "ys1=x", "ys1=x": "xs1=y", "x=y": "x=y"}


@dataclass(frozen=True, order=True)
class UnaryType:
    letter: str
    preds: frozenset = frozenset()

    def __str__(self):
        if not self.preds:
            return self.letter
        return self.letter + "+" + "+".join(sorted(self.preds))

    def formula(self, var, vocabulary):
        parts = [Unary(self.letter, var)]
        for p in sorted(vocabulary):
            parts.append(Unary(p, var) if p in self.preds else Not(Unary(p, var)))
        return conj(*parts)


def unary_types(alphabet, vocabulary) -> list:
    vocabulary = sorted(vocabulary)
    out = []
    for a in alphabet:
        for r in range(len(vocabulary) + 1):
            for chosen in itertools.combinations(vocabulary, r):
                out.append(UnaryType(a, frozenset(chosen)))
    return out


def consistent(alpha, beta, order, equiv) -> bool:
    if (order == "x=y") != (equiv == "x=y"):
        return False
    if order == "x=y":
        return alpha == beta
    if equiv == "xs1=y" and order not in ("x<<y", "x+1=y"):
        return False
    if equiv == "ys1=x" and order not in ("y<<x", "y+1=x"):
        return False
    if equiv == "x~~y" and order in ("x+1=y", "y+1=x"):
        return False
    return True


def _eval_types(f, alpha, beta, order, equiv, m, h):
    """Truth of a quantifier-free formula under a fixed two-position type;
    ``m`` is the image of the factor between the two positions."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Unary):
        t = alpha if f.var == "x" else beta
        return f.name == t.letter or f.name in t.preds
    if isinstance(f, Binary):
        a, b = f.left, f.right
        if a == b:
            return f.op in ("eq", "sim")
        o = order if a == "x" else MIRROR_ORDER[order]
        e = equiv if a == "x" else MIRROR_EQUIV[equiv]
        if f.op == "lt":
            return o in ("x<<y", "x+1=y")
        if f.op == "succ":
            return o == "x+1=y"
        if f.op == "eq":
            return o == "x=y"
        if f.op == "sim":
            return e != "x!~y"
        return e == "xs1=y"
    if isinstance(f, Lang):
        a, b = f.left, f.right
        if a == b:
            return False
        o = order if a == "x" else MIRROR_ORDER[order]
        e = equiv if a == "x" else MIRROR_EQUIV[equiv]
        if o not in ("x<<y", "x+1=y") or e == "x!~y":
            return False
        return m in h.language(f.name)
    if isinstance(f, Not):
        return not _eval_types(f.arg, alpha, beta, order, equiv, m, h)
    if isinstance(f, And):
        return all(_eval_types(a, alpha, beta, order, equiv, m, h) for a in f.args)
    if isinstance(f, Or):
        return any(_eval_types(a, alpha, beta, order, equiv, m, h) for a in f.args)
    if isinstance(f, Imp):
        return (not _eval_types(f.left, alpha, beta, order, equiv, m, h)) or \
            _eval_types(f.right, alpha, beta, order, equiv, m, h)
    if isinstance(f, Iff):
        return _eval_types(f.left, alpha, beta, order, equiv, m, h) == \
            _eval_types(f.right, alpha, beta, order, equiv, m, h)
    raise FormulaError(f"quantifier inside a matrix: {to_text(f)}")


def _factor_images(h, order, equiv):
    """Images the factor can have; None when the pair is not guardable."""
    if equiv in ("x!~y", "x=y"):
        return None
    if order in ("x+1=y", "y+1=x"):
        return [h.monoid.identity]
    return list(range(len(h.monoid)))


@dataclass(frozen=True)
class Conjunct:
    """One conjunct of shape

    AA: forall x forall y (alpha(x) & beta(y) & order & equiv -> factor in accept)
    AE: forall x exists y (alpha(x) -> beta(y) & order & equiv & factor in accept)

    ``accept`` is a set of monoid element indices; for AA an empty set is the
    conclusion false.  For AE ``accept`` None means no guard (true); AE
    conjuncts sharing ``group`` are alternatives for the same alpha, and an
    AE conjunct with ``beta`` None forbids alpha altogether.
    """

    kind: str
    alpha: UnaryType
    beta: Optional[UnaryType]
    order: Optional[str]
    equiv: Optional[str]
    accept: Optional[frozenset]
    group: int = 0
    vocabulary: frozenset = field(default=frozenset(), compare=False)

    def describe(self, h=None) -> str:
        acc = "-" if self.accept is None else "{" + ",".join(
            sorted(h.monoid.name(m) if h else str(m) for m in self.accept)) + "}"
        if self.kind == "AA":
            return f"AA[{self.alpha} {self.beta} {self.order} {self.equiv} -> {acc}]"
        if self.beta is None:
            return f"AE#{self.group}[{self.alpha} -> none]"
        return f"AE#{self.group}[{self.alpha} -> {self.beta} {self.order} {self.equiv} {acc}]"


def decompose(snf: SNF, h: Morphism, alphabet=None) -> list:
    """Expand the matrices into type-level conjuncts.  AA conjuncts are
    oriented so that x is the earlier position (or x=y)."""
    alphabet = tuple(alphabet or h.alphabet)
    vocab = frozenset(snf.predicates)
    types = unary_types(alphabet, vocab)
    out = []
    seen_aa: dict = {}
    all_images = frozenset(range(len(h.monoid)))
    for alpha in types:
        for beta in types:
            for order in ORDER_TYPES:
                for equiv in EQUIV_TYPES:
                    if not consistent(alpha, beta, order, equiv):
                        continue
                    imgs = _factor_images(h, order, equiv)
                    if imgs is None:
                        ok = _eval_types(snf.chi, alpha, beta, order, equiv, None, h)
                        acc = None if ok else frozenset()
                    else:
                        good = frozenset(m for m in imgs if _eval_types(snf.chi, alpha, beta, order, equiv, m, h))
                        acc = None if good == frozenset(imgs) else (
                            good if order in ("x<<y", "y<<x") else frozenset())
                    if acc is None:
                        continue
                    a, b, o, e = alpha, beta, order, equiv
                    if order in ("y+1=x", "y<<x"):
                        a, b, o, e = beta, alpha, MIRROR_ORDER[order], MIRROR_EQUIV[equiv]
                    key = (a, b, o, e)
                    seen_aa[key] = seen_aa[key] & acc if key in seen_aa else acc
    out = [Conjunct("AA", a, b, o, e, acc, 0, vocab) for (a, b, o, e), acc in seen_aa.items()]
    # a type forbidden at every single position makes every other constraint
    # mentioning it redundant
    banned = {c.alpha for c in out if c.order == "x=y" and not c.accept}
    out = [c for c in out if c.order == "x=y" or not ({c.alpha, c.beta} & banned)]
    group = itertools.count(1)
    for chi in snf.chis:
        for alpha in types:
            if alpha in banned:
                continue
            options = []
            trivial = False
            for beta in types:
                if beta in banned:
                    continue
                for order in ORDER_TYPES:
                    for equiv in EQUIV_TYPES:
                        if not consistent(alpha, beta, order, equiv):
                            continue
                        imgs = _factor_images(h, order, equiv)
                        if imgs is None:
                            if not _eval_types(chi, alpha, beta, order, equiv, None, h):
                                continue
                            if order == "x=y":
                                trivial = True
                            acc = None
                        else:
                            good = frozenset(m for m in imgs if _eval_types(chi, alpha, beta, order, equiv, m, h))
                            if not good:
                                continue
                            acc = all_images if order in ("x+1=y", "y+1=x") else good
                        options.append((beta, order, equiv, acc))
            if trivial:
                continue
            g = next(group)
            if not options:
                out.append(Conjunct("AE", alpha, None, None, None, None, g, vocab))
            for beta, order, equiv, acc in options:
                out.append(Conjunct("AE", alpha, beta, order, equiv, acc, g, vocab))
    return out


_ORDER_FORMULA = {
    "x<<y": lambda: conj(Binary("lt", "x", "y"), Not(Binary("succ", "x", "y"))),
    "x+1=y": lambda: Binary("succ", "x", "y"),
    "x=y": lambda: Binary("eq", "x", "y"),
    "y+1=x": lambda: Binary("succ", "y", "x"),
    "y<<x": lambda: conj(Binary("lt", "y", "x"), Not(Binary("succ", "y", "x"))),
}
_EQUIV_FORMULA = {
    "x!~y": lambda: Not(Binary("sim", "x", "y")),
    "x~~y": lambda: conj(Binary("sim", "x", "y"), Not(Binary("csucc", "x", "y")),
                         Not(Binary("csucc", "y", "x")), Not(Binary("eq", "x", "y"))),
    "xs1=y": lambda: Binary("csucc", "x", "y"),
    "ys1=x": lambda: Binary("csucc", "y", "x"),
    "x=y": lambda: Binary("eq", "x", "y"),
}


def conjuncts_to_formula(conjuncts, h: Morphism, second_order=()):
    """Formula (and extended morphism) equivalent to the conjunction; accepting
    sets become fresh languages ``P#k``."""
    langs = {}

    def lang(acc, a, b):
        key = frozenset(acc)
        if key not in langs:
            langs[key] = f"P#{len(langs) + 1}"
        return Lang(langs[key], a, b)

    def guard(c):
        if c.accept is None:
            return TRUE
        if c.order in ("x<<y", "x+1=y"):
            return lang(c.accept, "x", "y")
        if c.order in ("y<<x", "y+1=x"):
            return lang(c.accept, "y", "x")
        return FALSE

    parts = []
    groups = {}
    for c in conjuncts:
        if c.kind == "AA":
            prem = conj(c.alpha.formula("x", c.vocabulary), c.beta.formula("y", c.vocabulary),
                        _ORDER_FORMULA[c.order](), _EQUIV_FORMULA[c.equiv]())
            concl = guard(c) if c.accept else FALSE
            parts.append(Forall("x", Forall("y", Imp(prem, concl))))
        else:
            groups.setdefault(c.group, []).append(c)
    for g, cs in groups.items():
        alpha = cs[0].alpha
        opts = []
        for c in cs:
            if c.beta is None:
                continue
            opts.append(conj(c.beta.formula("y", c.vocabulary), _ORDER_FORMULA[c.order](),
                             _EQUIV_FORMULA[c.equiv](), guard(c)))
        parts.append(Forall("x", Exists("y", Imp(alpha.formula("x", cs[0].vocabulary), disj(*opts)))))
    body = conj(*parts)
    vocab = set()
    for c in conjuncts:
        vocab |= c.vocabulary
    h2 = h.with_languages({name: acc for acc, name in langs.items()})
    return body, h2


def type_interpretation(word_preds) -> dict:
    """Map predicate name -> positions from a per-position list of predicate sets."""
    out: dict = {}
    for i, ps in enumerate(word_preds):
        for p in ps:
            out.setdefault(p, set()).add(i)
    return {k: frozenset(v) for k, v in out.items()}
