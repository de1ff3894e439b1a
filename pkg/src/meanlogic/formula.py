"""Formulas of continuous logic over a fixed signature.

Grammar (whitespace-insensitive, "*" binds tighter than "+", quantifiers
scope to the end of the enclosing parenthesis):

    formula := ("sup"|"inf") ident "." formula | addexpr
    addexpr := mulexpr {("+"|"-") mulexpr}
    mulexpr := rational "*" mulexpr | rational | atom
    atom    := "d(" term "," term ")" ["^" integer]
             | ident "(" term {"," term} ")"
             | "min(" formula "," formula ")" | "max(" formula "," formula ")"
             | "(" formula ")"
    term    := ident | ident "(" term {"," term} ")"
    rational:= ["-"] digits ["/" digits]

`a - b` desugars to `a + -1*b`.  Parsing is signature-directed: bare idents
in term position are constants when the signature says so and variables
otherwise, so unknown relation/function names and arity mismatches fail at
parse time while free variables are perfectly legal and only matter at
evaluation.

Values of sentences lie in a bounded rational interval; sup/inf over a
finite structure are exact max/min.  Every formula gets a gauge: a value
bound plus a modulus valid for the joint free-variable tuple in the ambient
L^p product metric (exact at p=1, root-side at p>1).
"""

import itertools
import re
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, EvalError, FormatError, NotLinearError, ParseError
from .rationals import format_rational, parse_rational
from .signature import Modulus
from .structure import as_pnorm


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class ConstRef(Term):
    name: str


@dataclass(frozen=True)
class Apply(Term):
    func: str
    args: tuple


class Formula:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Formula):
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class MetricAtom(Formula):
    left: Term
    right: Term
    exponent: int = 1

    def __post_init__(self):
        if self.exponent < 1:
            raise DomainError("metric exponent must be a positive integer")


@dataclass(frozen=True)
class RelAtom(Formula):
    name: str
    args: tuple


@dataclass(frozen=True)
class Scale(Formula):
    factor: Fraction
    body: Formula

    def __post_init__(self):
        object.__setattr__(self, "factor", Fraction(self.factor))


@dataclass(frozen=True)
class Sum(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Meet(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Join(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Sup(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Inf(Formula):
    var: str
    body: Formula


_KEYWORDS = {"sup", "inf", "min", "max", "d"}

_TOKEN_RE = re.compile(
    r"(?P<num>\d+(?:/\d+)?)|(?P<ident>[A-Za-z_]\w*)|(?P<op>[()+\-*,.^])"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise ParseError("unexpected character %r" % text[pos], pos)
        kind = match.lastgroup
        tokens.append((kind, match.group(), pos))
        pos = match.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text, signature):
        self.tokens = _tokenize(text)
        self.signature = signature
        self.i = 0

    def peek(self, offset=0):
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def expect_op(self, op):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ParseError("expected %r, found %r" % (op, text or "end of input"), pos)
        return self.next()

    def fail(self, message):
        raise ParseError(message, self.peek()[2])

    def parse(self):
        formula = self.formula()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError("trailing input %r" % text, pos)
        return formula

    def formula(self):
        kind, text, _ = self.peek()
        if kind == "ident" and text in ("sup", "inf"):
            self.next()
            vkind, vname, vpos = self.next()
            if vkind != "ident" or vname in _KEYWORDS:
                raise ParseError("expected a variable name after %s" % text, vpos)
            self.expect_op(".")
            body = self.formula()
            return (Sup if text == "sup" else Inf)(vname, body)
        return self.addexpr()

    def addexpr(self):
        left = self.mulexpr()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in ("+", "-"):
                self.next()
                right = self.mulexpr()
                if text == "-":
                    right = Scale(Fraction(-1), right)
                left = Sum(left, right)
            else:
                return left

    def _rational_ahead(self):
        kind, text, _ = self.peek()
        if kind == "num":
            return True
        if kind == "op" and text == "-" and self.peek(1)[0] == "num":
            return True
        return False

    def mulexpr(self):
        if self._rational_ahead():
            sign = 1
            kind, text, _ = self.peek()
            if kind == "op" and text == "-":
                self.next()
                sign = -1
            _, digits, _ = self.next()
            value = Fraction(digits) * sign
            kind, text, _ = self.peek()
            if kind == "op" and text == "*":
                self.next()
                return Scale(value, self.mulexpr())
            return Const(value)
        return self.atom()

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "(":
            self.next()
            inner = self.formula()
            self.expect_op(")")
            return inner
        if kind != "ident":
            raise ParseError("expected a formula, found %r" % (text or "end of input"), pos)
        if text in ("sup", "inf"):
            raise ParseError("quantifier %s must start a formula or a (...) group" % text, pos)
        self.next()
        if text == "d":
            self.expect_op("(")
            left = self.term()
            self.expect_op(",")
            right = self.term()
            self.expect_op(")")
            exponent = 1
            kind, nxt, _ = self.peek()
            if kind == "op" and nxt == "^":
                self.next()
                ekind, etext, epos = self.next()
                if ekind != "num" or "/" in etext or int(etext) < 1:
                    raise ParseError("metric exponent must be a positive integer", epos)
                exponent = int(etext)
            return MetricAtom(left, right, exponent)
        if text in ("min", "max"):
            self.expect_op("(")
            left = self.formula()
            self.expect_op(",")
            right = self.formula()
            self.expect_op(")")
            return (Meet if text == "min" else Join)(left, right)
        kind, nxt, _ = self.peek()
        if kind == "op" and nxt == "(":
            try:
                rsym = self.signature.relation(text)
            except DomainError:
                raise ParseError("unknown relation %r" % text, pos) from None
            args = self.term_list()
            if len(args) != rsym.arity:
                raise ParseError(
                    "relation %s takes %d arguments, got %d" % (text, rsym.arity, len(args)),
                    pos,
                )
            return RelAtom(text, args)
        raise ParseError("bare name %r is not a formula" % text, pos)

    def term_list(self):
        self.expect_op("(")
        args = [self.term()]
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text == ",":
                self.next()
                args.append(self.term())
            else:
                break
        self.expect_op(")")
        return tuple(args)

    def term(self):
        kind, text, pos = self.next()
        if kind != "ident":
            raise ParseError("expected a term, found %r" % (text or "end of input"), pos)
        if text in _KEYWORDS:
            raise ParseError("%r cannot be used as a term" % text, pos)
        kind, nxt, _ = self.peek()
        if kind == "op" and nxt == "(":
            try:
                fsym = self.signature.function(text)
            except DomainError:
                raise ParseError("unknown function %r" % text, pos) from None
            args = self.term_list()
            if len(args) != fsym.arity:
                raise ParseError(
                    "function %s takes %d arguments, got %d" % (text, fsym.arity, len(args)),
                    pos,
                )
            return Apply(text, args)
        if self.signature.is_constant(text):
            return ConstRef(text)
        try:
            self.signature.relation(text)
            raise ParseError("relation %r cannot be used as a term" % text, pos)
        except DomainError:
            pass
        try:
            self.signature.function(text)
            raise ParseError("function %r needs arguments" % text, pos)
        except DomainError:
            pass
        return Var(text)


def parse(text, signature):
    """Parse formula text against a signature."""
    return _Parser(text, signature).parse()


def _term_str(term):
    if isinstance(term, Var) or isinstance(term, ConstRef):
        return term.name
    return "%s(%s)" % (term.func, ",".join(_term_str(a) for a in term.args))


def unparse(formula):
    """Deterministic text form; parse(unparse(f), sig) reproduces f."""
    if isinstance(formula, Const):
        return format_rational(formula.value)
    if isinstance(formula, MetricAtom):
        base = "d(%s,%s)" % (_term_str(formula.left), _term_str(formula.right))
        if formula.exponent != 1:
            base += "^%d" % formula.exponent
        return base
    if isinstance(formula, RelAtom):
        return "%s(%s)" % (formula.name, ",".join(_term_str(a) for a in formula.args))
    if isinstance(formula, Scale):
        body = unparse(formula.body)
        if isinstance(formula.body, (Sum, Sup, Inf)):
            body = "(%s)" % body
        return "%s*%s" % (format_rational(formula.factor), body)
    if isinstance(formula, Sum):
        left = unparse(formula.left)
        if isinstance(formula.left, (Sup, Inf)):
            left = "(%s)" % left
        right = unparse(formula.right)
        if isinstance(formula.right, (Sum, Sup, Inf)):
            right = "(%s)" % right
        return "%s + %s" % (left, right)
    if isinstance(formula, Meet):
        return "min(%s, %s)" % (unparse(formula.left), unparse(formula.right))
    if isinstance(formula, Join):
        return "max(%s, %s)" % (unparse(formula.left), unparse(formula.right))
    if isinstance(formula, Sup):
        return "sup %s. %s" % (formula.var, unparse(formula.body))
    if isinstance(formula, Inf):
        return "inf %s. %s" % (formula.var, unparse(formula.body))
    raise DomainError("not a formula: %r" % (formula,))


def _term_vars(term, out):
    if isinstance(term, Var):
        if term.name not in out:
            out.append(term.name)
    elif isinstance(term, Apply):
        for a in term.args:
            _term_vars(a, out)


def free_variables(formula):
    """Free variables in first-occurrence order."""
    out = []

    def walk(f, bound):
        if isinstance(f, (Const,)):
            return
        if isinstance(f, MetricAtom):
            seen = []
            _term_vars(f.left, seen)
            _term_vars(f.right, seen)
            for v in seen:
                if v not in bound and v not in out:
                    out.append(v)
        elif isinstance(f, RelAtom):
            seen = []
            for a in f.args:
                _term_vars(a, seen)
            for v in seen:
                if v not in bound and v not in out:
                    out.append(v)
        elif isinstance(f, Scale):
            walk(f.body, bound)
        elif isinstance(f, (Sum, Meet, Join)):
            walk(f.left, bound)
            walk(f.right, bound)
        elif isinstance(f, (Sup, Inf)):
            walk(f.body, bound | {f.var})
        else:
            raise DomainError("not a formula: %r" % (f,))

    walk(formula, frozenset())
    return tuple(out)


def is_linear(formula, p=1):
    """p-linear: no min/max and every metric atom at exponent exactly p."""
    pn = as_pnorm(p)
    if isinstance(formula, Const):
        return True
    if isinstance(formula, MetricAtom):
        return formula.exponent == pn.p
    if isinstance(formula, RelAtom):
        return True
    if isinstance(formula, Scale):
        return is_linear(formula.body, pn)
    if isinstance(formula, Sum):
        return is_linear(formula.left, pn) and is_linear(formula.right, pn)
    if isinstance(formula, (Meet, Join)):
        return False
    if isinstance(formula, (Sup, Inf)):
        return is_linear(formula.body, pn)
    raise DomainError("not a formula: %r" % (formula,))


def require_linear(formula, p=1):
    """Raise NotLinearError naming the first offending node."""
    pn = as_pnorm(p)

    def walk(f):
        if isinstance(f, (Const, RelAtom)):
            return
        if isinstance(f, MetricAtom):
            if f.exponent != pn.p:
                raise NotLinearError(
                    "metric atom %s has exponent %d, ambient p is %d"
                    % (unparse(f), f.exponent, pn.p)
                )
            return
        if isinstance(f, Scale):
            walk(f.body)
            return
        if isinstance(f, Sum):
            walk(f.left)
            walk(f.right)
            return
        if isinstance(f, (Meet, Join)):
            raise NotLinearError(
                "%s is a lattice connective; the linear fragment has none"
                % ("min" if isinstance(f, Meet) else "max")
            )
        if isinstance(f, (Sup, Inf)):
            walk(f.body)
            return
        raise DomainError("not a formula: %r" % (f,))

    walk(formula)


def evaluate(formula, structure, assignment=None):
    """Exact value of the formula on a structure under an assignment.

    The assignment maps free variable names to universe indices or element
    names; missing variables raise EvalError when reached.
    """
    env = {}
    if assignment:
        for name, element in assignment.items():
            env[name] = structure.resolve(element)
    return _eval(formula, structure, env)


def _eval_term(term, structure, env):
    if isinstance(term, Var):
        try:
            return env[term.name]
        except KeyError:
            raise EvalError("variable %r is not assigned" % term.name) from None
    if isinstance(term, ConstRef):
        try:
            return structure.constants[term.name]
        except KeyError:
            raise EvalError("constant %r is not interpreted here" % term.name) from None
    if isinstance(term, Apply):
        idxs = tuple(_eval_term(a, structure, env) for a in term.args)
        try:
            return structure.fvalue(term.func, idxs)
        except KeyError:
            raise EvalError("function %r is not interpreted here" % term.func) from None
    raise DomainError("not a term: %r" % (term,))


def _eval(formula, structure, env):
    if isinstance(formula, Const):
        return formula.value
    if isinstance(formula, MetricAtom):
        i = _eval_term(formula.left, structure, env)
        j = _eval_term(formula.right, structure, env)
        return structure.dist_power(i, j, formula.exponent)
    if isinstance(formula, RelAtom):
        idxs = tuple(_eval_term(a, structure, env) for a in formula.args)
        try:
            return structure.rvalue(formula.name, idxs)
        except KeyError:
            raise EvalError("relation %r is not interpreted here" % formula.name) from None
    if isinstance(formula, Scale):
        return formula.factor * _eval(formula.body, structure, env)
    if isinstance(formula, Sum):
        return _eval(formula.left, structure, env) + _eval(formula.right, structure, env)
    if isinstance(formula, Meet):
        return min(_eval(formula.left, structure, env), _eval(formula.right, structure, env))
    if isinstance(formula, Join):
        return max(_eval(formula.left, structure, env), _eval(formula.right, structure, env))
    if isinstance(formula, (Sup, Inf)):
        shadowed = env.get(formula.var)
        had = formula.var in env
        best = None
        for e in range(structure.size):
            env[formula.var] = e
            value = _eval(formula.body, structure, env)
            if best is None:
                best = value
            elif isinstance(formula, Sup):
                best = max(best, value)
            else:
                best = min(best, value)
        if had:
            env[formula.var] = shadowed
        else:
            del env[formula.var]
        return best
    raise DomainError("not a formula: %r" % (formula,))


@dataclass(frozen=True)
class Gauge:
    """Value bound plus a modulus for the joint free-variable tuple."""

    bound: Fraction
    modulus: Modulus
    variables: tuple


def _terms_modulus(terms, signature, pn):
    """Modulus bounding the coordinatewise distance sum of term images."""
    counts = Counter()
    composed = []

    def walk(term):
        if isinstance(term, Var):
            counts[term.name] += 1
        elif isinstance(term, Apply):
            fsym = signature.function(term.func)
            composed.append(fsym.modulus.compose(_terms_modulus(term.args, signature, pn)))
        # constants move nowhere

    for term in terms:
        walk(term)
    if counts:
        # p=1: the per-variable distances are disjoint summands of the joint
        # distance, so only the worst repetition factor matters; at p>1 each
        # coordinate root is <= the joint root, so the counts add up.
        slope = max(counts.values()) if pn.p == 1 else sum(counts.values())
        out = Modulus(((Fraction(slope), Fraction(0)),))
    else:
        out = Modulus.zero()
    for extra in composed:
        out = out.plus(extra)
    return out


def _power_cap(exponent):
    """Modulus with |a^k - b^k| <= cap(|a - b|) for a, b in [0, 1]."""
    if exponent == 1:
        return Modulus.identity()
    return Modulus(((Fraction(exponent), Fraction(0)), (Fraction(0), Fraction(1))))


def infer_gauge(formula, signature, p=1):
    """Sound (bound, modulus) for the formula in the ambient L^p metric.

    The modulus is valid for the joint tuple of free variables: the value
    difference between two assignments is at most the modulus applied to the
    tuple distance (the exact sum at p=1, the p-th root at p>1).
    """
    pn = as_pnorm(p)

    def gauge(f):
        if isinstance(f, Const):
            return abs(f.value), Modulus.zero()
        if isinstance(f, MetricAtom):
            terms_mod = _terms_modulus((f.left, f.right), signature, pn)
            return Fraction(1), _power_cap(f.exponent).compose(terms_mod)
        if isinstance(f, RelAtom):
            rsym = signature.relation(f.name)
            terms_mod = _terms_modulus(f.args, signature, pn)
            return rsym.bound, rsym.modulus.compose(terms_mod)
        if isinstance(f, Scale):
            bound, mod = gauge(f.body)
            factor = abs(f.factor)
            return factor * bound, mod.scaled(factor)
        if isinstance(f, Sum):
            b1, m1 = gauge(f.left)
            b2, m2 = gauge(f.right)
            return b1 + b2, m1.plus(m2)
        if isinstance(f, (Meet, Join)):
            b1, m1 = gauge(f.left)
            b2, m2 = gauge(f.right)
            return max(b1, b2), m1.plus(m2)
        if isinstance(f, (Sup, Inf)):
            return gauge(f.body)
        raise DomainError("not a formula: %r" % (f,))

    bound, modulus = gauge(formula)
    return Gauge(bound, modulus, free_variables(formula))


@dataclass(frozen=True)
class FragmentSpec:
    """Shape of an auto-enumerated fragment.

    depth: maximum quantifier prefix length; max_atoms: atom budget per
    affine body; grid: coefficient set (zeros are ignored); free_vars: names
    usable as free variables in every formula; connectives: "linear" for
    affine bodies only, "lattice" to also emit min/max of two affine bodies.
    """

    depth: int
    max_atoms: int
    grid: tuple
    free_vars: tuple = ()
    connectives: str = "linear"

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(Fraction(g) for g in self.grid))
        object.__setattr__(self, "free_vars", tuple(self.free_vars))
        if self.depth < 0:
            raise DomainError("fragment depth must be >= 0")
        if self.max_atoms < 1:
            raise DomainError("fragment atom budget must be >= 1")
        if not [g for g in self.grid if g != 0]:
            raise DomainError("fragment grid needs a nonzero coefficient")
        if self.connectives not in ("linear", "lattice"):
            raise DomainError("connectives must be 'linear' or 'lattice'")

    def to_json(self):
        return {
            "depth": self.depth,
            "max_atoms": self.max_atoms,
            "grid": [format_rational(g) for g in self.grid],
            "free_vars": list(self.free_vars),
            "connectives": self.connectives,
        }

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise FormatError("fragment spec must be an object")
        try:
            depth = int(data["depth"])
            max_atoms = int(data["max_atoms"])
            grid = tuple(parse_rational(g) for g in data["grid"])
        except (KeyError, TypeError) as exc:
            raise FormatError("fragment spec needs depth, max_atoms, grid") from exc
        free_vars = tuple(data.get("free_vars", []))
        connectives = data.get("connectives", "linear")
        return cls(depth, max_atoms, grid, free_vars, connectives)


def _atom_variables(atom):
    seen = []
    if isinstance(atom, MetricAtom):
        _term_vars(atom.left, seen)
        _term_vars(atom.right, seen)
    else:
        for a in atom.args:
            _term_vars(a, seen)
    return frozenset(seen)


def _affine_body(atoms, coefs):
    parts = []
    for atom, coef in zip(atoms, coefs):
        parts.append(atom if coef == 1 else Scale(coef, atom))
    body = parts[0]
    for part in parts[1:]:
        body = Sum(body, part)
    return body


def enumerate_fragment(spec, signature, p=1):
    """Deterministic, duplicate-free list of fragment formulas.

    Quantified variables are named x1..xk.  Atoms apply relation symbols to
    variables and constants and take metric atoms at exponent p over
    distinct term pairs; every quantified variable must occur in the body.
    Ordering is lexicographic in (prefix length, atom choice, coefficients,
    prefix), with lattice bodies after the affine ones at each prefix
    length.
    """
    pn = as_pnorm(p)
    coefs = tuple(g for g in spec.grid if g != 0)
    out = []
    for k in range(spec.depth + 1):
        qvars = tuple("x%d" % (i + 1) for i in range(k))
        clash = set(qvars) & set(spec.free_vars)
        if clash:
            raise DomainError("free variable names collide with x1..: %s" % sorted(clash))
        terms = [Var(v) for v in spec.free_vars + qvars]
        terms += [ConstRef(c) for c in signature.constants]
        atoms = []
        for rsym in signature.relations:
            for combo in itertools.product(terms, repeat=rsym.arity):
                atoms.append(RelAtom(rsym.name, tuple(combo)))
        for t1, t2 in itertools.combinations(terms, 2):
            atoms.append(MetricAtom(t1, t2, pn.p))
        needed = frozenset(qvars)
        raw = []
        for count in range(1, spec.max_atoms + 1):
            for chosen in itertools.combinations(range(len(atoms)), count):
                chosen_atoms = [atoms[i] for i in chosen]
                covered = frozenset().union(*(_atom_variables(a) for a in chosen_atoms))
                for assignment in itertools.product(coefs, repeat=count):
                    raw.append((count, covered, _affine_body(chosen_atoms, assignment)))
        bodies = [body for count, covered, body in raw if needed <= covered]
        if spec.connectives == "lattice":
            for (n1, c1, b1), (n2, c2, b2) in itertools.combinations(raw, 2):
                if n1 + n2 <= spec.max_atoms and needed <= c1 | c2:
                    bodies.append(Meet(b1, b2))
                    bodies.append(Join(b1, b2))
        for body in bodies:
            for prefix in itertools.product(("sup", "inf"), repeat=k):
                f = body
                for quant, var in reversed(list(zip(prefix, qvars))):
                    f = (Sup if quant == "sup" else Inf)(var, f)
                out.append(f)
    return out
