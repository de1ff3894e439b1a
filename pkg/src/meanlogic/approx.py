"""Affine approximation of sentences over a corpus of structures.

A sentence determines a point function on structures; over a finite corpus
this is a finite rational vector, a theory point.  Convex combinations of
structures push linear sentences to affine interpolation of their values,
so closing a corpus under a few mixtures probes exactly the failure of that
interpolation for lattice sentences.  chebyshev_fit computes the exact
best sup-norm affine approximation of a target sentence by a basis of
sentences over the corpus, as a linear program in rational arithmetic.
"""

from dataclasses import dataclass
from fractions import Fraction

from . import kernel
from .convexlp import LinearProgram, solve
from .errors import DomainError
from .formula import Const, Scale, Sum, free_variables, unparse
from .mean import CheckReport, CheckRow, convex_combination
from .rationals import format_rational
from .structure import as_pnorm


@dataclass(frozen=True)
class TheoryPoint:
    """Values of a fixed sentence list on one structure."""

    name: str
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))


def _require_sentence(formula):
    extra = free_variables(formula)
    if extra:
        raise DomainError(
            "%r has free variable %r, sentences only" % (unparse(formula), extra[0])
        )


def _named_corpus(corpus):
    if isinstance(corpus, dict):
        return list(corpus.items())
    return [(name, s) for name, s in corpus]


def _sentence_value(sentence, structure, pn):
    return kernel.evaluate_batch(sentence, structure, [()], pn)[0]


def build_theory_points(corpus, sentences, closures=(), p=1):
    """Theory points of a corpus, optionally closed under convex mixtures.

    corpus is a dict or list of (name, structure); closures lists
    (eps, left name, right name) triples, each adding the point of
    eps*left + (1-eps)*right.
    """
    pn = as_pnorm(p)
    named = _named_corpus(corpus)
    if not named:
        raise DomainError("corpus must be nonempty")
    for s in sentences:
        _require_sentence(s)
    by_name = dict(named)
    if len(by_name) != len(named):
        raise DomainError("corpus names must be distinct")
    points = []
    for name, structure in named:
        points.append(
            TheoryPoint(name, tuple(_sentence_value(s, structure, pn) for s in sentences))
        )
    for eps, lname, rname in closures:
        eps = Fraction(eps)
        if lname not in by_name or rname not in by_name:
            raise DomainError("closure names must come from the corpus")
        mixed = convex_combination(eps, by_name[lname], by_name[rname], pn)
        name = "mix(%s,%s,%s)" % (format_rational(eps), lname, rname)
        points.append(
            TheoryPoint(name, tuple(_sentence_value(s, mixed.base, pn) for s in sentences))
        )
    return points


def check_preserved(formula, combos, p=1):
    """Whether a sentence interpolates affinely under convex combinations.

    combos lists (eps, left, right) structure triples; every row compares
    the sentence on eps*left + (1-eps)*right against the eps-weighted
    average of its values on the parts.  Equality holds for every linear
    sentence and can fail with min or max present.
    """
    _require_sentence(formula)
    pn = as_pnorm(p)
    rows = []
    for k, (eps, left, right) in enumerate(combos):
        eps = Fraction(eps)
        mixed = convex_combination(eps, left, right, pn)
        lhs = _sentence_value(formula, mixed.base, pn)
        rhs = eps * _sentence_value(formula, left, pn) + (1 - eps) * _sentence_value(
            formula, right, pn
        )
        rows.append(
            CheckRow("eps=%s #%d" % (format_rational(eps), k), lhs, rhs, lhs == rhs)
        )
    return CheckReport("convex preservation of %r" % unparse(formula), tuple(rows))


@dataclass(frozen=True)
class FitResult:
    epsilon: Fraction
    coefficients: tuple
    residuals: tuple  # signed, combination minus target, per point

    def combination(self, basis):
        """The fitted affine combination as a formula."""
        parts = []
        for c, b in zip(self.coefficients, basis):
            if c == 0:
                continue
            if b == Const(Fraction(1)):
                parts.append(Const(c))
            elif c == 1:
                parts.append(b)
            else:
                parts.append(Scale(c, b))
        if not parts:
            return Const(Fraction(0))
        out = parts[0]
        for part in parts[1:]:
            out = Sum(out, part)
        return out


def chebyshev_fit(target, basis, corpus, p=1):
    """Exact best sup-norm affine approximation over a finite corpus.

    Minimizes max over the corpus of |sum_j c_j basis_j - target| with free
    rational coefficients.  The basis must contain the constant sentence 1
    so intercepts are expressible.  corpus is a list of structures or of
    (name, structure) pairs.
    """
    _require_sentence(target)
    for b in basis:
        _require_sentence(b)
    if not basis:
        raise DomainError("basis must be nonempty")
    if Const(Fraction(1)) not in basis:
        raise DomainError("basis must contain the constant sentence 1")
    pn = as_pnorm(p)
    structures = []
    for entry in corpus:
        if isinstance(entry, tuple):
            structures.append(entry[1])
        else:
            structures.append(entry)
    if not structures:
        raise DomainError("corpus must be nonempty")
    tvals = [_sentence_value(target, s, pn) for s in structures]
    bvals = [[_sentence_value(b, s, pn) for b in basis] for s in structures]
    m = len(basis)
    rows = []
    for k in range(len(structures)):
        row = tuple(bvals[k]) + (Fraction(-1),)
        rows.append((row, "<=", tvals[k]))
        row = tuple(-v for v in bvals[k]) + (Fraction(-1),)
        rows.append((row, "<=", -tvals[k]))
    program = LinearProgram(
        objective=(Fraction(0),) * m + (Fraction(1),),
        rows=tuple(rows),
        sense="min",
        nonneg=(False,) * m + (True,),
    )
    result = solve(program)
    if result.status != "optimal":
        # minimizing a nonnegative bounded objective over a nonempty
        # feasible region, so anything else is a solver defect
        raise RuntimeError("approximation program returned %s" % result.status)
    coeffs = tuple(result.assignment[:m])
    residuals = tuple(
        sum(c * v for c, v in zip(coeffs, bvals[k])) - tvals[k]
        for k in range(len(structures))
    )
    return FitResult(result.assignment[m], coeffs, residuals)
