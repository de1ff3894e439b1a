"""Finite type spaces over formula fragments.

A fragment fixes finitely many formulas sharing one ordered free-variable
tuple; the type of a point tuple is its exact value vector.  The realized
types of a finite structure form a finite subset of a rational box, so
convex-hull questions are exact LP feasibility problems, and convex
combinations of realized types are themselves realized in a powermean.

equiv_check compares two structures over an enumerated sentence fragment: a
disagreement is a conclusive counterexample, agreement is only agreement
over what was enumerated.  back_and_forth plays the type-equality game;
matched tuples must agree on every fragment formula at every coordinate and
on all pairwise distances, so success transfers prenex sentences built from
fragment atoms up to the played depth.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import kernel
from .charge import Charge
from .convexlp import LinearProgram, solve
from .errors import DomainError, NotLinearError
from .formula import (
    FragmentSpec,
    enumerate_fragment,
    free_variables,
    is_linear,
    unparse,
)
from .mean import powermean
from .structure import as_pnorm


@dataclass(frozen=True)
class Fragment:
    """Finitely many formulas over one shared free-variable tuple."""

    formulas: tuple
    free_vars: tuple = ()
    p: int = 1

    def __post_init__(self):
        object.__setattr__(self, "formulas", tuple(self.formulas))
        object.__setattr__(self, "free_vars", tuple(self.free_vars))
        if not self.formulas:
            raise DomainError("fragment needs at least one formula")
        if len(set(self.free_vars)) != len(self.free_vars):
            raise DomainError("fragment free variables must be distinct")
        for f in self.formulas:
            extra = [v for v in free_variables(f) if v not in self.free_vars]
            if extra:
                raise DomainError(
                    "formula %r uses %r outside the fragment tuple"
                    % (unparse(f), extra[0])
                )

    @property
    def linear(self):
        return all(is_linear(f, self.p) for f in self.formulas)

    @property
    def arity(self):
        return len(self.free_vars)

    @classmethod
    def from_spec(cls, spec, signature, p=1):
        pn = as_pnorm(p)
        return cls(
            tuple(enumerate_fragment(spec, signature, pn)),
            spec.free_vars,
            pn.p,
        )


@dataclass(frozen=True)
class TypeVector:
    fragment: Fragment
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(v) for v in self.values))
        if len(self.values) != len(self.fragment.formulas):
            raise DomainError("type vector width differs from the fragment")


def realized_types(structure, fragment):
    """All point tuples with their type vectors, in lexicographic order."""
    n = fragment.arity
    combos = list(itertools.product(range(structure.size), repeat=n))
    columns = []
    for formula in fragment.formulas:
        names = free_variables(formula)
        positions = [fragment.free_vars.index(v) for v in names]
        envs = [tuple(combo[pos] for pos in positions) for combo in combos]
        columns.append(kernel.evaluate_batch(formula, structure, envs, fragment.p))
    out = []
    for row, combo in enumerate(combos):
        values = tuple(col[row] for col in columns)
        out.append((combo, TypeVector(fragment, values)))
    return out


@dataclass(frozen=True)
class ExtremeVerdict:
    position: int
    extreme: bool
    certificate: tuple = None  # (position, weight) pairs when reducible


def _vector_values(vector):
    if isinstance(vector, TypeVector):
        return vector.values
    return tuple(Fraction(v) for v in vector)


def extreme_types(vectors):
    """Convex-hull extremality of each vector among the others, by exact LP.

    A vector is extreme in the hull of the finite set iff it is not a convex
    combination of the remaining ones; reducible vectors come with an exact
    certificate of weights.
    """
    rows_of = [_vector_values(v) for v in vectors]
    if not rows_of:
        return []
    width = len(rows_of[0])
    if any(len(r) != width for r in rows_of):
        raise DomainError("type vectors must share one fragment width")
    out = []
    for k, target in enumerate(rows_of):
        others = [r for i, r in enumerate(rows_of) if i != k]
        positions = [i for i in range(len(rows_of)) if i != k]
        if not others:
            out.append(ExtremeVerdict(k, True))
            continue
        rows = []
        for coord in range(width):
            rows.append(
                (tuple(r[coord] for r in others), "=", target[coord])
            )
        rows.append((tuple(Fraction(1) for _ in others), "=", Fraction(1)))
        program = LinearProgram(
            objective=(Fraction(0),) * len(others),
            rows=tuple(rows),
            sense="min",
        )
        result = solve(program)
        if result.status == "optimal":
            cert = tuple(
                (positions[i], w)
                for i, w in enumerate(result.assignment)
                if w != 0
            )
            out.append(ExtremeVerdict(k, False, cert))
        else:
            out.append(ExtremeVerdict(k, True))
    return out


def realize_convex_type(structure, weights, fragment, cap=None):
    """Realize a convex combination of realized types in a powermean.

    weights assigns a probability weight to every point tuple of the
    fragment's arity (a mapping from tuples, or a sequence in lexicographic
    tuple order).  Returns (mean, realizing classes, its type vector): the
    coordinate-projection classes of M^weights realize exactly the weighted
    average of the pointwise type vectors, by the mean identity for linear
    formulas.
    """
    if not fragment.linear:
        raise NotLinearError("convex types need a linear fragment")
    n = fragment.arity
    if n == 0:
        raise DomainError("type realization needs at least one free variable")
    combos = list(itertools.product(range(structure.size), repeat=n))
    if isinstance(weights, dict):
        resolved = {}
        for key, w in weights.items():
            key = tuple(structure.resolve(k) for k in key)
            if len(key) != n:
                raise DomainError("weight keys must be %d-tuples" % n)
            if key in resolved:
                raise DomainError("duplicate tuples in the weight table")
            resolved[key] = Fraction(w)
        values = [resolved.get(c, Fraction(0)) for c in combos]
    else:
        values = [Fraction(w) for w in weights]
        if len(values) != len(combos):
            raise DomainError(
                "need %d weights for %d-tuples, got %d" % (len(combos), n, len(values))
            )
    labels = tuple(
        tuple(structure.universe[e] for e in combo) for combo in combos
    )
    charge = Charge(labels, tuple(values))
    mean = powermean(structure, charge, fragment.p, cap)
    realizers = tuple(
        mean.class_of(tuple(combo[k] for combo in combos)) for k in range(n)
    )
    columns = []
    for formula in fragment.formulas:
        names = free_variables(formula)
        positions = [fragment.free_vars.index(v) for v in names]
        env = tuple(realizers[pos] for pos in positions)
        columns.append(kernel.evaluate_batch(formula, mean.base, [env], fragment.p)[0])
    vector = TypeVector(fragment, tuple(columns))
    return mean, realizers, vector


@dataclass(frozen=True)
class EquivVerdict:
    agree: bool
    sentences_checked: int
    counterexample: tuple = None  # (formula, value on left, value on right)

    @property
    def conclusive(self):
        # disagreement separates the structures; agreement only covers the
        # enumerated sentences
        return not self.agree


def equiv_check(left, right, spec, p=1):
    """Compare two structures over a sentence fragment.

    spec is either a FragmentSpec to enumerate or an explicit list of
    sentences.  The first exact disagreement is conclusive; agreement only
    covers what was checked.
    """
    if left.signature != right.signature:
        raise DomainError("structures must share one signature")
    pn = as_pnorm(p)
    if isinstance(spec, FragmentSpec):
        if spec.free_vars:
            raise DomainError("equivalence checking uses sentence fragments")
        sentences = enumerate_fragment(spec, left.signature, pn)
    else:
        sentences = list(spec)
        for s in sentences:
            extra = free_variables(s)
            if extra:
                raise DomainError(
                    "%r has free variable %r, sentences only" % (unparse(s), extra[0])
                )
    for count, sentence in enumerate(sentences):
        lv = kernel.evaluate_batch(sentence, left, [()], pn)[0]
        rv = kernel.evaluate_batch(sentence, right, [()], pn)[0]
        if lv != rv:
            return EquivVerdict(False, count + 1, (sentence, lv, rv))
    return EquivVerdict(True, len(sentences))


@dataclass(frozen=True)
class GameState:
    """Matched tuples built during the back-and-forth game."""

    left: tuple = ()
    right: tuple = ()

    def extend(self, a, b):
        return GameState(self.left + (a,), self.right + (b,))


@dataclass(frozen=True)
class GameVerdict:
    success: bool
    depth: int
    witness: tuple = None  # (round, side, element name) for failures


def _extended_vector(structure, elements, fragment, pn):
    """Fragment values at every coordinate plus all pairwise distances."""
    out = []
    for formula in fragment.formulas:
        names = free_variables(formula)
        if len(names) > 1:
            raise DomainError("game fragments use one free variable")
        for e in elements:
            env = (e,) * len(names)
            out.append(kernel.evaluate_batch(formula, structure, [env], pn)[0])
    for i in range(len(elements)):
        for j in range(i + 1, len(elements)):
            out.append(structure.dist_power(elements[i], elements[j], pn.p))
    return tuple(out)


def back_and_forth(left, right, fragment, depth):
    """Type-equality game between two structures over a 1-variable fragment.

    At every round both sides may challenge with any yet-unmatched element;
    the other side must answer so the extended tuples keep identical
    fragment values coordinatewise and identical pairwise distances.
    Success means the challenge-response tree survives to the given depth;
    failure reports the first unanswerable (round, side, element).
    """
    if left.signature != right.signature:
        raise DomainError("structures must share one signature")
    if depth < 1 or depth > min(left.size, right.size):
        raise DomainError("depth must lie in 1..min universe size")
    pn = as_pnorm(fragment.p)

    def vec_left(elements):
        return _extended_vector(left, elements, fragment, pn)

    def vec_right(elements):
        return _extended_vector(right, elements, fragment, pn)

    def play(state, remaining):
        if remaining == 0:
            return None
        round_no = depth - remaining + 1
        for side in ("left", "right"):
            if side == "left":
                src, src_state = left, state.left
                dst, dst_state = right, state.right
            else:
                src, src_state = right, state.right
                dst, dst_state = left, state.left
            for challenge in range(src.size):
                if challenge in src_state:
                    continue
                answered = False
                for candidate in range(dst.size):
                    if side == "left":
                        nxt = state.extend(challenge, candidate)
                    else:
                        nxt = state.extend(candidate, challenge)
                    if vec_left(nxt.left) != vec_right(nxt.right):
                        continue
                    if play(nxt, remaining - 1) is None:
                        answered = True
                        break
                if not answered:
                    return (round_no, side, src.universe[challenge])
        return None

    witness = play(GameState(), depth)
    return GameVerdict(witness is None, depth, witness)
