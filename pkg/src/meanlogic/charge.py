"""Finitely additive probability charges on finite index sets.

A charge is a finite labeled index with exact nonnegative rational weights
summing to 1; every subset gets the sum of its point weights, so all the
integral identities below hold exactly.  Product charges use tuple labels,
which keeps the canonical bijections of Fubini and associativity checks
positional.
"""

import json
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, FormatError
from .rationals import format_rational, parse_rational, root_approx


def label_text(label):
    """Render a (possibly tuple) index label for files and messages."""
    if isinstance(label, tuple):
        return "(%s)" % ",".join(label_text(x) for x in label)
    return str(label)


@dataclass(frozen=True)
class Charge:
    index: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "index", tuple(self.index))
        object.__setattr__(
            self, "weights", tuple(Fraction(w) for w in self.weights)
        )
        if not self.index:
            raise DomainError("charge index must be nonempty")
        if len(self.index) != len(self.weights):
            raise DomainError("index and weights lengths differ")
        if len(set(self.index)) != len(self.index):
            raise DomainError("index labels must be distinct")
        if any(w < 0 for w in self.weights):
            raise DomainError("charge weights must be nonnegative")
        if sum(self.weights) != 1:
            raise DomainError("charge weights must sum to 1")

    @classmethod
    def uniform(cls, index):
        index = tuple(index)
        if not index:
            raise DomainError("charge index must be nonempty")
        w = Fraction(1, len(index))
        return cls(index, (w,) * len(index))

    @classmethod
    def point_mass(cls, index, at):
        index = tuple(index)
        if at not in index:
            raise DomainError("point %r is not in the index" % (at,))
        return cls(index, tuple(Fraction(1) if i == at else Fraction(0) for i in index))

    @property
    def size(self):
        return len(self.index)

    def weight(self, label):
        try:
            return self.weights[self.index.index(label)]
        except ValueError:
            raise DomainError("label %r is not in the index" % (label,)) from None

    def to_json(self):
        return {
            "index": [label_text(i) for i in self.index],
            "weights": [format_rational(w) for w in self.weights],
        }

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict) or "index" not in data or "weights" not in data:
            raise FormatError("charge file needs index and weights arrays")
        index = data["index"]
        weights = data["weights"]
        if not isinstance(index, list) or not all(isinstance(i, str) for i in index):
            raise FormatError("charge index must be an array of labels")
        if not isinstance(weights, list):
            raise FormatError("charge weights must be an array")
        return cls(tuple(index), tuple(parse_rational(w) for w in weights))


def load_charge(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError("invalid JSON in %s: %s" % (path, exc)) from exc
    return Charge.from_json(data)


def _values_for(f, charge):
    """Normalize f (sequence, mapping or callable on labels) to a list."""
    if callable(f):
        return [Fraction(f(label)) for label in charge.index]
    if isinstance(f, dict):
        try:
            return [Fraction(f[label]) for label in charge.index]
        except KeyError as exc:
            raise DomainError("integrand is undefined at index %r" % (exc.args[0],)) from exc
    values = [Fraction(v) for v in f]
    if len(values) != charge.size:
        raise DomainError("integrand length %d does not match index size %d" % (len(values), charge.size))
    return values


def integrate(f, charge):
    """Exact integral sum of w_i * f(i)."""
    values = _values_for(f, charge)
    return sum((w * v for w, v in zip(charge.weights, values)), Fraction(0))


def p_norm(f, charge, p=1):
    """L^p seminorm of f: returns (exact p-th power integral, its p-th root)."""
    if not isinstance(p, int) or p < 1:
        raise DomainError("p must be an integer >= 1")
    values = _values_for(f, charge)
    power = sum(
        (w * abs(v) ** p for w, v in zip(charge.weights, values)), Fraction(0)
    )
    if p == 1:
        return power, power
    return power, root_approx(power, p)


def pushforward(charge, mapping, target_index=None):
    """Image charge under a total map on labels (change of variables)."""
    if callable(mapping):
        images = [mapping(label) for label in charge.index]
    else:
        try:
            images = [mapping[label] for label in charge.index]
        except KeyError as exc:
            raise DomainError("map is undefined at index %r" % (exc.args[0],)) from exc
    if target_index is None:
        target = []
        for img in images:
            if img not in target:
                target.append(img)
        target = tuple(target)
    else:
        target = tuple(target_index)
        missing = [img for img in images if img not in target]
        if missing:
            raise DomainError("map image %r is outside the target index" % (missing[0],))
    accum = {label: Fraction(0) for label in target}
    for img, w in zip(images, charge.weights):
        accum[img] += w
    return Charge(target, tuple(accum[label] for label in target))


def product(mu, nu):
    """Product charge on tuple labels (i, j), mu-major lexicographic order."""
    index = tuple((i, j) for i in mu.index for j in nu.index)
    weights = tuple(wi * wj for wi in mu.weights for wj in nu.weights)
    return Charge(index, weights)


def convex_combine(eps, mu, nu):
    """eps*mu + (1-eps)*nu on a shared index."""
    eps = Fraction(eps)
    if not 0 <= eps <= 1:
        raise DomainError("mixing weight must lie in [0, 1]")
    if mu.index != nu.index:
        raise DomainError("charges live on different indices")
    return Charge(
        mu.index,
        tuple(eps * a + (1 - eps) * b for a, b in zip(mu.weights, nu.weights)),
    )


def is_extreme(charge):
    """Point-mass test with a witness decomposition when reducible.

    Returns (True, None) for point masses.  Otherwise conditions on the
    first index of weight strictly between 0 and 1: with eps that weight,
    the witness is (eps, point mass there, the rest renormalized), two
    distinct charges recombining exactly to the input.
    """
    if any(w == 1 for w in charge.weights):
        return True, None
    split = next(i for i, w in enumerate(charge.weights) if 0 < w < 1)
    eps = charge.weights[split]
    first = Charge.point_mass(charge.index, charge.index[split])
    rest = tuple(
        Fraction(0) if i == split else w / (1 - eps)
        for i, w in enumerate(charge.weights)
    )
    return False, (eps, first, Charge(charge.index, rest))


def fubini_check(f, mu, nu):
    """Product integral vs iterated integrals, by two separate routes.

    f is indexed by label pairs: a callable f(i, j), a mapping on (i, j)
    tuples, or a nested sequence f[i][j] aligned with the index orders.
    Returns (product route, iterated route); the charge laws make them equal.
    """
    if callable(f):
        table = {(i, j): Fraction(f(i, j)) for i in mu.index for j in nu.index}
    elif isinstance(f, dict):
        table = {}
        for i in mu.index:
            for j in nu.index:
                if (i, j) not in f:
                    raise DomainError("integrand is undefined at %r" % ((i, j),))
                table[(i, j)] = Fraction(f[(i, j)])
    else:
        rows = list(f)
        if len(rows) != mu.size:
            raise DomainError("integrand has %d rows, expected %d" % (len(rows), mu.size))
        table = {}
        for i, row in zip(mu.index, rows):
            row = list(row)
            if len(row) != nu.size:
                raise DomainError("integrand row length mismatch")
            for j, v in zip(nu.index, row):
                table[(i, j)] = Fraction(v)
    joint = product(mu, nu)
    lhs = integrate(lambda pair: table[pair], joint)
    rhs = Fraction(0)
    for j, wj in zip(nu.index, nu.weights):
        inner = sum((wi * table[(i, j)] for i, wi in zip(mu.index, mu.weights)), Fraction(0))
        rhs += wj * inner
    return lhs, rhs
