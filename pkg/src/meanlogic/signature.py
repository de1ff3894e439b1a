"""Moduli of uniform continuity and signatures for bounded metric structures.

A modulus is the pointwise minimum of finitely many affine pieces
t -> slope * t + intercept with nonnegative rational coefficients and at
least one zero intercept.  That shape is closed under the three combinators
used throughout the package (nonnegative scaling, addition, composition),
is automatically nondecreasing, concave and subadditive on t >= 0, and
evaluates exactly in rational arithmetic.
"""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import DomainError, FormatError
from .rationals import format_rational, parse_rational


def _prune(pieces):
    """Drop duplicate and pointwise-dominated pieces; keep at least one."""
    uniq = sorted(set(pieces))
    kept = []
    for slope, intercept in uniq:
        dominated = any(
            s <= slope and c <= intercept and (s, c) != (slope, intercept)
            for s, c in uniq
        )
        if not dominated:
            kept.append((slope, intercept))
    return tuple(kept)


@dataclass(frozen=True)
class Modulus:
    """min of affine pieces; each piece is a (slope, intercept) pair."""

    pieces: tuple = field(default=((Fraction(1), Fraction(0)),))

    def __post_init__(self):
        if not self.pieces:
            raise DomainError("modulus needs at least one piece")
        norm = []
        for piece in self.pieces:
            slope, intercept = piece
            slope, intercept = Fraction(slope), Fraction(intercept)
            if slope < 0 or intercept < 0:
                raise DomainError("modulus pieces need nonnegative coefficients")
            norm.append((slope, intercept))
        if min(c for _, c in norm) != 0:
            raise DomainError("modulus needs a piece with zero intercept")
        object.__setattr__(self, "pieces", _prune(norm))

    @classmethod
    def identity(cls):
        return cls(((Fraction(1), Fraction(0)),))

    @classmethod
    def zero(cls):
        return cls(((Fraction(0), Fraction(0)),))

    def value(self, t):
        t = Fraction(t)
        if t < 0:
            raise DomainError("modulus argument must be nonnegative")
        return min(slope * t + intercept for slope, intercept in self.pieces)

    def value_float(self, t):
        """Float evaluation for root-side (p > 1) tolerance checks."""
        if t < 0:
            raise DomainError("modulus argument must be nonnegative")
        return min(float(s) * t + float(c) for s, c in self.pieces)

    def scaled(self, r):
        r = Fraction(r)
        if r < 0:
            raise DomainError("modulus scale factor must be nonnegative")
        return Modulus(tuple((r * s, r * c) for s, c in self.pieces))

    def plus(self, other):
        # min_i f_i + min_j g_j = min_{i,j} (f_i + g_j) pointwise
        return Modulus(
            tuple(
                (s1 + s2, c1 + c2)
                for s1, c1 in self.pieces
                for s2, c2 in other.pieces
            )
        )

    def compose(self, inner):
        """self(inner(t)) as a modulus; exact since slopes are nonnegative."""
        return Modulus(
            tuple(
                (s1 * s2, s1 * c2 + c1)
                for s1, c1 in self.pieces
                for s2, c2 in inner.pieces
            )
        )

    def to_json(self):
        return [[format_rational(s), format_rational(c)] for s, c in self.pieces]

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, list) or not data:
            raise FormatError("modulus must be a nonempty array of pairs")
        pieces = []
        for entry in data:
            if not isinstance(entry, list) or len(entry) != 2:
                raise FormatError("modulus piece must be a [slope, intercept] pair")
            pieces.append((parse_rational(entry[0]), parse_rational(entry[1])))
        return cls(tuple(pieces))


def modulus_eval(modulus, t):
    """Exact value of the modulus at rational t >= 0."""
    return modulus.value(t)


def modulus_combine(kind, *args):
    """Combine moduli: 'scale' (factor, m), 'sum' (m, ...), 'max' (m, ...).

    'max' returns the sum of its arguments: the pointwise max of concave
    moduli need not be concave, while the sum dominates it and stays a
    modulus, so callers get a sound upper envelope.
    """
    if kind == "scale":
        factor, modulus = args
        return modulus.scaled(factor)
    if kind in ("sum", "max"):
        if not args:
            raise DomainError("modulus_combine needs at least one modulus")
        out = args[0]
        for m in args[1:]:
            out = out.plus(m)
        return out
    raise DomainError("unknown modulus combination %r" % (kind,))


@dataclass(frozen=True)
class FunctionSymbol:
    name: str
    arity: int
    modulus: Modulus

    def __post_init__(self):
        if self.arity < 1:
            raise DomainError("function %s needs arity >= 1" % self.name)


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    arity: int
    bound: Fraction
    modulus: Modulus

    def __post_init__(self):
        object.__setattr__(self, "bound", Fraction(self.bound))
        if self.arity < 1:
            raise DomainError("relation %s needs arity >= 1" % self.name)
        if self.bound <= 0:
            raise DomainError("relation %s needs a positive bound" % self.name)


_RESERVED = {"d", "sup", "inf", "min", "max"}


@dataclass(frozen=True)
class Signature:
    """Constant, function and relation symbols sharing one name space.

    The metric symbol d is implicit and reserved; diameter bound 1 is fixed.
    """

    constants: tuple = ()
    functions: tuple = ()
    relations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "constants", tuple(self.constants))
        object.__setattr__(self, "functions", tuple(self.functions))
        object.__setattr__(self, "relations", tuple(self.relations))
        names = list(self.constants)
        names += [f.name for f in self.functions]
        names += [r.name for r in self.relations]
        for name in names:
            if not name or not isinstance(name, str):
                raise DomainError("symbol names must be nonempty strings")
            if name in _RESERVED:
                raise DomainError("symbol name %r is reserved" % name)
        if len(set(names)) != len(names):
            raise DomainError("symbol names must be pairwise distinct")

    def function(self, name):
        for f in self.functions:
            if f.name == name:
                return f
        raise DomainError("no function symbol %r" % name)

    def relation(self, name):
        for r in self.relations:
            if r.name == name:
                return r
        raise DomainError("no relation symbol %r" % name)

    def is_constant(self, name):
        return name in self.constants

    def to_json(self):
        return {
            "constants": list(self.constants),
            "functions": [
                {"name": f.name, "arity": f.arity, "modulus": f.modulus.to_json()}
                for f in self.functions
            ],
            "relations": [
                {
                    "name": r.name,
                    "arity": r.arity,
                    "bound": format_rational(r.bound),
                    "modulus": r.modulus.to_json(),
                }
                for r in self.relations
            ],
        }

    @classmethod
    def from_json(cls, data):
        if not isinstance(data, dict):
            raise FormatError("signature must be an object")
        consts = data.get("constants", [])
        if not isinstance(consts, list) or not all(isinstance(c, str) for c in consts):
            raise FormatError("signature constants must be an array of names")
        funcs = []
        for entry in data.get("functions", []):
            try:
                funcs.append(
                    FunctionSymbol(
                        entry["name"],
                        int(entry["arity"]),
                        Modulus.from_json(entry["modulus"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise FormatError("bad function symbol entry: %s" % exc) from exc
        rels = []
        for entry in data.get("relations", []):
            try:
                rels.append(
                    RelationSymbol(
                        entry["name"],
                        int(entry["arity"]),
                        parse_rational(entry["bound"]),
                        Modulus.from_json(entry["modulus"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise FormatError("bad relation symbol entry: %s" % exc) from exc
        return cls(tuple(consts), tuple(funcs), tuple(rels))
