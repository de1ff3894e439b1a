"""Finite metric structures with exact rational tables.

A FiniteStructure interprets a Signature on a named finite universe with
diameter at most 1.  Function and relation tables are stored flat in
row-major order over universe indices.  Structures built as means for p > 1
additionally carry `metric_power`, the exact table of d^p values, with the
displayed `metric` holding rational approximations of the p-th roots; all
exact evaluation goes through `dist_power`.

Structural problems (ragged tables, unknown names, missing interpretations)
raise FormatError.  Semantic problems (metric axioms, bounds, continuity)
are collected by validate_structure into a report, one witness per violated
constraint, in a deterministic order.
"""

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DomainError, FormatError
from .rationals import format_rational, parse_rational, root_approx
from .signature import Signature

_INT64_LIMIT = 1 << 62
_FLOAT_TOL = 1e-9


@dataclass(frozen=True)
class PNorm:
    """Exponent of the ambient L^p product metric; p = 1 is the default."""

    p: int = 1

    def __post_init__(self):
        if not isinstance(self.p, int) or self.p < 1:
            raise DomainError("p must be an integer >= 1")

    def root(self, value):
        """value^(1/p): exact Fraction at p = 1, float otherwise."""
        if self.p == 1:
            return Fraction(value)
        return root_approx(value, self.p)


def as_pnorm(p):
    if isinstance(p, PNorm):
        return p
    return PNorm(int(p))


def _flat_index(idxs, size):
    flat = 0
    for i in idxs:
        flat = flat * size + i
    return flat


def _check_table_shape(nested, arity, size, leaf_check, label):
    """Flatten a nested JSON table, enforcing a full size^arity shape."""
    flat = []

    def walk(node, depth):
        if depth == arity:
            flat.append(leaf_check(node))
            return
        if not isinstance(node, list) or len(node) != size:
            raise FormatError("table for %s must be a full %d^%d nest" % (label, size, arity))
        for child in node:
            walk(child, depth + 1)

    walk(nested, 0)
    return tuple(flat)


@dataclass(frozen=True)
class FiniteStructure:
    """A signature interpretation on a finite universe of named points."""

    signature: Signature
    universe: tuple
    metric: tuple
    constants: dict = field(default_factory=dict)
    functions: dict = field(default_factory=dict)
    relations: dict = field(default_factory=dict)
    # exact d^p table when the true metric is irrational (means at p > 1)
    metric_power: tuple = None
    power_p: int = 1

    def __post_init__(self):
        object.__setattr__(self, "universe", tuple(self.universe))
        n = len(self.universe)
        if n == 0:
            raise FormatError("universe must be nonempty")
        if len(set(self.universe)) != n:
            raise FormatError("universe names must be distinct")
        metric = tuple(tuple(Fraction(x) for x in row) for row in self.metric)
        if len(metric) != n or any(len(row) != n for row in metric):
            raise FormatError("metric must be a %dx%d matrix" % (n, n))
        object.__setattr__(self, "metric", metric)
        if self.metric_power is not None:
            mp = tuple(tuple(Fraction(x) for x in row) for row in self.metric_power)
            if len(mp) != n or any(len(row) != n for row in mp):
                raise FormatError("metric_power must be a %dx%d matrix" % (n, n))
            object.__setattr__(self, "metric_power", mp)
        if self.power_p < 1:
            raise FormatError("power_p must be >= 1")

        sig = self.signature
        if set(self.constants) != set(sig.constants):
            raise FormatError("constants must interpret exactly the signature constants")
        for name, idx in self.constants.items():
            if not isinstance(idx, int) or not 0 <= idx < n:
                raise FormatError("constant %s maps outside the universe" % name)
        if set(self.functions) != {f.name for f in sig.functions}:
            raise FormatError("functions must interpret exactly the signature functions")
        for fsym in sig.functions:
            table = tuple(self.functions[fsym.name])
            if len(table) != n**fsym.arity:
                raise FormatError("function table %s has wrong size" % fsym.name)
            if any(not isinstance(v, int) or not 0 <= v < n for v in table):
                raise FormatError("function table %s maps outside the universe" % fsym.name)
            self.functions[fsym.name] = table
        if set(self.relations) != {r.name for r in sig.relations}:
            raise FormatError("relations must interpret exactly the signature relations")
        for rsym in sig.relations:
            table = tuple(Fraction(v) for v in self.relations[rsym.name])
            if len(table) != n**rsym.arity:
                raise FormatError("relation table %s has wrong size" % rsym.name)
            self.relations[rsym.name] = table

    @property
    def size(self):
        return len(self.universe)

    def element_index(self, name):
        try:
            return self.universe.index(name)
        except ValueError:
            raise DomainError("unknown element %r" % (name,)) from None

    def dist(self, i, j):
        return self.metric[i][j]

    def dist_power(self, i, j, k):
        """Exact d(i,j)^k whenever representable; see module docstring."""
        if self.metric_power is not None and k % self.power_p == 0:
            return self.metric_power[i][j] ** (k // self.power_p)
        return self.metric[i][j] ** k

    def fvalue(self, name, idxs):
        return self.functions[name][_flat_index(idxs, self.size)]

    def rvalue(self, name, idxs):
        return self.relations[name][_flat_index(idxs, self.size)]

    def resolve(self, element):
        """Element index from an index or a universe name."""
        if isinstance(element, str):
            return self.element_index(element)
        if not isinstance(element, int) or not 0 <= element < self.size:
            raise DomainError("element index %r out of range" % (element,))
        return element


def product_distance_p(structure, xs, ys, p=1):
    """Tuple distance in the L^p product metric.

    Returns (power, root): the exact rational sum of coordinate d^p values
    and its p-th root (equal to the sum at p = 1, a float otherwise).
    """
    pn = as_pnorm(p)
    xs = [structure.resolve(x) for x in xs]
    ys = [structure.resolve(y) for y in ys]
    if len(xs) != len(ys):
        raise DomainError("tuple lengths differ: %d vs %d" % (len(xs), len(ys)))
    power = sum(
        (structure.dist_power(i, j, pn.p) for i, j in zip(xs, ys)),
        Fraction(0),
    )
    return power, pn.root(power)


@dataclass(frozen=True)
class Violation:
    kind: str
    symbol: str
    witness: tuple
    lhs: object
    rhs: object

    def describe(self):
        return "%s[%s] at %s: %s > %s" % (
            self.kind,
            self.symbol,
            self.witness,
            self.lhs,
            self.rhs,
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self):
        return not self.violations

    def describe(self):
        if self.ok:
            return "ok"
        return "\n".join(v.describe() for v in self.violations)


def _lcm_denominator(values):
    out = 1
    for v in values:
        out = out * v.denominator // math.gcd(out, v.denominator)
    return out


def _scaled_int_array(values, denom):
    return np.array([int(v * denom) for v in values], dtype=np.int64)


def _digits(count, size, arity):
    """Per-position index arrays for all arity-tuples in lex order."""
    flat = np.arange(count)
    digs = []
    for pos in range(arity - 1, -1, -1):
        digs.append((flat // size**pos) % size)
    return digs


def _pair_distance_chunk(digs, dmat, rows):
    """Tuple-distance block: rows x all, summed coordinatewise from dmat."""
    total = None
    for dig in digs:
        block = dmat[dig[rows][:, None], dig[None, :]]
        total = block if total is None else total + block
    return total


def _first_true(mask, rows):
    hits = np.argwhere(mask)
    if hits.size == 0:
        return None
    # lex order over (row, col) matches nested loops over tuple pairs
    r, c = hits[0]
    return int(rows[int(r)]), int(c)


def _continuity_witness_exact(values_scaled, dv, dmat_scaled, dm, pieces, size, arity):
    """First pair violating |V(x)-V(y)| <= modulus(sum of coordinate d) at p=1.

    All-integer comparison; requires precomputed int64 bound checks by caller.
    """
    count = size**arity
    digs = _digits(count, size, arity)
    chunk = max(1, (1 << 22) // max(count, 1))
    for start in range(0, count, chunk):
        rows = np.arange(start, min(start + chunk, count))
        t_block = _pair_distance_chunk(digs, dmat_scaled, rows)
        a_block = np.abs(values_scaled[rows][:, None] - values_scaled[None, :])
        ok = np.zeros(t_block.shape, dtype=bool)
        for s, c in pieces:
            den = s.denominator * c.denominator // math.gcd(s.denominator, c.denominator)
            alpha = dm * den
            beta = int(s * den) * dv
            gamma = int(c * den) * dm * dv
            ok |= a_block * alpha <= t_block * beta + gamma
        hit = _first_true(~ok, rows)
        if hit is not None:
            return hit
    return None


def _continuity_witness_float(values_float, power_float, pieces, size, arity, p):
    """First pair violating the root-side continuity bound at p > 1."""
    count = size**arity
    digs = _digits(count, size, arity)
    chunk = max(1, (1 << 22) // max(count, 1))
    pf = [(float(s), float(c)) for s, c in pieces]
    for start in range(0, count, chunk):
        rows = np.arange(start, min(start + chunk, count))
        t_block = _pair_distance_chunk(digs, power_float, rows)
        root = t_block ** (1.0 / p)
        rhs = None
        for s, c in pf:
            cand = s * root + c
            rhs = cand if rhs is None else np.minimum(rhs, cand)
        a_block = np.abs(values_float[rows][:, None] - values_float[None, :])
        hit = _first_true(a_block > rhs + _FLOAT_TOL, rows)
        if hit is not None:
            return hit
    return None


def _unflatten(flat, size, arity):
    out = []
    for pos in range(arity - 1, -1, -1):
        out.append((flat // size**pos) % size)
    return tuple(out)


def _max_scaled(values, denom):
    return max((abs(int(v * denom)) for v in values), default=0)


def _scan_continuity(structure, symbol, values, modulus, pn, out):
    """Append a continuity violation for one symbol table, if any.

    `values` maps flat tuple index to either a Fraction (relations) or an
    element index (functions, compared through the metric).
    """
    size = structure.size
    arity = symbol.arity
    is_function = isinstance(values[0], int)
    if pn.p == 1:
        dmat_fracs = [structure.dist_power(i, j, 1) for i in range(size) for j in range(size)]
        dm = _lcm_denominator(dmat_fracs)
        dv = dm if is_function else _lcm_denominator(values)
        max_t = arity * _max_scaled(dmat_fracs, dm)
        max_a = 2 * (_max_scaled(dmat_fracs, dm) if is_function else _max_scaled(values, dv))
        worst = 0
        for s, c in modulus.pieces:
            den = s.denominator * c.denominator // math.gcd(s.denominator, c.denominator)
            worst = max(worst, max_a * dm * den, max_t * int(s * den) * dv + int(c * den) * dm * dv)
        if worst < _INT64_LIMIT and size**arity <= 1 << 14:
            dmat = _scaled_int_array(dmat_fracs, dm).reshape(size, size)
            if is_function:
                hit = _function_witness_exact(
                    np.array(values, dtype=np.int64), dmat, dm, modulus.pieces, size, arity
                )
            else:
                hit = _continuity_witness_exact(
                    _scaled_int_array(values, dv), dv, dmat, dm, modulus.pieces, size, arity
                )
        else:
            hit = _continuity_witness_slow(structure, symbol, values, modulus, pn)
        if hit is not None:
            xs = _unflatten(hit[0], size, arity)
            ys = _unflatten(hit[1], size, arity)
            power, root = product_distance_p(structure, xs, ys, pn)
            if is_function:
                lhs = structure.dist(values[hit[0]], values[hit[1]])
            else:
                lhs = abs(values[hit[0]] - values[hit[1]])
            out.append(
                Violation(
                    "continuity",
                    symbol.name,
                    (xs, ys),
                    lhs,
                    modulus.value(root),
                )
            )
        return
    # p > 1: root-side float comparison at tolerance
    power_float = np.array(
        [float(structure.dist_power(i, j, pn.p)) for i in range(size) for j in range(size)],
        dtype=float,
    ).reshape(size, size)
    if is_function:
        hit = _function_witness_float(
            np.array(values, dtype=np.int64),
            np.array([[float(structure.dist(i, j)) for j in range(size)] for i in range(size)]),
            power_float,
            modulus.pieces,
            size,
            arity,
            pn.p,
        )
    else:
        vfloat = np.array([float(v) for v in values], dtype=float)
        hit = _continuity_witness_float(vfloat, power_float, modulus.pieces, size, arity, pn.p)
    if hit is not None:
        xs = _unflatten(hit[0], size, arity)
        ys = _unflatten(hit[1], size, arity)
        power, root = product_distance_p(structure, xs, ys, pn)
        if is_function:
            lhs = structure.dist(values[hit[0]], values[hit[1]])
        else:
            lhs = abs(values[hit[0]] - values[hit[1]])
        out.append(
            Violation("continuity", symbol.name, (xs, ys), lhs, modulus.value_float(root))
        )


def _function_witness_exact(fvals, dmat_scaled, dm, pieces, size, arity):
    count = size**arity
    digs = _digits(count, size, arity)
    chunk = max(1, (1 << 22) // max(count, 1))
    for start in range(0, count, chunk):
        rows = np.arange(start, min(start + chunk, count))
        t_block = _pair_distance_chunk(digs, dmat_scaled, rows)
        a_block = dmat_scaled[fvals[rows][:, None], fvals[None, :]]
        ok = np.zeros(t_block.shape, dtype=bool)
        for s, c in pieces:
            den = s.denominator * c.denominator // math.gcd(s.denominator, c.denominator)
            ok |= a_block * den <= t_block * int(s * den) + int(c * den) * dm
        hit = _first_true(~ok, rows)
        if hit is not None:
            return hit
    return None


def _function_witness_float(fvals, dmat_float, power_float, pieces, size, arity, p):
    count = size**arity
    digs = _digits(count, size, arity)
    chunk = max(1, (1 << 22) // max(count, 1))
    pf = [(float(s), float(c)) for s, c in pieces]
    for start in range(0, count, chunk):
        rows = np.arange(start, min(start + chunk, count))
        t_block = _pair_distance_chunk(digs, power_float, rows)
        root = t_block ** (1.0 / p)
        rhs = None
        for s, c in pf:
            cand = s * root + c
            rhs = cand if rhs is None else np.minimum(rhs, cand)
        a_block = dmat_float[fvals[rows][:, None], fvals[None, :]]
        hit = _first_true(a_block > rhs + _FLOAT_TOL, rows)
        if hit is not None:
            return hit
    return None


def _continuity_witness_slow(structure, symbol, values, modulus, pn):
    """Unbounded-int fallback scan, lex order over tuple pairs."""
    size = structure.size
    arity = symbol.arity
    is_function = isinstance(values[0], int)
    space = list(itertools.product(range(size), repeat=arity))
    for xi, xs in enumerate(space):
        for yi, ys in enumerate(space):
            power = sum(
                (structure.dist_power(i, j, pn.p) for i, j in zip(xs, ys)), Fraction(0)
            )
            if is_function:
                lhs = structure.dist(values[xi], values[yi])
            else:
                lhs = abs(values[xi] - values[yi])
            if pn.p == 1:
                if lhs > modulus.value(power):
                    return xi, yi
            else:
                if float(lhs) > modulus.value_float(root_approx(power, pn.p)) + _FLOAT_TOL:
                    return xi, yi
    return None


def validate_structure(structure, p=1):
    """Check metric axioms, bounds and moduli; exact at p=1, 1e-9 roots at p>1.

    Returns a ValidationReport with one deterministic witness per violated
    constraint.  At p > 1 the stored metric entries are the root-side values,
    so the triangle, diameter and continuity checks run in floats at the
    package tolerance while bounds and symmetry stay exact.
    """
    pn = as_pnorm(p)
    s = structure
    n = s.size
    out = []

    exact = pn.p == 1
    tol = 0 if exact else _FLOAT_TOL

    hit = next(((i, j) for i in range(n) for j in range(n) if s.metric[i][j] != s.metric[j][i]), None)
    if hit:
        i, j = hit
        out.append(Violation("metric-symmetry", "d", hit, s.metric[i][j], s.metric[j][i]))
    hit = next((i for i in range(n) if s.metric[i][i] != 0), None)
    if hit is not None:
        out.append(Violation("metric-diagonal", "d", (hit,), s.metric[hit][hit], Fraction(0)))
    hit = next(
        ((i, j) for i in range(n) for j in range(n) if i != j and s.metric[i][j] <= 0),
        None,
    )
    if hit:
        i, j = hit
        out.append(Violation("metric-positivity", "d", hit, s.metric[i][j], "positive"))
    if exact:
        hit = next(((i, j) for i in range(n) for j in range(n) if s.metric[i][j] > 1), None)
    else:
        hit = next(
            ((i, j) for i in range(n) for j in range(n) if float(s.metric[i][j]) > 1 + tol),
            None,
        )
    if hit:
        i, j = hit
        out.append(Violation("metric-diameter", "d", hit, s.metric[i][j], Fraction(1)))

    tri = _triangle_witness(s, exact, tol)
    if tri:
        i, j, k = tri
        out.append(
            Violation(
                "metric-triangle",
                "d",
                tri,
                s.metric[i][k],
                s.metric[i][j] + s.metric[j][k],
            )
        )

    for rsym in s.signature.relations:
        table = s.relations[rsym.name]
        hit = next((t for t, v in enumerate(table) if abs(v) > rsym.bound), None)
        if hit is not None:
            out.append(
                Violation(
                    "relation-bound",
                    rsym.name,
                    _unflatten(hit, n, rsym.arity),
                    abs(table[hit]),
                    rsym.bound,
                )
            )
        _scan_continuity(s, rsym, table, rsym.modulus, pn, out)
    for fsym in s.signature.functions:
        _scan_continuity(s, fsym, s.functions[fsym.name], fsym.modulus, pn, out)

    return ValidationReport(tuple(out))


def _triangle_witness(structure, exact, tol):
    n = structure.size
    if exact:
        denom = _lcm_denominator([x for row in structure.metric for x in row])
        if _max_scaled([x for row in structure.metric for x in row], denom) * 2 < _INT64_LIMIT:
            m = np.array(
                [[int(x * denom) for x in row] for row in structure.metric], dtype=np.int64
            )
            for i in range(n):
                best = np.min(m[i][:, None] + m, axis=0)
                bad = np.argwhere(best < m[i])
                if bad.size:
                    k = int(bad[0][0])
                    j = int(np.argmin(m[i][:, None] + m, axis=0)[k])
                    return i, j, k
            return None
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if structure.metric[i][k] > structure.metric[i][j] + structure.metric[j][k]:
                        return i, j, k
        return None
    m = np.array([[float(x) for x in row] for row in structure.metric])
    for i in range(n):
        best = np.min(m[i][:, None] + m, axis=0)
        bad = np.argwhere(best + tol < m[i])
        if bad.size:
            k = int(bad[0][0])
            j = int(np.argmin(m[i][:, None] + m, axis=0)[k])
            return i, j, k
    return None


def structure_to_json(structure):
    s = structure
    n = s.size

    def nest(table, arity, render):
        if arity == 0:
            return render(table[0])
        stride = n ** (arity - 1)
        return [
            nest(table[i * stride : (i + 1) * stride], arity - 1, render)
            for i in range(n)
        ]

    out = {
        "signature": s.signature.to_json(),
        "universe": list(s.universe),
        "metric": [[format_rational(x) for x in row] for row in s.metric],
        "constants": {name: s.universe[idx] for name, idx in sorted(s.constants.items())},
        "functions": {
            name: nest(table, s.signature.function(name).arity, lambda v: s.universe[v])
            for name, table in sorted(s.functions.items())
        },
        "relations": {
            name: nest(table, s.signature.relation(name).arity, format_rational)
            for name, table in sorted(s.relations.items())
        },
    }
    if s.metric_power is not None:
        out["metric_power"] = [[format_rational(x) for x in row] for row in s.metric_power]
        out["p"] = s.power_p
    return out


def structure_from_json(data):
    if not isinstance(data, dict):
        raise FormatError("structure file must be a JSON object")
    for key in ("signature", "universe", "metric"):
        if key not in data:
            raise FormatError("structure file is missing %r" % key)
    sig = Signature.from_json(data["signature"])
    universe = data["universe"]
    if not isinstance(universe, list) or not all(isinstance(u, str) for u in universe):
        raise FormatError("universe must be an array of element names")
    n = len(universe)
    if n == 0:
        raise FormatError("universe must be nonempty")
    index = {name: i for i, name in enumerate(universe)}
    if len(index) != n:
        raise FormatError("universe names must be distinct")

    metric_rows = data["metric"]
    if not isinstance(metric_rows, list) or len(metric_rows) != n:
        raise FormatError("metric must be an %dx%d array" % (n, n))
    metric = []
    for row in metric_rows:
        if not isinstance(row, list) or len(row) != n:
            raise FormatError("metric must be an %dx%d array" % (n, n))
        metric.append(tuple(parse_rational(x) for x in row))
    for i in range(n):
        for j in range(n):
            if i != j and metric[i][j] == 0:
                raise FormatError(
                    "zero distance off the diagonal between %s and %s"
                    % (universe[i], universe[j])
                )

    def element(name):
        if not isinstance(name, str) or name not in index:
            raise FormatError("unknown element name %r" % (name,))
        return index[name]

    constants = {}
    raw_consts = data.get("constants", {})
    if not isinstance(raw_consts, dict):
        raise FormatError("constants must be an object")
    for name, target in raw_consts.items():
        constants[name] = element(target)

    functions = {}
    raw_funcs = data.get("functions", {})
    if not isinstance(raw_funcs, dict):
        raise FormatError("functions must be an object")
    for name, nested in raw_funcs.items():
        try:
            arity = sig.function(name).arity
        except DomainError:
            raise FormatError("function %r is not in the signature" % name) from None
        functions[name] = _check_table_shape(nested, arity, n, element, name)

    relations = {}
    raw_rels = data.get("relations", {})
    if not isinstance(raw_rels, dict):
        raise FormatError("relations must be an object")
    for name, nested in raw_rels.items():
        try:
            arity = sig.relation(name).arity
        except DomainError:
            raise FormatError("relation %r is not in the signature" % name) from None
        relations[name] = _check_table_shape(nested, arity, n, parse_rational, name)

    metric_power = None
    power_p = 1
    if "metric_power" in data:
        rows = data["metric_power"]
        if not isinstance(rows, list) or len(rows) != n:
            raise FormatError("metric_power must be an %dx%d array" % (n, n))
        metric_power = tuple(
            tuple(parse_rational(x) for x in row) for row in rows
        )
        power_p = int(data.get("p", 1))

    return FiniteStructure(
        signature=sig,
        universe=tuple(universe),
        metric=tuple(metric),
        constants=constants,
        functions=functions,
        relations=relations,
        metric_power=metric_power,
        power_p=power_p,
    )


def load_structure(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError("invalid JSON in %s: %s" % (path, exc)) from exc
    return structure_from_json(data)


def save_structure(structure, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(structure_to_json(structure), fh, indent=2)
        fh.write("\n")


def all_tuples(size, arity):
    """All index tuples in lexicographic order."""
    return itertools.product(range(size), repeat=arity)
