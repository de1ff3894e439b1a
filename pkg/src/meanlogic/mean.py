"""Means of finite structures along a probability charge.

Given factors M_1..M_n sharing a signature and a charge on their index, the
mean has raw tuples (one element per factor) with the pseudo-distance
integral of coordinate distances (of their p-th powers for ambient p > 1),
quotiented by exact distance zero.  Constants and functions act through
coordinates; relations average.  Taking all factors equal gives the
powermean of a structure by a charge; a two-point charge gives the convex
combination of two structures.

All construction arithmetic is exact.  For p > 1 the quotient metric is
irrational, so the base structure keeps the exact p-power table and a
float-accurate rational root approximation (see structure module).

The checkers return CheckReport values rather than raising: a failed row is
a counterexample to the property under test, which callers (and the CLI
exit code) treat differently from invalid input.
"""

import itertools
import math
import os
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernel
from .charge import Charge, label_text
from .charge import product as charge_product
from .errors import CapExceededError, DomainError
from .formula import free_variables, require_linear, unparse
from .rationals import root_approx
from .structure import FiniteStructure, as_pnorm

_INT64_SAFE = 1 << 62
_DEFAULT_CAP = 4096


@dataclass(frozen=True)
class CheckRow:
    label: str
    lhs: object
    rhs: object
    ok: bool


@dataclass(frozen=True)
class CheckReport:
    name: str
    rows: tuple

    @property
    def ok(self):
        return all(row.ok for row in self.rows)

    def counterexample(self):
        return next((row for row in self.rows if not row.ok), None)


@dataclass(frozen=True)
class MeanStructure:
    base: FiniteStructure
    factors: tuple
    charge: Charge
    pnorm: object
    class_map: dict
    representatives: tuple
    class_members: tuple

    @property
    def size(self):
        return self.base.size

    def class_of(self, raw):
        raw = tuple(raw)
        try:
            return self.class_map[raw]
        except KeyError:
            raise DomainError("raw tuple %r is not in the product space" % (raw,)) from None

    def raw_label(self, raw):
        return "(%s)" % ",".join(
            factor.universe[e] for factor, e in zip(self.factors, raw)
        )


def _tuple_cap(cap):
    if cap is not None:
        return int(cap)
    return int(os.environ.get("MEANLOGIC_CAP", str(_DEFAULT_CAP)))


def _distance_oracle(factors, weights, pn, tuples):
    """Returns dist(i, j) -> exact scaled int distance and its denominator.

    Fast path: per-factor weighted int64 tables plus a full numpy matrix.
    Falls back to on-demand Fraction sums when bounds or size forbid it.
    """
    mats = []
    denom = 1
    for factor, w in zip(factors, weights):
        if w == 0:
            mats.append(None)
            continue
        size = factor.size
        mat = [
            [w * factor.dist_power(i, j, pn.p) for j in range(size)]
            for i in range(size)
        ]
        mats.append(mat)
        for row in mat:
            for v in row:
                denom = denom * v.denominator // math.gcd(denom, v.denominator)

    max_entry = 0
    for mat in mats:
        if mat is None:
            continue
        max_entry += max(int(v * denom) for row in mat for v in row)
    count = len(tuples)
    if max_entry < _INT64_SAFE and count <= 2048:
        total = np.zeros((count, count), dtype=np.int64)
        tup = np.array(tuples, dtype=np.int64).reshape(count, len(factors))
        for pos, mat in enumerate(mats):
            if mat is None:
                continue
            scaled = np.array(
                [[int(v * denom) for v in row] for row in mat], dtype=np.int64
            )
            coord = tup[:, pos]
            total += scaled[coord[:, None], coord[None, :]]

        def dist(i, j):
            return int(total[i, j])

        return dist, denom

    cache = {}

    def dist(i, j):
        key = (i, j) if i <= j else (j, i)
        if key not in cache:
            value = Fraction(0)
            for pos, mat in enumerate(mats):
                if mat is not None:
                    value += mat[tuples[i][pos]][tuples[j][pos]]
            cache[key] = int(value * denom)
        return cache[key]

    return dist, denom


def ultramean(factors, charge, p=1, cap=None):
    """Quotient mean of the factors along the charge."""
    pn = as_pnorm(p)
    factors = tuple(factors)
    if not factors:
        raise DomainError("need at least one factor")
    if len(factors) != charge.size:
        raise DomainError(
            "charge index size %d != %d factors" % (charge.size, len(factors))
        )
    signature = factors[0].signature
    for factor in factors[1:]:
        if factor.signature != signature:
            raise DomainError("factors must share one signature")
    for factor in factors:
        if factor.metric_power is not None and pn.p % factor.power_p != 0:
            raise DomainError(
                "factor carries a p=%d power metric; exact evaluation at p=%d "
                "is impossible" % (factor.power_p, pn.p)
            )
    limit = _tuple_cap(cap)
    count = 1
    for factor in factors:
        count *= factor.size
    if count > limit:
        raise CapExceededError(
            "raw tuple space has %d points, cap is %d" % (count, limit)
        )

    tuples = list(itertools.product(*[range(f.size) for f in factors]))
    dist, denom = _distance_oracle(factors, charge.weights, pn, tuples)

    rep_positions = []
    class_map = {}
    members = []
    for t_i, raw in enumerate(tuples):
        hit = None
        for c_i, r_i in enumerate(rep_positions):
            if dist(t_i, r_i) == 0:
                hit = c_i
                break
        if hit is None:
            hit = len(rep_positions)
            rep_positions.append(t_i)
            members.append([])
        class_map[raw] = hit
        members[hit].append(raw)

    nclasses = len(rep_positions)
    power = [
        [Fraction(dist(rep_positions[i], rep_positions[j]), denom) for j in range(nclasses)]
        for i in range(nclasses)
    ]
    if pn.p == 1:
        metric = power
        metric_power = None
    else:
        metric = [
            [Fraction(root_approx(v, pn.p)) if v else Fraction(0) for v in row]
            for row in power
        ]
        metric_power = tuple(tuple(row) for row in power)

    universe = tuple("q%d" % i for i in range(nclasses))
    reps = tuple(tuples[i] for i in rep_positions)

    constants = {}
    for name in signature.constants:
        raw = tuple(factor.constants[name] for factor in factors)
        constants[name] = class_map[raw]

    functions = {}
    for fsym in signature.functions:
        table = []
        for args in itertools.product(range(nclasses), repeat=fsym.arity):
            arg_reps = [reps[c] for c in args]
            image = tuple(
                factor.fvalue(fsym.name, tuple(rep[pos] for rep in arg_reps))
                for pos, factor in enumerate(factors)
            )
            table.append(class_map[image])
        functions[fsym.name] = tuple(table)

    relations = {}
    for rsym in signature.relations:
        table = []
        for args in itertools.product(range(nclasses), repeat=rsym.arity):
            arg_reps = [reps[c] for c in args]
            value = Fraction(0)
            for pos, (factor, w) in enumerate(zip(factors, charge.weights)):
                if w != 0:
                    value += w * factor.rvalue(
                        rsym.name, tuple(rep[pos] for rep in arg_reps)
                    )
            table.append(value)
        relations[rsym.name] = tuple(table)

    base = FiniteStructure(
        signature=signature,
        universe=universe,
        metric=tuple(tuple(row) for row in metric),
        constants=constants,
        functions=functions,
        relations=relations,
        metric_power=metric_power,
        power_p=pn.p,
    )
    return MeanStructure(
        base=base,
        factors=factors,
        charge=charge,
        pnorm=pn,
        class_map=class_map,
        representatives=reps,
        class_members=tuple(tuple(m) for m in members),
    )


def powermean(structure, charge, p=1, cap=None):
    """Mean of identical factors: one per charge index point."""
    return ultramean((structure,) * charge.size, charge, p, cap)


def convex_combination(eps, first, second, p=1, cap=None):
    """eps*first + (1-eps)*second as a two-factor mean."""
    eps = Fraction(eps)
    if not 0 <= eps <= 1:
        raise DomainError("mixing weight must lie in [0, 1]")
    charge = Charge(("0", "1"), (eps, 1 - eps))
    return ultramean((first, second), charge, p, cap)


def mean_to_json(mean):
    """Sidecar payload: class membership, the charge, the exponent."""
    classes = {}
    for c, member_list in enumerate(mean.class_members):
        classes["q%d" % c] = [
            [factor.universe[e] for factor, e in zip(mean.factors, raw)]
            for raw in member_list
        ]
    return {"classes": classes, "charge": mean.charge.to_json(), "p": mean.pnorm.p}


def _assignment_space(mean, nvars, max_cases, seed):
    """Assignments as tuples of raw tuples, exhaustive or seeded sample."""
    tuples = list(mean.class_map)
    total = len(tuples) ** nvars
    if max_cases is None or total <= max_cases:
        return [tuple(combo) for combo in itertools.product(tuples, repeat=nvars)]
    rng = random.Random(seed)
    seen = set()
    out = []
    while len(out) < max_cases:
        combo = tuple(tuples[rng.randrange(len(tuples))] for _ in range(nvars))
        if combo not in seen:
            seen.add(combo)
            out.append(combo)
    return out


def verify_mean_theorem(mean, formula, cases=None, max_cases=50, seed=0):
    """Mean value vs charge integral of factor values, case by case.

    The formula must be p-linear for the ambient p (NotLinearError names the
    offending connective otherwise).  Cases are tuples of raw tuples, one
    per free variable; by default all of them up to max_cases, then a seeded
    sample.
    """
    require_linear(formula, mean.pnorm)
    names = free_variables(formula)
    if cases is None:
        cases = _assignment_space(mean, len(names), max_cases, seed)
    else:
        cases = [tuple(tuple(raw) for raw in case) for case in cases]

    base_envs = [tuple(mean.class_of(raw) for raw in case) for case in cases]
    lhs_values = kernel.evaluate_batch(formula, mean.base, base_envs, mean.pnorm)

    rhs_values = [Fraction(0)] * len(cases)
    for pos, (factor, w) in enumerate(zip(mean.factors, mean.charge.weights)):
        if w == 0:
            continue
        envs = [tuple(raw[pos] for raw in case) for case in cases]
        for k, value in enumerate(kernel.evaluate_batch(formula, factor, envs, mean.pnorm)):
            rhs_values[k] += w * value

    rows = []
    for case, lhs, rhs in zip(cases, lhs_values, rhs_values):
        label = " ".join(mean.raw_label(raw) for raw in case) or "sentence"
        rows.append(CheckRow(label, lhs, rhs, lhs == rhs))
    return CheckReport("mean-theorem", tuple(rows))


def _interpretation_rows(mean, target, to_target, from_target=None):
    """Rows checking that class -> target is a full isomorphism.

    to_target maps a mean class index to a target element index.
    """
    rows = []
    base = mean.base
    n = base.size
    image = [to_target(c) for c in range(n)]
    bijective = n == target.size and len(set(image)) == n
    rows.append(CheckRow("classes", n, target.size, bijective))
    if not bijective:
        return rows

    ok = True
    witness = None
    for i in range(n):
        for j in range(n):
            lhs = base.dist_power(i, j, mean.pnorm.p)
            rhs = target.dist_power(image[i], image[j], mean.pnorm.p)
            if lhs != rhs:
                ok = False
                witness = (i, j, lhs, rhs)
                break
        if not ok:
            break
    rows.append(
        CheckRow(
            "metric",
            "ok" if ok else witness[2],
            "ok" if ok else witness[3],
            ok,
        )
    )

    for name in base.signature.constants:
        lhs = image[base.constants[name]]
        rhs = target.constants[name]
        rows.append(CheckRow("constant %s" % name, lhs, rhs, lhs == rhs))
    for fsym in base.signature.functions:
        ok = True
        for args in itertools.product(range(n), repeat=fsym.arity):
            lhs = image[base.fvalue(fsym.name, args)]
            rhs = target.fvalue(fsym.name, tuple(image[a] for a in args))
            if lhs != rhs:
                ok = False
                break
        rows.append(CheckRow("function %s" % fsym.name, "ok", "ok", ok))
    for rsym in base.signature.relations:
        ok = True
        for args in itertools.product(range(n), repeat=rsym.arity):
            lhs = base.rvalue(rsym.name, args)
            rhs = target.rvalue(rsym.name, tuple(image[a] for a in args))
            if lhs != rhs:
                ok = False
                break
        rows.append(CheckRow("relation %s" % rsym.name, "ok", "ok", ok))
    return rows


def los_pointmass_check(factors, at, fragment, p=1, cap=None):
    """Point-mass mean vs the selected factor: isomorphism plus fragment.

    fragment is a list of formulas (CL connectives welcome); each is
    compared on the mean and on factors[at] across all assignments through
    the canonical coordinate map.
    """
    factors = tuple(factors)
    if not 0 <= at < len(factors):
        raise DomainError("point-mass position %d out of range" % at)
    index = tuple(str(i) for i in range(len(factors)))
    charge = Charge.point_mass(index, index[at])
    mean = ultramean(factors, charge, p, cap)
    target = factors[at]

    rows = _interpretation_rows(mean, target, lambda c: mean.representatives[c][at])
    iso_ok = all(r.ok for r in rows)

    if iso_ok:
        classes = list(range(mean.size))
        for formula in fragment:
            names = free_variables(formula)
            assignments = list(itertools.product(classes, repeat=len(names)))
            mean_vals = kernel.evaluate_batch(formula, mean.base, assignments, p)
            target_envs = [
                tuple(mean.representatives[c][at] for c in combo)
                for combo in assignments
            ]
            target_vals = kernel.evaluate_batch(formula, target, target_envs, p)
            for combo, lhs, rhs in zip(assignments, mean_vals, target_vals):
                label = unparse(formula)
                if combo:
                    label += " @ (%s)" % ",".join(
                        mean.base.universe[c] for c in combo
                    )
                rows.append(CheckRow(label, lhs, rhs, lhs == rhs))
    return CheckReport("pointmass", tuple(rows))


def diagonal_check(structure, charge, fragment, p=1, cap=None):
    """Diagonal embedding into the powermean preserves every fragment value."""
    mean = powermean(structure, charge, p, cap)
    diag = {
        e: mean.class_map[(e,) * charge.size] for e in range(structure.size)
    }
    rows = []
    for formula in fragment:
        names = free_variables(formula)
        assignments = list(itertools.product(range(structure.size), repeat=len(names)))
        source_vals = kernel.evaluate_batch(formula, structure, assignments, p)
        mean_envs = [tuple(diag[e] for e in combo) for combo in assignments]
        mean_vals = kernel.evaluate_batch(formula, mean.base, mean_envs, p)
        for combo, lhs, rhs in zip(assignments, source_vals, mean_vals):
            label = unparse(formula)
            if combo:
                label += " @ (%s)" % ",".join(structure.universe[e] for e in combo)
            rows.append(CheckRow(label, lhs, rhs, lhs == rhs))
    return CheckReport("diagonal", tuple(rows))


def compose_check(structure, mu, nu, fragment, p=1, cap=None, max_cases=None, seed=0):
    """Powermean along a product charge vs the iterated powermean.

    Builds M^(mu x nu) and (M^mu)^nu, the canonical class map between them,
    and checks it is a bijection commuting with the metric (p-power side
    exact; roots agree to 1e-9 for p > 1), all interpretations, and every
    fragment formula on all (or max_cases sampled) assignments.
    """
    pn = as_pnorm(p)
    joint = charge_product(mu, nu)
    left = ultramean((structure,) * joint.size, joint, pn, cap)
    inner = powermean(structure, mu, pn, cap)
    outer = powermean(inner.base, nu, pn, cap)

    nj = nu.size
    ni = mu.size
    mapping = {}
    consistent = True
    witness = None
    for raw, cls in left.class_map.items():
        inner_classes = tuple(
            inner.class_map[tuple(raw[i * nj + j] for i in range(ni))]
            for j in range(nj)
        )
        target = outer.class_map[inner_classes]
        if cls in mapping and mapping[cls] != target:
            consistent = False
            witness = raw
        mapping[cls] = target

    rows = [
        CheckRow(
            "map well-defined",
            "ok" if consistent else left.raw_label(witness),
            "ok",
            consistent,
        )
    ]
    if consistent:
        rows += _interpretation_rows(left, outer.base, lambda c: mapping[c])
        if pn.p > 1:
            worst = 0.0
            n = left.size
            for i in range(n):
                for j in range(n):
                    worst = max(
                        worst,
                        abs(
                            float(left.base.metric[i][j])
                            - float(outer.base.metric[mapping[i]][mapping[j]])
                        ),
                    )
            rows.append(CheckRow("root metric drift", worst, 1e-9, worst <= 1e-9))
    if all(r.ok for r in rows):
        classes = list(range(left.size))
        for formula in fragment:
            names = free_variables(formula)
            assignments = list(itertools.product(classes, repeat=len(names)))
            if max_cases is not None and len(assignments) > max_cases:
                rng = random.Random(seed)
                assignments = rng.sample(assignments, max_cases)
            left_vals = kernel.evaluate_batch(formula, left.base, assignments, pn)
            outer_envs = [tuple(mapping[c] for c in combo) for combo in assignments]
            outer_vals = kernel.evaluate_batch(formula, outer.base, outer_envs, pn)
            for combo, lhs, rhs in zip(assignments, left_vals, outer_vals):
                label = unparse(formula)
                if combo:
                    label += " @ (%s)" % ",".join(
                        left.base.universe[c] for c in combo
                    )
                rows.append(CheckRow(label, lhs, rhs, lhs == rhs))
    return CheckReport("compose", tuple(rows))
