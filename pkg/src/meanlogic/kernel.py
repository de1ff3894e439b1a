"""Batch formula evaluation: program compiler and backend selection.

Every connective in the logic is a rational-affine or lattice operation, so
a formula evaluated on one fixed structure has a static common denominator
per AST node, computable at compile time.  A formula therefore compiles to
a small postorder program over scaled integers: tables hold premultiplied
numerators, sums carry least-common-multiple lift factors, sup/inf loop
over the universe.  The root value divided by the root denominator is the
exact rational result.

Two interpreters run the same program: a Cython one (meanlogic._fasteval,
int64 arithmetic, used when every intermediate provably fits) and a pure
Python one (unbounded ints).  Selection happens per call; set
MEANLOGIC_PURE=1 to force the Python path.  Results are identical.
"""

import math
import os
from dataclasses import dataclass
from fractions import Fraction

from . import _kernel_py
from .errors import DomainError, EvalError
from .formula import (
    Apply,
    Const,
    ConstRef,
    Formula,
    Inf,
    Join,
    Meet,
    MetricAtom,
    RelAtom,
    Scale,
    Sum,
    Sup,
    Var,
    free_variables,
)
from .structure import as_pnorm

try:
    from . import _fasteval
except ImportError:  # extension not built; pure Python fallback
    _fasteval = None

T_VAR, T_ELEM, T_APPLY = 0, 1, 2
F_CONST, F_TABLE, F_SCALE, F_ADD, F_MIN, F_MAX, F_SUP, F_INF = 3, 4, 5, 6, 7, 8, 9, 10

_INT64_SAFE = 1 << 62


def compiled_available():
    return _fasteval is not None


def backend_name():
    if _fasteval is not None and os.environ.get("MEANLOGIC_PURE", "") != "1":
        return "compiled"
    return "python"


@dataclass
class Program:
    """Postorder instruction list plus scaled tables for one (formula, structure)."""

    op: list
    a: list
    b: list
    c: list
    k1: list
    k2: list
    tables: list
    args: list
    denominator: int
    nslots: int
    var_slots: dict
    universe: int
    fits64: bool

    def free_slot_order(self):
        return sorted(self.var_slots, key=self.var_slots.get)


class _Compiler:
    def __init__(self, structure, pn):
        self.s = structure
        self.pn = pn
        self.op = []
        self.a = []
        self.b = []
        self.c = []
        self.k1 = []
        self.k2 = []
        self.tables = []
        self.args = []
        self.fits64 = True

    def emit(self, op, a=0, b=0, c=0, k1=0, k2=0):
        self.op.append(op)
        self.a.append(a)
        self.b.append(b)
        self.c.append(c)
        self.k1.append(k1)
        self.k2.append(k2)
        return len(self.op) - 1

    def check(self, bound):
        if bound >= _INT64_SAFE:
            self.fits64 = False
        return bound

    def add_table(self, values):
        offset = len(self.tables)
        self.tables.extend(values)
        return offset

    def add_args(self, node_ids):
        offset = len(self.args)
        self.args.extend(node_ids)
        return offset

    def term(self, term, scopes):
        if isinstance(term, Var):
            for scope in reversed(scopes):
                if term.name in scope:
                    return self.emit(T_VAR, a=scope[term.name])
            raise EvalError("variable %r is not assigned" % term.name)
        if isinstance(term, ConstRef):
            try:
                return self.emit(T_ELEM, a=self.s.constants[term.name])
            except KeyError:
                raise EvalError("constant %r is not interpreted here" % term.name) from None
        if isinstance(term, Apply):
            ids = [self.term(t, scopes) for t in term.args]
            if term.func not in self.s.functions:
                raise EvalError("function %r is not interpreted here" % term.func)
            table = self.add_table(self.s.functions[term.func])
            return self.emit(T_APPLY, a=self.add_args(ids), b=len(ids), c=table)
        raise DomainError("not a term: %r" % (term,))

    def formula(self, f, scopes, depth):
        """Returns (node id, denominator, bound on |scaled value|)."""
        if isinstance(f, Const):
            d = f.value.denominator
            v = f.value.numerator
            return self.emit(F_CONST, k1=v), d, self.check(abs(v))
        if isinstance(f, MetricAtom):
            left = self.term(f.left, scopes)
            right = self.term(f.right, scopes)
            size = self.s.size
            entries = [
                self.s.dist_power(i, j, f.exponent)
                for i in range(size)
                for j in range(size)
            ]
            denom = 1
            for e in entries:
                denom = denom * e.denominator // math.gcd(denom, e.denominator)
            scaled = [int(e * denom) for e in entries]
            bound = self.check(max((abs(x) for x in scaled), default=0))
            table = self.add_table(scaled)
            node = self.emit(F_TABLE, a=self.add_args([left, right]), b=2, c=table)
            return node, denom, bound
        if isinstance(f, RelAtom):
            ids = [self.term(t, scopes) for t in f.args]
            if f.name not in self.s.relations:
                raise EvalError("relation %r is not interpreted here" % f.name)
            entries = self.s.relations[f.name]
            denom = 1
            for e in entries:
                denom = denom * e.denominator // math.gcd(denom, e.denominator)
            scaled = [int(e * denom) for e in entries]
            bound = self.check(max((abs(x) for x in scaled), default=0))
            table = self.add_table(scaled)
            node = self.emit(F_TABLE, a=self.add_args(ids), b=len(ids), c=table)
            return node, denom, bound
        if isinstance(f, Scale):
            child, denom, bound = self.formula(f.body, scopes, depth)
            node = self.emit(F_SCALE, a=child, k1=f.factor.numerator)
            return (
                node,
                denom * f.factor.denominator,
                self.check(bound * abs(f.factor.numerator)),
            )
        if isinstance(f, (Sum, Meet, Join)):
            left, dl, bl = self.formula(f.left, scopes, depth)
            right, dr, br = self.formula(f.right, scopes, depth)
            denom = dl * dr // math.gcd(dl, dr)
            k1, k2 = denom // dl, denom // dr
            op = F_ADD if isinstance(f, Sum) else (F_MIN if isinstance(f, Meet) else F_MAX)
            node = self.emit(op, a=left, b=right, k1=k1, k2=k2)
            if op == F_ADD:
                bound = self.check(bl * k1 + br * k2)
            else:
                bound = self.check(max(bl * k1, br * k2))
            return node, denom, bound
        if isinstance(f, (Sup, Inf)):
            slot = self.base_slots + depth
            scopes.append({f.var: slot})
            child, denom, bound = self.formula(f.body, scopes, depth + 1)
            scopes.pop()
            node = self.emit(F_SUP if isinstance(f, Sup) else F_INF, a=child, b=slot)
            return node, denom, bound
        raise DomainError("not a formula: %r" % (f,))


def _quantifier_depth(f):
    if isinstance(f, (Const, MetricAtom, RelAtom)):
        return 0
    if isinstance(f, Scale):
        return _quantifier_depth(f.body)
    if isinstance(f, (Sum, Meet, Join)):
        return max(_quantifier_depth(f.left), _quantifier_depth(f.right))
    if isinstance(f, (Sup, Inf)):
        return 1 + _quantifier_depth(f.body)
    raise DomainError("not a formula: %r" % (f,))


def compile_formula(formula, structure, p=1):
    """Compile one formula against one structure for batch evaluation."""
    pn = as_pnorm(p)
    if not isinstance(formula, Formula):
        raise DomainError("not a formula: %r" % (formula,))
    comp = _Compiler(structure, pn)
    names = free_variables(formula)
    var_slots = {name: i for i, name in enumerate(names)}
    comp.base_slots = len(names)
    root, denom, _ = comp.formula(formula, [dict(var_slots)], 0)
    nslots = len(names) + _quantifier_depth(formula)
    return Program(
        op=comp.op,
        a=comp.a,
        b=comp.b,
        c=comp.c,
        k1=comp.k1,
        k2=comp.k2,
        tables=comp.tables,
        args=comp.args,
        denominator=denom,
        nslots=max(nslots, 1),
        var_slots=var_slots,
        universe=structure.size,
        fits64=comp.fits64,
    )


def _env_rows(program, assignments, structure):
    rows = []
    order = program.free_slot_order()
    for assignment in assignments:
        env = [0] * program.nslots
        if isinstance(assignment, dict):
            missing = [n for n in order if n not in assignment]
            if missing:
                raise EvalError("variable %r is not assigned" % missing[0])
            for name in order:
                env[program.var_slots[name]] = structure.resolve(assignment[name])
        else:
            if len(assignment) != len(order):
                raise EvalError(
                    "assignment width %d != %d free variables"
                    % (len(assignment), len(order))
                )
            for name, element in zip(order, assignment):
                env[program.var_slots[name]] = structure.resolve(element)
        rows.append(env)
    return rows


def run_program(program, assignments, structure):
    """Evaluate the program for each assignment; returns exact Fractions.

    Assignments are dicts (variable name to element) or tuples aligned with
    the formula's free variables in first-occurrence order.
    """
    rows = _env_rows(program, assignments, structure)
    if not rows:
        return []
    use_compiled = (
        _fasteval is not None
        and program.fits64
        and os.environ.get("MEANLOGIC_PURE", "") != "1"
    )
    if use_compiled:
        numerators = _fasteval.run_many(
            program.op,
            program.a,
            program.b,
            program.c,
            program.k1,
            program.k2,
            program.tables,
            program.args,
            rows,
            program.universe,
        )
    else:
        numerators = [_kernel_py.run(program, row) for row in rows]
    d = program.denominator
    return [Fraction(n, d) for n in numerators]


def evaluate_batch(formula, structure, assignments, p=1):
    """Compile and run in one go."""
    program = compile_formula(formula, structure, p)
    return run_program(program, assignments, structure)
