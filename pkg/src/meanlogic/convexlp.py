"""Exact rational linear programming via two-phase primal simplex.

Small dense problems only, which is all the package needs: convex-hull
membership of type vectors and Chebyshev fits.  All arithmetic is Fraction
arithmetic; pivoting follows Bland's rule (smallest eligible index enters,
min-ratio ties broken by smallest basic index), so runs are deterministic
and cycling is impossible.
"""

from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

_RELATIONS = ("<=", ">=", "=")


@dataclass(frozen=True)
class LinearProgram:
    """min/max of objective . x subject to rows of (coeffs, relation, rhs).

    nonneg[j] marks x_j >= 0; other variables are free.
    """

    objective: tuple
    rows: tuple
    sense: str = "min"
    nonneg: tuple = None

    def __post_init__(self):
        object.__setattr__(
            self, "objective", tuple(Fraction(c) for c in self.objective)
        )
        if self.sense not in ("min", "max"):
            raise DomainError("sense must be 'min' or 'max'")
        n = len(self.objective)
        rows = []
        for row in self.rows:
            coeffs, relation, rhs = row
            coeffs = tuple(Fraction(c) for c in coeffs)
            if len(coeffs) != n:
                raise DomainError("constraint width %d != %d variables" % (len(coeffs), n))
            if relation not in _RELATIONS:
                raise DomainError("relation must be one of %s" % (_RELATIONS,))
            rows.append((coeffs, relation, Fraction(rhs)))
        object.__setattr__(self, "rows", tuple(rows))
        nonneg = self.nonneg
        if nonneg is None:
            nonneg = (True,) * n
        nonneg = tuple(bool(b) for b in nonneg)
        if len(nonneg) != n:
            raise DomainError("nonneg flags must cover every variable")
        object.__setattr__(self, "nonneg", nonneg)


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: object = None
    assignment: tuple = None


def _pivot(tableau, basis, row, col):
    pivot = tableau[row][col]
    tableau[row] = [x / pivot for x in tableau[row]]
    for r in range(len(tableau)):
        if r != row and tableau[r][col] != 0:
            factor = tableau[r][col]
            tableau[r] = [a - factor * b for a, b in zip(tableau[r], tableau[row])]
    if row < len(basis):
        basis[row] = col


def _run_simplex(tableau, basis, ncols):
    """Iterate to optimality on the current objective row (the last row).

    Returns "optimal" or "unbounded".  The objective row holds reduced
    costs; its rhs entry is minus the current objective value.
    """
    m = len(basis)
    while True:
        obj = tableau[m]
        col = next((j for j in range(ncols) if obj[j] < 0), None)
        if col is None:
            return "optimal"
        best = None
        for i in range(m):
            coeff = tableau[i][col]
            if coeff > 0:
                ratio = tableau[i][ncols] / coeff
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return "unbounded"
        _pivot(tableau, basis, best[1], col)


def solve(program):
    """Solve exactly; returns LPResult with rational value and assignment."""
    n = len(program.objective)
    sense = 1 if program.sense == "min" else -1
    cost = [sense * c for c in program.objective]

    # standard form: split free variables, add slack/surplus, force b >= 0
    columns = []  # maps standard column -> (orig var, sign) or None for slack
    std_cost = []
    for j in range(n):
        columns.append((j, 1))
        std_cost.append(cost[j])
        if not program.nonneg[j]:
            columns.append((j, -1))
            std_cost.append(-cost[j])
    body = []
    rhs = []
    for coeffs, relation, b in program.rows:
        row = []
        for j in range(n):
            row.append(coeffs[j])
            if not program.nonneg[j]:
                row.append(-coeffs[j])
        if relation == "<=":
            slack = 1
        elif relation == ">=":
            slack = -1
        else:
            slack = 0
        body.append((row, slack))
        rhs.append(b)
    nslack = sum(1 for _, s in body if s)
    ncols = len(std_cost) + nslack
    std_cost += [Fraction(0)] * nslack

    tableau = []
    slack_at = len(columns)
    for (row, slack), b in zip(body, rhs):
        full = list(row) + [Fraction(0)] * nslack
        if slack:
            full[slack_at] = Fraction(slack)
            slack_at += 1
        if b < 0:
            full = [-x for x in full]
            b = -b
        tableau.append(full + [b])

    m = len(tableau)
    # phase 1: artificial basis, minimize the artificial sum
    for i in range(m):
        for k in range(m):
            tableau[i].insert(ncols + k, Fraction(1 if k == i else 0))
    basis = [ncols + i for i in range(m)]
    obj = [Fraction(0)] * (ncols + m + 1)
    for i in range(m):
        for j in range(ncols + m + 1):
            obj[j] -= tableau[i][j]
    for k in range(m):
        obj[ncols + k] += 1
    tableau.append(obj)
    status = _run_simplex(tableau, basis, ncols + m)
    if status != "optimal" or tableau[m][ncols + m] < 0:
        return LPResult("infeasible")

    # drive leftover artificials out of the basis, drop redundant rows
    drop = []
    for i in range(m):
        if basis[i] >= ncols:
            col = next((j for j in range(ncols) if tableau[i][j] != 0), None)
            if col is None:
                drop.append(i)
            else:
                _pivot(tableau, basis, i, col)
    for i in reversed(drop):
        del tableau[i]
        del basis[i]
    m = len(basis)
    tableau = [row[:ncols] + [row[-1]] for row in tableau[:m]]

    obj = list(std_cost) + [Fraction(0)]
    for i in range(m):
        coeff = std_cost[basis[i]]
        if coeff != 0:
            obj = [a - coeff * b for a, b in zip(obj, tableau[i])]
    tableau.append(obj)
    status = _run_simplex(tableau, basis, ncols)
    if status == "unbounded":
        return LPResult("unbounded")

    values = [Fraction(0)] * ncols
    for i in range(m):
        values[basis[i]] = tableau[i][ncols]
    assignment = [Fraction(0)] * n
    for col, spec in enumerate(columns):
        var, sign = spec
        assignment[var] += sign * values[col]
    achieved = sum(c * v for c, v in zip(program.objective, assignment))
    return LPResult("optimal", achieved, tuple(assignment))
