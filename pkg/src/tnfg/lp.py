"""Linear programs: a small builder, a HiGHS-backed solver and an exact
rational simplex used as an independent reference.

All problems are maximisation problems over bounded variables with
``<=``, ``=`` and ``>=`` rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

EPS_FEAS = 1e-7
SENSES = ("<=", "=", ">=")


class LpError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpProblem:
    c: np.ndarray            # objective, maximised
    A: sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    names: tuple[str, ...]

    @property
    def n_vars(self) -> int:
        return len(self.c)

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str              # optimal | infeasible | unbounded
    x: np.ndarray | None = None
    objective: float | None = None


class LpBuilder:
    """Incremental construction of an :class:`LpProblem`."""

    def __init__(self):
        self._c = []
        self._lo = []
        self._hi = []
        self._names = []
        self._rows = []
        self._cols = []
        self._vals = []
        self._senses = []
        self._rhs = []

    def add_var(self, name: str = "", lo: float = 0.0, hi: float = math.inf, obj: float = 0.0) -> int:
        if lo > hi:
            raise ValueError(f"inconsistent bounds for {name}: {lo} > {hi}")
        self._c.append(float(obj))
        self._lo.append(float(lo))
        self._hi.append(float(hi))
        self._names.append(name or f"v{len(self._names)}")
        return len(self._c) - 1

    def set_objective(self, coeffs: Mapping[int, float]):
        self._c = [0.0] * len(self._c)
        for j, v in coeffs.items():
            self._c[j] += float(v)

    def add_constraint(self, coeffs: Mapping[int, float], sense: str, rhs: float) -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown relation {sense!r}")
        r = len(self._senses)
        for j, v in coeffs.items():
            if v:
                if not math.isfinite(v):
                    raise ValueError("non-finite coefficient")
                self._rows.append(r)
                self._cols.append(j)
                self._vals.append(float(v))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        return r

    def build(self) -> LpProblem:
        n = len(self._c)
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)), shape=(len(self._senses), n))
        return LpProblem(np.array(self._c), A, tuple(self._senses), np.array(self._rhs),
                         np.array(self._lo), np.array(self._hi), tuple(self._names))


def solve_lp(problem: LpProblem) -> LpSolution:
    """Solve with the HiGHS dual simplex; returns a basic optimal solution."""
    senses = np.array(problem.senses)
    A = problem.A
    ub_rows = np.flatnonzero(senses != "=")
    eq_rows = np.flatnonzero(senses == "=")
    sign = np.where(senses[ub_rows] == ">=", -1.0, 1.0)
    A_ub = sp.diags(sign) @ A[ub_rows] if len(ub_rows) else None
    b_ub = sign * problem.rhs[ub_rows] if len(ub_rows) else None
    A_eq = A[eq_rows] if len(eq_rows) else None
    b_eq = problem.rhs[eq_rows] if len(eq_rows) else None
    bounds = np.column_stack([np.where(np.isinf(problem.lo), -np.inf, problem.lo),
                              np.where(np.isinf(problem.hi), np.inf, problem.hi)])
    res = linprog(-problem.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=bounds, method="highs-ds")
    if res.status == 2:
        return LpSolution("infeasible")
    if res.status == 3:
        return LpSolution("unbounded")
    if res.status != 0:
        raise LpError(res.message)
    x = np.asarray(res.x, dtype=float)
    return LpSolution("optimal", x, float(problem.c @ x))


def check_solution(problem: LpProblem, x: np.ndarray, tol: float = EPS_FEAS) -> float:
    """Largest bound or row violation of ``x``."""
    worst = float(max(np.max(problem.lo - x, initial=0.0), np.max(x - problem.hi, initial=0.0)))
    act = problem.A @ x
    for r, sense in enumerate(problem.senses):
        d = act[r] - problem.rhs[r]
        v = d if sense == "<=" else (-d if sense == ">=" else abs(d))
        worst = max(worst, v)
    return worst


# --------------------------------------------------------------------------
# exact reference

def solve_lp_exact(problem: LpProblem) -> LpSolution:
    """Two-phase tableau simplex in rational arithmetic with Bland's rule.

    Meant for small problems (tens of variables) as an independent check.
    Free variables are split, finite upper bounds become rows.
    """
    n = problem.n_vars
    A = problem.A.toarray()
    F = Fraction
    # column map: x_j = lo_j + u_j   or  x_j = p_j - q_j when lo is -inf
    cols = []          # (orig var, sign)
    shift = [F(0)] * n
    for j in range(n):
        lo, hi = problem.lo[j], problem.hi[j]
        if math.isinf(lo):
            cols.append((j, 1))
            cols.append((j, -1))
        else:
            shift[j] = F(lo)
            cols.append((j, 1))
    rows = []
    for r in range(problem.n_rows):
        coef = [F(0)] * len(cols)
        for k, (j, sgn) in enumerate(cols):
            if A[r, j]:
                coef[k] = sgn * F(A[r, j])
        rhs = F(problem.rhs[r]) - sum((F(A[r, j]) * shift[j] for j in range(n) if A[r, j]), F(0))
        rows.append((coef, problem.senses[r], rhs))
    for j in range(n):
        hi = problem.hi[j]
        if not math.isinf(hi):
            if math.isinf(problem.lo[j]):
                coef = [F(0)] * len(cols)
                for k, (jj, sgn) in enumerate(cols):
                    if jj == j:
                        coef[k] = F(sgn)
                rows.append((coef, "<=", F(hi)))
            else:
                coef = [F(0)] * len(cols)
                coef[cols.index((j, 1))] = F(1)
                rows.append((coef, "<=", F(hi) - shift[j]))
    obj = [F(0)] * len(cols)
    for k, (j, sgn) in enumerate(cols):
        obj[k] = sgn * F(problem.c[j])
    obj_const = sum((F(problem.c[j]) * shift[j] for j in range(n)), F(0))

    status, u = _tableau_max(obj, rows, len(cols))
    if status != "optimal":
        return LpSolution(status)
    x = np.zeros(n)
    exact = list(shift)
    for k, (j, sgn) in enumerate(cols):
        exact[j] += sgn * u[k]
    x = np.array([float(v) for v in exact])
    value = sum((F(problem.c[j]) * exact[j] for j in range(n)), F(0))
    sol = LpSolution("optimal", x, float(value))
    sol.exact_objective = value
    return sol


def _tableau_max(obj, rows, nv):
    F = Fraction
    # slack / surplus / artificial columns
    table = []
    basis = []
    n_slack = sum(1 for _, s, _ in rows if s != "=")
    m = len(rows)
    total = nv + n_slack + m      # one artificial per row (unused ones stay zero)
    art_start = nv + n_slack
    si = nv
    for r, (coef, sense, rhs) in enumerate(rows):
        row = list(coef) + [F(0)] * (n_slack + m)
        if sense == "<=":
            row[si] = F(1)
            si += 1
        elif sense == ">=":
            row[si] = F(-1)
            si += 1
        b = rhs
        if b < 0:
            row = [-v for v in row]
            b = -b
        slack_col = si - 1 if sense != "=" else None
        if slack_col is not None and row[slack_col] == 1:
            basis.append(slack_col)
        else:
            row[art_start + r] = F(1)
            basis.append(art_start + r)
        table.append(row + [b])
    artificials = [art_start + r for r in range(m) if basis[r] == art_start + r]
    if artificials:
        phase1 = [F(0)] * total
        for a in artificials:
            phase1[a] = F(-1)
        status = _pivot_loop(table, basis, phase1, total)
        val = sum((phase1[basis[r]] * table[r][-1] for r in range(m)), F(0))
        if val < 0:
            return "infeasible", None
        # drive remaining artificials out of the basis
        for r in range(m):
            if basis[r] >= art_start:
                for k in range(art_start):
                    if table[r][k] != 0:
                        _pivot(table, basis, r, k)
                        break
    allowed = art_start
    cost = list(obj) + [F(0)] * (total - nv)
    status = _pivot_loop(table, basis, cost, allowed)
    if status != "optimal":
        return status, None
    u = [F(0)] * nv
    for r in range(m):
        if basis[r] < nv:
            u[basis[r]] = table[r][-1]
    return "optimal", u


def _pivot(table, basis, r, k):
    row = table[r]
    p = row[k]
    table[r] = row = [v / p for v in row]
    for i in range(len(table)):
        if i != r and table[i][k] != 0:
            f = table[i][k]
            other = table[i]
            table[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = k


def _pivot_loop(table, basis, cost, allowed):
    m = len(table)
    while True:
        in_basis = set(basis)
        # reduced cost of column k for maximisation: c_k - c_B B^-1 A_k
        enter = None
        for k in range(allowed):
            if k in in_basis:
                continue
            rc = cost[k] - sum((cost[basis[r]] * table[r][k] for r in range(m)), Fraction(0))
            if rc > 0:
                enter = k
                break
        if enter is None:
            return "optimal"
        best = None
        for r in range(m):
            a = table[r][enter]
            if a > 0:
                ratio = table[r][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[r] < basis[best[1]]):
                    best = (ratio, r)
        if best is None:
            return "unbounded"
        _pivot(table, basis, best[1], enter)


# --------------------------------------------------------------------------
# text dump

def write_lp(problem: LpProblem, path) -> None:
    """Write the problem in CPLEX LP text format."""

    def term(coef, name, first):
        sign = "-" if coef < 0 else ("" if first else "+")
        mag = abs(coef)
        c = "" if mag == 1 else f"{mag:.17g} "
        return f"{sign} {c}{name}".strip() if first else f"{sign} {c}{name}"

    names = [n.replace(" ", "_") for n in problem.names]
    lines = ["\\ generated by tnfg", "Maximize", " obj:"]
    obj_terms = [term(v, names[j], i == 0) for i, (j, v) in
                 enumerate((j, v) for j, v in enumerate(problem.c) if v)]
    lines[-1] += " " + (" ".join(obj_terms) if obj_terms else "0 " + names[0])
    lines.append("Subject To")
    A = problem.A.tocsr()
    for r in range(problem.n_rows):
        start, end = A.indptr[r], A.indptr[r + 1]
        terms = [term(v, names[j], k == 0) for k, (j, v) in
                 enumerate(zip(A.indices[start:end], A.data[start:end]))]
        body = " ".join(terms) if terms else f"0 {names[0]}"
        lines.append(f" c{r}: {body} {problem.senses[r]} {problem.rhs[r]:.17g}")
    lines.append("Bounds")
    for j, name in enumerate(names):
        lo, hi = problem.lo[j], problem.hi[j]
        lo_s = "-inf" if math.isinf(lo) else f"{lo:.17g}"
        hi_s = "+inf" if math.isinf(hi) else f"{hi:.17g}"
        lines.append(f" {lo_s} <= {name} <= {hi_s}")
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
