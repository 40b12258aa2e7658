"""Deterministic linear programming: model, simplex solver, exact verification.

The solver is a two-phase tableau simplex.  Pivot rules: ``bland`` (smallest
index, the default of :func:`solve_lp`), ``dantzig`` (most negative reduced
cost) and ``hybrid`` (Dantzig, falling back to Bland while stalled at a
degenerate vertex, so it cannot cycle).  It runs on
floats (numpy) or on exact rationals (numpy object arrays of Fractions).  For
exact solves of larger models the float solver first finds a basis, which is
then certified in rational arithmetic; if certification fails the exact
simplex continues from (or restarts without) that basis.

Dual values follow the convention ``c - A^T y = d``: rows with ``>=`` carry
``y >= 0``, rows with ``<=`` carry ``y <= 0``, equality rows are free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .groups import ResourceGuardError

LE, EQ, GE = "<=", "=", ">="
OPTIMAL, INFEASIBLE, UNBOUNDED = "optimal", "infeasible", "unbounded"
BLAND, DANTZIG, HYBRID = "bland", "dantzig", "hybrid"
PIVOT_RULES = (BLAND, DANTZIG, HYBRID)
STALL_LIMIT = 50

FLOAT_TOL = 1e-9
PERTURBATION = 1e-7
DEFAULT_MAX_ENTRIES = 60_000_000
PURE_EXACT_LIMIT = 40_000


class LpError(RuntimeError):
    pass


class NumericalError(LpError):
    """Float solve failed its residual check; exact mode is advised."""


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


@dataclass
class Variable:
    name: str
    lower: Fraction | None = Fraction(0)
    upper: Fraction | None = None


@dataclass
class Row:
    coeffs: dict  # variable index -> Fraction
    rel: str
    rhs: Fraction
    name: str = ""


@dataclass
class LpModel:
    """min objective . x subject to rows and variable bounds."""

    variables: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    objective: dict = field(default_factory=dict)
    _names: dict = field(default_factory=dict, repr=False)

    def add_var(self, name: str, lower=0, upper=None) -> int:
        if name in self._names:
            raise LpError(f"duplicate variable name {name!r}")
        lo = None if lower is None else _frac(lower)
        hi = None if upper is None else _frac(upper)
        self._names[name] = len(self.variables)
        self.variables.append(Variable(name, lo, hi))
        return len(self.variables) - 1

    def var_index(self, name: str) -> int:
        return self._names[name]

    def add_row(self, coeffs: dict, rel: str, rhs, name: str = "") -> int:
        if rel not in (LE, EQ, GE):
            raise LpError(f"unknown relation {rel!r}")
        clean = {}
        for j, a in coeffs.items():
            if not 0 <= j < len(self.variables):
                raise LpError(f"row references unknown variable {j}")
            a = _frac(a)
            if a != 0:
                clean[j] = a
        self.rows.append(Row(clean, rel, _frac(rhs), name))
        return len(self.rows) - 1

    def set_objective(self, coeffs: dict) -> None:
        self.objective = {j: _frac(a) for j, a in coeffs.items() if a != 0}

    def dumps(self) -> str:
        """Plain-text sparse row format, one line per variable / row."""
        lines = ["# amencert lp model v1", f"variables {len(self.variables)}"]
        for v in self.variables:
            lo = "-inf" if v.lower is None else str(v.lower)
            hi = "inf" if v.upper is None else str(v.upper)
            lines.append(f"var {v.name} {lo} {hi}")
        lines.append("objective min " + " ".join(f"{j}:{a}" for j, a in sorted(self.objective.items())))
        lines.append(f"rows {len(self.rows)}")
        for r in self.rows:
            terms = " ".join(f"{j}:{a}" for j, a in sorted(r.coeffs.items()))
            lines.append(f"row {r.name or '-'} {r.rel} {r.rhs} | {terms}")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: str
    mode: str
    primal: list = field(default_factory=list)
    duals: list = field(default_factory=list)
    objective: object = None
    residuals: dict = field(default_factory=dict)
    pivot_rule: str = "bland"
    iterations: int = 0
    method: str = ""

    def value(self, model: LpModel, name: str):
        return self.primal[model.var_index(name)]


# ---------------------------------------------------------------------------
# standard form  A x = b, x >= 0, b >= 0


@dataclass
class _Standard:
    rows: list  # list of dict col -> Fraction
    rhs: list
    cost: list
    n_struct: int  # columns that come from variables (slacks follow)
    var_map: list  # per variable: (offset, [(col, sign)])
    row_sign: list  # +1 / -1 flip applied to each standard row
    n_model_rows: int
    const: Fraction
    natural_basis: list  # per row: slack column with coefficient +1, or None

    @property
    def n_cols(self) -> int:
        return len(self.cost)

    def columns(self) -> list:
        cols: list = [dict() for _ in range(self.n_cols)]
        for i, row in enumerate(self.rows):
            for j, a in row.items():
                cols[j][i] = a
        return cols


def _standardize(model: LpModel) -> _Standard:
    cost: list = []
    var_map = []
    bound_rows = []
    const = Fraction(0)
    for j, v in enumerate(model.variables):
        c = model.objective.get(j, Fraction(0))
        if v.lower is not None:
            col = len(cost)
            cost.append(c)
            var_map.append((v.lower, [(col, 1)]))
            const += c * v.lower
            if v.upper is not None:
                bound_rows.append(({col: Fraction(1)}, LE, v.upper - v.lower))
        elif v.upper is not None:
            col = len(cost)
            cost.append(-c)
            var_map.append((v.upper, [(col, -1)]))
            const += c * v.upper
        else:
            col = len(cost)
            cost.extend([c, -c])
            var_map.append((Fraction(0), [(col, 1), (col + 1, -1)]))
    n_struct = len(cost)
    raw = []
    for r in model.rows:
        coeffs: dict = {}
        rhs = r.rhs
        for j, a in r.coeffs.items():
            offset, cols = var_map[j]
            rhs -= a * offset
            for col, sign in cols:
                coeffs[col] = coeffs.get(col, 0) + a * sign
        raw.append(({k: a for k, a in coeffs.items() if a != 0}, r.rel, rhs))
    raw.extend(bound_rows)
    rows, rhs_out, signs, natural = [], [], [], []
    for coeffs, rel, rhs in raw:
        slack = None
        if rel != EQ:
            slack = len(cost)
            cost.append(Fraction(0))
            coeffs = dict(coeffs)
            coeffs[slack] = Fraction(1) if rel == LE else Fraction(-1)
        sign = 1
        # a zero-rhs ">=" row is flipped so its slack can start in the basis
        if rhs < 0 or (rhs == 0 and rel == GE):
            sign = -1
            coeffs = {k: -a for k, a in coeffs.items()}
            rhs = -rhs
        rows.append(coeffs)
        rhs_out.append(rhs)
        signs.append(sign)
        natural.append(slack if slack is not None and coeffs[slack] == 1 else None)
    return _Standard(rows, rhs_out, cost, n_struct, var_map, signs, len(model.rows), const, natural)


# ---------------------------------------------------------------------------
# dense tableau simplex


class _Tableau:
    """Tableau over either float64 or exact Fractions (object dtype)."""

    def __init__(self, std: _Standard, exact: bool, pivot_rule: str = "bland", perturb: bool = False) -> None:
        self.exact = exact
        self.std = std
        self.pivot_rule = pivot_rule
        m, n = len(std.rows), std.n_cols
        art_rows = [i for i in range(m) if std.natural_basis[i] is None]
        self.n = n
        self.n_art = len(art_rows)
        width = n + self.n_art + 1
        if (m + 1) * width > DEFAULT_MAX_ENTRIES:
            raise ResourceGuardError(f"LP tableau of {m + 1}x{width} exceeds the solver size guard")
        if exact:
            T = np.empty((m + 1, width), dtype=object)
            T.fill(Fraction(0))
        else:
            T = np.zeros((m + 1, width))
        conv = (lambda a: a) if exact else float
        for i, row in enumerate(std.rows):
            for j, a in row.items():
                T[i, j] = conv(a)
            T[i, -1] = conv(std.rhs[i])
        self.basis = [0] * m
        for k, i in enumerate(art_rows):
            T[i, n + k] = conv(Fraction(1))
            self.basis[i] = n + k
        for i in range(m):
            if std.natural_basis[i] is not None:
                self.basis[i] = std.natural_basis[i]
        if perturb and not exact:
            # relax slack rows by tiny deterministic amounts to break degeneracy;
            # the final basis is re-evaluated against the true right-hand side
            rng = np.random.default_rng(0)
            slack_rows = [i for i in range(m) if std.natural_basis[i] is not None]
            T[slack_rows, -1] += PERTURBATION * rng.uniform(1.0, 2.0, len(slack_rows))
        self.T = T
        self.rows_alive = list(range(m))
        self.iterations = 0
        self.tol = 0 if exact else FLOAT_TOL

    def _set_objective(self, cost: Sequence) -> None:
        T = self.T
        m = T.shape[0] - 1
        zero = Fraction(0) if self.exact else 0.0
        obj = np.empty(T.shape[1], dtype=object) if self.exact else np.zeros(T.shape[1])
        if self.exact:
            obj.fill(zero)
        for j, c in enumerate(cost):
            obj[j] = c
        for i in range(m):
            cb = obj[self.basis[i]]
            if cb != 0:
                obj = obj - cb * T[i]
        T[m] = obj

    def _pivot(self, r: int, q: int) -> None:
        T = self.T
        row = T[r] / T[r, q]
        if self.exact:
            nz_cols = np.array([j for j, v in enumerate(row) if v != 0])
        else:
            row[np.abs(row) < 1e-14] = 0.0
            nz_cols = np.nonzero(row)[0]
        T[r] = row
        rows = np.nonzero(T[:, q] != 0)[0]
        rows = rows[rows != r]
        if len(rows):
            factors = T[rows, q].copy()
            if not self.exact and 3 * len(nz_cols) > T.shape[1]:
                T[rows] -= np.outer(factors, row)
            else:
                idx = np.ix_(rows, nz_cols)
                T[idx] = T[idx] - np.outer(factors, row[nz_cols])
            if not self.exact:
                T[rows, q] = 0.0
        self.basis[r] = q
        self.iterations += 1

    def _entering(self, allowed: int, rule: str):
        d = self.T[-1, :allowed]
        tol = self.tol
        if rule == BLAND:
            idx = np.nonzero(d < -tol)[0] if not self.exact else [j for j in range(allowed) if d[j] < 0]
            return int(idx[0]) if len(idx) else None
        # dantzig: most negative reduced cost, lowest index on ties
        if not self.exact:
            q = int(np.argmin(d))
            return q if d[q] < -tol else None
        best, q = -tol, None
        for j in range(allowed):
            if d[j] < best:
                best, q = d[j], j
        return q

    def _leaving(self, q: int):
        """Minimum ratio row; ties go to the smallest basic index (Bland)."""
        T = self.T
        m = T.shape[0] - 1
        col = T[:m, q]
        if self.exact:
            best = None
            r = None
            for i in self.rows_alive:
                if col[i] > 0:
                    ratio = T[i, -1] / col[i]
                    if best is None or ratio < best or (ratio == best and self.basis[i] < self.basis[r]):
                        best, r = ratio, i
            return r
        cand = np.nonzero((col > self.tol) & self._alive_mask)[0]
        if not len(cand):
            return None
        ratios = T[cand, -1] / col[cand]
        best = ratios.min()
        tied = cand[ratios <= best + 1e-12 * max(1.0, abs(best))]
        basis = np.asarray(self.basis)
        return int(tied[np.argmin(basis[tied])])

    def run(self, allowed: int, max_iter: int) -> str:
        self._alive_mask = np.zeros(self.T.shape[0] - 1, dtype=bool)
        self._alive_mask[self.rows_alive] = True
        stalled = 0
        while True:
            if self.iterations > max_iter:
                raise NumericalError(f"simplex iteration limit {max_iter} reached (possible cycling under the "
                                     f"{self.pivot_rule} rule; bland cannot cycle)")
            rule = BLAND if self.pivot_rule == BLAND or stalled >= STALL_LIMIT else DANTZIG
            q = self._entering(allowed, rule)
            if q is None:
                return OPTIMAL
            r = self._leaving(q)
            if r is None:
                return UNBOUNDED
            degenerate = self.T[r, -1] == 0 if self.exact else abs(self.T[r, -1]) <= self.tol
            if self.pivot_rule == HYBRID:
                # Bland's rule while stalled at a degenerate vertex rules out cycling
                stalled = stalled + 1 if degenerate else 0
            self._pivot(r, q)

    def solve(self, max_iter: int) -> str:
        std = self.std
        m = len(std.rows)
        n = self.n
        if self.n_art:
            one = Fraction(1) if self.exact else 1.0
            self._set_objective([0] * n + [one] * self.n_art)
            self.run(n + self.n_art, max_iter)
            phase1 = -self.T[-1, -1]
            if (phase1 > 0) if self.exact else (phase1 > FLOAT_TOL * max(1.0, float(np.max(np.abs(std_rhs_array(std)))))):
                return INFEASIBLE
            # drive artificials out of the basis; rows where impossible are redundant
            for i in range(m):
                if self.basis[i] >= n:
                    row = self.T[i, :n]
                    nz = [j for j in range(n) if (row[j] != 0 if self.exact else abs(row[j]) > 1e-9)]
                    if nz:
                        self._pivot(i, nz[0])
                    else:
                        self.rows_alive.remove(i)
        conv = (lambda a: a) if self.exact else float
        self._set_objective([conv(c) for c in std.cost])
        return self.run(n, max_iter)


def std_rhs_array(std: _Standard) -> np.ndarray:
    return np.array([float(b) for b in std.rhs] + [1.0])


# ---------------------------------------------------------------------------
# exact linear algebra on sparse rational systems


def _sparse_solve(rows: list[dict], rhs: list) -> list | None:
    """Solve a square sparse rational system; ``None`` if singular."""
    n = len(rows)
    work = [dict(r) for r in rows]
    b = list(rhs)
    col_rows: dict = {}
    for i, r in enumerate(work):
        for j in r:
            col_rows.setdefault(j, set()).add(i)
    pivots = []  # (row, col)
    used_rows: set = set()
    remaining_cols = set(col_rows)
    for _ in range(n):
        best = None
        for j in remaining_cols:
            cand = [i for i in col_rows[j] if i not in used_rows]
            if not cand:
                continue
            i = min(cand, key=lambda i: (len(work[i]), i))
            score = (len(cand) - 1) * (len(work[i]) - 1)
            if best is None or score < best[0] or (score == best[0] and (j, i) < best[1:]):
                best = (score, j, i)
                if score == 0:
                    break
        if best is None:
            return None
        _, j, i = best
        used_rows.add(i)
        remaining_cols.discard(j)
        pivots.append((i, j))
        prow = work[i]
        pv = prow[j]
        for k in list(col_rows[j]):
            if k == i or k in used_rows:
                continue
            f = work[k][j] / pv
            for c, a in prow.items():
                v = work[k].get(c, 0) - f * a
                if v == 0:
                    if c in work[k]:
                        del work[k][c]
                        col_rows[c].discard(k)
                else:
                    if c not in work[k]:
                        col_rows.setdefault(c, set()).add(k)
                    work[k][c] = v
            b[k] = b[k] - f * b[i]
    x: dict = {}
    for i, j in reversed(pivots):
        s = b[i]
        for c, a in work[i].items():
            if c != j:
                s -= a * x[c]
        x[j] = s / work[i][j]
    return x


def _reconstruct(values: Iterable[float], denominators=(10**4, 10**6, 10**8, 10**10)) -> list[list]:
    vals = [float(v) for v in values]
    return [[Fraction(v).limit_denominator(d) for v in vals] for d in denominators]


# ---------------------------------------------------------------------------
# solution assembly


def _assemble(model: LpModel, std: _Standard, x_std: dict, y_std: dict, mode: str, status: str, **meta) -> LpSolution:
    conv = (lambda a: a) if mode == "exact" else float
    primal = []
    for offset, cols in std.var_map:
        v = offset + sum((sign * _frac(x_std.get(col, 0)) for col, sign in cols), Fraction(0))
        primal.append(conv(v))
    duals = []
    for i in range(std.n_model_rows):
        duals.append(conv(std.row_sign[i] * _frac(y_std.get(i, 0))))
    obj = sum((model.objective.get(j, 0) * _frac(primal[j]) for j in range(len(primal))), Fraction(0))
    sol = LpSolution(status=status, mode=mode, primal=primal, duals=duals, objective=conv(obj), **meta)
    return sol


def _exact_from_basis(std: _Standard, basis: list, alive: list):
    """Exact primal/dual values for a basis, or None if not exactly optimal."""
    cols = std.columns()
    brows = [{k: cols[j][i] for k, j in enumerate(basis) if i in cols[j]} for i in alive]
    rhs = [std.rhs[i] for i in alive]
    xb = _sparse_solve(brows, rhs)
    if xb is None:
        return None
    x = {basis[k]: v for k, v in xb.items()}
    if any(v < 0 for v in x.values()):
        return None
    # every row, including those dropped as redundant, must hold exactly
    for i, row in enumerate(std.rows):
        if sum((a * x.get(j, 0) for j, a in row.items()), Fraction(0)) != std.rhs[i]:
            return None
    brows_t = [{k: a for k, (i, a) in enumerate((i, cols[j].get(i, 0)) for i in alive) if a != 0} for j in basis]
    yb = _sparse_solve(brows_t, [std.cost[j] for j in basis])
    if yb is None:
        return None
    y = {alive[k]: v for k, v in yb.items()}
    for j in range(std.n_cols):
        d = std.cost[j] - sum((a * y.get(i, 0) for i, a in cols[j].items()), Fraction(0))
        if d < 0:
            return None
    return x, y


def _certify_float_basis(std: _Standard, basis: list, alive: list, x_float: dict, y_float: dict):
    """Try rational reconstruction of float values first, then exact solves."""
    cols = std.columns()
    bset = set(basis)
    xb_vals = [x_float.get(j, 0.0) for j in basis]
    y_vals = [y_float.get(i, 0.0) for i in alive]
    for xs, ys in zip(_reconstruct(xb_vals), _reconstruct(y_vals)):
        x = {j: v for j, v in zip(basis, xs) if v != 0}
        if any(v < 0 for v in x.values()):
            continue
        if any(
            sum((a * x.get(j, 0) for j, a in row.items()), Fraction(0)) != std.rhs[i]
            for i, row in enumerate(std.rows)
        ):
            continue
        y = {i: v for i, v in zip(alive, ys) if v != 0}
        ok = True
        for j in range(std.n_cols):
            d = std.cost[j] - sum((a * y.get(i, 0) for i, a in cols[j].items()), Fraction(0))
            if d < 0 or (j in bset and d != 0):
                ok = False
                break
        if ok:
            return x, y
    return _exact_from_basis(std, basis, alive)


def _float_values(tab: _Tableau) -> tuple[dict, dict]:
    std = tab.std
    alive = tab.rows_alive
    basis = [tab.basis[i] for i in alive]
    m = len(alive)
    B = np.zeros((m, m))
    for k, j in enumerate(basis):
        for r, i in enumerate(alive):
            a = std.rows[i].get(j)
            if a is not None:
                B[r, k] = float(a)
    b = np.array([float(std.rhs[i]) for i in alive])
    cb = np.array([float(std.cost[j]) for j in basis])
    try:
        xb = np.linalg.solve(B, b)
        y = np.linalg.solve(B.T, cb)
    except np.linalg.LinAlgError:
        xb = np.array([tab.T[i, -1] for i in alive], dtype=float)
        y = np.zeros(m)
    return {j: float(v) for j, v in zip(basis, xb)}, {i: float(v) for i, v in zip(alive, y)}


def _solve_pure(model: LpModel, std: _Standard, exact: bool, pivot_rule: str, max_iter: int,
                perturb: bool = False):
    tab = _Tableau(std, exact, pivot_rule, perturb)
    status = tab.solve(max_iter)
    return tab, status


def solve_lp(model: LpModel, mode: str = "float", pivot_rule: str = "bland", max_iter: int = 500_000,
             strategy: str = "auto") -> LpSolution:
    """Solve ``min c.x``; deterministic for identical models.

    ``strategy`` (exact mode only): ``pure`` runs the rational simplex from
    scratch, ``certify`` solves in floats and certifies the final basis in
    rational arithmetic, ``auto`` picks ``pure`` for small models.
    """
    if mode not in ("float", "exact"):
        raise LpError(f"unknown mode {mode!r}")
    if pivot_rule not in PIVOT_RULES:
        raise LpError(f"unknown pivot rule {pivot_rule!r}")
    std = _standardize(model)
    size = (len(std.rows) + 1) * (std.n_cols + 1)
    meta = {"pivot_rule": pivot_rule}
    if mode == "exact" and (strategy == "pure" or (strategy == "auto" and size <= PURE_EXACT_LIMIT)):
        tab, status = _solve_pure(model, std, True, pivot_rule, max_iter)
        meta.update(iterations=tab.iterations, method="exact-simplex")
        if status != OPTIMAL:
            return LpSolution(status=status, mode=mode, **meta)
        alive = tab.rows_alive
        x = {tab.basis[i]: tab.T[i, -1] for i in alive}
        basis = [tab.basis[i] for i in alive]
        res = _exact_from_basis(std, basis, alive)
        if res is None:
            raise LpError("internal error: exact simplex basis failed certification")
        x, y = res
        sol = _assemble(model, std, x, y, mode, OPTIMAL, **meta)
        sol.residuals = verify_solution(model, sol)
        return sol

    tab, status = _solve_pure(model, std, False, pivot_rule, max_iter, perturb=True)
    x_float, y_float = _float_values(tab) if status == OPTIMAL else ({}, {})
    if status != OPTIMAL or min(x_float.values(), default=0.0) < -FLOAT_TOL:
        tab, status = _solve_pure(model, std, False, pivot_rule, max_iter)
        if status == OPTIMAL:
            x_float, y_float = _float_values(tab)
    meta.update(iterations=tab.iterations, method="float-simplex")
    if status != OPTIMAL:
        if mode == "exact" and size <= 50 * PURE_EXACT_LIMIT:
            tab2, status2 = _solve_pure(model, std, True, pivot_rule, max_iter)
            if status2 == status:
                return LpSolution(status=status, mode=mode, **meta)
            return solve_lp(model, mode, pivot_rule, max_iter, strategy="pure")
        return LpSolution(status=status, mode=mode, **meta)
    if mode == "float":
        sol = _assemble(model, std, x_float, y_float, mode, OPTIMAL, **meta)
        sol.residuals = verify_solution(model, sol)
        worst = max(sol.residuals[k] for k in ("primal_feasibility", "dual_feasibility", "duality_gap_abs"))
        if worst > FLOAT_TOL:
            raise NumericalError(f"float solve residual {worst:.3g} exceeds {FLOAT_TOL}; use exact mode")
        return sol
    alive = tab.rows_alive
    basis = [tab.basis[i] for i in alive]
    res = _certify_float_basis(std, basis, alive, x_float, y_float)
    if res is None:
        if size > 50 * PURE_EXACT_LIMIT:
            raise LpError("exact certification of the float basis failed and the model is too large "
                          "for the pure rational simplex")
        return solve_lp(model, mode, pivot_rule, max_iter, strategy="pure")
    x, y = res
    meta["method"] = "float-simplex+exact-certificate"
    sol = _assemble(model, std, x, y, mode, OPTIMAL, **meta)
    sol.residuals = verify_solution(model, sol)
    return sol


# ---------------------------------------------------------------------------
# verification


def verify_solution(model: LpModel, sol: LpSolution, tol=0) -> dict:
    """Recompute residuals of a primal/dual pair in exact arithmetic."""
    x = [_frac(v) for v in sol.primal]
    y = [_frac(v) for v in sol.duals]
    primal_viol = Fraction(0)
    dual_viol = Fraction(0)
    comp = Fraction(0)
    dual_obj = Fraction(0)
    for r, yr in zip(model.rows, y):
        act = sum((a * x[j] for j, a in r.coeffs.items()), Fraction(0))
        slack = act - r.rhs
        if r.rel == LE:
            primal_viol = max(primal_viol, slack)
            dual_viol = max(dual_viol, yr)
        elif r.rel == GE:
            primal_viol = max(primal_viol, -slack)
            dual_viol = max(dual_viol, -yr)
        else:
            primal_viol = max(primal_viol, abs(slack))
        comp = max(comp, abs(yr * slack))
        dual_obj += yr * r.rhs
    reduced = [model.objective.get(j, Fraction(0)) for j in range(len(model.variables))]
    for r, yr in zip(model.rows, y):
        if yr != 0:
            for j, a in r.coeffs.items():
                reduced[j] -= yr * a
    for j, v in enumerate(model.variables):
        d = reduced[j]
        if v.lower is not None:
            primal_viol = max(primal_viol, v.lower - x[j])
        if v.upper is not None:
            primal_viol = max(primal_viol, x[j] - v.upper)
        if d > 0:
            if v.lower is None:
                dual_viol = max(dual_viol, d)
            else:
                dual_obj += d * v.lower
                comp = max(comp, abs(d * (x[j] - v.lower)))
        elif d < 0:
            if v.upper is None:
                dual_viol = max(dual_viol, -d)
            else:
                dual_obj += d * v.upper
                comp = max(comp, abs(d * (x[j] - v.upper)))
    primal_obj = sum((model.objective.get(j, 0) * x[j] for j in range(len(x))), Fraction(0))
    gap = primal_obj - dual_obj
    tol = _frac(tol)
    report = {
        "primal_feasibility": primal_viol,
        "dual_feasibility": dual_viol,
        "complementary_slackness": comp,
        "primal_objective": primal_obj,
        "dual_objective": dual_obj,
        "duality_gap": gap,
        "duality_gap_abs": abs(gap),
    }
    if sol.mode == "float":
        report = {k: float(v) for k, v in report.items()}
    report["ok"] = bool(primal_viol <= tol and dual_viol <= tol and abs(gap) <= tol and comp <= tol)
    return report
