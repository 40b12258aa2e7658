"""Følner and Ponzi certificates, explicit chain sequences and transfers.

A Følner certificate is a nonnegative chain with sigma = 1 and a recorded
defect; a Ponzi certificate is a family of functionals psi_s whose adjoint
coboundary agrees with sigma on chains supported in a ball, giving the lower
bound ``defect >= 1/M`` for every such chain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import lp
from .chains import (
    EXACT,
    FLOAT,
    Chain,
    ChainError,
    DualFunctional,
    chain_from_json,
    chain_norm,
    chain_to_json,
    chain_sub,
    act_chain,
    coerce,
    defect,
    dual_to_json,
    format_value,
    is_w0,
    make_chain,
    make_dual,
    pair,
    sigma,
)
from .groups import Group, ResourceGuardError, size_guard
from .spaces import INF, CompactSpace, EquivariantMap, FiniteSpace, OnePointSpace, PointSpace

FOLNER = "folner"
PONZI = "ponzi"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"


class CertificateError(ValueError):
    pass


# ---------------------------------------------------------------------------
# LP cell models


@dataclass
class _Cells:
    """Finite description of a space for the truncated LPs.

    ``values`` are the cells carrying an independent value of each xi_g;
    ``rows`` are the cells on which defects are measured; ``lookup`` sends a
    point of the space to the value cell containing it.
    """

    space: CompactSpace
    values: list
    rows: list
    index: dict

    def lookup(self, x):
        return self.index.get(x, self.index.get(INF))

    def act(self, g, x):
        return self.space.act_cell(g, x)


def lp_cells(space: CompactSpace, n: int, cell_radius: int | None = None) -> _Cells:
    if isinstance(space, PointSpace):
        vals = [0]
        rows = [0]
    elif isinstance(space, FiniteSpace):
        vals = list(space.points())
        rows = vals
    elif isinstance(space, OnePointSpace):
        r = n + 1 if cell_radius is None else cell_radius
        G = space.group
        vals = list(G.ball(r).elements) + [INF]
        rows = list(G.ball(r + 1).elements) + [INF]
    else:
        raise CertificateError(f"no LP formulation over the {space.kind} space; use boundary_folner")
    return _Cells(space, vals, rows, {x: i for i, x in enumerate(vals)})


def _function(space: CompactSpace, cells: _Cells, values: list, zero):
    if isinstance(space, PointSpace):
        return values[0]
    if isinstance(space, FiniteSpace):
        return tuple(values)
    tail = values[-1]
    return space.make({p: v for p, v in zip(cells.values[:-1], values[:-1])}, tail)


def _half_generators(group: Group) -> list[int]:
    """One generator index per inverse pair (involutions kept once)."""
    keep = []
    seen = set()
    for i, _ in enumerate(group.gens):
        if i in seen:
            continue
        keep.append(i)
        seen.add(i)
        seen.add(group.inverse_index(i))
    return keep


def _guard(count: int, what: str) -> None:
    if count > size_guard():
        raise ResourceGuardError(f"{what} needs {count} LP entries, above the size guard {size_guard()}")


# ---------------------------------------------------------------------------
# Følner LP


@dataclass
class FolnerCertificate:
    group: Group
    space: CompactSpace
    radius: int
    mode: str
    defect: object
    chain: object  # Chain, or PrefixChain for boundary certificates
    solver: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    signed: bool = False
    kind: str = FOLNER

    @property
    def group_spec(self) -> str:
        return self.group.spec

    @property
    def space_spec(self) -> str:
        return self.space.spec


def folner_model(group: Group, space: CompactSpace, n: int, signed: bool = False, generators: str = "half",
                 cell_radius: int | None = None) -> tuple[lp.LpModel, dict]:
    """Build the truncated Følner LP; returns the model and variable lookup."""
    cells = lp_cells(space, n, cell_radius)
    ball_n = group.ball(n)
    ball_n1 = group.ball(n + 1)
    gens = _half_generators(group) if generators == "half" else list(range(len(group.gens)))
    _guard(len(ball_n1) * len(cells.rows) * len(gens), "folner_optimize")
    model = lp.LpModel()
    lower = None if signed else 0
    xi = {}
    for g in ball_n.elements:
        gname = group.format(g)
        for v, x in enumerate(cells.values):
            xi[(g, v)] = model.add_var(f"xi[{gname}|{space.format_cell(x)}]", lower=lower)
    t = model.add_var("t", lower=0)
    for v, x in enumerate(cells.values):
        model.add_row({xi[(g, v)]: 1 for g in ball_n.elements}, lp.EQ, 1, name=f"C1[{space.format_cell(x)}]")
    for si in gens:
        s = group.gens[si]
        s_inv = group.inv(s)
        sname = group.gen_names[si]
        for x in cells.rows:
            vx = cells.lookup(x)
            vsx = cells.lookup(cells.act(s_inv, x))
            us = {}
            for h in ball_n1.elements:
                terms: dict = {}
                if h in ball_n.index:
                    terms[xi[(h, vx)]] = terms.get(xi[(h, vx)], 0) + 1
                k = group.mul(s_inv, h)
                if k in ball_n.index:
                    terms[xi[(k, vsx)]] = terms.get(xi[(k, vsx)], 0) - 1
                terms = {j: a for j, a in terms.items() if a != 0}
                if not terms:
                    continue
                tag = f"{sname}|{group.format(h)}|{space.format_cell(x)}"
                u = model.add_var(f"u[{tag}]", lower=0)
                plus = dict(terms)
                plus[u] = 1
                model.add_row(plus, lp.GE, 0, name=f"C2+[{tag}]")
                minus = {j: -a for j, a in terms.items()}
                minus[u] = 1
                model.add_row(minus, lp.GE, 0, name=f"C2-[{tag}]")
                us[u] = 1
            if us:
                us[t] = -1
                model.add_row(us, lp.LE, 0, name=f"C3[{sname}|{space.format_cell(x)}]")
    model.set_objective({t: 1})
    return model, {"xi": xi, "t": t, "cells": cells, "ball": ball_n}


def folner_optimize(group: Group, space: CompactSpace, n: int, mode: str = EXACT, signed: bool = False,
                    generators: str = "half", cell_radius: int | None = None,
                    pivot_rule: str = lp.HYBRID) -> FolnerCertificate:
    """Optimal truncated Følner chain supported in the ball of radius ``n``."""
    if n < 0:
        raise CertificateError("radius must be non-negative")
    model, info = folner_model(group, space, n, signed, generators, cell_radius)
    sol = lp.solve_lp(model, "exact" if mode == EXACT else "float", pivot_rule=pivot_rule)
    if sol.status != lp.OPTIMAL:
        raise CertificateError(f"Følner LP returned status {sol.status}")
    cells = info["cells"]
    zero = coerce(0, mode)
    mapping = {}
    for g in info["ball"].elements:
        vals = [coerce(sol.primal[info["xi"][(g, v)]], mode) for v in range(len(cells.values))]
        mapping[g] = _function(space, cells, vals, zero)
    xi = make_chain(group, space, mapping, mode)
    t = coerce(sol.objective, mode)
    solver = {"pivot_rule": sol.pivot_rule, "iterations": sol.iterations, "method": sol.method,
              "rows": len(model.rows), "variables": len(model.variables)}
    residuals = {k: v for k, v in sol.residuals.items() if k != "ok"}
    return FolnerCertificate(group, space, n, mode, t, xi, solver, residuals, signed)


# ---------------------------------------------------------------------------
# Ponzi LP


@dataclass
class PonziCertificate:
    group: Group
    space: CompactSpace
    radius: int
    mode: str
    status: str
    psis: tuple = ()
    norm_bound: object = None
    solver: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    kind: str = PONZI

    @property
    def constant(self):
        """The lower-bound constant D = 1/M."""
        if self.norm_bound is None:
            return None
        return 1 / self.norm_bound

    @property
    def group_spec(self) -> str:
        return self.group.spec

    @property
    def space_spec(self) -> str:
        return self.space.spec


def _d_expression(group: Group, cells: _Cells, psi: dict, g, x) -> dict:
    """Coefficients of D(g, x) = sum_s psi_s(g, x) - psi_s(sg, s.x)."""
    out: dict = {}
    for si, s in enumerate(group.gens):
        for sign, key in ((1, (si, g, x)), (-1, (si, group.mul(s, g), cells.act(s, x)))):
            jp, jq = psi[key]
            out[jp] = out.get(jp, 0) + sign
            out[jq] = out.get(jq, 0) - sign
    return {j: c for j, c in out.items() if c != 0}


def ponzi_model(group: Group, space: CompactSpace, n: int) -> tuple[lp.LpModel, dict]:
    if not isinstance(space, (PointSpace, FiniteSpace)):
        raise CertificateError("ponzi_optimize supports point and finite spaces")
    cells = lp_cells(space, n)
    ball_n = group.ball(n)
    ball_n1 = group.ball(n + 1)
    _guard(len(ball_n1) * len(cells.rows) * len(group.gens), "ponzi_optimize")
    model = lp.LpModel()
    psi = {}
    v = {}
    for si, name in enumerate(group.gen_names):
        for x in cells.rows:
            v[(si, x)] = model.add_var(f"v[{name}|{space.format_cell(x)}]", lower=0)
        for h in ball_n1.elements:
            for x in cells.rows:
                tag = f"{name}|{group.format(h)}|{space.format_cell(x)}"
                # psi = p - q with p + q <= v encodes |psi| <= v in one row
                jp = model.add_var(f"psi+[{tag}]", lower=0)
                jq = model.add_var(f"psi-[{tag}]", lower=0)
                psi[(si, h, x)] = (jp, jq)
                model.add_row({v[(si, x)]: 1, jp: -1, jq: -1}, lp.GE, 0, name=f"abs[{tag}]")
    e = group.identity
    base = {x: _d_expression(group, cells, psi, e, x) for x in cells.rows}
    for g in ball_n.elements:
        if g == e:
            continue
        for x in cells.rows:
            row = dict(_d_expression(group, cells, psi, g, x))
            for j, c in base[x].items():
                row[j] = row.get(j, 0) - c
            row = {j: c for j, c in row.items() if c != 0}
            if row:
                model.add_row(row, lp.EQ, 0, name=f"D[{group.format(g)}|{space.format_cell(x)}]")
    total: dict = {}
    for x in cells.rows:
        for j, c in base[x].items():
            total[j] = total.get(j, 0) + c
    model.add_row({j: c for j, c in total.items() if c != 0}, lp.EQ, 1, name="sigma")
    model.set_objective({j: 1 for j in v.values()})
    return model, {"psi": psi, "cells": cells, "ball": ball_n1}


DIRECT_PONZI_LIMIT = 12_000_000


def _ponzi_size(group: Group, space: CompactSpace, n: int) -> int:
    cells = len(lp_cells(space, n).rows)
    nvars = len(group.ball(n + 1)) * cells * len(group.gens)
    return (nvars + len(group.ball(n)) * cells) * (3 * nvars)


def ponzi_optimize(group: Group, space: CompactSpace, n: int, mode: str = EXACT,
                   pivot_rule: str = lp.HYBRID, method: str = "auto") -> PonziCertificate:
    """Minimal-norm psi with delta* psi = sigma on chains supported in B_n.

    ``direct`` solves the Ponzi LP itself; ``dual`` reads psi off the dual
    solution of the signed Følner LP (its LP dual up to scaling), which is
    much smaller; ``auto`` picks ``direct`` when it fits.  An infeasible
    problem is reported in the status: an exactly invariant chain exists.
    """
    if not isinstance(space, (PointSpace, FiniteSpace)):
        raise CertificateError("ponzi_optimize supports point and finite spaces")
    if method == "auto":
        method = "direct" if _ponzi_size(group, space, n) <= DIRECT_PONZI_LIMIT else "dual"
    if method == "dual":
        return _ponzi_from_dual(group, space, n, mode, pivot_rule)
    if method != "direct":
        raise CertificateError(f"unknown Ponzi method {method!r}")
    model, info = ponzi_model(group, space, n)
    sol = lp.solve_lp(model, "exact" if mode == EXACT else "float", pivot_rule=pivot_rule)
    solver = {"pivot_rule": sol.pivot_rule, "iterations": sol.iterations, "method": "direct:" + sol.method,
              "rows": len(model.rows), "variables": len(model.variables)}
    if sol.status == lp.INFEASIBLE:
        return PonziCertificate(group, space, n, mode, INFEASIBLE, solver=solver)
    if sol.status != lp.OPTIMAL:
        raise CertificateError(f"Ponzi LP returned status {sol.status}")
    cells = info["cells"]
    psis = []
    for si in range(len(group.gens)):
        coeffs = {}
        for h in info["ball"].elements:
            for x in cells.rows:
                jp, jq = info["psi"][(si, h, x)]
                c = sol.primal[jp] - sol.primal[jq]
                if c != 0:
                    coeffs[(h, x)] = c
        psis.append(make_dual(group, space, coeffs, mode))
    m = ponzi_norm(psis)
    residuals = {k: v for k, v in sol.residuals.items() if k != "ok"}
    return PonziCertificate(group, space, n, mode, FEASIBLE, tuple(psis), m, solver, residuals)


def _ponzi_from_dual(group: Group, space: CompactSpace, n: int, mode: str, pivot_rule: str) -> PonziCertificate:
    """psi_s(h, x) = (lambda^- - lambda^+) / t* from the signed half-generator Følner LP."""
    model, info = folner_model(group, space, n, signed=True, generators="half")
    sol = lp.solve_lp(model, "exact" if mode == EXACT else "float", pivot_rule=pivot_rule)
    solver = {"pivot_rule": sol.pivot_rule, "iterations": sol.iterations, "method": "dual:" + sol.method,
              "rows": len(model.rows), "variables": len(model.variables)}
    if sol.status != lp.OPTIMAL:
        raise CertificateError(f"signed Følner LP returned status {sol.status}")
    t = sol.objective
    if t == 0 or (mode == FLOAT and abs(t) <= lp.FLOAT_TOL):
        return PonziCertificate(group, space, n, mode, INFEASIBLE, solver=solver)
    names = {s: i for i, s in enumerate(group.gen_names)}
    coeffs: list = [dict() for _ in group.gens]
    for row, y in zip(model.rows, sol.duals):
        if y == 0 or not row.name.startswith("C2"):
            continue
        sname, hname, xname = row.name[4:-1].split("|")
        key = (group.parse(hname), space.parse_cell(xname))
        si = names[sname]
        sign = -1 if row.name.startswith("C2+") else 1
        coeffs[si][key] = coeffs[si].get(key, 0) + sign * y / t
    psis = tuple(make_dual(group, space, c, mode) for c in coeffs)
    residuals = {k: v for k, v in sol.residuals.items() if k != "ok"}
    return PonziCertificate(group, space, n, mode, FEASIBLE, psis, ponzi_norm(psis), solver, residuals)


def ponzi_norm(psis: Sequence[DualFunctional]):
    """M = sum over s and cells of max over h of |psi_s(h, cell)|."""
    total = None
    for psi in psis:
        best: dict = {}
        for _, x, c in psi.terms:
            best[x] = max(best.get(x, 0), abs(c))
        part = sum(best.values(), coerce(0, psi.mode))
        total = part if total is None else total + part
    return total


# ---------------------------------------------------------------------------
# verification


def _exact(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _exact_chain(xi: Chain) -> Chain:
    """Promote a float chain to rationals without rounding."""
    if xi.mode == EXACT:
        return xi
    X = xi.space
    return make_chain(xi.group, X, {g: X.map_values(_exact, f) for g, f in xi.entries}, EXACT)


def _check(value, tol) -> dict:
    return {"ok": bool(value <= tol), "violation": value}


def default_tolerance(mode: str):
    return Fraction(0) if mode == EXACT else Fraction(1, 10**7)


def verify_folner(cert: FolnerCertificate, tol=None) -> dict:
    """Exact recheck of nonnegativity, sigma = 1 and the stored defect."""
    tol = default_tolerance(cert.mode) if tol is None else _exact(tol)
    stored = _exact(cert.defect)
    if isinstance(cert.chain, PrefixChain):
        pc = cert.chain.exact()
        negative = max([Fraction(0)] + [-w for w in pc.weights])
        sigma_dev = abs(pc.sigma_value() - 1)
        recomputed = pc.defect()
        extra = {"norm": pc.norm()}
        if pc.radius <= CYLINDER_ORACLE_LIMIT:
            extra["cylinder_defect"] = pc.defect_by_cylinders()
            if extra["cylinder_defect"] != recomputed:
                recomputed = max(recomputed, extra["cylinder_defect"])
    else:
        xi = _exact_chain(cert.chain)
        X = xi.space
        negative = Fraction(0)
        for _, f in xi.entries:
            negative = max(negative, max(-v for v in X.values(f)))
        s = sigma(xi)
        sigma_dev = max(abs(v - 1) for v in X.values(s))
        recomputed = defect(xi) if xi.entries else Fraction(0)
        extra = {"norm": chain_norm(xi)}
    report = {
        "nonnegative": _check(negative, tol),
        "sigma": _check(sigma_dev, tol),
        "defect": {**_check(abs(recomputed - stored), tol), "recomputed": recomputed, "stored": stored},
        **extra,
    }
    report["ok"] = all(report[k]["ok"] for k in ("nonnegative", "sigma", "defect"))
    return report


def _psi_lookup(cert: PonziCertificate) -> list[dict]:
    return [{(h, x): _exact(c) for h, x, c in psi.terms} for psi in cert.psis]


def verify_ponzi(cert: PonziCertificate, tol=None, folner: Sequence[FolnerCertificate] = ()) -> dict:
    """Exact recheck of the defining constraints, of M, and weak duality against Følner data."""
    if cert.status == INFEASIBLE:
        return {"ok": True, "status": INFEASIBLE, "checked": False}
    tol = default_tolerance(cert.mode) if tol is None else _exact(tol)
    G, X = cert.group, cert.space
    cells = lp_cells(X, cert.radius)
    look = _psi_lookup(cert)

    def d_value(g, x):
        total = Fraction(0)
        for si, s in enumerate(G.gens):
            total += look[si].get((g, x), 0) - look[si].get((G.mul(s, g), cells.act(s, x)), 0)
        return total

    base = {x: d_value(G.identity, x) for x in cells.rows}
    worst = Fraction(0)
    for g in G.ball(cert.radius).elements:
        for x in cells.rows:
            worst = max(worst, abs(d_value(g, x) - base[x]))
    normalization = abs(sum(base.values(), Fraction(0)) - 1)
    m = _exact(ponzi_norm([make_dual(G, X, {(h, x): c for h, x, c in psi.terms}, EXACT) for psi in cert.psis]))
    stored = _exact(cert.norm_bound)
    report = {
        "constraints": _check(worst, tol),
        "normalization": _check(normalization, tol),
        "norm_bound": {**_check(max(Fraction(0), m - stored), tol), "recomputed": m, "stored": stored},
    }
    replays = []
    for fc in folner:
        replays.append(weak_duality_replay(cert, fc, tol))
    report["weak_duality"] = replays
    report["ok"] = all(report[k]["ok"] for k in ("constraints", "normalization", "norm_bound")) and all(
        r["ok"] for r in replays
    )
    return report


def weak_duality_replay(cert: PonziCertificate, fc: FolnerCertificate, tol=0) -> dict:
    """Replay 1 = sigma(xi) = sum_s psi_s((delta xi)_s) <= M * defect(xi)."""
    if fc.group != cert.group or fc.space.spec != cert.space.spec:
        raise CertificateError("Følner and Ponzi certificates concern different actions")
    if fc.radius > cert.radius:
        return {"radius": fc.radius, "ok": True, "applicable": False}
    xi = _exact_chain(fc.chain)
    G = xi.group
    psis = [make_dual(G, xi.space, {(h, x): _exact(c) for h, x, c in p.terms}, EXACT) for p in cert.psis]
    identity = sum((pair(psi, chain_sub(xi, act_chain(s, xi))) for s, psi in zip(G.gens, psis)), Fraction(0))
    d = defect(xi)
    m = _exact(cert.norm_bound)
    sigma_value = is_w0(xi).value
    ok = abs(identity - sigma_value) <= tol and m * d >= sigma_value - tol
    return {"radius": fc.radius, "applicable": True, "pairing": identity, "sigma": sigma_value,
            "defect": d, "lower_bound": 1 / m, "ok": bool(ok)}


# ---------------------------------------------------------------------------
# tent functions on the one-point compactification


def _length_steps(group: Group, ell: int, horizon: int) -> set:
    """Lengths |s^{-1} x| realized by generators s and points x with |x| = ell."""
    from .groups import FreeAbelianGroup, FreeGroup

    if isinstance(group, (FreeGroup, FreeAbelianGroup)):
        return {ell + 1} | ({ell - 1} if ell > 0 else set())
    ball = group.ball(horizon + 1)
    out = set()
    for x, lx in zip(ball.elements, ball.lengths):
        if lx == ell:
            for s in group.gens:
                out.add(group.length(group.mul(group.inv(s), x)))
    return out


@dataclass(frozen=True)
class TentChain:
    """xi^n = sum_k phi_n(k) k.xi for xi = {e: 1_e, g1: -1_e} on G ∪ {∞}.

    Entry-wise: xi^n_h = phi_n(h) 1_h - phi_n(h g1^{-1}) 1_{h g1^{-1}}, so the
    column over a point x holds phi_n(x) at h = x and -phi_n(x) at h = x g1.
    """

    group: Group
    g1: object
    n: int
    mode: str = EXACT

    def phi(self, ell: int):
        one = coerce(1, self.mode)
        return max((self.n - ell) * one / self.n, 0 * one)

    def value(self, h, x):
        """xi^n_h evaluated at a point x of G ∪ {∞}."""
        G = self.group
        if x == INF:
            return coerce(0, self.mode)
        out = coerce(0, self.mode)
        if h == x:
            out += self.phi(G.length(h))
        k = G.mul(h, G.inv(self.g1))
        if k == x:
            out -= self.phi(G.length(k))
        return out

    def to_chain(self, space: OnePointSpace | None = None) -> Chain:
        G = self.group
        X = space if space is not None else OnePointSpace(G)
        zero = coerce(0, self.mode)
        acc: dict = {}
        if self.n >= 1:
            for k, ell in zip(G.ball(self.n - 1).elements, G.ball(self.n - 1).lengths):
                w = self.phi(ell)
                for h, sign in ((k, 1), (G.mul(k, self.g1), -1)):
                    f = X.indicator(k, sign * w, zero)
                    acc[h] = X.add(acc[h], f) if h in acc else f
        return make_chain(G, X, acc, self.mode)

    def norm(self):
        """sup_x sum_h |xi^n_h(x)| = max over lengths of 2 phi_n."""
        return 2 * self.phi(0)

    def defect(self):
        """max_s sup_x 2 |phi_n(|x|) - phi_n(|s^{-1}x|)| over realized length pairs."""
        best = coerce(0, self.mode)
        for ell in range(self.n + 1):
            for other in _length_steps(self.group, ell, self.n):
                best = max(best, 2 * abs(self.phi(ell) - self.phi(other)))
        return best

    def pair_ev(self, g=None, x=None):
        """ev_{g, x}(xi^n); defaults to g = x = e."""
        e = self.group.identity
        return self.value(e if g is None else g, e if x is None else x)


def tent_sequence(space: OnePointSpace, g1, n: int, mode: str = EXACT) -> TentChain:
    if not isinstance(space, OnePointSpace):
        raise CertificateError("tent_sequence lives on the one-point compactification")
    G = space.group
    G.check(g1)
    if g1 == G.identity:
        raise CertificateError("g1 must differ from the identity")
    if n < 1:
        raise CertificateError("n must be at least 1")
    return TentChain(G, g1, n, mode)


# ---------------------------------------------------------------------------
# prefix-averaging chains on the boundary of F_k

CYLINDER_ORACLE_LIMIT = 8


@dataclass(frozen=True)
class PrefixChain:
    """Radial boundary chain: xi_g = w_{|g|} 1_[g] for |g| <= n (xi_e = w_0).

    The weights determine the chain completely; both defect routines below
    compute max_s ||xi - s.xi|| exactly.
    """

    rank: int
    weights: tuple
    mode: str = EXACT

    @property
    def radius(self) -> int:
        return len(self.weights) - 1

    def exact(self) -> "PrefixChain":
        return PrefixChain(self.rank, tuple(_exact(w) for w in self.weights), EXACT)

    def sigma_value(self):
        return sum(self.weights, coerce(0, self.mode))

    def norm(self):
        return sum((abs(w) for w in self.weights), coerce(0, self.mode))

    def _w(self, j: int):
        return self.weights[j] if 0 <= j <= self.radius else coerce(0, self.mode)

    def defect(self):
        """Reduction by the first letter of the boundary point.

        If omega starts with s, the prefixes of s^{-1} omega shifted by s are
        the prefixes of omega one letter longer; otherwise one letter shorter,
        and the empty prefix lands on the non-prefix s.
        """
        n = self.radius
        starts = abs(self._w(0)) + sum((abs(self._w(j) - self._w(j - 1)) for j in range(1, n + 2)),
                                       coerce(0, self.mode))
        other = abs(self._w(0)) + sum((abs(self._w(j) - self._w(j + 1)) for j in range(0, n + 1)),
                                      coerce(0, self.mode))
        return max(starts, other)

    def defect_by_cylinders(self):
        """Oracle: enumerate every cylinder of depth n + 1 and every generator."""
        from .groups import make_group
        from .spaces import free_reduce_concat, reduced_words

        n = self.radius
        G = make_group(f"F_{self.rank}")
        best = coerce(0, self.mode)
        for s in G.gens:
            s_inv = G.inv(s)
            for omega in reduced_words(self.rank, n + 1):
                col: dict = {}
                for j in range(n + 1):
                    col[omega[:j]] = col.get(omega[:j], 0) + self._w(j)
                moved, _ = free_reduce_concat(s_inv, omega)
                for j in range(n + 1):
                    h = G.mul(s, moved[:j])
                    col[h] = col.get(h, 0) - self._w(j)
                best = max(best, sum((abs(v) for v in col.values()), coerce(0, self.mode)))
        return best

    def to_chain(self, space=None) -> Chain:
        """Materialize as a generic chain (small radii only)."""
        from .groups import make_group
        from .spaces import FreeBoundarySpace

        G = make_group(f"F_{self.rank}")
        X = space if space is not None else FreeBoundarySpace(G)
        zero = coerce(0, self.mode)
        mapping = {}
        ball = G.ball(self.radius)
        for g, ell in zip(ball.elements, ball.lengths):
            w = self.weights[ell]
            if w != 0:
                mapping[g] = X.constant(w) if ell == 0 else X.indicator(g, w, zero)
        return make_chain(G, X, mapping, self.mode)


def boundary_folner(k: int, n: int, mode: str = EXACT, depth_cap: int | None = None) -> FolnerCertificate:
    """xi^n_g = (1/n) 1_[g] for 1 <= |g| <= n on the boundary of F_k."""
    from .groups import make_group
    from .spaces import DEFAULT_DEPTH_CAP, DepthCapError, FreeBoundarySpace

    if k < 2:
        raise CertificateError("boundary_folner needs rank k >= 2")
    if n < 1:
        raise CertificateError("n must be at least 1")
    cap = DEFAULT_DEPTH_CAP if depth_cap is None else depth_cap
    if n > cap:
        raise DepthCapError(f"cylinder depth {n} exceeds depth cap {cap}")
    G = make_group(f"F_{k}")
    X = FreeBoundarySpace(G, cap)
    w = coerce(Fraction(1, n), mode)
    chain = PrefixChain(k, (coerce(0, mode),) + (w,) * n, mode)
    solver = {"pivot_rule": "none", "iterations": 0, "method": "construction"}
    return FolnerCertificate(G, X, n, mode, chain.defect(), chain, solver, {})


# ---------------------------------------------------------------------------
# functoriality


def pullback_chain(fmap: EquivariantMap, eta: Chain) -> Chain:
    """(f^* eta)_g = eta_g ∘ f."""
    if eta.space.spec != fmap.target.spec or eta.group != fmap.target.group:
        raise CertificateError("chain does not live on the map's target")
    return make_chain(eta.group, fmap.source, {g: fmap.pullback(f) for g, f in eta.entries}, eta.mode)


@dataclass(frozen=True)
class TransferMap:
    """Uniform fiber averaging mu: C(X) -> C(Y) along a surjective equivariant map."""

    fmap: EquivariantMap

    def __post_init__(self) -> None:
        if not self.fmap.surjective:
            raise CertificateError("a transfer needs a surjective map")

    def weights(self) -> dict:
        return {y: {x: Fraction(1, len(xs)) for x in xs} for y, xs in self.fmap.fibers().items()}

    def apply(self, f, mode: str = EXACT):
        src, tgt = self.fmap.source, self.fmap.target
        values = [f] if isinstance(src, PointSpace) else list(f)
        out = []
        for y, xs in sorted(self.fmap.fibers().items()):
            total = sum((values[x] for x in xs), coerce(0, mode))
            out.append(total / len(xs))
        if isinstance(tgt, PointSpace):
            return out[0]
        return tuple(out)


def transfer_chain(mu: TransferMap, xi: Chain) -> Chain:
    if xi.space.spec != mu.fmap.source.spec or xi.group != mu.fmap.source.group:
        raise CertificateError("chain does not live on the transfer's source")
    return make_chain(xi.group, mu.fmap.target, {g: mu.apply(f, xi.mode) for g, f in xi.entries}, xi.mode)


def approximate_mean(cert: FolnerCertificate, phi: DualFunctional):
    """phi(xi) for the certificate chain: a finite stand-in for an invariant mean."""
    xi = cert.chain
    if isinstance(xi, (PrefixChain, TentChain)):
        xi = xi.to_chain()
    return pair(phi, xi)


# ---------------------------------------------------------------------------
# tent certificates

TENT = "tent"
TENT_MATERIALIZE_LIMIT = 6


@dataclass
class TentCertificate:
    """A stored tent chain with its claimed norm, defect and ev-pairing."""

    space: OnePointSpace
    chain: TentChain
    norm: object
    defect: object
    pairing: object
    solver: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    kind: str = TENT

    @property
    def group(self) -> Group:
        return self.chain.group

    @property
    def radius(self) -> int:
        return self.chain.n

    @property
    def mode(self) -> str:
        return self.chain.mode

    @property
    def group_spec(self) -> str:
        return self.group.spec

    @property
    def space_spec(self) -> str:
        return self.space.spec


def tent_certificate(space: OnePointSpace, g1, n: int, mode: str = EXACT) -> TentCertificate:
    xi = tent_sequence(space, g1, n, mode)
    solver = {"pivot_rule": "none", "iterations": 0, "method": "construction"}
    return TentCertificate(space, xi, xi.norm(), xi.defect(), xi.pair_ev(), solver)


def verify_tent(cert: TentCertificate, tol=None) -> dict:
    """Recompute norm, defect and pairing exactly; check the bounds 4 and 4/n."""
    tol = default_tolerance(cert.mode) if tol is None else _exact(tol)
    xi = TentChain(cert.group, cert.chain.g1, cert.chain.n, EXACT)
    norm, d, ev = xi.norm(), xi.defect(), xi.pair_ev()
    report = {
        "norm": {**_check(abs(norm - _exact(cert.norm)), tol), "recomputed": norm, "stored": _exact(cert.norm)},
        "defect": {**_check(abs(d - _exact(cert.defect)), tol), "recomputed": d, "stored": _exact(cert.defect)},
        "pairing": {**_check(abs(ev - _exact(cert.pairing)), tol), "recomputed": ev,
                    "stored": _exact(cert.pairing)},
        "norm_bound": _check(max(Fraction(0), norm - 4), 0),
        "defect_bound": _check(max(Fraction(0), d - Fraction(4, xi.n)), 0),
    }
    if xi.n <= TENT_MATERIALIZE_LIMIT:
        full = xi.to_chain(cert.space)
        generic = {"norm": chain_norm(full), "defect": defect(full)}
        report["materialized"] = {**_check(max(abs(generic["norm"] - norm), abs(generic["defect"] - d)), 0),
                                  **generic}
    keys = [k for k in report if isinstance(report[k], dict) and "ok" in report[k]]
    report["ok"] = all(report[k]["ok"] for k in keys)
    return report


def verify_certificate(cert, tol=None) -> dict:
    if cert.kind == FOLNER:
        return verify_folner(cert, tol)
    if cert.kind == PONZI:
        return verify_ponzi(cert, tol)
    if cert.kind == TENT:
        return verify_tent(cert, tol)
    raise CertificateError(f"unknown certificate kind {cert.kind!r}")


# ---------------------------------------------------------------------------
# serialization

SCHEMA_VERSION = 1


def _value_str(value, mode: str) -> str:
    return format_value(value, mode)


def _jsonable(obj):
    """Residual and solver dicts as JSON: numbers become lossless strings."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float):
        return format(obj, ".17g")
    return str(obj)


def certificate_to_json(cert) -> dict:
    G, X, mode = cert.group, cert.space, cert.mode
    out = {
        "schema_version": SCHEMA_VERSION,
        "kind": cert.kind,
        "group_spec": G.spec,
        "space_spec": X.spec,
        "radius": cert.radius,
        "mode": mode,
        "solver": _jsonable(cert.solver),
        "residuals": _jsonable(cert.residuals),
    }
    if cert.kind == FOLNER:
        out["defect"] = _value_str(cert.defect, mode)
        if isinstance(cert.chain, PrefixChain):
            out["data"] = {"format": "prefix", "rank": cert.chain.rank,
                           "weights": [_value_str(w, mode) for w in cert.chain.weights]}
        else:
            out["data"] = {"format": "chain", "signed": cert.signed,
                           "entries": chain_to_json(cert.chain)["entries"]}
    elif cert.kind == PONZI:
        out["norm_bound"] = None if cert.norm_bound is None else _value_str(cert.norm_bound, mode)
        out["data"] = {"format": "ponzi", "status": cert.status,
                       "psis": [dual_to_json(p)["terms"] for p in cert.psis]}
    elif cert.kind == TENT:
        out["defect"] = _value_str(cert.defect, mode)
        out["data"] = {"format": "tent", "g1": G.format(cert.chain.g1), "n": cert.chain.n,
                       "norm": _value_str(cert.norm, mode), "pairing": _value_str(cert.pairing, mode)}
    else:
        raise CertificateError(f"unknown certificate kind {cert.kind!r}")
    return out


def _require(data: dict, keys: Sequence[str]) -> None:
    missing = [k for k in keys if k not in data]
    if missing:
        raise CertificateError(f"certificate JSON lacks {', '.join(missing)}")


def certificate_from_json(data: dict):
    from .groups import make_group
    from .spaces import make_space

    if not isinstance(data, dict):
        raise CertificateError("certificate JSON must be an object")
    _require(data, ("schema_version", "kind", "group_spec", "space_spec", "radius", "mode", "data"))
    if data["schema_version"] != SCHEMA_VERSION:
        raise CertificateError(f"unsupported schema version {data['schema_version']!r}")
    mode = data["mode"]
    if mode not in (EXACT, FLOAT):
        raise CertificateError(f"unknown mode {mode!r}")
    G = make_group(data["group_spec"])
    X = make_space(G, data["space_spec"])
    n = int(data["radius"])
    body = data["data"]
    solver = data.get("solver", {})
    residuals = data.get("residuals", {})
    kind = data["kind"]
    if kind == FOLNER:
        _require(data, ("defect",))
        d = coerce(data["defect"], mode)
        if body.get("format") == "prefix":
            chain = PrefixChain(int(body["rank"]), tuple(coerce(w, mode) for w in body["weights"]), mode)
            return FolnerCertificate(G, X, n, mode, d, chain, solver, residuals)
        chain = chain_from_json({"group_spec": G.spec, "space_spec": X.spec, "mode": mode,
                                 "entries": body["entries"]}, space=X)
        return FolnerCertificate(G, X, n, mode, d, chain, solver, residuals, bool(body.get("signed", False)))
    if kind == PONZI:
        status = body["status"]
        if status not in (FEASIBLE, INFEASIBLE):
            raise CertificateError(f"unknown Ponzi status {status!r}")
        psis = tuple(
            make_dual(G, X, {(G.parse(w), X.parse_cell(x)): coerce(c, mode) for w, x, c in terms}, mode)
            for terms in body.get("psis", [])
        )
        if status == FEASIBLE and len(psis) != len(G.gens):
            raise CertificateError("a Ponzi certificate needs one functional per generator")
        m = None if data.get("norm_bound") is None else coerce(data["norm_bound"], mode)
        return PonziCertificate(G, X, n, mode, status, psis, m, solver, residuals)
    if kind == TENT:
        chain = tent_sequence(X, G.parse(body["g1"]), int(body["n"]), mode)
        return TentCertificate(X, chain, coerce(body["norm"], mode), coerce(data["defect"], mode),
                               coerce(body["pairing"], mode), solver, residuals)
    raise CertificateError(f"unknown certificate kind {kind!r}")


def dumps_certificate(cert) -> str:
    """Byte-deterministic JSON text (no timestamps; those go to a sidecar)."""
    return json.dumps(certificate_to_json(cert), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta")


def save_certificate(cert, path, metadata: dict | None = None) -> Path:
    path = Path(path)
    path.write_text(dumps_certificate(cert), encoding="utf-8")
    if metadata is not None:
        sidecar_path(path).write_text(json.dumps(_jsonable(metadata), sort_keys=True, indent=2) + "\n",
                                      encoding="utf-8")
    return path


def load_certificate(path):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CertificateError(f"{path}: not valid JSON ({exc})") from exc
    except OSError as exc:
        raise CertificateError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        return certificate_from_json(data)
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, CertificateError):
            raise
        raise CertificateError(f"{path}: malformed certificate ({exc})") from exc
