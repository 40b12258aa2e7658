"""Finite-scale status of classes in degree-0 homology of an action.

The fundamental class is tested through the Følner / Ponzi optima over
growing radii.  Verdicts are evidence at the computed scales, never proofs:
the strings produced are ``evidence-amenable``, ``evidence-nonamenable`` and
``inconclusive``.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import lp
from .certificates import (
    INFEASIBLE,
    CertificateError,
    PrefixChain,
    TentChain,
    folner_optimize,
    lp_cells,
    ponzi_optimize,
)
from .chains import EXACT, FLOAT, SIGMA, Chain, DualFunctional, coerce, defect, format_value, make_chain, pair
from .groups import Group
from .spaces import CompactSpace, FiniteSpace, OnePointSpace, PointSpace

EVIDENCE_AMENABLE = "evidence-amenable"
EVIDENCE_NONAMENABLE = "evidence-nonamenable"
INCONCLUSIVE = "inconclusive"
VERDICTS = (EVIDENCE_AMENABLE, EVIDENCE_NONAMENABLE, INCONCLUSIVE)

NOTE = ("Verdicts summarize finite-scale optima at the listed radii; they are evidence, "
        "not proofs, about the fundamental class.")

CSV_COLUMNS = ("radius", "t_star", "m_star", "duality_gap", "seconds")


@dataclass
class ClassStatusReport:
    group_spec: str
    space_spec: str
    mode: str
    radii: list
    t_star: list
    m_star: list  # None where the Ponzi LP was infeasible or not run
    duality_gap: list
    seconds: list
    verdict: str
    thresholds: dict
    trend: dict = field(default_factory=dict)
    note: str = NOTE

    def rows(self) -> list[dict]:
        out = []
        for i, n in enumerate(self.radii):
            out.append({
                "radius": n,
                "t_star": format_value(self.t_star[i], self.mode),
                "m_star": "" if self.m_star[i] is None else format_value(self.m_star[i], self.mode),
                "duality_gap": "" if self.duality_gap[i] is None else format_value(self.duality_gap[i], self.mode),
                "seconds": f"{self.seconds[i]:.3f}",
            })
        return out

    def to_csv(self, include_seconds: bool = True) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in self.rows():
            if not include_seconds:
                row["seconds"] = ""
            writer.writerow(row)
        return buf.getvalue()

    def to_json(self) -> dict:
        rows = self.rows()
        for row in rows:
            del row["seconds"]
        return {
            "group_spec": self.group_spec,
            "space_spec": self.space_spec,
            "mode": self.mode,
            "radii": list(self.radii),
            "per_radius": rows,
            "verdict": self.verdict,
            "thresholds": {k: str(v) for k, v in self.thresholds.items()},
            "trend": {k: [format_value(v, FLOAT) for v in vs] if isinstance(vs, list) else str(vs)
                      for k, vs in self.trend.items()},
            "note": self.note,
        }


def relative_decrements(values: Sequence) -> list[float]:
    """(t_{i-1} - t_i) / t_{i-1}; zero where the previous value is zero."""
    out = []
    for prev, cur in zip(values, values[1:]):
        prev, cur = float(prev), float(cur)
        out.append(0.0 if prev == 0 else (prev - cur) / prev)
    return out


def decide_verdict(t_values: Sequence, eps_vanish=1e-3, flat_window: int = 3, flat_ratio=1e-2) -> str:
    """Pure function of the per-radius optima (listed in increasing radius)."""
    if not t_values:
        return INCONCLUSIVE
    last = t_values[-1]
    if last < eps_vanish:
        return EVIDENCE_AMENABLE
    dec = relative_decrements(t_values)
    if len(dec) >= flat_window and all(d < flat_ratio for d in dec[-flat_window:]) and last > eps_vanish:
        return EVIDENCE_NONAMENABLE
    return INCONCLUSIVE


def _radius_work(args):
    group, space, n, mode, run_ponzi, pivot_rule = args
    start = time.perf_counter()
    fc = folner_optimize(group, space, n, mode, pivot_rule=pivot_rule)
    pc = ponzi_optimize(group, space, n, mode, pivot_rule=pivot_rule) if run_ponzi else None
    return fc, pc, time.perf_counter() - start


def fundamental_class_status(group: Group, space: CompactSpace, radii: Sequence[int], eps_vanish=1e-3,
                             flat_window: int = 3, flat_ratio=1e-2, mode: str = EXACT, ponzi: bool = True,
                             pivot_rule: str = lp.HYBRID, certificates: list | None = None,
                             jobs: int = 1) -> ClassStatusReport:
    """Følner (and, on point/finite spaces, Ponzi) optima per radius plus a verdict.

    When ``certificates`` is a list, the certificates built along the way are
    appended to it.  ``jobs > 1`` evaluates radii in a process pool.
    """
    radii = list(radii)
    if not radii or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be non-empty and strictly increasing")
    run_ponzi = ponzi and isinstance(space, (PointSpace, FiniteSpace))
    args = [(group, space, n, mode, run_ponzi, pivot_rule) for n in radii]
    if jobs > 1 and len(radii) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_radius_work, args))
    else:
        results = [_radius_work(a) for a in args]
    ts, ms, gaps, secs = [], [], [], []
    # results arrive in radius order whatever the worker count
    for fc, pc, seconds in results:
        t = fc.defect
        m = gap = None
        if certificates is not None:
            certificates.append(fc)
            if pc is not None:
                certificates.append(pc)
        if pc is not None and pc.status != INFEASIBLE:
            m = pc.norm_bound
            gap = abs(t * m - 1)
        ts.append(t)
        ms.append(m)
        gaps.append(gap)
        secs.append(seconds)
    verdict = decide_verdict(ts, eps_vanish, flat_window, flat_ratio)
    thresholds = {"eps_vanish": eps_vanish, "flat_window": flat_window, "flat_ratio": flat_ratio}
    trend = {"relative_decrements": relative_decrements(ts)}
    return ClassStatusReport(group.spec, space.spec, mode, radii, ts, ms, gaps, secs, verdict, thresholds, trend)


# ---------------------------------------------------------------------------
# functional classes


def _phi_cells(phi: DualFunctional, cells) -> dict:
    out: dict = {}
    for g, x, c in phi.terms:
        v = cells.lookup(x)
        if v is None:
            raise CertificateError(f"functional cell {x!r} is outside the truncated space")
        out[(g, v)] = out.get((g, v), 0) + c
    return out


def _check_space(space: CompactSpace) -> None:
    if not isinstance(space, (PointSpace, FiniteSpace, OnePointSpace)):
        raise CertificateError(f"class residuals are not available over the {space.kind} space")


@dataclass
class ResidualResult:
    value: object
    witness: Chain  # a chain attaining the lower bound side of the LP
    budget: object
    radius: int
    support_radius: int
    solver: dict = field(default_factory=dict)


def residual_lp(phi: DualFunctional, group: Group, space: CompactSpace, n: int, support_radius: int,
                budget=1, mode: str = EXACT, pivot_rule: str = lp.HYBRID) -> ResidualResult:
    """min over ||psi|| <= budget, supp psi in B_{n+R} of ||phi - delta* psi|| on W_0(B_n).

    Solved through its LP dual: max phi(xi) - budget * max_s ||(delta xi)_s||
    over xi in W_0(B_n) with ||xi|| <= 1, where the coboundary is measured on
    B_{n+R} only.  The maximizing xi is returned as a witness.
    """
    _check_space(space)
    R = support_radius
    if R < 0 or n < 0:
        raise ValueError("radius and support radius must be non-negative")
    cells = lp_cells(space, n)
    ball_n = group.ball(n)
    ball_r = group.ball(min(n + R, n + 1))
    # with the whole coboundary support inside the window, s and s^-1 give
    # isometric components and one generator per inverse pair suffices
    from .certificates import _half_generators

    gens = _half_generators(group) if R >= 1 else range(len(group.gens))
    model = lp.LpModel()
    pos, neg = {}, {}
    for g in ball_n.elements:
        for v, x in enumerate(cells.values):
            tag = f"{group.format(g)}|{space.format_cell(x)}"
            pos[(g, v)] = model.add_var(f"p[{tag}]", lower=0)
            neg[(g, v)] = model.add_var(f"q[{tag}]", lower=0)
    c = model.add_var("c", lower=None)
    tau = model.add_var("tau", lower=0)
    for v, x in enumerate(cells.values):
        row = {}
        for g in ball_n.elements:
            row[pos[(g, v)]] = 1
            row[neg[(g, v)]] = -1
        row[c] = -1
        model.add_row(row, lp.EQ, 0, name=f"W0[{space.format_cell(x)}]")
        norm = {}
        for g in ball_n.elements:
            norm[pos[(g, v)]] = 1
            norm[neg[(g, v)]] = 1
        model.add_row(norm, lp.LE, 1, name=f"norm[{space.format_cell(x)}]")
    for si in gens:
        s_inv = group.inv(group.gens[si])
        for x in cells.rows:
            vx, vsx = cells.lookup(x), cells.lookup(cells.act(s_inv, x))
            us = {}
            for h in ball_r.elements:
                terms: dict = {}
                if h in ball_n.index:
                    for var, b in ((pos[(h, vx)], 1), (neg[(h, vx)], -1)):
                        terms[var] = terms.get(var, 0) + b
                k = group.mul(s_inv, h)
                if k in ball_n.index:
                    for var, b in ((pos[(k, vsx)], -1), (neg[(k, vsx)], 1)):
                        terms[var] = terms.get(var, 0) + b
                terms = {j: b for j, b in terms.items() if b != 0}
                if not terms:
                    continue
                u = model.add_var(f"u[{group.gen_names[si]}|{group.format(h)}|{space.format_cell(x)}]", lower=0)
                model.add_row({**terms, u: 1}, lp.GE, 0)
                model.add_row({**{j: -b for j, b in terms.items()}, u: 1}, lp.GE, 0)
                us[u] = 1
            if us:
                model.add_row({**us, tau: -1}, lp.LE, 0)
    # maximize phi(xi) - budget * tau  ==  minimize budget * tau - phi(xi)
    objective = {tau: coerce(budget, EXACT)}
    if phi.tag == SIGMA:
        objective[c] = -1
    else:
        for (g, v), coef in _phi_cells(phi, cells).items():
            if (g, v) in pos:
                objective[pos[(g, v)]] = objective.get(pos[(g, v)], 0) - coef
                objective[neg[(g, v)]] = objective.get(neg[(g, v)], 0) + coef
    model.set_objective(objective)
    sol = lp.solve_lp(model, "exact" if mode == EXACT else "float", pivot_rule=pivot_rule)
    if sol.status != lp.OPTIMAL:
        raise CertificateError(f"residual LP returned status {sol.status}")
    value = coerce(-sol.objective, mode)
    from .certificates import _function

    mapping = {}
    for g in ball_n.elements:
        vals = [coerce(sol.primal[pos[(g, v)]] - sol.primal[neg[(g, v)]], mode)
                for v in range(len(cells.values))]
        mapping[g] = _function(space, cells, vals, coerce(0, mode))
    witness = make_chain(group, space, mapping, mode)
    solver = {"pivot_rule": sol.pivot_rule, "iterations": sol.iterations, "method": sol.method}
    return ResidualResult(value, witness, coerce(budget, mode), n, R, solver)


def functional_class_residual(phi: DualFunctional, group: Group, space: CompactSpace, n: int,
                              support_radius: int, budget=1, mode: str = EXACT) -> object:
    """Distance from phi to the budget-bounded part of Image(delta*), at radius n."""
    return residual_lp(phi, group, space, n, support_radius, budget, mode).value


def image_constant(phi: DualFunctional, group: Group, space: CompactSpace, n: int, mode: str = EXACT,
                   pivot_rule: str = lp.HYBRID):
    """inf ||delta xi|| over xi in W_0(B_n) with phi(xi) = 1 (None if phi vanishes there).

    Equals 1 / min{||psi|| : delta* psi = phi on W_0(B_n)}; for phi = sigma
    this is the signed Følner optimum.
    """
    _check_space(space)
    cells = lp_cells(space, n)
    from .certificates import folner_model

    model, info = folner_model(group, space, n, signed=True, generators="half")
    xi = info["xi"]
    if phi.tag != SIGMA:
        # replace the sigma normalization by W_0 membership plus phi(xi) = 1
        c = model.add_var("c", lower=None)
        for row in model.rows:
            if row.name.startswith("C1["):
                row.coeffs[c] = Fraction(-1)
                row.rhs = Fraction(0)
        model.add_row({xi[k]: v for k, v in _phi_cells(phi, cells).items() if k in xi}, lp.EQ, 1, name="phi")
    sol = lp.solve_lp(model, "exact" if mode == EXACT else "float", pivot_rule=pivot_rule)
    if sol.status == lp.INFEASIBLE:
        return None
    if sol.status != lp.OPTIMAL:
        raise CertificateError(f"image-constant LP returned status {sol.status}")
    return coerce(sol.objective, mode)


def class_pairing(phi: DualFunctional, chain_family: Sequence) -> list[dict]:
    """pair(phi, xi) and ||delta xi|| for each chain of the family."""
    out = []
    for xi in chain_family:
        if isinstance(xi, TentChain):
            value = sum((c * xi.value(g, x) for g, x, c in phi.terms), coerce(0, xi.mode))
            if phi.tag == SIGMA:
                value = coerce(0, xi.mode)
            out.append({"n": xi.n, "pairing": value, "coboundary_norm": xi.defect()})
        elif isinstance(xi, PrefixChain):
            chain = xi.to_chain()
            out.append({"n": xi.radius, "pairing": pair(phi, chain), "coboundary_norm": xi.defect()})
        else:
            d = defect(xi) if xi.entries else coerce(0, xi.mode)
            out.append({"n": None, "pairing": pair(phi, xi), "coboundary_norm": d})
    return out
