"""Finitely supported chains in C(X, l^1(G)) and functionals on them.

A :class:`Chain` maps finitely many group elements to functions on the space.
Functionals are stored as coefficient representatives
``phi(xi) = sum c(g, cell) * xi_g(cell)``; two representatives may differ by
an annihilator of W_0, so functionals are only ever compared by pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple, Sequence

from .groups import Group, make_group
from .spaces import CompactSpace, make_space

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)


class ChainError(ValueError):
    pass


def coerce(value, mode: str):
    if mode == EXACT:
        if isinstance(value, Fraction):
            return value
        if isinstance(value, str):
            return Fraction(value)
        return Fraction(value)
    if mode == FLOAT:
        return float(value)
    raise ChainError(f"unknown numeric mode {mode!r}")


def format_value(value, mode: str) -> str:
    if mode == EXACT:
        return str(Fraction(value))
    return format(float(value), ".17g")


@dataclass(frozen=True)
class Chain:
    group: Group
    space: CompactSpace
    entries: tuple  # ((g, f), ...) in ball order, no zero functions
    mode: str = EXACT

    def get(self, g):
        for h, f in self.entries:
            if h == g:
                return f
        return self.space.constant(coerce(0, self.mode))

    def as_dict(self) -> dict:
        return dict(self.entries)

    @property
    def support(self) -> list:
        return [g for g, _ in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def make_chain(group: Group, space: CompactSpace, mapping: dict, mode: str = EXACT) -> Chain:
    """Normalize a mapping g -> function into a Chain (coerce, prune zeros, sort)."""
    if space.group != group:
        raise ChainError("space and chain carry different groups")
    entries = []
    for g, f in mapping.items():
        group.check(g)
        f = space.map_values(lambda v: coerce(v, mode), f)
        if not space.is_zero(f):
            entries.append((g, f))
    entries.sort(key=lambda gf: group.order_key(gf[0]))
    return Chain(group, space, tuple(entries), mode)


def zero_chain(group: Group, space: CompactSpace, mode: str = EXACT) -> Chain:
    return Chain(group, space, (), mode)


def _check_compatible(a: Chain, b: Chain) -> None:
    if a.group != b.group or a.space.spec != b.space.spec or a.mode != b.mode:
        raise ChainError("chains differ in group, space or numeric mode")


def linear_combination(terms: Sequence[tuple], like: Chain) -> Chain:
    """sum of c * chain over ``terms``; all chains share group, space and mode."""
    space = like.space
    acc: dict = {}
    for c, chain in terms:
        _check_compatible(like, chain)
        c = coerce(c, like.mode)
        for g, f in chain.entries:
            scaled = space.scale(c, f)
            acc[g] = space.add(acc[g], scaled) if g in acc else scaled
    return make_chain(like.group, space, acc, like.mode)


def chain_sub(a: Chain, b: Chain) -> Chain:
    return linear_combination([(1, a), (-1, b)], a)


def convert_mode(xi: Chain, mode: str) -> Chain:
    """Switch numeric mode; rationals round to nearest float, ties to even."""
    return make_chain(xi.group, xi.space, xi.as_dict(), mode)


# ---------------------------------------------------------------------------
# summation, membership, action


def sigma(xi: Chain):
    """Pointwise sum over the group: a function on X."""
    zero = coerce(0, xi.mode)
    if not xi.entries:
        return xi.space.constant(zero)
    return xi.space.sum([f for _, f in xi.entries])


class Membership(NamedTuple):
    member: bool
    value: object


def is_w0(xi: Chain, tol: float = 0.0) -> Membership:
    s = sigma(xi)
    value = xi.space.constant_value(s)
    if value is not None:
        return Membership(True, value)
    if xi.mode == FLOAT and tol > 0:
        vals = xi.space.values(s)
        if max(vals) - min(vals) <= tol:
            return Membership(True, sum(vals) / len(vals))
    return Membership(False, None)


def is_n0(xi: Chain, tol: float = 0.0) -> bool:
    m = is_w0(xi, tol)
    return m.member and abs(m.value) <= tol


def act_chain(g, xi: Chain) -> Chain:
    """(g.xi)_h = g * xi_{g^{-1} h}."""
    G, X = xi.group, xi.space
    G.check(g)
    entries = [(G.mul(g, h), X.translate(g, f)) for h, f in xi.entries]
    entries.sort(key=lambda gf: G.order_key(gf[0]))
    return Chain(G, X, tuple(entries), xi.mode)


@dataclass(frozen=True)
class CoboundaryImage:
    components: tuple  # one Chain per generator, in S order

    def norm(self):
        return max(chain_norm(c) for c in self.components)


def coboundary(xi: Chain) -> CoboundaryImage:
    return CoboundaryImage(tuple(chain_sub(xi, act_chain(s, xi)) for s in xi.group.gens))


def chain_norm(xi: Chain):
    """sup over x of sum_g |xi_g(x)|."""
    if not xi.entries:
        return coerce(0, xi.mode)
    X = xi.space
    column_sums = X.combine(lambda *vs: sum(abs(v) for v in vs), [f for _, f in xi.entries])
    return X.max_abs(column_sums)


def defect(xi: Chain, generators: Iterable | None = None):
    """max over generators s of ||xi - s.xi||."""
    gens = xi.group.gens if generators is None else generators
    return max(chain_norm(chain_sub(xi, act_chain(s, xi))) for s in gens)


def normalize_chain(xi: Chain) -> Chain:
    """Replace xi by |xi| / sigma(|xi|); requires sigma(xi) = 1."""
    m = is_w0(xi)
    if not m.member or m.value != 1:
        raise ChainError("normalize_chain needs a W_0 chain with sigma value 1")
    X = xi.space
    absolute = {g: X.map_values(abs, f) for g, f in xi.entries}
    total = X.sum(list(absolute.values()))
    return make_chain(
        xi.group, X, {g: X.combine(lambda a, t: a / t, [f, total]) for g, f in absolute.items()}, xi.mode
    )


# ---------------------------------------------------------------------------
# functionals

SIGMA = "sigma"
EV = "ev"


@dataclass(frozen=True)
class DualFunctional:
    group: Group
    space: CompactSpace
    terms: tuple  # ((g, cell, coefficient), ...), sorted, distinct, nonzero
    mode: str = EXACT
    tag: str | None = None

    def coefficients(self) -> dict:
        return {(g, x): c for g, x, c in self.terms}


def make_dual(group: Group, space: CompactSpace, coeffs: dict, mode: str = EXACT, tag=None) -> DualFunctional:
    canonical = getattr(space, "canonical_cell", None)
    merged: dict = {}
    for (g, x), c in coeffs.items():
        key = (group.check(g), canonical(x) if canonical else x)
        merged[key] = merged.get(key, 0) + coerce(c, mode)
    terms = [(g, x, c) for (g, x), c in merged.items() if c != 0]
    terms.sort(key=lambda t: (group.order_key(t[0]), space.cell_key(t[1])))
    return DualFunctional(group, space, tuple(terms), mode, tag)


def sigma_functional(group: Group, space: CompactSpace, mode: str = EXACT) -> DualFunctional:
    return DualFunctional(group, space, (), mode, SIGMA)


def evaluation_functional(group: Group, space: CompactSpace, g, x, mode: str = EXACT) -> DualFunctional:
    """eta -> eta_g(x)."""
    return make_dual(group, space, {(g, x): 1}, mode, tag=EV)


def dual_act(g, phi: DualFunctional) -> DualFunctional:
    """(g.phi)(xi) = phi(g^{-1}.xi); moves coefficient (h, x) to (gh, g.x)."""
    if phi.tag == SIGMA:
        return phi
    G, X = phi.group, phi.space
    coeffs = {(G.mul(g, h), X.act_cell(g, x)): c for h, x, c in phi.terms}
    return make_dual(G, X, coeffs, phi.mode)


def dual_norm(phi: DualFunctional):
    """sum over cells of max over group elements of |coefficient|."""
    if phi.tag == SIGMA:
        raise ChainError("sigma has no coefficient representative")
    best: dict = {}
    for _, x, c in phi.terms:
        best[x] = max(best.get(x, 0), abs(c))
    return sum(best.values(), coerce(0, phi.mode))


def adjoint_coboundary(psis: Sequence[DualFunctional]) -> DualFunctional:
    """delta^* psi = sum_s psi_s - s^{-1}.psi_s, one psi per generator in S order."""
    if not psis:
        raise ChainError("adjoint_coboundary needs one functional per generator")
    G, X, mode = psis[0].group, psis[0].space, psis[0].mode
    if len(psis) != len(G.gens):
        raise ChainError(f"expected {len(G.gens)} functionals, got {len(psis)}")
    acc: dict = {}
    for s, psi in zip(G.gens, psis):
        if psi.tag == SIGMA or psi.mode != mode or psi.space.spec != X.spec:
            raise ChainError("incompatible functional in adjoint_coboundary")
        s_inv = G.inv(s)
        for h, x, c in psi.terms:
            acc[(h, x)] = acc.get((h, x), 0) + c
            key = (G.mul(s_inv, h), X.act_cell(s_inv, x))
            acc[key] = acc.get(key, 0) - c
    return make_dual(G, X, acc, mode)


def pair(phi: DualFunctional, xi: Chain):
    if phi.group != xi.group or phi.space.spec != xi.space.spec:
        raise ChainError("functional and chain are incompatible")
    if phi.tag == SIGMA:
        m = is_w0(xi)
        if not m.member:
            raise ChainError("sigma can only be paired with a W_0 chain")
        return m.value
    X = xi.space
    values = xi.as_dict()
    total = coerce(0, xi.mode)
    for g, x, c in phi.terms:
        f = values.get(g)
        if f is not None:
            total += c * X.evaluate(f, x)
    return total


# ---------------------------------------------------------------------------
# serialization


def _cells_of(space: CompactSpace, f) -> list:
    kind = space.kind
    if kind == "point":
        return [(0, f)]
    if kind == "finite":
        return [(x, v) for x, v in enumerate(f) if v != 0]
    if kind == "onepoint":
        out = list(f.points)
        if f.tail != 0:
            out.append(("inf", f.tail))
        return out
    if kind == "boundary":
        return [(w, v) for w, v in f.leaves if v != 0]
    raise ChainError(f"cannot serialize functions on {kind}")


def _function_from_cells(space: CompactSpace, cells: list, zero):
    kind = space.kind
    if kind == "point":
        return sum((v for _, v in cells), zero)
    if kind == "finite":
        return space.from_cells(dict(cells), zero)
    if kind == "onepoint":
        d = dict(cells)
        tail = d.pop("inf", zero)
        return space.make(d, tail)
    if kind == "boundary":
        return space.from_terms(zero, cells)
    raise ChainError(f"cannot deserialize functions on {kind}")


def chain_to_json(xi: Chain) -> dict:
    G, X = xi.group, xi.space
    rows = []
    for g, f in xi.entries:
        for x, v in _cells_of(X, f):
            rows.append([G.format(g), X.format_cell(x), format_value(v, xi.mode)])
    return {"group_spec": G.spec, "space_spec": X.spec, "mode": xi.mode, "entries": rows}


def chain_from_json(data: dict, space: CompactSpace | None = None) -> Chain:
    G = make_group(data["group_spec"])
    X = space if space is not None else make_space(G, data["space_spec"])
    mode = data["mode"]
    grouped: dict = {}
    for word, cell, value in data["entries"]:
        grouped.setdefault(G.parse(word), []).append((X.parse_cell(cell), coerce(value, mode)))
    zero = coerce(0, mode)
    mapping = {g: _function_from_cells(X, cells, zero) for g, cells in grouped.items()}
    return make_chain(G, X, mapping, mode)


def dual_to_json(phi: DualFunctional) -> dict:
    G, X = phi.group, phi.space
    return {
        "group_spec": G.spec,
        "space_spec": X.spec,
        "mode": phi.mode,
        "tag": phi.tag,
        "terms": [[G.format(g), X.format_cell(x), format_value(c, phi.mode)] for g, x, c in phi.terms],
    }


def dual_from_json(data: dict, space: CompactSpace | None = None) -> DualFunctional:
    G = make_group(data["group_spec"])
    X = space if space is not None else make_space(G, data["space_spec"])
    mode = data["mode"]
    if data.get("tag") == SIGMA:
        return sigma_functional(G, X, mode)
    coeffs = {(G.parse(w), X.parse_cell(x)): coerce(c, mode) for w, x, c in data["terms"]}
    return make_dual(G, X, coeffs, mode, data.get("tag"))
