"""Compact G-spaces at desk scale and the translation action on C(X).

Functions on each space are immutable values:

* point      a scalar;
* finite     a tuple of length m;
* onepoint   a :class:`TailFunction` (finite support plus the value at infinity);
* boundary   a :class:`CylinderFunction` (locally constant function on the
  boundary of F_k, stored as its coarsest cylinder partition).

The action on functions is ``(g*f)(x) = f(g^{-1} x)``.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .groups import (
    FreeAbelianGroup,
    FreeGroup,
    Group,
    GroupSpecError,
    PermutationGroup,
    ProductGroup,
    cycles_to_perm,
    parse_cycles,
    perm_inv,
    perm_mul,
    size_guard,
    ResourceGuardError,
)

INF = "inf"
DEFAULT_DEPTH_CAP = 24


class SpaceSpecError(ValueError):
    """Raised for malformed or incompatible space descriptors."""


class DepthCapError(RuntimeError):
    """Raised when a boundary function would need cylinders deeper than the cap."""


class CompactSpace:
    kind: str
    spec: str
    group: Group

    # -- function algebra
    def constant(self, c):
        raise NotImplementedError

    def combine(self, op: Callable, fs: Sequence):
        """Apply ``op`` pointwise to the functions ``fs``."""
        raise NotImplementedError

    def constant_value(self, f):
        """The value of f if it is constant, else ``None``."""
        raise NotImplementedError

    def values(self, f) -> list:
        """Every value attained by f."""
        raise NotImplementedError

    def translate(self, g, f):
        raise NotImplementedError

    def evaluate(self, f, cell):
        raise NotImplementedError

    def act_cell(self, g, cell):
        raise NotImplementedError

    def is_zero(self, f) -> bool:
        return self.constant_value(f) == 0

    def max_abs(self, f):
        return max(abs(v) for v in self.values(f))

    def map_values(self, fn: Callable, f):
        return self.combine(fn, [f])

    def add(self, f, g):
        return self.combine(lambda a, b: a + b, [f, g])

    def sub(self, f, g):
        return self.combine(lambda a, b: a - b, [f, g])

    def scale(self, c, f):
        return self.combine(lambda a: c * a, [f])

    def sum(self, fs: Sequence):
        if not fs:
            return self.constant(0)
        return self.combine(lambda *vs: sum(vs), list(fs))

    def format_cell(self, cell) -> str:
        return str(cell)

    def parse_cell(self, text: str):
        raise NotImplementedError

    def cell_key(self, cell):
        return cell

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.group.spec!r}, {self.spec!r})"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CompactSpace)
            and other.kind == self.kind
            and other.spec == self.spec
            and other.group == self.group
        )

    def __hash__(self) -> int:
        return hash((self.kind, self.spec, self.group.spec))


# ---------------------------------------------------------------------------
# point


class PointSpace(CompactSpace):
    kind = "point"

    def __init__(self, group: Group) -> None:
        self.group = group
        self.spec = "point"

    def constant(self, c):
        return c

    def combine(self, op, fs):
        return op(*fs)

    def constant_value(self, f):
        return f

    def values(self, f):
        return [f]

    def translate(self, g, f):
        return f

    def evaluate(self, f, cell):
        return f

    def act_cell(self, g, cell):
        return cell

    def points(self) -> list:
        return [0]

    def act_point(self, g, x):
        return x

    def from_cells(self, values: dict, zero=0):
        return values.get(0, zero)

    def format_cell(self, cell) -> str:
        return "*"

    def parse_cell(self, text: str):
        if text != "*":
            raise SpaceSpecError(f"point space cell must be '*', got {text!r}")
        return 0


# ---------------------------------------------------------------------------
# finite G-sets


class FiniteSpace(CompactSpace):
    """A finite set {0..m-1} with one permutation per generator."""

    kind = "finite"

    def __init__(self, group: Group, m: int, gen_perms: dict[str, tuple[int, ...]]) -> None:
        self.group = group
        self.m = m
        perms: list[tuple | None] = [None] * len(group.gens)
        ident = tuple(range(m))
        for name in group.positive_names:
            p = gen_perms.get(name, ident)
            if len(p) != m or sorted(p) != list(range(m)):
                raise SpaceSpecError(f"permutation for {name!r} is not a bijection of range({m})")
            i = group.gen_index(name)
            perms[i] = p
            j = group.inverse_index(i)
            if j != i:
                perms[j] = perm_inv(p)
            elif perm_mul(p, p) != ident:
                raise SpaceSpecError(f"generator {name!r} is an involution but its permutation is not")
        for i, p in enumerate(perms):
            if p is None:
                raise SpaceSpecError(f"no permutation for generator {group.gen_names[i]!r}")
        self.gen_perms = tuple(perms)
        _check_relations(group, self.gen_perms, m)
        parts = []
        for name in group.positive_names:
            p = self.gen_perms[group.gen_index(name)]
            if p != ident:
                parts.append(f"{name}->{_format_cycles(p)}")
        self.spec = f"finite[{m}]:" + ";".join(parts)
        self._perm_cache: dict = {}

    def perm_of(self, g) -> tuple[int, ...]:
        """The permutation x -> g.x."""
        p = self._perm_cache.get(g)
        if p is None:
            p = tuple(range(self.m))
            for i in self.group.word(g):
                p = perm_mul(p, self.gen_perms[i])
            self._perm_cache[g] = p
        return p

    def points(self) -> list:
        return list(range(self.m))

    def act_point(self, g, x):
        return self.perm_of(g)[x]

    def constant(self, c):
        return (c,) * self.m

    def combine(self, op, fs):
        return tuple(op(*vs) for vs in zip(*fs))

    def constant_value(self, f):
        return f[0] if all(v == f[0] for v in f) else None

    def values(self, f):
        return list(f)

    def translate(self, g, f):
        q = self.perm_of(self.group.inv(g))
        return tuple(f[q[x]] for x in range(self.m))

    def evaluate(self, f, cell):
        return f[cell]

    def act_cell(self, g, cell):
        return self.perm_of(g)[cell]

    def from_cells(self, values: dict, zero=0):
        return tuple(values.get(x, zero) for x in range(self.m))

    def parse_cell(self, text: str):
        x = int(text)
        if not 0 <= x < self.m:
            raise SpaceSpecError(f"cell {x} outside finite space of size {self.m}")
        return x


def _format_cycles(p: Sequence[int]) -> str:
    seen = set()
    out = []
    for start in range(len(p)):
        if start in seen or p[start] == start:
            continue
        cyc = [start]
        seen.add(start)
        x = p[start]
        while x != start:
            cyc.append(x)
            seen.add(x)
            x = p[x]
        out.append("(" + " ".join(map(str, cyc)) + ")")
    return "".join(out) or "()"


def _check_relations(group: Group, gen_perms: Sequence[tuple], m: int) -> None:
    """Validate that generator permutations define an action of ``group``."""
    if isinstance(group, FreeGroup):
        return
    if isinstance(group, FreeAbelianGroup):
        pos = gen_perms[: group.d]
        for i, j in itertools.combinations(range(group.d), 2):
            if perm_mul(pos[i], pos[j]) != perm_mul(pos[j], pos[i]):
                raise SpaceSpecError(
                    f"permutations for {group.gen_names[i]!r} and {group.gen_names[j]!r} do not commute"
                )
        return
    if isinstance(group, PermutationGroup):
        # the word-based action must be a homomorphism on the Cayley graph
        act = {}
        for g in group.elements:
            p = tuple(range(m))
            for i in group.word(g):
                p = perm_mul(p, gen_perms[i])
            act[g] = p
        for g in group.elements:
            for i, s in enumerate(group.gens):
                if act[group.mul(g, s)] != perm_mul(act[g], gen_perms[i]):
                    raise SpaceSpecError(
                        f"permutations violate a defining relation of {group.spec}"
                    )
        return
    if isinstance(group, ProductGroup):
        nl = len(group.left.gens)
        left, right = gen_perms[:nl], gen_perms[nl:]
        _check_relations(group.left, left, m)
        _check_relations(group.right, right, m)
        for p in left:
            for q in right:
                if perm_mul(p, q) != perm_mul(q, p):
                    raise SpaceSpecError("permutations of the two factors do not commute")
        return
    raise SpaceSpecError(f"no relation check for {group.spec}")


# ---------------------------------------------------------------------------
# one-point compactification G ∪ {∞}


@dataclass(frozen=True)
class TailFunction:
    """Function on G ∪ {∞}: listed values on finitely many group points, ``tail`` elsewhere."""

    points: tuple  # ((g, value), ...) sorted by ball order, no value equal to tail
    tail: object

    def value_at(self, x):
        if x == INF:
            return self.tail
        return dict(self.points).get(x, self.tail)


class OnePointSpace(CompactSpace):
    kind = "onepoint"

    def __init__(self, group: Group) -> None:
        if group.is_finite:
            raise SpaceSpecError("the one-point compactification needs an infinite group")
        self.group = group
        self.spec = "onepoint"

    def make(self, values: dict, tail):
        items = [(g, v) for g, v in values.items() if v != tail]
        items.sort(key=lambda gv: self.group.order_key(gv[0]))
        return TailFunction(tuple(items), tail)

    def indicator(self, g, one=1, zero=0):
        return self.make({g: one}, zero)

    def constant(self, c):
        return TailFunction((), c)

    def combine(self, op, fs):
        support = {}
        for f in fs:
            for g, _ in f.points:
                support[g] = None
        maps = [dict(f.points) for f in fs]
        tail = op(*(f.tail for f in fs))
        values = {g: op(*(m.get(g, f.tail) for m, f in zip(maps, fs))) for g in support}
        return self.make(values, tail)

    def constant_value(self, f):
        return f.tail if not f.points else None

    def values(self, f):
        return [v for _, v in f.points] + [f.tail]

    def translate(self, g, f):
        return self.make({self.group.mul(g, p): v for p, v in f.points}, f.tail)

    def evaluate(self, f, cell):
        return f.value_at(cell)

    def act_cell(self, g, cell):
        return INF if cell == INF else self.group.mul(g, cell)

    def act_point(self, g, x):
        return self.act_cell(g, x)

    def format_cell(self, cell) -> str:
        return INF if cell == INF else self.group.format(cell)

    def parse_cell(self, text: str):
        return INF if text == INF else self.group.parse(text)

    def cell_key(self, cell):
        return (1,) if cell == INF else (0, self.group.order_key(cell))


# ---------------------------------------------------------------------------
# boundary of the free group


@dataclass(frozen=True)
class CylinderFunction:
    """Locally constant function on ∂F_k as its coarsest cylinder partition.

    ``leaves`` holds (reduced word, value) pairs whose cylinders partition the
    boundary; no set of sibling leaves with a common value remains unmerged, so
    the representation is canonical.  The empty word is the whole boundary.
    """

    leaves: tuple
    _lookup: dict = field(default=None, compare=False, repr=False, hash=False)

    @property
    def depth(self) -> int:
        return max(len(w) for w, _ in self.leaves)

    def lookup(self) -> dict:
        if self._lookup is None:
            object.__setattr__(self, "_lookup", dict(self.leaves))
        return self._lookup

    def value_on(self, word: tuple):
        """Value on the cylinder [word]; it must be constant there."""
        d = self.lookup()
        for i in range(len(word) + 1):
            v = d.get(word[:i], _MISSING)
            if v is not _MISSING:
                return v
        raise ValueError(f"function is not constant on cylinder {word}")


_MISSING = object()


def _children(k: int, w: tuple) -> list[tuple]:
    letters = list(range(1, k + 1)) + [-i for i in range(1, k + 1)]
    if w:
        letters.remove(-w[-1])
    return [w + (l,) for l in letters]


def _build_partition(k: int, prefix: tuple, acc, terms: list) -> list:
    """Canonical leaves of ``acc + sum(c * 1_[w])`` restricted to [prefix].

    ``terms`` are (word, coefficient) pairs with words strictly extending prefix.
    """
    if not terms:
        return [(prefix, acc)]
    depth = len(prefix)
    grouped: dict[int, list] = {}
    for w, c in terms:
        grouped.setdefault(w[depth], []).append((w, c))
    out = []
    for child in _children(k, prefix):
        sub = grouped.get(child[-1], [])
        here = acc
        deeper = []
        for w, c in sub:
            if len(w) == depth + 1:
                here = here + c
            else:
                deeper.append((w, c))
        out.extend(_build_partition(k, child, here, deeper))
    n_children = 2 * k if not prefix else 2 * k - 1
    if len(out) == n_children and all(len(w) == depth + 1 for w, _ in out):
        first = out[0][1]
        if all(v == first for _, v in out):
            return [(prefix, first)]
    return out


def _refine(k: int, prefix: tuple, words: list) -> list:
    """Leaves of the coarsest cylinder partition refining every word in ``words``."""
    depth = len(prefix)
    deeper = [w for w in words if len(w) > depth]
    if not deeper:
        return [prefix]
    grouped: dict[int, list] = {}
    for w in deeper:
        grouped.setdefault(w[depth], []).append(w)
    out = []
    for child in _children(k, prefix):
        out.extend(_refine(k, child, grouped.get(child[-1], [])))
    return out


def reduced_words(k: int, length: int) -> list[tuple]:
    """All reduced words of the given length, in canonical (letter-rank) order."""
    words = [()]
    for _ in range(length):
        words = [c for w in words for c in _children(k, w)]
    return words


def free_reduce_concat(u: tuple, w: tuple) -> tuple[tuple, int]:
    """Reduced form of the concatenation u w and the number of cancelled letters."""
    i = 0
    n = min(len(u), len(w))
    while i < n and u[-1 - i] == -w[i]:
        i += 1
    return u[: len(u) - i] + w[i:], i


class FreeBoundarySpace(CompactSpace):
    """The Gromov boundary of F_k through its clopen cylinder algebra."""

    kind = "boundary"

    def __init__(self, group: Group, depth_cap: int = DEFAULT_DEPTH_CAP) -> None:
        if not isinstance(group, FreeGroup):
            raise SpaceSpecError("the boundary space is only defined for free groups F_k")
        self.group = group
        self.k = group.k
        self.spec = "boundary"
        self.depth_cap = depth_cap

    def table_size(self, depth: int) -> int:
        return 2 * self.k * (2 * self.k - 1) ** (depth - 1)

    def from_terms(self, base, terms: list) -> CylinderFunction:
        root = [(w, c) for w, c in terms if w]
        base = base + sum((c for w, c in terms if not w), 0 * base)
        leaves = _build_partition(self.k, (), base, root)
        leaves.sort(key=lambda wv: self._word_key(wv[0]))
        f = CylinderFunction(tuple(leaves))
        if f.depth > self.depth_cap:
            raise DepthCapError(f"cylinder depth {f.depth} exceeds depth cap {self.depth_cap}")
        return f

    def _word_key(self, w):
        return self.group.key(w)

    def indicator(self, word: tuple, one=1, zero=0) -> CylinderFunction:
        return self.from_terms(zero, [(tuple(word), one - zero)])

    def constant(self, c):
        return CylinderFunction((((), c),))

    def from_table(self, depth: int, values: Sequence) -> CylinderFunction:
        words = reduced_words(self.k, depth)
        if len(values) != len(words):
            raise ValueError(f"table at depth {depth} needs {len(words)} entries")
        zero = 0 * values[0]
        return self.from_terms(zero, list(zip(words, values)))

    def to_table(self, f: CylinderFunction, depth: int) -> list:
        if depth < f.depth:
            raise ValueError("table depth is shallower than the function's partition")
        if self.table_size(depth) > size_guard():
            raise ResourceGuardError("dense cylinder table exceeds the size guard")
        return [f.value_on(w) for w in reduced_words(self.k, depth)]

    def combine(self, op, fs):
        words = list({w for f in fs for w, _ in f.leaves})
        leaves = _refine(self.k, (), words)
        terms = [(w, op(*(f.value_on(w) for f in fs))) for w in leaves]
        if len(terms) == 1 and terms[0][0] == ():
            return CylinderFunction(((( ), terms[0][1]),))
        zero = 0 * terms[0][1]
        return self.from_terms(zero, terms)

    def constant_value(self, f):
        return f.leaves[0][1] if len(f.leaves) == 1 else None

    def values(self, f):
        return [v for _, v in f.leaves]

    def translate(self, g, f):
        """g*f via the images g.[w] of the leaf cylinders.

        g.[w] is the cylinder [gw] unless w cancels entirely against g; then
        with g = u w^{-1} and l the last letter of w it is the complement of
        the cylinder [u l^{-1}].
        """
        self.group.check(g)
        zero = 0 * f.leaves[0][1]
        base = zero
        terms = []
        for w, v in f.leaves:
            if not w:
                base = base + v
                continue
            z, cancelled = free_reduce_concat(g, w)
            if cancelled < len(w):
                terms.append((z, v))
            else:
                base = base + v
                terms.append((z + (-w[-1],), -v))
        return self.from_terms(base, terms)

    # A cell is a nonempty reduced word w naming the boundary point w l l l ...
    # (l the last letter of w), stored without trailing repeats of l.  On
    # functions that are constant on [w] this is the cylinder value.

    @staticmethod
    def canonical_cell(word: tuple) -> tuple:
        if not word:
            raise ValueError("boundary cells are nonempty reduced words")
        end = len(word)
        while end > 1 and word[end - 2] == word[-1]:
            end -= 1
        return tuple(word[:end])

    def evaluate(self, f, cell):
        cell = tuple(cell)
        need = f.depth - len(cell)
        return f.value_on(cell + cell[-1:] * max(need, 0) if cell else cell)

    def act_cell(self, g, cell):
        if not cell:
            raise ValueError("boundary cells are nonempty reduced words")
        z, _ = free_reduce_concat(g, tuple(cell) + (cell[-1],) * (len(g) + 1))
        return self.canonical_cell(z)

    def format_cell(self, cell) -> str:
        return self.group.format(cell)

    def parse_cell(self, text: str):
        return self.group.parse(text)

    def cell_key(self, cell):
        return self.group.order_key(cell)


# ---------------------------------------------------------------------------
# descriptors


def make_space(group: Group, spec: str) -> CompactSpace:
    """Parse ``point``, ``onepoint``, ``boundary`` or ``finite:<gen>↦<cycles>;...``."""
    text = spec.strip()
    if text == "point":
        return PointSpace(group)
    if text == "onepoint":
        return OnePointSpace(group)
    if text == "boundary":
        return FreeBoundarySpace(group)
    m = re.fullmatch(r"finite(?:\[(\d+)\])?\s*:(.*)", text, flags=re.S)
    if m:
        size = int(m.group(1)) if m.group(1) else 0
        body = m.group(2).strip()
        assignments = []
        if body:
            for part in _split_assignments(body):
                part = part.strip()
                if not part:
                    continue
                pieces = re.split(r"\s*(?:↦|->|=)\s*", part, maxsplit=1)
                if len(pieces) != 2:
                    raise SpaceSpecError(f"malformed generator assignment {part!r}")
                name, cyc = pieces
                if name not in group.positive_names:
                    raise SpaceSpecError(
                        f"unknown generator {name!r}; expected one of {group.positive_names}"
                    )
                cycles, n = parse_cycles(cyc)
                assignments.append((name, cycles))
                size = max(size, n)
        if size == 0:
            raise SpaceSpecError(f"finite space {spec!r} has no points")
        perms = {name: cycles_to_perm(c, size) for name, c in assignments}
        try:
            return FiniteSpace(group, size, perms)
        except GroupSpecError as exc:
            raise SpaceSpecError(str(exc)) from exc
    raise SpaceSpecError(f"unrecognised space descriptor {spec!r}")


def _split_assignments(body: str) -> list[str]:
    parts, cur, depth = [], [], 0
    for c in body:
        depth += c == "("
        depth -= c == ")"
        if c in ",;" and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(c)
    parts.append("".join(cur))
    return parts


def translate(space: CompactSpace, g, f):
    return space.translate(g, f)


# ---------------------------------------------------------------------------
# equivariant maps between finite spaces


def _finite_points(space: CompactSpace) -> list:
    if isinstance(space, (FiniteSpace, PointSpace)):
        return space.points()
    raise SpaceSpecError("equivariant maps are supported between finite spaces only")


@dataclass(frozen=True)
class EquivariantMap:
    source: CompactSpace
    target: CompactSpace
    table: tuple  # image of each source point

    def __post_init__(self) -> None:
        if self.source.group != self.target.group:
            raise SpaceSpecError("source and target must carry the same group")
        src, tgt = _finite_points(self.source), _finite_points(self.target)
        if len(self.table) != len(src) or any(y not in tgt for y in self.table):
            raise SpaceSpecError("map table does not send source points to target points")
        report = check_equivariant(self)
        if not report["equivariant"]:
            raise SpaceSpecError(f"map is not equivariant: {report['violations'][:3]}")

    @property
    def surjective(self) -> bool:
        return set(self.table) == set(_finite_points(self.target))

    def fibers(self) -> dict:
        out: dict = {y: [] for y in _finite_points(self.target)}
        for x, y in enumerate(self.table):
            out[y].append(x)
        return out

    def pullback(self, f):
        """f ∘ map for a function f on the target."""
        if isinstance(self.target, PointSpace):
            values = [f] * len(self.table)
        else:
            values = [f[y] for y in self.table]
        if isinstance(self.source, PointSpace):
            return values[0]
        return tuple(values)


def check_equivariant(fmap: EquivariantMap) -> dict:
    """Check f(s.x) = s.f(x) for every generator and point; report fibers."""
    src, tgt = fmap.source, fmap.target
    violations = []
    for i, s in enumerate(src.group.gens):
        for x in _finite_points(src):
            lhs = fmap.table[src.act_point(s, x)]
            rhs = tgt.act_point(s, fmap.table[x])
            if lhs != rhs:
                violations.append({"generator": src.group.gen_names[i], "point": x})
    fibers = {y: 0 for y in _finite_points(tgt)}
    for y in fmap.table:
        fibers[y] += 1
    return {
        "equivariant": not violations,
        "surjective": all(c > 0 for c in fibers.values()),
        "fiber_sizes": [fibers[y] for y in sorted(fibers)],
        "violations": violations,
    }


def make_map(source: CompactSpace, target: CompactSpace, table: Iterable[int]) -> EquivariantMap:
    return EquivariantMap(source, target, tuple(table))
