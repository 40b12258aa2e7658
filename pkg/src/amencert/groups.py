"""Finitely generated groups with canonical normal forms.

Three families are supported, plus direct products of them:

* ``Z^d``   free abelian groups, elements are integer tuples;
* ``F_k``   free groups, elements are reduced words stored as tuples of
  nonzero ints (``i`` is the i-th letter, ``-i`` its inverse);
* ``perm:[...]`` finite permutation groups, elements are image tuples.

Products ``prod(A,B)`` use pairs ``(a, b)`` as elements.  Every element has a
unique canonical form, so equality of elements is equality of tuples.
"""

from __future__ import annotations

import os
import re
import string
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Sequence

Element = tuple

DEFAULT_SIZE_GUARD = 5_000_000


class GroupSpecError(ValueError):
    """Raised for malformed group descriptors or invalid generators."""


class ResourceGuardError(RuntimeError):
    """Raised when an enumeration would exceed the configured size cap."""


def size_guard() -> int:
    value = os.environ.get("AMENCERT_SIZE_GUARD")
    if value:
        return int(value)
    return DEFAULT_SIZE_GUARD


@dataclass(frozen=True)
class Ball:
    """The word-metric ball of a given radius, in (length, canonical) order."""

    radius: int
    elements: tuple
    lengths: tuple
    index: dict = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def __contains__(self, g) -> bool:
        return g in self.index


class Group:
    """Base class; subclasses implement the family-specific arithmetic."""

    spec: str
    gens: tuple
    gen_names: tuple
    positive_names: tuple
    identity: Element
    is_finite: bool

    def __init__(self) -> None:
        self._balls: dict[int, Ball] = {}

    # -- arithmetic, overridden per family
    def mul(self, g: Element, h: Element) -> Element:
        raise NotImplementedError

    def inv(self, g: Element) -> Element:
        raise NotImplementedError

    def length(self, g: Element) -> int:
        """Word length d(e, g) with respect to the generating set."""
        raise NotImplementedError

    def word(self, g: Element) -> tuple[int, ...]:
        """Indices into ``gens`` of a geodesic word s_1 ... s_n equal to g."""
        raise NotImplementedError

    def contains(self, g: Any) -> bool:
        raise NotImplementedError

    def key(self, g: Element):
        """Lexicographic sort key of the canonical form."""
        return g

    def format(self, g: Element) -> str:
        raise NotImplementedError

    def parse(self, text: str) -> Element:
        raise NotImplementedError

    # -- shared behaviour
    def check(self, g: Any) -> Element:
        if not self.contains(g):
            raise GroupSpecError(f"{g!r} is not an element of {self.spec}")
        return g

    def multiply(self, g: Element, h: Element) -> Element:
        return self.mul(self.check(g), self.check(h))

    def order_key(self, g: Element):
        return (self.length(g), self.key(g))

    def gen_index(self, name: str) -> int:
        try:
            return self.gen_names.index(name)
        except ValueError:
            raise GroupSpecError(f"unknown generator {name!r} for {self.spec}") from None

    def inverse_index(self, i: int) -> int:
        return self.gens.index(self.inv(self.gens[i]))

    def ball(self, n: int) -> Ball:
        """Enumerate B_n by breadth-first search over right multiplication by S."""
        if n < 0:
            raise ValueError("radius must be non-negative")
        cached = self._balls.get(n)
        if cached is not None:
            return cached
        cap = size_guard()
        dist = {self.identity: 0}
        frontier = [self.identity]
        for r in range(1, n + 1):
            nxt = []
            for g in frontier:
                for s in self.gens:
                    h = self.mul(g, s)
                    if h not in dist:
                        dist[h] = r
                        nxt.append(h)
                        if len(dist) > cap:
                            raise ResourceGuardError(
                                f"ball of radius {n} in {self.spec} exceeds size guard {cap}"
                            )
            if not nxt:
                break
            frontier = nxt
        elements = sorted(dist, key=lambda g: (dist[g], self.key(g)))
        ball = Ball(
            radius=n,
            elements=tuple(elements),
            lengths=tuple(dist[g] for g in elements),
            index={g: i for i, g in enumerate(elements)},
        )
        self._balls[n] = ball
        return ball

    def __repr__(self) -> str:
        return f"Group({self.spec!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, Group) and other.spec == self.spec

    def __hash__(self) -> int:
        return hash(self.spec)


def _letter_names(count: int, pool: str) -> list[str]:
    if count <= len(pool):
        return list(pool[:count])
    return [f"{pool[0]}{i + 1}" for i in range(count)]


class FreeAbelianGroup(Group):
    def __init__(self, d: int) -> None:
        super().__init__()
        if d <= 0:
            raise GroupSpecError(f"Z^{d}: rank must be positive")
        self.d = d
        self.spec = f"Z^{d}"
        self.identity = (0,) * d
        self.is_finite = False
        basis = [tuple(1 if j == i else 0 for j in range(d)) for i in range(d)]
        self.gens = tuple(basis + [tuple(-x for x in b) for b in basis])
        names = _letter_names(d, "xyzw")
        self.positive_names = tuple(names)
        self.gen_names = tuple(names + [n.upper() for n in names])

    def contains(self, g) -> bool:
        return isinstance(g, tuple) and len(g) == self.d and all(type(x) is int for x in g)

    def mul(self, g, h):
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g):
        return tuple(-a for a in g)

    def length(self, g) -> int:
        return sum(abs(a) for a in g)

    def word(self, g):
        out = []
        for i, a in enumerate(g):
            out.extend([i if a > 0 else i + self.d] * abs(a))
        return tuple(out)

    def format(self, g) -> str:
        return "(" + ",".join(str(a) for a in g) + ")"

    def parse(self, text: str):
        m = re.fullmatch(r"\(\s*(-?\d+(?:\s*,\s*-?\d+)*)\s*\)", text.strip())
        if not m:
            raise GroupSpecError(f"cannot parse {text!r} as an element of {self.spec}")
        return self.check(tuple(int(x) for x in m.group(1).split(",")))


class FreeGroup(Group):
    def __init__(self, k: int) -> None:
        super().__init__()
        if k <= 0:
            raise GroupSpecError(f"F_{k}: rank must be positive")
        if k > 26:
            raise GroupSpecError("free groups of rank above 26 are not supported")
        self.k = k
        self.spec = f"F_{k}"
        self.identity = ()
        self.is_finite = False
        self.letters = tuple(range(1, k + 1)) + tuple(-i for i in range(1, k + 1))
        self.gens = tuple((l,) for l in self.letters)
        lower = string.ascii_lowercase[:k]
        self.positive_names = tuple(lower)
        self.gen_names = tuple(lower) + tuple(lower.upper())
        self._letter_rank = {l: i for i, l in enumerate(self.letters)}

    def contains(self, g) -> bool:
        if not isinstance(g, tuple):
            return False
        prev = 0
        for l in g:
            if type(l) is not int or l == 0 or abs(l) > self.k or l == -prev:
                return False
            prev = l
        return True

    def mul(self, g, h):
        i = 0
        n = min(len(g), len(h))
        while i < n and g[-1 - i] == -h[i]:
            i += 1
        return g[: len(g) - i] + h[i:]

    def inv(self, g):
        return tuple(-l for l in reversed(g))

    def length(self, g) -> int:
        return len(g)

    def word(self, g):
        return tuple(self._letter_rank[l] for l in g)

    def key(self, g):
        return tuple(self._letter_rank[l] for l in g)

    def letter_name(self, l: int) -> str:
        c = string.ascii_lowercase[abs(l) - 1]
        return c if l > 0 else c.upper()

    def format(self, g) -> str:
        if not g:
            return "e"
        return "".join(self.letter_name(l) for l in g)

    def parse(self, text: str):
        text = text.strip()
        if text == "e":
            return ()
        out = []
        for c in text:
            if c.isspace():
                continue
            if c.lower() not in self.positive_names:
                raise GroupSpecError(f"cannot parse {text!r} as an element of {self.spec}")
            l = string.ascii_lowercase.index(c.lower()) + 1
            out.append(l if c.islower() else -l)
        return _free_reduce(out)


def _free_reduce(letters: Sequence[int]) -> tuple:
    stack: list[int] = []
    for l in letters:
        if stack and stack[-1] == -l:
            stack.pop()
        else:
            stack.append(l)
    return tuple(stack)


def parse_cycles(text: str, minimum_size: int = 0) -> tuple[list[tuple[int, ...]], int]:
    """Parse cycle notation such as ``(0 1 2)(3 4)``; returns cycles and point count."""
    text = text.strip()
    if not re.fullmatch(r"(\(\s*\d+(\s*[ ,]\s*\d+)*\s*\)\s*)*", text):
        raise GroupSpecError(f"malformed cycle notation {text!r}")
    cycles = []
    size = minimum_size
    seen: set[int] = set()
    for body in re.findall(r"\(([^)]*)\)", text):
        pts = [int(x) for x in re.split(r"[\s,]+", body.strip()) if x]
        if len(set(pts)) != len(pts) or seen & set(pts):
            raise GroupSpecError(f"cycles in {text!r} are not disjoint: not a bijection")
        seen |= set(pts)
        cycles.append(tuple(pts))
        size = max(size, max(pts) + 1)
    return cycles, size


def cycles_to_perm(cycles: Sequence[Sequence[int]], m: int) -> tuple[int, ...]:
    image = list(range(m))
    for cyc in cycles:
        for i, p in enumerate(cyc):
            image[p] = cyc[(i + 1) % len(cyc)]
    return tuple(image)


def perm_mul(p: Sequence[int], q: Sequence[int]) -> tuple[int, ...]:
    """Composition p∘q (apply q first)."""
    return tuple(p[x] for x in q)


def perm_inv(p: Sequence[int]) -> tuple[int, ...]:
    out = [0] * len(p)
    for i, x in enumerate(p):
        out[x] = i
    return tuple(out)


class PermutationGroup(Group):
    """Subgroup of Sym(m) generated by the supplied permutations."""

    def __init__(self, generators: Sequence[tuple[int, ...]], spec: str) -> None:
        super().__init__()
        if not generators:
            raise GroupSpecError("a permutation group needs at least one generator")
        m = len(generators[0])
        for p in generators:
            if len(p) != m or sorted(p) != list(range(m)):
                raise GroupSpecError(f"{p} is not a bijection of range({m})")
        self.m = m
        self.spec = spec
        self.identity = tuple(range(m))
        self.is_finite = True
        gens: list[tuple] = []
        for p in generators:
            if p == self.identity:
                raise GroupSpecError("generating set may not contain the identity")
            if p not in gens:
                gens.append(p)
        positive = list(gens)
        for p in positive:
            q = perm_inv(p)
            if q not in gens:
                gens.append(q)
        self.gens = tuple(gens)
        self.positive_names = tuple(f"g{i + 1}" for i in range(len(positive)))
        names = list(self.positive_names)
        for p in gens[len(positive):]:
            names.append(names[positive.index(perm_inv(p))] + "^-1")
        self.gen_names = tuple(names)
        self._enumerate()

    def _enumerate(self) -> None:
        cap = size_guard()
        dist = {self.identity: 0}
        word: dict[tuple, tuple] = {self.identity: ()}
        queue = deque([self.identity])
        while queue:
            g = queue.popleft()
            for i, s in enumerate(self.gens):
                h = perm_mul(g, s)
                if h not in dist:
                    dist[h] = dist[g] + 1
                    word[h] = word[g] + (i,)
                    queue.append(h)
                    if len(dist) > cap:
                        raise ResourceGuardError(f"{self.spec} exceeds size guard {cap}")
        self._dist = dist
        self._word = word
        self.order = len(dist)
        self.elements = tuple(sorted(dist, key=lambda g: (dist[g], g)))

    def contains(self, g) -> bool:
        return g in self._dist

    def mul(self, g, h):
        return perm_mul(g, h)

    def inv(self, g):
        return perm_inv(g)

    def length(self, g) -> int:
        return self._dist[g]

    def word(self, g):
        return self._word[g]

    def format(self, g) -> str:
        return "[" + ",".join(str(x) for x in g) + "]"

    def parse(self, text: str):
        m = re.fullmatch(r"\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]", text.strip())
        if not m:
            raise GroupSpecError(f"cannot parse {text!r} as an element of {self.spec}")
        return self.check(tuple(int(x) for x in m.group(1).split(",")))


class ProductGroup(Group):
    """Direct product A × B with S = (S_A × {e}) ∪ ({e} × S_B)."""

    def __init__(self, left: Group, right: Group) -> None:
        super().__init__()
        self.left = left
        self.right = right
        self.spec = f"prod({left.spec},{right.spec})"
        self.identity = (left.identity, right.identity)
        self.is_finite = left.is_finite and right.is_finite
        lgens = [(s, right.identity) for s in left.gens]
        rgens = [(left.identity, t) for t in right.gens]
        self.gens = tuple(lgens + rgens)
        lnames, rnames = list(left.gen_names), list(right.gen_names)
        if set(lnames) & set(rnames):
            lnames = ["L." + n for n in lnames]
            rnames = ["R." + n for n in rnames]
        self.gen_names = tuple(lnames + rnames)
        lpos = [lnames[left.gen_names.index(n)] for n in left.positive_names]
        rpos = [rnames[right.gen_names.index(n)] for n in right.positive_names]
        self.positive_names = tuple(lpos + rpos)

    def contains(self, g) -> bool:
        return (
            isinstance(g, tuple)
            and len(g) == 2
            and self.left.contains(g[0])
            and self.right.contains(g[1])
        )

    def mul(self, g, h):
        return (self.left.mul(g[0], h[0]), self.right.mul(g[1], h[1]))

    def inv(self, g):
        return (self.left.inv(g[0]), self.right.inv(g[1]))

    def length(self, g) -> int:
        return self.left.length(g[0]) + self.right.length(g[1])

    def word(self, g):
        offset = len(self.left.gens)
        return self.left.word(g[0]) + tuple(offset + i for i in self.right.word(g[1]))

    def key(self, g):
        return (self.left.order_key(g[0]), self.right.order_key(g[1]))

    def format(self, g) -> str:
        return f"<{self.left.format(g[0])}|{self.right.format(g[1])}>"

    def parse(self, text: str):
        text = text.strip()
        if not (text.startswith("<") and text.endswith(">")):
            raise GroupSpecError(f"cannot parse {text!r} as an element of {self.spec}")
        a, b = _split_top_level(text[1:-1], "|")
        return (self.left.parse(a), self.right.parse(b))


def _split_top_level(text: str, sep: str) -> list[str]:
    depth = 0
    parts, cur = [], []
    for c in text:
        if c in "([<":
            depth += 1
        elif c in ")]>":
            depth -= 1
        if c == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(c)
    parts.append("".join(cur))
    return parts


_GROUP_CACHE: dict[str, Group] = {}


def make_group(spec: str) -> Group:
    """Build a group from its descriptor: ``Z^d``, ``F_k``, ``perm:[...]``, ``prod(A,B)``."""
    spec = spec.strip()
    cached = _GROUP_CACHE.get(spec)
    if cached is not None:
        return cached
    group = _make_group(spec)
    _GROUP_CACHE[spec] = group
    return group


def _make_group(spec: str) -> Group:
    m = re.fullmatch(r"Z\^(-?\d+)", spec)
    if m:
        return FreeAbelianGroup(int(m.group(1)))
    m = re.fullmatch(r"F_(-?\d+)", spec)
    if m:
        return FreeGroup(int(m.group(1)))
    m = re.fullmatch(r"perm:\[(.*)\]", spec)
    if m:
        parts = [p for p in m.group(1).split(";")]
        parsed = [parse_cycles(p) for p in parts]
        size = max((s for _, s in parsed), default=0)
        if size == 0:
            raise GroupSpecError(f"{spec!r}: no points")
        perms = [cycles_to_perm(c, size) for c, _ in parsed]
        return PermutationGroup(perms, spec)
    if spec.startswith("prod(") and spec.endswith(")"):
        args = _split_top_level(spec[5:-1], ",")
        if len(args) != 2:
            raise GroupSpecError(f"{spec!r}: prod takes exactly two factors")
        return ProductGroup(make_group(args[0]), make_group(args[1]))
    raise GroupSpecError(f"unrecognised group descriptor {spec!r}")


def multiply(group: Group, g: Element, h: Element) -> Element:
    return group.multiply(g, h)


def ball(group: Group, n: int) -> Ball:
    return group.ball(n)
