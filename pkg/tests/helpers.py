"""Random exact test data shared by the property and acceptance suites."""

from fractions import Fraction

from amencert.chains import make_chain, make_dual
from amencert.groups import make_group
from amencert.spaces import make_map, make_space

SIX = "finite:a->(0 1 2 3 4 5);b->(0 1 2 3 4 5)"
THREE = "finite:a->(0 1 2);b->(0 1 2)"

ACTIONS = [
    ("Z^1", "point"),
    ("Z^2", "point"),
    ("Z^2", "finite:x->(0 1);y->(0 1)"),
    ("F_2", "point"),
    ("F_2", THREE),
    ("F_2", "onepoint"),
    ("F_2", "boundary"),
    ("perm:[(0 1 2 3 4)]", "point"),
]


def action(i):
    spec, space = ACTIONS[i % len(ACTIONS)]
    G = make_group(spec)
    return G, make_space(G, space)


def rand_value(rng, lo=-4, hi=4):
    return Fraction(rng.randint(lo, hi), rng.randint(1, 4))


def rand_cell(rng, G, X, radius=1):
    if X.kind == "point":
        return 0
    if X.kind == "finite":
        return rng.randrange(X.m)
    if X.kind == "onepoint":
        return rng.choice(list(G.ball(radius + 1).elements) + ["inf"])
    return rng.choice([w for w in G.ball(2).elements if w])


def rand_function(rng, G, X, radius=1):
    if X.kind == "point":
        return rand_value(rng)
    if X.kind == "finite":
        return tuple(rand_value(rng) for _ in range(X.m))
    if X.kind == "onepoint":
        pts = G.ball(radius + 1).elements
        return X.make({rng.choice(pts): rand_value(rng) for _ in range(2)}, rand_value(rng, -1, 1))
    words = [w for w in G.ball(2).elements if w]
    return X.from_terms(rand_value(rng, -1, 1), [(rng.choice(words), rand_value(rng)) for _ in range(2)])


def rand_chain(rng, G, X, radius=1, size=3):
    els = G.ball(radius).elements
    return make_chain(G, X, {rng.choice(els): rand_function(rng, G, X, radius) for _ in range(size)})


def rand_sigma_one_chain(rng, G, X, radius=1, size=3):
    """A W_0 chain with sigma = 1: fix the identity entry to absorb the rest."""
    xi = rand_chain(rng, G, X, radius, size)
    rest = [f for g, f in xi.entries if g != G.identity]
    total = X.sum(rest) if rest else X.constant(Fraction(0))
    mapping = dict(xi.entries)
    mapping[G.identity] = X.sub(X.constant(Fraction(1)), total)
    return make_chain(G, X, mapping)


def rand_psis(rng, G, X, radius=1, size=3):
    els = G.ball(radius + 1).elements
    return [
        make_dual(G, X, {(rng.choice(els), rand_cell(rng, G, X, radius)): rand_value(rng) for _ in range(size)})
        for _ in G.gens
    ]


def quotient_map():
    G = make_group("F_2")
    X, Y = make_space(G, SIX), make_space(G, THREE)
    return G, X, Y, make_map(X, Y, [i % 3 for i in range(6)])
