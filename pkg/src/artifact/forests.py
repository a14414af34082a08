"""Forests, BKAR interpolation, two-level jungles and Grassmann minors.

Vertices are 0..n-1 and the edge variable of the pair (i, j), i < j, is x_i_j.
The BKAR formula reads

    f(1) = sum_F  int_[0,1]^F dw  (prod_{l in F} d/dx_l) f [X^F(w)],

where X^F_ij is the smallest w on the forest path from i to j, or 0 when i and
j sit in different trees.  For polynomial f the integral is done exactly: on
the ordering w_(1) < ... < w_(k) every infimum is the w of smallest rank, the
integrand becomes a monomial in the w's, and

    int_{0<w_1<...<w_k<1} prod w_i^e_i = prod_i 1 / (e_1 + ... + e_i + i).
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import networkx as nx
import numpy as np
import sympy
from scipy import integrate


class ComplexityGuard(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


class QuadratureFailure(RuntimeError):
    pass


PSD_TOL = 1e-12


def pairs(n: int) -> list:
    return list(itertools.combinations(range(n), 2))


def edge_symbols(n: int) -> dict:
    return {p: sympy.Symbol(f"x_{p[0]}_{p[1]}") for p in pairs(n)}


def _norm(e) -> tuple:
    a, b = e
    if a == b:
        raise ValueError(f"loop edge {e}")
    return (a, b) if a < b else (b, a)


def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _acyclic(n: int, edges) -> bool:
    parent = list(range(n))
    for a, b in edges:
        ra, rb = _find(parent, a), _find(parent, b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


@dataclass(frozen=True)
class Forest:
    n: int
    edges: frozenset

    def __post_init__(self):
        edges = frozenset(_norm(e) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        if any(not 0 <= v < self.n for e in edges for v in e):
            raise ValueError("edge endpoint outside the vertex set")
        if not _acyclic(self.n, sorted(edges)):
            raise InvariantViolation(f"edges {sorted(edges)} contain a cycle")

    @property
    def sorted_edges(self) -> tuple:
        return tuple(sorted(self.edges))

    def components(self) -> list:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges)
        return sorted((sorted(c) for c in nx.connected_components(g)), key=lambda c: c[0])

    def paths(self) -> dict:
        return _paths(self.n, self.sorted_edges)


@lru_cache(maxsize=None)
def _paths(n: int, edges: tuple) -> dict:
    """(i, j) -> tuple of forest edges on the path, or None if disconnected."""
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(edges)
    out = {}
    for i, j in pairs(n):
        if nx.has_path(g, i, j):
            nodes = nx.shortest_path(g, i, j)
            out[(i, j)] = tuple(_norm(e) for e in zip(nodes, nodes[1:]))
        else:
            out[(i, j)] = None
    return out


def enumerate_forests(n: int, max_n: int = 6):
    """Every forest on n labeled vertices, empty forest first, by edge count."""
    if n < 1:
        raise ValueError("need n >= 1")
    if n > max_n:
        raise ComplexityGuard(f"n={n} exceeds the enumeration guard {max_n}")
    all_edges = pairs(n)
    for k in range(n):
        for sub in itertools.combinations(all_edges, k):
            if _acyclic(n, sub):
                yield Forest(n, frozenset(sub))


def count_forests(n: int) -> int:
    return sum(1 for _ in enumerate_forests(n))


# -- BKAR weights -----------------------------------------------------------------

@dataclass
class BKARWeights:
    forest: Forest
    w: dict
    X: np.ndarray = field(repr=False)


def replica_covariance(forest: Forest, w: dict) -> np.ndarray:
    """X_ij = inf of w along the forest path, 1 on the diagonal, 0 across trees."""
    w = {_norm(e): float(v) for e, v in w.items()}
    if set(w) != set(forest.edges):
        raise ValueError("w must give one value per forest edge")
    if any(not 0.0 <= v <= 1.0 for v in w.values()):
        raise ValueError("w values must lie in [0, 1]")
    x = np.eye(forest.n)
    for (i, j), path in forest.paths().items():
        if path is not None:
            x[i, j] = x[j, i] = min(w[e] for e in path)
    ev = np.linalg.eigvalsh(x)
    if ev.min() < -PSD_TOL:
        raise InvariantViolation(f"X has eigenvalue {ev.min()}")
    return x


def bkar_weights(forest: Forest, w: dict) -> BKARWeights:
    return BKARWeights(forest, dict(w), replica_covariance(forest, w))


# -- BKAR evaluation ----------------------------------------------------------------

def _to_poly(f, n: int):
    """Polynomial as {exponent tuple over pairs(n): Fraction}, or None if f is not one."""
    if isinstance(f, dict):
        return {tuple(k): Fraction(v) for k, v in f.items() if v != 0}
    syms = edge_symbols(n)
    gens = [syms[p] for p in pairs(n)]
    expr = sympy.sympify(f)
    if not expr.free_symbols <= set(gens):
        raise ValueError(f"unknown symbols {expr.free_symbols - set(gens)}")
    if not expr.is_polynomial(*gens):
        return None
    poly = sympy.Poly(expr, *gens) if gens else None
    if poly is None:
        return {(): Fraction(str(expr))}
    return {m: Fraction(int(c.p), int(c.q)) for m, c in poly.terms()}


def _simplex(exps) -> Fraction:
    acc = 0
    out = Fraction(1)
    for i, e in enumerate(exps, start=1):
        acc += e
        out /= acc + i
    return out


def _forest_term(poly: dict, forest: Forest, index: dict) -> Fraction:
    edges = forest.sorted_edges
    paths = forest.paths()
    plist = list(index)
    total = Fraction(0)
    for mono, c in poly.items():
        exps = list(mono)
        coef = c
        for e in edges:
            k = exps[index[e]]
            if k == 0:
                coef = 0
                break
            coef *= k
            exps[index[e]] = k - 1
        if coef == 0:
            continue
        need = []
        for p, k in zip(plist, exps):
            if k == 0:
                continue
            path = paths[p]
            if path is None:
                coef = 0
                break
            need.append((path, k))
        if coef == 0:
            continue
        if not edges:
            total += coef
            continue
        acc = Fraction(0)
        for order in itertools.permutations(edges):
            rank = {e: r for r, e in enumerate(order)}
            by_rank = [0] * len(edges)
            for path, k in need:
                by_rank[min(rank[e] for e in path)] += k
            acc += _simplex(by_rank)
        total += coef * acc
    return total


def _bkar_exact(poly: dict, n: int) -> dict:
    index = {p: i for i, p in enumerate(pairs(n))}
    terms = {}
    for forest in enumerate_forests(n):
        terms[forest.sorted_edges] = _forest_term(poly, forest, index)
    return terms


def _bkar_quadrature(expr, n: int, epsabs: float, epsrel: float) -> dict:
    syms = edge_symbols(n)
    terms = {}
    for forest in enumerate_forests(n):
        edges = forest.sorted_edges
        d = expr
        for e in edges:
            d = sympy.diff(d, syms[e])
        wsyms = [sympy.Symbol(f"w{i}") for i in range(len(edges))]
        wmap = dict(zip(edges, wsyms))
        sub = {}
        for p, path in forest.paths().items():
            sub[syms[p]] = 0 if path is None else sympy.Min(*[wmap[e] for e in path])
        g = d.subs(sub)
        if not edges:
            terms[edges] = complex(sympy.N(g))
            continue
        fn = sympy.lambdify(wsyms, g, "numpy")
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.nquad(lambda *a: float(fn(*a)), [[0, 1]] * len(edges),
                                         opts={"epsabs": epsabs, "epsrel": epsrel})
            except (integrate.IntegrationWarning, ValueError, TypeError) as exc:
                raise QuadratureFailure(f"forest {edges}: {exc}") from exc
        terms[edges] = val
    return terms


@dataclass
class BKARResult:
    n: int
    value: object
    f_at_one: object
    terms: dict
    exact: bool

    @property
    def matches(self) -> bool:
        if self.exact:
            return self.value == self.f_at_one
        return abs(self.value - self.f_at_one) <= 1e-8 * max(1.0, abs(self.f_at_one))


def bkar_evaluate(f, n: int, epsabs: float = 1e-11, epsrel: float = 1e-10) -> BKARResult:
    """Forest sum for f given as a sympy expression in edge_symbols(n) or as a
    {exponent tuple: coefficient} dict.  Polynomials are integrated exactly;
    anything else goes through adaptive quadrature."""
    if n > 4:
        raise ComplexityGuard("bkar_evaluate supports n <= 4")
    poly = _to_poly(f, n)
    if poly is not None:
        terms = _bkar_exact(poly, n)
        value = sum(terms.values(), Fraction(0))
        return BKARResult(n, value, sum(poly.values(), Fraction(0)), terms, True)
    syms = edge_symbols(n)
    expr = sympy.sympify(f)
    terms = _bkar_quadrature(expr, n, epsabs, epsrel)
    at_one = complex(sympy.N(expr.subs({s: 1 for s in syms.values()})))
    value = sum(terms.values())
    if abs(at_one.imag) == 0 and abs(complex(value).imag) == 0:
        at_one, value = at_one.real, float(np.real(value))
    return BKARResult(n, value, at_one, terms, False)


def monomials(n: int, max_degree: int):
    """Exponent tuples over pairs(n) with total degree <= max_degree."""
    k = len(pairs(n))

    def rec(i, left):
        if i == k:
            yield ()
            return
        for e in range(left + 1):
            for rest in rec(i + 1, left - e):
                yield (e,) + rest

    yield from rec(0, max_degree)


def bkar_exactness_check(n_max: int = 4, max_degree: int = 6) -> dict:
    """Forest sum against f(1) for every monomial up to the given degree."""
    checked = 0
    failures = []
    for n in range(1, n_max + 1):
        for m in monomials(n, max_degree):
            res = bkar_evaluate({m: 1}, n)
            checked += 1
            if res.value != 1:
                failures.append((n, m, str(res.value)))
    return {"checked": checked, "failures": failures, "ok": not failures}


# -- jungles ---------------------------------------------------------------------

@dataclass(frozen=True)
class Jungle:
    bosonic_forest: Forest
    blocks: tuple
    fermionic_forest: Forest  # over block indices

    def __post_init__(self):
        comps = tuple(tuple(c) for c in self.bosonic_forest.components())
        if tuple(tuple(b) for b in self.blocks) != comps:
            raise InvariantViolation("blocks must be the bosonic components")
        if self.fermionic_forest.n != len(self.blocks):
            raise InvariantViolation("fermionic forest must live on the blocks")

    def lifted_edges(self, fermionic_lift: dict) -> set:
        """Bosonic edges plus vertex-level representatives of fermionic edges."""
        return set(self.bosonic_forest.edges) | {_norm(fermionic_lift[e]) for e in self.fermionic_forest.edges}


def _block_of(blocks) -> dict:
    return {v: i for i, b in enumerate(blocks) for v in b}


def jungle_from_coloring(n: int, tree_edges, colors) -> tuple:
    """Split a colored spanning tree into a Jungle plus the vertex-level lift of
    its fermionic edges."""
    bos = Forest(n, frozenset(e for e, c in zip(tree_edges, colors) if c == 0))
    blocks = tuple(tuple(c) for c in bos.components())
    where = _block_of(blocks)
    lift = {}
    for e, c in zip(tree_edges, colors):
        if c == 1:
            be = _norm((where[e[0]], where[e[1]]))
            if be in lift:
                raise InvariantViolation("two fermionic edges between the same blocks")
            lift[be] = e
    ferm = Forest(len(blocks), frozenset(lift))
    jungle = Jungle(bos, blocks, ferm)
    if not _acyclic(n, sorted(jungle.lifted_edges(lift))):
        raise InvariantViolation("lifted jungle is not a forest")
    return jungle, lift


def spanning_trees(n: int):
    """Labeled spanning trees of K_n through Prüfer sequences."""
    if n == 1:
        yield ()
        return
    if n == 2:
        yield ((0, 1),)
        return
    for seq in itertools.product(range(n), repeat=n - 2):
        t = nx.from_prufer_sequence(list(seq))
        yield tuple(sorted(_norm(e) for e in t.edges()))


def enumerate_multilevel_trees(n: int, levels: int, max_n: int = 6):
    """Spanning trees with each edge given a level in 0..levels-1."""
    if n < 1:
        raise ValueError("need n >= 1")
    if n > max_n:
        raise ComplexityGuard(f"n={n} exceeds the enumeration guard {max_n}")
    for tree in spanning_trees(n):
        for colors in itertools.product(range(levels), repeat=len(tree)):
            yield tree, colors


def enumerate_two_level_trees(n: int, max_n: int = 6):
    """Two-level trees as (Jungle, fermionic lift)."""
    for tree, colors in enumerate_multilevel_trees(n, 2, max_n):
        yield jungle_from_coloring(n, tree, colors)


def count_multilevel_trees(n: int, levels: int) -> int:
    if n < 1:
        raise ValueError("need n >= 1")
    return 1 if n == 1 else levels ** (n - 1) * n ** (n - 2)


def count_two_level_trees(n: int) -> int:
    return count_multilevel_trees(n, 2)


def counting_table(n_max: int = 6) -> list:
    return [{"n": n, "forests": count_forests(n),
             "two_level_trees": sum(1 for _ in enumerate_two_level_trees(n)),
             "formula": count_two_level_trees(n)}
            for n in range(1, n_max + 1)]


# -- Grassmann layer ---------------------------------------------------------------

@dataclass
class FermionicBlockMatrix:
    Y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.Y, dtype=float)
        if y.ndim != 2 or y.shape[0] != y.shape[1]:
            raise ValueError("Y must be square")
        if not np.allclose(y, y.T, atol=0):
            raise InvariantViolation("Y must be symmetric")
        if not np.allclose(np.diag(y), 1.0):
            raise InvariantViolation("Y must have unit diagonal")
        if np.abs(y).max() > 1 + PSD_TOL:
            raise InvariantViolation("Y entries must be at most 1")
        if y.size and np.linalg.eigvalsh(y).min() < -PSD_TOL:
            raise InvariantViolation("Y must be positive semi-definite")
        self.Y = y

    @property
    def size(self) -> int:
        return self.Y.shape[0]

    @classmethod
    def from_forest(cls, forest: Forest, w: dict) -> "FermionicBlockMatrix":
        return cls(replica_covariance(forest, w))


def grassmann_minor(Y, rows, cols) -> float:
    """det of Y with the listed rows and columns removed (det Y when both are empty)."""
    y = Y.Y if isinstance(Y, FermionicBlockMatrix) else np.asarray(Y, dtype=float)
    rows, cols = list(rows), list(cols)
    if len(rows) != len(cols):
        raise ValueError("rows and cols must have equal length")
    if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
        raise ValueError("duplicate indices")
    n = y.shape[0]
    if any(not 0 <= i < n for i in rows + cols):
        raise IndexError("index outside Y")
    keep_r = [i for i in range(n) if i not in rows]
    keep_c = [i for i in range(n) if i not in cols]
    if not keep_r:
        return 1.0
    return float(np.linalg.det(y[np.ix_(keep_r, keep_c)]))


def _perm_sign(seq) -> int:
    s = 1
    seq = list(seq)
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                s = -s
    return s


def insertion_integral(Y, chis, chibars) -> float:
    """int prod d(chibar) d(chi) e^{-chibar Y chi} chi_{x1} chibar_{y1} ... chi_{xk} chibar_{yk}.

    Equals det Y det[(Y^-1)_{x_i y_j}], which by Jacobi's complementary-minor
    identity is the signed minor (-1)^{sum x + sum y} sgn(x) sgn(y) det Y[y^c, x^c]
    and stays valid for singular Y.
    """
    if len(set(chis)) != len(chis) or len(set(chibars)) != len(chibars):
        return 0.0
    sign = (-1) ** (sum(chis) + sum(chibars)) * _perm_sign(chis) * _perm_sign(chibars)
    return sign * grassmann_minor(Y, chibars, chis)


def hardcore_indicator(slice_sets) -> int:
    """1 when the slice sets of one block are pairwise disjoint."""
    seen = set()
    for s in slice_sets:
        s = set(s)
        if seen & s:
            return 0
        seen |= s
    return 1


def fermionic_forest_integral(fermionic_forest: Forest, Y, block_slice_sets,
                              edge_slices=None) -> float:
    """Grassmann integral of a fermionic forest over blocks.

    Each edge (a, b) with slice omega inserts chi^a_omega chibar^b_omega +
    chi^b_omega chibar^a_omega; the exponent is sum_omega chibar_omega Y chi_omega.
    Expanding gives 2^k terms, each a product over slices of signed minors.
    Only slices that carry an edge are integrated.  The result is multiplied by
    the hardcore indicator of every block.
    """
    fb = Y if isinstance(Y, FermionicBlockMatrix) else FermionicBlockMatrix(Y)
    nb = fb.size
    if fermionic_forest.n != nb or len(block_slice_sets) != nb:
        raise ValueError(f"dimension mismatch: Y is {nb}x{nb}, forest has "
                         f"{fermionic_forest.n} blocks, {len(block_slice_sets)} slice lists")
    hc = 1
    for sets in block_slice_sets:
        hc *= hardcore_indicator(sets)
    if hc == 0:
        return 0.0
    edges = fermionic_forest.sorted_edges
    omegas = [0] * len(edges) if edge_slices is None else list(edge_slices)
    if len(omegas) != len(edges):
        raise ValueError("one slice per fermionic edge")
    total = 0.0
    for flips in itertools.product((0, 1), repeat=len(edges)):
        per = {}
        for (a, b), om, fl in zip(edges, omegas, flips):
            x, y = (a, b) if fl == 0 else (b, a)
            cs, cb = per.setdefault(om, ([], []))
            cs.append(x)
            cb.append(y)
        term = 1.0
        for om in sorted(per):
            cs, cb = per[om]
            term *= insertion_integral(fb, cs, cb)
        total += term
    return total


# -- exterior-algebra oracle ------------------------------------------------------

def _wedge(a: dict, b: dict) -> dict:
    out = {}
    for ma, ca in a.items():
        for mb, cb in b.items():
            if ma & mb:
                continue
            # sign of moving each generator of mb past the higher generators of ma
            s = 0
            m = mb
            while m:
                low = m & -m
                s += bin(ma & ~((low << 1) - 1)).count("1")
                m ^= low
            c = ca * cb * (-1 if s & 1 else 1)
            out[ma | mb] = out.get(ma | mb, 0) + c
    return {k: v for k, v in out.items() if v != 0}


class ExteriorAlgebra:
    """Exterior algebra on pairs (chi_i, chibar_i) at generator slots 2i, 2i+1.

    Berezin integration with prod_i dchibar_i dchi_i returns the coefficient of
    chi_0 chibar_0 chi_1 chibar_1 ..., which is the top monomial in slot order.
    """

    def __init__(self, npairs: int, max_generators: int = 16):
        if 2 * npairs > max_generators:
            raise ComplexityGuard(f"{2 * npairs} generators exceed {max_generators}")
        self.npairs = npairs

    def one(self) -> dict:
        return {0: 1.0}

    def chi(self, i: int) -> dict:
        return {1 << (2 * i): 1.0}

    def chibar(self, i: int) -> dict:
        return {1 << (2 * i + 1): 1.0}

    @staticmethod
    def mul(a: dict, b: dict) -> dict:
        return _wedge(a, b)

    @staticmethod
    def add(a: dict, b: dict) -> dict:
        out = dict(a)
        for k, v in b.items():
            out[k] = out.get(k, 0) + v
        return {k: v for k, v in out.items() if v != 0}

    @staticmethod
    def scale(a: dict, c) -> dict:
        return {k: v * c for k, v in a.items()}

    def integrate(self, a: dict):
        return a.get((1 << (2 * self.npairs)) - 1, 0.0)


def grassmann_oracle(fermionic_forest: Forest, Y, block_slice_sets, edge_slices=None) -> float:
    """Direct exterior-algebra expansion of the integral in fermionic_forest_integral."""
    y = Y.Y if isinstance(Y, FermionicBlockMatrix) else np.asarray(Y, dtype=float)
    nb = y.shape[0]
    for sets in block_slice_sets:
        if _hardcore_by_nilpotency(sets) == 0:
            return 0.0
    edges = fermionic_forest.sorted_edges
    omegas = [0] * len(edges) if edge_slices is None else list(edge_slices)
    species = sorted(set(omegas))
    pos = {om: s for s, om in enumerate(species)}
    alg = ExteriorAlgebra(nb * len(species))

    def gi(block, om):
        return pos[om] * nb + block

    # e^{-chibar Y chi} as a product of (1 - Y_ab chibar_a chi_b); each factor is even
    f = alg.one()
    for om in species:
        for a in range(nb):
            for b in range(nb):
                if y[a, b] != 0:
                    t = alg.scale(alg.mul(alg.chibar(gi(a, om)), alg.chi(gi(b, om))), -y[a, b])
                    f = alg.mul(f, alg.add(alg.one(), t))
    for (a, b), om in zip(edges, omegas):
        ins = alg.add(alg.mul(alg.chi(gi(a, om)), alg.chibar(gi(b, om))),
                      alg.mul(alg.chi(gi(b, om)), alg.chibar(gi(a, om))))
        f = alg.mul(f, ins)
    return float(alg.integrate(f))


def _hardcore_by_nilpotency(slice_sets) -> int:
    """Product over vertices and slices of chi_omega chibar_omega; zero iff two sets meet."""
    allw = sorted({w for s in slice_sets for w in s})
    if not allw:
        return 1
    pos = {w: i for i, w in enumerate(allw)}
    alg = ExteriorAlgebra(len(allw), max_generators=64)
    f = alg.one()
    for s in slice_sets:
        for w in sorted(s):
            f = alg.mul(f, alg.mul(alg.chi(pos[w]), alg.chibar(pos[w])))
    return 0 if not f else 1


def minor_bound_check(samples: int = 200, size: int = 4, seed: int = 0) -> dict:
    """Every minor of random PSD unit-diagonal matrices has modulus <= 1."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    count = 0
    for _ in range(samples):
        v = rng.normal(size=(size, size + 1))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        y = np.clip(v @ v.T, -1.0, 1.0)
        np.fill_diagonal(y, 1.0)
        fb = FermionicBlockMatrix(y)
        for k in range(size + 1):
            for rows in itertools.combinations(range(size), k):
                for cols in itertools.combinations(range(size), k):
                    worst = max(worst, abs(grassmann_minor(fb, rows, cols)))
                    count += 1
    return {"minors": count, "max_abs": worst, "ok": worst <= 1 + 1e-10}


def replica_psd_check(n: int = 4, draws: int = 1000, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    forests = list(enumerate_forests(n))
    worst = math.inf
    for i in range(draws):
        f = forests[rng.integers(len(forests))]
        w = {e: float(rng.random()) for e in f.sorted_edges}
        worst = min(worst, float(np.linalg.eigvalsh(replica_covariance(f, w)).min()))
    return {"draws": draws, "min_eig": worst, "ok": worst >= -PSD_TOL}
