"""Exact perturbative coefficients of log Z by Wick pairing over ribbon graphs.

A vertex Tr phi^4 = phi_{a0 a1} phi_{a1 a2} phi_{a2 a3} phi_{a3 a0} has four slots
and four corner indices.  Pairing slot (m,n) with slot (k,l) gives C_mn and
glues corners m=l, n=k; the glued corners are the faces of the ribbon graph
and are summed over 0..cutoff.

Wick ordering.  Contracting two cyclically adjacent slots of one vertex gives
the tadpole T_m, so

    :Tr phi^4: = Tr phi^4 - 4 Tr(phi^2 T) + 2 Pi

is inclusion-exclusion over adjacent self-contractions: the counterterm
vertices (one adjacent pair contracted, sign -1; two disjoint adjacent pairs,
sign +1) cancel every matching that contains an adjacent self-contraction and
leave all other matchings with weight one.  We therefore enumerate the
counterterm species implicitly by that filter.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from .model_core import _as_cutoff, covariance_matrix, vacuum_tadpole


class ComplexityGuard(ValueError):
    pass


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class PairingDiagram:
    order: int
    pairing: tuple  # partner[slot]; slot = 4*vertex + position
    connected: bool

    @property
    def half_edges(self) -> tuple:
        return tuple((s // 4, s % 4) for s in range(4 * self.order))


def _matchings(slots: int, skip_adjacent: bool):
    partner = [-1] * slots

    def adjacent(a, b):
        return a // 4 == b // 4 and (a - b) % 4 in (1, 3)

    def rec():
        try:
            i = partner.index(-1)
        except ValueError:
            yield tuple(partner)
            return
        for j in range(i + 1, slots):
            if partner[j] != -1:
                continue
            if skip_adjacent and adjacent(i, j):
                continue
            partner[i], partner[j] = j, i
            yield from rec()
            partner[i] = partner[j] = -1

    yield from rec()


def _connected(pairing, order) -> bool:
    parent = list(range(order))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for s, p in enumerate(pairing):
        a, b = find(s // 4), find(p // 4)
        if a != b:
            parent[a] = b
    return len({find(v) for v in range(order)}) == 1


def enumerate_pairings(order: int, allow_large: bool = False):
    if order > 4 and not allow_large:
        raise ComplexityGuard("orders above 4 need allow_large=True")
    for p in _matchings(4 * order, False):
        yield PairingDiagram(order, p, _connected(p, order))


def has_adjacent_self_contraction(diagram: PairingDiagram) -> bool:
    return any(s // 4 == p // 4 and (s - p) % 4 in (1, 3) for s, p in enumerate(diagram.pairing))


def _faces(pairing, order):
    """Corner classes and edge list (corner_row, corner_col) for each contraction."""
    ncorner = 4 * order
    parent = list(range(ncorner))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def row(s):
        return s

    def col(s):
        return 4 * (s // 4) + (s % 4 + 1) % 4

    edges = []
    for s, p in enumerate(pairing):
        if s < p:
            # phi_{row(s) col(s)} with phi_{row(p) col(p)}: row(s)=col(p), col(s)=row(p)
            for a, b in ((row(s), col(p)), (col(s), row(p))):
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[ra] = rb
            edges.append((row(s), col(s)))
    labels = {}
    canon_edges = []
    for a, b in edges:
        fa, fb = find(a), find(b)
        for f in (fa, fb):
            if f not in labels:
                labels[f] = len(labels)
        canon_edges.append(tuple(sorted((labels[fa], labels[fb]))))
    return len(labels), tuple(sorted(canon_edges))


@lru_cache(maxsize=None)
def _face_sum(nfaces: int, edges: tuple, L: int) -> Fraction:
    """Sum over face indices in 0..L of prod over edges 1/(i_a + i_b + 1)."""
    total = Fraction(0)
    # factor over edges with integer denominators, then one Fraction per assignment
    for assign in itertools.product(range(L + 1), repeat=nfaces):
        den = 1
        for a, b in edges:
            den *= assign[a] + assign[b] + 1
        total += Fraction(1, den)
    return total


def _face_sum_float(nfaces: int, edges: tuple, L: int) -> float:
    """Float64 face sum as a tensor contraction, one covariance matrix per edge."""
    c = covariance_matrix(L)
    letters = "abcdefghijklmnop"[:nfaces]
    spec = ",".join(letters[a] + letters[b] for a, b in edges) + "->"
    return float(np.einsum(spec, *([c] * len(edges)), optimize=True))


def diagram_amplitude(diagram: PairingDiagram, cutoff, wick_ordered: bool = False) -> Fraction:
    """Raw contraction of the diagram; with wick_ordered=True the counterterm
    species are included, which zeroes diagrams with an adjacent self-contraction."""
    L = _as_cutoff(cutoff).lambda_max
    if wick_ordered and has_adjacent_self_contraction(diagram):
        return Fraction(0)
    nf, edges = _faces(diagram.pairing, diagram.order)
    if L == 0:
        return Fraction(1)
    return _face_sum(nf, edges, L)


@dataclass
class PowerSeries:
    cutoff: int
    coefficients: list  # a_1..a_N as Fractions
    note: str = "log Z = sum_n a_n lambda^n; covariance 1/(m+n+1), Wick-ordered quartic"

    def to_json(self) -> dict:
        return {"cutoff": self.cutoff,
                "coefficients": [f"{c.numerator}/{c.denominator}" for c in self.coefficients]}

    def value(self, lam, n: int | None = None):
        cs = self.coefficients if n is None else self.coefficients[:n]
        return sum(c * lam ** (k + 1) for k, c in enumerate(cs))


def _sums(cutoff, n: int, connected_only: bool) -> Fraction:
    L = _as_cutoff(cutoff).lambda_max
    tot = Fraction(0)
    counts = {}
    for p in _matchings(4 * n, True):
        if connected_only and not _connected(p, n):
            continue
        if L == 0:
            tot += 1
            continue
        key = _faces(p, n)
        counts[key] = counts.get(key, 0) + 1
    for (nf, edges), c in counts.items():
        tot += c * _face_sum(nf, edges, L)
    return tot


def log_z_coefficients(cutoff, n_max: int = 4) -> PowerSeries:
    if n_max > 4:
        raise ComplexityGuard("n_max above 4 is not supported")
    L = _as_cutoff(cutoff).lambda_max
    coeffs = [Fraction(-1, 4) ** n / math.factorial(n) * _sums(L, n, True)
              for n in range(1, n_max + 1)]
    return PowerSeries(L, coeffs)


def z_coefficients(cutoff, n_max: int = 4) -> list:
    """Coefficients z_1..z_N of Z = 1 + sum z_n lambda^n (all Wick-ordered diagrams)."""
    L = _as_cutoff(cutoff).lambda_max
    return [Fraction(-1, 4) ** n / math.factorial(n) * _sums(L, n, False)
            for n in range(1, n_max + 1)]


def series_log(z: list) -> list:
    """log(1 + sum_{n>=1} z_n x^n) coefficients l_1..l_N."""
    out = []
    for n in range(1, len(z) + 1):
        acc = z[n - 1] - sum(k * out[k - 1] * z[n - k - 1] for k in range(1, n)) / Fraction(n)
        out.append(acc)
    return out


def _double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def coefficient_oracle(cutoff=0, n_max: int = 4) -> PowerSeries:
    """log of E exp(-(lam/4)(x^4 - 4x^2 + 2)) from exact Gaussian moments."""
    if _as_cutoff(cutoff).lambda_max != 0:
        raise ValueError("the moment oracle only covers cutoff 0")
    base = {4: 1, 2: -4, 0: 2}
    poly = {0: Fraction(1)}
    z = []
    for n in range(1, n_max + 1):
        new = {}
        for e, c in poly.items():
            for e2, c2 in base.items():
                new[e + e2] = new.get(e + e2, 0) + c * c2
        poly = new
        mom = sum(c * _double_factorial(e - 1) for e, c in poly.items())
        z.append(Fraction(-1, 4) ** n / math.factorial(n) * mom)
    return PowerSeries(0, series_log(z))


def a1_closed_form(cutoff) -> Fraction:
    L = _as_cutoff(cutoff).lambda_max
    return -Fraction(1, 4) * sum((Fraction(1, (2 * m + 1) ** 2) for m in range(L + 1)), Fraction(0))


def tadpole_cancellation_check(cutoff, order: int = 1, exact_limit: int = 64) -> dict:
    """Order-1 bookkeeping: planar pairings against the two counterterms.

    Up to exact_limit the sums are rational and cancellation is exact; above it
    face sums are float64 contractions and cancellation holds to 1e-12 relative.
    """
    if order != 1:
        raise ValueError("only order 1 is tabulated")
    L = _as_cutoff(cutoff).lambda_max
    exact = L <= exact_limit
    planar = Fraction(0) if exact else 0.0
    survivor = Fraction(0) if exact else 0.0
    for d in enumerate_pairings(1):
        if exact:
            amp = diagram_amplitude(d, L)
        else:
            amp = _face_sum_float(*_faces(d.pairing, d.order), L)
        if has_adjacent_self_contraction(d):
            planar += amp
        else:
            survivor += amp
    if exact:
        pi_val = vacuum_tadpole(L)
        counter = -4 * pi_val + 2 * pi_val
        cancels = planar + counter == 0
    else:
        t = covariance_matrix(L).sum(axis=1)
        counter = -2 * float(t @ t)
        cancels = abs(planar + counter) <= 1e-12 * abs(counter)
    if not cancels:
        raise InvariantViolation("planar order-1 pairings do not cancel the counterterms")
    coeff = -survivor / 4
    return {"cutoff": L, "planar": planar, "counterterms": counter, "survivor": survivor,
            "a1": coeff, "bounded": survivor < math.pi ** 2 / 8, "exact": exact}


# -- cache ------------------------------------------------------------------------

CONVENTION = "C=1/(m+n+1);T=sum_q C;wick=inclusion-exclusion-adjacent;log"


def cache_key(cutoff, n_max) -> str:
    raw = json.dumps([int(cutoff), int(n_max), CONVENTION]).encode()
    return hashlib.sha256(raw).hexdigest()[:16]


def cached_log_z_coefficients(cutoff, n_max, cache_dir) -> PowerSeries:
    path = Path(cache_dir) / f"coeffs-{cache_key(cutoff, n_max)}.json"
    if path.exists():
        data = json.loads(path.read_text())
        return PowerSeries(data["cutoff"], [Fraction(c) for c in data["coefficients"]])
    ps = log_z_coefficients(cutoff, n_max)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(ps.to_json(), sort_keys=True))
    os.replace(tmp, path)
    return ps
