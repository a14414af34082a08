"""Finite-cutoff Grosse-Wulkenhaar matrix model at the self-dual point.

Conventions: indices run 0..cutoff inclusive, so fields are (cutoff+1) x (cutoff+1)
Hermitian matrices.  The covariance is C_mn = 1/(m+n+1) (infrared mass zero,
volume factor dropped).  All model constants are exact rationals; floats appear
only when a value is handed to numerics.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np


class RangeError(ValueError):
    pass


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class Cutoff:
    lambda_max: int

    def __post_init__(self):
        if not isinstance(self.lambda_max, int) or self.lambda_max < 0:
            raise DomainError("cutoff must be a non-negative integer")

    @property
    def dim(self) -> int:
        return self.lambda_max + 1


@dataclass(frozen=True)
class Coupling:
    value: complex

    @property
    def modulus(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        # cmath.phase returns values in [-pi, pi]; fold -pi onto pi
        p = cmath.phase(self.value)
        return math.pi if p == -math.pi else p

    def on_negative_axis(self) -> bool:
        z = complex(self.value)
        return z.imag == 0 and z.real < 0

    def kappa(self) -> complex:
        """i*sqrt(2 lambda)/2 with the principal square root."""
        return 0.5j * cmath.sqrt(2 * complex(self.value))


def _as_cutoff(cutoff) -> Cutoff:
    return cutoff if isinstance(cutoff, Cutoff) else Cutoff(int(cutoff))


def _check(i, cut: Cutoff):
    if not 0 <= i <= cut.lambda_max:
        raise RangeError(f"index {i} outside 0..{cut.lambda_max}")


def covariance(m: int, n: int, cutoff) -> Fraction:
    cut = _as_cutoff(cutoff)
    _check(m, cut)
    _check(n, cut)
    return Fraction(1, m + n + 1)


def laplacian_entry(m: int, n: int, k: int, l: int, cutoff) -> Fraction:
    cut = _as_cutoff(cutoff)
    for i in (m, n, k, l):
        _check(i, cut)
    if m == l and n == k:
        return Fraction(m + n + 1)
    return Fraction(0)


def inverse_identity_check(cutoff) -> bool:
    """Exact check of sum_rs Delta_{mn,rs} C_{sr,kl} = delta_ml delta_nk.

    C_{mn,kl} = C_mn delta_ml delta_nk is the propagator of <phi_mn phi_kl>.
    Both operators are tabulated once from their entry functions; the
    contraction runs over the nonzero entries only.
    """
    cut = _as_cutoff(cutoff)
    idx = range(cut.dim)
    lap = {}
    prop = {}
    for m, n, k, l in itertools.product(idx, repeat=4):
        d = laplacian_entry(m, n, k, l, cut)
        if d:
            lap.setdefault((m, n), []).append((k, l, d))
        if m == l and n == k:
            prop.setdefault((m, n), []).append((k, l, covariance(m, n, cut)))
    for m, n in itertools.product(idx, repeat=2):
        acc = {}
        for r, s_, d in lap.get((m, n), ()):
            for k, l, c in prop.get((s_, r), ()):
                acc[k, l] = acc.get((k, l), Fraction(0)) + d * c
        for k, l in itertools.product(idx, repeat=2):
            if acc.get((k, l), 0) != (1 if (m == l and n == k) else 0):
                return False
    return True


def _tadpoles(L: int) -> tuple:
    return tuple(sum((Fraction(1, q + m + 1) for q in range(L + 1)), Fraction(0))
                 for m in range(L + 1))


def tadpole(m: int, cutoff) -> Fraction:
    cut = _as_cutoff(cutoff)
    _check(m, cut)
    return _tadpoles(cut.lambda_max)[m]


def tadpoles(cutoff) -> tuple:
    return _tadpoles(_as_cutoff(cutoff).lambda_max)


@lru_cache(maxsize=None)
def _vacuum(L: int) -> Fraction:
    return sum((t * t for t in _tadpoles(L)), Fraction(0))


def vacuum_tadpole(cutoff) -> Fraction:
    return _vacuum(_as_cutoff(cutoff).lambda_max)


@dataclass(frozen=True)
class TadpoleTable:
    cutoff: Cutoff
    t_values: tuple
    pi_value: Fraction

    @classmethod
    def build(cls, cutoff) -> "TadpoleTable":
        cut = _as_cutoff(cutoff)
        return cls(cut, tadpoles(cut), vacuum_tadpole(cut))


# float views used by the numerical modules

def covariance_matrix(cutoff) -> np.ndarray:
    n = _as_cutoff(cutoff).dim
    i = np.arange(n)
    return 1.0 / (i[:, None] + i[None, :] + 1.0)


def tadpole_vector(cutoff) -> np.ndarray:
    return np.array([float(t) for t in tadpoles(cutoff)])


def is_hermitian(a: np.ndarray, tol: float = 1e-12) -> bool:
    a = np.asarray(a)
    return a.shape[-1] == a.shape[-2] and np.allclose(a, np.conj(np.swapaxes(a, -1, -2)), atol=tol)


def wick_interaction(phi, coupling, cutoff) -> complex:
    """(lambda/4)[Tr phi^4 - 4 Tr(phi^2 T) + 2 Pi]."""
    cut = _as_cutoff(cutoff)
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (cut.dim, cut.dim):
        raise DomainError(f"field has shape {phi.shape}, expected {(cut.dim, cut.dim)}")
    lam = complex(coupling.value if isinstance(coupling, Coupling) else coupling)
    p2 = phi @ phi
    t = tadpole_vector(cut)
    val = np.trace(p2 @ p2) - 4 * np.sum(np.diag(p2) * t) + 2 * float(vacuum_tadpole(cut))
    return lam / 4 * val


def wick_interaction_batch(phi: np.ndarray, lam: complex, cutoff) -> np.ndarray:
    cut = _as_cutoff(cutoff)
    p2 = phi @ phi
    t = tadpole_vector(cut)
    tr4 = np.einsum("...ij,...ji->...", p2, p2)
    tr2t = np.einsum("...ii,i->...", p2, t)
    return lam / 4 * (tr4 - 4 * tr2t + 2 * float(vacuum_tadpole(cut)))


def nelson_bound_rhs(coupling, cutoff) -> float:
    lam = coupling.value if isinstance(coupling, Coupling) else coupling
    lam = complex(lam)
    if lam.imag != 0 or lam.real <= 0:
        raise DomainError("Nelson bound needs real positive coupling")
    return math.exp(lam.real / 2 * float(vacuum_tadpole(cutoff)))
