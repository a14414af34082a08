"""Multi-scale slicing of the refined index omega = m + n.

Slices are I_0 = [0, M-1] and I_j = [M^j, M^{j+1} - 1] for j >= 1, so the low
indices sit in I_0 and every later slice has (M-1) M^j elements.  Refined
indices run over every achievable m + n, i.e. 0..2*cutoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import digamma

from .model_core import RangeError, _as_cutoff, covariance, tadpoles


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class ScalePartition:
    M: int
    j_max: int

    def __post_init__(self):
        if self.M < 2 or self.j_max < 0:
            raise ValueError("need M >= 2 and j_max >= 0")

    @classmethod
    def for_cutoff(cls, M: int, cutoff) -> "ScalePartition":
        """Smallest partition covering every omega in 0..2*cutoff."""
        top = max(2 * _as_cutoff(cutoff).lambda_max, 1)
        j = 0
        while M ** (j + 1) - 1 < top:
            j += 1
        return cls(M, j)

    def slice(self, j: int) -> range:
        if not 0 <= j <= self.j_max:
            raise RangeError(f"slice {j} outside 0..{self.j_max}")
        lo = 0 if j == 0 else self.M ** j
        return range(lo, self.M ** (j + 1))

    @property
    def slices(self) -> list:
        return [self.slice(j) for j in range(self.j_max + 1)]

    @property
    def top(self) -> int:
        return self.M ** (self.j_max + 1) - 1

    def below(self, j: int) -> range:
        """I_{<=j} as a range."""
        return range(0, self.M ** (j + 1))


def slice_of(omega: int, partition: ScalePartition) -> int:
    if not 0 <= omega <= partition.top:
        raise RangeError(f"omega {omega} outside 0..{partition.top}")
    if omega < partition.M:
        return 0
    j = int(math.log(omega, partition.M))
    # guard float rounding near exact powers
    while partition.M ** (j + 1) <= omega:
        j += 1
    while partition.M ** j > omega:
        j -= 1
    return j


@dataclass(frozen=True)
class SlicedPropagator:
    omega: int
    j: int | None
    entries: dict = field(hash=False)

    def matrix(self, cutoff) -> np.ndarray:
        n = _as_cutoff(cutoff).dim
        a = np.zeros((n, n))
        for (m, k), v in self.entries.items():
            a[m, k] = float(v)
        return a


def sliced_propagator(omega: int, cutoff, partition: ScalePartition | None = None) -> SlicedPropagator:
    cut = _as_cutoff(cutoff)
    if not 0 <= omega <= 2 * cut.lambda_max:
        raise RangeError(f"omega {omega} outside 0..{2 * cut.lambda_max}")
    ent = {}
    for m in range(cut.dim):
        n = omega - m
        if 0 <= n <= cut.lambda_max:
            ent[(m, n)] = covariance(m, n, cut)
    j = slice_of(omega, partition) if partition is not None else None
    return SlicedPropagator(omega, j, ent)


def sliced_matrix(omega: int, cutoff) -> np.ndarray:
    n = _as_cutoff(cutoff).dim
    i = np.arange(n)
    s = i[:, None] + i[None, :]
    return np.where(s == omega, 1.0 / (s + 1.0), 0.0)


def sliced_tadpole(omega: int, cutoff) -> list:
    """T^omega_m = sum_n C^omega_mn for every m (full anti-diagonal)."""
    cut = _as_cutoff(cutoff)
    return [Fraction(1, omega + 1) if 0 <= omega - m <= cut.lambda_max else Fraction(0)
            for m in range(cut.dim)]


def slice_tadpole_j(j: int, m: int, partition: ScalePartition, cutoff=None) -> Fraction:
    """T^j_m = sum over omega in I_j of T^omega_m (no upper cutoff when cutoff is None)."""
    tot = Fraction(0)
    for w in partition.slice(j):
        if w < m:
            continue
        if cutoff is not None and w - m > _as_cutoff(cutoff).lambda_max:
            continue
        tot += Fraction(1, w + 1)
    return tot


def sliced_vacuum_tadpole(j: int, partition: ScalePartition) -> Fraction:
    """Pi^j = sum_{m in I_j} (sum_{p in I_{<=j}} 1/(p+m+1))^2."""
    below = partition.below(j)
    tot = Fraction(0)
    for m in partition.slice(j):
        s = sum((Fraction(1, p + m + 1) for p in below), Fraction(0))
        tot += s * s
    return tot


def harmonic(n) -> np.ndarray:
    """H_n = sum_{k=1}^n 1/k for integer arrays, via the digamma function."""
    return digamma(np.asarray(n, dtype=float) + 1.0) + np.euler_gamma


def sliced_vacuum_tadpole_float(j: int, partition: ScalePartition) -> float:
    """Pi^j with the inner sum written as H(M^{j+1} + m) - H(m)."""
    m = np.arange(partition.slice(j).start, partition.slice(j).stop)
    s = harmonic(partition.M ** (j + 1) + m) - harmonic(m)
    return float(np.sum(s * s))


def slice_bounds_report(partition: ScalePartition, cutoff=None) -> dict:
    """Realized constants of O(1) M^{-j-1} <= |C^omega| <= O(1) M^{-j}.

    Every nonzero entry of C^omega equals 1/(omega+1), so the extremes over a
    slice come from its end points.  When a cutoff is given the slice is clipped
    to omega <= 2*cutoff.
    """
    M = partition.M
    rows = []
    ok = True
    for j in range(partition.j_max + 1):
        ws = [w for w in partition.slice(j)
              if cutoff is None or w <= 2 * _as_cutoff(cutoff).lambda_max]
        if not ws:
            continue
        vals = [Fraction(1, w + 1) for w in ws]
        lo, hi = min(vals), max(vals)
        c_low = lo * M ** (j + 1)
        c_high = hi * M ** j
        good = Fraction(1, 2) <= c_low <= 2 and Fraction(1, 2) <= c_high <= 2
        ok &= good
        rows.append({"M": M, "j": j, "c_low": float(c_low), "c_high": float(c_high), "ok": good})
    return {"rows": rows, "ok": ok}


def tadpole_slice_report(partition: ScalePartition) -> dict:
    """Realized constants for T^j_m (per slice, sup over m) and Pi^j / M^j.

    T^j_m = sum_{omega in I_j, omega >= m} 1/(omega+1) is largest for m at or
    below the slice start, where it equals H(M^{j+1}) - H(start).
    """
    rows = []
    for j in range(partition.j_max + 1):
        rng_j = partition.slice(j)
        tj = float(harmonic(rng_j.stop) - harmonic(rng_j.start))
        pij = sliced_vacuum_tadpole_float(j, partition)
        rows.append({"M": partition.M, "j": j, "T_sup": tj, "Pi": pij,
                     "Pi_over_Mj": pij / partition.M ** j})
    return {"rows": rows,
            "T_const": max(r["T_sup"] for r in rows),
            "Pi_const": max(r["Pi_over_Mj"] for r in rows)}


def full_tadpole_float(cutoff: int) -> np.ndarray:
    m = np.arange(cutoff + 1, dtype=float)
    q = np.arange(cutoff + 1, dtype=float)
    return np.sum(1.0 / (q[None, :] + m[:, None] + 1.0), axis=1)


# -- Q kernel ----------------------------------------------------------------------

def _c_le(omega: int, idx: np.ndarray) -> np.ndarray:
    s = idx[:, None] + idx[None, :]
    return np.where(s <= omega, 1.0 / (s + 1.0), 0.0)


def _c_eq(omega: int, idx: np.ndarray) -> np.ndarray:
    s = idx[:, None] + idx[None, :]
    return np.where(s == omega, 1.0 / (s + 1.0), 0.0)


@dataclass
class QKernel:
    omega: int
    j: int
    indices: np.ndarray
    diag_block: np.ndarray  # form on (sigma_xx)
    offdiag: np.ndarray     # weight of (Re sigma_xy)^2 and (Im sigma_xy)^2, x < y

    def eigenvalues(self) -> np.ndarray:
        n = self.indices.size
        iu = np.triu_indices(n, 1)
        off = self.offdiag[iu]
        return np.sort(np.concatenate([np.linalg.eigvalsh(self.diag_block), off, off]))

    @property
    def matrix(self) -> np.ndarray:
        """Dense form on (sigma_xx, Re sigma_xy, Im sigma_xy for x < y)."""
        n = self.indices.size
        if n > 40:
            raise ValueError("dense Q only for small blocks")
        iu = np.triu_indices(n, 1)
        off = self.offdiag[iu]
        return np.diag(np.concatenate([np.zeros(n), off, off])) + np.pad(
            self.diag_block, (0, 2 * off.size))


def q_kernel(omega: int, partition: ScalePartition, rho: float = 1.0, cutoff=None) -> QKernel:
    """Quadratic form rho * Tr(C^{<=omega} sigma_hat C^omega sigma_hat).

    Both propagators vanish beyond index omega, so sigma lives on 0..omega (or
    0..cutoff if smaller).  With A = C^{<=omega}, B = C^omega the trace expands to

        sum_{x,y} w_xy |sigma_xy|^2 + 2 sum_{x,p} A_px B_px sigma_xx sigma_pp,
        w_xy = 2 sum_r A_rx B_ry,

    which is non-negative for Hermitian sigma.  The form splits into a block on
    the diagonal entries and a diagonal part on the off-diagonal ones.
    """
    j = slice_of(omega, partition)
    top = omega if cutoff is None else min(omega, _as_cutoff(cutoff).lambda_max)
    idx = np.arange(top + 1)
    a = _c_le(omega, idx)
    b = _c_eq(omega, idx)
    w = 2 * a.T @ b
    diag_block = np.diag(np.diag(w)) + 2 * a * b
    off = np.triu(w + w.T, 1)
    return QKernel(omega, j, idx, rho * diag_block, rho * off)


def q_form_direct(omega: int, sigma_block: np.ndarray) -> float:
    """Tr(C^{<=} sigma_hat C^omega sigma_hat) for sigma on indices 0..n-1, on the doubled space."""
    from .direct_eval import hat
    n = sigma_block.shape[0]
    idx = np.arange(n)
    cle = _c_le(omega, idx).reshape(-1)
    ceq = _c_eq(omega, idx).reshape(-1)
    sh = hat(sigma_block)
    return float(np.real(np.trace((cle[:, None] * sh) @ (ceq[:, None] * sh))))


def q_coords(sigma_block: np.ndarray) -> np.ndarray:
    n = sigma_block.shape[0]
    out = [sigma_block[x, x].real for x in range(n)]
    out += [sigma_block[x, y].real for x in range(n) for y in range(x + 1, n)]
    out += [sigma_block[x, y].imag for x in range(n) for y in range(x + 1, n)]
    return np.array(out)


def q_kernel_printed_terms(omega: int) -> dict:
    """The two pieces as printed: 2 sum_r C^{<=}_{rl} C^omega_{rk} and 2 T^{<=}_m T^omega_l."""
    idx = np.arange(omega + 1)
    cle = _c_le(omega, idx)
    ceq = _c_eq(omega, idx)
    a = 2 * np.einsum("rl,rk->lk", cle, ceq)
    b = 2 * np.outer(cle.sum(axis=1), ceq.sum(axis=1))
    return {"first": a, "second": b}


def q_kernel_bounds_check(omega: int, partition: ScalePartition, rho: float = 0.5,
                          cutoff=None) -> dict:
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    qk = q_kernel(omega, partition, rho, cutoff)
    ev = qk.eigenvalues()
    norm = float(np.max(np.abs(ev)))
    tr = float(np.sum(ev))
    M = partition.M
    c_norm = norm / (rho * M ** (-qk.j))
    c_trace = abs(tr) / rho
    sym = bool(np.array_equal(qk.diag_block, qk.diag_block.T))
    return {"omega": omega, "j": qk.j, "M": M, "norm": norm, "trace": tr,
            "c_norm": c_norm, "c_trace": c_trace, "min_eig": float(ev.min()),
            "symmetric": sym, "psd": bool(ev.min() >= -1e-12)}


def q_kernel_sweep(partition: ScalePartition, rho: float = 0.5, j_max: int | None = None) -> dict:
    """q_kernel_bounds_check at every omega of slices 0..j_max."""
    j_max = partition.j_max if j_max is None else j_max
    rows = [q_kernel_bounds_check(w, partition, rho)
            for j in range(j_max + 1) for w in partition.slice(j)]
    return {"rows": rows,
            "c_norm": max(r["c_norm"] for r in rows),
            "c_trace": max(r["c_trace"] for r in rows),
            "min_eig": min(r["min_eig"] for r in rows),
            "ok": all(r["psd"] and r["symmetric"] for r in rows)}
