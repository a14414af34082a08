"""Cardioid geometry, Borel-Padé summation and remainder diagnostics.

A series lam^s * sum_n c_n lam^n is summed as

    lam^s * int_0^inf e^{-t} B(lam t) dt,   B(u) = sum_n c_n u^n / n!,

with B replaced by a Padé approximant.  Model series for log Z start at lam^1,
so they are stored with shift s = 1 and c_n = a_{n+1}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.interpolate import pade

from .model_core import Coupling


class PoleObstruction(ArithmeticError):
    def __init__(self, location):
        super().__init__(f"Padé pole on the integration path at t = {location}")
        self.location = location


class DependencyError(LookupError):
    pass


def _lam(x) -> complex:
    return complex(x.value if isinstance(x, Coupling) else x)


@dataclass(frozen=True)
class CardioidDomain:
    rho: float

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")

    def contains(self, lam) -> bool:
        return cardioid_contains(lam, self.rho)


def cardioid_contains(lam, rho: float) -> bool:
    """|arg lam| < pi and |lam| < rho cos^2(arg lam / 2)."""
    z = _lam(lam)
    if z.imag == 0 and z.real < 0:
        return False
    phase = cmath.phase(z)
    return abs(z) < rho * math.cos(phase / 2) ** 2


@dataclass
class BorelSeries:
    coefficients: list  # c_0..c_{N-1}
    shift: int = 0

    @property
    def borel_coefficients(self) -> list:
        return [c / math.factorial(n) for n, c in enumerate(self.coefficients)]

    @classmethod
    def from_power_series(cls, ps) -> "BorelSeries":
        """PowerSeries holds a_1..a_N; factor out one power of lam."""
        return cls(list(ps.coefficients), shift=1)

    def partial_sum(self, lam, terms: int | None = None) -> complex:
        lam = _lam(lam)
        cs = self.coefficients if terms is None else self.coefficients[:terms]
        return lam ** self.shift * sum(complex(c) * lam ** n for n, c in enumerate(cs))


def default_pade_order(n_coeffs: int) -> tuple:
    return n_coeffs // 2, math.ceil(n_coeffs / 2) - 1


@dataclass
class Resummed:
    value: complex
    error: float
    order: tuple
    cutoff_t: float


def _check_poles(q: np.poly1d, lam: complex, tol: float = 1e-9):
    for root in np.atleast_1d(q.roots):
        t = complex(root) / lam
        if abs(t.imag) <= tol * max(1.0, abs(t)) and t.real >= 0:
            raise PoleObstruction(t.real)


def _pade(b, L, M):
    """Padé [L/M]; a singular system means the image is rational of lower
    degree, so step down the diagonal until it solves."""
    while M > 0:
        try:
            p, q = pade(b[:L + M + 1], M, L)
            return p, q, L, M
        except np.linalg.LinAlgError:
            if L == 0:
                break
            L, M = L - 1, M - 1
    return np.poly1d(b[:L + 1][::-1]), np.poly1d([1.0]), L, 0


def borel_pade_evaluate(series, lam, pade_order: tuple | None = None) -> Resummed:
    """Borel-Padé sum at lam with an adaptive Laplace integral.

    The integral is cut at T where e^{-T} times the integrand scale drops below
    1e-16; the neglected tail, bounded by the integrand size at T, is added to
    the reported error.
    """
    if not isinstance(series, BorelSeries):
        series = BorelSeries.from_power_series(series)
    lam = _lam(lam)
    b = [float(x) for x in series.borel_coefficients]
    n = len(b)
    L, M = default_pade_order(n) if pade_order is None else pade_order
    if L + M + 1 > n:
        raise ValueError(f"order ({L},{M}) needs {L + M + 1} coefficients, have {n}")
    prefactor = lam ** series.shift
    if lam == 0:
        return Resummed(0j if series.shift else complex(b[0]), 0.0, (L, M), 0.0)
    p, q, L, M = _pade(b, L, M)
    _check_poles(q, lam)

    def g(t):
        u = lam * t
        return p(u) / q(u)

    scale = max(abs(g(0.0)), 1e-300)
    T = 40.0
    while math.exp(-T) * max(abs(g(T)), scale) > 1e-16 * scale and T < 2000:
        T *= 1.5
    opts = dict(limit=400, epsabs=1e-14, epsrel=1e-12)
    re, e1 = integrate.quad(lambda t: math.exp(-t) * g(t).real, 0, T, **opts)
    im, e2 = integrate.quad(lambda t: math.exp(-t) * g(t).imag, 0, T, **opts)
    tail = math.exp(-T) * abs(g(T)) * 2
    val = prefactor * complex(re, im)
    return Resummed(val, abs(prefactor) * (e1 + e2 + tail), (L, M), T)


def euler_series(n_terms: int) -> BorelSeries:
    return BorelSeries([Fraction((-1) ** k * math.factorial(k)) for k in range(n_terms)])


def euler_integral(lam: float) -> float:
    val, _ = integrate.quad(lambda t: math.exp(-t) / (1 + lam * t), 0, math.inf,
                            epsabs=1e-14, epsrel=1e-13)
    return val


def exp_series(n_terms: int) -> BorelSeries:
    return BorelSeries([Fraction(1, math.factorial(k)) for k in range(n_terms)])


@dataclass
class RemainderReport:
    rows: list
    K: dict
    ok: bool


def remainder_growth_diagnostic(series, lambda_grid, n_grid=None, reference=None) -> RemainderReport:
    """R_n(lam) = reference - sum_{k<n} a_k lam^k and ratios |R_n| / (n! |lam|^n).

    `series` is a PowerSeries (a_1..a_N, a_0 = 0).  `reference` maps lam to the
    non-perturbative value (dict or callable).  K is estimated per lam as the
    largest ratio between consecutive ratios; growth is non-explosive when every
    such step stays within a factor 10.
    """
    if reference is None:
        raise DependencyError("remainder diagnostic needs reference values")
    coeffs = [Fraction(0)] + list(series.coefficients)
    if n_grid is None:
        n_grid = range(1, min(len(coeffs), 5))
    n_grid = list(n_grid)
    if max(n_grid) > len(coeffs):
        raise ValueError("n_grid needs more coefficients than the series has")
    rows = []
    K = {}
    ok = True
    for lam in lambda_grid:
        if callable(reference):
            ref = reference(lam)
        else:
            if lam not in reference:
                raise DependencyError(f"no reference at lambda={lam}")
            ref = reference[lam]
        ref = complex(ref)
        ratios = []
        for n in n_grid:
            partial = sum(complex(coeffs[k]) * lam ** k for k in range(n))
            r = ref - partial
            denom = math.factorial(n) * abs(lam) ** n
            ratio = abs(r) / denom if lam != 0 else 0.0
            ratios.append(ratio)
            rows.append({"lambda": lam, "n": n, "remainder": abs(r), "ratio": ratio})
        steps = [b / a for a, b in zip(ratios, ratios[1:]) if a > 0]
        if lam == 0:
            K[lam] = 0.0
            continue
        K[lam] = max(steps) if steps else 0.0
        finite = all(math.isfinite(x) for x in ratios)
        ok &= finite and all(0.1 <= s <= 10 for s in steps)
    return RemainderReport(rows, K, ok)


def resum_table(series, lambdas, reference=None, pade_order=None) -> list:
    """Rows (lam_re, lam_im, resummed_re, resummed_im, reference_re, reference_im, abs_error)."""
    out = []
    for lam in lambdas:
        z = _lam(lam)
        r = borel_pade_evaluate(series, z, pade_order)
        ref = None if reference is None else complex(reference(z) if callable(reference) else reference[lam])
        out.append({"lambda_re": z.real, "lambda_im": z.imag,
                    "resummed_re": r.value.real, "resummed_im": r.value.imag,
                    "reference_re": None if ref is None else ref.real,
                    "reference_im": None if ref is None else ref.imag,
                    "abs_error": None if ref is None else abs(r.value - ref)})
    return out
