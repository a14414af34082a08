"""Slice-testing expansion at orders 1 and 2.

Interpolation: C(t) = sum_w t^w C^w over the anti-diagonals w = m + n, with
T(t) = sum_w t^w T^w and

    V(sigma, t) = -1/2 Tr log_2(1 + kappa C(t) sigma_hat)
                  + kappa sum_m T(t)_m sigma_mm + lam/2 sum_m T(t)_m^2.

Z(t) = E_sigma e^V.  Derivatives in t produce sigma-linear pieces; Gaussian
integration by parts (E[sigma_ab F] = E[dF/dsigma_ba]) turns them into
resolvent amplitudes.  Tadpoles generated when a sigma line closes on the
neighbouring resolvent cancel the counterterms exactly, which is why the
amplitudes below only ever contain R - 1, marked propagators C^w and
crossed (non-planar) pieces of bare propagators.

Notation (operators on the doubled space, kappa = i sqrt(2 lam)/2):

    K = R C(t),  K_w = R C^w,  W = K - C(t),  U_w = K_w - C^w
    Phi(M)   = sum_ab E^{ab} M E^{ba}
    Cross(M) = the part of Phi(M) that swaps borders
    P(A, B)  = sum_ab Tr[A E^{ab}] Tr[B E^{ba}]
    Y(A, B)  = Tr[A Cross(B)]
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .direct_eval import (NumericalFailure, check_off_cut, hat, kappa_of, pair_diag,
                          partial_in, partial_out, sample_sigma, sigma_quadrature_grid,
                          trace_e, vertex_general)
from .model_core import _as_cutoff, covariance_matrix
from .scales import ScalePartition, sliced_matrix


# -- interpolation --------------------------------------------------------------

@dataclass
class InterpolationVector:
    cutoff: int
    t: dict = field(default_factory=dict)

    @classmethod
    def ones(cls, cutoff) -> "InterpolationVector":
        L = _as_cutoff(cutoff).lambda_max
        return cls(L, {w: 1.0 for w in range(2 * L + 1)})

    @classmethod
    def zeros(cls, cutoff) -> "InterpolationVector":
        L = _as_cutoff(cutoff).lambda_max
        return cls(L, {w: 0.0 for w in range(2 * L + 1)})

    def shifted(self, omega: int, h: float) -> "InterpolationVector":
        t = dict(self.t)
        t[omega] = t.get(omega, 0.0) + h
        return InterpolationVector(self.cutoff, t)

    def propagator(self) -> np.ndarray:
        c = np.zeros((self.cutoff + 1, self.cutoff + 1))
        for w, tw in self.t.items():
            c = c + tw * sliced_matrix(w, self.cutoff)
        return c

    def tadpole(self) -> np.ndarray:
        return self.propagator().sum(axis=1)


def interpolated_vertex(sigma, t: InterpolationVector, coupling, cutoff) -> complex:
    lam = complex(coupling)
    check_off_cut(lam)
    c = t.propagator()
    tv = c.sum(axis=1)
    return vertex_general(np.asarray(sigma, dtype=complex), lam, c, tv, float(tv @ tv))


# -- superoperators -----------------------------------------------------------------

def _four(m, n):
    return m.reshape(m.shape[:-2] + (n, n, n, n))


def cross_super(m, n):
    m4 = _four(m, n)
    out = np.swapaxes(m4, -3, -2) + np.swapaxes(m4, -4, -1)
    return out.reshape(m.shape)


def phi_super(m, n):
    """Phi(M) = M^out (x) I + I (x) M^in + Cross(M)."""
    eye = np.eye(n)
    mo = partial_out(m, n)
    mi = partial_in(m, n)
    a = np.einsum("...pq,xy->...pxqy", mo, eye)
    b = np.einsum("pq,...xy->...pxqy", eye, mi)
    return (a + b).reshape(m.shape) + cross_super(m, n)


def phi_ren(k, cprime, n):
    """Phi(R C') with the bare tadpole of C' removed: Phi((R-1)C') + Cross(C')."""
    return phi_super(k - _diag_op(cprime, k), n) + cross_super(_diag_op(cprime, k), n)


def _diag_op(cvec, like):
    d = cvec.shape[-1]
    eye = np.eye(d, dtype=like.dtype if like.dtype != object else float)
    if like.dtype == object:
        out = np.zeros((d, d), dtype=object)
        for i in range(d):
            out[i, i] = cvec[i]
        return out
    return eye * cvec


def tadpole_hat(cvec, n):
    """T-hat = C'^out (x) I + I (x) C'^in for a diagonal pair propagator."""
    d = _diag_op(cvec, cvec.reshape(1, -1))
    return phi_super(d, n) - cross_super(d, n)


def _tr(a):
    return np.trace(a, axis1=-2, axis2=-1)


def pair_p(a, b, n):
    """P(A, B) = Tr[A hat(Tr_E(B)^T)]."""
    return _tr(a @ hat(np.swapaxes(trace_e(b, n), -1, -2)))


def cross_y(a, b, n):
    return _tr(a @ cross_super(b, n))


def loop_hat(b, n):
    """sum_ab Tr[B E^{ba}] E^{ab}: the insertion left by a loop vertex."""
    return hat(np.swapaxes(trace_e(b, n), -1, -2))


# -- amplitude context ------------------------------------------------------------------

class Context:
    """Resolvent data at fixed sigma (batched) and interpolation point t."""

    def __init__(self, sigma, t: InterpolationVector, lam: complex, omegas=(), r=None,
                 kappa=None):
        self.n = t.cutoff + 1
        self.lam = lam
        self.kappa = kappa_of(lam) if kappa is None else kappa
        cm = t.propagator()
        self.cvec = pair_diag(cm)
        self.tvec = cm.sum(axis=1)
        self.sigma = sigma
        if r is None:
            r = np.linalg.inv(np.eye(self.n ** 2) + self.kappa * self.cvec[:, None] * hat(sigma))
        self.R = r
        self.K = r * self.cvec
        self.W = self.K - _diag_op(self.cvec, r)
        self.marks = {}
        for w in omegas:
            self.add_mark(w, pair_diag(sliced_matrix(w, t.cutoff)))

    @classmethod
    def from_arrays(cls, sigma, cvec, lam, kappa, r, marks: dict) -> "Context":
        """Build from explicit pair-diagonal propagators (used with symbolic entries)."""
        self = cls.__new__(cls)
        self.n = sigma.shape[-1]
        self.lam, self.kappa, self.sigma, self.R = lam, kappa, sigma, r
        self.cvec = cvec
        self.tvec = cvec.reshape(self.n, self.n).sum(axis=1)
        self.K = r * cvec
        self.W = self.K - _diag_op(cvec, r)
        self.marks = {}
        for w, cw in marks.items():
            self.add_mark(w, cw)
        return self

    def add_mark(self, w, cw):
        k = self.R * cw
        self.marks[w] = {"c": cw, "K": k, "U": k - _diag_op(cw, self.R)}


def order1_terms(ctx: Context, w) -> dict:
    n, kap = ctx.n, ctx.kappa
    m = ctx.marks[w]
    return {
        "planar": kap ** 2 / 2 * pair_p(m["U"], ctx.W, n),
        "non_planar": kap ** 2 / 2 * cross_y(ctx.K, m["K"], n),
    }


def _b_pieces(ctx, left, x, w1):
    """P(L X K1, W) + P(U1, L X K) + Y(L X K, K1) + Y(K, L X K1)."""
    n = ctx.n
    k, k1, u1 = ctx.K, ctx.marks[w1]["K"], ctx.marks[w1]["U"]
    lx = left @ x
    return (pair_p(lx @ k1, ctx.W, n) + pair_p(u1, lx @ k, n)
            + cross_y(lx @ k, k1, n) + cross_y(k, lx @ k1, n))


def _self_contractions(ctx, w1, w2, renormalized=True):
    """Second-order pieces where a sigma line contracts inside the chain K2 sigma_hat (.)."""
    n = ctx.n
    k, k1, k2 = ctx.K, ctx.marks[w1]["K"], ctx.marks[w2]["K"]
    u1, c1, c2 = ctx.marks[w1]["U"], ctx.marks[w1]["c"], ctx.marks[w2]["c"]
    if renormalized:
        left = phi_ren(k2, c2, n)   # sigma line around the marked propagator C^w2
        right = phi_ren(k, ctx.cvec, n)
    else:
        left = phi_super(k2, n)
        right = phi_super(k, n)
    what = loop_hat(ctx.W, n)
    uhat = loop_hat(u1, n)
    adjacent = (
        _tr(k @ left @ k1 @ what) + _tr(k2 @ right @ k1 @ what)
        + _tr(k @ left @ k @ uhat) + _tr(k2 @ right @ k @ uhat)
        + cross_y(k @ left @ k, k1, n) + cross_y(k2 @ right @ k, k1, n)
        + cross_y(k, k @ left @ k1, n) + cross_y(k, k2 @ right @ k1, n)
    )
    distant = 0
    for a in range(n):
        for b in range(n):
            eab = _e(a, b, n)
            eba = _e(b, a, n)
            distant = distant + (
                pair_p(k2 @ eab @ k1, k @ eba @ k, n)
                + pair_p(k @ eba @ k1, k2 @ eab @ k, n)
                + _tr(k2 @ eab @ k @ cross_super(k @ eba @ k1, n))
                + _tr(k @ eba @ k @ cross_super(k2 @ eab @ k1, n))
            )
    return adjacent, distant


_E_CACHE = {}


def _e(a, b, n):
    key = (a, b, n)
    if key not in _E_CACHE:
        s = np.zeros((n, n))
        s[a, b] = 1.0
        _E_CACHE[key] = hat(s)
    return _E_CACHE[key]


def order2_terms(ctx: Context, w1, w2) -> dict:
    """Exact second-order amplitude split by graph family.

    G2: disconnected product of two first-order amplitudes.
    G1: the two marks joined directly (planar dumbbell and its crossed partner).
    loop_attach: a loop vertex (R-1)C^w2 hooks onto the first-order chain.
    vertex_attach: a loop vertex (R-1)C(t) hooks onto the chain C^w2 sigma.
    chain_adjacent / chain_distant: the sigma line of the chain closes on a
    resolvent next to it (renormalized) or further along.
    """
    n, kap = ctx.n, ctx.kappa
    k, k2 = ctx.K, ctx.marks[w2]["K"]
    o1 = order1_terms(ctx, w1)
    o2 = order1_terms(ctx, w2)
    a1 = o1["planar"] + o1["non_planar"]
    a2 = o2["planar"] + o2["non_planar"]
    m1, m2 = ctx.marks[w1], ctx.marks[w2]
    adjacent, distant = _self_contractions(ctx, w1, w2)
    q = kap ** 4
    return {
        "G2_disconnected": a1 * a2,
        "G1_planar": kap ** 2 / 2 * pair_p(m1["U"], m2["U"], n),
        "G1_non_planar": kap ** 2 / 2 * cross_y(k2, m1["K"], n),
        "loop_attach": q / 4 * _b_pieces(ctx, k, loop_hat(m2["U"], n), w1),
        "vertex_attach": q / 4 * _b_pieces(ctx, k2, loop_hat(ctx.W, n), w1),
        "chain_adjacent": q / 2 * adjacent,
        "chain_distant": q / 2 * distant,
    }


def order2_counterterm_pieces(ctx: Context, w1, w2) -> dict:
    """Tadpoles and counterterms that the renormalized form drops; they sum to zero."""
    n, q = ctx.n, ctx.kappa ** 4
    k, k2 = ctx.K, ctx.marks[w2]["K"]
    t_hat = tadpole_hat(ctx.cvec, n)
    t2_hat = tadpole_hat(ctx.marks[w2]["c"], n)
    adj_ren, _ = _self_contractions(ctx, w1, w2, True)
    adj_raw, _ = _self_contractions(ctx, w1, w2, False)
    return {
        "tadpoles": q / 2 * (adj_raw - adj_ren),
        "counterterms": -q / 2 * (_b_pieces(ctx, k2, t_hat, w1) + _b_pieces(ctx, k, t2_hat, w1)),
    }


# -- pre-integration-by-parts (unrenormalized) integrands -------------------------------

def dv_dt(ctx: Context, w) -> np.ndarray:
    """dV/dt^w with the explicit tadpole terms kept."""
    n, kap = ctx.n, ctx.kappa
    m = ctx.marks[w]
    tw = m["c"].reshape(n, n).sum(axis=1)
    diag = np.real(np.diagonal(ctx.sigma, axis1=-2, axis2=-1))
    return (-kap / 2 * _tr(m["U"] @ hat(ctx.sigma)) + kap * diag @ tw
            + ctx.lam * tw @ ctx.tvec)


def d2v_dt2(ctx: Context, w1, w2) -> np.ndarray:
    n, kap = ctx.n, ctx.kappa
    sh = hat(ctx.sigma)
    t1 = ctx.marks[w1]["c"].reshape(n, n).sum(axis=1)
    t2 = ctx.marks[w2]["c"].reshape(n, n).sum(axis=1)
    return (kap ** 2 / 2 * _tr(ctx.marks[w1]["K"] @ sh @ ctx.marks[w2]["K"] @ sh)
            + ctx.lam * t1 @ t2)


def unrenormalized_order1(ctx, w):
    return dv_dt(ctx, w)


def unrenormalized_order2(ctx, w1, w2):
    return d2v_dt2(ctx, w1, w2) + dv_dt(ctx, w1) * dv_dt(ctx, w2)


# -- public operations ---------------------------------------------------------------------

def _ctx_for(sigma, t, lam, omegas):
    lam = complex(lam)
    check_off_cut(lam)
    sigma = np.asarray(sigma, dtype=complex)
    return Context(sigma, t, lam, omegas)


def order1_amplitude(omega, sigma, t: InterpolationVector, coupling, cutoff=None) -> dict:
    ctx = _ctx_for(sigma, t, coupling, (omega,))
    terms = order1_terms(ctx, omega)
    n = ctx.n
    m = ctx.marks[omega]
    # single-border reading of the planar term; the in/out swap makes it equal
    # to the symmetric one
    terms["planar_one_border"] = -ctx.lam * _tr(partial_in(m["U"], n) @ partial_in(ctx.W, n))
    terms["total"] = terms["planar"] + terms["non_planar"]
    return terms


def order2_amplitude(omega1, omega2, sigma, t: InterpolationVector, coupling, cutoff=None,
                     symmetrize: bool = True) -> dict:
    """Second-order amplitude.  The integration-by-parts route treats the two
    marks asymmetrically; with symmetrize=True every term is averaged over
    the two orders so that the total is exactly symmetric at fixed sigma."""
    ctx = _ctx_for(sigma, t, coupling, (omega1, omega2))
    a = order2_terms(ctx, omega1, omega2)
    if symmetrize:
        b = order2_terms(ctx, omega2, omega1)
        a = {k: (a[k] + b[k]) / 2 for k in a}
    a["total"] = sum(a[k] for k in list(a))
    return a


# term bookkeeping: resolvent graphs produced at each order, and their factors

ORDER1_GRAPHS = {
    "planar": [("R-1", "C^w"), ("R-1", "C(t)")],
    "non_planar": [("R", "C(t)"), ("R", "C^w")],
}

ORDER2_GRAPHS = {
    "G2_disconnected": [("R-1", "C^w1"), ("R-1", "C(t)"), ("R-1", "C^w2"), ("R-1", "C(t)")],
    "G1_planar": [("R-1", "C^w1"), ("R-1", "C^w2")],
    "G1_non_planar": [("R", "C^w2"), ("R", "C^w1")],
    "loop_attach": [("R", "C(t)"), ("R-1", "C^w2"), ("R", "C^w1"), ("R-1", "C(t)")],
    "vertex_attach": [("R", "C^w2"), ("R-1", "C(t)"), ("R", "C^w1"), ("R-1", "C(t)")],
    "chain_adjacent": [("R", "C(t)"), ("R-1", "C^w2"), ("R", "C^w1"), ("R-1", "C(t)")],
    "chain_distant": [("R", "C^w2"), ("R", "C^w1"), ("R", "C(t)"), ("R", "C(t)")],
}

# number of distinct trace monomials behind each family
ORDER2_MULTIPLICITY = {"G2_disconnected": 1, "G1_planar": 1, "G1_non_planar": 1,
                       "loop_attach": 4, "vertex_attach": 4, "chain_adjacent": 8,
                       "chain_distant": 4}


def no_tadpole_factors(graphs: dict) -> bool:
    return all(not tag.startswith("T") for chain in graphs.values() for pair in chain
               for tag in pair)


def enumerated_term_count(order: int, borders: bool = False) -> int:
    """Count of resolvent-graph terms in the renormalized expansion.

    Order 1 with borders resolved: the planar dumbbell has 2 x 2 border choices
    and the crossed term 2, giving 6.
    """
    if order == 1:
        return 6 if borders else 2
    if order == 2:
        return sum(ORDER2_MULTIPLICITY.values())
    raise ValueError("only orders 1 and 2")


def resolvent_graph_count_bound(N: int) -> int:
    if not 0 <= N <= 12:
        raise ValueError("N must lie in 0..12")
    return 4 ** (N + 1) * math.factorial(N)


@dataclass
class StoppingSchedule:
    a: float
    M: int
    quotas: dict

    def order(self):
        return sorted(self.quotas, reverse=True)


def stopping_rule_schedule(partition: ScalePartition, a: float) -> StoppingSchedule:
    if not 0 < a < math.e / 4:
        raise ValueError("a must lie in (0, e/4)")
    quotas = {j: math.ceil(a * partition.M ** j - 1e-12) for j in range(partition.j_max + 1)}
    return StoppingSchedule(a, partition.M, quotas)


# -- Monte Carlo and quadrature drivers ---------------------------------------------

def _sigma_batches(cutoff, samples, seed, chunk):
    rng = np.random.default_rng(seed)
    n = _as_cutoff(cutoff).dim
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        yield sample_sigma(rng, n, m), np.full(m, 1.0 / samples)
        done += m


def _quad_batches(cutoff, nodes, chunk):
    sig, w = sigma_quadrature_grid(cutoff, nodes)
    for i in range(0, w.size, chunk):
        yield sig[i:i + chunk], w[i:i + chunk]


def _vertex(ctx: Context, t: InterpolationVector):
    c = t.propagator()
    tv = c.sum(axis=1)
    return vertex_general(ctx.sigma, ctx.lam, c, tv, float(tv @ tv))


def _mean_se(vals):
    v = np.concatenate(vals)
    return complex(v.mean()), float(np.std(v, ddof=1) / math.sqrt(v.size))


def dZ_dt_numeric(omega, coupling, cutoff, samples=100_000, seed=0, h=1e-4,
                  t: InterpolationVector | None = None, omega2=None, chunk=20_000) -> dict:
    """Central finite difference of E_sigma e^{V(sigma, t)} in t^omega (or the
    mixed second difference when omega2 is given), with common random numbers."""
    lam = complex(coupling)
    t = t or InterpolationVector.ones(cutoff)
    vals = []
    for sig, _ in _sigma_batches(cutoff, samples, seed, chunk):
        vals.append(_fd_integrand(sig, lam, t, omega, omega2, h))
    mean, se = _mean_se(vals)
    return {"value": mean, "std_error": se, "h": h}


def _fd_integrand(sig, lam, t, omega, omega2, h):
    def ev(tt):
        c = tt.propagator()
        tv = c.sum(axis=1)
        return np.exp(vertex_general(sig, lam, c, tv, float(tv @ tv)))
    if omega2 is None:
        return (ev(t.shifted(omega, h)) - ev(t.shifted(omega, -h))) / (2 * h)
    pp = ev(t.shifted(omega, h).shifted(omega2, h))
    pm = ev(t.shifted(omega, h).shifted(omega2, -h))
    mp = ev(t.shifted(omega, -h).shifted(omega2, h))
    mm = ev(t.shifted(omega, -h).shifted(omega2, -h))
    return (pp - pm - mp + mm) / (4 * h * h)


def expectation_report(order, omegas, coupling, cutoff, method="mc", samples=100_000,
                       seed=0, nodes=60, h=1e-4, t=None, chunk=20_000) -> dict:
    """Averages of e^V times: the renormalized amplitude, the unrenormalized
    (pre-integration-by-parts) derivative and a finite difference of e^V.

    For Monte Carlo the three are evaluated on the same samples; the standard
    errors of the paired differences are reported.
    """
    lam = complex(coupling)
    check_off_cut(lam)
    t = t or InterpolationVector.ones(cutoff)
    omegas = tuple(omegas)
    w2 = omegas[1] if order == 2 else None
    batches = (_sigma_batches(cutoff, samples, seed, chunk) if method == "mc"
               else _quad_batches(cutoff, nodes, chunk))
    ren, unren, fd, wts, parts = [], [], [], [], {}
    for sig, wt in batches:
        ctx = Context(sig, t, lam, omegas)
        ev = np.exp(_vertex(ctx, t))
        if order == 1:
            terms = order1_terms(ctx, omegas[0])
            u = unrenormalized_order1(ctx, omegas[0])
        else:
            terms = order2_terms(ctx, omegas[0], omegas[1])
            u = unrenormalized_order2(ctx, omegas[0], omegas[1])
        tot = sum(terms.values())
        for k, v in terms.items():
            parts.setdefault(k, []).append(ev * v)
        ren.append(ev * tot)
        unren.append(ev * u)
        fd.append(_fd_integrand(sig, lam, t, omegas[0], w2, h))
        wts.append(wt)
    w = np.concatenate(wts)
    r, u, f = (np.concatenate(x) for x in (ren, unren, fd))
    out = {"order": order, "omegas": list(omegas), "method": method,
           "renormalized": complex(np.sum(w * r)), "unrenormalized": complex(np.sum(w * u)),
           "finite_difference": complex(np.sum(w * f)),
           "terms": {k: complex(np.sum(w * np.concatenate(v))) for k, v in parts.items()}}
    if method == "mc":
        m = r.size
        se = lambda x: float(np.std(x, ddof=1) / math.sqrt(m))
        out["se_ren_vs_fd"] = se(r - f)
        out["se_ren_vs_unren"] = se(r - u)
        out["se_renormalized"] = se(r)
    return out


def scalar_identity_check(order: int) -> dict:
    """Exact check at cutoff 0, where sigma is a real scalar s.

    Order 1: with dV/dt = s g(s) + lam T T^0, Gaussian integration by parts gives
    E[e^V dV/dt] = E[e^V (g' + g V' + lam T T^0)]; the bracket must equal the
    renormalized amplitude as a rational function of (s, t, kappa).
    Order 2: d/dt of e^V A1 splits into a sigma-free part F0 + lam T T^0 A1 and
    s h(s); the amplitude must equal F0 + lam T T^0 A1 + h' + h V'.
    Here lam = -2 kappa^2 so everything is rational.
    """
    import sympy as sp
    s, t, k = sp.symbols("s t kappa")
    lam = -2 * k ** 2
    r = 1 / (1 + 2 * k * t * s)
    sig = np.array([[s]], dtype=object)
    R = np.array([[r]], dtype=object)
    one = np.array([sp.Integer(1)], dtype=object)
    ctx = Context.from_arrays(sig, np.array([t], dtype=object), lam, k, R, {0: one})
    V = -sp.Rational(1, 2) * (sp.log(1 + 2 * k * t * s) - 2 * k * t * s) + k * t * s + lam / 2 * t ** 2
    dV = sp.diff(V, s)
    e00 = np.array([[sp.Integer(2)]], dtype=object)
    u = ctx.marks[0]["U"]
    g = sp.expand(-k / 2 * _tr(u @ e00) + k)
    o1 = order1_terms(ctx, 0)
    a1 = sp.together(o1["planar"] + o1["non_planar"])
    # g must reproduce the sigma-linear part of dV/dt
    dvdt = sp.diff(V, t)
    split1 = sp.cancel(sp.together(dvdt - s * g - lam * t))
    res1 = sp.cancel(sp.together(sp.diff(g, s) + g * dV + lam * t - a1))
    out = {"order1_split": split1 == 0, "order1": res1 == 0}
    if order >= 2:
        a2 = sp.together(sum(order2_terms(ctx, 0, 0).values()))
        m = ctx.marks[0]
        f0 = k ** 2 / 2 * (pair_p(m["U"], m["U"], 1) + cross_y(m["K"], m["K"], 1))
        b = -k ** 3 / 2 * _b_pieces(ctx, m["K"], e00, 0)
        h = b + a1 * g
        # a1 depends on t through R and C(t); C^0 = 1 is t independent
        lhs = sp.diff(a1, t) + a1 * dvdt
        split2 = sp.cancel(sp.together(lhs - (f0 + s * h + a1 * lam * t)))
        res2 = sp.cancel(sp.together(f0 + a1 * lam * t + sp.diff(h, s) + h * dV - a2))
        out.update({"order2_split": split2 == 0, "order2": res2 == 0})
    out["ok"] = all(out.values())
    return out


def counterterm_cancellation_check(order, cutoff, coupling, samples=100_000, seed=0,
                                   omegas=None) -> dict:
    L = _as_cutoff(cutoff).lambda_max
    if omegas is None:
        omegas = (min(1, 2 * L),) if order == 1 else (0, min(1, 2 * L))
    if complex(coupling) == 0:
        return {"order": order, "renormalized": 0j, "unrenormalized": 0j, "ok": True}
    rep = expectation_report(order, omegas, coupling, cutoff, "mc", samples, seed)
    diff = abs(rep["renormalized"] - rep["unrenormalized"])
    rep["ok"] = diff <= 3 * rep["se_ren_vs_unren"] + 1e-14
    return rep
