"""Acceptance criteria 1-14, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -s` or `python tests/test_acceptance.py`.
Tolerances and sizes are the fixed acceptance values; none are loosened here.
"""

from __future__ import annotations

import json
import math
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from artifact import cli
from artifact.direct_eval import (nelson_bound_check, resolvent_derivative_check,
                                  resolvent_norm_check, sample_sigma, z_direct_quadrature,
                                  z_intermediate_field)
from artifact.forests import (bkar_exactness_check, count_forests, count_two_level_trees,
                              enumerate_two_level_trees, minor_bound_check)
from artifact.model_core import covariance_matrix, inverse_identity_check
from artifact.perturbation import (coefficient_oracle, enumerate_pairings,
                                   has_adjacent_self_contraction, log_z_coefficients,
                                   tadpole_cancellation_check)
from artifact.resummation import borel_pade_evaluate, euler_integral, euler_series
from artifact.scales import (ScalePartition, q_kernel_sweep, slice_bounds_report,
                             tadpole_slice_report)
from artifact.slice_testing import (enumerated_term_count, expectation_report,
                                    resolvent_graph_count_bound, scalar_identity_check)

MC_SAMPLES = 100_000


def _line(n: int, ok: bool, detail: str, seconds: float, limit: float) -> str:
    status = "PASS" if ok else "FAIL"
    return f"[{status}] criterion {n:2d}: {detail} ({seconds:.1f}s, limit {limit:g}s)"


def c01_representation():
    rows = []
    ok = True
    for L, lam in ((0, 0.05), (0, 0.1), (0, 0.2), (1, 0.1)):
        zd = z_direct_quadrature(lam, L)
        mc = z_intermediate_field(lam, L, MC_SAMPLES, seed=0)
        se = math.hypot(zd.std_error, mc.std_error)
        d = abs(zd.value.real - mc.value)
        ok &= d <= 3 * se
        rows.append(f"L={L} lam={lam} |d|/se={d / se:.2f}")
    return ok, "; ".join(rows)


def c02_inverse_identity():
    ok = all(inverse_identity_check(L) for L in range(7))
    return ok, "sum Delta C = delta delta exactly for cutoff 0..6"


def c03_perturbation_oracle():
    ps = log_z_coefficients(0, 4)
    oracle = coefficient_oracle(0, 4)
    ok = ps.coefficients == oracle.coefficients
    for L in range(17):
        a1 = log_z_coefficients(L, 1).coefficients[0]
        ok &= a1 == -Fraction(1, 4) * sum(Fraction(1, (2 * m + 1) ** 2) for m in range(L + 1))
    return ok, f"a_1..a_4 at cutoff 0 = {[str(c) for c in ps.coefficients]}; a_1 exact for cutoff <= 16"


def c04_tadpole_cancellation():
    # structural: every counterterm-bearing pairing is one with an adjacent
    # self-contraction, and the Wick-ordered order-1 coefficient keeps none of them
    kept = [d for d in enumerate_pairings(1) if not has_adjacent_self_contraction(d)]
    structural = len(kept) == 1
    for k in range(11):
        tadpole_cancellation_check(2 ** k)  # raises if planar + counterterms != 0
    # value for every cutoff up to 2^10: the surviving crossed term is sum_m C_mm^2
    diag = np.diag(covariance_matrix(2 ** 10))
    values = np.cumsum(diag ** 2) / 4
    bound = math.pi ** 2 / 8 / 4
    ok = structural and bool(np.all(values < bound))
    return ok, f"max |a_1| = {values.max():.6f} < pi^2/32 = {bound:.6f} over cutoff 0..1024"


def c05_bkar_and_counts():
    b = bkar_exactness_check(4, 6)
    counts = [(n, sum(1 for _ in enumerate_two_level_trees(n)), 2 ** (n - 1) * n ** max(n - 2, 0))
              for n in range(1, 7)]
    # n = 1 has the single one-vertex tree
    counts[0] = (1, counts[0][1], 1)
    ok = (b["ok"] and count_forests(3) == 7
          and all(e == c and e == count_two_level_trees(n) for n, e, c in counts))
    return ok, f"{b['checked']} monomials exact; forests(3)={count_forests(3)}; two-level {[e for _, e, _ in counts]}"


def _cardioid_points(rho: float, n: int = 24) -> list:
    phases = np.linspace(-0.98 * math.pi, 0.98 * math.pi, n)
    out = []
    for p in phases:
        for frac in (0.5, 0.99):
            r = frac * rho * math.cos(p / 2) ** 2
            out.append(r * complex(math.cos(p), math.sin(p)))
    return out


def c06_resolvent_bound():
    lams = _cardioid_points(0.9)
    worst = 0.0
    for L in (1, 2):
        r = resolvent_norm_check(10_000, 0, lams, L)
        worst = max(worst, r["max_ratio"])
    return worst < 1.0, f"max ||R|| cos(arg/2) = {worst:.9f} over {len(lams)} couplings x 10^4 samples"


def c07_derivative_identities():
    sig = sample_sigma(np.random.default_rng(7), 2, 1)[0]
    worst = 0.0
    for kind in ("plain", "symmetric"):
        for d in ((0, 0), (0, 1), (1, 1)):
            worst = max(worst, resolvent_derivative_check(sig, 0.3 + 0.2j, 1, d, 1e-5, kind))
    return worst < 1e-5, f"max relative error {worst:.2e} at h=1e-5"


def c08_slice_bounds():
    ok = True
    parts = []
    for M in (2, 3):
        part = ScalePartition(M, 10)
        r = slice_bounds_report(part)
        t = tadpole_slice_report(part)
        lo = min(min(x["c_low"], x["c_high"]) for x in r["rows"])
        hi = max(max(x["c_low"], x["c_high"]) for x in r["rows"])
        ok &= r["ok"] and math.isfinite(t["T_const"]) and math.isfinite(t["Pi_const"])
        parts.append(f"M={M} C in [{lo:.3f},{hi:.3f}] T<={t['T_const']:.3f} Pi/M^j<={t['Pi_const']:.3f}")
    return ok, "; ".join(parts)


def c09_q_kernel():
    q = q_kernel_sweep(ScalePartition(2, 8), 0.5)
    ok = q["ok"] and q["c_norm"] < 10 and q["c_trace"] < 10 and q["min_eig"] >= -1e-12
    return ok, f"c_norm={q['c_norm']:.3f} c_trace={q['c_trace']:.3f} min_eig={q['min_eig']:.2e}"


def c10_slice_testing():
    ok = True
    parts = []
    for order, omegas in ((1, (1,)), (2, (0, 1))):
        r = expectation_report(order, omegas, 0.1, 1, "mc", MC_SAMPLES, seed=0)
        d = abs(r["renormalized"] - r["finite_difference"])
        ok &= d <= 3 * r["se_ren_vs_fd"]
        parts.append(f"order {order} |d|/se={d / r['se_ren_vs_fd']:.2f}")
    s = scalar_identity_check(2)
    ok &= s["ok"]
    for N in (1, 2):
        ok &= enumerated_term_count(N, borders=N == 1) <= resolvent_graph_count_bound(N)
    parts.append(f"identity exact={s['ok']}")
    parts.append(f"terms {enumerated_term_count(1, True)}, {enumerated_term_count(2)}")
    return ok, "; ".join(parts)


def c11_grassmann():
    s = cli.grassmann_oracle_sweep(0)
    m = minor_bound_check(200, 4, 0)
    ok = s["max_error"] <= 1e-12 and m["max_abs"] <= 1 + 1e-10
    return ok, f"{s['cases']} cases max error {s['max_error']:.1e}; max minor {m['max_abs']:.6f}"


def c12_nelson():
    ok = True
    worst = 0.0
    for lam in (0.1, 0.5, 1.0):
        for L in (0, 1):
            n = nelson_bound_check(lam, L)
            ok &= n["z"] <= n["bound"]
            worst = max(worst, n["z"] / n["bound"])
    return ok, f"max Z / bound = {worst:.4f}"


def c13_borel_pade():
    e = abs(borel_pade_evaluate(euler_series(6), 0.1).value - euler_integral(0.1))
    ref = math.log(z_direct_quadrature(0.05, 0).value.real)
    m = abs(borel_pade_evaluate(log_z_coefficients(0, 4), 0.05).value - ref)
    return e < 1e-6 and m < 1e-4, f"Euler error {e:.1e}; model error {m:.1e}"


def c14_determinism(tmp: Path | None = None):
    import tempfile
    base = Path(tmp) if tmp else Path(tempfile.mkdtemp())
    outs = []
    for k in (1, 2):
        d = base / f"run{k}"
        cli.main(["--out", str(d), "all"])
        outs.append({p.name: cli.strip_timings(json.loads(p.read_text()))
                     for p in sorted(d.glob("*.json"))})
    hashes = {r["provenance"]["config_hash"] for o in outs for r in o.values()}
    ok = len(outs[0]) == len(cli.SUITES) and outs[0] == outs[1] and len(hashes) == 1
    return ok, f"{len(outs[0])} reports identical modulo timings"


CRITERIA = [
    (1, c01_representation, 120),
    (2, c02_inverse_identity, 1),
    (3, c03_perturbation_oracle, 300),
    (4, c04_tadpole_cancellation, 10),
    (5, c05_bkar_and_counts, 60),
    (6, c06_resolvent_bound, 120),
    (7, c07_derivative_identities, 10),
    (8, c08_slice_bounds, 10),
    (9, c09_q_kernel, 30),
    (10, c10_slice_testing, 600),
    (11, c11_grassmann, 30),
    (12, c12_nelson, 10),
    (13, c13_borel_pade, 30),
    (14, c14_determinism, None),
]


def _run(n, fn, limit, **kw):
    t0 = time.perf_counter()
    ok, detail = fn(**kw)
    dt = time.perf_counter() - t0
    in_time = limit is None or dt < limit
    return ok and in_time, _line(n, ok and in_time, detail, dt, limit or math.inf)


@pytest.mark.parametrize("n,fn,limit", CRITERIA, ids=[f"criterion_{c[0]:02d}" for c in CRITERIA])
def test_criterion(n, fn, limit, capsys, tmp_path):
    kw = {"tmp": tmp_path} if n == 14 else {}
    ok, line = _run(n, fn, limit, **kw)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    results = [_run(n, fn, limit) for n, fn, limit in CRITERIA]
    for _, line in results:
        print(line)
    sys.exit(0 if all(ok for ok, _ in results) else 1)
