import math
from fractions import Fraction

import numpy as np
import pytest

from artifact.direct_eval import sample_sigma
from artifact.model_core import RangeError, covariance, vacuum_tadpole
from artifact.scales import (ScalePartition, full_tadpole_float, q_coords, q_form_direct,
                             q_kernel, q_kernel_bounds_check, q_kernel_printed_terms,
                             slice_bounds_report, slice_of, slice_tadpole_j,
                             sliced_propagator, sliced_tadpole, sliced_vacuum_tadpole,
                             sliced_vacuum_tadpole_float, tadpole_slice_report)


@pytest.mark.parametrize("omega,M,j", [(7, 2, 2), (1, 2, 0), (9, 3, 2), (8, 2, 3), (26, 3, 2)])
def test_slice_of(omega, M, j):
    assert slice_of(omega, ScalePartition(M, 5)) == j


def test_slice_of_out_of_range():
    with pytest.raises(RangeError):
        slice_of(64, ScalePartition(2, 5))


def test_partition_covers_and_sizes():
    p = ScalePartition(3, 4)
    seen = [w for s in p.slices for w in s]
    assert seen == list(range(p.top + 1))
    for j in range(1, 5):
        assert len(p.slice(j)) == 2 * 3 ** j
    assert ScalePartition.for_cutoff(2, 8).top >= 16


def test_sliced_propagator_examples():
    assert sliced_propagator(0, 3).entries == {(0, 0): 1}
    e = sliced_propagator(2, 3).entries
    assert len(e) == 3 and set(e.values()) == {Fraction(1, 3)}


def test_partition_of_unity_exact():
    L = 8
    tot = {}
    for w in range(2 * L + 1):
        for k, v in sliced_propagator(w, L).entries.items():
            tot[k] = tot.get(k, 0) + v
    assert tot == {(m, n): covariance(m, n, L) for m in range(L + 1) for n in range(L + 1)}


def test_sliced_tadpole():
    assert sliced_tadpole(5, 5)[0] == Fraction(1, 6)
    assert sum(sum(sliced_tadpole(w, 4)[m] for w in range(9)) for m in [0]) == sum(
        Fraction(1, q + 1) for q in range(5))


def test_slice_bounds_examples():
    r = slice_bounds_report(ScalePartition(2, 10))
    assert r["ok"]
    assert r["rows"][0]["c_high"] == 0.5 or r["rows"][0]["c_high"] == 1.0
    row2 = r["rows"][2]
    assert row2["c_low"] == pytest.approx(8 / 8) and row2["c_high"] == pytest.approx(4 / 5)
    assert slice_bounds_report(ScalePartition(3, 10))["ok"]


def test_tadpole_slices_bounded():
    rep = tadpole_slice_report(ScalePartition(2, 10))
    assert all(r["T_sup"] < 2 for r in rep["rows"])
    # Pi^j / M^j settles to a constant; slice 0 holds index 0 and is larger
    assert all(r["Pi_over_Mj"] < 1 for r in rep["rows"][1:])
    assert rep["rows"][0]["Pi_over_Mj"] > 1


def test_vacuum_tadpole_float_matches_exact():
    p = ScalePartition(2, 4)
    for j in range(5):
        assert sliced_vacuum_tadpole_float(j, p) == pytest.approx(float(sliced_vacuum_tadpole(j, p)))


def test_slice_tadpole_direct_sum():
    p = ScalePartition(2, 4)
    assert slice_tadpole_j(2, 1, p) == sum(Fraction(1, w + 1) for w in range(4, 8))


@pytest.mark.parametrize("L", [64, 512, 4096])
def test_log_growth_of_tadpole(L):
    assert 0.9 <= full_tadpole_float(L)[0] / math.log(L + 1) <= 1.5


@pytest.mark.parametrize("L", [64, 512, 4096])
def test_linear_growth_of_vacuum_tadpole(L):
    t = full_tadpole_float(L)
    assert 0.5 <= float(t @ t) / L <= 3


@pytest.mark.parametrize("omega", [0, 1, 2, 5])
def test_q_kernel_matches_dense_trace(rng, omega):
    qk = q_kernel(omega, ScalePartition(2, 4))
    for s in sample_sigma(rng, omega + 1, 3):
        x = q_coords(s)
        assert x @ qk.matrix @ x == pytest.approx(q_form_direct(omega, s), rel=1e-12)


def test_q_kernel_eigenvalues_match_dense():
    qk = q_kernel(6, ScalePartition(2, 4), 0.3)
    assert np.allclose(np.sort(np.linalg.eigvalsh(qk.matrix)), qk.eigenvalues())


def test_q_kernel_bounds():
    p = ScalePartition(2, 8)
    for w in (0, 1, 3, 17, 100, 300):
        r = q_kernel_bounds_check(w, p, 0.5)
        assert r["psd"] and r["symmetric"] and r["c_norm"] < 10 and r["c_trace"] < 10


def test_q_kernel_norm_decays():
    p = ScalePartition(2, 8)
    norms = [q_kernel_bounds_check(2 ** j, p, 0.5)["norm"] for j in range(1, 9)]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_printed_second_term_is_not_psd():
    # the printed T^<= T^omega outer product is not symmetric positive
    b = q_kernel_printed_terms(3)["second"]
    ev = np.linalg.eigvalsh((b + b.T) / 2)
    assert ev.min() < -1e-6


def test_q_kernel_rho_guard():
    with pytest.raises(ValueError):
        q_kernel_bounds_check(1, ScalePartition(2, 2), 1.5)
