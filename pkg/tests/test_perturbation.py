from fractions import Fraction

import pytest

from artifact.perturbation import (ComplexityGuard, a1_closed_form, cached_log_z_coefficients,
                                   coefficient_oracle, diagram_amplitude, enumerate_pairings,
                                   has_adjacent_self_contraction, log_z_coefficients,
                                   series_log, tadpole_cancellation_check, z_coefficients)


def test_pairing_counts():
    assert sum(1 for _ in enumerate_pairings(1)) == 3
    assert sum(1 for _ in enumerate_pairings(2)) == 105
    assert sum(1 for _ in enumerate_pairings(3)) == 10395
    with pytest.raises(ComplexityGuard):
        next(enumerate_pairings(5))


def test_order1_diagrams():
    ds = list(enumerate_pairings(1))
    adj = [d for d in ds if has_adjacent_self_contraction(d)]
    assert len(adj) == 2
    # the crossed pairing has a single face
    cross = [d for d in ds if not has_adjacent_self_contraction(d)][0]
    assert diagram_amplitude(cross, 0) == 1
    assert diagram_amplitude(cross, 1, wick_ordered=True) == sum(
        Fraction(1, (2 * m + 1) ** 2) for m in range(2))


def test_cutoff0_series_against_moment_oracle():
    assert log_z_coefficients(0, 3).coefficients == coefficient_oracle(0, 3).coefficients
    assert coefficient_oracle(0, 4).coefficients == [Fraction(-1, 4), Fraction(1),
                                                     Fraction(-101, 12), Fraction(107)]


def test_cutoff1_series():
    assert log_z_coefficients(1, 3).coefficients == [Fraction(-5, 18), Fraction(3641, 2592),
                                                     Fraction(-1475249, 139968)]


@pytest.mark.parametrize("L", [0, 1, 2, 5])
def test_a1_closed_form(L):
    assert log_z_coefficients(L, 1).coefficients[0] == a1_closed_form(L)


def test_series_log_roundtrip():
    z = z_coefficients(1, 3)
    assert series_log(z) == log_z_coefficients(1, 3).coefficients


def test_tadpole_cancellation():
    r = tadpole_cancellation_check(4)
    assert r["planar"] + r["counterterms"] == 0
    assert r["a1"] == a1_closed_form(4)
    assert r["bounded"]


def test_cache_roundtrip(tmp_path):
    a = cached_log_z_coefficients(1, 2, tmp_path)
    b = cached_log_z_coefficients(1, 2, tmp_path)
    assert a.coefficients == b.coefficients == log_z_coefficients(1, 2).coefficients
    assert len(list(tmp_path.iterdir())) == 1


def test_power_series_json():
    js = log_z_coefficients(1, 1).to_json()
    assert js == {"cutoff": 1, "coefficients": ["-5/18"]}
