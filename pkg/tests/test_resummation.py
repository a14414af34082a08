import cmath
import math

import pytest

from artifact.direct_eval import z_direct_quadrature
from artifact.perturbation import coefficient_oracle
from artifact.resummation import (BorelSeries, CardioidDomain, DependencyError, PoleObstruction,
                                  borel_pade_evaluate, cardioid_contains, default_pade_order,
                                  euler_integral, euler_series, exp_series,
                                  remainder_growth_diagnostic, resum_table)


def test_cardioid_examples():
    assert cardioid_contains(0.05 * cmath.exp(1j * math.pi / 3), 0.1)
    assert not cardioid_contains(-0.01, 0.1)
    assert cardioid_contains(0.08, 0.1)
    assert not cardioid_contains(0.11, 0.1)


def test_cardioid_conjugation_invariance():
    for r in (0.01, 0.04, 0.07, 0.099):
        for p in (0.3, 1.0, 2.0, 3.0):
            z = r * cmath.exp(1j * p)
            assert cardioid_contains(z, 0.1) == cardioid_contains(z.conjugate(), 0.1)


def test_cardioid_domain_guard():
    with pytest.raises(ValueError):
        CardioidDomain(1.5)
    assert CardioidDomain(0.5).contains(0.2)


def test_borel_coefficients_exact():
    s = euler_series(5)
    assert [b * math.factorial(n) for n, b in enumerate(s.borel_coefficients)] == s.coefficients


def test_default_order():
    assert default_pade_order(4) == (2, 1)


@pytest.mark.parametrize("lam", [0.01, 0.05, 0.1, 0.2, 0.3])
def test_euler_series(lam):
    r = borel_pade_evaluate(euler_series(4), lam)
    assert abs(r.value - euler_integral(lam)) < 1e-6


def test_euler_value():
    assert euler_integral(0.1) == pytest.approx(0.91563, abs=1e-5)


def test_exp_series():
    r = borel_pade_evaluate(exp_series(10), 0.3)
    assert abs(r.value - math.exp(0.3)) < 1e-8


def test_pole_obstruction():
    # Borel image 1/(1 - u) has a pole at t = 1/lam on the positive axis
    s = BorelSeries([math.factorial(k) for k in range(4)])
    with pytest.raises(PoleObstruction) as e:
        borel_pade_evaluate(s, 0.5)
    assert e.value.location == pytest.approx(2.0)


def _ref(lam):
    return math.log(z_direct_quadrature(lam, 0).value.real) if lam else 0.0


def test_model_series_cutoff0():
    ps = coefficient_oracle(0, 4)
    r = borel_pade_evaluate(ps, 0.05)
    assert abs(r.value - _ref(0.05)) < 1e-4


def test_resum_table_columns():
    rows = resum_table(coefficient_oracle(0, 4), [0.05], _ref)
    assert set(rows[0]) == {"lambda_re", "lambda_im", "resummed_re", "resummed_im",
                            "reference_re", "reference_im", "abs_error"}


def test_remainder_diagnostic():
    ps = coefficient_oracle(0, 4)
    rep = remainder_growth_diagnostic(ps, [0.0, 0.05, 0.2], reference=_ref)
    assert rep.ok
    assert all(r["remainder"] == 0 for r in rep.rows if r["lambda"] == 0)
    assert math.isfinite(rep.K[0.05]) and math.isfinite(rep.K[0.2])
    with pytest.raises(DependencyError):
        remainder_growth_diagnostic(ps, [0.1])
    with pytest.raises(DependencyError):
        remainder_growth_diagnostic(ps, [0.1], reference={0.2: 0.0})
