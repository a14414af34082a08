import math
from fractions import Fraction

import numpy as np
import pytest

from artifact.model_core import (Coupling, Cutoff, DomainError, RangeError, TadpoleTable,
                                 covariance, inverse_identity_check, is_hermitian,
                                 laplacian_entry, nelson_bound_rhs, tadpole, tadpoles,
                                 vacuum_tadpole, wick_interaction)


def test_covariance_values():
    assert covariance(0, 0, 3) == 1
    assert covariance(1, 2, 3) == Fraction(1, 4)
    with pytest.raises(RangeError):
        covariance(4, 0, 3)


def test_cutoff_guard():
    with pytest.raises(DomainError):
        Cutoff(-1)
    assert Cutoff(4).dim == 5


@pytest.mark.parametrize("L", [0, 1, 2, 3])
def test_inverse_identity(L):
    assert inverse_identity_check(L)


def test_laplacian_is_diagonal_in_pairs():
    assert laplacian_entry(1, 2, 2, 1, 3) == 4
    assert laplacian_entry(1, 2, 1, 2, 3) == 0


def test_tadpoles_oracle():
    # T_m = sum_q 1/(q+m+1) by direct summation
    L = 5
    for m in range(L + 1):
        assert tadpole(m, L) == sum(Fraction(1, q + m + 1) for q in range(L + 1))
    assert tadpoles(0) == (1,)
    assert vacuum_tadpole(1) == (Fraction(3, 2)) ** 2 + (Fraction(5, 6)) ** 2
    tab = TadpoleTable.build(2)
    assert tab.pi_value == sum(t * t for t in tab.t_values)


def test_coupling_phase_and_kappa():
    c = Coupling(0.5)
    assert c.kappa() ** 2 == pytest.approx(-0.25)
    assert Coupling(complex(-1, -0.0)).phase == math.pi
    assert Coupling(-1).on_negative_axis()
    assert not Coupling(1j).on_negative_axis()


def test_wick_interaction_cutoff0_polynomial():
    # at cutoff 0: (lam/4)(x^4 - 4x^2 + 2)
    x = 1.3
    v = wick_interaction(np.array([[x]]), 0.2, 0)
    assert v == pytest.approx(0.05 * (x ** 4 - 4 * x ** 2 + 2))


def test_wick_interaction_shape_error():
    with pytest.raises(DomainError):
        wick_interaction(np.zeros((3, 3)), 0.1, 1)


def test_wick_ordering_leaves_only_crossed_pairing(rng):
    # planar self-contractions cancel against the counterterms; the crossed
    # pairing survives, so E[S_int] = (lam/4) sum_m (2m+1)^-2
    from artifact.direct_eval import sample_phi
    from artifact.model_core import wick_interaction_batch
    phi = sample_phi(rng, 2, 200_000)
    v = wick_interaction_batch(phi, 1.0, 2).real
    expected = sum(1 / (2 * m + 1) ** 2 for m in range(3)) / 4
    assert abs(v.mean() - expected) < 4 * v.std() / math.sqrt(v.size)


def test_is_hermitian():
    assert is_hermitian(np.array([[1, 1j], [-1j, 2]]))
    assert not is_hermitian(np.array([[1, 1j], [1j, 2]]))


def test_nelson_rhs_domain():
    assert nelson_bound_rhs(0.1, 0) == pytest.approx(math.exp(0.05))
    with pytest.raises(DomainError):
        nelson_bound_rhs(-0.1, 0)
    with pytest.raises(DomainError):
        nelson_bound_rhs(0.1j, 0)
