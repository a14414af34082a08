import math

import numpy as np
import pytest
from scipy import integrate

from artifact.direct_eval import (UnsupportedDimension, build_resolvent, hat, kappa_of,
                                  loop_vertex_unsplit, loop_vertex_value, nelson_bound_check,
                                  resolvent_derivative_check, resolvent_norm_check,
                                  sample_sigma, z_direct_quadrature, z_intermediate_field,
                                  z_intermediate_quadrature)
from artifact.model_core import DomainError


def _z0_scipy(lam):
    f = lambda x: math.exp(-lam / 4 * (x ** 4 - 4 * x ** 2 + 2) - x * x / 2) / math.sqrt(2 * math.pi)
    return integrate.quad(f, -math.inf, math.inf, epsabs=1e-14)[0]


@pytest.mark.parametrize("lam", [0.05, 0.1, 1.0])
def test_direct_quadrature_cutoff0_matches_scipy(lam):
    assert z_direct_quadrature(lam, 0).value.real == pytest.approx(_z0_scipy(lam), abs=1e-12)


def test_direct_quadrature_cutoff1_converged():
    a = z_direct_quadrature(0.3, 1, nodes=140).value.real
    b = z_direct_quadrature(0.3, 1, nodes=200).value.real
    assert a == pytest.approx(b, abs=1e-12)


def test_direct_quadrature_cutoff1_vs_phi_monte_carlo(rng):
    # independent oracle: sample phi directly
    from artifact.direct_eval import sample_phi
    from artifact.model_core import wick_interaction_batch
    phi = sample_phi(rng, 1, 400_000)
    v = np.exp(-wick_interaction_batch(phi, 0.5, 1).real)
    z = z_direct_quadrature(0.5, 1).value.real
    assert abs(v.mean() - z) < 4 * v.std() / math.sqrt(v.size)


def test_direct_quadrature_guards():
    with pytest.raises(UnsupportedDimension):
        z_direct_quadrature(0.1, 2)
    with pytest.raises(DomainError):
        z_direct_quadrature(-0.1, 0)


@pytest.mark.parametrize("L", [0, 1])
def test_sigma_quadrature_matches_direct(L):
    zd = z_direct_quadrature(0.1, L).value.real
    zs = z_intermediate_quadrature(0.1, L, nodes=70).value
    assert abs(zs - zd) < 1e-10


def test_hat_spectrum(rng):
    s = sample_sigma(rng, 3, 1)[0]
    e = np.linalg.eigvalsh(s)
    ev = np.sort(np.linalg.eigvalsh(hat(s)))
    assert np.allclose(ev, np.sort((e[:, None] + e[None, :]).ravel()))


def test_split_vertex_matches_unsplit(rng):
    s = sample_sigma(rng, 2, 1)[0]
    for lam in (0.1, 0.4 + 0.3j):
        assert loop_vertex_value(s, lam, 1) == pytest.approx(loop_vertex_unsplit(s, lam, 1))


def test_kappa_square():
    assert kappa_of(0.6) ** 2 == pytest.approx(-0.3)


def test_resolvent_negative_axis_rejected(rng):
    with pytest.raises(DomainError):
        build_resolvent(sample_sigma(rng, 2, 1)[0], -0.2, 1)


def test_resolvent_norm_bound_small():
    lams = [0.2 * np.exp(1j * p) for p in np.linspace(-3.0, 3.0, 7)]
    r = resolvent_norm_check(2000, 3, lams, 1)
    assert r["ok"] and r["max_ratio"] < 1


@pytest.mark.parametrize("kind", ["plain", "symmetric"])
def test_resolvent_derivative(rng, kind):
    s = sample_sigma(rng, 2, 1)[0]
    for d in ((0, 0), (0, 1)):
        assert resolvent_derivative_check(s, 0.4 - 0.1j, 1, d, 1e-5, kind) < 1e-5


def test_monte_carlo_agrees_with_quadrature():
    est = z_intermediate_field(0.1, 0, samples=50_000, seed=2)
    assert abs(est.value - z_direct_quadrature(0.1, 0).value) < 3 * est.std_error
    assert est.to_json()["samples"] == 50_000


def test_monte_carlo_seed_determinism():
    a = z_intermediate_field(0.2, 1, samples=5000, seed=9)
    b = z_intermediate_field(0.2, 1, samples=5000, seed=9)
    assert a.value == b.value


def test_nelson():
    r = nelson_bound_check(0.5, 1)
    assert r["ok"] and r["z"] <= r["bound"]
