import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import ellipj, ellipe as sp_ellipe, ellipk as sp_ellipk

from hypelastica import special as sf

moduli = st.floats(0.0, 1.0)
args = st.floats(-30.0, 30.0)


def mp_jacobi(u, p):
    # mpmath's ellipfun takes the parameter m = p^2
    return tuple(float(mpmath.ellipfun(k, u, m=p * p)) for k in ("sn", "cn", "dn"))


@pytest.mark.parametrize("p", [0.1, 0.5, 0.9, 0.99, 0.999999])
def test_against_mpmath(p):
    for u in np.linspace(-7.3, 9.1, 23):
        ref = mp_jacobi(u, p)
        got = sf.jacobi_sncndn(u, p)
        assert np.allclose(got, ref, rtol=0, atol=1e-12)


def test_against_scipy_on_a_grid():
    u = np.linspace(-5, 5, 101)
    for p in (0.0, 0.3, 0.7071, 0.95):
        sn, cn, dn, _ = ellipj(u, p * p)
        got = sf.jacobi_sncndn(u, p)
        assert np.max(np.abs(got[0] - sn)) < 1e-12
        assert np.max(np.abs(got[1] - cn)) < 1e-12
        assert np.max(np.abs(got[2] - dn)) < 1e-12


def test_degenerate_moduli():
    u = np.linspace(-3, 3, 13)
    sn, cn, dn = sf.jacobi_sncndn(u, 0.0)
    assert np.allclose(sn, np.sin(u)) and np.allclose(cn, np.cos(u)) and np.all(dn == 1.0)
    sn, cn, dn = sf.jacobi_sncndn(u, 1.0)
    assert np.allclose(sn, np.tanh(u)) and np.allclose(cn, 1 / np.cosh(u)) and np.allclose(dn, 1 / np.cosh(u))


def test_complete_integrals():
    for p in (0.0, 0.2, 0.6, 0.9, 0.999):
        assert abs(sf.ellipk(p) - float(mpmath.ellipk(p * p))) < 1e-13
        assert abs(sf.ellipe(p) - float(mpmath.ellipe(p * p))) < 1e-13
        assert abs(sf.ellipk(p) - sp_ellipk(p * p)) < 1e-12
        assert abs(sf.ellipe(p) - sp_ellipe(p * p)) < 1e-12
    assert sf.ellipk(1.0) == np.inf
    assert sf.ellipe(1.0) == 1.0
    assert sf.ellipk(0.0) == pytest.approx(np.pi / 2, abs=1e-15)


@pytest.mark.parametrize("p", [-0.1, 1.5, np.nan])
def test_bad_modulus(p):
    with pytest.raises(ValueError):
        sf.jacobi_cn(0.3, p)


@settings(max_examples=200, deadline=None)
@given(args, moduli)
def test_pythagorean_identities(u, p):
    sn, cn, dn = sf.jacobi_sncndn(u, p)
    assert abs(sn * sn + cn * cn - 1) < 1e-12
    assert abs(dn * dn + p * p * sn * sn - 1) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.0, 0.999))
def test_quarter_period_shift(u, p):
    # cn(u + K) = -p' sn(u) / dn(u)
    K = sf.ellipk(p)
    pc = np.sqrt(1 - p * p)
    sn, _, dn = sf.jacobi_sncndn(u, p)
    assert abs(sf.jacobi_cn(u + K, p) + pc * sn / dn) < 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(0.0, 0.999))
def test_derivative_of_cn(u, p):
    # d cn / du = -sn dn
    h = 1e-5
    fd = (sf.jacobi_cn(u + h, p) - sf.jacobi_cn(u - h, p)) / (2 * h)
    sn, _, dn = sf.jacobi_sncndn(u, p)
    assert abs(fd + sn * dn) < 1e-8
