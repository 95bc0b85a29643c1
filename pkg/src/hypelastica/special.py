"""Jacobi elliptic functions by arithmetic-geometric mean descent."""

import numpy as np

_AGM_TOL = 1e-14
_AGM_MAX_ITER = 60


def _check_modulus(p):
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"elliptic modulus must lie in [0, 1], got {p}")
    return p


def _agm_table(p):
    a, b, c = [1.0], [np.sqrt((1.0 - p) * (1.0 + p))], [p]
    while abs(c[-1]) > _AGM_TOL:
        if len(a) > _AGM_MAX_ITER:
            raise RuntimeError(f"AGM descent did not converge for p={p}")
        a_n, b_n = a[-1], b[-1]
        a.append(0.5 * (a_n + b_n))
        b.append(np.sqrt(a_n * b_n))
        c.append(0.5 * (a_n - b_n))
    return np.array(a), np.array(c)


def _amplitudes(u, p):
    """Return (phi_0, phi_1) of the descent; phi_0 is the Jacobi amplitude."""
    a, c = _agm_table(p)
    n = len(a) - 1
    phi = (2.0 ** n) * a[n] * np.asarray(u, dtype=float)
    prev = phi
    for k in range(n, 0, -1):
        prev = phi
        phi = 0.5 * (phi + np.arcsin(c[k] / a[k] * np.sin(phi)))
    return phi, prev


def jacobi_sncndn(u, p):
    """sn, cn, dn at argument ``u`` for modulus ``p`` (not parameter ``m = p**2``)."""
    p = _check_modulus(p)
    u = np.asarray(u, dtype=float)
    if p == 0.0:
        return np.sin(u), np.cos(u), np.ones_like(u)
    if p == 1.0:
        sech = 1.0 / np.cosh(u)
        return np.tanh(u), sech, sech
    phi0, phi1 = _amplitudes(u, p)
    sn, cn = np.sin(phi0), np.cos(phi0)
    # dn = cos(phi0)/cos(phi1 - phi0) is singular where cn vanishes
    dn = np.sqrt(np.maximum(1.0 - (p * sn) ** 2, 0.0))
    return sn, cn, dn


def jacobi_cn(u, p):
    return jacobi_sncndn(u, p)[1]


def jacobi_dn(u, p):
    return jacobi_sncndn(u, p)[2]


def jacobi_sn(u, p):
    return jacobi_sncndn(u, p)[0]


def ellipk(p):
    """Complete elliptic integral of the first kind, modulus convention."""
    p = _check_modulus(p)
    if p == 1.0:
        return np.inf
    a, _ = _agm_table(p)
    return np.pi / (2.0 * a[-1])


def ellipe(p):
    """Complete elliptic integral of the second kind, modulus convention."""
    p = _check_modulus(p)
    if p == 1.0:
        return 1.0
    a, c = _agm_table(p)
    # Legendre's AGM relation: E = K (1 - sum 2^(n-1) c_n^2)
    weights = 2.0 ** (np.arange(len(c)) - 1.0)
    return np.pi / (2.0 * a[-1]) * (1.0 - np.sum(weights * c ** 2))
