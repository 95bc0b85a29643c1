"""Hyperbolic elastica: classification, curvature profiles and explicit curves.

Curvature profiles are the Jacobi-elliptic solutions of the first integral
(kappa')^2 + kappa^4/4 - (lambda+2) kappa^2/2 = C, written with the peak at
s = 0 and kappa(0) = +kappa_0.  Curves are recovered from a profile by
integrating the moving frame with classical RK4.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import geometry as geo
from .special import ellipe, ellipk, jacobi_sncndn

CIRCULAR = "circular"
ORBIT_LIKE = "orbit_like"
ASYMPTOTICALLY_GEODESIC = "asymptotically_geodesic"
WAVE_LIKE = "wave_like"
GEODESIC = "geodesic"

_REL_TOL = 1e-12


class NoElasticaError(ValueError):
    """No lambda-constrained elastica has peak squared curvature in (0, lambda + 2)."""


class ConstructionError(RuntimeError):
    """Shooting for a closed figure-eight failed."""


@dataclass(frozen=True)
class ElasticaParams:
    lam: float
    kappa0_sq: float
    first_integral: float
    modulus: float
    rate: float
    family: str

    @property
    def kappa0(self):
        return float(np.sqrt(self.kappa0_sq))

    @property
    def period(self):
        """Arc-length period of kappa (infinite for non-periodic families)."""
        if self.family == WAVE_LIKE:
            return 4.0 * ellipk(self.modulus) / self.rate
        if self.family == ORBIT_LIKE:
            return 2.0 * ellipk(self.modulus) / self.rate
        return np.inf


def _close(a, b):
    return abs(a - b) <= _REL_TOL * max(1.0, abs(a), abs(b))


def classify(lam, kappa0_sq):
    """Family and invariants of the elastica with multiplier ``lam`` and peak ``kappa0_sq``."""
    lam, k2 = float(lam), float(kappa0_sq)
    if lam <= -2.0:
        raise ValueError("classification needs lambda > -2")
    if k2 < 0.0:
        raise ValueError("kappa0_sq must be nonnegative")
    a = lam + 2.0
    C = k2 * k2 / 4.0 - a * k2 / 2.0
    if k2 == 0.0:
        return ElasticaParams(lam, 0.0, 0.0, 0.0, 0.0, GEODESIC)
    if k2 < a and not _close(k2, a):
        raise NoElasticaError(
            f"there exist no lambda-constrained elastica with kappa0^2={k2} in (0, {a})"
        )
    if _close(k2, a):
        return ElasticaParams(lam, a, -a * a / 4.0, 0.0, 0.5 * np.sqrt(a), CIRCULAR)
    if _close(k2, 2.0 * a):
        return ElasticaParams(lam, 2.0 * a, 0.0, 1.0, 0.5 * np.sqrt(2.0 * a), ASYMPTOTICALLY_GEODESIC)
    if k2 < 2.0 * a:
        p2 = 2.0 - 2.0 * a / k2
        return ElasticaParams(lam, k2, C, np.sqrt(p2), 0.5 * np.sqrt(2.0 * a / (2.0 - p2)), ORBIT_LIKE)
    p2 = k2 / (2.0 * k2 - 2.0 * a)
    return ElasticaParams(lam, k2, C, np.sqrt(p2), 0.5 * np.sqrt(2.0 * a / (2.0 * p2 - 1.0)), WAVE_LIKE)


def wave_like(lam, p):
    """Wave-like parameters from the modulus p in (1/sqrt 2, 1)."""
    if not 1.0 / np.sqrt(2.0) < p < 1.0:
        raise ValueError("wave-like modulus must lie in (1/sqrt(2), 1)")
    k2 = (2.0 * lam + 4.0) * p * p / (2.0 * p * p - 1.0)
    out = classify(lam, k2)
    # keep the caller's modulus exactly; classify recomputes it through k2
    return ElasticaParams(out.lam, out.kappa0_sq, out.first_integral, float(p),
                          0.5 * np.sqrt((2.0 * lam + 4.0) / (2.0 * p * p - 1.0)), WAVE_LIKE)


def orbit_like(lam, p):
    if not 0.0 < p < 1.0:
        raise ValueError("orbit-like modulus must lie in (0, 1)")
    k2 = (2.0 * lam + 4.0) / (2.0 - p * p)
    out = classify(lam, k2)
    return ElasticaParams(out.lam, out.kappa0_sq, out.first_integral, float(p),
                          0.5 * np.sqrt((2.0 * lam + 4.0) / (2.0 - p * p)), ORBIT_LIKE)


def curvature_profile(params, s):
    """Signed curvature kappa(s) with kappa(0) = +kappa_0 at the peak."""
    s = np.asarray(s, dtype=float)
    k0, r, p = params.kappa0, params.rate, params.modulus
    fam = params.family
    if fam == GEODESIC:
        return np.zeros_like(s)
    if fam == CIRCULAR:
        return np.full_like(s, k0)
    if fam == ASYMPTOTICALLY_GEODESIC:
        return k0 / np.cosh(r * s)
    _, cn, dn = jacobi_sncndn(r * s, p)
    if fam == ORBIT_LIKE:
        return k0 * dn
    return k0 * cn


def curvature_profile_derivative(params, s):
    """d kappa / ds of :func:`curvature_profile`."""
    s = np.asarray(s, dtype=float)
    k0, r, p = params.kappa0, params.rate, params.modulus
    fam = params.family
    if fam in (GEODESIC, CIRCULAR):
        return np.zeros_like(s)
    if fam == ASYMPTOTICALLY_GEODESIC:
        return -k0 * r * np.tanh(r * s) / np.cosh(r * s)
    sn, cn, dn = jacobi_sncndn(r * s, p)
    if fam == ORBIT_LIKE:
        return -k0 * r * p * p * sn * cn
    return -k0 * r * sn * dn


def first_integral_residual(params, s):
    k = curvature_profile(params, s)
    dk = curvature_profile_derivative(params, s)
    lhs = dk ** 2 + k ** 4 / 4.0 - (params.lam + 2.0) * k ** 2 / 2.0
    return lhs - params.first_integral


def energy_asymptotically_geodesic(lam):
    """Total elastic energy of the asymptotically geodesic elastica, 4 sqrt(2 lambda + 4)."""
    if lam <= -2.0:
        raise ValueError("needs lambda > -2")
    return 4.0 * np.sqrt(2.0 * lam + 4.0)


def wave_period_energy(params):
    """Energy of one full period of a wave-like profile (closed form)."""
    p = params.modulus
    K, E = ellipk(p), ellipe(p)
    return 4.0 * params.kappa0_sq / params.rate * (E - (1.0 - p * p) * K) / (p * p)


# ---------------------------------------------------------------------------
# frame integration


@dataclass(frozen=True)
class FramePose:
    position: tuple
    tangent_angle: float


def _frame_rhs(model):
    """Right-hand side of the frame ODE given the curvature value k at s."""
    if model == geo.DISK:
        def rhs(p1, p2, th, k):
            c, sn = math.cos(th), math.sin(th)
            w = 0.5 * (1.0 - p1 * p1 - p2 * p2)
            return w * c, w * sn, k - p1 * sn + p2 * c
    elif model == geo.HALF_PLANE:
        def rhs(u1, u2, th, k):
            c, sn = math.cos(th), math.sin(th)
            return u2 * c, u2 * sn, k - c
    else:
        raise ValueError(f"unknown model {model!r}")
    return rhs


def _in_domain(model, a, b):
    if model == geo.DISK:
        return a * a + b * b < 1.0 - geo.BOUNDARY_FLOOR
    return b > geo.BOUNDARY_FLOOR


def integrate_frame_raw(kappa_fn, start, model, s0, s1, n_out, substeps=8):
    """RK4 for (position, tangent angle) at ``n_out`` equally spaced arc lengths.

    ``kappa_fn`` must accept an array of arc lengths.  Returns
    (s_values, states, completed); ``states`` is truncated at the last
    in-domain sample when the trajectory leaves the model.
    """
    rhs = _frame_rhs(model)
    s_out = np.linspace(s0, s1, n_out)
    total = (n_out - 1) * substeps
    h = (s1 - s0) / total
    kv = np.broadcast_to(np.asarray(kappa_fn(s0 + 0.5 * h * np.arange(2 * total + 1)), dtype=float),
                         (2 * total + 1,)).tolist()
    x, y, th = float(start.position[0]), float(start.position[1]), float(start.tangent_angle)
    states = np.empty((n_out, 3))
    states[0] = x, y, th
    hh = 0.5 * h
    for i in range(1, n_out):
        for j in range((i - 1) * substeps, i * substeps):
            ka, kb, kc = kv[2 * j], kv[2 * j + 1], kv[2 * j + 2]
            a1, b1, c1 = rhs(x, y, th, ka)
            a2, b2, c2 = rhs(x + hh * a1, y + hh * b1, th + hh * c1, kb)
            a3, b3, c3 = rhs(x + hh * a2, y + hh * b2, th + hh * c2, kb)
            a4, b4, c4 = rhs(x + h * a3, y + h * b3, th + h * c3, kc)
            x += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
            y += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
            th += h / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4)
            if not (math.isfinite(x) and math.isfinite(y) and _in_domain(model, x, y)):
                return s_out[:i], states[:i], False
        states[i] = x, y, th
    return s_out, states, True


def integrate_frame(kappa_fn, start, model=geo.DISK, s_range=(0.0, 1.0), step=None, n_nodes=257, substeps=8):
    """Curve with prescribed signed curvature, unit hyperbolic speed in s.

    ``kappa_fn`` takes an array of arc lengths.  Output nodes are spaced by
    ``step`` in arc length when given (otherwise ``n_nodes`` of them); RK4
    runs with ``substeps`` fixed substeps between nodes.  The result is an
    open :class:`SampledCurve` on ``s_range``; when the trajectory leaves the
    model it is truncated and ``meta['truncated']`` is set.
    """
    if step is not None:
        n_nodes = max(int(round((s_range[1] - s_range[0]) / step)) + 1, 2)
    s, states, ok = integrate_frame_raw(kappa_fn, start, model, s_range[0], s_range[1], n_nodes, substeps)
    if len(s) < 8:
        raise geo.DomainError("frame integration left the model before producing 8 nodes")
    curve = geo.SampledCurve(
        states[:, :2], model=model, topology=geo.OPEN, domain=(s[0], s[-1]),
        meta={"truncated": not ok, "tangent_angle": states[:, 2]},
    )
    return curve


def circle_return_period(kappa, model=geo.DISK, steps=4000):
    """Arc length after which the frame with constant curvature ``kappa`` has turned once."""
    start = FramePose((0.0, 0.0) if model == geo.DISK else (0.0, 1.0), 0.0)

    def turned(L):
        _, st, _ = integrate_frame_raw(lambda s: kappa, start, model, 0.0, L, 2, steps)
        return st[-1, 2] - 2.0 * np.pi

    guess = 2.0 * np.pi / kappa
    return brentq(turned, 0.5 * guess, 2.0 * guess, xtol=1e-13)


# ---------------------------------------------------------------------------
# explicit asymptotically geodesic elastica


def asymptotically_geodesic_halfplane(x):
    """Arc-length parametrization u(x) = (x, cosh x) / (x^2 + cosh^2 x) in H^2."""
    x = np.asarray(x, dtype=float)
    ch = np.cosh(x)
    d = x * x + ch * ch
    return np.stack([x / d, ch / d], axis=-1)


def asymptotically_geodesic_disk(x):
    """Disk image of :func:`asymptotically_geodesic_halfplane`; tends to (0, -1) as |x| grows."""
    x = np.asarray(x, dtype=float)
    ch = np.cosh(x)
    d = 1.0 + x * x + ch * (2.0 + ch)
    return np.stack([2.0 * x / d, (1.0 - x * x - ch * ch) / d], axis=-1)


def catenary_halfplane(x):
    """(x, cosh x): the asymptotically geodesic elastica with both ends at Euclidean infinity."""
    x = np.asarray(x, dtype=float)
    return np.stack([x, np.cosh(x)], axis=-1)


def transversality_constants(h):
    """Intersection of u with the geodesic v(x) = h (cos x + 1, sin x) and det(u', v') there."""
    if h <= 0:
        raise ValueError("h must be positive")
    x_u = 1.0 / (2.0 * h)
    x_v = 2.0 * np.arctan(2.0 * h * np.cosh(1.0 / (2.0 * h)))
    det = -4.0 * h ** 3 / (2.0 * h * h + 2.0 * h * h * np.cosh(1.0 / h) + 1.0)
    return x_u, x_v, det


def geodesic_semicircle(h, x):
    x = np.asarray(x, dtype=float)
    return np.stack([h * (np.cos(x) + 1.0), h * np.sin(x)], axis=-1)


# ---------------------------------------------------------------------------
# lambda-figure-eights

FIGURE_EIGHT_LAMBDA_MAX = 64.0 / np.pi ** 2 - 2.0


def _quarter_end(lam, p, substeps_total=4000):
    """Endpoint of the quarter arc tip -> inflection, tip at the origin heading left."""
    params = wave_like(lam, p)
    q = ellipk(p) / params.rate
    kfn = lambda s: curvature_profile(params, s)
    _, states, ok = integrate_frame_raw(kfn, FramePose((0.0, 0.0), np.pi), geo.DISK, 0.0, q, 2, substeps_total)
    if not ok:
        return None
    return states[-1]


def find_figure_eight_modulus(lam, xtol=1e-14, scan=40):
    """Modulus p for which the quarter arc closes up symmetrically."""
    if not 0.0 < lam < FIGURE_EIGHT_LAMBDA_MAX:
        raise ValueError(f"lambda-figure-eights need lambda in (0, {FIGURE_EIGHT_LAMBDA_MAX:.6f})")
    lo_p, hi_p = 1.0 / np.sqrt(2.0) + 1e-6, 1.0 - 1e-12
    # scan in q = -log(1-p) so the approach to p = 1 is resolved
    qs = np.linspace(-np.log(1.0 - lo_p), -np.log(1.0 - hi_p), scan)
    ps = 1.0 - np.exp(-qs)
    prev = None
    for p in ps:
        end = _quarter_end(lam, p)
        val = None if end is None else end[0]
        if prev is not None and val is not None and np.sign(val) != np.sign(prev[1]):
            return brentq(lambda pp: _quarter_end(lam, pp)[0], prev[0], p, xtol=xtol, rtol=1e-15)
        if val is not None:
            prev = (p, val)
    raise ConstructionError(f"no sign change of the closing condition found for lambda={lam}")


def construct_lambda_figure_eight(lam, n_nodes=512, tol=1e-8, substeps=16):
    """Closed, (S1)/(S2)-symmetric lambda-figure-eight on the parameter circle [-2, 2).

    Nodes are equally spaced in hyperbolic arc length; x = 0 and x = +-2 sit
    at the origin and x = +-1 at the lobe tips on the vertical diameter.
    """
    if n_nodes % 4:
        raise ValueError("n_nodes must be a multiple of 4")
    p = find_figure_eight_modulus(lam)
    params = wave_like(lam, p)
    quarter = ellipk(p) / params.rate
    m = n_nodes // 4
    kfn = lambda s: curvature_profile(params, s)
    _, states, ok = integrate_frame_raw(kfn, FramePose((0.0, 0.0), np.pi), geo.DISK, 0.0, quarter, m + 1, substeps)
    if not ok:
        raise ConstructionError("quarter arc left the disk")
    pts, angles = states[:, :2], states[:, 2]
    end = pts[-1]
    if abs(end[0]) > tol:
        raise ConstructionError(f"quarter arc misses the symmetry axis by {abs(end[0]):.3e}")
    shift = geo.translation_along_y(end[1])
    q = shift(pts)
    q[-1] = 0.0
    q[:, 0] = np.where(np.abs(q[:, 0]) < 1e-300, 0.0, q[:, 0])
    q[0, 0] = 0.0
    nodes = np.empty((n_nodes, 2))
    M = m
    # x in [1, 2]: tip -> origin
    for j in range(M + 1):
        nodes[(3 * M + j) % n_nodes] = q[j]
    reflect = np.array([-1.0, 1.0])
    for k in range(2 * M, 3 * M):
        nodes[k] = reflect * nodes[(6 * M - k) % n_nodes]
    for k in range(1, 2 * M):
        nodes[k] = -nodes[4 * M - k]
    nodes[0] = 0.0
    nodes[2 * M] = 0.0
    curve = geo.SampledCurve(
        nodes, model=geo.DISK, topology=geo.CLOSED, domain=(-2.0, 2.0),
        meta={"lambda": lam, "modulus": p, "kappa0_sq": params.kappa0_sq,
              "hyperbolic_length": 4.0 * quarter, "closure_gap": float(abs(end[0])),
              "tip_angle_error": float(abs(((angles[0] - np.pi) + np.pi) % (2 * np.pi) - np.pi))},
    )
    return curve


def figure_eight_energy(lam):
    """Closed-form energy of the lambda-figure-eight (one period of the wave-like profile)."""
    return wave_period_energy(wave_like(lam, find_figure_eight_modulus(lam)))


def elastica_residual(curve, lam):
    """2 kappa_ss + kappa^3 - (lambda + 2) kappa at every node, by finite differences."""
    g = geo.curve_geometry(curve)
    ks = curve.derivative(g.kappa, 1) / g.hyp_speed
    kss = curve.derivative(ks, 1) / g.hyp_speed
    return 2.0 * kss + g.kappa ** 3 - (lam + 2.0) * g.kappa
