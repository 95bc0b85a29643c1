"""Post-processing of flow runs near their singular limit.

Parameters of singular points are reported in the constant-Euclidean-speed
parametrization of the final frame on the curve's own domain.  Window
energies are integrated on the run's grid, which keeps the bubble resolved
even though it is tiny in Euclidean terms.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import elastica as el
from . import geometry as geo

# thresholds used by the acceptance checks
SINGULAR_EPS = 1e-3
WINDOW_DELTA = 0.1
BUDGET_TOL = 0.5
GEODESIC_KAPPA = 0.05
SECH_FIT_TOL = 0.05
GRAD_INCONCLUSIVE = 1e-4
QUANTUM = 8.0

GEODESIC = "geodesic"
ASYMPTOTICALLY_GEODESIC = "asymptotically_geodesic"
UNDETERMINED = "undetermined"


class WindowError(ValueError):
    """A blow-up window contains more than one singular cluster."""


class ShoulderError(ValueError):
    """A dip search interval does not start and end above the shoulder height."""


class BoundaryTermError(ValueError):
    """The boundary term of the Willmore identity needs an open profile curve."""


@dataclass(frozen=True)
class QuantizationReport:
    singular_params: list
    m: int
    per_singularity_energy: list
    residual_energy: float
    initial_energy: float
    budget_ok: bool
    limit_segment_classification: list
    inconclusive: bool = False
    tolerance: float = BUDGET_TOL
    count_bound_ok: bool = True
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BlowUpResult:
    rescaled_curve: geo.SampledCurve
    interior_singular_params: list
    n_j: int
    fit_distances: list
    containment_excess: float
    window_nodes: np.ndarray


@dataclass(frozen=True)
class DipReport:
    count: int
    energies: list
    min_heights: list
    intervals: list


# ---------------------------------------------------------------------------
# parameters and windows


def _curve_of(obj):
    """Final curve of a run, a frame, or a curve itself."""
    if isinstance(obj, geo.SampledCurve):
        return obj
    if hasattr(obj, "curve"):
        return obj.curve
    return obj.frames[-1].curve


def _late_curves(obj, late):
    if isinstance(obj, geo.SampledCurve) or hasattr(obj, "curve"):
        return [_curve_of(obj)]
    return [f.curve for f in obj.frames[-late:]]


def euclidean_parameter(curve):
    """Constant-Euclidean-speed parameter value of every node on the curve's domain.

    Node 0 keeps the parameter domain[0], matching
    :func:`geometry.reparam_constant_euclidean_speed`.
    """
    trace = geo._SplineTrace(curve, "euclidean")
    a, b = curve.domain
    return a + (b - a) * trace.table[:-1 if curve.closed else None] / trace.table[-1]


def _param_distance(x, y, curve):
    d = np.abs(np.asarray(x) - y)
    if curve.closed:
        period = curve.domain[1] - curve.domain[0]
        d = np.minimum(d, period - d)
    return d


def _cluster(params, weights, curve, delta):
    """Group sorted parameters whose gaps are below 2 delta; return the heaviest member of each."""
    if len(params) == 0:
        return []
    order = np.argsort(params)
    params, weights = np.asarray(params)[order], np.asarray(weights)[order]
    groups = [[0]]
    for i in range(1, len(params)):
        if params[i] - params[i - 1] < 2 * delta:
            groups[-1].append(i)
        else:
            groups.append([i])
    if curve.closed and len(groups) > 1:
        period = curve.domain[1] - curve.domain[0]
        if params[groups[0][0]] + period - params[groups[-1][-1]] < 2 * delta:
            groups[0] = groups.pop() + groups[0]
    reps = [float(params[g][np.argmax(weights[g])]) for g in groups]
    return sorted(reps)


def detect_singular_params(run, eps=SINGULAR_EPS, delta=WINDOW_DELTA, late=3):
    """Parameters where late frames come within ``eps`` of the boundary circle."""
    reps = []
    for curve in _late_curves(run, late):
        r = np.hypot(curve.nodes[:, 0], curve.nodes[:, 1])
        hot = r > 1.0 - eps
        if not np.any(hot):
            continue
        x = euclidean_parameter(curve)
        reps.append((curve, _cluster(x[hot], r[hot], curve, delta)))
    if not reps:
        return []
    # the final frame decides the representatives; earlier frames only add clusters
    curve, final = reps[-1]
    out = list(final)
    for _, other in reps[:-1]:
        for p in other:
            if all(_param_distance(p, q, curve) >= 2 * delta for q in out):
                out.append(p)
    return sorted(out)


def _window_mask(x, centers, delta, curve):
    mask = np.zeros(len(x), bool)
    for c in centers:
        mask |= _param_distance(x, c, curve) < delta
    return mask


# ---------------------------------------------------------------------------
# quantization


def _sech_fit_error(kappa, s):
    """Sup distance of |kappa| to 2 sech(s - s0) with s0 at the peak of |kappa|."""
    s0 = s[np.argmax(np.abs(kappa))]
    return float(np.max(np.abs(np.abs(kappa) - 2.0 / np.cosh(s - s0))))


def _segments(x, mask, curve):
    """Maximal runs of True in ``mask`` (wrapping for closed curves), as index arrays."""
    idx = np.flatnonzero(mask)
    if len(idx) == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    runs = np.split(idx, breaks + 1)
    if curve.closed and len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == len(x) - 1:
        runs[0] = np.concatenate([runs.pop(), runs[0]])
    return runs


def classify_segment(curve, geom, indices):
    kappa = geom.kappa[indices]
    if np.max(np.abs(kappa)) < GEODESIC_KAPPA:
        return GEODESIC
    s = np.cumsum(geom.ds[indices])
    if _sech_fit_error(kappa, s) < SECH_FIT_TOL:
        return ASYMPTOTICALLY_GEODESIC
    return UNDETERMINED


def quantization_report(run, initial_energy=None, eps=SINGULAR_EPS, delta=WINDOW_DELTA,
                        tol=BUDGET_TOL, grad_threshold=GRAD_INCONCLUSIVE):
    """Energy accounting of the singular limit approximated by the final frame."""
    curve = _curve_of(run)
    if initial_energy is None:
        initial_energy = run.frames[0].energy
    g = geo.curve_geometry(curve)
    density = g.kappa ** 2 * g.ds
    params = detect_singular_params(run, eps, delta)
    x = euclidean_parameter(curve)
    per = [float(np.sum(density[_param_distance(x, p, curve) < delta])) for p in params]
    outside = ~_window_mask(x, params, delta, curve)
    residual = float(np.sum(density[outside]))
    m = len(params)
    classes = [classify_segment(curve, g, seg) for seg in _segments(x, outside, curve)]
    from .flow import grad_norm_sq

    gns = run.frames[-1].grad_norm_sq if hasattr(run, "frames") else grad_norm_sq(curve, g)
    max_kappa = [float(np.max(np.abs(g.kappa[seg]))) for seg in _segments(x, outside, curve)]
    return QuantizationReport(
        singular_params=params, m=m, per_singularity_energy=per,
        residual_energy=residual, initial_energy=float(initial_energy),
        budget_ok=bool(residual + QUANTUM * m <= initial_energy + tol),
        limit_segment_classification=classes,
        inconclusive=bool(gns > grad_threshold), tolerance=tol,
        count_bound_ok=bool(m <= np.floor(initial_energy / QUANTUM)),
        details={"grad_norm_sq": float(gns), "segment_max_abs_kappa": max_kappa,
                 "final_energy": float(np.sum(density))},
    )


# ---------------------------------------------------------------------------
# blow-up


def _rotate_to_south(nodes, point):
    angle = -0.5 * np.pi - np.arctan2(point[1], point[0])
    c, s = np.cos(angle), np.sin(angle)
    return nodes @ np.array([[c, -s], [s, c]]).T


def _hausdorff(a, b):
    from scipy.spatial import cKDTree

    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    return float(max(da.max(), db.max()))


def _densify(points, factor=8):
    """Piecewise-linear refinement of a polyline, for Hausdorff distances."""
    t = np.linspace(0.0, 1.0, factor, endpoint=False)
    seg = points[:-1, None, :] + t[None, :, None] * (points[1:] - points[:-1])[:, None, :]
    return np.vstack([seg.reshape(-1, 2), points[-1:]])


def reference_bubble_disk(extent=20.0, n=40001):
    """Disk image of the catenary (x, cosh x) for |x| <= extent: apex at the origin, ends at (0, 1).

    Uniform steps in x give disk spacing below extent / n; the ends stop
    about 4 exp(-extent) short of (0, 1).
    """
    return geo.half_to_disk(el.catenary_halfplane(np.linspace(-extent, extent, n)))


def blow_up(run, x_j, delta=WINDOW_DELTA, eps=SINGULAR_EPS, hit_tol=None):
    """Hyperbolic rescaling of the final frame around the singular parameter ``x_j``.

    The singular point is rotated to (0, -1), the window is mapped to the
    half-plane, translated horizontally and scaled about the lowest point so
    that it sits at (0, 1), and mapped back.  The rescaled curve therefore
    passes through the origin and lies in the horodisk of radius 1/2 about
    (0, 1/2).
    """
    curve = _curve_of(run)
    x = euclidean_parameter(curve)
    inside = _param_distance(x, x_j, curve) < delta
    idx = _segments(x, inside, curve)
    if len(idx) != 1:
        raise WindowError("window around x_j is empty or disconnected")
    idx = idx[0]
    r = np.hypot(curve.nodes[idx, 0], curve.nodes[idx, 1])
    hot = _cluster(x[idx][r > 1.0 - eps], r[r > 1.0 - eps], curve, delta / 4) if np.any(r > 1 - eps) else []
    if len(hot) > 1:
        raise WindowError(f"window around {x_j} contains {len(hot)} singular clusters")
    peak = curve.nodes[idx][np.argmax(r)]
    nodes = _rotate_to_south(curve.nodes[idx], peak)
    u = geo.disk_to_half(nodes)
    k = int(np.argmin(u[:, 1]))
    scaled = np.column_stack([u[:, 0] - u[k, 0], u[:, 1]]) / u[k, 1]
    disk = geo.half_to_disk(scaled)
    n = len(idx)
    rescaled = geo.SampledCurve(disk, model=geo.DISK, topology=geo.OPEN, domain=(-1.0, 1.0))
    # containment in the closed disk |p - (0, 1/2)| <= 1/2
    excess = float(np.max(np.hypot(disk[:, 0], disk[:, 1] - 0.5) - 0.5))
    # interior returns to (0, 1) split the window into bubbles
    dist_top = np.hypot(disk[:, 0], disk[:, 1] - 1.0)
    hit_tol = hit_tol if hit_tol is not None else 0.5 * min(dist_top[0], dist_top[-1])
    params = np.linspace(-1.0, 1.0, n)
    inner = np.arange(1, n - 1)
    dips = inner[(dist_top[inner] < dist_top[inner - 1]) & (dist_top[inner] <= dist_top[inner + 1])
                 & (dist_top[inner] < hit_tol)]
    ys = [float(params[i]) for i in dips]
    cuts = [0] + [int(np.argmin(np.abs(params - y))) for y in ys] + [n - 1]
    ref = _densify(reference_bubble_disk())
    fits = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        seg = _densify(disk[a:b + 1])
        fits.append(_hausdorff(seg, ref))
    return BlowUpResult(rescaled, [float(y) for y in ys], len(ys) + 1, fits, excess, idx)


# ---------------------------------------------------------------------------
# half-plane diagnostics


def dip_count(u_curve, alpha, delta_height):
    """Count dips below ``delta_height`` separated by shoulders at height >= ``alpha``."""
    if not alpha > delta_height > 0:
        raise ValueError("need alpha > delta_height > 0")
    if u_curve.model != geo.HALF_PLANE:
        raise ValueError("dip_count expects a half-plane curve")
    h = u_curve.nodes[:, 1]
    if h[0] < alpha or h[-1] < alpha:
        raise ShoulderError("curve endpoints must lie at height >= alpha")
    g = geo.curve_geometry(u_curve)
    density = g.kappa ** 2 * g.ds
    shoulders = np.flatnonzero(h >= alpha)
    energies, mins, intervals = [], [], []
    for a, b in zip(shoulders[:-1], shoulders[1:]):
        if b - a < 2:
            continue
        low = h[a + 1:b]
        if np.min(low) < delta_height:
            # the shoulder nodes are shared halves of the quadrature
            e = float(np.sum(density[a + 1:b]) + 0.5 * (density[a] + density[b]))
            energies.append(e)
            mins.append(float(np.min(low)))
            intervals.append((int(a), int(b)))
    return DipReport(len(energies), energies, mins, intervals)


def low_energy_dip_floor(reports, energy_cap=7.5):
    """Lowest dip height among dips cheaper than ``energy_cap`` across a family of reports."""
    heights = [h for r in reports for e, h in zip(r.energies, r.min_heights) if e < energy_cap]
    return min(heights) if heights else np.inf


def est_dxu1_check(u_curve):
    """Both sides of int (u1')^2 / (|u'| u2) dx <= E(u) + 4."""
    u = u_curve.nodes
    d1 = u_curve.derivative(u, 1)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    w = u_curve.quadrature_weights()
    lhs = float(np.sum(d1[:, 0] ** 2 / (speed * u[:, 1]) * w))
    return lhs, geo.elastic_energy(u_curve) + 4.0


def _profile_terms(u_curve):
    u = u_curve.nodes
    d1 = u_curve.derivative(u, 1)
    d2 = u_curve.derivative(u, 2)
    speed = np.hypot(d1[:, 0], d1[:, 1])
    k_euc = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed ** 3
    return u, d1, speed, k_euc


def willmore_energy(u_curve):
    """Willmore energy of the revolution surface of a half-plane profile, from E and a boundary term."""
    if u_curve.model != geo.HALF_PLANE:
        raise ValueError("willmore_energy expects a half-plane profile curve")
    if u_curve.closed:
        raise BoundaryTermError("closed profile: use willmore_energy_closed, the boundary term vanishes")
    _, d1, speed, _ = _profile_terms(u_curve)
    vert = d1[:, 1] / speed
    return 0.5 * np.pi * (geo.elastic_energy(u_curve) - 4.0 * (vert[-1] - vert[0]))


def willmore_energy_closed(u_curve):
    return 0.5 * np.pi * geo.elastic_energy(u_curve)


def willmore_direct(u_curve):
    """Quadrature of H^2 over the surface obtained by rotating the profile about the x1-axis."""
    u, d1, speed, k_euc = _profile_terms(u_curve)
    H = 0.5 * (k_euc - d1[:, 0] / (speed * u[:, 1]))
    return float(2.0 * np.pi * np.sum(H ** 2 * u[:, 1] * speed * u_curve.quadrature_weights()))


def gauss_curvature_integral(u_curve):
    """Total Gaussian curvature of the revolution surface, 2 pi int K u2 ds."""
    _, d1, speed, k_euc = _profile_terms(u_curve)
    return float(-2.0 * np.pi * np.sum(k_euc * d1[:, 0] * u_curve.quadrature_weights()))


# ---------------------------------------------------------------------------
# trend checks


def euclidean_length_bounded(run, factor=1.2):
    """Euclidean length never exceeds ``factor`` times its running median in the second half."""
    t = np.array([f.t for f in run.frames])
    L = np.array([f.euc_length for f in run.frames])
    t_half = 0.5 * t[-1]
    worst = 0.0
    for i in np.flatnonzero(t >= t_half):
        med = np.median(L[: i + 1])
        worst = max(worst, L[i] / med)
    return worst <= factor, worst


def window_length_trend(run, late=4, windows=16, eps_floor=1e-2):
    """Euclidean length and boundary gap of fixed node windows over late frames.

    Returns (ok, table).  Windows that keep Euclidean length >= 0.1 must stay a
    floor away from the boundary; the window holding the outermost node must
    shrink in Euclidean length over the late frames, never growing by more
    than 10% between consecutive frames.
    """
    curves = [f.curve for f in run.frames[-late:]]
    n = curves[0].n
    edges = np.linspace(0, n, windows + 1).astype(int)
    lengths = np.zeros((len(curves), windows))
    gaps = np.zeros((len(curves), windows))
    for i, c in enumerate(curves):
        seg = c.edge_lengths()
        r = np.hypot(c.nodes[:, 0], c.nodes[:, 1])
        for w in range(windows):
            lengths[i, w] = np.sum(seg[edges[w]:edges[w + 1]])
            gaps[i, w] = np.min(1.0 - r[edges[w]:edges[w + 1]])
    long_ok = bool(np.all(gaps[:, np.all(lengths >= 0.1, axis=0)] > eps_floor))
    hot = int(np.argmin(gaps[-1]))
    # node windows drift slightly under redistribution, hence the relative slack
    hot_len = lengths[:, hot]
    shrink_ok = bool(np.all(hot_len[1:] <= 1.1 * hot_len[:-1]) and hot_len[-1] < hot_len[0])
    return long_ok and shrink_ok, {"lengths": lengths, "gaps": gaps, "hot_window": hot}


def implosion_indicator(run, eps=SINGULAR_EPS, collapse=0.1):
    """Heuristic flag: the whole curve hugs the boundary while its Euclidean length collapses."""
    first, last = run.frames[0], run.frames[-1]
    r = np.hypot(last.curve.nodes[:, 0], last.curve.nodes[:, 1])
    near = float(np.min(r))
    ratio = last.euc_length / first.euc_length
    return {"min_abs": near, "length_ratio": ratio,
            "flagged": bool(near > 1.0 - 10 * eps and ratio < collapse)}


def transversality_displacement(u_curve):
    """Horizontal offset between vertical-tangent points and the end of a half-plane curve.

    The curve should end near the real axis; the offset is measured from the
    last node.
    """
    d1 = u_curve.derivative(u_curve.nodes, 1)
    sign = np.sign(d1[:, 0])
    flips = np.flatnonzero(sign[:-1] * sign[1:] < 0)
    if len(flips) == 0:
        return 0.0
    end = u_curve.nodes[-1, 0]
    offs = []
    for i in flips:
        t = d1[i, 0] / (d1[i, 0] - d1[i + 1, 0])
        x = u_curve.nodes[i, 0] + t * (u_curve.nodes[i + 1, 0] - u_curve.nodes[i, 0])
        offs.append(abs(x - end))
    return float(min(offs))


def transversality_displacement_closed_form():
    """Offset for the free asymptotically geodesic profile (x, cosh x) / (x^2 + cosh^2 x)."""
    x_star = brentq(lambda x: np.cosh(x) ** 2 - x * x - 2 * x * np.cosh(x) * np.sinh(x), 0.1, 2.0)
    return float(el.asymptotically_geodesic_halfplane(x_star)[0])


def blowup_transversality(result):
    """Transversality offsets of the two halves of a blow-up bubble.

    The rescaled window is taken to the half-plane and inverted in the unit
    circle, which sends the singular point to the origin and the apex to
    (0, 1); each half is then measured with :func:`transversality_displacement`.
    """
    u = geo.disk_to_half(result.rescaled_curve.nodes)
    v = u / np.sum(u * u, axis=1)[:, None]
    k = int(np.argmax(v[:, 1]))
    out = []
    for half in (v[: k + 1][::-1], v[k:]):
        if len(half) < 8:
            out.append(0.0)
            continue
        c = geo.SampledCurve(half, model=geo.HALF_PLANE, topology=geo.OPEN, domain=(0.0, 1.0))
        out.append(transversality_displacement(c))
    return out


# ---------------------------------------------------------------------------
# random test curves and the inequality suite


def random_closed_curve(rng, n=256):
    """Smooth star-shaped closed disk curve: radius in [0.3, 0.5], center within 0.1, modes 2..4."""
    x = np.arange(n) / n * 4.0 - 2.0
    th = 0.5 * np.pi * x
    r = np.full(n, rng.uniform(0.3, 0.5))
    for k in range(2, 5):
        r += rng.uniform(-0.02, 0.02) * np.cos(k * th) + rng.uniform(-0.02, 0.02) * np.sin(k * th)
    c = rng.uniform(-0.1, 0.1, size=2)
    return geo.SampledCurve(np.column_stack([c[0] + r * np.cos(th), c[1] + r * np.sin(th)]),
                            domain=(-2.0, 2.0))


def random_profile_curve(rng, n=512):
    """Smooth open half-plane graph over [-1, 1] with height between 0.3 and 1.7."""
    x = np.linspace(-1.0, 1.0, n)
    u1 = x.copy()
    u2 = np.full(n, rng.uniform(0.8, 1.2))
    for k in range(1, 4):
        u1 += rng.uniform(-0.05, 0.05) / k * np.sin(k * np.pi * x)
        u2 += rng.uniform(-0.15, 0.15) / k * np.cos(k * np.pi * x + rng.uniform(0, 2 * np.pi))
    return geo.SampledCurve(np.column_stack([u1, u2]), model=geo.HALF_PLANE,
                            topology=geo.OPEN, domain=(-1.0, 1.0))


def inequality_suite(curve, rtol=1e-9):
    """est-dxu1, hyperbolic versus Euclidean length, and the Fenchel bound for closed curves."""
    out = {}
    u = geo.to_model(curve, geo.HALF_PLANE)
    lhs, rhs = est_dxu1_check(u)
    out["est_dxu1"] = {"lhs": lhs, "rhs": rhs, "ok": bool(lhs <= rhs * (1 + rtol))}
    d = geo.to_model(curve, geo.DISK)
    L_hyp, L_euc = geo.hyperbolic_length(d), geo.euclidean_length(d)
    out["length_ratio"] = {"hyperbolic": L_hyp, "euclidean": L_euc,
                           "ok": bool(L_hyp >= 2.0 * L_euc * (1 - rtol))}
    if curve.closed:
        E = geo.elastic_energy(d)
        bound = 4.0 * np.pi ** 2 / E if E > 0 else np.inf
        out["fenchel"] = {"hyperbolic_length": L_hyp, "bound": bound,
                          "ok": bool(L_hyp >= bound * (1 - rtol))}
    return out
