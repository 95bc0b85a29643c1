"""Elastic flow d_t gamma = -grad E(gamma) for sampled curves in the disk.

Two time steppers share one gradient:

* ``explicit``: forward Euler, dt limited by the fourth-order stiffness
  (roughly dt < h^4 / 32 in hyperbolic node spacing h).
* ``linearly_implicit``: the scalar normal speed G is linearized about the
  current curve, (I + dt dG/dw) w = -dt G, with dG/dw assembled by colored
  central differences.  Nodes move by w along the unit normal.  The energy
  guard decides acceptance, so dt is not tied to the stiffness.

Every ``reparam_every`` steps the nodes are redistributed with density
proportional to hyperbolic speed times sqrt(1 + (beta kappa)^2), so nodes
gather where the curve bends.  The redistribution counts as part of the step
and is dropped if it would break the energy guard.
"""

from collections import Counter
from dataclasses import dataclass, field, replace
import logging

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from . import geometry as geo

log = logging.getLogger(__name__)

REACHED_T_END = "reached_t_end"
SINGULAR_PROXIMITY = "singular_proximity"
STEP_FAILURE = "step_failure"

FIXED = "fixed"
ADAPTIVE = "adaptive_energy_guard"

REFLECT_X = np.array([-1.0, 1.0])


class StepFailure(RuntimeError):
    pass


class SingularProximity(RuntimeError):
    """A node came within the boundary floor of the unit circle."""


class MonitorError(ValueError):
    pass


@dataclass(frozen=True)
class ClampedData:
    """Endpoint positions and unit hyperbolic tangents at x = a and x = b."""

    start: tuple
    end: tuple
    tangent_start: tuple
    tangent_end: tuple

    @classmethod
    def from_curve(cls, curve):
        g = geo.curve_geometry(curve)
        return cls(tuple(curve.nodes[0]), tuple(curve.nodes[-1]),
                   tuple(g.tangent[0]), tuple(g.tangent[-1]))


@dataclass(frozen=True)
class FlowConfig:
    n_nodes: int = 512
    dt_initial: float = 1e-6
    dt_policy: str = ADAPTIVE
    t_end: float = 1.0
    bc: str = geo.CLOSED
    clamped_data: ClampedData = None
    reparam_every: int = 25
    singular_eps: float = 1e-3
    frame_every: int = 100
    scheme: str = "linearly_implicit"
    dt_max: float = np.inf
    dt_growth: float = 1.25
    max_steps: int = 10 ** 7
    symmetries: tuple = ()
    reparam_speed: str = "curvature"
    reparam_weight: float = 1.0
    equivariant: bool = False

    def __post_init__(self):
        if self.n_nodes < 32:
            raise ValueError("n_nodes must be at least 32")
        if not self.dt_initial > 0:
            raise ValueError("dt_initial must be positive")
        if not 0.0 < self.singular_eps < 0.1:
            raise ValueError("singular_eps must lie in (0, 0.1)")
        if self.dt_policy not in (FIXED, ADAPTIVE):
            raise ValueError(f"unknown dt_policy {self.dt_policy!r}")
        if self.bc not in (geo.CLOSED, "clamped"):
            raise ValueError(f"unknown bc {self.bc!r}")
        if self.scheme not in ("explicit", "linearly_implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class FlowFrame:
    t: float
    curve: geo.SampledCurve
    energy: float
    hyp_length: float
    euc_length: float
    grad_norm_sq: float
    max_abs: float
    symmetry_residuals: dict = field(default_factory=dict)
    step: int = 0
    dt: float = 0.0


@dataclass
class FlowRun:
    config: FlowConfig
    frames: list
    termination: str
    energies: np.ndarray = None     # energy after every accepted step (index 0 = initial)
    times: np.ndarray = None
    wall_time: float = 0.0
    stats: dict = field(default_factory=dict)
    history: dict = field(default_factory=dict)  # per accepted step, index 0 = initial

    @property
    def initial_energy(self):
        return self.frames[0].energy

    @property
    def final(self):
        return self.frames[-1]


# ---------------------------------------------------------------------------
# gradient


def gradient_scalar(curve, geom=None):
    """Normal component 2 kappa_ss + kappa^3 - 2 kappa of the energy gradient."""
    g = geom or geo.curve_geometry(curve)
    k1 = curve.derivative(g.kappa, 1)
    k2 = curve.derivative(g.kappa, 2)
    dsigma = curve.derivative(g.hyp_speed, 1)
    kss = (k2 - k1 * dsigma / g.hyp_speed) / g.hyp_speed ** 2
    return 2.0 * kss + g.kappa ** 3 - 2.0 * g.kappa


def gradient(curve, geom=None):
    """L^2(ds) gradient of the elastic energy as chart vectors at every node.

    For open curves the endpoint values are one-sided approximations; the
    clamped flow never uses them.
    """
    g = geom or geo.curve_geometry(curve)
    return gradient_scalar(curve, g)[:, None] * g.normal


def _log_metric_hessian_times(nodes, model, vec):
    """Hessian of phi = log f applied to one vector per node."""
    if model == geo.DISK:
        f = geo.metric_factor(nodes, model)
        pv = np.sum(nodes * vec, axis=1)
        return f[:, None] * vec + (f ** 2 * pv)[:, None] * nodes
    out = np.zeros_like(vec)
    out[:, 1] = vec[:, 1] / nodes[:, 1] ** 2
    return out


def energy_node_gradient(curve, geom=None):
    """Exact derivative of the discrete energy with respect to every node.

    The quadrature sum of kappa^2 * sigma is a function of the nodes and of
    their first and second finite differences, so its gradient is the local
    part plus the transposed difference operators applied to the partials.
    """
    g = geom or geo.curve_geometry(curve)
    p, a, b = curve.nodes, g.d1, g.d2
    w = curve.quadrature_weights()
    f = g.factor
    m = g.speed
    dphi = geo.log_metric_gradient(p, curve.model)
    ja = a @ geo.J_ROT.T
    c = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    e = np.sum(dphi * ja, axis=1)
    q = c / m ** 3 - e / m                      # f * kappa
    scale = 2.0 * q * m / f
    dq_db = np.column_stack([-a[:, 1], a[:, 0]]) / (m ** 3)[:, None]
    dq_da = (np.column_stack([b[:, 1], -b[:, 0]]) / (m ** 3)[:, None]
             - (3.0 * c / m ** 5)[:, None] * a
             - np.column_stack([dphi[:, 1], -dphi[:, 0]]) / m[:, None]
             + (e / m ** 3)[:, None] * a)
    dq_dp = -_log_metric_hessian_times(p, curve.model, ja) / m[:, None]
    dF_db = scale[:, None] * dq_db
    dF_da = (q ** 2 / (f * m))[:, None] * a + scale[:, None] * dq_da
    dF_dp = -(q ** 2 * m / f)[:, None] * dphi + scale[:, None] * dq_dp
    d1 = geo.diff_matrix(curve.n, curve.step, 1, curve.closed)
    d2 = geo.diff_matrix(curve.n, curve.step, 2, curve.closed)
    return w[:, None] * dF_dp + d1.T @ (w[:, None] * dF_da) + d2.T @ (w[:, None] * dF_db)


def discrete_gradient_scalar(curve, geom=None):
    """Normal speed of the discrete energy's gradient in the pairing of ``pairing``."""
    g = geom or geo.curve_geometry(curve)
    grad = energy_node_gradient(curve, g)
    return np.sum(grad * g.normal, axis=1) / g.ds


def clamped_gradient_scalar(curve, data, geom=None):
    """Normal gradient speed on the free nodes of a clamped curve.

    The end neighbours are slaved to the tangent constraint of
    :func:`impose_clamped`, so the free nodes in the end stencils pick up the
    chain-rule share of the neighbour's gradient.  The two end nodes and their
    neighbours get zero.
    """
    g = geom or geo.curve_geometry(curve)
    grad = energy_node_gradient(curve, g)
    n = curve.n
    for row, end, nb, t in ((_end_rows(n)[0], 0, 1, data.tangent_start),
                            (_end_rows(n)[1], n - 1, n - 2, data.tangent_end)):
        t = np.asarray(t, float)
        perp = np.array([-t[1], t[0]]) / np.hypot(*t)
        push = (grad[nb] @ perp) / row[nb]
        for j in np.flatnonzero(row):
            if j not in (end, nb):
                grad[j] -= row[j] * push * perp
    G = np.sum(grad * g.normal, axis=1) / g.ds
    G[[0, 1, n - 2, n - 1]] = 0.0
    return G


def pairing(curve, a, b, geom=None):
    """Discrete sum of <a, b>_g ds over the nodes."""
    g = geom or geo.curve_geometry(curve)
    return float(np.sum(g.factor ** 2 * np.sum(a * b, axis=1) * g.ds))


def grad_norm_sq(curve, geom=None, clamped_data=None):
    """Squared L2 norm of the discrete normal gradient over the free nodes."""
    g = geom or geo.curve_geometry(curve)
    if clamped_data is not None:
        G = clamped_gradient_scalar(curve, clamped_data, g)
    else:
        G = discrete_gradient_scalar(curve, g)
    return float(np.sum(G ** 2 * g.ds))


# ---------------------------------------------------------------------------
# boundary conditions


def _end_rows(n):
    """One-sided first-derivative stencils at both ends (unit grid spacing)."""
    D = geo.diff_matrix(n, 1.0, 1, False)
    return D.getrow(0).toarray().ravel(), D.getrow(n - 1).toarray().ravel()


def impose_clamped(nodes, data):
    """Pin the endpoints and turn the end tangents onto the prescribed directions.

    Each end's neighbour is moved across the prescribed direction until the
    one-sided derivative stencil at the end is parallel to it.  Putting the
    neighbour on the tangent ray instead would force the chord to be the
    tangent and leave an O(1) curvature error in the end nodes.
    """
    nodes = np.array(nodes, dtype=float)
    rows = _end_rows(len(nodes))
    for end, nb, row, pos, tan in ((0, 1, rows[0], data.start, data.tangent_start),
                                   (-1, -2, rows[1], data.end, data.tangent_end)):
        t = np.asarray(tan, float)
        t = t / np.hypot(*t)
        perp = np.array([-t[1], t[0]])
        nodes[end] = np.asarray(pos, float)
        d1 = row @ nodes
        nodes[nb] -= (d1 @ perp) / row[nb] * perp
    return nodes


def clamped_residuals(curve, data):
    """(position error, tangent direction error) at both ends, tangents from the end stencils."""
    pos = max(np.hypot(*(curve.nodes[0] - data.start)), np.hypot(*(curve.nodes[-1] - data.end)))
    rows = _end_rows(curve.n)
    tan = 0.0
    for row, t in ((rows[0], data.tangent_start), (rows[1], data.tangent_end)):
        d1 = row @ curve.nodes
        t = np.asarray(t, float)
        tan = max(tan, float(np.hypot(*(d1 / np.hypot(*d1) - t / np.hypot(*t)))))
    return float(pos), tan


# ---------------------------------------------------------------------------
# stepping


_COLORS = 16  # column stride; each gradient value depends on nodes within +-7


def _color_groups(n, closed):
    """Index groups whose members are far enough apart to be perturbed together."""
    groups = [list(range(c, n, _COLORS)) for c in range(_COLORS)]
    if closed and n % _COLORS:
        # the wrap-around gap of the last block is short; give it its own colors
        cut = n - n % _COLORS - _COLORS
        groups = [[i for i in grp if i < cut] for grp in groups]
        groups += [[i] for i in range(cut, n)]
    return [g for g in groups if g]


def normal_jacobian(curve, geom=None, eps=1e-6, speed=None):
    """Sparse d G_i / d w_j for normal displacements w_j (hyperbolic units) of node j.

    Central differences; ``eps`` balances truncation against the roundoff in
    G, which grows like h^-4.
    """
    g = geom or geo.curve_geometry(curve)
    speed = speed or discrete_gradient_scalar
    n = curve.n
    rows, cols, vals = [], [], []
    offsets = np.arange(-7, 8)
    for grp in _color_groups(n, curve.closed):
        grp = np.asarray(grp)
        plus = curve.nodes.copy()
        plus[grp] += eps * g.normal[grp]
        minus = curve.nodes.copy()
        minus[grp] -= eps * g.normal[grp]
        dG = (speed(curve.with_nodes(plus)) - speed(curve.with_nodes(minus))) / (2.0 * eps)
        for j in grp:
            r = j + offsets
            r = r % n if curve.closed else r[(r >= 0) & (r < n)]
            rows.append(r)
            cols.append(np.full(len(r), j))
            vals.append(dG[r])
    rows, cols, vals = np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)
    return sp.csc_matrix((vals, (rows, cols)), shape=(n, n))


def _check_domain(nodes):
    r2 = np.sum(nodes * nodes, axis=1)
    if not np.all(np.isfinite(r2)):
        raise StepFailure("non-finite node")
    if np.any(r2 >= 1.0 - geo.BOUNDARY_FLOOR):
        raise SingularProximity("node reached the boundary floor")


def velocity(curve, geom=None):
    return -gradient(curve, geom)


def symmetry_group(n, symmetries, closed=True):
    """Index maps and normal-speed parities of the group generated by ``symmetries``.

    A normal speed transforms as G[partner] = parity * G with parity equal to
    (orientation of the index map) * det(linear part).
    """
    elems = {tuple(range(n)): 1.0}
    gens = []
    for which in symmetries:
        idx, mat = symmetry_partner(n, which, closed)
        gens.append((tuple(idx), -float(np.sign(np.linalg.det(mat)))))
    frontier = list(elems.items())
    while frontier:
        nxt = []
        for idx, par in frontier:
            for gidx, gpar in gens:
                comp = tuple(np.asarray(idx)[list(gidx)])
                if comp not in elems:
                    elems[comp] = par * gpar
                    nxt.append((comp, par * gpar))
        frontier = nxt
    return [(np.asarray(k), v) for k, v in elems.items()]


def _average_scalar(values, group):
    return sum(par * values[idx] for idx, par in group) / len(group)


def _average_operator(mat, group):
    mat = mat.tocsr()
    out = None
    for idx, _ in group:
        term = mat[idx][:, idx]
        out = term if out is None else out + term
    return (out / len(group)).tocsc()


def step(curve, dt, bc=geo.CLOSED, clamped_data=None, scheme="explicit", geom=None, group=None):
    """One time step of the flow; returns the new curve.

    Clamped curves keep their endpoints and end tangents via
    :func:`impose_clamped` after the update.  With ``group`` (from
    :func:`symmetry_group`) the normal speed and its Jacobian are averaged
    over the symmetry group, which removes the roundoff that would otherwise
    break the symmetry of the data.
    """
    if bc == "clamped" and clamped_data is None:
        raise ValueError("clamped stepping needs clamped_data")
    g = geom or geo.curve_geometry(curve)
    if bc == "clamped":
        def speed(c, geom=None):
            return clamped_gradient_scalar(c.with_nodes(impose_clamped(c.nodes, clamped_data)),
                                           clamped_data)
        G = clamped_gradient_scalar(curve, clamped_data, g)
    else:
        speed = discrete_gradient_scalar
        G = discrete_gradient_scalar(curve, g)
    if scheme == "explicit":
        if group:
            G = _average_scalar(G, group)
        delta = -dt * G[:, None] * g.normal
    else:
        # linearly implicit Euler in the normal displacement w: (1 + dt dG/dw) w = -dt G
        jac = normal_jacobian(curve, g, speed=speed)
        if group:
            G = _average_scalar(G, group)
            jac = _average_operator(jac, group)
        mat = sp.identity(curve.n, format="csc") + dt * jac
        if bc == "clamped":
            fixed = [0, 1, curve.n - 2, curve.n - 1]
            mat = mat.tolil()
            for i in fixed:
                mat[i, :] = 0.0
                mat[i, i] = 1.0
            mat = mat.tocsc()
        try:
            w = splu(mat).solve(-dt * G)
        except RuntimeError as exc:
            raise StepFailure(f"singular implicit system: {exc}") from exc
        if group:
            # the exact solution is equivariant; this removes the solver's roundoff
            w = _average_scalar(w, group)
        # a nearly singular system amplifies instead of damping; a long step
        # leaves the range where the linearization is trustworthy
        wmax = float(np.max(np.abs(w)))
        if wmax > 2.0 * dt * float(np.max(np.abs(G))):
            raise StepFailure("implicit solve amplified the explicit update")
        if wmax > 0.5 * float(np.min(g.hyp_speed)) * curve.step:
            raise StepFailure("normal displacement exceeds half a node spacing")
        delta = w[:, None] * g.normal
    nodes = curve.nodes + delta
    if bc == "clamped":
        nodes = impose_clamped(nodes, clamped_data)
    _check_domain(nodes)
    return curve.with_nodes(nodes)


def stability_dt(curve, c=0.1, geom=None):
    """Explicit-step bound c * (min hyperbolic node spacing)^4."""
    g = geom or geo.curve_geometry(curve)
    return c * float(np.min(g.hyp_speed * curve.step)) ** 4


# ---------------------------------------------------------------------------
# symmetry


def symmetry_partner(n, which, closed=True):
    """Index map k -> partner and the linear map applied to the partner node."""
    k = np.arange(n)
    if which == "S1":
        if not closed or n % 2:
            raise MonitorError("(S1) needs a closed grid with an even node count")
        return (-k) % n, -np.eye(2)
    if which == "S2":
        if not closed or n % 4:
            raise MonitorError("(S2) needs a closed grid with node count divisible by 4")
        m = n // 4
        return (6 * m - k) % n, np.diag(REFLECT_X)
    if which == "S2prime":
        if closed:
            raise MonitorError("(S2') is a symmetry of open curves on [-1, 1]")
        return n - 1 - k, np.diag(REFLECT_X)
    raise MonitorError(f"unknown symmetry {which!r}")


def _check_symmetric_grid(curve, which):
    a, b = curve.domain
    if which in ("S1", "S2") and not np.isclose(a, -b):
        raise MonitorError("grid is not symmetric about x = 0")
    if which == "S2" and not np.isclose(b - a, 4.0):
        raise MonitorError("(S2) expects the parameter circle [-2, 2)")
    if which == "S2prime" and not np.isclose(a, -b):
        raise MonitorError("grid is not symmetric about x = 0")


def symmetry_residual(curve, which):
    _check_symmetric_grid(curve, which)
    idx, mat = symmetry_partner(curve.n, which, curve.closed)
    return float(np.max(np.abs(curve.nodes - curve.nodes[idx] @ mat.T)))


def symmetry_monitor(frame, which):
    return symmetry_residual(frame.curve, which)


def symmetrize(curve, which):
    """Average a curve with its image under the symmetry."""
    idx, mat = symmetry_partner(curve.n, which, curve.closed)
    nodes = 0.5 * (curve.nodes + curve.nodes[idx] @ mat.T)
    return curve.with_nodes(nodes)


# ---------------------------------------------------------------------------
# monitors


def fenchel_check(frame, initial_energy=None, tol=1e-9):
    """Total-curvature lower bound on the hyperbolic length of a closed curve."""
    e0 = frame.energy if initial_energy is None else initial_energy
    if e0 <= 0:
        return True
    return bool(frame.hyp_length >= 4.0 * np.pi ** 2 / e0 - tol)


def make_frame(t, curve, symmetries=(), step_index=0, dt=0.0, clamped_data=None):
    g = geo.curve_geometry(curve)
    return FlowFrame(
        t=float(t), curve=curve,
        energy=geo.elastic_energy(curve, g),
        hyp_length=geo.hyperbolic_length(curve, g),
        euc_length=geo.euclidean_length(curve),
        grad_norm_sq=grad_norm_sq(curve, g, clamped_data),
        max_abs=float(np.max(np.hypot(curve.nodes[:, 0], curve.nodes[:, 1]))),
        symmetry_residuals={s: symmetry_residual(curve, s) for s in symmetries},
        step=step_index, dt=float(dt),
    )


# ---------------------------------------------------------------------------
# driver


def redistribute(curve, speed="hyperbolic", clamped_data=None, weight=1.0):
    out = geo.reparametrize(curve, speed, max_passes=3, curvature_weight=weight)
    if clamped_data is not None:
        out = out.with_nodes(impose_clamped(out.nodes, clamped_data))
    return out


def run(config, initial, callback=None):
    """Integrate until t_end, singular proximity, or a step failure."""
    import time

    clock = time.perf_counter()
    if config.bc == "clamped":
        if initial.closed:
            raise ValueError("clamped flow needs an open curve")
        data = config.clamped_data or ClampedData.from_curve(initial)
        config = replace(config, clamped_data=data)
        pos, _ = clamped_residuals(initial, data)
        if pos > 1e-12:
            raise ValueError("initial curve does not match the clamped endpoint data")
    elif not initial.closed:
        raise ValueError("closed flow needs a closed curve")
    data = config.clamped_data
    if initial.n != config.n_nodes or config.reparam_every:
        # start from the node distribution that later redistributions maintain
        initial = geo.reparametrize(initial, config.reparam_speed, n=config.n_nodes,
                                    max_passes=3, curvature_weight=config.reparam_weight)
        if data is not None:
            initial = initial.with_nodes(impose_clamped(initial.nodes, data))

    group = None
    if config.equivariant and config.symmetries:
        worst = max(symmetry_residual(initial, s) for s in config.symmetries)
        if worst > 1e-8:
            raise ValueError(f"initial data is not symmetric (residual {worst:.2e})")
        group = symmetry_group(initial.n, config.symmetries, initial.closed)

    curve = initial
    geom = geo.curve_geometry(curve)
    energy = geo.elastic_energy(curve, geom)
    e0 = energy
    guard = 1e-10 * max(e0, 1e-300)
    frames = [make_frame(0.0, curve, config.symmetries, clamped_data=data)]
    energies, times = [energy], [0.0]
    hist = {"dt": [0.0], "dt_stable": [stability_dt(curve, geom=geom)],
            "grad_norm_sq": [frames[0].grad_norm_sq], "remeshed": [False],
            "symmetry": [max((frames[0].symmetry_residuals or {"": 0.0}).values())],
            "origin": [float(np.max(np.abs(curve.nodes[[0, curve.n // 2]])))
                       if "S1" in config.symmetries else 0.0],
            "clamp_position": [0.0], "clamp_tangent": [0.0]}
    if data is not None:
        hist["clamp_position"][0], hist["clamp_tangent"][0] = clamped_residuals(curve, data)
    t, dt = 0.0, config.dt_initial
    termination = REACHED_T_END
    n_steps = rejected = reparams = reparam_skipped = 0
    max_sym = 0.0
    max_origin = 0.0
    pinned = [0, initial.n // 2] if "S1" in config.symmetries else []
    reasons = Counter()
    adaptive = config.dt_policy == ADAPTIVE

    while t < config.t_end - 1e-15 * max(1.0, config.t_end):
        if n_steps >= config.max_steps:
            termination = STEP_FAILURE
            break
        h = min(dt, config.t_end - t)
        try:
            trial = step(curve, h, config.bc, data, config.scheme, geom, group)
            trial_geom = geo.curve_geometry(trial)
            e_trial = geo.elastic_energy(trial, trial_geom)
        except (SingularProximity, StepFailure, geo.ImmersionError, geo.DomainError,
                FloatingPointError) as exc:
            # an overshooting trial step is retried with a smaller dt
            if adaptive and dt > 1e-14 * max(config.dt_initial, 1e-300):
                dt *= 0.5
                rejected += 1
                reasons[type(exc).__name__ + ": " + str(exc)[:40]] += 1
                continue
            log.warning("step failure at t=%g: %s", t, exc)
            termination = SINGULAR_PROXIMITY if isinstance(exc, SingularProximity) else STEP_FAILURE
            break
        if not np.isfinite(e_trial):
            termination = STEP_FAILURE
            break
        if e_trial > energy + guard:
            if adaptive:
                dt *= 0.5
                rejected += 1
                reasons["energy increase"] += 1
                if dt < 1e-300:
                    termination = STEP_FAILURE
                    break
                continue
            termination = STEP_FAILURE
            break
        if config.reparam_every and (n_steps + 1) % config.reparam_every == 0:
            # redistribution belongs to this step: the guard compares against
            # the energy before the step, so the step's decrease can absorb the
            # small change the resampling makes
            cand = redistribute(trial, config.reparam_speed, data, config.reparam_weight)
            try:
                cg = geo.curve_geometry(cand)
                ce = geo.elastic_energy(cand, cg)
            except geo.ImmersionError:
                ce = np.inf
            if ce <= energy + guard:
                trial, trial_geom, e_trial = cand, cg, ce
                reparams += 1
                remeshed = True
            else:
                reparam_skipped += 1
                remeshed = False
        else:
            remeshed = False
        hist["dt_stable"].append(stability_dt(curve, geom=geom))
        curve, geom, energy = trial, trial_geom, e_trial
        sym = max((symmetry_residual(curve, s) for s in config.symmetries), default=0.0)
        origin = float(np.max(np.abs(curve.nodes[pinned]))) if pinned else 0.0
        max_sym, max_origin = max(max_sym, sym), max(max_origin, origin)
        t += h
        n_steps += 1
        energies.append(energy)
        times.append(t)
        hist["dt"].append(h)
        hist["grad_norm_sq"].append(grad_norm_sq(curve, geom, data))
        hist["remeshed"].append(remeshed)
        hist["symmetry"].append(sym)
        hist["origin"].append(origin)
        if data is not None:
            pos, tan = clamped_residuals(curve, data)
        else:
            pos = tan = 0.0
        hist["clamp_position"].append(pos)
        hist["clamp_tangent"].append(tan)
        max_abs = float(np.sqrt(np.max(np.sum(curve.nodes ** 2, axis=1))))
        if max_abs >= 1.0 - config.singular_eps:
            termination = SINGULAR_PROXIMITY
            break
        if config.frame_every and n_steps % config.frame_every == 0:
            frames.append(make_frame(t, curve, config.symmetries, n_steps, h, data))
            if callback is not None:
                callback(frames[-1])
        if adaptive:
            dt = min(dt * config.dt_growth, config.dt_max)

    if frames[-1].t < t:
        frames.append(make_frame(t, curve, config.symmetries, n_steps, dt, data))
    return FlowRun(
        config=config, frames=frames, termination=termination,
        energies=np.array(energies), times=np.array(times),
        wall_time=time.perf_counter() - clock,
        stats={"steps": n_steps, "rejected": rejected, "reparams": reparams,
               "reparams_skipped": reparam_skipped, "max_symmetry_residual": max_sym,
               "max_origin_offset": max_origin,
               "rejection_reasons": dict(reasons)},
        history={k: np.array(v) for k, v in hist.items()},
    )


# ---------------------------------------------------------------------------
# initial data


def vertically_clamped_curve(width=0.2, depth=0.8, n=512):
    """Symmetric loop from the origin and back, leaving downward and returning upward.

    gamma(x) = (width sin(pi x)(1 - x^2), -depth (1 - x^2)) on [-1, 1]; the
    defaults give an elastic energy of about 10.5.
    """
    x = np.linspace(-1.0, 1.0, n)
    nodes = np.column_stack([width * np.sin(np.pi * x) * (1.0 - x * x), -depth * (1.0 - x * x)])
    return geo.SampledCurve(nodes, model=geo.DISK, topology=geo.OPEN, domain=(-1.0, 1.0))
