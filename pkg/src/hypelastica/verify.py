"""Invariant checks over stored runs and over small built-in test problems.

Each check returns ``{"pass": bool | None, ...details}``; ``None`` means the
check does not apply to the run (for example origin pinning without (S1)).
"""

import math

import numpy as np

from . import analysis as an
from . import flow as fl
from . import geometry as geo

ENERGY_GUARD = 1e-10
SYMMETRY_TOL = 1e-8
ORIGIN_TOL = 1e-10
CLAMP_TOL = 1e-8
STATIONARY_TOL = 1e-8
CONSISTENCY_TOL = 0.05
CONTAINMENT_TOL = 1e-9
TRANSVERSALITY_FLOOR = 0.1
DIGEST_RTOL = 1e-9


def _verdict(ok, **details):
    return {"pass": None if ok is None else bool(ok), **details}


# ---------------------------------------------------------------------------
# flow invariants on a run


def check_energy_dissipation(run):
    E = np.asarray(run.energies, float)
    excess = np.diff(E) - ENERGY_GUARD * E[0]
    worst = float(np.max(excess)) if len(excess) else -math.inf
    bad = np.flatnonzero(excess > 0)
    # frame energies must agree with the step log at the same step
    mism = 0.0
    for f in run.frames:
        if f.step < len(E):
            mism = max(mism, abs(f.energy - E[f.step]) / max(abs(E[0]), 1e-300))
    return _verdict(len(bad) == 0 and mism <= 1e-12, worst_excess=worst,
                    violating_steps=[int(i) + 1 for i in bad[:10]], frame_log_mismatch=mism)


def check_origin_pinning(run):
    if "S1" not in run.config.symmetries:
        return _verdict(None, reason="run has no (S1) symmetry")
    worst = float(np.max(run.history["origin"]))
    return _verdict(worst <= ORIGIN_TOL, max_offset=worst, tol=ORIGIN_TOL)


def check_symmetry(run):
    if not run.config.symmetries:
        return _verdict(None, reason="run declares no symmetries")
    worst = float(np.max(run.history["symmetry"]))
    return _verdict(worst < SYMMETRY_TOL, max_residual=worst, tol=SYMMETRY_TOL)


def check_clamped_boundary(run):
    if run.config.bc != "clamped":
        return _verdict(None, reason="closed run")
    pos = float(np.max(run.history["clamp_position"]))
    tan = float(np.max(run.history["clamp_tangent"]))
    return _verdict(max(pos, tan) <= CLAMP_TOL, max_position_error=pos, max_tangent_error=tan)


def check_euclidean_length(run):
    ok, worst = an.euclidean_length_bounded(run, 1.2)
    return _verdict(ok, worst_ratio=float(worst), factor=1.2)


def check_gradient_energy(run):
    """dE/dt against -grad_norm_sq on steps well inside the explicit stability bound."""
    h = run.history
    E = np.asarray(run.energies, float)
    dt = h["dt"][1:]
    use = (dt > 0) & (dt <= 0.5 * h["dt_stable"][1:]) & ~h["remeshed"][1:]
    if not np.any(use):
        return _verdict(None, reason="no step below half the stability bound")
    rate = np.diff(E)[use] / dt[use]
    g = 0.5 * (h["grad_norm_sq"][1:] + h["grad_norm_sq"][:-1])[use]
    rel = np.abs(rate + g) / np.maximum(g, 1e-300)
    return _verdict(float(np.max(rel)) < CONSISTENCY_TOL, max_relative_mismatch=float(np.max(rel)),
                    steps_checked=int(np.sum(use)))


def check_frame_times(run):
    t = np.array([f.t for f in run.frames])
    return _verdict(bool(np.all(np.diff(t) > 0)), frames=len(t))


# ---------------------------------------------------------------------------
# analysis invariants on a run


def _digest_mismatch(stored, rep):
    if not stored:
        return 0.0
    worst = 0.0
    pairs = [("residual_energy", rep.residual_energy), ("initial_energy", rep.initial_energy),
             ("m", rep.m)]
    for key, val in pairs:
        if key not in stored:
            continue
        worst = max(worst, abs(float(stored[key]) - float(val)) / max(1.0, abs(float(val))))
    per = stored.get("per_singularity_energy")
    if per is not None:
        if len(per) != len(rep.per_singularity_energy):
            return math.inf
        for a, b in zip(per, rep.per_singularity_energy):
            worst = max(worst, abs(a - b) / max(1.0, abs(b)))
    return worst


def quantization_digest(rep):
    return {"m": rep.m, "singular_params": list(rep.singular_params),
            "per_singularity_energy": list(rep.per_singularity_energy),
            "residual_energy": rep.residual_energy, "initial_energy": rep.initial_energy,
            "budget_ok": rep.budget_ok, "count_bound_ok": rep.count_bound_ok,
            "limit_segment_classification": list(rep.limit_segment_classification),
            "inconclusive": rep.inconclusive, "grad_norm_sq": rep.details["grad_norm_sq"]}


def check_quantization(run, rep, stored=None):
    """Budget inequality for the run, and agreement with the archived digest."""
    mismatch = _digest_mismatch(stored, rep)
    digest = stored if stored else quantization_digest(rep)
    budget = float(digest["residual_energy"]) + an.QUANTUM * int(digest["m"])
    ok = budget <= float(digest["initial_energy"]) + an.BUDGET_TOL and mismatch <= DIGEST_RTOL
    return _verdict(ok, m=int(digest["m"]), residual_energy=float(digest["residual_energy"]),
                    initial_energy=float(digest["initial_energy"]), budget=budget,
                    tolerance=an.BUDGET_TOL, digest_mismatch=mismatch,
                    inconclusive=bool(rep.inconclusive))


def check_count_bound(run, rep):
    cap = math.floor(rep.initial_energy / an.QUANTUM)
    return _verdict(rep.m <= cap, m=rep.m, cap=cap)


def check_blowups(run, rep):
    if not rep.singular_params:
        na = _verdict(None, reason="no singular parameters")
        return na, dict(na)
    excess, disp, fits = [], [], []
    for x in rep.singular_params:
        try:
            b = an.blow_up(run, x)
        except an.WindowError as exc:
            fail = _verdict(False, error=str(exc))
            return fail, dict(fail)
        excess.append(b.containment_excess)
        fits.append(b.fit_distances)
        disp.append(an.blowup_transversality(b))
    worst = float(max(excess))
    low = float(min(min(d) for d in disp))
    return (_verdict(worst <= CONTAINMENT_TOL, max_excess=worst, tol=CONTAINMENT_TOL, fit_distances=fits),
            _verdict(low > TRANSVERSALITY_FLOOR, min_displacement=low, displacements=disp,
                     closed_form=an.transversality_displacement_closed_form()))


def check_window_trend(run, rep):
    if not rep.singular_params:
        return _verdict(None, reason="no singular parameters")
    ok, table = an.window_length_trend(run)
    return _verdict(ok, hot_window=table["hot_window"],
                    hot_lengths=table["lengths"][:, table["hot_window"]].tolist())


def check_inequalities(curves):
    """Inequality suite over a sequence of curves; counts violations per inequality."""
    counts, seen = {}, {}
    for c in curves:
        for name, res in an.inequality_suite(c).items():
            seen[name] = seen.get(name, 0) + 1
            counts[name] = counts.get(name, 0) + (not res["ok"])
    return _verdict(sum(counts.values()) == 0, violations=counts, curves_checked=seen)


def verify_run(run, summary=None):
    """All run-level verdicts for one run; ``summary`` supplies stored digests."""
    stored = ((summary or {}).get("reports") or {}).get("quantization")
    rep = an.quantization_report(run)
    containment, transversality = check_blowups(run, rep)
    checks = {
        "flow.energy_dissipation": check_energy_dissipation(run),
        "flow.origin_pinning": check_origin_pinning(run),
        "flow.symmetry_preservation": check_symmetry(run),
        "flow.clamped_boundary": check_clamped_boundary(run),
        "flow.euclidean_length_bounded": check_euclidean_length(run),
        "flow.gradient_energy_consistency": check_gradient_energy(run),
        "flow.frame_times_increasing": check_frame_times(run),
        "analysis.quantization_budget": check_quantization(run, rep, stored),
        "analysis.count_bound": check_count_bound(run, rep),
        "analysis.blowup_containment": containment,
        "analysis.non_vanishing_length": check_window_trend(run, rep),
        "analysis.transversality": transversality,
        "analysis.inequality_suite": check_inequalities(f.curve for f in run.frames),
    }
    return {"termination": run.termination, "singular_params": list(rep.singular_params),
            "m": rep.m, "budget_ok": rep.budget_ok, "checks": checks,
            "pass": all(c["pass"] is not False for c in checks.values())}


# ---------------------------------------------------------------------------
# model-level checks on built-in problems


def _circle(n, radius, shift=0.0):
    x = np.arange(n) / n * 4.0 - 2.0
    nodes = np.column_stack([radius * np.cos(np.pi * x / 2), radius * np.sin(np.pi * x / 2)])
    c = geo.SampledCurve(nodes, domain=(-2.0, 2.0))
    return c.with_nodes(geo.translation_along_y(shift)(c.nodes)) if shift else c


def _geodesic(n, shift=0.0, angle=0.0):
    t = np.linspace(-1.0, 1.0, n)
    nodes = 0.95 * np.column_stack([np.cos(angle) * t, np.sin(angle) * t])
    c = geo.SampledCurve(nodes, topology=geo.OPEN, domain=(-1.0, 1.0))
    return c.with_nodes(geo.translation_along_y(shift)(c.nodes)) if shift else c


def stationary_cases(n=256):
    """Gradient sup-norms on geodesics and on circles with kappa^2 = 2."""
    radius = math.tanh(0.5 * math.atanh(1.0 / math.sqrt(2.0)))
    cases = {
        "geodesic_diameter": _geodesic(n),
        "geodesic_diameter_rotated": _geodesic(n, angle=0.7),
        "geodesic_arc": _geodesic(n, shift=0.4, angle=0.0),
        "circle_kappa_sqrt2": _circle(n, radius),
        "circle_kappa_sqrt2_moved": _circle(n, radius, shift=0.3),
    }
    out = {}
    for name, c in cases.items():
        G = fl.gradient_scalar(c)
        if not c.closed:
            G = G[4:-4]
        out[name] = float(np.max(np.abs(G)))
    return out


def check_stationary_points(n=256):
    vals = stationary_cases(n)
    return _verdict(all(v < STATIONARY_TOL for v in vals.values()), sup_norms=vals,
                    tol=STATIONARY_TOL, n=n)


def _order_curve(n):
    x = np.arange(n) / n * 2 * np.pi
    r = 0.3 * (1 + 0.1 * np.cos(2 * x) + 0.05 * np.sin(3 * x))
    return geo.SampledCurve(np.column_stack([0.1 + r * np.cos(x), r * np.sin(x)]), domain=(0.0, 2 * np.pi))


def _evolve(n, dt, t_end):
    c = _order_curve(n)
    for _ in range(int(round(t_end / dt))):
        c = fl.step(c, dt, scheme="linearly_implicit")
    return c.nodes


def order_check(t_end=2e-3):
    """Self-convergence ratios in time (dt halved) and space (N doubled)."""
    a, b, c = (_evolve(64, t_end / 8 / 2 ** j, t_end) for j in range(3))
    time_ratio = float(np.max(np.abs(a - b)) / np.max(np.abs(b - c)))
    dt = t_end / 40
    a, b, c = (_evolve(n, dt, t_end) for n in (32, 64, 128))
    space_ratio = float(np.max(np.abs(a - b[::2])) / np.max(np.abs(b - c[::2])))
    return time_ratio, space_ratio


def check_order(t_end=2e-3):
    tr, sr = order_check(t_end)
    # first order in time; the fourth-order stencils give at least second order in space
    return _verdict(1.6 <= tr <= 2.5 and sr >= 4.0 * 0.8, time_ratio=tr, space_ratio=sr)


def model_checks():
    return {"flow.stationary_points": check_stationary_points(),
            "flow.order_check": check_order()}
