"""Acceptance criteria 1-14.

Each test records a one-line verdict through ``conftest.record``; the terminal
summary prints them in order. The two long flows run once per session through
the command line and are read back from their archives.
"""
import json
import math
import shutil
import time

import mpmath
import numpy as np
import pytest
from scipy.integrate import quad
from scipy.optimize import brentq

from conftest import record
from hypelastica import analysis as an
from hypelastica import cli
from hypelastica import elastica as el
from hypelastica import fileio as fio
from hypelastica import flow as fl
from hypelastica import geometry as geo
from hypelastica import special as sf
from hypelastica import verify as vf

pytestmark = pytest.mark.acceptance


def simulate(out, initial):
    t0 = time.perf_counter()
    code = cli.main(["simulate", "--initial", initial, "--n", "512", "--t-end", "1e9", "--out", str(out)])
    wall = time.perf_counter() - t0
    assert code == 0
    return fio.read_archive(out), wall, out


@pytest.fixture(scope="session")
def eight(tmp_path_factory):
    """Figure-eight flow from lambda = 0.5 at N = 512, stopped at singular proximity."""
    return simulate(tmp_path_factory.mktemp("eight") / "run", "lambda-eight:0.5")


@pytest.fixture(scope="session")
def clamped(tmp_path_factory):
    """Vertically clamped symmetric flow at N = 512."""
    return simulate(tmp_path_factory.mktemp("clamped") / "run", "clamped-symmetric:preset")


def segment(y0, y1, n=20001):
    return np.column_stack([np.zeros(n), np.linspace(y0, y1, n)])


def hausdorff_to(curve, target):
    c = geo.reparam_constant_euclidean_speed(curve)
    pts = an._densify(np.vstack([c.nodes, c.nodes[:1]]) if c.closed else c.nodes)
    return an._hausdorff(pts, target)


def param_gap(x, y):
    """Distance on the closed parameter circle [-2, 2)."""
    d = abs(x - y) % 4.0
    return min(d, 4.0 - d)


# ---------------------------------------------------------------------------


def test_criterion_01_elastica_energy_constant():
    t0 = time.perf_counter()
    s = np.linspace(-20.0, 20.0, 8001)  # the profile parameter is hyperbolic arc length
    c = geo.SampledCurve(el.asymptotically_geodesic_disk(s), topology=geo.OPEN, domain=(-20.0, 20.0))
    numeric = geo.elastic_energy(c)
    errs = [abs(numeric - 8.0)]
    for lam in (0.0, 0.5, 1.0):
        p = el.classify(lam, 2 * lam + 4)
        val = quad(lambda t: el.curvature_profile(p, t) ** 2, -60, 60, limit=400, epsabs=1e-12)[0]
        errs.append(abs(val - el.energy_asymptotically_geodesic(lam)))
        assert el.energy_asymptotically_geodesic(lam) == pytest.approx(4 * math.sqrt(2 * lam + 4), rel=1e-15)
    wall = time.perf_counter() - t0
    ok = max(errs) <= 1e-6 and wall < 1.0
    record(1, ok, f"|E - 8| = {errs[0]:.2e}, closed form vs quad {max(errs[1:]):.2e}, {wall:.2f} s")
    assert ok


def test_criterion_02_gradient_correctness():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        c = an.random_closed_curve(rng, n=256)
        g = geo.curve_geometry(c)
        G = fl.gradient_scalar(c)
        th = np.linspace(0.0, 2 * np.pi, c.n, endpoint=False)
        w = -G / np.max(np.abs(G)) + 0.5 * sum(rng.normal() * np.cos(k * th) + rng.normal() * np.sin(k * th)
                                               for k in (1, 2, 3))
        V = w[:, None] * g.normal
        predicted = fl.pairing(c, fl.gradient(c), V)
        for eps in (1e-4, 1e-5, 1e-6):
            fd = (geo.elastic_energy(c.with_nodes(c.nodes + eps * V))
                  - geo.elastic_energy(c.with_nodes(c.nodes - eps * V))) / (2 * eps)
            worst = max(worst, abs(fd - predicted) / abs(fd))
    wall = time.perf_counter() - t0
    ok = worst < 1e-4 and wall < 10.0
    record(2, ok, f"worst relative error {worst:.2e} over 20 curves x 3 eps, {wall:.2f} s")
    assert ok


def test_criterion_03_energy_dissipation(eight, clamped):
    verdicts = {name: vf.check_energy_dissipation(arch.run) for name, (arch, _, _) in
                (("figure-eight", eight), ("clamped", clamped))}
    ok = all(v["pass"] for v in verdicts.values())
    steps = sum(len(arch.run.energies) - 1 for arch, _, _ in (eight, clamped))
    detail = ", ".join(f"{k} worst excess {v['worst_excess']:.2e}" for k, v in verdicts.items())
    record(3, ok, f"{steps} accepted steps; {detail}")
    assert ok


def test_criterion_04_figure_eight_singular_limit(eight):
    arch, wall, _ = eight
    run = arch.run
    final = run.frames[-1]
    reach = final.max_abs >= 1.0 - 1e-3
    dist = hausdorff_to(final.curve, segment(-1.0, 1.0))
    params = an.detect_singular_params(run)
    params_ok = len(params) == 2 and all(min(param_gap(p, t) for p in params) <= 0.05 for t in (-1.0, 1.0))
    length_ok, ratio = an.euclidean_length_bounded(run)
    ok = (run.termination == fl.SINGULAR_PROXIMITY and reach and dist < 0.05 and params_ok and length_ok
          and wall < 600)
    record(4, ok, f"max|gamma| = {final.max_abs:.6f} at t = {final.t:.4g}, Hausdorff {dist:.4f}, "
                  f"params {[round(p, 4) for p in params]}, length ratio {ratio:.3f}, {wall:.0f} s")
    assert ok


def test_criterion_05_quantization_budget(eight):
    run = eight[0].run
    rep = an.quantization_report(run)
    E0 = run.frames[0].energy
    ok = (rep.m == 2 and rep.residual_energy <= E0 - 16 + 0.5
          and all(e >= 7.5 for e in rep.per_singularity_energy)
          and rep.limit_segment_classification
          and all(c == an.GEODESIC for c in rep.limit_segment_classification))
    record(5, ok, f"m = {rep.m}, residual {rep.residual_energy:.4f} <= {E0 - 15.5:.4f}, "
                  f"windows {[round(e, 3) for e in rep.per_singularity_energy]}, "
                  f"segments {rep.limit_segment_classification}, "
                  f"max|kappa| {[round(k, 4) for k in rep.details['segment_max_abs_kappa']]}")
    assert ok


def test_criterion_06_blow_up_fit(eight):
    run = eight[0].run
    x_j = min(an.detect_singular_params(run), key=lambda p: param_gap(p, 1.0))
    b = an.blow_up(run, x_j)
    ok = max(b.fit_distances) < 0.05 and b.containment_excess <= 1e-9
    record(6, ok, f"x_j = {x_j:.4f}, n_j = {b.n_j}, fit {[round(d, 4) for d in b.fit_distances]}, "
                  f"containment excess {b.containment_excess:.2e}")
    assert ok


def test_criterion_07_clamped_singular_limit(clamped):
    arch, wall, _ = clamped
    run = arch.run
    E0 = run.frames[0].energy
    params = an.detect_singular_params(run)
    dist = hausdorff_to(run.frames[-1].curve, segment(-1.0, 0.0))
    clamp = max(float(np.max(run.history["clamp_position"])), float(np.max(run.history["clamp_tangent"])))
    for f in run.frames:
        res = fl.clamped_residuals(f.curve, run.config.clamped_data)
        clamp = max(clamp, *res)
    ok = (8 < E0 < 16 and len(params) == 1 and abs(params[0]) <= 0.05 and dist < 0.05 and clamp <= 1e-8)
    record(7, ok, f"E0 = {E0:.4f}, params {[round(p, 4) for p in params]}, Hausdorff {dist:.4f}, "
                  f"boundary residual {clamp:.1e}, {wall:.0f} s")
    assert ok


def test_criterion_08_symmetry_preservation(eight):
    run = eight[0].run
    sym = float(np.max(run.history["symmetry"]))
    per_frame = max(max(f.symmetry_residuals.values()) for f in run.frames)
    origin = float(np.max(run.history["origin"]))
    ok = max(sym, per_frame) < 1e-8 and origin <= 1e-10
    record(8, ok, f"max (S1)/(S2) residual {max(sym, per_frame):.1e}, origin offset {origin:.1e}")
    assert ok


def test_criterion_09_inequality_suite():
    rng = np.random.default_rng(9)
    curves = [an.random_closed_curve(rng) for _ in range(100)] + [an.random_profile_curve(rng) for _ in range(100)]
    v = vf.check_inequalities(curves)
    ok = v["pass"] and v["curves_checked"]["fenchel"] == 100 and v["curves_checked"]["est_dxu1"] == 200
    record(9, ok, f"violations {v['violations']} over {v['curves_checked']}")
    assert ok


def test_criterion_10_bryant_griffiths():
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(10):
        u = an.random_profile_curve(rng, n=512)
        W, direct = an.willmore_energy(u), an.willmore_direct(u)
        worst = max(worst, abs(W - direct) / abs(direct))
    ok = worst < 1e-3
    record(10, ok, f"worst relative error {worst:.2e} over 10 profiles at N = 512")
    assert ok


def test_criterion_11_transversality_constants():
    mpmath.mp.dps = 40
    u = lambda x: mpmath.matrix([x, mpmath.cosh(x)]) / (x ** 2 + mpmath.cosh(x) ** 2)
    worst = 0.0
    for h in (0.25, 0.5, 1.0, 2.0, 4.0):
        xu, xv, det = el.transversality_constants(h)
        v = lambda x: h * mpmath.matrix([mpmath.cos(x) + 1, mpmath.sin(x)])
        # the crossing point, found independently by root finding
        root = brentq(lambda x: np.linalg.norm(el.asymptotically_geodesic_halfplane(x) - [h, 0.0]) - h,
                      1e-9, 1.5 / h, xtol=1e-15)
        du = mpmath.matrix([mpmath.diff(lambda t: u(t)[i], xu) for i in range(2)])
        dv = mpmath.matrix([mpmath.diff(lambda t: v(t)[i], xv) for i in range(2)])
        exact_det = float(du[0] * dv[1] - du[1] * dv[0])
        errs = [abs(root - xu), float(mpmath.norm(u(xu) - v(xv))), abs(exact_det - det)]
        worst = max(worst, *errs)
    mpmath.mp.dps = 15
    ok = worst <= 1e-10
    record(11, ok, f"worst deviation {worst:.1e} over h in (0.25, 0.5, 1, 2, 4)")
    assert ok


def test_criterion_12_lambda_trend():
    lams = (0.5, 0.2, 0.1, 0.05)
    E = [geo.elastic_energy(el.construct_lambda_figure_eight(lam, n_nodes=512)) for lam in lams]
    closed = [el.figure_eight_energy(lam) for lam in lams]
    ok = all(e > 16 for e in E) and all(a > b for a, b in zip(E, E[1:])) and all(
        a > b for a, b in zip(closed, closed[1:]))
    record(12, ok, "E = " + ", ".join(f"{lam}: {e:.5f}" for lam, e in zip(lams, E)))
    assert ok


def test_criterion_13_special_functions():
    mpmath.mp.dps = 30
    u = np.linspace(-12.0, 12.0, 50)
    worst = 0.0
    for p in (0.0, 0.3, 0.7, 0.99, 1.0):
        cn, dn = sf.jacobi_cn(u, p), sf.jacobi_dn(u, p)
        for k, x in enumerate(u):
            ref_cn = float(mpmath.ellipfun("cn", x, m=p * p))
            ref_dn = float(mpmath.ellipfun("dn", x, m=p * p))
            worst = max(worst, abs(cn[k] - ref_cn), abs(dn[k] - ref_dn))
    mpmath.mp.dps = 15
    ok = worst <= 1e-10
    record(13, ok, f"max deviation from the theta-series oracle {worst:.1e} on 50 x 5 grid")
    assert ok


def test_criterion_14_negative_controls(eight, tmp_path, capsys):
    base = eight[2]
    capsys.readouterr()
    clean_ok = cli.main(["verify", str(base)]) == 0

    budget = tmp_path / "budget"
    shutil.copytree(base, budget)
    summary = json.loads((budget / fio.SUMMARY_FILE).read_text())
    summary["reports"]["quantization"]["residual_energy"] += 1.0
    (budget / fio.SUMMARY_FILE).write_text(json.dumps(summary))
    capsys.readouterr()
    budget_code = cli.main(["verify", str(budget)])
    budget_check = json.loads(capsys.readouterr().out)["archives"][str(budget)]["checks"][
        "analysis.quantization_budget"]["pass"]

    energy = tmp_path / "energy"
    shutil.copytree(base, energy)
    rows = (energy / fio.STEPS_FILE).read_text().splitlines()
    k = len(rows) // 2
    cells = rows[k].split(",")
    cells[1 + fio.STEP_COLUMNS.index("energy")] = repr(float(cells[1 + fio.STEP_COLUMNS.index("energy")]) + 1e-3)
    rows[k] = ",".join(cells)
    (energy / fio.STEPS_FILE).write_text("\n".join(rows) + "\n")
    capsys.readouterr()
    energy_code = cli.main(["verify", str(energy)])
    energy_check = json.loads(capsys.readouterr().out)["archives"][str(energy)]["checks"][
        "flow.energy_dissipation"]["pass"]

    ok = clean_ok and budget_code == 1 and budget_check is False and energy_code == 1 and energy_check is False
    record(14, ok, f"clean archive passes: {clean_ok}; budget +1 -> exit {budget_code}; "
                   f"energy +1e-3 at step {k - 1} -> exit {energy_code}")
    assert ok
