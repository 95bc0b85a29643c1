"""Command-line interface: ``hypelastica {simulate,elastica,blowup,verify,plot}``.

Outputs go to ``--out`` when given, else to ``$HYPELASTICA_OUT/<name>``, else
to ``./<name>``.  Exit status: 0 success, 1 runtime or I/O failure, 2 usage.
"""

import argparse
import json
import logging
import os
from pathlib import Path
import sys

import numpy as np

from . import analysis as an
from . import elastica as el
from . import fileio as fio
from . import flow as fl
from . import geometry as geo
from . import verify as vf

OUT_ENV = "HYPELASTICA_OUT"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("hypelastica")


class UsageError(ValueError):
    pass


def output_path(arg, default_name):
    if arg:
        return Path(arg)
    base = os.environ.get(OUT_ENV)
    return Path(base) / default_name if base else Path(default_name)


def _dump(obj):
    return json.dumps(obj, indent=1, sort_keys=True, default=fio._json_default) + "\n"


# ---------------------------------------------------------------------------
# initial data


def symmetric_clamped_data(curve):
    """Clamped data of an open curve, made exactly (S2')-symmetric."""
    d = fl.ClampedData.from_curve(curve)
    p = 0.5 * (np.asarray(d.start) + np.asarray(d.end) * [-1.0, 1.0])
    t = 0.5 * (np.asarray(d.tangent_start) + np.asarray(d.tangent_end) * [1.0, -1.0])
    t /= np.hypot(*t)
    return fl.ClampedData(tuple(p), (-p[0], p[1]), tuple(t), (t[0], -t[1]))


def resolve_initial(text, n):
    """Parse ``--initial`` into (curve, bc, clamped_data, symmetries)."""
    kind, sep, value = text.partition(":")
    if not sep or not value:
        raise UsageError(f"--initial expects KIND:VALUE, got {text!r}")
    if kind == "lambda-eight":
        try:
            lam = float(value)
        except ValueError:
            raise UsageError(f"lambda must be a number, got {value!r}") from None
        return el.construct_lambda_figure_eight(lam, n_nodes=n), geo.CLOSED, None, ("S1", "S2")
    if kind == "clamped-symmetric":
        if value == "preset":
            curve = fl.vertically_clamped_curve(n=n)
            data = fl.ClampedData((0.0, 0.0), (0.0, 0.0), (0.0, -1.0), (0.0, 1.0))
        else:
            curve = fio.read_curve_csv(value)
            if curve.closed:
                raise UsageError(f"{value}: clamped initial data must be an open curve")
            data = symmetric_clamped_data(curve)
            curve = curve.with_nodes(fl.impose_clamped(curve.nodes, data))
        return curve, "clamped", data, ("S2prime",)
    if kind == "file":
        curve = fio.read_curve_csv(value)
        if curve.model != geo.DISK:
            curve = geo.to_model(curve, geo.DISK)
        if curve.closed:
            return curve, geo.CLOSED, None, ()
        return curve, "clamped", fl.ClampedData.from_curve(curve), ()
    raise UsageError(f"unknown initial data kind {kind!r}")


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    curve, bc, data, syms = resolve_initial(args.initial, args.n)
    if args.symmetries is not None:
        syms = tuple(s for s in args.symmetries.split(",") if s)
    config = fl.FlowConfig(
        n_nodes=args.n, dt_initial=args.dt_initial, dt_policy=args.dt_policy, t_end=args.t_end,
        bc=bc, clamped_data=data, reparam_every=args.reparam_every, singular_eps=args.singular_eps,
        frame_every=args.frame_every, scheme=args.scheme, dt_max=args.dt_max,
        dt_growth=args.dt_growth, max_steps=args.max_steps, symmetries=syms,
        reparam_speed=args.reparam_speed, reparam_weight=args.reparam_weight,
        equivariant=bool(syms) and not args.no_equivariant,
    )
    run = fl.run(config, curve)
    rep = an.quantization_report(run)
    reports = {"quantization": vf.quantization_digest(rep)}
    out = output_path(args.out, "run")
    fio.write_archive(run, out, reports, provenance={"seed": args.seed})
    print(_dump({"archive": str(out), "termination": run.termination, "steps": run.stats["steps"],
                 "t": run.frames[-1].t, "initial_energy": run.frames[0].energy,
                 "final_energy": run.frames[-1].energy, "m": rep.m,
                 "singular_params": rep.singular_params}), end="")
    return EXIT_FAIL if run.termination == fl.STEP_FAILURE else EXIT_OK


def cmd_elastica(args):
    out = output_path(args.out, "elastica")
    summary = {}
    curves = []
    if args.kind == "asymptotic":
        s = np.linspace(-args.extent, args.extent, args.n)
        c = geo.SampledCurve(el.asymptotically_geodesic_disk(s), topology=geo.OPEN, domain=(-1.0, 1.0))
        fio.write_curve_csv(c, out / "asymptotically_geodesic.csv")
        curves.append(c)
        summary["asymptotically_geodesic"] = {"energy": geo.elastic_energy(c),
                                              "closed_form": el.energy_asymptotically_geodesic(0.0),
                                              "extent": args.extent}
        for i, h in enumerate((0.25, 0.5, 1.0, 2.0)):
            x = np.linspace(1e-3, np.pi - 1e-3, args.n)
            u = geo.SampledCurve(el.geodesic_semicircle(h, x), model=geo.HALF_PLANE,
                                 topology=geo.OPEN, domain=(-1.0, 1.0))
            g = geo.to_model(u, geo.DISK)
            fio.write_curve_csv(g, out / f"geodesic_{i}.csv")
            curves.append(g)
    else:
        for lam in args.lam:
            c = el.construct_lambda_figure_eight(lam, n_nodes=args.n)
            fio.write_curve_csv(c, out / f"figure_eight_{lam!r}.csv")
            curves.append(c)
            summary[f"lambda={lam!r}"] = {"energy": geo.elastic_energy(c),
                                          "closed_form": el.figure_eight_energy(lam),
                                          "modulus": c.meta["modulus"]}
    fio.write_text(out / "figure.svg", fio.curve_svg(curves))
    fio.write_text(out / "summary.json", _dump(summary))
    print(_dump(summary), end="")
    return EXIT_OK


def cmd_blowup(args):
    arch = fio.read_archive(args.run)
    params = args.x if args.x else an.detect_singular_params(arch.run)
    out = output_path(args.out, "blowup")
    metrics = {}
    for j, x in enumerate(params):
        b = an.blow_up(arch.run, x, delta=args.delta)
        fio.write_curve_csv(b.rescaled_curve, out / f"rescaled_{j}.csv")
        metrics[f"{x!r}"] = {"n_j": b.n_j, "interior_singular_params": b.interior_singular_params,
                             "fit_distances": b.fit_distances,
                             "containment_excess": b.containment_excess,
                             "transversality": an.blowup_transversality(b)}
    fio.write_text(out / "blowup.json", _dump(metrics))
    print(_dump(metrics), end="")
    return EXIT_OK


def cmd_verify(args):
    report = {"archives": {}}
    for path in args.runs:
        arch = fio.read_archive(path)
        report["archives"][str(path)] = vf.verify_run(arch.run, arch.summary)
    if args.random:
        rng = np.random.default_rng(args.seed)
        curves = []
        for _ in range(args.random):
            curves += [an.random_closed_curve(rng), an.random_profile_curve(rng)]
        report["random_curves"] = vf.check_inequalities(curves)
    if args.model_checks:
        report["model_checks"] = vf.model_checks()
    parts = [a["pass"] for a in report["archives"].values()]
    parts += [report[k]["pass"] is not False for k in ("random_curves",) if k in report]
    parts += [c["pass"] is not False for c in report.get("model_checks", {}).values()]
    report["pass"] = all(parts)
    text = _dump(report)
    if args.out:
        fio.write_text(args.out, text)
    print(text, end="")
    return EXIT_OK if report["pass"] else EXIT_FAIL


def cmd_plot(args):
    src = Path(args.input)
    curves, overlay = [], []
    if src.is_dir():
        arch = fio.read_archive(src)
        curves = [arch.run.frames[-1].curve]
        if args.overlay:
            overlay = [f.curve for f in arch.run.frames[:-1]]
    else:
        curves = [c for c in [fio.read_curve_csv(src)] if c is not None]
    out = output_path(args.out, "plot.svg")
    fio.write_text(out, fio.curve_svg(curves, overlay, size=args.size))
    print(str(out))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    p = argparse.ArgumentParser(prog="hypelastica", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for randomized checks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = fl.FlowConfig()
    s = sub.add_parser("simulate", help="run the elastic flow and write an archive")
    s.add_argument("--initial", required=True,
                   help="lambda-eight:LAMBDA | clamped-symmetric:FILE|preset | file:PATH")
    s.add_argument("--t-end", type=float, required=True)
    s.add_argument("--n", type=int, default=d.n_nodes)
    s.add_argument("--dt-initial", type=float, default=1e-3)
    s.add_argument("--dt-policy", choices=[fl.FIXED, fl.ADAPTIVE], default=d.dt_policy)
    s.add_argument("--dt-max", type=float, default=100.0)
    s.add_argument("--dt-growth", type=float, default=d.dt_growth)
    s.add_argument("--max-steps", type=int, default=d.max_steps)
    s.add_argument("--reparam-every", type=int, default=d.reparam_every)
    s.add_argument("--reparam-speed", choices=["euclidean", "hyperbolic", "curvature"],
                   default=d.reparam_speed)
    s.add_argument("--reparam-weight", type=float, default=d.reparam_weight)
    s.add_argument("--singular-eps", type=float, default=d.singular_eps)
    s.add_argument("--frame-every", type=int, default=50)
    s.add_argument("--scheme", choices=["explicit", "linearly_implicit"], default=d.scheme)
    s.add_argument("--symmetries", default=None, help="comma list of S1,S2,S2prime")
    s.add_argument("--no-equivariant", action="store_true",
                   help="do not average the step over the symmetry group")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("elastica", help="write elastica curves and an SVG overlay")
    e.add_argument("--kind", choices=["asymptotic", "figure-eight"], default="asymptotic")
    e.add_argument("--lambda", dest="lam", type=float, nargs="+", default=[0.5])
    e.add_argument("--n", type=int, default=512)
    e.add_argument("--extent", type=float, default=20.0, help="arc-length half range (asymptotic)")
    e.add_argument("--out")
    e.set_defaults(func=cmd_elastica)

    b = sub.add_parser("blowup", help="rescale a run near its singular parameters")
    b.add_argument("run")
    b.add_argument("--x", type=float, nargs="+", help="singular parameters (default: detected)")
    b.add_argument("--delta", type=float, default=an.WINDOW_DELTA)
    b.add_argument("--out")
    b.set_defaults(func=cmd_blowup)

    v = sub.add_parser("verify", help="check run archives against the flow and analysis invariants")
    v.add_argument("runs", nargs="*")
    v.add_argument("--random", type=int, default=0, help="also test this many random curves")
    v.add_argument("--model-checks", action="store_true",
                   help="also run stationary-point and convergence-order checks")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("plot", help="SVG of a curve file or a run archive")
    q.add_argument("input")
    q.add_argument("--overlay", action="store_true", help="draw earlier frames faded")
    q.add_argument("--size", type=int, default=480)
    q.add_argument("--out")
    q.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hypelastica: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, fio.ArchiveError) as exc:
        print(f"hypelastica: I/O error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, RuntimeError, an.WindowError) as exc:
        print(f"hypelastica: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
