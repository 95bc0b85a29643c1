"""Curve files, run archives and SVG figures.

Floats are written with ``repr``, which is the shortest string that parses
back to the same double, so every file round-trips bit-exactly.  Nothing
time- or host-dependent goes into the curve, frame, step or summary files;
the wall time lives in a separate provenance file.
"""

from dataclasses import asdict, dataclass, field
import csv
import json
from pathlib import Path

import numpy as np

from . import flow as fl
from . import geometry as geo

__all__ = [
    "FORMAT", "RunArchive", "ArchiveError",
    "write_curve_csv", "read_curve_csv", "write_archive", "read_archive",
    "curve_svg", "write_text",
]

FORMAT = "hypelastica-run/1"
CURVE_HEADER = ("model", "topology", "n")
FRAME_HEADER = ("t", "node", "x", "y", "kappa")
STEP_COLUMNS = ("t", "dt", "energy", "grad_norm_sq", "dt_stable", "remeshed",
                "symmetry", "origin", "clamp_position", "clamp_tangent")
# closed curves live on the parameter circle [-2, 2), open ones on [-1, 1]
CANONICAL_DOMAIN = {geo.CLOSED: (-2.0, 2.0), geo.OPEN: (-1.0, 1.0)}

SUMMARY_FILE = "summary.json"
FRAMES_FILE = "frames.csv"
STEPS_FILE = "steps.csv"
PROVENANCE_FILE = "provenance.json"


class ArchiveError(OSError):
    """Unreadable or inconsistent archive; the message names the file."""


def _f(x):
    return repr(float(x))


def write_text(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# curves


def curve_csv_text(curve):
    lines = [",".join(CURVE_HEADER), f"{curve.model},{curve.topology},{curve.n}", "index,x,y"]
    lines += [f"{k},{_f(x)},{_f(y)}" for k, (x, y) in enumerate(curve.nodes)]
    return "\n".join(lines) + "\n"


def write_curve_csv(curve, path):
    return write_text(path, curve_csv_text(curve))


def read_curve_csv(path):
    """Read a curve file; the domain is the canonical one for its topology.

    A file with zero nodes is valid and reads as ``None``.
    """
    path = Path(path)
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ArchiveError(f"{path}: {exc.strerror or exc}") from exc
    try:
        if tuple(rows[0]) != CURVE_HEADER or tuple(rows[2]) != ("index", "x", "y"):
            raise ValueError("bad header")
        model, topology, n = rows[1][0], rows[1][1], int(rows[1][2])
        body = rows[3:]
        if n == 0 and not body:
            return None
        if len(body) != n:
            raise ValueError(f"expected {n} nodes, found {len(body)}")
        if [int(r[0]) for r in body] != list(range(n)):
            raise ValueError("node indices are not 0..n-1")
        nodes = np.array([[float(r[1]), float(r[2])] for r in body], dtype=float).reshape(n, 2)
        return geo.SampledCurve(nodes, model=model, topology=topology,
                                domain=CANONICAL_DOMAIN[topology])
    except (ValueError, IndexError, KeyError) as exc:
        raise ArchiveError(f"{path}: malformed curve file ({exc})") from exc


# ---------------------------------------------------------------------------
# run archives


@dataclass
class RunArchive:
    summary: dict
    frames_path: Path
    steps_path: Path
    provenance: dict = field(default_factory=dict)
    run: fl.FlowRun = None
    directory: Path = None


def _config_to_dict(config):
    d = asdict(config)
    d["symmetries"] = list(config.symmetries)
    if config.clamped_data is not None:
        d["clamped_data"] = {k: [float(v) for v in val] for k, val in asdict(config.clamped_data).items()}
    return d


def _config_from_dict(d):
    d = dict(d)
    d["symmetries"] = tuple(d.get("symmetries", ()))
    if d.get("clamped_data") is not None:
        d["clamped_data"] = fl.ClampedData(**{k: tuple(v) for k, v in d["clamped_data"].items()})
    return fl.FlowConfig(**d)


def _frame_record(frame):
    return {"t": frame.t, "energy": frame.energy, "hyp_length": frame.hyp_length,
            "euc_length": frame.euc_length, "grad_norm_sq": frame.grad_norm_sq,
            "max_abs": frame.max_abs, "symmetry_residuals": dict(frame.symmetry_residuals),
            "step": frame.step, "dt": frame.dt}


def summary_dict(run, reports=None):
    first = run.frames[0].curve
    return {
        "format": FORMAT,
        "config": _config_to_dict(run.config),
        "curve": {"model": first.model, "topology": first.topology, "n": first.n,
                  "domain": list(first.domain)},
        "termination": run.termination,
        "stats": run.stats,
        "initial_energy": run.frames[0].energy,
        "final_energy": run.frames[-1].energy,
        "frames": [_frame_record(f) for f in run.frames],
        "reports": reports or {},
    }


def _json_text(obj):
    return json.dumps(obj, indent=1, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def frames_csv_text(run):
    lines = [",".join(FRAME_HEADER)]
    for frame in run.frames:
        kappa = geo.curve_geometry(frame.curve).kappa
        t = _f(frame.t)
        lines += [f"{t},{k},{_f(x)},{_f(y)},{_f(kap)}"
                  for k, ((x, y), kap) in enumerate(zip(frame.curve.nodes, kappa))]
    return "\n".join(lines) + "\n"


def steps_csv_text(run):
    h = run.history
    n = len(run.energies)
    cols = {"t": run.times, "energy": run.energies}
    for name in STEP_COLUMNS:
        if name not in cols:
            cols[name] = h.get(name, np.zeros(n))
    lines = ["step," + ",".join(STEP_COLUMNS)]
    for i in range(n):
        vals = [str(int(bool(cols[c][i]))) if c == "remeshed" else _f(cols[c][i]) for c in STEP_COLUMNS]
        lines.append(f"{i}," + ",".join(vals))
    return "\n".join(lines) + "\n"


def write_archive(run, directory, reports=None, provenance=None):
    """Write summary, frames, steps and provenance files into ``directory``."""
    directory = Path(directory)
    summary = summary_dict(run, reports)
    write_text(directory / SUMMARY_FILE, _json_text(summary))
    write_text(directory / FRAMES_FILE, frames_csv_text(run))
    write_text(directory / STEPS_FILE, steps_csv_text(run))
    from . import __version__

    prov = {"tool": "hypelastica", "version": __version__, "wall_time": run.wall_time}
    prov.update(provenance or {})
    write_text(directory / PROVENANCE_FILE, _json_text(prov))
    return RunArchive(summary, directory / FRAMES_FILE, directory / STEPS_FILE, prov, run, directory)


def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ArchiveError(f"{path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ArchiveError(f"{path}: malformed JSON ({exc})") from exc


def _read_csv(path, header):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ArchiveError(f"{path}: {exc.strerror or exc}") from exc
    if not rows or tuple(rows[0]) != tuple(header):
        raise ArchiveError(f"{path}: expected header {','.join(header)}")
    return rows[1:]


def read_archive(directory):
    """Rebuild the archived :class:`~hypelastica.flow.FlowRun` from its files."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ArchiveError(f"{directory}: not an archive directory")
    summary = _read_json(directory / SUMMARY_FILE)
    if summary.get("format") != FORMAT:
        raise ArchiveError(f"{directory / SUMMARY_FILE}: unknown format {summary.get('format')!r}")
    prov_path = directory / PROVENANCE_FILE
    provenance = _read_json(prov_path) if prov_path.exists() else {}
    frames_path, steps_path = directory / FRAMES_FILE, directory / STEPS_FILE
    try:
        config = _config_from_dict(summary["config"])
        meta = summary["curve"]
        rows = _read_csv(frames_path, FRAME_HEADER)
        n = int(meta["n"])
        if len(rows) % n:
            raise ValueError(f"{len(rows)} rows is not a multiple of {n} nodes")
        data = np.array([[float(v) for v in r] for r in rows]).reshape(-1, n, 5)
        records = summary["frames"]
        if len(records) != len(data):
            raise ValueError(f"summary lists {len(records)} frames, file holds {len(data)}")
        frames = []
        for rec, block in zip(records, data):
            curve = geo.SampledCurve(block[:, 2:4], model=meta["model"], topology=meta["topology"],
                                     domain=tuple(meta["domain"]))
            frames.append(fl.FlowFrame(
                t=rec["t"], curve=curve, energy=rec["energy"], hyp_length=rec["hyp_length"],
                euc_length=rec["euc_length"], grad_norm_sq=rec["grad_norm_sq"],
                max_abs=rec["max_abs"], symmetry_residuals=dict(rec["symmetry_residuals"]),
                step=rec["step"], dt=rec["dt"]))
        steps = _read_csv(steps_path, ("step",) + STEP_COLUMNS)
        table = np.array([[float(v) for v in r[1:]] for r in steps]).reshape(-1, len(STEP_COLUMNS))
    except ArchiveError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise ArchiveError(f"{directory}: inconsistent archive ({exc})") from exc
    cols = {name: table[:, i] for i, name in enumerate(STEP_COLUMNS)}
    history = {k: v for k, v in cols.items() if k not in ("t", "energy")}
    history["remeshed"] = history["remeshed"].astype(bool)
    run = fl.FlowRun(config=config, frames=frames, termination=summary["termination"],
                     energies=cols["energy"], times=cols["t"],
                     wall_time=provenance.get("wall_time", 0.0),
                     stats=summary.get("stats", {}), history=history)
    return RunArchive(summary, frames_path, steps_path, provenance, run, directory)


# ---------------------------------------------------------------------------
# SVG


def _svg_points(nodes):
    return " ".join(f"{x:.5f},{-y:.5f}" for x, y in nodes)


def curve_svg(curves=(), overlay=(), size=480, stroke=0.006, colors=None):
    """SVG of the unit disk with curves drawn on top.

    ``overlay`` is a sequence of curves (for instance successive frames of a
    run) drawn first with opacity rising from 0.15 to 0.6; ``curves`` are then
    drawn opaque.  Half-plane curves are mapped into the disk.  The output
    depends only on the inputs.
    """
    palette = colors or ["#1f4e9c", "#b22222", "#2e7d32", "#6a1b9a", "#ef6c00"]
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        'viewBox="-1.05 -1.05 2.1 2.1">',
        f'<circle cx="0" cy="0" r="1" fill="none" stroke="#000000" stroke-width="{stroke:.4f}"/>',
    ]

    def nodes_of(c):
        if c.model == geo.HALF_PLANE:
            return geo.half_to_disk(c.nodes, relaxed=True)
        return c.nodes

    overlay = list(overlay)
    for i, c in enumerate(overlay):
        alpha = 0.15 + 0.45 * (i / (len(overlay) - 1) if len(overlay) > 1 else 1.0)
        tag = "polygon" if c.closed else "polyline"
        out.append(f'<{tag} points="{_svg_points(nodes_of(c))}" fill="none" stroke="#555555" '
                   f'stroke-opacity="{alpha:.3f}" stroke-width="{stroke:.4f}"/>')
    for i, c in enumerate(curves):
        tag = "polygon" if c.closed else "polyline"
        out.append(f'<{tag} points="{_svg_points(nodes_of(c))}" fill="none" '
                   f'stroke="{palette[i % len(palette)]}" stroke-width="{stroke:.4f}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
