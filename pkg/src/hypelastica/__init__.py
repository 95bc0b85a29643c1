"""Elastic flow of curves in the hyperbolic plane and its singular limits.

Modules
-------
special    Jacobi elliptic functions and complete integrals.
geometry   Disk and half-plane models, sampled curves, curvature and energy.
elastica   Closed-form elastica profiles, frame integration, lambda-figure-eights.
flow       Time stepping of the elastic flow for closed and clamped curves.
analysis   Singular parameters, energy quantization, blow-ups, half-plane diagnostics.
verify     Invariant checks over stored runs.
fileio     Curve files, run archives and SVG output.
cli        Command-line entry point.
"""

__version__ = "0.1.0"

from . import analysis, elastica, fileio, flow, geometry, special, verify  # noqa: E402,F401
