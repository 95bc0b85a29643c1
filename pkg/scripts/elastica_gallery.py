"""Free elastica in the disk: the asymptotically geodesic one and the lambda-figure-eights.

Run:  python scripts/elastica_gallery.py

Prints energies next to their closed forms and writes gallery.svg under
$HYPELASTICA_OUT (default ./out).
"""
import os
from pathlib import Path

import numpy as np

from hypelastica import elastica as el
from hypelastica import fileio as fio
from hypelastica import geometry as geo


def main():
    out = Path(os.environ.get("HYPELASTICA_OUT", "out")) / "gallery"

    # kappa = 2 sech(s): both ends run into the same boundary point.
    s = np.linspace(-20.0, 20.0, 4001)
    bubble = geo.SampledCurve(el.asymptotically_geodesic_disk(s), topology=geo.OPEN, domain=(-20.0, 20.0))
    print(f"asymptotically geodesic: E = {geo.elastic_energy(bubble):.8f}, closed form 8")

    # Families at lambda = 0.5 by peak curvature; below kappa0^2 = lambda + 2 there is none.
    for k2 in (1.0, 2.5, 4.0, 5.0, 8.0):
        try:
            print(f"lambda = 0.5, kappa0^2 = {k2}: {el.classify(0.5, k2).family}")
        except el.NoElasticaError as exc:
            print(f"lambda = 0.5, kappa0^2 = {k2}: {exc}")

    # Figure-eights approach two stacked bubbles as lambda decreases.
    curves = [bubble]
    for lam in (1.0, 0.5, 0.2, 0.05):
        c = el.construct_lambda_figure_eight(lam, n_nodes=512)
        curves.append(c)
        print(f"figure-eight lambda = {lam}: E = {geo.elastic_energy(c):.6f} "
              f"(closed form {el.figure_eight_energy(lam):.6f}), modulus {c.meta['modulus']:.6f}")

    fio.write_text(out / "gallery.svg", fio.curve_svg(curves))
    print(f"wrote {out / 'gallery.svg'}")


if __name__ == "__main__":
    main()
