"""Readout distributions P(S_z | phi) for a coherent and a -20 dB squeezed state, N = 1e3."""

import numpy as np

from _run import output_dir
from squeezeclock.oracle import build_css, build_state, conditional_sz_distribution
from squeezeclock.records import csv_text

if __name__ == "__main__":
    out = output_dir(__doc__)
    phi = np.linspace(-np.pi, np.pi, 121)
    for name, state in (("coherent", build_css(1000)), ("squeezed", build_state(1000, 0.01, 100.0))):
        d = conditional_sz_distribution(state, phi)
        rows = [(p / np.pi, m, d.prob[i, j]) for j, p in enumerate(phi)
                for i, m in enumerate(d.m) if d.prob[i, j] > 1e-12]
        path = out / f"readout_{name}.csv"
        path.write_text(csv_text(["phi_over_pi", "sz", "probability"], rows), encoding="utf-8")
        print(f"readout: {path}")
