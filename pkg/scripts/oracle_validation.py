"""Exact simulation against the analytic phase error for N = 1e3.

Writes the full curves on [-pi, pi] and runs the tolerance check on
|phi| <= 0.2 pi (exit status 2 marks a tolerance breach).
"""

from _run import output_dir, run_cli

CONFIG = """
[ensemble]
atom_count = 1000
xi2 = 0 dB, -10 dB, -20 dB
area = 0 dB
[phase-error]
phi_start = -1
phi_stop = 1
phi_points = 101
oracle = true
[validate]
phi_max = 0.2
phi_points = 21
rtol = 0.1
"""

if __name__ == "__main__":
    out = output_dir(__doc__)
    run_cli("phase-error", CONFIG, out / "oracle_curves.csv")
    run_cli("validate", CONFIG, out / "oracle_validation.csv")
