"""Phase error versus phase deviation and clock variance versus Ramsey time.

Two families at N = 1e4: unitary squeezing levels, and a fixed -15 dB
squeezing with growing excess area.
"""

from _run import output_dir, run_cli

UNITARY = """
[ensemble]
atom_count = 1e4
xi2 = 0 dB, -5 dB, -10 dB, -15 dB, -20 dB, -25 dB
area = 0 dB
[phase-error]
phi_start = -1
phi_stop = 1
phi_points = 801
[stability]
gamma_tau_start = 1e-3
gamma_tau_stop = 1
points = 200
"""

EXCESS_AREA = UNITARY.replace(
    "xi2 = 0 dB, -5 dB, -10 dB, -15 dB, -20 dB, -25 dB\narea = 0 dB",
    "xi2 = -15 dB\narea = 0 dB, 5 dB, 10 dB, 15 dB, 20 dB, 25 dB, 30 dB")

if __name__ == "__main__":
    out = output_dir(__doc__)
    for name, cfg in (("unitary", UNITARY), ("excess_area", EXCESS_AREA)):
        run_cli("phase-error", cfg, out / f"phase_error_{name}.csv")
        run_cli("stability", cfg, out / f"stability_{name}.csv")
