"""Phase error and clock variance of a coherent clock with contrast loss, N = 1e4."""

from _run import output_dir, run_cli

BASE = """
[ensemble]
atom_count = 1e4
{field} = 1, 0.9, 0.8, 0.7, 0.6, 0.5
[phase-error]
phi_points = 801
[stability]
points = 200
"""

if __name__ == "__main__":
    out = output_dir(__doc__)
    for field in ("prep_contrast", "ramsey_contrast"):
        cfg = BASE.format(field=field)
        run_cli("phase-error", cfg, out / f"phase_error_{field}.csv")
        run_cli("stability", cfg, out / f"stability_{field}.csv")
