"""Stability gain for measured squeezed states, with fixed-area extrapolation.

The bundled table holds one measured state; append rows (label, atom_count,
xi2_db, area_db) for further experiments.
"""

from _run import output_dir, run_cli

TABLE = "label,atom_count,xi2_db,area_db\nmeasurement_squeezing_5e5,5e5,-20.1,19\n"

CONFIG = """
[experiments]
extrapolate_to = -30 dB
extrapolate_points = 20
"""

if __name__ == "__main__":
    out = output_dir(__doc__)
    table = out / "experiment_table.csv"
    if not table.exists():
        table.write_text(TABLE, encoding="utf-8")
    run_cli("experiments", CONFIG, out / "experiment_gains.csv", extra=("--table", str(table)))
