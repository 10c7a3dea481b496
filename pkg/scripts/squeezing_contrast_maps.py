"""Optimized stability over unitary squeezing and each contrast, N = 1e4.

Relative to a coherent clock with perfect contrast.
"""

from _run import output_dir, run_cli

BASE = """
[ensemble]
atom_count = 1e4
[map]
axis1 = {axis}
axis1_start = 0.3
axis1_stop = 1
axis1_num = 36
axis1_scale = linear
axis2 = xi2
axis2_start = 0 dB
axis2_stop = -30 dB
axis2_num = 61
"""

if __name__ == "__main__":
    out = output_dir(__doc__)
    for axis in ("prep_contrast", "ramsey_contrast"):
        run_cli("map", BASE.format(axis=axis), out / f"squeezing_{axis}_map.csv")
