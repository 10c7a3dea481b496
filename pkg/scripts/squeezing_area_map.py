"""Optimized stability over squeezing and excess area at N = 1e4.

The ``alpha`` column marks the regime boundary (alpha = 5).
"""

from _run import output_dir, run_cli

CONFIG = """
[ensemble]
atom_count = 1e4
[map]
axis1 = area
axis1_start = 0 dB
axis1_stop = 30 dB
axis1_num = 61
axis2 = xi2
axis2_start = 0 dB
axis2_stop = -30 dB
axis2_num = 61
"""

if __name__ == "__main__":
    run_cli("map", CONFIG, output_dir(__doc__) / "squeezing_area_map.csv")
