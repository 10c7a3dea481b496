"""Gain over a coherent clock versus excess area and contrast, N = 5e5, -20.1 dB.

Preparation contrast loss is compared with a perfect coherent clock;
Ramsey-time contrast loss with a coherent clock sharing that contrast.
"""

from _run import output_dir, run_cli

BASE = """
[ensemble]
atom_count = 5e5
xi2 = -20.1 dB
[map]
axis1 = {axis}
axis1_start = 0.5
axis1_stop = 1
axis1_num = 51
axis1_scale = linear
axis2 = area
axis2_start = 0 dB
axis2_stop = 25 dB
axis2_num = 51
reference = {reference}
"""

if __name__ == "__main__":
    out = output_dir(__doc__)
    run_cli("map", BASE.format(axis="prep_contrast", reference="perfect"),
            out / "split_contrast_prep.csv")
    run_cli("map", BASE.format(axis="ramsey_contrast", reference="matched"),
            out / "split_contrast_ramsey.csv")
    run_cli("optimize", """
[ensemble]
atom_count = 5e5
xi2 = -20.1 dB
area = 19 dB
prep_contrast = 0.962
""", out / "measured_state_prep_loss.json", fmt="json")
    run_cli("optimize", """
[ensemble]
atom_count = 5e5
xi2 = -20.1 dB
area = 19 dB
ramsey_contrast = 0.962
[optimize]
reference = matched
""", out / "measured_state_ramsey_loss.json", fmt="json")
