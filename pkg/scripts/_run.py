"""Shared helper: run one CLI subcommand from inline config text."""

import argparse
import pathlib
import sys

from squeezeclock.cli import run


def output_dir(description: str) -> pathlib.Path:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--out-dir", default="results", help="directory for CSV/JSON output")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
    args = parser.parse_args()
    path = pathlib.Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    output_dir.jobs = args.jobs
    return path


def run_cli(subcommand: str, config: str, out: pathlib.Path, fmt: str = "csv", extra=()) -> int:
    """Write ``config`` next to ``out`` and run the subcommand; exits on hard errors."""
    cfg = out.with_suffix(".ini")
    cfg.write_text(config.strip() + "\n", encoding="utf-8")
    code = run([subcommand, "--config", str(cfg), "--out", str(out), "--format", fmt,
                "--jobs", str(getattr(output_dir, "jobs", 1)), "--canonical", *extra])
    print(f"{subcommand}: {out} (exit {code})")
    if code not in (0, 2):
        sys.exit(code)
    return code
