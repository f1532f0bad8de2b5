"""Shared fixture: a directory of real CLI artifacts.

The simulation package is driven as a subprocess, never imported; the
files it leaves behind are this package's whole contract.
"""

import shutil
import subprocess

import pytest

DOTSIM = shutil.which("dotsim")


def run_dotsim(args, out):
    cmd = [DOTSIM, *[str(a) for a in args], "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{' '.join(cmd)} failed:\n{proc.stderr}")


@pytest.fixture(scope="session")
def csv_dir(tmp_path_factory):
    """One artifact per experiment kind, sized to run in seconds."""
    if DOTSIM is None:
        pytest.skip("dotsim CLI not on PATH")
    root = tmp_path_factory.mktemp("artifacts")
    run_dotsim(["screen", "--tile-nm", 80, "--rho-min", 160,
                "--rho-max", 480, "--rho-steps", 3], root / "screen.csv")
    run_dotsim(["params", "--sites", 4, "--model", "image"],
               root / "params.csv")
    run_dotsim(["atom", "--sites", 6, "--t", 20, "--v0-min", 20,
                "--v0-max", 50, "--v0-steps", 4, "--levels", 3],
               root / "atom.csv")
    for sites in (6, 8):
        run_dotsim(["molecule", "--sites", sites, "--t", 40, "--v0", 200,
                    "--ee-model", "image", "--r-min", 2, "--r-max", 4,
                    "--r-steps", 2], root / f"molecule_n{sites}.csv")
    run_dotsim(["occupation", "--sites", 6, "--t", 40, "--v0", 200,
                "--ee-model", "image", "--r-min", 2, "--r-max", 4,
                "--r-steps", 2], root / "occupation.csv")
    # a kind the figure set deliberately has no recipe for
    run_dotsim(["stability", "simulate", "--points", 9],
               root / "stability.csv")
    return root
