"""
Driving the command line
========================

The same runs through ``python -m quadopt``: a preset simulation with its
JSON sidecar, a replay from that sidecar, and a small parallel sweep.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path


def quadopt(*args):
    cmd = [sys.executable, "-m", "quadopt", *map(str, args)]
    done = subprocess.run(cmd, capture_output=True, text=True)
    print("$ quadopt", " ".join(map(str, args)), f"-> exit {done.returncode}")
    if done.stdout:
        print(done.stdout.rstrip()[:600])
    if done.stderr:
        print(done.stderr.rstrip())
    return done.returncode


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    quadopt("list-presets")
    quadopt("simulate", "--preset", "fig2b", "--t-end", 10, "--n-samples", 101, "--out", tmp / "fig2b.csv")
    print(json.dumps(json.loads((tmp / "fig2b.json").read_text())["integrator"], indent=1))
    quadopt("simulate", "--replay", tmp / "fig2b.json", "--out", tmp / "again.csv")
    print("replay identical:", (tmp / "fig2b.csv").read_bytes() == (tmp / "again.csv").read_bytes())
    quadopt("sweep", "--preset", "fig6a", "--t-end", 10, "--n-samples", 101, "--param", "gamma_a",
            "--values", "0.01,0.1", "--out", tmp / "sweep", "--workers", 2)
    quadopt("compare", tmp / "sweep" / "gamma_a_0.01.csv", tmp / "sweep" / "gamma_a_0.1.csv",
            "--columns", "n_a,n_b", "--rel-tol", 0.05)
    quadopt("simulate", "--t-end", 0)
