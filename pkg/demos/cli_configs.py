"""
The command line on the bundled configs
=======================================

Each run below is equivalent to a shell invocation such as

    reltori verify --config configs/torus3.toml --out demo_out/torus3

Outputs go to a temporary directory.

Run with ``python3 demos/cli_configs.py``.
"""

import json
import tempfile
from pathlib import Path

from reltori.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
out = Path(tempfile.mkdtemp(prefix="reltori-demo-"))

# Exit code 0: the hypotheses hold. Exit code 1: the lift about e_x does
# not commute with the drift about e_z.
print("exit", main(["check", "--config", str(CONFIGS / "so3_resonant.toml")]))
print("exit", main(["check", "--config", str(CONFIGS / "noncommuting.toml")]))

print("exit", main(["reconstruct", "--config", str(CONFIGS / "so3_generic.toml"), "--out", str(out / "generic")]))
report = json.loads((out / "generic" / "report.json").read_text())
print("notes:", report["notes"])

print("exit", main(["verify", "--config", str(CONFIGS / "torus3.toml"), "--out", str(out / "torus3")]))
csv = (out / "torus3" / "trajectory.csv").read_text().splitlines()
print(csv[0])
print(csv[1])

main(["snf", str(CONFIGS / "matrix.txt")])
print("outputs in", out)
