"""Driving the command-line entry point from Python: CSV, manifest and SVG outputs."""

import pathlib
import tempfile

from cvnecert import cli

out = pathlib.Path(tempfile.mkdtemp()) / "chsh.csv"
code = cli.main(["sweep", "--operator", "CHSH", "--H-grid", "0:-1:5", "--method", "2", "--out", str(out), "--svg"])
print("exit code", code)
print(out.read_text())
print(out.with_name(out.name + ".manifest").read_text())
print("svg bytes:", len(out.with_suffix(".svg").read_text()))

# the same command with the same seed writes identical bytes
again = out.with_name("again.csv")
cli.main(["sweep", "--operator", "CHSH", "--H-grid", "0:-1:5", "--method", "2", "--out", str(again)])
print("deterministic:", again.read_bytes() == out.read_bytes())

# visibility mode: certified entropy at the Bell value v * T
cli.main(["sweep", "--operator", "CHSH", "--v-grid", "0.8,0.9,1.0", "--method", "2"])
