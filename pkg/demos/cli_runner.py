"""Running an experiment through the command-line entry point and reading the report."""

import json
import tempfile
from pathlib import Path

from treecover.cli import main

with tempfile.TemporaryDirectory() as out:
    code = main(["negcorr", "--depth", "6", "--replicas", "20000", "--seed", "42", "--out", out])
    report = json.loads((Path(out) / "negcorr.json").read_text())
    print("exit code", code)
    print("effective params:", report["params"])
    print("tests:", [(t["name"], t["pass"]) for t in report["tests"]])
