"""Run the orbit and certification subcommands and print one line per report.

    python scripts/run_summary.py [OUT_DIR]
"""
import json
import sys
from pathlib import Path

from saddlecenter.cli import main

RUNS = [
    ["model", "info", "--model", "ham1", "--k=-1"],
    ["orbit", "p2", "--model", "ham1", "--k=-1", "--energies", "1e-3,1e-2,5e-2"],
    ["orbit", "p3", "--model", "ham1", "--energy", "0.01"],
    ["orbit", "homoclinic", "--model", "ham1", "--energy", "0.01"],
    ["certify", "liouville", "--alpha", "1", "--omega", "1", "--delta0", "0.05"],
    ["certify", "convexity", "--model", "ham1", "--exclusion", "0.05"],
    ["certify", "convexity", "--model", "ham2", "--b", "0.5", "--exclusion", "0.05"],
    ["certify", "plane", "--alpha", "1", "--omega", "1", "--energy", "0.01"],
    ["certify", "index", "--alpha", "1", "--omega", "1", "--energy", "0.01"],
]


def run(out_dir: str) -> int:
    worst = 0
    for i, argv in enumerate(RUNS):
        d = Path(out_dir) / f"{i:02d}_{argv[0]}_{argv[1]}"
        code = main(["--out-dir", str(d), *argv])
        worst = max(worst, code)
        rep = json.loads((d / f"{argv[0]}_{argv[1]}.json").read_text())
        print(f"[exit {code}] {' '.join(argv)}: ok={rep['ok']} in {rep['wall_time_s']} s")
    return worst


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "runs"))
