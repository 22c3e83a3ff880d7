"""Write every figure and its JSON report into one directory.

    python scripts/make_figures.py [OUT_DIR]
"""
import sys

from saddlecenter.cli import main

FIGURES = [
    ["plot", "hill", "--model", "ham1", "--energies", "-0.01,0,0.01"],
    ["plot", "hill", "--model", "ham2", "--b", "0.5", "--energies", "0.16,0.1666667,0.17"],
    ["plot", "qp_projection", "--energies", "-0.01,0,0.01"],
    ["plot", "sphere", "--energy", "0.01", "--delta", "0.05"],
    ["plot", "plane3d", "--energy", "0.01"],
    ["plot", "foliation_slice", "--energy", "0.01"],
]


def run(out_dir: str) -> int:
    worst = 0
    for i, argv in enumerate(FIGURES):
        # one subdirectory per run so the two hill reports do not overwrite each other
        worst = max(worst, main(["--out-dir", f"{out_dir}/{i:02d}_{argv[1]}", *argv]))
    return worst


if __name__ == "__main__":
    sys.exit(run(sys.argv[1] if len(sys.argv) > 1 else "figures"))
