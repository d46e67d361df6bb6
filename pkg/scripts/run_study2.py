"""Reproduce the PROS runs with and without induced ties (H = 2, 3, 6; nH = 54).

    python scripts/run_study2.py [--replicates 50000] [--workers 4] [--out results/study2]

Any other flag of ``prossim study`` (--seed, --missing, --data) passes through.
"""
import sys
from pathlib import Path

from prossim.cli import main

DATA = Path(__file__).resolve().parents[1] / "data" / "breast-cancer-wisconsin.data"

if __name__ == "__main__":
    args = sys.argv[1:]
    defaults = {"--data": str(DATA), "--replicates": "50000", "--out": "results/study2"}
    for flag, value in defaults.items():
        if flag not in args:
            args += [flag, value]
    sys.exit(main(["study", "study2", *args]))
