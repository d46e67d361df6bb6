"""Five-unit ranking walk-through with four concomitants and induced ties.

Subject ID is ranked without ties (c = 1) and in ascending order; the three
cytological concomitants use c = 2, which groups scores {1,2}, {3,4}, ... into
one tied level. The importance weights are fixed rather than estimated.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import SUBJECT_ID
from .ranking import (TieStructure, averaged_matrix, concentration, discretize,
                      rank_with_ties, select_unit, strength_matrix, TIE_TOL)

UNITS = ("u11", "u21", "u31", "u41", "u51")
CONCOMITANTS = (SUBJECT_ID, "Uniformity of Cell Size", "Uniformity of Cell Shape", "Bare Nuclei")
VALUES = {
    SUBJECT_ID: (1033078, 1035283, 1016277, 1017122, 1044572),
    "Uniformity of Cell Size": (1, 1, 8, 10, 7),
    "Uniformity of Cell Shape": (1, 1, 8, 10, 5),
    "Bare Nuclei": (1, 1, 4, 10, 9),
}
TIES = (TieStructure(1.0), TieStructure(2.0), TieStructure(2.0), TieStructure(2.0))
ALPHA = (0.0468, 0.0453, 0.4537, 0.4542)
RANK = 2


@dataclass(frozen=True)
class ExampleReport:
    matrices: tuple[np.ndarray, ...]
    dbar: np.ndarray
    candidates: tuple[int, ...]
    gammas: dict[int, float]
    selected: int
    weights: np.ndarray

    def format(self) -> str:
        def mat(m):
            return "\n".join("  " + " ".join(f"{x:.4f}" for x in row) for row in m)

        lines = []
        for name, D in zip(CONCOMITANTS, self.matrices):
            lines.append(f"D[{name}]")
            lines.append(mat(D))
        lines.append("alpha = (" + ", ".join(f"{a:.4f}" for a in ALPHA) + ")")
        lines.append("Dbar")
        lines.append(mat(self.dbar))
        lines.append(f"rank r = {RANK}; column maximizers: "
                     + ", ".join(UNITS[h] for h in self.candidates))
        for h, g in self.gammas.items():
            lines.append(f"  gamma({UNITS[h]}) = {g:.4f}")
        lines.append(f"selected unit: {UNITS[self.selected]}")
        lines.append("weight vector = (" + ", ".join(f"{w:.4f}" for w in self.weights) + ")")
        return "\n".join(lines)


def run() -> ExampleReport:
    mats = []
    for name, tie in zip(CONCOMITANTS, TIES):
        levels = discretize(np.array(VALUES[name], dtype=float), tie)
        mats.append(strength_matrix(rank_with_ties(levels)))
    dbar = averaged_matrix(mats, ALPHA)
    col = dbar[:, RANK - 1]
    cand = tuple(int(h) for h in np.flatnonzero(col >= col.max() - TIE_TOL))
    gammas = {h: concentration(dbar[h], RANK) for h in cand}
    unit, w = select_unit(dbar, RANK)
    return ExampleReport(tuple(mats), dbar, cand, gammas, unit, w)
