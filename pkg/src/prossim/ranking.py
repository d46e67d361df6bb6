"""Tied judgment ranking and strength-of-weight matrices.

Units are indexed from 0; rank positions run from 1 to H. The array functions
(`tie_blocks`, `strength_matrices`, `select_units`) accept any number of
leading batch dimensions so the Monte Carlo kernel and the single-set API
share one implementation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._util import round_half_away

TIE_TOL = 1e-9


@dataclass(frozen=True)
class TieStructure:
    """Discretization divisor ``c``: values are replaced by round(x / c)."""

    c: float = 1.0
    enabled: bool = True

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c < 1:
            raise ValueError(f"tie divisor c must be >= 1, got {self.c}")

    @property
    def divisor(self) -> float:
        return self.c if self.enabled else 1.0


@dataclass(frozen=True)
class RankAssignment:
    """Ordered tie groups of unit indices and the rank positions each unit holds."""

    groups: tuple[tuple[int, ...], ...]
    positions: tuple[frozenset[int], ...]

    @property
    def size(self) -> int:
        return len(self.positions)


def discretize(values, tie: TieStructure) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if not np.isfinite(values).all():
        raise ValueError("cannot discretize non-finite values")
    if tie.divisor == 1.0:
        return values.copy()
    return round_half_away(values / tie.divisor)


def tie_blocks(values, reverse=False):
    """Block start and block size of every unit's tied rank positions.

    Returns ``(less, eq)`` with the trailing axis indexing units: unit h holds
    positions ``less[h] + 1 .. less[h] + eq[h]``. ``reverse`` mirrors
    positions p -> H + 1 - p, which is the same as ranking the negated values.
    """
    v = np.asarray(values, dtype=float)
    if reverse:
        v = -v
    col = v[..., :, None]
    row = v[..., None, :]
    less = np.count_nonzero(row < col, axis=-1)
    eq = np.count_nonzero(row == col, axis=-1)
    return less, eq


def rank_with_ties(values, reverse: bool = False) -> RankAssignment:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise ValueError("rank_with_ties expects a non-empty 1-D set of values")
    less, eq = tie_blocks(v, reverse)
    positions = tuple(frozenset(range(int(a) + 1, int(a + m) + 1)) for a, m in zip(less, eq))
    starts = sorted(set(int(a) for a in less))
    groups = tuple(tuple(int(h) for h in np.flatnonzero(less == s)) for s in starts)
    return RankAssignment(groups, positions)


def strength_matrices(less, eq) -> np.ndarray:
    """Row h spreads weight 1/m evenly over the m positions unit h is tied at."""
    less = np.asarray(less)
    eq = np.asarray(eq)
    H = less.shape[-1]
    t = np.arange(1, H + 1)
    lo = less[..., None]
    inside = (lo < t) & (t <= lo + eq[..., None])
    return inside / eq[..., None].astype(float)


def strength_matrix(assign: RankAssignment) -> np.ndarray:
    H = assign.size
    D = np.zeros((H, H))
    for h, pos in enumerate(assign.positions):
        for p in pos:
            D[h, p - 1] = 1.0 / len(pos)
    return D


def alpha_weights(rhos: Mapping[str, float]) -> dict[str, float]:
    """Importance weights proportional to absolute correlation, summing to one."""
    if not rhos:
        raise ValueError("no ranking information: empty correlation map")
    mags = {k: abs(float(v)) for k, v in rhos.items()}
    total = sum(mags.values())
    if not total > 0:
        raise ValueError("no ranking information: every correlation is zero")
    return {k: m / total for k, m in mags.items()}


def averaged_matrix(mats: Sequence[np.ndarray], alphas: Sequence[float]) -> np.ndarray:
    """Weighted mean of strength matrices; accumulates in the order given."""
    if len(mats) != len(alphas) or not mats:
        raise ValueError(f"{len(mats)} matrices but {len(alphas)} weights")
    shape = np.shape(mats[0])
    out = np.zeros(shape)
    for D, a in zip(mats, alphas):
        if np.shape(D) != shape:
            raise ValueError(f"dimension mismatch: {np.shape(D)} vs {shape}")
        out = out + a * np.asarray(D, dtype=float)
    return out


def concentration(weights, r: int) -> float:
    w = np.asarray(weights, dtype=float)
    t = np.arange(1, w.shape[-1] + 1)
    return float(np.dot((t - r) ** 2, w))


def select_units(dbar, r, keys) -> np.ndarray:
    """Vectorized selection rule over sets stacked on the leading axis.

    Candidates hold the largest entry of column r (within TIE_TOL); among them
    the smallest concentration wins; remaining ties go to the smallest key,
    which makes the choice uniform when keys are iid uniforms.
    """
    dbar = np.asarray(dbar, dtype=float)
    r = np.asarray(r)
    H = dbar.shape[-1]
    idx = np.broadcast_to((r - 1)[..., None, None], dbar.shape[:-1] + (1,))
    col = np.take_along_axis(dbar, idx, axis=-1)[..., 0]
    cand = col >= col.max(axis=-1, keepdims=True) - TIE_TOL
    t = np.arange(1, H + 1)
    gamma = np.einsum("...ht,...t->...h", dbar, (t - r[..., None]) ** 2.0)
    gamma = np.where(cand, gamma, np.inf)
    cand &= gamma <= gamma.min(axis=-1, keepdims=True) + TIE_TOL
    return np.argmin(np.where(cand, keys, np.inf), axis=-1)


def select_unit(dbar, r: int, rng: np.random.Generator | None = None):
    """Pick the unit to measure for judgment rank r; returns (unit index, weight vector).

    Draws one uniform key per unit from ``rng`` so that the randomness consumed
    matches the batched kernel. Without an rng a residual tie is an error.
    """
    dbar = np.asarray(dbar, dtype=float)
    H = dbar.shape[0]
    if not 1 <= r <= H:
        raise ValueError(f"rank {r} outside 1..{H}")
    if rng is None:
        keys = np.zeros(H)
        s = int(select_units(dbar[None], np.array([r]), keys[None])[0])
        col = dbar[:, r - 1]
        cand = col >= col.max() - TIE_TOL
        gam = np.array([concentration(dbar[h], r) if cand[h] else np.inf for h in range(H)])
        if np.count_nonzero(gam <= gam.min() + TIE_TOL) > 1:
            raise ValueError("selection is tied after the concentration rule; an rng is required")
    else:
        keys = rng.random(H)
        s = int(select_units(dbar[None], np.array([r]), keys[None])[0])
    return s, dbar[s].copy()
