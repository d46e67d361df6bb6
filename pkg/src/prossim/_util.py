import numpy as np


def round_half_away(x):
    """Round to the nearest integer, halves away from zero (np.round rounds halves to even)."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)
