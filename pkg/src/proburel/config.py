from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

DEFAULT_GAP_TOL = Fraction(1, 2**64)
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True)
class Config:
    """Knobs shared by elaboration and the fixed-point routines.

    ``gap_tol`` bounds the mass a loop may leave unabsorbed before its
    iteration stops. ``algebra`` turns uniform choice over an empty set into
    the zero kernel instead of an error.
    """
    max_iter: int = DEFAULT_MAX_ITER
    gap_tol: Fraction = DEFAULT_GAP_TOL
    algebra: bool = False
