"""Numerical tolerances shared by every module.

All thresholds live in one record so that the CLI can override them and echo
the values actually used into its reports.
"""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    unitarity: float = 1e-10          # max-norm of U^dag U - I
    hermiticity: float = 1e-10        # max-norm of H - H^dag
    eig_residual: float = 1e-9        # ||M v - lambda v|| per eigenpair
    degeneracy: float = 1e-8          # grouping of near-equal eigenvalues
    phase_canon: float = 1e-8         # first eigenvector entry made real positive
    svd_null: float = 1e-12           # singular values treated as zero in SVD completion
    unit_modulus: float = 1e-8        # |lambda| = 1 check for covering arcs
    angle_merge: float = 1e-8         # dedup of eigen-angles mod 2 pi
    arc_slack: float = 1e-9           # delta >= pi - slack counts as distinguishable
    overlap: float = 1e-9             # certified |<out0|out1>|
    schmidt: float = 1e-8             # singular values above this count toward Schmidt rank
    reconstruction: float = 1e-8      # product / swap factor reconstruction
    kak_reconstruction: float = 1e-9
    lie_residual: float = 1e-8        # Gram-Schmidt acceptance for closure elements
    projector: float = 1e-10
    walgate_cost: float = 1e-10
    trace_zero: float = 1e-9          # |Tr(V^dag U)| / dim treated as zero
    prob_prune: float = 1e-12         # outcome probabilities pruned before sampling
    sumset_cap: int = 4096            # distinct angles kept per sumset level
    max_n: int = 12                   # default cap on parallel runs

    def replace(self, **changes) -> "Tolerances":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


DEFAULT = Tolerances()
_current = DEFAULT


def tol() -> Tolerances:
    """Return the active tolerance record."""
    return _current


def set_tolerances(new: Tolerances) -> None:
    global _current
    _current = new


@contextlib.contextmanager
def override(**changes):
    """Temporarily replace selected tolerances::

        with override(overlap=1e-8):
            ...
    """
    global _current
    previous = _current
    _current = previous.replace(**changes)
    try:
        yield _current
    finally:
        _current = previous
