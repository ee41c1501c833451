"""Feedback interconnection ``[G1, G2]``.

Positive convention: ``u1 = d1 + y2``, ``u2 = d2 + y1`` with ``y1 = G1 u1`` and
``y2 = G2 u2``.  The negative convention is the same loop with ``G2``
replaced by ``-G2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.linalg import block_diag as _bd

from . import tolerances as tol
from .analysis import hinf_norm
from .errors import DimensionMismatch, InvalidParameter, NotWellPosed, UnstableClosedLoop
from .lti import (
    FrequencyGrid,
    StateSpaceSystem,
    _domain_of,
    default_grid,
    is_stable,
    negate,
    response,
)


class Sign(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @classmethod
    def parse(cls, value) -> "Sign":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameter(f"sign must be 'positive' or 'negative', got {value!r}") from None


@dataclass(frozen=True, eq=False)
class ClosedLoop:
    """``cl`` maps ``(d1, d2) -> (y1, y2)``; ``cl_u`` maps ``(d1, d2) -> (u1, u2)``."""

    g1: StateSpaceSystem
    g2: StateSpaceSystem
    sign: Sign
    cl: StateSpaceSystem | None
    cl_u: StateSpaceSystem | None
    well_posed: bool

    @property
    def loop_g2(self) -> StateSpaceSystem:
        """The ``G2`` that actually sits in the positive loop."""
        return self.g2 if self.sign is Sign.POSITIVE else negate(self.g2)

    def block(self, i: int, j: int, channel: str = "y") -> StateSpaceSystem:
        """Sub-map from ``d_j`` to ``y_i`` (or ``u_i``), indices 1 or 2."""
        sys = self.cl if channel == "y" else self.cl_u
        if sys is None:
            raise NotWellPosed("interconnection is not well-posed")
        n, m = self.g1.noutputs, self.g1.ninputs
        d_sl = (slice(0, m), slice(m, m + n))[j - 1]
        out = (slice(0, n), slice(n, n + m)) if channel == "y" else (slice(0, m), slice(m, m + n))
        o_sl = out[i - 1]
        return StateSpaceSystem(sys.A, sys.B[:, d_sl], sys.C[o_sl], sys.D[o_sl, d_sl], sys.domain)


def interconnect(g1: StateSpaceSystem, g2: StateSpaceSystem, sign=Sign.POSITIVE) -> ClosedLoop:
    sign = Sign.parse(sign.value if isinstance(sign, Sign) else sign)
    if g2.shape != (g1.ninputs, g1.noutputs):
        raise DimensionMismatch(f"G2 must be {(g1.ninputs, g1.noutputs)}, got {g2.shape}")
    domain = _domain_of(g1, g2)
    h2 = g2 if sign is Sign.POSITIVE else negate(g2)
    n, m = g1.noutputs, g1.ninputs
    E = np.block([[np.eye(m), -h2.D], [-g1.D, np.eye(n)]])
    s = np.linalg.svd(np.eye(m) - h2.D @ g1.D, compute_uv=False) if m else np.ones(1)
    if s[-1] < tol.INVERT_TOL * (1.0 + s[0]):
        return ClosedLoop(g1, g2, sign, None, None, False)
    Einv = np.linalg.inv(E)
    Ab = _bd(g1.A, h2.A)
    Bb = _bd(g1.B, h2.B)
    Cb = _bd(g1.C, h2.C)
    Db = _bd(g1.D, h2.D)
    n1, n2 = g1.nstates, h2.nstates
    Cx = np.block([[np.zeros((m, n1)), h2.C], [g1.C, np.zeros((n, n2))]])
    Cu, Du = Einv @ Cx, Einv
    A = Ab + Bb @ Cu
    B = Bb @ Du
    cl = StateSpaceSystem(A, B, Cb + Db @ Cu, Db @ Du, domain)
    # u-channel stacks (u1, u2); identity feedthrough comes from d itself
    cl_u = StateSpaceSystem(A, B, Cu, Du, domain)
    return ClosedLoop(g1, g2, sign, cl, cl_u, True)


@dataclass(frozen=True)
class ClosedLoopStability:
    stable: bool
    margin: float
    marginal: bool
    min_abs_det: float

    def to_dict(self) -> dict:
        return {"stable": self.stable, "margin": self.margin, "marginal": self.marginal,
                "min_abs_det": self.min_abs_det}


def return_difference_det(loop: ClosedLoop, grid: FrequencyGrid) -> np.ndarray:
    """``det(I - G2 G1)`` per grid point (with the loop's sign convention)."""
    g1 = response(loop.g1, grid.points)
    g2 = response(loop.loop_g2, grid.points)
    return np.linalg.det(np.eye(loop.g1.ninputs) - g2 @ g1)


def closed_loop_stable(loop: ClosedLoop, grid: FrequencyGrid | None = None,
                       stability_tol: float = tol.STABILITY_TOL) -> ClosedLoopStability:
    """Eigenvalue test on the closed-loop realization, with the grid determinant as corroboration.

    Loops with an eigenvalue within ``stability_tol`` of the boundary are
    unstable and flagged marginal.
    """
    if not loop.well_posed:
        raise NotWellPosed("interconnection is not well-posed")
    stab = is_stable(loop.cl, stability_tol)
    grid = grid if grid is not None else default_grid(loop.cl.domain)
    det = float(np.min(np.abs(return_difference_det(loop, grid))))
    marginal = bool(abs(stab.margin) <= stability_tol)
    return ClosedLoopStability(bool(stab.stable), float(stab.margin), marginal, det)


def closed_loop_gain(loop: ClosedLoop, tol_rel: float | None = None,
                     block: tuple[int, int] | None = None,
                     grid: FrequencyGrid | None = None) -> float:
    """H-infinity norm of the closed-loop map, or of one ``(i, j)`` block of it."""
    if not loop.well_posed:
        raise NotWellPosed("interconnection is not well-posed")
    if not is_stable(loop.cl).stable:
        raise UnstableClosedLoop("closed loop is not stable")
    sys = loop.cl if block is None else loop.block(*block)
    return hinf_norm(sys, tol_rel, grid).gamma
