"""Real-rational LTI systems in state-space form.

A :class:`StateSpaceSystem` is an immutable ``(A, B, C, D)`` quadruple tagged
with a :class:`Domain`.  Continuous-time systems are evaluated on the
imaginary axis ``lambda = j*omega``; discrete-time systems on the unit
circle ``lambda = exp(j*omega)``.  Compositions never attempt minimal
realization, so state dimensions simply add up.
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import block_diag as _block_diag

from . import tolerances as tol
from .errors import (
    AdjointUnrepresentable,
    DimensionMismatch,
    DomainMismatch,
    InvalidParameter,
    NotInvertible,
    NumericalFailure,
    SingularResolvent,
)


class Domain(str, enum.Enum):
    CT = "ct"
    DT = "dt"

    @classmethod
    def parse(cls, value) -> "Domain":
        if isinstance(value, Domain):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameter(f"unknown domain {value!r}") from None


def _as_matrix(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class StateSpaceSystem:
    """Finite-dimensional LTI system ``C (lambda I - A)^-1 B + D``.

    ``A`` may be ``0 x 0``, in which case the system is the constant gain ``D``.
    Arithmetic operators follow transfer-matrix algebra: ``G * H`` is the
    series connection (``H`` first), ``G + H`` the parallel sum, ``-G`` the
    negation, and a scalar factor scales the output.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    domain: Domain = Domain.CT

    def __post_init__(self):
        D = _as_matrix(self.D, "D")
        ny, nu = D.shape
        A = np.asarray(self.A, dtype=float)
        A = _as_matrix(A, "A") if A.size else np.zeros((0, 0))
        nx = A.shape[0]
        B = np.asarray(self.B, dtype=float)
        C = np.asarray(self.C, dtype=float)
        B = _as_matrix(B, "B") if nx else np.zeros((0, nu))
        C = _as_matrix(C, "C") if nx else np.zeros((ny, 0))
        if A.shape != (nx, nx):
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        if B.shape != (nx, nu):
            raise DimensionMismatch(f"B must be {nx}x{nu}, got {B.shape}")
        if C.shape != (ny, nx):
            raise DimensionMismatch(f"C must be {ny}x{nx}, got {C.shape}")
        for name, arr in (("A", A), ("B", B), ("C", C)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "domain", Domain.parse(self.domain))

    # -- shape ---------------------------------------------------------------
    @property
    def nstates(self) -> int:
        return self.A.shape[0]

    @property
    def ninputs(self) -> int:
        return self.D.shape[1]

    @property
    def noutputs(self) -> int:
        return self.D.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.D.shape

    @property
    def is_static(self) -> bool:
        return self.nstates == 0

    def __repr__(self):
        return (f"StateSpaceSystem({self.domain.value}, states={self.nstates}, "
                f"outputs={self.noutputs}, inputs={self.ninputs})")

    # -- evaluation ------------------------------------------------------------
    def evaluate(self, lam) -> np.ndarray:
        return evaluate(self, lam)

    def response(self, omegas) -> np.ndarray:
        return response(self, omegas)

    def poles(self) -> np.ndarray:
        return poles(self)

    def is_stable(self, stability_tol: float = tol.STABILITY_TOL) -> "Stability":
        return is_stable(self, stability_tol)

    def adjoint(self) -> "StateSpaceSystem":
        return adjoint(self)

    def inv(self) -> "StateSpaceSystem":
        return inverse(self)

    # -- algebra ---------------------------------------------------------------
    def __neg__(self):
        return negate(self)

    def __add__(self, other):
        return parallel(self, _coerce(other, self))

    def __radd__(self, other):
        return parallel(_coerce(other, self), self)

    def __sub__(self, other):
        return parallel(self, negate(_coerce(other, self)))

    def __rsub__(self, other):
        return parallel(_coerce(other, self), negate(self))

    def __mul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return series(self, _coerce(other, self))

    def __rmul__(self, other):
        if np.isscalar(other):
            return scale(self, other)
        return series(_coerce(other, self), self)


def _coerce(value, like: StateSpaceSystem) -> StateSpaceSystem:
    if isinstance(value, StateSpaceSystem):
        return value
    arr = np.array(value, dtype=float)
    if arr.ndim == 0:
        # scalars become scalar multiples of the identity where that makes sense
        n = like.noutputs if like.noutputs == like.ninputs else 1
        arr = float(arr) * np.eye(n)
    return gain(arr, like.domain)


class Stability(NamedTuple):
    stable: bool
    margin: float


# -- constructors ------------------------------------------------------------------

def gain(D, domain=Domain.CT) -> StateSpaceSystem:
    D = np.array(D, dtype=float)
    if D.ndim < 2:
        D = D.reshape(1, -1) if D.ndim == 1 else D.reshape(1, 1)
    return StateSpaceSystem(np.zeros((0, 0)), np.zeros((0, D.shape[1])),
                            np.zeros((D.shape[0], 0)), D, domain)


def zeros(noutputs: int, ninputs: int, domain=Domain.CT) -> StateSpaceSystem:
    return gain(np.zeros((noutputs, ninputs)), domain)


def identity(n: int, domain=Domain.CT) -> StateSpaceSystem:
    return gain(np.eye(n), domain)


def first_order(pole: float, residue: float = 1.0, feedthrough: float = 0.0,
                domain=Domain.CT) -> StateSpaceSystem:
    """Scalar ``residue / (lambda - pole) + feedthrough``."""
    return StateSpaceSystem([[pole]], [[1.0]], [[residue]], [[feedthrough]], domain)


# -- evaluation --------------------------------------------------------------------

def boundary_point(domain: Domain, omega: float) -> complex:
    """Map a boundary parameter to the point of the stability boundary."""
    if Domain.parse(domain) is Domain.CT:
        return complex(np.inf) if np.isinf(omega) else 1j * float(omega)
    return complex(np.exp(1j * float(omega)))


def boundary_points(domain: Domain, omegas) -> np.ndarray:
    omegas = np.asarray(omegas, dtype=float)
    if Domain.parse(domain) is Domain.CT:
        lam = 1j * np.where(np.isinf(omegas), 0.0, omegas)
        return np.where(np.isinf(omegas), np.inf + 0j, lam)
    return np.exp(1j * omegas)


def evaluate(sys: StateSpaceSystem, lam) -> np.ndarray:
    """Transfer matrix ``C (lam I - A)^-1 B + D`` at a single complex point.

    ``lam = inf`` returns ``D``.
    """
    lam = complex(lam)
    if not np.isfinite(lam) or sys.nstates == 0:
        return sys.D.astype(complex)
    return evaluate_many(sys, [lam])[0]


def evaluate_many(sys: StateSpaceSystem, lams) -> np.ndarray:
    """Vectorised :func:`evaluate`; returns an array of shape ``(N, ny, nu)``."""
    lams = np.asarray(lams, dtype=complex).ravel()
    out = np.empty((lams.size,) + sys.shape, dtype=complex)
    out[:] = sys.D
    fin = np.isfinite(lams)
    if sys.nstates == 0 or not fin.any():
        return out
    n = sys.nstates
    pts = lams[fin]
    # distance to the spectrum is far cheaper than a per-point condition number
    eigs = np.linalg.eigvals(sys.A)
    dist = np.min(np.abs(pts[:, None] - eigs[None, :]), axis=1)
    scale = 1.0 + np.linalg.norm(sys.A, 2)
    M = pts[:, None, None] * np.eye(n) - sys.A
    near = dist <= 1e-4 * scale
    if near.any():
        # exact condition numbers only where a pole is close
        cond = np.linalg.cond(M[near])
        if np.any(~np.isfinite(cond)) or np.any(cond * tol.RESOLVENT_TOL > 1.0):
            bad = pts[near][np.argmax(np.where(np.isfinite(cond), cond, np.inf))]
            raise SingularResolvent(f"lambda = {bad} is (numerically) a pole")
    rhs = np.broadcast_to(sys.B.astype(complex), (M.shape[0], n, sys.ninputs))
    try:
        out[fin] = sys.C @ np.linalg.solve(M, rhs) + sys.D
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(f"resolvent is singular: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise SingularResolvent("resolvent overflowed near a pole")
    return out


def response(sys: StateSpaceSystem, omegas) -> np.ndarray:
    """Response at boundary parameters (a grid or an array of omegas)."""
    if isinstance(omegas, FrequencyGrid):
        omegas = omegas.points
    return evaluate_many(sys, boundary_points(sys.domain, omegas))


def frequency_response(sys: StateSpaceSystem, grid: "FrequencyGrid | None" = None
                       ) -> "FrequencyResponse":
    grid = grid if grid is not None else default_grid(sys.domain)
    return FrequencyResponse(grid, response(sys, grid.points))


def poles(sys: StateSpaceSystem) -> np.ndarray:
    if sys.nstates == 0:
        return np.zeros(0, dtype=complex)
    try:
        return np.linalg.eigvals(sys.A).astype(complex)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigenvalue computation failed: {exc}") from exc


def stability_margin(domain: Domain, eigs) -> float:
    eigs = np.asarray(eigs)
    if eigs.size == 0:
        return np.inf
    if Domain.parse(domain) is Domain.CT:
        return float(-np.max(eigs.real))
    return float(1.0 - np.max(np.abs(eigs)))


def is_stable(sys: StateSpaceSystem, stability_tol: float = tol.STABILITY_TOL) -> Stability:
    margin = stability_margin(sys.domain, poles(sys))
    return Stability(margin > stability_tol, margin)


# -- algebra -----------------------------------------------------------------------

def _domain_of(*systems: StateSpaceSystem) -> Domain:
    # Static gains carry no dynamics, so they adopt the domain of their partners.
    dynamic = {s.domain for s in systems if s.nstates}
    if len(dynamic) > 1:
        raise DomainMismatch("cannot combine continuous- and discrete-time systems")
    if dynamic:
        return dynamic.pop()
    return systems[0].domain


def _check_invertible(D: np.ndarray) -> None:
    if D.shape[0] != D.shape[1]:
        raise NotInvertible(f"feedthrough is not square: {D.shape}")
    s = np.linalg.svd(D, compute_uv=False)
    if s.size and s[-1] < tol.INVERT_TOL * (1.0 + s[0]):
        raise NotInvertible(f"feedthrough is singular (sigma_min = {s[-1]:.3g})")


def series(G: StateSpaceSystem, H: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of the product ``G(lambda) H(lambda)`` (``H`` acts first)."""
    if G.ninputs != H.noutputs:
        raise DimensionMismatch(f"series: G has {G.ninputs} inputs, H has {H.noutputs} outputs")
    domain = _domain_of(G, H)
    A = np.block([[G.A, G.B @ H.C], [np.zeros((H.nstates, G.nstates)), H.A]])
    B = np.vstack([G.B @ H.D, H.B])
    C = np.hstack([G.C, G.D @ H.C])
    return StateSpaceSystem(A, B, C, G.D @ H.D, domain)


def parallel(G: StateSpaceSystem, H: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of ``G + H``."""
    if G.shape != H.shape:
        raise DimensionMismatch(f"sum: shapes {G.shape} and {H.shape} differ")
    domain = _domain_of(G, H)
    return StateSpaceSystem(_block_diag(G.A, H.A), np.vstack([G.B, H.B]),
                            np.hstack([G.C, H.C]), G.D + H.D, domain)


def negate(G: StateSpaceSystem) -> StateSpaceSystem:
    return StateSpaceSystem(G.A, G.B, -G.C, -G.D, G.domain)


def scale(G: StateSpaceSystem, c: float) -> StateSpaceSystem:
    c = float(c)
    return StateSpaceSystem(G.A, G.B, c * G.C, c * G.D, G.domain)


def inverse(G: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of ``G(lambda)^-1``; requires an invertible feedthrough."""
    _check_invertible(G.D)
    Dinv = np.linalg.inv(G.D)
    return StateSpaceSystem(G.A - G.B @ Dinv @ G.C, G.B @ Dinv, -Dinv @ G.C, Dinv, G.domain)


def adjoint(G: StateSpaceSystem) -> StateSpaceSystem:
    """Realization of the adjoint, whose boundary response is ``G(lambda)^*``."""
    if G.domain is Domain.CT or G.nstates == 0:
        return StateSpaceSystem(-G.A.T, -G.C.T, G.B.T, G.D.T, G.domain)
    # G(1/z)^T, realized through the inverse of A^T
    if np.linalg.cond(G.A) * tol.RESOLVENT_TOL > 1.0:
        raise AdjointUnrepresentable("discrete-time adjoint needs an invertible A")
    F = np.linalg.inv(G.A.T)
    return StateSpaceSystem(F, F @ G.C.T, -G.B.T @ F, G.D.T - G.B.T @ F @ G.C.T, G.domain)


def hstack(systems: Sequence[StateSpaceSystem]) -> StateSpaceSystem:
    """``[G1, G2, ...]`` sharing outputs."""
    systems = list(systems)
    if len({s.noutputs for s in systems}) != 1:
        raise DimensionMismatch("hstack: output counts differ")
    domain = _domain_of(*systems)
    return StateSpaceSystem(_block_diag(*[s.A for s in systems]),
                            _block_diag(*[s.B for s in systems]),
                            np.hstack([s.C for s in systems]),
                            np.hstack([s.D for s in systems]), domain)


def vstack(systems: Sequence[StateSpaceSystem]) -> StateSpaceSystem:
    """``[G1; G2; ...]`` sharing inputs."""
    systems = list(systems)
    if len({s.ninputs for s in systems}) != 1:
        raise DimensionMismatch("vstack: input counts differ")
    domain = _domain_of(*systems)
    return StateSpaceSystem(_block_diag(*[s.A for s in systems]),
                            np.vstack([s.B for s in systems]),
                            _block_diag(*[s.C for s in systems]),
                            np.vstack([s.D for s in systems]), domain)


def block_diag(systems: Sequence[StateSpaceSystem]) -> StateSpaceSystem:
    systems = list(systems)
    domain = _domain_of(*systems)
    return StateSpaceSystem(_block_diag(*[s.A for s in systems]),
                            _block_diag(*[s.B for s in systems]),
                            _block_diag(*[s.C for s in systems]),
                            _block_diag(*[s.D for s in systems]), domain)


def combine(op: str, *args) -> StateSpaceSystem:
    """Dispatch ``series``, ``sum``, ``negate``, ``scale`` or ``inverse`` by name."""
    if op == "series":
        return reduce(series, args)
    if op == "sum":
        return reduce(parallel, args)
    if op == "negate":
        return negate(*args)
    if op == "scale":
        return scale(*args)
    if op == "inverse":
        return inverse(*args)
    raise InvalidParameter(f"unknown combine operation {op!r}")


# -- frequency grids -------------------------------------------------------------------

def _env_points(default: int) -> int:
    raw = os.environ.get("IQC_GRID_POINTS")
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        raise InvalidParameter(f"IQC_GRID_POINTS must be an integer, got {raw!r}") from None
    if value < 2:
        raise InvalidParameter("IQC_GRID_POINTS must be at least 2")
    return value


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Ordered boundary parameters.

    Continuous time uses ``omega`` in rad/s with ``inf`` as the sentinel for
    ``G(inf) = D``; discrete time uses angles in ``[0, pi]``, relying on the
    conjugate symmetry of real systems for the other half of the circle.
    """

    domain: Domain
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float).ravel()
        if pts.size == 0:
            raise InvalidParameter("frequency grid is empty")
        if np.any(np.isnan(pts)) or np.any(np.diff(pts) <= 0):
            raise InvalidParameter("frequency grid must be strictly increasing")
        domain = Domain.parse(self.domain)
        if domain is Domain.CT and pts[0] < 0:
            raise InvalidParameter("continuous-time grid must be non-negative")
        if domain is Domain.DT and (pts[0] < 0 or pts[-1] > np.pi + 1e-12):
            raise InvalidParameter("discrete-time grid must lie in [0, pi]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "domain", domain)

    def __len__(self):
        return self.points.size

    @property
    def lambdas(self) -> np.ndarray:
        return boundary_points(self.domain, self.points)

    @property
    def finite_max(self) -> float:
        fin = self.points[np.isfinite(self.points)]
        return float(fin.max()) if fin.size else 0.0

    def denser(self, factor: int) -> "FrequencyGrid":
        """A grid with ``factor`` times as many points over the same span."""
        fin = self.points[np.isfinite(self.points)]
        if self.domain is Domain.DT:
            pts = np.linspace(fin.min(), fin.max(), factor * fin.size)
            return FrequencyGrid(self.domain, pts)
        pos = fin[fin > 0]
        dense = np.logspace(np.log10(pos.min()), np.log10(pos.max()), factor * pos.size)
        extra = [p for p in self.points if p == 0 or np.isinf(p)]
        return FrequencyGrid(self.domain, np.unique(np.concatenate([dense, extra])))

    def meta(self) -> dict:
        fin = self.points[np.isfinite(self.points)]
        return {"domain": self.domain.value, "points": int(self.points.size),
                "wmin": float(fin.min()) if fin.size else None,
                "wmax": float(fin.max()) if fin.size else None,
                "includes_infinity": bool(np.isinf(self.points).any())}


def default_grid(domain=Domain.CT, points: int | None = None, wmin: float = 1e-4,
                 wmax: float = 1e4, extra_points: Sequence[float] = ()) -> FrequencyGrid:
    """Default grid: logarithmic plus ``{0, inf}`` (CT) or uniform on ``[0, pi]`` (DT)."""
    domain = Domain.parse(domain)
    n = points if points is not None else _env_points(tol.GRID_POINTS)
    if n < 2:
        raise InvalidParameter("grid needs at least 2 points")
    if domain is Domain.CT:
        if not 0 < wmin < wmax:
            raise InvalidParameter("need 0 < wmin < wmax")
        base = np.logspace(np.log10(wmin), np.log10(wmax), n)
        pts = np.concatenate([[0.0], base, [np.inf], np.asarray(extra_points, float)])
    else:
        pts = np.concatenate([np.linspace(0.0, np.pi, n), np.asarray(extra_points, float)])
    return FrequencyGrid(domain, np.unique(pts))


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != len(self.grid):
            raise DimensionMismatch("response length differs from grid length")


# -- JSON --------------------------------------------------------------------------------

def to_dict(sys: StateSpaceSystem) -> dict:
    out = {"domain": sys.domain.value}
    if sys.nstates:
        out.update(A=sys.A.tolist(), B=sys.B.tolist(), C=sys.C.tolist())
    out["D"] = sys.D.tolist()
    return out


def from_dict(data: dict) -> StateSpaceSystem:
    if not isinstance(data, dict) or "D" not in data:
        raise InvalidParameter("system JSON needs at least a 'D' entry")
    domain = Domain.parse(data.get("domain", "ct"))
    D = _as_matrix(data["D"], "D")
    present = [k for k in "ABC" if data.get(k) not in (None, [], [[]])]
    if not present:
        return gain(D, domain)
    if len(present) != 3:
        raise InvalidParameter("system JSON must give all of A, B, C or none of them")
    return StateSpaceSystem(data["A"], data["B"], data["C"], D, domain)
