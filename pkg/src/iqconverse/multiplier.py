"""Multipliers, IQC quadratic forms, set membership and J-spectral factors.

A multiplier ``Pi = [[Pi11, Pi12], [Pi12^*, Pi22]]`` defines the quadratic
forms

* plant side:        ``q(G)   = [G; I]^* Pi [G; I]``
* uncertainty side:  ``q^c(H) = [I; H]^* Pi [I; H]``

and with them the sets ``G1_strict = {q(G) < 0}``, ``G1_nonstrict = {q(G) <= 0}``,
``G2_strict = {q^c(H) > 0}`` and ``G2_nonstrict = {q^c(H) >= 0}``.  Everything
is evaluated pointwise on a :class:`~iqconverse.lti.FrequencyGrid`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import tolerances as tol
from .analysis import _sigma_max, refine_extremum, require_square, require_stable
from .errors import (
    DimensionMismatch,
    InvalidParameter,
    NotInvertible,
    SingularPsi4,
    ThetaOutOfRange,
    WeightVanishes,
    WrongInertia,
)
from .lti import (
    Domain,
    FrequencyGrid,
    FrequencyResponse,
    StateSpaceSystem,
    adjoint,
    block_diag,
    default_grid,
    from_dict,
    gain,
    inverse,
    is_stable,
    response,
    series,
    to_dict,
)

Block = Union[np.ndarray, StateSpaceSystem]


def _block_response(block: Block, omegas: np.ndarray, domain: Domain) -> np.ndarray:
    if isinstance(block, StateSpaceSystem):
        return response(block, omegas)
    arr = np.asarray(block)
    return np.broadcast_to(arr, (len(omegas),) + arr.shape)


def _herm(x: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(x, -1, -2))


def _block_shape(block: Block) -> tuple[int, int]:
    return block.shape if isinstance(block, StateSpaceSystem) else np.asarray(block).shape


# -- factors -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JSpectralFactors:
    """Factors of ``Pi = Psi^* J Psi`` with ``Psi = [[psi1, psi2], [psi3, psi4]]``."""

    psi1: StateSpaceSystem
    psi2: StateSpaceSystem
    psi3: StateSpaceSystem
    psi4: StateSpaceSystem

    def __post_init__(self):
        n, m = self.psi1.noutputs, self.psi4.noutputs
        expected = {"psi1": (n, n), "psi2": (n, m), "psi3": (m, n), "psi4": (m, m)}
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise DimensionMismatch(f"{name} must be {shape}, got {getattr(self, name).shape}")

    @property
    def n(self) -> int:
        return self.psi1.noutputs

    @property
    def m(self) -> int:
        return self.psi4.noutputs

    @property
    def signature(self) -> tuple[int, int]:
        return self.n, self.m

    @property
    def J(self) -> np.ndarray:
        return np.diag(np.concatenate([np.ones(self.n), -np.ones(self.m)]))

    def blocks(self):
        return self.psi1, self.psi2, self.psi3, self.psi4

    def response(self, omegas) -> np.ndarray:
        """Pointwise ``Psi(lambda)`` of shape ``(N, n+m, n+m)``."""
        pts = omegas.points if isinstance(omegas, FrequencyGrid) else np.asarray(omegas, float)
        p1, p2, p3, p4 = (response(p, pts) for p in self.blocks())
        return np.concatenate([np.concatenate([p1, p2], axis=2),
                               np.concatenate([p3, p4], axis=2)], axis=1)

    def reconstruct(self, omegas) -> np.ndarray:
        psi = self.response(omegas)
        return _herm(psi) @ self.J @ psi

    def to_dict(self) -> dict:
        return {"kind": "factors", "n": self.n, "m": self.m,
                **{f"psi{i + 1}": to_dict(p) for i, p in enumerate(self.blocks())}}


# -- multipliers ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Multiplier:
    """Hermitian-valued multiplier given by blocks or by J-spectral factors.

    Blocks are constant matrices (possibly complex) or systems evaluated on
    the boundary; off-diagonal ``Pi21`` is always ``Pi12^*`` pointwise.
    """

    pi11: Block | None
    pi12: Block | None
    pi22: Block | None
    name: str = "custom"
    factors: JSpectralFactors | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.pi11 is None:
            if self.factors is None:
                raise InvalidParameter("multiplier needs blocks or factors")
            return
        n, n2 = _block_shape(self.pi11)
        m, m2 = _block_shape(self.pi22)
        if n != n2 or m != m2 or _block_shape(self.pi12) != (n, m):
            raise DimensionMismatch("multiplier blocks have inconsistent shapes")

    @classmethod
    def from_factors(cls, factors: JSpectralFactors, name: str = "factored") -> "Multiplier":
        return cls(None, None, None, name=name, factors=factors)

    @classmethod
    def constant(cls, pi, n: int, m: int, name: str = "constant") -> "Multiplier":
        pi = np.array(pi, dtype=complex)
        if pi.shape != (n + m, n + m):
            raise DimensionMismatch(f"constant multiplier must be {(n + m, n + m)}, got {pi.shape}")
        if np.linalg.norm(pi - pi.conj().T) > 1e-10 * (1 + np.linalg.norm(pi)):
            raise InvalidParameter("constant multiplier is not Hermitian")
        if not np.iscomplexobj(pi) or np.all(pi.imag == 0):
            pi = pi.real
        return cls(pi[:n, :n], pi[:n, n:], pi[n:, n:], name=name)

    @property
    def n(self) -> int:
        return self.factors.n if self.pi11 is None else _block_shape(self.pi11)[0]

    @property
    def m(self) -> int:
        return self.factors.m if self.pi11 is None else _block_shape(self.pi22)[0]

    def response(self, omegas, domain: Domain = Domain.CT) -> np.ndarray:
        """Pointwise ``Pi(lambda)`` of shape ``(N, n+m, n+m)``."""
        pts = omegas.points if isinstance(omegas, FrequencyGrid) else np.asarray(omegas, float)
        if isinstance(omegas, FrequencyGrid):
            domain = omegas.domain
        if self.pi11 is None:
            return self.factors.reconstruct(pts)
        p11 = _block_response(self.pi11, pts, domain)
        p12 = _block_response(self.pi12, pts, domain)
        p22 = _block_response(self.pi22, pts, domain)
        return np.concatenate([np.concatenate([p11, p12], axis=2),
                               np.concatenate([_herm(p12), p22], axis=2)], axis=1)

    def hermitian_residual(self, grid: FrequencyGrid) -> float:
        pi = self.response(grid)
        return float(np.max(np.abs(pi - _herm(pi))))

    def to_dict(self) -> dict:
        if self.pi11 is None:
            return self.factors.to_dict()
        if any(isinstance(b, StateSpaceSystem) for b in (self.pi11, self.pi12, self.pi22)):
            raise InvalidParameter("rational multiplier blocks serialize through their factors")
        pi = self.response(np.zeros(1))[0]
        if np.any(pi.imag != 0):
            raise InvalidParameter("complex multipliers are not serializable")
        return {"kind": "constant", "n": self.n, "m": self.m, "pi": pi.real.tolist()}


def _const(value, domain) -> StateSpaceSystem:
    return gain(np.atleast_2d(value), domain)


def catalog(name: str, n: int = 1, domain=Domain.CT, epsilon: float = 1.0,
            gamma: float = 1.0, weight: StateSpaceSystem | None = None,
            theta: float = 0.0) -> tuple[Multiplier, JSpectralFactors | None]:
    """Named multipliers together with their explicit J-spectral factors.

    ``fw_passivity`` returns ``None`` for the factors: its factors are complex
    (see :func:`fw_passivity_factors`) and are not used for synthesis.
    """
    domain = Domain.parse(domain)
    if n < 1:
        raise InvalidParameter("dimension must be positive")
    I = np.eye(n)
    Z = np.zeros((n, n))
    if name == "passivity":
        r = 1 / np.sqrt(2)
        factors = JSpectralFactors(*(_const(c * I, domain) for c in (r, r, r, -r)))
        return Multiplier(Z, I, Z, name=name, factors=factors), factors
    if name in ("osp", "isp"):
        if not epsilon > 0:
            raise InvalidParameter("epsilon must be positive")
        e, e2 = np.sqrt(epsilon), np.sqrt(2 * epsilon)
        if name == "osp":
            a = 1 / (e - e2)
            coeffs, pi = (a, e, a, e2), (Z, I, -epsilon * I)
        else:
            b = 1 / (e2 - e)
            coeffs, pi = (e2, b, e, b), (epsilon * I, I, Z)
        factors = JSpectralFactors(*(_const(c * I, domain) for c in coeffs))
        return Multiplier(*pi, name=f"{name}({epsilon:g})", factors=factors), factors
    if name == "smallgain":
        if not gamma > 0:
            raise InvalidParameter("gamma must be positive")
        factors = JSpectralFactors(_const(gamma * I, domain), _const(Z, domain),
                                   _const(Z, domain), _const(I, domain))
        return Multiplier(gamma ** 2 * I, Z, -I, name=f"smallgain({gamma:g})",
                          factors=factors), factors
    if name == "fw_smallgain":
        if weight is None or weight.shape != (1, 1):
            raise InvalidParameter("fw_smallgain needs a scalar weight system")
        if not is_stable(weight).stable:
            raise InvalidParameter("frequency weight must be stable")
        w_n = block_diag([weight] * n)
        factors = JSpectralFactors(w_n, _const(Z, weight.domain), _const(Z, weight.domain),
                                   _const(I, weight.domain))
        # |w|^2 as a (non-causal) product evaluated on the boundary only
        pi11 = series(adjoint(w_n), w_n)
        return Multiplier(pi11, Z, -I, name="fw_smallgain", factors=factors), factors
    if name == "fw_passivity":
        _check_theta(theta)
        rot = np.exp(1j * theta) * I
        return Multiplier(Z.astype(complex), rot, Z.astype(complex),
                          name=f"fw_passivity({theta:g})"), None
    raise InvalidParameter(f"unknown catalog multiplier {name!r}")


def fw_passivity_factors(theta: float, n: int = 1) -> np.ndarray:
    """Complex constant factor ``Psi`` for the frequency-weighted passivity multiplier.

    Uses ``theta1 = 0`` and ``theta2 = theta``.
    """
    _check_theta(theta)
    I = np.eye(n)
    e1, e2 = 1.0, np.exp(1j * theta)
    return np.block([[e1 * I, e2 * I], [e1 * I, -e2 * I]]) / np.sqrt(2)


def _check_theta(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta)) or np.any(np.abs(theta) >= np.pi / 2):
        raise ThetaOutOfRange("theta must lie strictly inside (-pi/2, pi/2)")
    return theta


# -- quadratic forms and membership -----------------------------------------------------

class Side(str, enum.Enum):
    PLANT = "plant"
    UNCERTAINTY = "uncertainty"


class SetId(str, enum.Enum):
    G1_STRICT = "G1_strict"
    G1_NONSTRICT = "G1_nonstrict"
    G2_STRICT = "G2_strict"
    G2_NONSTRICT = "G2_nonstrict"

    @property
    def side(self) -> Side:
        return Side.PLANT if self.value.startswith("G1") else Side.UNCERTAINTY

    @property
    def strict(self) -> bool:
        return self.value.endswith("_strict")


def _q_values(mult: Multiplier, sys: StateSpaceSystem, side: Side, omegas) -> np.ndarray:
    n, m = mult.n, mult.m
    side = Side(side)
    expected = (n, m) if side is Side.PLANT else (m, n)
    if sys.shape != expected:
        raise DimensionMismatch(f"{side.value}-side system must be {expected}, got {sys.shape}")
    pi = mult.response(omegas, sys.domain)
    g = response(sys, omegas)
    if side is Side.PLANT:
        stacked = np.concatenate([g, np.broadcast_to(np.eye(m), g.shape[:1] + (m, m))], axis=1)
    else:
        stacked = np.concatenate([np.broadcast_to(np.eye(n), g.shape[:1] + (n, n)), g], axis=1)
    q = _herm(stacked) @ pi @ stacked
    return (q + _herm(q)) / 2


def q_form(mult: Multiplier, sys: StateSpaceSystem, side: Side | str,
           grid: FrequencyGrid | None = None) -> FrequencyResponse:
    """Hermitian-valued ``q(G)`` (plant side) or ``q^c(H)`` (uncertainty side) per grid point."""
    grid = grid if grid is not None else default_grid(sys.domain)
    return FrequencyResponse(grid, _q_values(mult, sys, Side(side), grid.points))


@dataclass(frozen=True)
class MembershipVerdict:
    set_id: SetId
    holds: bool
    margin: float
    worst_frequency: float
    grid_meta: dict

    def to_dict(self) -> dict:
        return {"set_id": self.set_id.value, "holds": self.holds, "margin": self.margin,
                "worst_frequency": self.worst_frequency, "grid_meta": self.grid_meta}


def _verdict(set_id: SetId, margin: float, worst: float, grid: FrequencyGrid,
             strict_tol: float) -> MembershipVerdict:
    holds = margin > strict_tol if set_id.strict else margin >= -strict_tol
    return MembershipVerdict(set_id, bool(holds), float(margin) + 0.0, float(worst), grid.meta())


def _signed_margin_curve(mult, sys, side, omegas) -> np.ndarray:
    # positive where the defining inequality holds with room
    eig = np.linalg.eigvalsh(_q_values(mult, sys, side, omegas))
    return -eig[:, -1] if side is Side.PLANT else eig[:, 0]


def membership(mult: Multiplier, sys: StateSpaceSystem, set_id: SetId | str,
               grid: FrequencyGrid | None = None,
               strict_tol: float = tol.STRICT_TOL) -> MembershipVerdict:
    """Decide membership of ``sys`` in one of the four IQC sets on a grid.

    The margin is ``-max lambda_max(q(G))`` for plant sets and
    ``min lambda_min(q^c(H))`` for uncertainty sets, refined locally around
    the worst grid point.
    """
    set_id = SetId(set_id)
    require_stable(sys)
    grid = grid if grid is not None else default_grid(sys.domain)
    side = set_id.side
    curve = _signed_margin_curve(mult, sys, side, grid.points)
    k = int(np.argmin(curve))
    w, margin = refine_extremum(
        lambda om: float(_signed_margin_curve(mult, sys, side, np.array([om]))[0]), grid, k)
    return _verdict(set_id, margin, w, grid, strict_tol)


# -- factorization ----------------------------------------------------------------------

def factorize_constant(pi, n: int, m: int, domain=Domain.CT) -> JSpectralFactors:
    """J-spectral factors of a constant real symmetric multiplier via eigendecomposition."""
    pi = np.array(pi, dtype=complex)
    if pi.shape != (n + m, n + m):
        raise DimensionMismatch(f"multiplier must be {(n + m, n + m)}, got {pi.shape}")
    if np.linalg.norm(pi - pi.conj().T) > 1e-10 * (1 + np.linalg.norm(pi)):
        raise InvalidParameter("multiplier is not Hermitian")
    if np.any(np.abs(pi.imag) > 0):
        raise InvalidParameter("complex multipliers have no real-rational constant factors")
    pi = pi.real
    lam, Q = np.linalg.eigh((pi + pi.T) / 2)
    if np.any(np.abs(lam) < 1e-10):
        raise WrongInertia("multiplier has an eigenvalue at zero")
    pos, neg = lam > 0, lam < 0
    if pos.sum() != n or neg.sum() != m:
        raise WrongInertia(f"inertia is ({pos.sum()}, {neg.sum()}), expected ({n}, {m})")
    order = np.concatenate([np.flatnonzero(pos)[::-1], np.flatnonzero(neg)])
    lam, Q = lam[order], Q[:, order]
    for j in range(Q.shape[1]):
        # deterministic eigenvector signs: first significant entry positive
        first = np.flatnonzero(np.abs(Q[:, j]) > 1e-12)[0]
        if Q[first, j] < 0:
            Q[:, j] = -Q[:, j]
    psi = np.sqrt(np.abs(lam))[:, None] * Q.T
    domain = Domain.parse(domain)
    factors = JSpectralFactors(gain(psi[:n, :n], domain), gain(psi[:n, n:], domain),
                               gain(psi[n:, :n], domain), gain(psi[n:, n:], domain))
    s = np.linalg.svd(psi[n:, n:], compute_uv=False)
    if s[-1] < tol.INVERT_TOL * (1 + s[0]):
        raise SingularPsi4("psi4 of the eigen-factorization is singular; supply factors instead")
    return factors


# -- factor conditions ---------------------------------------------------------------------

class Profile(str, enum.Enum):
    T1 = "T1"
    T2 = "T2"
    T3 = "T3"
    T4 = "T4"

    @classmethod
    def parse(cls, value) -> "Profile":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise InvalidParameter(f"unknown profile {value!r}") from None

    @property
    def checks(self) -> tuple[str, ...]:
        return _PROFILE_CHECKS[self]


_PROFILE_CHECKS = {
    Profile.T1: ("psi_stable", "psi4_inverse_stable", "injective", "pi11_psd", "pi22_nsd"),
    Profile.T2: ("psi_stable", "psi4_inverse_stable", "pi11_psd", "pi22_nd"),
    Profile.T3: ("psi_stable", "psi4_inverse_stable", "pi11_psd", "pi22_nsd"),
    # rational factors are continuous on the boundary, so T4 adds nothing checkable
    Profile.T4: ("psi_stable", "psi4_inverse_stable", "pi11_psd", "pi22_nsd"),
}


@dataclass(frozen=True)
class ConditionCheck:
    name: str
    passed: bool
    margin: float


@dataclass(frozen=True)
class ConditionReport:
    profile: Profile
    checks: tuple[ConditionCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> ConditionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"profile": self.profile.value, "passed": self.passed,
                "checks": [{"name": c.name, "passed": c.passed, "margin": c.margin}
                           for c in self.checks]}


def _pointwise_inv(x: np.ndarray) -> np.ndarray | None:
    s = np.linalg.svd(x, compute_uv=False)
    if np.any(s[:, -1] < tol.INVERT_TOL * (1 + s[:, 0])):
        return None
    return np.linalg.inv(x)


def check_conditions(factors: JSpectralFactors, profile: Profile | str,
                     grid: FrequencyGrid | None = None,
                     strict_tol: float = tol.STRICT_TOL) -> ConditionReport:
    """Check the factor conditions a converse theorem needs; failures are reported, not raised."""
    profile = Profile.parse(profile)
    grid = grid if grid is not None else default_grid(factors.psi1.domain)
    p1, p2, p3, p4 = (response(p, grid.points) for p in factors.blocks())
    results = {}

    margins = [is_stable(p).margin for p in factors.blocks()]
    results["psi_stable"] = ConditionCheck("psi_stable", min(margins) > tol.STABILITY_TOL,
                                           float(min(margins)))
    try:
        inv_margin = is_stable(inverse(factors.psi4)).margin
    except NotInvertible:
        inv_margin = -np.inf
    results["psi4_inverse_stable"] = ConditionCheck(
        "psi4_inverse_stable", inv_margin > tol.STABILITY_TOL, float(inv_margin))

    p4inv = _pointwise_inv(p4)
    if p4inv is None:
        inj = -np.inf
    else:
        schur = p1 - p2 @ p4inv @ p3
        inj = float(np.min(np.linalg.svd(schur, compute_uv=False)[:, -1]))
    results["injective"] = ConditionCheck("injective", inj > strict_tol, inj)

    pi11 = _herm(p1) @ p1 - _herm(p3) @ p3
    pi22 = _herm(p2) @ p2 - _herm(p4) @ p4
    m11 = float(np.min(np.linalg.eigvalsh((pi11 + _herm(pi11)) / 2)[:, 0]))
    m22 = float(-np.max(np.linalg.eigvalsh((pi22 + _herm(pi22)) / 2)[:, -1])) + 0.0
    results["pi11_psd"] = ConditionCheck("pi11_psd", m11 >= -strict_tol, m11)
    results["pi22_nsd"] = ConditionCheck("pi22_nsd", m22 >= -strict_tol, m22)
    results["pi22_nd"] = ConditionCheck("pi22_nd", m22 > strict_tol, m22)
    return ConditionReport(profile, tuple(results[name] for name in profile.checks))


# -- frequency-weighted checks ------------------------------------------------------------

def fw_smallgain_check(g1: StateSpaceSystem, weight: StateSpaceSystem,
                       grid: FrequencyGrid | None = None,
                       strict_tol: float = tol.STRICT_TOL) -> MembershipVerdict:
    """Weighted small-gain test ``sigma_max(G1) < 1 / |w|^2`` on the grid.

    Points where the weight vanishes impose no constraint; a weight that
    vanishes on the whole grid is rejected.
    """
    require_stable(g1)
    require_stable(weight, "frequency weight")
    if weight.shape != (1, 1):
        raise InvalidParameter("frequency weight must be scalar")
    grid = grid if grid is not None else default_grid(g1.domain)

    def curve(omegas):
        w = np.abs(response(weight, omegas)[:, 0, 0])
        with np.errstate(divide="ignore"):
            bound = np.where(w > 1e-300, 1.0 / np.maximum(w, 1e-300) ** 2, np.inf)
        return bound - _sigma_max(response(g1, omegas))

    w_grid = np.abs(response(weight, grid.points)[:, 0, 0])
    if np.all(w_grid < 1e-12):
        raise WeightVanishes("frequency weight vanishes on the whole grid")
    values = curve(grid.points)
    k = int(np.argmin(values))
    w, margin = refine_extremum(lambda om: float(curve(np.array([om]))[0]), grid, k)
    return _verdict(SetId.G1_STRICT, margin, w, grid, strict_tol)


def fw_passivity_check(sys: StateSpaceSystem, theta, side: Side | str = Side.UNCERTAINTY,
                       grid: FrequencyGrid | None = None,
                       strict_tol: float = tol.STRICT_TOL) -> MembershipVerdict:
    """Phase-rotated passivity test with a constant angle or a per-grid angle curve.

    Uncertainty side checks ``e^{j theta} G + e^{-j theta} G^* >= 0``; plant
    side checks ``e^{-j theta} G + e^{j theta} G^* < 0``.
    """
    require_square(sys)
    require_stable(sys)
    side = Side(side)
    grid = grid if grid is not None else default_grid(sys.domain)
    theta = _check_theta(theta)
    if theta.ndim and theta.size not in (1, len(grid)):
        raise InvalidParameter("theta curve must have one value per grid point")
    sgn = 1.0 if side is Side.UNCERTAINTY else -1.0

    def curve(omegas, th):
        g = response(sys, omegas)
        rot = np.exp(1j * sgn * np.asarray(th))[..., None, None]
        he = rot * g + np.conj(rot) * _herm(g)
        eig = np.linalg.eigvalsh(he)
        return eig[:, 0] if side is Side.UNCERTAINTY else -eig[:, -1]

    values = curve(grid.points, theta if theta.ndim else float(theta))
    k = int(np.argmin(values))
    if theta.ndim and theta.size > 1:
        # the curve is only known on the grid
        w, margin = float(grid.points[k]), float(values[k])
    else:
        th = float(theta.ravel()[0]) if theta.ndim else float(theta)
        w, margin = refine_extremum(lambda om: float(curve(np.array([om]), th)[0]), grid, k)
    set_id = SetId.G2_NONSTRICT if side is Side.UNCERTAINTY else SetId.G1_STRICT
    return _verdict(set_id, margin, w, grid, strict_tol)


# -- JSON --------------------------------------------------------------------------------------

def multiplier_from_dict(data: dict, n: int | None = None, domain=Domain.CT
                         ) -> tuple[Multiplier, JSpectralFactors | None]:
    """Parse multiplier JSON (``catalog``, ``constant`` or ``factors`` kind)."""
    if not isinstance(data, dict):
        raise InvalidParameter("multiplier JSON must be an object")
    kind = data.get("kind")
    if kind == "catalog":
        weight = data.get("weight")
        return catalog(data.get("name", ""), n=int(data.get("n", n or 1)), domain=domain,
                       epsilon=float(data.get("epsilon", 1.0)), gamma=float(data.get("gamma", 1.0)),
                       weight=from_dict(weight) if weight is not None else None,
                       theta=float(data.get("theta", 0.0)))
    if kind == "constant":
        try:
            dn, dm = int(data["n"]), int(data["m"])
        except (KeyError, TypeError, ValueError):
            raise InvalidParameter("constant multiplier needs integer 'n' and 'm'") from None
        mult = Multiplier.constant(data["pi"], dn, dm)
        try:
            factors = factorize_constant(data["pi"], dn, dm, domain)
        except (WrongInertia, SingularPsi4):
            factors = None
        return Multiplier(mult.pi11, mult.pi12, mult.pi22, name="constant", factors=factors), factors
    if kind == "factors":
        try:
            factors = JSpectralFactors(*(from_dict(data[f"psi{i}"]) for i in range(1, 5)))
        except KeyError as exc:
            raise InvalidParameter(f"factor multiplier missing {exc}") from None
        return Multiplier.from_factors(factors), factors
    raise InvalidParameter(f"unknown multiplier kind {kind!r}")
