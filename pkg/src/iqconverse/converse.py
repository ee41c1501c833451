"""Converse IQC engine: build a complementary-set ``G2`` that breaks ``[G1, G2]``.

The plant seen by the multiplier is ``P = G1`` (positive convention) or
``P = -G1`` (negative convention, the usual passivity setting ``[-G1, G2]``).
With ``Xi = psi3 P + psi4``:

* Case A, ``Xi`` not boundedly invertible: ``G2 = -psi4^-1 psi3``.
* Case B: ``M = (psi1 P + psi2) Xi^-1``, ``Delta`` from the small-gain
  construction and ``G2 = -(psi4 - Delta psi2)^-1 (psi3 - Delta psi1)``;
  under the uniform-stability profiles a family ``Delta_rho = rho Delta``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import tolerances as tol
from .analysis import require_stable
from .errors import (
    ConditionsFailed,
    DimensionMismatch,
    InvalidParameter,
    NotInvertible,
    NotWellPosed,
    NumericalFailure,
    PlantSatisfiesIqc,
    UnstableClosedLoop,
    VerificationFailed,
)
from .feedback import Sign, closed_loop_gain, interconnect
from .lti import (
    Domain,
    FrequencyGrid,
    StateSpaceSystem,
    boundary_point,
    default_grid,
    evaluate,
    from_dict,
    inverse,
    is_stable,
    negate,
    parallel,
    response,
    series,
    stability_margin,
    to_dict,
)
from .multiplier import (
    JSpectralFactors,
    Multiplier,
    Profile,
    SetId,
    check_conditions,
    membership,
)
from .smallgain import peak_gain, rank_one_delta

DEFAULT_RHO_LADDER = (0.5, 0.9, 0.99, 0.999)
# beta this close to one is treated as the non-strict case
DOWNGRADE_BAND = 1e-6


class Branch(str, enum.Enum):
    CASE_A = "CaseA_Psi4Path"
    CASE_B = "CaseB_DeltaPath"
    RHO_FAMILY = "CaseB_RhoFamily"


def plant(g1: StateSpaceSystem, convention=Sign.POSITIVE) -> StateSpaceSystem:
    return g1 if Sign.parse(_val(convention)) is Sign.POSITIVE else negate(g1)


def _val(x):
    return x.value if isinstance(x, enum.Enum) else x


# -- chain scattering ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ChainScatter:
    xi: StateSpaceSystem
    m: StateSpaceSystem | None
    invertible: bool
    lambda0: complex | None = None
    reason: str = ""


def chain_scatter(g1: StateSpaceSystem, factors: JSpectralFactors,
                  grid: FrequencyGrid | None = None, convention=Sign.POSITIVE,
                  stability_tol: float = tol.STABILITY_TOL) -> ChainScatter:
    """``Xi = psi3 P + psi4`` and, when ``Xi`` is boundedly invertible, ``M``."""
    require_stable(g1)
    p = plant(g1, convention)
    if p.shape != (factors.n, factors.m):
        raise DimensionMismatch(f"G1 must be {(factors.n, factors.m)} for these factors, got {p.shape}")
    grid = grid if grid is not None else default_grid(g1.domain)
    xi = parallel(series(factors.psi3, p), factors.psi4)
    num = parallel(series(factors.psi1, p), factors.psi2)
    inf = complex(np.inf, 0.0)
    try:
        xi_inv = inverse(xi)
    except NotInvertible:
        return ChainScatter(xi, None, False, inf, "feedthrough of Xi is singular")
    eigs = np.linalg.eigvals(xi_inv.A) if xi_inv.nstates else np.zeros(0, complex)
    if eigs.size:
        margins = np.array([stability_margin(xi.domain, [e]) for e in eigs])
        k = int(np.argmin(margins))
        if margins[k] < stability_tol:
            return ChainScatter(xi, None, False, complex(eigs[k]), "Xi has a zero outside the stability region")
    svals = np.linalg.svd(response(xi, grid.points), compute_uv=False)[:, -1]
    k = int(np.argmin(svals))
    if svals[k] < 1e-8:
        return ChainScatter(xi, None, False, boundary_point(xi.domain, grid.points[k]),
                            "Xi loses rank on the boundary")
    return ChainScatter(xi, series(num, xi_inv), True)


# -- certificates ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FamilyMember:
    rho: float
    g2: StateSpaceSystem
    gain: float
    qc_margin: float
    # min eigenvalue of I - rho^2 Delta^* Delta, the factor between zeta1^* and zeta1 in q^c
    contraction_margin: float = np.nan

    def to_dict(self) -> dict:
        return {"rho": self.rho, "g2": to_dict(self.g2), "gain": self.gain,
                "qc_margin": self.qc_margin, "contraction_margin": self.contraction_margin}


@dataclass(frozen=True, eq=False)
class DestabilizationCertificate:
    branch: Branch
    g2: StateSpaceSystem | None
    lambda0: complex | None
    omega0: float | None
    beta: float | None
    delta: StateSpaceSystem | None
    profile: Profile
    convention: Sign
    diagnostics: dict = field(default_factory=dict)
    family: tuple[FamilyMember, ...] = ()
    downgraded: bool = False

    @property
    def gain_table(self) -> list[tuple[float, float]]:
        return [(f.rho, f.gain) for f in self.family]

    def to_dict(self) -> dict:
        out = {"branch": self.branch.value, "profile": self.profile.value,
               "convention": self.convention.value, "downgraded": self.downgraded,
               "lambda0": _complex_out(self.lambda0), "omega0": self.omega0, "beta": self.beta,
               "g2": to_dict(self.g2) if self.g2 is not None else None,
               "delta": to_dict(self.delta) if self.delta is not None else None,
               "diagnostics": dict(self.diagnostics)}
        if self.family:
            out["family"] = [f.to_dict() for f in self.family]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "DestabilizationCertificate":
        try:
            family = tuple(FamilyMember(float(f["rho"]), from_dict(f["g2"]), float(f["gain"]),
                                        float(f.get("qc_margin", np.nan)),
                                        float(f.get("contraction_margin", np.nan)))
                           for f in data.get("family", []))
            return cls(Branch(data["branch"]),
                       from_dict(data["g2"]) if data.get("g2") is not None else None,
                       _complex_in(data.get("lambda0")),
                       None if data.get("omega0") is None else float(data["omega0"]),
                       None if data.get("beta") is None else float(data["beta"]),
                       from_dict(data["delta"]) if data.get("delta") is not None else None,
                       Profile.parse(data.get("profile", "T1")),
                       Sign.parse(data.get("convention", "positive")),
                       dict(data.get("diagnostics", {})), family, bool(data.get("downgraded", False)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameter(f"malformed certificate: {exc}") from None


def _complex_out(z):
    if z is None:
        return None
    z = complex(z)
    if np.isinf(z.real) or np.isinf(z.imag):
        return "inf"
    return {"re": z.real, "im": z.imag}


def _complex_in(z):
    if z is None:
        return None
    if z == "inf":
        return complex(np.inf, 0.0)
    if isinstance(z, dict):
        return complex(float(z["re"]), float(z["im"]))
    return complex(z)


# -- construction -------------------------------------------------------------------------------

def _value_at(sys: StateSpaceSystem, lam: complex) -> np.ndarray:
    if np.isinf(lam):
        return sys.D.astype(complex)
    return evaluate(sys, lam)


def _g2_from_delta(factors: JSpectralFactors, delta: StateSpaceSystem) -> StateSpaceSystem:
    left = parallel(factors.psi4, negate(series(delta, factors.psi2)))
    right = parallel(factors.psi3, negate(series(delta, factors.psi1)))
    try:
        return negate(series(inverse(left), right))
    except NotInvertible:
        raise NumericalFailure("psi4 - Delta psi2 is not invertible") from None


def _case_a_g2(factors: JSpectralFactors) -> StateSpaceSystem:
    return negate(series(inverse(factors.psi4), factors.psi3))


def _target_set(profile: Profile) -> SetId:
    return SetId.G2_STRICT if profile is Profile.T1 else SetId.G2_NONSTRICT


def _family(g1, factors, mult, delta, rho_ladder, grid, convention, strict_tol):
    members = []
    dd = response(delta, grid.points)
    dtd = np.conj(np.swapaxes(dd, 1, 2)) @ dd
    dmax = float(np.max(np.linalg.eigvalsh((dtd + np.conj(np.swapaxes(dtd, 1, 2))) / 2)[:, -1]))
    for rho in rho_ladder:
        rho = float(rho)
        if not 0 <= rho < 1:
            raise InvalidParameter("rho values must lie in [0, 1)")
        g2 = _g2_from_delta(factors, delta * rho)
        if not is_stable(g2).stable:
            raise NumericalFailure(f"family member at rho={rho:g} is not stable")
        verdict = membership(mult, g2, SetId.G2_NONSTRICT, grid, strict_tol)
        if not verdict.holds:
            raise NumericalFailure(f"family member at rho={rho:g} leaves the target set "
                                   f"(margin {verdict.margin:.3g})")
        try:
            g = closed_loop_gain(interconnect(g1, g2, convention), block=(2, 2), grid=grid)
        except (NotWellPosed, UnstableClosedLoop) as exc:
            raise NumericalFailure(f"family member at rho={rho:g}: {exc}") from None
        members.append(FamilyMember(rho, g2, float(g), float(verdict.margin), 1.0 - rho ** 2 * dmax))
    return tuple(members)


def _peak_data(g1, factors, grid, convention):
    cs = chain_scatter(g1, factors, grid, convention)
    if not cs.invertible:
        return cs, None, None
    cert = peak_gain(cs.m, grid)
    return cs, cert, rank_one_delta(cs.m, cert)


def destabilize(g1: StateSpaceSystem, factors: JSpectralFactors,
                multiplier: Multiplier | None = None, profile=Profile.T1,
                grid: FrequencyGrid | None = None, rho_ladder=DEFAULT_RHO_LADDER,
                convention=Sign.POSITIVE, strict_tol: float = tol.STRICT_TOL
                ) -> DestabilizationCertificate:
    """Construct a destabilizing (or gain-exploding) ``G2`` for a plant that violates the IQC."""
    profile = Profile.parse(_val(profile))
    convention = Sign.parse(_val(convention))
    require_stable(g1)
    grid = grid if grid is not None else default_grid(g1.domain)
    report = check_conditions(factors, profile, grid, strict_tol)
    if not report.passed:
        raise ConditionsFailed(f"factor conditions for {profile.value} fail: "
                               f"{', '.join(report.failures)}", report)
    mult = multiplier if multiplier is not None else Multiplier.from_factors(factors)
    p = plant(g1, convention)
    plant_set = SetId.G1_NONSTRICT if profile is Profile.T1 else SetId.G1_STRICT
    verdict = membership(mult, p, plant_set, grid, strict_tol)
    if verdict.holds:
        raise PlantSatisfiesIqc(f"plant lies in {plant_set.value} (margin {verdict.margin:.3g}); "
                                "nothing to destabilize")

    cs, cert, delta = _peak_data(g1, factors, grid, convention)
    diagnostics = {"plant_margin": verdict.margin, "plant_worst_frequency": verdict.worst_frequency}
    target = _target_set(profile)

    if not cs.invertible:
        g2 = _case_a_g2(factors)
        qc = membership(mult, g2, target, grid, strict_tol)
        diagnostics.update(xi_reason=cs.reason)
        result = DestabilizationCertificate(Branch.CASE_A, g2, cs.lambda0, _omega_of(cs.lambda0, g1.domain),
                                            None, None, profile, convention, diagnostics)
        return _finish(result, g1, factors, mult, grid, qc.margin)

    beta = cert.beta
    diagnostics["m_norm"] = beta
    downgraded = False
    use_family = profile in (Profile.T3, Profile.T4)
    if profile is Profile.T1 and beta <= 1 + DOWNGRADE_BAND:
        if beta < 1 - DOWNGRADE_BAND:
            raise NumericalFailure(f"peak gain {beta:.6g} contradicts the membership test")
        use_family = downgraded = True
    elif beta < 1 - DOWNGRADE_BAND:
        raise NumericalFailure(f"peak gain {beta:.6g} contradicts the membership test")

    if use_family:
        family = _family(g1, factors, mult, delta, rho_ladder, grid, convention, strict_tol)
        diagnostics["gain_table"] = [[f.rho, f.gain] for f in family]
        result = DestabilizationCertificate(Branch.RHO_FAMILY, None, cert.lambda0, cert.omega0, beta,
                                            delta, profile, convention, diagnostics, family,
                                            downgraded)
        return _finish(result, g1, factors, mult, grid,
                       min(f.qc_margin for f in family) if family else None)

    g2 = _g2_from_delta(factors, delta)
    if not is_stable(g2).stable:
        raise NumericalFailure("constructed G2 is not stable")
    qc = membership(mult, g2, target, grid, strict_tol)
    result = DestabilizationCertificate(Branch.CASE_B, g2, cert.lambda0, cert.omega0, beta, delta,
                                        profile, convention, diagnostics)
    return _finish(result, g1, factors, mult, grid, qc.margin)


def _omega_of(lam: complex, domain: Domain) -> float | None:
    if np.isinf(lam):
        return np.inf if domain is Domain.CT else None
    if domain is Domain.CT and abs(lam.real) < 1e-12:
        return abs(lam.imag)
    if domain is Domain.DT and abs(abs(lam) - 1) < 1e-12:
        return abs(float(np.angle(lam)))
    return None


def _finish(cert, g1, factors, mult, grid, qc_margin):
    rep = verify_certificate(cert, g1, factors, mult, grid, raise_on_failure=False)
    diag = dict(cert.diagnostics)
    diag.update(qc_margin=qc_margin,
                zeta_identity_residual=rep.value("zeta_identity"),
                chain_identity_residual=rep.value("chain_identity"),
                closedloop_singularity_residual=rep.value("closedloop_singularity"))
    out = DestabilizationCertificate(cert.branch, cert.g2, cert.lambda0, cert.omega0, cert.beta,
                                     cert.delta, cert.profile, cert.convention, diag, cert.family,
                                     cert.downgraded)
    if not rep.passed:
        raise NumericalFailure(f"certificate failed self-verification: {', '.join(rep.failures)}")
    return out


# -- verification ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationItem:
    name: str
    passed: bool
    value: float
    threshold: float


@dataclass(frozen=True)
class VerificationReport:
    items: tuple[VerificationItem, ...]

    @property
    def passed(self) -> bool:
        return all(i.passed for i in self.items)

    @property
    def failures(self) -> list[str]:
        return [i.name for i in self.items if not i.passed]

    def value(self, name: str) -> float:
        for i in self.items:
            if i.name == name:
                return i.value
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "items": [{"name": i.name, "passed": i.passed, "value": i.value,
                           "threshold": i.threshold} for i in self.items]}


def _fro_max(x: np.ndarray) -> float:
    return float(np.max(np.linalg.norm(x, ord=2, axis=(1, 2)))) if x.size else 0.0


def _identity_residuals(factors, p, g2, delta, omegas):
    p1, p2, p3, p4 = (response(f, omegas) for f in factors.blocks())
    gg = response(g2, omegas)
    pp = response(p, omegas)
    d = response(delta, omegas) if delta is not None else np.zeros(
        (len(omegas), factors.m, factors.n))
    zeta1 = p1 + p2 @ gg
    zeta2 = p3 + p4 @ gg
    zeta_res = _fro_max(zeta2 - d @ zeta1)
    xi = p3 @ pp + p4
    lhs = xi - d @ (p1 @ pp + p2)
    rhs = (p4 - d @ p2) @ (np.eye(factors.m) - gg @ pp)
    scale = 1.0 + max(_fro_max(xi), _fro_max(lhs))
    return zeta_res, _fro_max(lhs - rhs), scale, 1.0 + _fro_max(zeta1)


def verify_certificate(cert: DestabilizationCertificate, g1: StateSpaceSystem,
                       factors: JSpectralFactors, multiplier: Multiplier | None = None,
                       grid: FrequencyGrid | None = None, raise_on_failure: bool = True,
                       residual_tol: float = tol.RESIDUAL_TOL,
                       strict_tol: float = tol.STRICT_TOL) -> VerificationReport:
    """Independently re-check a certificate.

    Items: ``g2_stable``, ``complementary_membership``, ``zeta_identity``,
    ``chain_identity`` and ``closedloop_singularity``.  For a family the
    last item is the limiting singularity of ``I - Delta M`` at ``lambda0``
    combined with strictly increasing gains.
    """
    grid = grid if grid is not None else default_grid(g1.domain)
    mult = multiplier if multiplier is not None else Multiplier.from_factors(factors)
    p = plant(g1, cert.convention)
    items = []
    if cert.branch is Branch.RHO_FAMILY:
        members = [(f.g2, cert.delta * f.rho if cert.delta is not None else None)
                   for f in cert.family]
        target = SetId.G2_NONSTRICT
    else:
        members = [(cert.g2, cert.delta)]
        target = _target_set(cert.profile)
    if not members or any(g is None for g, _ in members):
        raise InvalidParameter("certificate carries no G2")

    margins = [is_stable(g).margin for g, _ in members]
    items.append(VerificationItem("g2_stable", min(margins) > tol.STABILITY_TOL,
                                  float(min(margins)), tol.STABILITY_TOL))
    qcs = [membership(mult, g, target, grid, strict_tol) if is_stable(g).stable else None
           for g, _ in members]
    qc_ok = all(v is not None and v.holds for v in qcs)
    qc_val = min((v.margin for v in qcs if v is not None), default=-np.inf)
    items.append(VerificationItem("complementary_membership", qc_ok, float(qc_val),
                                  strict_tol if target.strict else -strict_tol))

    zeta, chain = 0.0, 0.0
    zeta_thr = chain_thr = np.inf
    for g, d in members:
        if g.domain is not g1.domain and g.nstates and g1.nstates:
            raise DimensionMismatch("certificate and plant domains differ")
        z, c, sc_chain, sc_zeta = _identity_residuals(factors, p, g, d, grid.points)
        zeta, chain = max(zeta, z), max(chain, c)
        zeta_thr = min(zeta_thr, residual_tol * sc_zeta)
        chain_thr = min(chain_thr, residual_tol * sc_chain)
    items.append(VerificationItem("zeta_identity", zeta <= zeta_thr, zeta, zeta_thr))
    items.append(VerificationItem("chain_identity", chain <= chain_thr, chain, chain_thr))

    lam = cert.lambda0
    if lam is None:
        items.append(VerificationItem("closedloop_singularity", False, np.inf, residual_tol))
    elif cert.branch is Branch.RHO_FAMILY:
        cs = chain_scatter(g1, factors, grid, cert.convention)
        if not cs.invertible or cert.delta is None:
            sing = np.inf
        else:
            mat = np.eye(factors.m) - _value_at(cert.delta, lam) @ _value_at(cs.m, lam)
            sing = float(np.linalg.svd(mat, compute_uv=False)[-1])
        gains = [f.gain for f in cert.family]
        increasing = all(b > a for a, b in zip(gains, gains[1:]))
        items.append(VerificationItem("closedloop_singularity", sing <= residual_tol and increasing,
                                      sing, residual_tol))
    else:
        g2v, pv = _value_at(cert.g2, lam), _value_at(p, lam)
        sing = float(np.linalg.svd(np.eye(factors.m) - g2v @ pv, compute_uv=False)[-1])
        thr = residual_tol * (1.0 + np.linalg.norm(g2v @ pv, 2))
        items.append(VerificationItem("closedloop_singularity", sing <= thr, sing, thr))

    report = VerificationReport(tuple(items))
    if raise_on_failure and not report.passed:
        raise VerificationFailed(report.failures[0], report)
    return report


def divergence_sweep(g1: StateSpaceSystem, factors: JSpectralFactors, rho_list=DEFAULT_RHO_LADDER,
                     grid: FrequencyGrid | None = None, convention=Sign.POSITIVE,
                     multiplier: Multiplier | None = None,
                     strict_tol: float = tol.STRICT_TOL) -> list[tuple[float, float]]:
    """Gains ``||(I - G2rho P)^-1 G2rho||`` along ``Delta_rho = rho Delta``."""
    convention = Sign.parse(_val(convention))
    require_stable(g1)
    grid = grid if grid is not None else default_grid(g1.domain)
    cs, cert, delta = _peak_data(g1, factors, grid, convention)
    if not cs.invertible:
        raise InvalidParameter("Xi is not boundedly invertible; the rho family does not apply")
    if cert.beta < 1 - DOWNGRADE_BAND:
        raise PlantSatisfiesIqc(f"||M|| = {cert.beta:.6g} < 1; the gains stay bounded")
    mult = multiplier if multiplier is not None else Multiplier.from_factors(factors)
    family = _family(g1, factors, mult, delta, rho_list, grid, convention, strict_tol)
    return [(f.rho, f.gain) for f in family]
