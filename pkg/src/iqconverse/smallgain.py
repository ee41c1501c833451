"""Constructive small-gain destabilizer.

Given a stable ``M`` with peak gain ``beta`` at ``lambda0`` this builds a
stable rank-one ``Delta`` with ``||Delta|| = 1/beta`` and ``I - Delta M``
singular at ``lambda0``.  Phases are matched with first-order all-pass
sections so that ``Delta`` stays real-rational.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import hinf_norm, require_stable
from .errors import InvalidParameter, InvalidTarget, PhaseUnreachable
from .lti import (
    Domain,
    FrequencyGrid,
    StateSpaceSystem,
    boundary_point,
    default_grid,
    gain,
    hstack,
    response,
    series,
    vstack,
)

_PHASE_TOL = 1e-10
_REAL_SNAP_REL = 1e-9


def _sigma1(mat: np.ndarray) -> float:
    return float(np.linalg.svd(mat, compute_uv=False)[0])


@dataclass(frozen=True)
class PeakCertificate:
    """Peak frequency of ``M`` with its dominant singular triple ``M v = beta u``."""

    omega0: float
    beta: float
    u: np.ndarray
    v: np.ndarray
    domain: Domain

    @property
    def lambda0(self) -> complex:
        return boundary_point(self.domain, self.omega0)

    @property
    def is_real_point(self) -> bool:
        return _is_real_point(self.domain, self.omega0)

    def to_dict(self) -> dict:
        return {"omega0": self.omega0, "beta": self.beta, "domain": self.domain.value,
                "u": [complex(x) for x in self.u], "v": [complex(x) for x in self.v]}


def _is_real_point(domain: Domain, omega: float) -> bool:
    if domain is Domain.CT:
        return omega == 0.0 or np.isinf(omega)
    return omega == 0.0 or omega == np.pi


def _snap(domain: Domain, omega: float, grid: FrequencyGrid) -> float:
    if domain is Domain.CT:
        if omega > grid.finite_max:
            return np.inf
        return 0.0 if omega < 1e-10 else omega
    if omega < 1e-10:
        return 0.0
    return np.pi if np.pi - omega < 1e-10 else omega


def _dominant_pair(mat: np.ndarray, real: bool) -> tuple[float, np.ndarray, np.ndarray]:
    """Dominant singular triple with deterministic tie-breaking and phase."""
    if real:
        mat = mat.real
    _, s, vh = np.linalg.svd(mat)
    beta = float(s[0])
    if beta == 0.0:
        v = np.zeros(mat.shape[1])
        v[0] = 1.0
        return 0.0, np.zeros(mat.shape[0], dtype=mat.dtype), v
    tied = int(np.sum(s >= beta * (1 - 1e-9)))
    V = vh[:tied].conj().T
    if tied == 1:
        v = V[:, 0]
    else:
        # project the first standard basis vector that touches the tied subspace
        for k in range(mat.shape[1]):
            proj = V @ V[k].conj()
            if np.linalg.norm(proj) > 1e-8:
                v = proj / np.linalg.norm(proj)
                break
    first = np.flatnonzero(np.abs(v) > 1e-12)[0]
    v = v * (np.abs(v[first]) / v[first])
    if real:
        v = v.real
    u = mat @ v / beta
    return beta, u, v


def peak_gain(M: StateSpaceSystem, grid: FrequencyGrid | None = None,
              tol_rel: float | None = None) -> PeakCertificate:
    """Locate the peak of ``sigma_max(M)`` and its dominant singular vectors."""
    require_stable(M)
    grid = grid if grid is not None else default_grid(M.domain)
    res = hinf_norm(M, tol_rel, grid)
    omega0 = _snap(M.domain, res.peak_frequency, grid)
    if not _is_real_point(M.domain, omega0):
        # a flat peak next to a real point would need near-marginal phase sections
        ends = [0.0, np.inf if M.domain is Domain.CT else np.pi]
        peak = _sigma1(response(M, [omega0])[0])
        for end in ends:
            if _sigma1(response(M, [end])[0]) >= peak * (1 - _REAL_SNAP_REL):
                omega0 = end
                break
    mat = response(M, [omega0])[0]
    beta, u, v = _dominant_pair(mat, _is_real_point(M.domain, omega0))
    return PeakCertificate(omega0, beta, u, v, M.domain)


def allpass_match(target: complex, omega0: float, domain=Domain.CT) -> StateSpaceSystem:
    """Stable scalar all-pass ``g`` with ``g(lambda0) = target``.

    CT sections are ``(a - s)/(a + s)`` (optionally negated); DT sections are
    ``(1 - a z)/(z - a)`` with ``|a| < 1`` (optionally negated).
    """
    domain = Domain.parse(domain)
    target = complex(target)
    if not np.isfinite(target) or abs(abs(target) - 1.0) > 1e-10:
        raise InvalidTarget(f"target must have unit modulus, got |target| = {abs(target):.6g}")
    phi = float(np.angle(target))
    if abs(phi) <= _PHASE_TOL:
        return gain(1.0, domain)
    if abs(abs(phi) - np.pi) <= _PHASE_TOL:
        return gain(-1.0, domain)
    if _is_real_point(domain, omega0):
        raise PhaseUnreachable("real systems have real responses at this frequency")
    if domain is Domain.CT:
        if not omega0 > 0:
            raise InvalidParameter("omega0 must be positive")
        # a section of phase psi in (-pi, 0); positive phases use -g with psi = phi - pi
        sign, psi = (1.0, phi) if phi < 0 else (-1.0, phi - np.pi)
        alpha = omega0 / np.tan(-psi / 2)
        # balanced realization keeps the modulus at one to rounding
        b = np.sqrt(2 * alpha)
        return StateSpaceSystem([[-alpha]], [[b]], [[sign * b]], [[-sign]], domain)
    if not 0 < omega0 < np.pi:
        raise InvalidParameter("omega0 must lie in (0, pi)")
    for sign, psi in ((1.0, phi), (-1.0, phi - np.pi)):
        den = np.sin((psi - omega0) / 2)
        if den == 0:
            continue
        a = np.sin((psi + omega0) / 2) / den
        if abs(a) < 1:
            b = np.sqrt((1 - a) * (1 + a))
            return StateSpaceSystem([[a]], [[b]], [[sign * b]], [[-sign * a]], domain)
    raise PhaseUnreachable("no stable first-order section meets this phase")


def _magnitude_section(value: complex, omega0: float, domain: Domain) -> StateSpaceSystem:
    mag = abs(value)
    if mag < 1e-14:
        return gain(0.0, domain)
    return allpass_match(value / mag, omega0, domain) * mag


def rank_one_delta(M: StateSpaceSystem, cert: PeakCertificate) -> StateSpaceSystem:
    """Stable rank-one ``Delta`` with ``Delta(lambda0) = v u^* / beta``.

    ``||Delta||_inf = 1/beta`` and ``(I - Delta(lambda0) M(lambda0)) v = 0``.
    """
    if not cert.beta > 0:
        raise InvalidParameter("peak gain must be positive")
    if cert.v.size != M.ninputs or cert.u.size != M.noutputs:
        raise InvalidParameter("certificate vectors do not match M")
    domain = M.domain
    if cert.is_real_point:
        d = np.outer(cert.v, cert.u.conj()) / cert.beta
        if np.max(np.abs(d.imag), initial=0.0) > 1e-12:
            raise PhaseUnreachable("singular vectors at a real frequency must be real")
        return gain(d.real, domain)
    col = vstack([_magnitude_section(x, cert.omega0, domain) for x in cert.v])
    row = hstack([_magnitude_section(np.conj(x), cert.omega0, domain) for x in cert.u])
    return series(col, row) * (1.0 / cert.beta)
