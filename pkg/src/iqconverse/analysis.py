"""H-infinity norm and passivity quantities on the stability boundary."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import tolerances as tol
from .errors import NotSquare, UnstableSystem
from .lti import Domain, FrequencyGrid, StateSpaceSystem, default_grid, is_stable, response


def _grid_for(sys: StateSpaceSystem, grid: FrequencyGrid | None) -> FrequencyGrid:
    return grid if grid is not None else default_grid(sys.domain)


def require_stable(sys: StateSpaceSystem, what: str = "system") -> None:
    stab = is_stable(sys)
    if not stab.stable:
        raise UnstableSystem(f"{what} is not stable (margin {stab.margin:.3g})")


def require_square(sys: StateSpaceSystem) -> None:
    if sys.noutputs != sys.ninputs:
        raise NotSquare(f"system must be square, got {sys.shape}")


def refine_extremum(func: Callable[[float], float], grid: FrequencyGrid, index: int,
                    maximize: bool = False) -> tuple[float, float]:
    """Polish a grid extremum of ``func`` inside the neighbouring grid cells.

    Returns ``(omega, value)``; never returns anything worse than the grid
    point itself.  The infinity sentinel is not refined.
    """
    pts = grid.points
    w0 = float(pts[index])
    f0 = func(w0)
    if np.isinf(w0):
        return w0, f0
    lo = float(pts[index - 1]) if index > 0 else w0
    hi = float(pts[index + 1]) if index + 1 < pts.size else w0
    if np.isinf(hi):
        hi = w0
    if hi <= lo:
        return w0, f0
    sign = -1.0 if maximize else 1.0
    log_scale = grid.domain is Domain.CT and lo > 0

    def objective(x):
        value = func(float(np.exp(x)) if log_scale else float(x))
        return sign * value if np.isfinite(value) else np.inf

    bounds = (np.log(lo), np.log(hi)) if log_scale else (lo, hi)
    best_w, best_f = w0, f0
    # three passes, each on a window shrunk around the incumbent
    for _ in range(3):
        res = minimize_scalar(objective, bounds=bounds, method="bounded",
                              options={"xatol": 1e-12 * max(1.0, abs(bounds[1]))})
        w = float(np.exp(res.x)) if log_scale else float(res.x)
        f = func(w)
        if np.isfinite(f) and sign * f < sign * best_f:
            best_w, best_f = w, f
        else:
            break
        x = np.log(best_w) if log_scale else best_w
        half = (bounds[1] - bounds[0]) / 4
        bounds = (max(bounds[0], x - half), min(bounds[1], x + half))
        if bounds[1] <= bounds[0]:
            break
    return best_w, best_f


def _sigma_max(values: np.ndarray) -> np.ndarray:
    if values.shape[1] == 0 or values.shape[2] == 0:
        return np.zeros(values.shape[0])
    return np.linalg.svd(values, compute_uv=False)[..., 0]


def sigma_max_at(sys: StateSpaceSystem, omega: float) -> float:
    return float(_sigma_max(response(sys, [omega]))[0])


# -- H-infinity ----------------------------------------------------------------------

@dataclass(frozen=True)
class HinfResult:
    gamma: float
    peak_frequency: float


def _hamiltonian(sys: StateSpaceSystem, gamma: float) -> np.ndarray:
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    R = gamma ** 2 * np.eye(sys.ninputs) - D.T @ D
    Rinv = np.linalg.inv(R)
    Ah = A + B @ Rinv @ D.T @ C
    top = np.hstack([Ah, B @ Rinv @ B.T])
    bottom = np.hstack([-C.T @ (np.eye(sys.noutputs) + D @ Rinv @ D.T) @ C, -Ah.T])
    return np.vstack([top, bottom])


def _imaginary_axis_frequencies(sys: StateSpaceSystem, gamma: float) -> np.ndarray:
    eigs = np.linalg.eigvals(_hamiltonian(sys, gamma))
    # loose on purpose: spurious candidates only cost an extra evaluation
    on_axis = np.abs(eigs.real) < 1e-5 * (1.0 + np.abs(eigs))
    return np.unique(np.abs(eigs[on_axis].imag))


def _local_maxima(values: np.ndarray, count: int) -> list[int]:
    idx = [i for i in range(values.size)
           if (i == 0 or values[i] >= values[i - 1])
           and (i == values.size - 1 or values[i] >= values[i + 1])]
    idx.sort(key=lambda i: -values[i])
    return idx[:count]


def hinf_norm(sys: StateSpaceSystem, tol_rel: float | None = None,
              grid: FrequencyGrid | None = None) -> HinfResult:
    """Peak of the largest singular value over the stability boundary.

    Continuous time: grid seed followed by Hamiltonian-based peak iteration
    (eigenvalues of the Hamiltonian on the imaginary axis mark frequencies
    where the gain crosses the current level).  Discrete time: grid sweep
    with local refinement of the best few peaks.
    """
    require_stable(sys)
    grid = _grid_for(sys, grid)
    if tol_rel is None:
        tol_rel = tol.HINF_TOL_CT if sys.domain is Domain.CT else tol.HINF_TOL_DT
    if sys.nstates == 0 or sys.noutputs == 0 or sys.ninputs == 0:
        gamma = float(np.linalg.norm(sys.D, 2)) if sys.D.size else 0.0
        return HinfResult(gamma, float(grid.points[0]))

    values = _sigma_max(response(sys, grid.points))
    k = int(np.argmax(values))
    best_w, best_g = float(grid.points[k]), float(values[k])

    for i in _local_maxima(values, 3):
        w, g = refine_extremum(lambda om: sigma_max_at(sys, om), grid, i, maximize=True)
        if g > best_g:
            best_w, best_g = w, g
    if sys.domain is Domain.DT or best_g == 0.0:
        return HinfResult(best_g, best_w)

    d_norm = float(np.linalg.norm(sys.D, 2))
    if d_norm > best_g:
        best_w, best_g = np.inf, d_norm
    for _ in range(60):
        level = (1.0 + 2.0 * tol_rel) * best_g
        if level <= d_norm:
            level = d_norm * (1.0 + 2.0 * tol_rel)
        freqs = _imaginary_axis_frequencies(sys, level)
        if freqs.size == 0:
            break
        if freqs.size == 1:
            candidates = freqs
        else:
            candidates = np.concatenate([(freqs[:-1] + freqs[1:]) / 2, freqs])
        gains = _sigma_max(response(sys, candidates))
        j = int(np.argmax(gains))
        if gains[j] > best_g * (1.0 + tol_rel / 4):
            best_w, best_g = float(candidates[j]), float(gains[j])
            continue
        # midpoints did not improve; search each crossing interval directly
        improved = False
        for a, b in zip(freqs[:-1], freqs[1:]):
            if b <= a:
                continue
            res = minimize_scalar(lambda om: -sigma_max_at(sys, om), bounds=(a, b),
                                  method="bounded", options={"xatol": 1e-12 * max(1.0, b)})
            if -res.fun > best_g * (1.0 + tol_rel / 4):
                best_w, best_g, improved = float(res.x), float(-res.fun), True
        if not improved:
            break
    return HinfResult(best_g, best_w)


# -- passivity ------------------------------------------------------------------------

def _he_min(values: np.ndarray) -> np.ndarray:
    herm = values + np.conj(np.swapaxes(values, -1, -2))
    return np.linalg.eigvalsh(herm)[..., 0]


@dataclass(frozen=True)
class PassivityIndex:
    value: float
    worst_frequency: float


def input_passivity_index(sys: StateSpaceSystem, grid: FrequencyGrid | None = None
                          ) -> PassivityIndex:
    """Largest ``nu`` with ``He G(lambda) >= 2 nu I`` on the grid (refined)."""
    require_square(sys)
    require_stable(sys)
    grid = _grid_for(sys, grid)
    he = _he_min(response(sys, grid.points))
    k = int(np.argmin(he))
    w, value = refine_extremum(lambda om: float(_he_min(response(sys, [om]))[0]), grid, k)
    return PassivityIndex(0.5 * value, w)


def _rho_pointwise(g: np.ndarray, rank_tol: float = tol.RANK_TOL) -> float:
    """Largest ``rho`` with ``He g >= 2 rho g^* g`` at one boundary point."""
    h = g + g.conj().T
    _, s, vh = np.linalg.svd(g)
    r = int(np.sum(s > rank_tol * max(1.0, s[0] if s.size else 0.0)))
    if r == 0:
        return np.inf
    V = vh.conj().T
    Vr, Vk = V[:, :r], V[:, r:]
    if Vk.shape[1]:
        cross = Vr.conj().T @ h @ Vk
        if np.linalg.norm(cross) > rank_tol * (1.0 + np.linalg.norm(h)):
            # kernel directions couple to the range: no finite rho works
            return -np.inf
    hr = Vr.conj().T @ h @ Vr
    x = hr / np.outer(s[:r], s[:r])
    return 0.5 * float(np.linalg.eigvalsh((x + x.conj().T) / 2)[0])


def output_passivity_index(sys: StateSpaceSystem, grid: FrequencyGrid | None = None
                           ) -> PassivityIndex:
    """Largest ``rho`` with ``He G >= 2 rho G^* G`` on the grid.

    ``+inf`` for the zero system; ``-inf`` when some boundary point admits no
    finite ``rho``.
    """
    require_square(sys)
    require_stable(sys)
    grid = _grid_for(sys, grid)
    values = response(sys, grid.points)
    rhos = np.array([_rho_pointwise(g) for g in values])
    k = int(np.argmin(rhos))
    if not np.isfinite(rhos[k]):
        return PassivityIndex(float(rhos[k]), float(grid.points[k]))
    w, value = refine_extremum(lambda om: _rho_pointwise(response(sys, [om])[0]), grid, k)
    return PassivityIndex(float(value), w)


class PassivityClass(str, enum.Enum):
    NOT_PASSIVE = "NotPassive"
    PASSIVE = "Passive"
    OUTPUT_STRICT = "OutputStrict"
    INPUT_STRICT = "InputStrict"


@dataclass(frozen=True)
class PassivityReport:
    nu: float
    rho: float
    classification: PassivityClass
    worst_frequency_nu: float
    worst_frequency_rho: float
    grid_meta: dict

    @property
    def is_passive(self) -> bool:
        return self.classification is not PassivityClass.NOT_PASSIVE

    @property
    def is_output_strict(self) -> bool:
        return self.classification in (PassivityClass.OUTPUT_STRICT, PassivityClass.INPUT_STRICT)

    @property
    def is_input_strict(self) -> bool:
        return self.classification is PassivityClass.INPUT_STRICT

    def to_dict(self) -> dict:
        return {"nu": self.nu, "rho": self.rho, "classification": self.classification.value,
                "worst_frequency_nu": self.worst_frequency_nu,
                "worst_frequency_rho": self.worst_frequency_rho, "grid_meta": self.grid_meta}


def classify(nu: float, rho: float, strict_tol: float = tol.STRICT_TOL) -> PassivityClass:
    if nu > strict_tol:
        return PassivityClass.INPUT_STRICT
    if nu >= -strict_tol:
        return PassivityClass.OUTPUT_STRICT if rho > strict_tol else PassivityClass.PASSIVE
    return PassivityClass.NOT_PASSIVE


def classify_passivity(sys: StateSpaceSystem, grid: FrequencyGrid | None = None,
                       strict_tol: float = tol.STRICT_TOL) -> PassivityReport:
    grid = _grid_for(sys, grid)
    nu = input_passivity_index(sys, grid)
    rho = output_passivity_index(sys, grid)
    return PassivityReport(nu.value, rho.value, classify(nu.value, rho.value, strict_tol),
                           nu.worst_frequency, rho.worst_frequency, grid.meta())
