"""Random stable systems and random members of the passivity classes."""

from __future__ import annotations

import numpy as np

from .analysis import input_passivity_index
from .lti import Domain, FrequencyGrid, StateSpaceSystem, gain, identity, inverse, parallel, series


def default_rng(seed: int | None = 42) -> np.random.Generator:
    return np.random.default_rng(seed)


def _stable_eigen_block(rng: np.random.Generator, nx: int, domain: Domain,
                        min_damping: float) -> np.ndarray:
    blocks = []
    left = nx
    while left > 0:
        if left >= 2 and rng.random() < 0.5:
            zeta = rng.uniform(min_damping, 0.95)
            if domain is Domain.CT:
                wn = rng.uniform(0.2, 5.0)
                sigma, omega = -zeta * wn, wn * np.sqrt(1 - zeta ** 2)
            else:
                r = rng.uniform(0.1, 0.85)
                theta = rng.uniform(0.1, np.pi - 0.1)
                sigma, omega = r * np.cos(theta), r * np.sin(theta)
            blocks.append(np.array([[sigma, omega], [-omega, sigma]]))
            left -= 2
        else:
            pole = -rng.uniform(0.2, 3.0) if domain is Domain.CT else rng.uniform(-0.85, 0.85)
            blocks.append(np.array([[pole]]))
            left -= 1
    A = np.zeros((nx, nx))
    i = 0
    for b in blocks:
        k = b.shape[0]
        A[i:i + k, i:i + k] = b
        i += k
    return A


def random_stable(rng: np.random.Generator, nx: int | None = None, n_out: int = 1,
                  n_in: int | None = None, domain=Domain.CT, max_states: int = 6,
                  min_damping: float = 0.3, feedthrough: bool = True) -> StateSpaceSystem:
    """Random stable system whose complex poles have damping at least ``min_damping``."""
    domain = Domain.parse(domain)
    n_in = n_out if n_in is None else n_in
    nx = int(rng.integers(1, max_states + 1)) if nx is None else nx
    A = _stable_eigen_block(rng, nx, domain, min_damping)
    # mild similarity keeps the realization dense but well conditioned
    T = np.eye(nx) + 0.3 * rng.standard_normal((nx, nx))
    while np.linalg.cond(T) > 50:
        T = np.eye(nx) + 0.3 * rng.standard_normal((nx, nx))
    A = T @ A @ np.linalg.inv(T)
    B = rng.standard_normal((nx, n_in))
    C = rng.standard_normal((n_out, nx))
    D = 0.5 * rng.standard_normal((n_out, n_in)) if feedthrough else np.zeros((n_out, n_in))
    return StateSpaceSystem(A, B, C, D, domain)


def shift(sys: StateSpaceSystem, c: float) -> StateSpaceSystem:
    """``G + c I``."""
    return parallel(sys, gain(c * np.eye(sys.noutputs), sys.domain))


def random_passive(rng: np.random.Generator, n: int = 1, grid: FrequencyGrid | None = None,
                   **kw) -> StateSpaceSystem:
    """Passive sample: a random stable system shifted so its input index is zero."""
    g = random_stable(rng, n_out=n, n_in=n, **kw)
    return shift(g, -input_passivity_index(g, grid).value)


def random_isp(rng: np.random.Generator, n: int = 1, grid: FrequencyGrid | None = None,
               margin: tuple[float, float] = (0.05, 1.0), **kw) -> StateSpaceSystem:
    """Input strictly passive sample with index drawn from ``margin``."""
    g = random_stable(rng, n_out=n, n_in=n, **kw)
    return shift(g, -input_passivity_index(g, grid).value + rng.uniform(*margin))


def random_osp(rng: np.random.Generator, n: int = 1, grid: FrequencyGrid | None = None,
               **kw) -> StateSpaceSystem:
    """Output strictly passive sample ``H (I + H)^-1`` with ``H`` passive (index at least one)."""
    h = random_passive(rng, n, grid, **kw)
    return series(h, inverse(parallel(identity(n, h.domain), h)))


def random_nonpassive(rng: np.random.Generator, n: int = 1, grid: FrequencyGrid | None = None,
                      **kw) -> StateSpaceSystem:
    """Random stable sample with a strictly negative input index."""
    while True:
        g = random_stable(rng, n_out=n, n_in=n, **kw)
        if input_passivity_index(g, grid).value < -1e-3:
            return g
