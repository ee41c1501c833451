import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqconverse.analysis import hinf_norm
from iqconverse.errors import InvalidTarget, PhaseUnreachable, UnstableSystem
from iqconverse.lti import (
    Domain,
    StateSpaceSystem,
    boundary_point,
    default_grid,
    first_order,
    gain,
    response,
)
from iqconverse.smallgain import allpass_match, peak_gain, rank_one_delta
from iqconverse.samplers import random_stable


def value_at(sys, omega):
    return response(sys, [omega])[0]


def singularity(M, delta, cert):
    d, m = value_at(delta, cert.omega0), value_at(M, cert.omega0)
    return np.linalg.svd(np.eye(m.shape[1]) - d @ m, compute_uv=False)[-1]


def test_peak_gain_examples(grid):
    cert = peak_gain(gain(-3.0), grid)
    assert cert.beta == pytest.approx(3.0)
    assert np.allclose(cert.v, [1.0]) and np.allclose(cert.u, [-1.0])
    cert = peak_gain(first_order(-1.0, 2.0), grid)
    assert cert.omega0 == 0.0 and cert.beta == pytest.approx(2.0)
    ap = first_order(-1.0, 2.0, -1.0)  # (1 - s)/(1 + s)
    assert peak_gain(ap, grid).beta == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(np.abs(response(ap, grid.points)), 1.0)
    with pytest.raises(UnstableSystem):
        peak_gain(first_order(0.5), grid)


def test_peak_certificate_triple(grid):
    rng = np.random.default_rng(2)
    for _ in range(10):
        M = random_stable(rng, n_out=2, n_in=3)
        cert = peak_gain(M, grid)
        mat = value_at(M, cert.omega0)
        assert np.allclose(mat @ cert.v, cert.beta * cert.u, atol=1e-8)
        assert np.allclose(cert.u.conj() @ mat, cert.beta * cert.v.conj(), atol=1e-8)
        assert cert.beta == pytest.approx(hinf_norm(M, grid=grid).gamma, rel=1e-6)


def test_allpass_examples():
    assert np.allclose(allpass_match(1.0, 2.0).D, 1.0) and allpass_match(1.0, 2.0).nstates == 0
    g = allpass_match(-1j, 1.0)
    assert value_at(g, 1.0)[0, 0] == pytest.approx(-1j)
    assert g.A[0, 0] == pytest.approx(-1.0)
    g = allpass_match(-1.0, 1.0)
    assert g.nstates == 0 and g.D[0, 0] == -1.0
    with pytest.raises(PhaseUnreachable):
        allpass_match(1j, 0.0)
    with pytest.raises(PhaseUnreachable):
        allpass_match(1j, np.inf)
    with pytest.raises(InvalidTarget):
        allpass_match(2.0, 1.0)


def test_rank_one_examples(grid):
    M = gain(-3.0)
    delta = rank_one_delta(M, peak_gain(M, grid))
    assert delta.D[0, 0] == pytest.approx(-1 / 3)
    M = first_order(-1.0, 2.0)
    cert = peak_gain(M, grid)
    delta = rank_one_delta(M, cert)
    assert delta.nstates == 0 and delta.D[0, 0] == pytest.approx(0.5)
    assert singularity(M, delta, cert) <= 1e-12
    M = gain(np.diag([2.0, 0.5]))
    delta = rank_one_delta(M, peak_gain(M, grid))
    assert np.allclose(delta.D, [[0.5, 0], [0, 0]])
    assert abs(np.linalg.det(np.eye(2) - delta.D @ M.D)) <= 1e-12


def test_rank_one_tie_is_deterministic(grid):
    M = gain(np.eye(2) * 2)
    d1 = rank_one_delta(M, peak_gain(M, grid)).D
    d2 = rank_one_delta(M, peak_gain(M, grid)).D
    assert np.array_equal(d1, d2) and np.allclose(d1, [[0.5, 0], [0, 0]])


@pytest.mark.parametrize("domain", [Domain.CT, Domain.DT])
def test_rank_one_interior_peak(domain):
    # lightly damped resonance puts the peak at an interior frequency
    if domain is Domain.CT:
        M = StateSpaceSystem([[0, 1], [-4, -0.4]], [[0, 1], [1, 0.5]], [[1, 0], [0.3, 1]],
                             np.zeros((2, 2)))
    else:
        r, th = 0.9, 1.0
        M = StateSpaceSystem([[r * np.cos(th), r * np.sin(th)], [-r * np.sin(th), r * np.cos(th)]],
                             [[1, 0], [0, 1]], [[1, 0.5], [0, 1]], np.zeros((2, 2)), Domain.DT)
    grid = default_grid(domain)
    cert = peak_gain(M, grid)
    assert not cert.is_real_point
    delta = rank_one_delta(M, cert)
    assert np.all(np.isreal(delta.A))
    assert hinf_norm(delta, grid=grid).gamma == pytest.approx(1 / cert.beta, rel=1e-6)
    assert singularity(M, delta, cert) <= 1e-8
    resid = (np.eye(2) - value_at(delta, cert.omega0) @ value_at(M, cert.omega0)) @ cert.v
    assert np.linalg.norm(resid) <= 1e-8


# -- properties --------------------------------------------------------------------------

@settings(max_examples=100, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0.01, 100.0))
def test_allpass_property_ct(phi, omega0):
    target = np.exp(1j * phi)
    g = allpass_match(target, omega0)
    grid = default_grid(Domain.CT, 100)
    assert np.abs(np.abs(response(g, grid.points)) - 1).max() <= 1e-9
    assert abs(value_at(g, omega0)[0, 0] - target) <= 1e-8
    assert np.all(np.linalg.eigvals(g.A).real < 0) if g.nstates else True


@settings(max_examples=100, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0.01, np.pi - 0.01))
def test_allpass_property_dt(phi, omega0):
    target = np.exp(1j * phi)
    g = allpass_match(target, omega0, Domain.DT)
    grid = default_grid(Domain.DT, 100)
    assert np.abs(np.abs(response(g, grid.points)) - 1).max() <= 1e-9
    assert abs(value_at(g, omega0)[0, 0] - target) <= 1e-8
    assert np.all(np.abs(np.linalg.eigvals(g.A)) < 1) if g.nstates else True


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Domain.CT, Domain.DT]))
def test_rank_one_properties(seed, domain):
    rng = np.random.default_rng(seed)
    M = random_stable(rng, n_out=int(rng.integers(1, 3)), n_in=int(rng.integers(1, 3)),
                      domain=domain)
    grid = default_grid(domain, 200)
    cert = peak_gain(M, grid)
    delta = rank_one_delta(M, cert)
    assert np.all(np.isreal(delta.A)) and np.all(np.isreal(delta.D))
    assert hinf_norm(delta, grid=grid).gamma == pytest.approx(1 / cert.beta, rel=1e-6)
    assert singularity(M, delta, cert) <= 1e-8
    # conjugate symmetry of a real system
    pts = grid.points[np.isfinite(grid.points)][:20]
    lam = np.array([boundary_point(domain, w) for w in pts])
    mirrored = np.array([delta.evaluate(np.conj(z)) for z in lam])
    assert np.allclose(mirrored, np.conj([delta.evaluate(z) for z in lam]))
