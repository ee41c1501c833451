import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqconverse.analysis import hinf_norm, input_passivity_index
from iqconverse.errors import (
    DimensionMismatch,
    InvalidParameter,
    ThetaOutOfRange,
    WeightVanishes,
    WrongInertia,
)
from iqconverse.lti import Domain, default_grid, first_order, gain, negate, scale
from iqconverse.multiplier import (
    JSpectralFactors,
    Multiplier,
    Profile,
    SetId,
    catalog,
    check_conditions,
    factorize_constant,
    fw_passivity_check,
    fw_smallgain_check,
    membership,
    multiplier_from_dict,
    q_form,
)
from iqconverse.samplers import random_stable

SKEW = [[0.0, 1.0], [-1.0, 0.0]]
SQ2 = np.sqrt(2.0)


def reconstruction_error(mult, factors, grid):
    pi = mult.response(grid)
    err = np.abs(factors.reconstruct(grid) - pi).max(axis=(1, 2))
    return float(np.max(err / (1 + np.abs(pi).max(axis=(1, 2)))))


@pytest.mark.parametrize("name,kw", [
    ("passivity", {}), ("osp", {"epsilon": 1.0}), ("osp", {"epsilon": 0.3}),
    ("isp", {"epsilon": 2.0}), ("smallgain", {"gamma": 0.7}),
    ("fw_smallgain", {"weight": first_order(-2.0, 3.0)}),
])
@pytest.mark.parametrize("n", [1, 3])
def test_catalog_reconstruction(name, kw, n, grid):
    mult, factors = catalog(name, n=n, **kw)
    assert reconstruction_error(mult, factors, grid) <= 1e-12
    assert mult.hermitian_residual(grid) <= 1e-10


def test_catalog_values():
    mult, f = catalog("passivity")
    assert np.allclose(mult.response(np.zeros(1))[0], [[0, 1], [1, 0]])
    assert f.psi4.D[0, 0] == pytest.approx(-1 / SQ2)
    mult, _ = catalog("osp", epsilon=1.0)
    assert mult.response(np.zeros(1))[0][1, 1] == pytest.approx(-1.0)
    mult, f = catalog("fw_passivity", theta=0.3)
    assert f is None
    with pytest.raises(InvalidParameter):
        catalog("osp", epsilon=0.0)
    with pytest.raises(InvalidParameter):
        catalog("smallgain", gamma=-1.0)
    with pytest.raises(InvalidParameter):
        catalog("bogus")


def test_q_form_examples(grid):
    mult, _ = catalog("passivity")
    g1 = first_order(-1.0)
    q = q_form(mult, negate(g1), "plant", grid).values[:, 0, 0]
    g = np.array([1 / (1j * w + 1) if np.isfinite(w) else 0 for w in grid.points])
    assert np.allclose(q, -2 * g.real)
    assert np.allclose(q_form(mult, gain(1.0), "uncertainty", grid).values, 2.0)
    sg, _ = catalog("smallgain", gamma=2.0)
    assert np.allclose(q_form(sg, gain(1.0), "plant", grid).values, 3.0)
    with pytest.raises(DimensionMismatch):
        q_form(catalog("passivity", n=2)[0], gain(1.0), "plant", grid)


def test_q_form_hermitian(grid):
    rng = np.random.default_rng(11)
    mult, _ = catalog("isp", n=2, epsilon=0.5)
    for _ in range(5):
        q = q_form(mult, random_stable(rng, n_out=2), "plant", grid).values
        assert np.abs(q - np.conj(np.swapaxes(q, 1, 2))).max() <= 1e-10


def test_membership_examples(grid):
    mult, _ = catalog("passivity")
    v = membership(mult, gain(1.0), SetId.G2_STRICT, grid)
    assert v.holds and v.margin == pytest.approx(2.0)
    skew, _ = catalog("passivity", n=2)
    v = membership(skew, negate(gain(SKEW)), "G1_nonstrict", grid)
    assert v.holds and v.margin == pytest.approx(0.0, abs=1e-12)
    assert membership(skew, negate(gain(SKEW)), "G1_strict", grid).holds is False
    v = membership(mult, negate(gain(0.5)), "G1_nonstrict", grid)
    assert v.holds and v.margin == pytest.approx(1.0)
    v = membership(mult, gain(0.5), "G1_nonstrict", grid)
    assert not v.holds and v.margin == pytest.approx(-1.0)
    assert set(v.to_dict()) == {"set_id", "holds", "margin", "worst_frequency", "grid_meta"}


def test_smallgain_membership_matches_sigma(grid):
    mult, _ = catalog("smallgain", gamma=1.0)
    assert membership(mult, gain(0.9), "G2_nonstrict", grid).holds
    assert membership(mult, gain(1.0), "G2_nonstrict", grid).holds
    assert not membership(mult, gain(1.1), "G2_nonstrict", grid).holds


def test_factorize_examples(grid):
    f = factorize_constant([[0, 1], [1, 0]], 1, 1)
    psi = f.response(np.zeros(1))[0].real
    assert np.allclose(np.abs(psi), 1 / SQ2) and f.psi4.D[0, 0] == pytest.approx(-1 / SQ2)
    f = factorize_constant(np.diag([4.0, -1.0]), 1, 1)
    assert np.allclose(f.response(np.zeros(1))[0].real, np.diag([2.0, 1.0]))
    with pytest.raises(WrongInertia):
        factorize_constant(np.eye(2), 1, 1)
    with pytest.raises(DimensionMismatch):
        factorize_constant(np.eye(3), 1, 1)


def test_factorize_random_reconstruction(grid):
    rng = np.random.default_rng(5)
    for _ in range(20):
        n, m = rng.integers(1, 4, size=2)
        Q, _ = np.linalg.qr(rng.standard_normal((n + m, n + m)))
        lam = np.concatenate([rng.uniform(0.1, 3, n), -rng.uniform(0.1, 3, m)])
        pi = Q @ np.diag(lam) @ Q.T
        try:
            f = factorize_constant(pi, n, m)
        except Exception:
            continue
        mult = Multiplier.constant(pi, n, m)
        assert reconstruction_error(mult, f, grid) <= 1e-8


def test_check_conditions_examples(grid):
    _, f = catalog("passivity")
    rep = check_conditions(f, Profile.T1, grid)
    assert rep.passed and rep["injective"].margin == pytest.approx(SQ2)
    _, f = catalog("osp", epsilon=1.0)
    rep = check_conditions(f, "T2", grid)
    assert rep.passed and rep["pi22_nd"].margin == pytest.approx(1.0)
    bad = JSpectralFactors(gain(1.0), gain(0.0), gain(0.0), gain(0.0))
    rep = check_conditions(bad, "T3", grid)
    assert not rep.passed and "psi4_inverse_stable" in rep.failures
    assert Profile.T2.checks == ("psi_stable", "psi4_inverse_stable", "pi11_psd", "pi22_nd")


def test_passivity_fails_negative_definite_profile(grid):
    _, f = catalog("passivity")
    assert check_conditions(f, "T2", grid).failures == ["pi22_nd"]


def test_fw_smallgain_examples(grid):
    one = gain(1.0)
    v = fw_smallgain_check(gain(0.5), one, grid)
    assert v.holds and v.margin == pytest.approx(0.5)
    assert not fw_smallgain_check(gain(1.0), one, grid).holds
    v = fw_smallgain_check(gain(2.0), first_order(-1.0), grid)
    assert not v.holds and v.worst_frequency == 0.0 and v.margin == pytest.approx(-1.0)
    with pytest.raises(WeightVanishes):
        fw_smallgain_check(gain(0.5), gain(0.0), grid)


def test_fw_passivity_examples(grid):
    v = fw_passivity_check(gain(1.0), 0.0, "uncertainty", grid)
    assert v.holds and v.margin == pytest.approx(2.0)
    v = fw_passivity_check(gain(1.0), np.pi / 4, "uncertainty", grid)
    assert v.holds and v.margin == pytest.approx(SQ2)
    v = fw_passivity_check(gain(SKEW), np.pi / 4, "uncertainty", grid)
    assert not v.holds and v.margin == pytest.approx(-SQ2)
    curve = np.full(len(grid), 0.2)
    assert fw_passivity_check(gain(1.0), curve, "uncertainty", grid).holds
    with pytest.raises(ThetaOutOfRange):
        fw_passivity_check(gain(1.0), np.pi / 2, "uncertainty", grid)


def test_multiplier_json_kinds():
    mult, f = multiplier_from_dict({"kind": "catalog", "name": "osp", "epsilon": 1.0})
    assert f is not None and mult.name
    mult, f = multiplier_from_dict({"kind": "constant", "pi": [[0, 1], [1, 0]], "n": 1, "m": 1})
    assert f is not None
    again, f2 = multiplier_from_dict(f.to_dict())
    assert np.allclose(f2.reconstruct(np.array([0.0, 1.0])), f.reconstruct(np.array([0.0, 1.0])))
    _, f = multiplier_from_dict({"kind": "constant", "pi": [[1, 0], [0, 1]], "n": 1, "m": 1})
    assert f is None
    with pytest.raises(InvalidParameter):
        multiplier_from_dict({"kind": "nope"})


# -- properties --------------------------------------------------------------------------

seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_passivity_set_duality(seed):
    rng = np.random.default_rng(seed)
    h = random_stable(rng, n_out=int(rng.integers(1, 3)))
    grid = default_grid(Domain.CT, 200)
    mult, _ = catalog("passivity", n=h.noutputs)
    nu = input_passivity_index(h, grid).value
    if abs(nu) < 1e-6:
        return
    assert membership(mult, h, "G2_strict", grid).holds == (nu > 0)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.2, 3.0))
def test_smallgain_membership_vs_hinf(seed, gamma):
    rng = np.random.default_rng(seed)
    g = random_stable(rng, n_out=int(rng.integers(1, 3)))
    grid = default_grid(Domain.CT, 200)
    mult, _ = catalog("smallgain", n=g.noutputs, gamma=gamma)
    norm = hinf_norm(g, grid=grid).gamma
    if abs(norm * gamma - 1) < 1e-5:
        return
    assert membership(mult, g, "G1_strict", grid).holds == (norm < 1 / gamma)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_scaling_smallgain_set(seed):
    rng = np.random.default_rng(seed)
    g = random_stable(rng)
    grid = default_grid(Domain.CT, 200)
    norm = hinf_norm(g, grid=grid).gamma
    mult, _ = catalog("smallgain", gamma=1.0)
    assert membership(mult, scale(g, 0.9 / norm), "G1_strict", grid).holds
    assert not membership(mult, scale(g, 1.1 / norm), "G1_strict", grid).holds
