import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from iqconverse.cli import run
from iqconverse.lti import Domain, first_order, from_dict, gain, response, to_dict, default_grid
from iqconverse.samplers import random_stable
from iqconverse.serialize import dumps, format_float, read_json, write_json

PASSIVITY = '{"kind":"catalog","name":"passivity"}'


@pytest.fixture
def files(tmp_path):
    def put(name, sys):
        path = tmp_path / name
        write_json(to_dict(sys), path)
        return str(path)
    return put


def out_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_destabilize_example(files, tmp_path, capsys):
    g1 = files("g1.json", gain(0.5))
    g2_path, cert_path = tmp_path / "g2.json", tmp_path / "cert.json"
    code = run(["destabilize", "--g1", g1, "--multiplier", PASSIVITY, "--profile", "t1",
                "--out", str(g2_path), "--cert", str(cert_path)])
    assert code == 0
    cert = read_json(cert_path)
    assert cert["beta"] == pytest.approx(3.0) and cert["branch"] == "CaseB_DeltaPath"
    assert from_dict(read_json(g2_path)).D[0, 0] == pytest.approx(2.0)
    assert run(["verify-cert", "--cert", str(cert_path), "--g1", g1,
                "--multiplier", PASSIVITY]) == 0
    assert out_json(capsys)["passed"] is True


def test_closed_loop_skew_not_well_posed(files, capsys):
    skew = files("skew.json", gain([[0.0, 1.0], [-1.0, 0.0]]))
    assert run(["closed-loop", "--g1", skew, "--g2", skew, "--sign", "negative"]) == 1
    assert "not well-posed" in capsys.readouterr().err


def test_hinf_lag(files, capsys):
    assert run(["hinf", "--system", files("lag.json", first_order(-1.0))]) == 0
    text = capsys.readouterr().out
    assert '"gamma": 1.0' in text


def test_exit_codes(files, tmp_path, capsys):
    stable_loop = files("lag.json", first_order(-1.0))
    half = files("half.json", gain(0.5))
    two = files("two.json", gain(2.0))
    assert run(["closed-loop", "--g1", stable_loop, "--g2", half]) == 0
    assert out_json(capsys)["stable"] is True
    assert run(["closed-loop", "--g1", stable_loop, "--g2", two]) == 1
    assert run(["membership", "--system", half, "--multiplier", PASSIVITY,
                "--set", "G2_strict"]) == 0
    assert run(["membership", "--system", half, "--multiplier", PASSIVITY,
                "--set", "G1_nonstrict"]) == 1
    # plant already inside the non-strict set: nothing to destabilize
    neg = files("neg.json", gain(-0.5))
    assert run(["destabilize", "--g1", neg, "--multiplier", PASSIVITY]) == 1
    assert run(["hinf", "--system", str(tmp_path / "missing.json")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(["hinf", "--system", str(bad)]) == 2
    assert run(["hinf", "--system", files("unstable.json", first_order(1.0))]) == 2
    assert run(["no-such-command"]) == 2
    assert run(["hinf", "--system", half, "--strict-tol", "-1"]) == 2
    capsys.readouterr()


def test_other_commands(files, tmp_path, capsys):
    lag = files("lag.json", first_order(-1.0))
    assert run(["info", "--system", lag]) == 0
    assert out_json(capsys)["stable"] is True
    assert run(["passivity", "--system", lag]) == 0
    assert out_json(capsys)["classification"] == "OutputStrict"
    assert run(["freqresp", "--system", lag, "--grid-points", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "omega,g_11_re,g_11_im" and len(lines) >= 6
    assert run(["factorize", "--multiplier",
                '{"kind":"constant","pi":[[4,0],[0,-1]],"n":1,"m":1}']) == 0
    assert out_json(capsys)["kind"] == "factors"
    assert run(["factorize", "--multiplier",
                '{"kind":"constant","pi":[[1,0],[0,1]],"n":1,"m":1}']) == 2
    assert run(["check-conditions", "--multiplier", PASSIVITY, "--profile", "T1"]) == 0
    assert out_json(capsys)["passed"] is True
    assert run(["check-conditions", "--multiplier", PASSIVITY, "--profile", "T2"]) == 1
    capsys.readouterr()
    assert run(["sweep-rho", "--g1", files("half.json", gain(0.5)), "--multiplier", PASSIVITY,
                "--rho-ladder", "0.5,0.9"]) == 0
    table = out_json(capsys)["table"]
    assert table[0]["gain"] == pytest.approx(14 / 3) and table[1]["gain"] == pytest.approx(26.0)
    assert run(["fw-smallgain", "--g1", files("two.json", gain(2.0)),
                "--weight", lag]) == 1
    assert out_json(capsys)["worst_frequency"] == 0.0
    one = files("one.json", gain(1.0))
    assert run(["fw-passivity", "--system", one, "--theta", "0.7853981633974483"]) == 0
    assert out_json(capsys)["margin"] == pytest.approx(np.sqrt(2))
    assert run(["fw-passivity", "--system", one, "--theta", "2.0"]) == 2
    capsys.readouterr()


def test_sweep_rho_family_certificate(files, tmp_path, capsys):
    from iqconverse.lti import StateSpaceSystem
    g1 = files("hp.json", StateSpaceSystem([[-1.0]], [[1.0]], [[-1.0]], [[1.0]]))
    cert = tmp_path / "cert.json"
    assert run(["destabilize", "--g1", g1, "--multiplier", PASSIVITY, "--profile", "T3",
                "--sign", "negative", "--cert", str(cert)]) == 0
    data = read_json(cert)
    assert data["branch"] == "CaseB_RhoFamily" and len(data["family"]) == 4
    assert run(["verify-cert", "--cert", str(cert), "--g1", g1, "--multiplier", PASSIVITY]) == 0
    capsys.readouterr()


def test_reports_are_byte_identical(files, tmp_path):
    g1 = files("g1.json", random_stable(np.random.default_rng(4)))
    outs = []
    for k in range(2):
        path = tmp_path / f"rep{k}.json"
        run(["passivity", "--system", g1, "--out", str(path)])
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_format_float():
    assert format_float(1.0) == "1.0"
    assert format_float(0.1) == "0.10000000000000001"
    assert format_float(float("inf")) == '"inf"'
    assert format_float(1e300) == "1.0000000000000001e+300"
    assert dumps({"z": 1 + 2j}).replace(" ", "").replace("\n", "") == '{"z":{"re":1.0,"im":2.0}}'


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([Domain.CT, Domain.DT]))
def test_system_json_round_trip(seed, domain):
    rng = np.random.default_rng(seed)
    g = random_stable(rng, n_out=int(rng.integers(1, 3)), n_in=int(rng.integers(1, 3)),
                      domain=domain)
    back = from_dict(json.loads(dumps(to_dict(g))))
    pts = default_grid(domain, 50).points
    assert np.abs(response(back, pts) - response(g, pts)).max() <= 1e-12
