"""Command-line interface.

Exit codes: 0 success or positive verdict, 1 negative verdict, 2 invalid
input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tolerances as tol
from .analysis import classify_passivity, hinf_norm
from .converse import (
    DEFAULT_RHO_LADDER,
    DestabilizationCertificate,
    destabilize,
    divergence_sweep,
    verify_certificate,
)
from .errors import IQCError, NumericalFailure, PlantSatisfiesIqc, VerificationFailed
from .feedback import closed_loop_gain, closed_loop_stable, interconnect
from .lti import Domain, FrequencyGrid, default_grid, frequency_response, from_dict, poles, to_dict
from .multiplier import (
    check_conditions,
    factorize_constant,
    fw_passivity_check,
    fw_smallgain_check,
    membership,
    multiplier_from_dict,
)
from .serialize import read_json, response_csv, write_json
from .tables import run_tables, render

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    points: int | None = None
    wmin: float = 1e-4
    wmax: float = 1e4
    extra_points: tuple[float, ...] = ()
    strict_tol: float = tol.STRICT_TOL
    stability_tol: float = tol.STABILITY_TOL
    hinf_tol: float | None = None
    rho_ladder: tuple[float, ...] = DEFAULT_RHO_LADDER
    seed: int = 42
    out: str | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("strict_tol", "stability_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.hinf_tol is not None and not self.hinf_tol > 0:
            raise ValueError("hinf_tol must be positive")
        if self.points is not None and self.points < 2:
            raise ValueError("grid needs at least 2 points")
        if not 0 < self.wmin < self.wmax:
            raise ValueError("need 0 < wmin < wmax")

    def grid(self, domain) -> FrequencyGrid:
        domain = Domain.parse(domain)
        extra = self.extra_points
        if domain is Domain.DT:
            extra = tuple(w for w in extra if 0 <= w <= np.pi)
        return default_grid(domain, self.points, self.wmin, self.wmax, extra)

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        extra = tuple(float(x) for x in args.extra_points.split(",") if x) if args.extra_points else ()
        ladder = (tuple(float(x) for x in args.rho_ladder.split(","))
                  if getattr(args, "rho_ladder", None) else DEFAULT_RHO_LADDER)
        return cls(args.command, args.grid_points, args.wmin, args.wmax, extra, args.strict_tol,
                   args.stability_tol, args.hinf_tol, ladder, args.seed, getattr(args, "out", None))


# -- loading ------------------------------------------------------------------------------

def load_system(source: str):
    return from_dict(read_json(source))


def load_multiplier(source: str, n: int | None, domain):
    return multiplier_from_dict(read_json(source), n, domain)


def _emit(report, out: str | None = None) -> None:
    text = write_json(report, out)
    if out is None:
        sys.stdout.write(text)


def _factors_or_fail(factors):
    if factors is None:
        raise ValueError("this multiplier has no real-rational factors (synthesis unavailable)")
    return factors


# -- commands ---------------------------------------------------------------------------------

def cmd_info(args, cfg):
    s = load_system(args.system)
    stab = s.is_stable(cfg.stability_tol)
    _emit({"domain": s.domain.value, "states": s.nstates, "inputs": s.ninputs,
           "outputs": s.noutputs, "poles": [complex(p) for p in poles(s)],
           "stable": stab.stable, "margin": stab.margin}, cfg.out)
    return EXIT_OK


def cmd_freqresp(args, cfg):
    s = load_system(args.system)
    text = response_csv(frequency_response(s, cfg.grid(s.domain)))
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_hinf(args, cfg):
    s = load_system(args.system)
    res = hinf_norm(s, cfg.hinf_tol, cfg.grid(s.domain))
    _emit({"gamma": res.gamma, "peak_frequency": res.peak_frequency}, cfg.out)
    return EXIT_OK


def cmd_passivity(args, cfg):
    s = load_system(args.system)
    rep = classify_passivity(s, cfg.grid(s.domain), cfg.strict_tol)
    _emit(rep, cfg.out)
    return EXIT_OK if rep.is_passive else EXIT_NEGATIVE


def cmd_membership(args, cfg):
    s = load_system(args.system)
    n = s.noutputs if args.set.startswith("G1") else s.ninputs
    mult, _ = load_multiplier(args.multiplier, n, s.domain)
    verdict = membership(mult, s, args.set, cfg.grid(s.domain), cfg.strict_tol)
    _emit(verdict, cfg.out)
    return EXIT_OK if verdict.holds else EXIT_NEGATIVE


def cmd_factorize(args, cfg):
    data = read_json(args.multiplier)
    if data.get("kind") != "constant":
        raise ValueError("factorize expects a constant multiplier")
    factors = factorize_constant(data["pi"], int(data["n"]), int(data["m"]),
                                 data.get("domain", "ct"))
    _emit(factors.to_dict(), cfg.out)
    return EXIT_OK


def cmd_check_conditions(args, cfg):
    domain = Domain.parse(args.domain)
    _, factors = load_multiplier(args.multiplier, args.n, domain)
    factors = _factors_or_fail(factors)
    rep = check_conditions(factors, args.profile, cfg.grid(factors.psi1.domain), cfg.strict_tol)
    _emit(rep, cfg.out)
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_destabilize(args, cfg):
    g1 = load_system(args.g1)
    mult, factors = load_multiplier(args.multiplier, g1.noutputs, g1.domain)
    factors = _factors_or_fail(factors)
    try:
        cert = destabilize(g1, factors, mult, args.profile, cfg.grid(g1.domain), cfg.rho_ladder,
                           args.sign, cfg.strict_tol)
    except PlantSatisfiesIqc as exc:
        print(f"nothing to destabilize: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    if args.out and cert.g2 is not None:
        write_json(to_dict(cert.g2), args.out)
    _emit(cert, args.cert)
    return EXIT_OK


def cmd_verify_cert(args, cfg):
    g1 = load_system(args.g1)
    mult, factors = load_multiplier(args.multiplier, g1.noutputs, g1.domain)
    cert = DestabilizationCertificate.from_dict(read_json(args.cert))
    rep = verify_certificate(cert, g1, _factors_or_fail(factors), mult, cfg.grid(g1.domain),
                             raise_on_failure=False, strict_tol=cfg.strict_tol)
    _emit(rep, cfg.out)
    return EXIT_OK if rep.passed else EXIT_NEGATIVE


def cmd_sweep_rho(args, cfg):
    g1 = load_system(args.g1)
    mult, factors = load_multiplier(args.multiplier, g1.noutputs, g1.domain)
    table = divergence_sweep(g1, _factors_or_fail(factors), cfg.rho_ladder, cfg.grid(g1.domain),
                             args.sign, mult, cfg.strict_tol)
    _emit({"table": [{"rho": r, "gain": g} for r, g in table]}, cfg.out)
    return EXIT_OK


def cmd_closed_loop(args, cfg):
    g1, g2 = load_system(args.g1), load_system(args.g2)
    loop = interconnect(g1, g2, args.sign)
    if not loop.well_posed:
        print("not well-posed: I - D2 D1 is singular", file=sys.stderr)
        _emit({"well_posed": False}, cfg.out)
        return EXIT_NEGATIVE
    grid = cfg.grid(loop.cl.domain)
    stab = closed_loop_stable(loop, grid, cfg.stability_tol)
    report = {"well_posed": True, **stab.to_dict()}
    if stab.stable:
        report["gain"] = closed_loop_gain(loop, cfg.hinf_tol, grid=grid)
    _emit(report, cfg.out)
    return EXIT_OK if stab.stable else EXIT_NEGATIVE


def cmd_fw_smallgain(args, cfg):
    g1, w = load_system(args.g1), load_system(args.weight)
    verdict = fw_smallgain_check(g1, w, cfg.grid(g1.domain), cfg.strict_tol)
    _emit(verdict, cfg.out)
    return EXIT_OK if verdict.holds else EXIT_NEGATIVE


def cmd_fw_passivity(args, cfg):
    s = load_system(args.system)
    theta = args.theta
    if args.theta_file:
        theta = np.asarray(read_json(args.theta_file), dtype=float)
    verdict = fw_passivity_check(s, theta, args.side, cfg.grid(s.domain), cfg.strict_tol)
    _emit(verdict, cfg.out)
    return EXIT_OK if verdict.holds else EXIT_NEGATIVE


def cmd_prop_table(args, cfg):
    results = run_tables(cfg.seed, args.samples, cfg.grid(Domain.CT))
    sys.stdout.write(render(results))
    if args.json:
        write_json([r.to_dict() for r in results], args.json)
    return EXIT_OK if all(r.reproduced for r in results) else EXIT_NEGATIVE


# -- parser ----------------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid-points", type=int, default=None,
                   help="logarithmic grid density (default 400 or $IQC_GRID_POINTS)")
    p.add_argument("--wmin", type=float, default=1e-4)
    p.add_argument("--wmax", type=float, default=1e4)
    p.add_argument("--extra-points", default="", help="comma-separated extra frequencies")
    p.add_argument("--strict-tol", type=float, default=tol.STRICT_TOL)
    p.add_argument("--stability-tol", type=float, default=tol.STABILITY_TOL)
    p.add_argument("--hinf-tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=42)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="iqconverse",
                                     description="IQC verification and converse destabilizer synthesis")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_, out=True):
        p = sub.add_parser(name, help=help_)
        _common(p)
        if out:
            p.add_argument("--out", default=None, help="write the JSON report here")
        p.set_defaults(func=func)
        return p

    add("info", cmd_info, "describe a system").add_argument("--system", required=True)
    p = add("freqresp", cmd_freqresp, "frequency response as CSV", out=False)
    p.add_argument("--system", required=True)
    p.add_argument("--csv", default=None)
    add("hinf", cmd_hinf, "H-infinity norm").add_argument("--system", required=True)
    add("passivity", cmd_passivity, "passivity indices").add_argument("--system", required=True)

    p = add("membership", cmd_membership, "IQC set membership")
    p.add_argument("--system", required=True)
    p.add_argument("--multiplier", required=True, help="JSON string or file")
    p.add_argument("--set", required=True,
                   choices=["G1_strict", "G1_nonstrict", "G2_strict", "G2_nonstrict"])

    add("factorize", cmd_factorize, "J-spectral factors of a constant multiplier").add_argument(
        "--multiplier", required=True)

    p = add("check-conditions", cmd_check_conditions, "factor conditions for a profile")
    p.add_argument("--multiplier", required=True)
    p.add_argument("--profile", default="T1")
    p.add_argument("--n", type=int, default=1, help="block size for catalog multipliers")
    p.add_argument("--domain", default="ct")

    p = add("destabilize", cmd_destabilize, "synthesize a destabilizing G2", out=False)
    p.add_argument("--g1", required=True)
    p.add_argument("--multiplier", required=True)
    p.add_argument("--profile", default="T1")
    p.add_argument("--sign", default="positive", choices=["positive", "negative"])
    p.add_argument("--rho-ladder", default=None, help="comma-separated rho values")
    p.add_argument("--out", default=None, help="write G2 system JSON here")
    p.add_argument("--cert", default=None, help="write the certificate here")

    p = add("verify-cert", cmd_verify_cert, "re-check a certificate")
    p.add_argument("--cert", required=True)
    p.add_argument("--g1", required=True)
    p.add_argument("--multiplier", required=True)

    p = add("sweep-rho", cmd_sweep_rho, "gain divergence along the rho family")
    p.add_argument("--g1", required=True)
    p.add_argument("--multiplier", required=True)
    p.add_argument("--sign", default="positive", choices=["positive", "negative"])
    p.add_argument("--rho-ladder", default=None)

    p = add("closed-loop", cmd_closed_loop, "closed-loop well-posedness, stability and gain")
    p.add_argument("--g1", required=True)
    p.add_argument("--g2", required=True)
    p.add_argument("--sign", default="positive", choices=["positive", "negative"])

    p = add("fw-smallgain", cmd_fw_smallgain, "frequency-weighted small-gain test")
    p.add_argument("--g1", required=True)
    p.add_argument("--weight", required=True)

    p = add("fw-passivity", cmd_fw_passivity, "phase-rotated passivity test")
    p.add_argument("--system", required=True)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--theta-file", default=None, help="JSON list with one angle per grid point")
    p.add_argument("--side", default="uncertainty", choices=["plant", "uncertainty"])

    p = add("prop-table", cmd_prop_table, "reproduce the passivity condition tables", out=False)
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--json", default=None)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = RunConfig.from_args(args)
        return args.func(args, cfg)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except VerificationFailed as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except (ValueError, KeyError, TypeError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except IQCError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


def main() -> None:
    sys.exit(run())
