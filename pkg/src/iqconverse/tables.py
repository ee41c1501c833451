"""Machine-checked reproduction of the converse-passivity condition tables.

Rows name the set ``G2`` ranges over, columns the property of ``G1``; the
loop is ``[-G1, G2]``.  Claims per cell: ``N`` (necessary), ``!N`` (not
necessary), ``S`` (sufficient), ``!S`` (not sufficient).  The ``stability``
table is about robust stability, the ``uniform`` table about robust uniform
stability.

Evidence for each claim:

* ``N``: a ``G1`` outside the column set and a row-set ``G2`` that breaks the
  loop (destabilizer certificate or divergent family).
* ``!N``: a ``G1`` outside the column set that still gives stable loops on a
  random sweep over the row set.
* ``S``: a random sweep of column-set ``G1`` against row-set ``G2``.
* ``!S``: a column-set ``G1`` with a row-set ``G2`` (or family) that breaks the loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .analysis import classify_passivity
from .converse import Branch, destabilize
from .errors import IQCError
from .feedback import Sign, closed_loop_gain, closed_loop_stable, interconnect
from .lti import Domain, FrequencyGrid, StateSpaceSystem, default_grid, first_order, gain, zeros
from .multiplier import catalog
from .samplers import random_isp, random_osp, random_passive

SETS = ("P", "PO", "PI")

# keys are (row: set of G2, column: property of G1)
STABILITY_TABLE = {
    ("P", "P"): "N!S", ("P", "PO"): "S", ("P", "PI"): "!NS",
    ("PO", "P"): "NS", ("PO", "PO"): "!NS", ("PO", "PI"): "!NS",
    ("PI", "P"): "NS", ("PI", "PO"): "!NS", ("PI", "PI"): "!NS",
}
UNIFORM_TABLE = {
    ("P", "P"): "N!S", ("P", "PO"): "N!S", ("P", "PI"): "NS",
    ("PO", "P"): "N!S", ("PO", "PO"): "!S", ("PO", "PI"): "S",
    ("PI", "P"): "N!S", ("PI", "PO"): "!S", ("PI", "PI"): "S",
}

SKEW = np.array([[0.0, 1.0], [-1.0, 0.0]])
DIVERGENCE_RATIO = 50.0


def parse_claims(token: str) -> list[str]:
    claims, i = [], 0
    while i < len(token):
        if token[i] == "!":
            claims.append(token[i:i + 2])
            i += 2
        else:
            claims.append(token[i])
            i += 1
    return claims


@dataclass
class Evidence:
    claim: str
    kind: str
    passed: bool
    detail: str
    data: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"claim": self.claim, "kind": self.kind, "passed": self.passed,
                "detail": self.detail, "data": self.data}


@dataclass
class CellResult:
    table: str
    row: str
    col: str
    expected: str
    evidence: list[Evidence]

    @property
    def reproduced(self) -> bool:
        return bool(self.evidence) and all(e.passed for e in self.evidence)

    @property
    def annotation(self) -> str:
        return self.expected if self.reproduced else "✗"

    def to_dict(self) -> dict:
        return {"table": self.table, "row": self.row, "col": self.col, "expected": self.expected,
                "reproduced": self.reproduced, "annotation": self.annotation,
                "evidence": [e.to_dict() for e in self.evidence]}


# -- membership helpers ---------------------------------------------------------------------

def in_set(sys: StateSpaceSystem, name: str, grid: FrequencyGrid) -> bool:
    rep = classify_passivity(sys, grid)
    return {"P": rep.is_passive, "PO": rep.is_output_strict, "PI": rep.is_input_strict}[name]


def _sampler(name: str):
    return {"P": random_passive, "PO": random_osp, "PI": random_isp}[name]


def loop_stable(g1: StateSpaceSystem, g2: StateSpaceSystem, grid: FrequencyGrid) -> bool:
    loop = interconnect(g1, g2, Sign.NEGATIVE)
    return loop.well_posed and closed_loop_stable(loop, grid).stable


# -- witnesses ------------------------------------------------------------------------------------

def nonpassive_witness(domain=Domain.CT) -> StateSpaceSystem:
    """``0.5 (1 - s)/(1 + s)``: stable, with ``He`` dipping to ``-1`` at high frequency."""
    return StateSpaceSystem([[-1.0]], [[1.0]], [[1.0]], [[-0.5]], domain)


def passive_not_isp_witness() -> StateSpaceSystem:
    """``s/(s + 1)``."""
    return StateSpaceSystem([[-1.0]], [[1.0]], [[-1.0]], [[1.0]], Domain.CT)


def osp_not_isp_witness() -> StateSpaceSystem:
    """``1/(s + 1)``."""
    return first_order(-1.0)


def _destabilized_witness(claim: str, g1: StateSpaceSystem, row: str, grid) -> Evidence:
    mult, factors = catalog("passivity", g1.noutputs)
    try:
        cert = destabilize(g1, factors, mult, "T1", grid, convention=Sign.NEGATIVE)
    except IQCError as exc:
        return Evidence(claim, "witness", False, f"destabilizer failed: {exc}")
    g2 = cert.g2
    member = in_set(g2, row, grid)
    loop = interconnect(g1, g2, Sign.NEGATIVE)
    broken = not loop.well_posed or not closed_loop_stable(loop, grid).stable
    residual = cert.diagnostics["closedloop_singularity_residual"]
    return Evidence(claim, "witness", bool(member and broken),
                    f"G2 from {cert.branch.value} lies in {row}; loop singular at lambda0",
                    {"branch": cert.branch.value, "beta": cert.beta, "singularity_residual": residual})


def _family_witness(claim: str, g1: StateSpaceSystem, row: str, grid) -> Evidence:
    mult, factors = catalog("passivity", g1.noutputs)
    try:
        cert = destabilize(g1, factors, mult, "T3", grid, convention=Sign.NEGATIVE)
    except IQCError as exc:
        return Evidence(claim, "witness", False, f"destabilizer failed: {exc}")
    if cert.branch is not Branch.RHO_FAMILY:
        # an outright destabilizer is stronger evidence than divergence
        ok = cert.g2 is not None and in_set(cert.g2, row, grid)
        return Evidence(claim, "witness", bool(ok), f"{cert.branch.value} destabilizer",
                        {"branch": cert.branch.value})
    gains = [f.gain for f in cert.family]
    members = all(in_set(f.g2, row, grid) for f in cert.family)
    return _divergence(claim, gains, members, "rho family", [f.rho for f in cert.family])


def _divergence(claim, gains, members, label, params) -> Evidence:
    increasing = all(b > a for a, b in zip(gains, gains[1:]))
    ratio = gains[-1] / gains[0] if gains and gains[0] > 0 else np.inf
    ok = bool(members and increasing and ratio >= DIVERGENCE_RATIO)
    return Evidence(claim, "witness", ok, f"{label} gains grow without bound",
                    {"params": list(params), "gains": list(gains), "ratio": ratio})


def _zero_plant_family(claim: str, row: str, grid) -> Evidence:
    """``[0, G2]`` with ever larger ``G2`` in the row set."""
    ks = (1.0, 10.0, 100.0, 1000.0)
    if row == "PI":
        fam = [gain(k) for k in ks]
    else:
        fam = [first_order(-1.0, k) for k in ks]
    g1 = zeros(1, 1)
    gains = [closed_loop_gain(interconnect(g1, g2, Sign.NEGATIVE), block=(2, 2), grid=grid)
             for g2 in fam]
    members = all(in_set(g2, row, grid) for g2 in fam)
    return _divergence(claim, gains, members, "G1 = 0", ks)


def _skew_not_well_posed(claim: str) -> Evidence:
    J = gain(SKEW)
    loop = interconnect(J, J, Sign.NEGATIVE)
    return Evidence(claim, "witness", not loop.well_posed, "skew gain pair: I + G1 G2 = 0")


def _sweep(claim: str, g1_source, row: str, rng, samples: int, grid, n: int = 1) -> Evidence:
    sample_g2 = _sampler(row)
    failures = 0
    for _ in range(samples):
        g1 = g1_source() if callable(g1_source) else g1_source
        g2 = sample_g2(rng, n, grid)
        if not loop_stable(g1, g2, grid):
            failures += 1
    return Evidence(claim, "sweep", failures == 0,
                    f"{samples} random pairs, {failures} unstable", {"samples": samples,
                                                                     "failures": failures})


# -- cell drivers ---------------------------------------------------------------------------------

def _evidence(table: str, row: str, col: str, claim: str, rng, samples: int, grid) -> Evidence:
    col_sampler = _sampler(col)
    if claim == "S":
        return _sweep(claim, lambda: col_sampler(rng, 1, grid), row, rng, samples, grid)
    if claim == "!N":
        if col == "PI" and row == "P":
            witness = osp_not_isp_witness()
            return _sweep(claim, witness, row, rng, samples, grid)
        return _sweep(claim, gain(SKEW), row, rng, samples, grid, n=2)
    if claim == "N":
        if col == "P" or table == "stability":
            return _destabilized_witness(claim, nonpassive_witness(), row, grid)
        if col == "PO":
            return _family_witness(claim, gain(SKEW), row, grid)
        return _family_witness(claim, passive_not_isp_witness(), row, grid)
    if claim == "!S":
        if table == "stability":
            return _skew_not_well_posed(claim)
        if row == "P":
            witness = passive_not_isp_witness() if col == "P" else osp_not_isp_witness()
            return _family_witness(claim, witness, row, grid)
        return _zero_plant_family(claim, row, grid)
    raise ValueError(f"unknown claim {claim!r}")


def run_tables(seed: int = 42, samples: int = 50, grid: FrequencyGrid | None = None,
               tables: tuple[str, ...] = ("stability", "uniform")) -> list[CellResult]:
    grid = grid if grid is not None else default_grid(Domain.CT)
    rng = np.random.default_rng(seed)
    results = []
    for table in tables:
        claims = STABILITY_TABLE if table == "stability" else UNIFORM_TABLE
        for row in SETS:
            for col in SETS:
                expected = claims[(row, col)]
                evidence = [_evidence(table, row, col, c, rng, samples, grid)
                            for c in parse_claims(expected)]
                results.append(CellResult(table, row, col, expected, evidence))
    return results


def render(results: list[CellResult]) -> str:
    lines = []
    for table in dict.fromkeys(r.table for r in results):
        lines.append("[-G1, G2] robust " + ("stability" if table == "stability"
                                            else "uniform stability"))
        head = "G2 \\ G1"
        lines.append(f"{head:<10}" + "".join(f"{c:>10}" for c in SETS))
        for row in SETS:
            cells = {r.col: r for r in results if r.table == table and r.row == row}
            lines.append(f"{row:<10}" + "".join(f"{cells[c].annotation:>10}" for c in SETS
                                                if c in cells))
        lines.append("")
    return "\n".join(lines).rstrip() + "\n"
