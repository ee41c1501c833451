from iqconverse.tables import CellResult, Evidence, STABILITY_TABLE, UNIFORM_TABLE, parse_claims, render, run_tables


def test_parse_claims():
    assert parse_claims("N!S") == ["N", "!S"]
    assert parse_claims("!NS") == ["!N", "S"]
    assert parse_claims("S") == ["S"]


def test_tables_cover_every_cell():
    assert len(STABILITY_TABLE) == len(UNIFORM_TABLE) == 9
    assert STABILITY_TABLE[("P", "P")] == "N!S" and UNIFORM_TABLE[("PI", "PI")] == "S"


def test_render_marks_failures():
    ok = CellResult("stability", "P", "P", "N!S", [Evidence("N", "witness", True, "")])
    bad = CellResult("stability", "P", "PO", "S", [Evidence("S", "sweep", False, "")])
    text = render([ok, bad])
    assert "N!S" in text and "✗" in text


def test_quick_table_run():
    results = run_tables(seed=1, samples=5, tables=("stability",))
    assert len(results) == 9
    assert all(r.reproduced for r in results), [r.to_dict() for r in results if not r.reproduced]
