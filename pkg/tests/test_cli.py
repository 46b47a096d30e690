"""Command-line interface: subcommands, exit codes, output shapes."""

import json

import pytest

from oagqe.cli import main


@pytest.fixture
def zz(tmp_path):
    p = tmp_path / "zz.model"
    p.write_text("Z\nZ\n")
    return str(p)


@pytest.fixture
def z(tmp_path):
    p = tmp_path / "z.model"
    p.write_text("Z\n")
    return str(p)


def test_eliminate_json(capsys):
    rc = main(["eliminate", "--json",
               "--formula", "(E x G (eq c2min (* 2 x) y 0))"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["schema"] == 1 and doc["clauses"]
    for cl in doc["clauses"]:
        assert set(cl) == {"params", "guard", "literals"}


def test_eliminate_resource_limit(capsys):
    rc = main(["eliminate", "--max-branches", "1",
               "--formula",
               "(E x G (and (lt c2min z x 0) (eq c2min (* 3 x) y 1)))"])
    assert rc == 2
    assert "resource limit" in capsys.readouterr().err


def test_spine_lists_points(capsys, zz):
    rc = main(["spine", "--model", zz, "c2", "e3"])
    assert rc == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 4
    assert all(line.startswith("(Ac 2)") or line.startswith("(Ae 3)")
               for line in out)


def test_spine_bad_sort_spec(capsys, zz):
    rc = main(["spine", "--model", zz, "x9"])
    assert rc == 1
    assert "input error" in capsys.readouterr().err


def test_eval_truth_and_exit_codes(capsys, zz):
    rc = main(["eval", "--model", zz,
               "--formula", "(plainlt 0 x)", "x=2,0"])
    assert rc == 0 and capsys.readouterr().out.strip() == "true"
    rc = main(["eval", "--model", zz,
               "--formula", "(plainlt 0 x)", "x=-1,0"])
    assert rc == 0 and capsys.readouterr().out.strip() == "false"


def test_eval_unknown_exit_code(capsys, tmp_path):
    # a true universal with a nested existential over a dense model is
    # beyond both the one-variable solver and bounded search
    q = tmp_path / "q.model"
    q.write_text("Q\n")
    rc = main(["eval", "--model", str(q),
               "--formula", "(A x G (E z G (eq c2min (* 2 z) x 0)))"])
    assert rc == 3 and capsys.readouterr().out.strip() == "unknown"


def test_eval_input_errors(capsys, zz):
    rc = main(["eval", "--model", zz, "--formula", "(plainlt 0 x)"])
    assert rc == 1
    assert "unassigned" in capsys.readouterr().err
    rc = main(["eval", "--model", zz, "--formula", "(plainlt 0 x)", "x=1"])
    assert rc == 1
    assert "coordinates" in capsys.readouterr().err


def test_malformed_formula_reports_position(capsys, zz):
    rc = main(["eval", "--model", zz, "--formula", "(plainlt 0"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "input error" in err and "line 1" in err


def test_check_differential(capsys, z):
    rc = main(["check", "--model", z, "--samples", "30", "--seed", "5",
               "--formula", "(E x G (eq c2min (* 2 x) y 0))"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "mismatches 0" in out


def test_check_seed_determinism(capsys, z, monkeypatch):
    argv = ["check", "--model", z, "--samples", "20",
            "--formula", "(E x G (lt c2min y x 0))"]
    monkeypatch.setenv("OAGQE_SEED", "9")
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    second = capsys.readouterr().out
    assert first == second
    rc = main(argv + ["--seed", "10"])
    assert rc == 0


def test_piecewise_json(capsys, z, tmp_path):
    f = tmp_path / "half.sexpr"
    f.write_text("; floor of half\n"
                 "(and (not (lt c2min x (* 2 y) 0)) (lt c2min x (* 2 y) 2))")
    rc = main(["piecewise", "--model", z, "--formula", str(f),
               "--value", "y", "--box", "6", "--json"])
    assert rc == 0
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["pieces"]) == 2
    assert doc["violations"] == []
    assert doc["verified_points"] == 13


def test_piecewise_value_not_free(capsys, z):
    rc = main(["piecewise", "--model", z, "--formula", "(plainlt 0 x)",
               "--value", "y"])
    assert rc == 1
    assert "not free" in capsys.readouterr().err


def test_model_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.model"
    bad.write_text("Z\nR\n")
    rc = main(["spine", "--model", str(bad), "c2"])
    assert rc == 1
    assert "bad model file" in capsys.readouterr().err
    rc = main(["spine", "--model", str(tmp_path / "missing"), "c2"])
    assert rc == 1
    assert "cannot read" in capsys.readouterr().err
