import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from snharmonic.algebra import GroupFunction
from snharmonic.cli import (
    InputError,
    RunConfig,
    SCHEMA_VERSION,
    jsonable,
    load_report,
    load_set,
    main,
    save_report,
)
from snharmonic.permcore import images_table, write_permutation_set, Permutation


def report(out: Path, name: str) -> dict:
    return json.loads((out / f"{name}.json").read_text())


def write_dictator(path: Path, n: int = 5) -> None:
    img = images_table(n)
    perms = [Permutation(row + 1) for row in img[img[:, 0] == 0]]
    write_permutation_set(str(path), perms)


def test_verify_all_passes(tmp_path, capsys):
    assert main(["verify-all", "--n", "4", "--exact", "--seed", "7", "--out", str(tmp_path)]) == 0
    line = capsys.readouterr().out.strip()
    assert line.startswith("PASS verify_all_n4") and "\n" not in line
    data = report(tmp_path, "verify_all_n4")
    assert data["schema_version"] == SCHEMA_VERSION
    assert data["body"]["passed"] and data["body"]["failures"] == []
    assert "timestamp" in data["header"]


def test_bodies_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["verify-all", "--n", "4", "--exact", "--seed", "7", "--out", str(out)]) == 0
    assert report(a, "verify_all_n4")["body"] == report(b, "verify_all_n4")["body"]


def test_dictator_audit_fails_with_witness(tmp_path):
    path = tmp_path / "dict.txt"
    write_dictator(path)
    code = main(["global", "audit", "--set", str(path), "--r", "2", "--depth", "1", "--out", str(tmp_path)])
    assert code == 2
    body = report(tmp_path, "global_audit_n5")["body"]
    assert body["passed"] is False
    assert body["witness"]["1"] == "(1,)->(1,)"
    assert body["failures"]


def test_band_report_has_exact_measure(tmp_path):
    assert main(["exp", "band", "--n", "8", "--ell", "3", "--out", str(tmp_path)]) == 0
    body = report(tmp_path, "exp_band_n8_l3")["body"]
    assert body["mu"] == "8/35"


def test_env_var_sets_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv("SNH_OUT", str(tmp_path / "env"))
    assert main(["chartable", "--n", "4"]) == 0
    assert (tmp_path / "env" / "chartable_n4.json").exists()


def test_malformed_inputs_exit_one(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n1 2 z\n")
    assert main(["exp", "roth", "--set", str(bad), "--out", str(tmp_path)]) == 1
    assert "bad.txt:2" in capsys.readouterr().err
    assert main(["chartable", "--out", str(tmp_path)]) == 1
    assert main(["exp", "band", "--n", "7", "--ell", "1", "--out", str(tmp_path)]) == 1
    assert main(["coupling", "noise", "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["chartable", "--n", "four"])
    assert exc.value.code == 1


def test_spectra_and_coupling_commands(tmp_path):
    out = ["--out", str(tmp_path)]
    assert main(["spectra", "kneser", "--n", "5", "--k", "2"] + out) == 0
    body = report(tmp_path, "spectra_kneser_n5_k2")["body"]
    assert any(abs(e["eigenvalue"] - 1 / 3) < 1e-9 for e in body["spectrum"])
    assert main(["spectra", "disjointness", "--n", "6", "--k", "2"] + out) == 0
    assert main(["spectra", "kneser", "--n", "5", "--k", "3"] + out) == 1
    assert main(["coupling", "verify", "--n", "4"] + out) == 0


def test_function_commands(tmp_path):
    f = GroupFunction.random(4, np.random.default_rng(0))
    fpath = tmp_path / "f.csv"
    f.to_csv(str(fpath))
    out = ["--out", str(tmp_path)]
    assert main(["decompose", "--in", str(fpath)] + out) == 0
    assert main(["decompose", "--n", "4", "--exact"] + out) == 0
    body = report(tmp_path, "decompose_n4")["body"]
    assert "/" in body["norm_squared"] or body["norm_squared"].lstrip("-").isdigit()
    assert main(["spectra", "function", "--in", str(fpath)] + out) == 0
    gpath = tmp_path / "g.csv"
    assert main(["coupling", "noise", "--in", str(fpath), "--rho", "1/4", "--out", str(gpath)]) == 0
    g = GroupFunction.from_csv(str(gpath))
    assert np.linalg.norm(g.values) <= np.linalg.norm(f.values)


def test_experiment_commands(tmp_path):
    from snharmonic.experiments import three_cycles

    setp = tmp_path / "c3.txt"
    write_permutation_set(str(setp), [Permutation.from_rank(int(r), 5) for r in three_cycles(5)], "cycles")
    out = ["--out", str(tmp_path)]
    for kind in ("diameter", "schreier", "roth", "growth", "bogolyubov"):
        assert main(["exp", kind, "--set", str(setp), "--n", "5"] + out) == 0, kind
    assert report(tmp_path, "exp_diameter_n5")["body"]["covering_number"] == 2
    walk = GroupFunction.density(5, three_cycles(5))
    walk.to_csv(str(tmp_path / "walk.csv"))
    assert main(["exp", "mixing", "--f", str(tmp_path / "walk.csv"), "--steps", "4"] + out) == 0
    assert main(["exp", "leveld", "--n", "6", "--S", "1,2"] + out) == 0
    assert main(["exp", "product", "--n", "5"] + out) == 0


def test_json_flag_prints_body(tmp_path, capsys):
    assert main(["chartable", "--n", "3", "--json", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS")
    assert json.loads("\n".join(lines[1:]))["n"] == 3


def test_save_load_roundtrip(tmp_path):
    cfg = RunConfig(4, 0, 1, True, 1e-9, tmp_path)
    body = {"x": Fraction(2, 3), "inf": float("inf"), "arr": np.arange(3), "key": {(1, 2): 1}}
    path = save_report("demo", body, cfg, ["snh", "demo"])
    data = load_report(str(path))
    assert data["body"] == jsonable(body)
    assert data["body"]["x"] == "2/3" and data["body"]["inf"] == "inf"
    path.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(InputError):
        load_report(str(path))


def test_load_set(tmp_path):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    n, ranks = load_set(str(empty))
    assert ranks.size == 0
    mixed = tmp_path / "mixed.txt"
    mixed.write_text("2 1 3\n(1 2 3)\n")
    n, ranks = load_set(str(mixed), 3)
    assert n == 3 and ranks.tolist() == [2, 3]
    with pytest.raises(InputError):
        load_set(str(mixed), 4)


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "snharmonic", "chartable", "--n", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and proc.stdout.startswith("PASS")
