import json

import pytest

from deftrace import cli
from deftrace.config import OUT_ENV


def run(tmp_path, *args, out="out"):
    return cli.main([*args, "--out", str(tmp_path / out)])


def read(tmp_path, name, out="out"):
    return (tmp_path / out / name).read_bytes()


def test_identities_pass_and_deterministic(tmp_path, capsys):
    assert run(tmp_path, "verify-identities", "--trials", "50") == 0
    assert run(tmp_path, "verify-identities", "--trials", "50", out="again") == 0
    assert read(tmp_path, "identities.json") == read(tmp_path, "identities.json", "again")
    assert json.loads(read(tmp_path, "identities.json"))["passed"]
    assert "PASS round_trip" in capsys.readouterr().out


def test_identities_forced_failure(tmp_path, capsys):
    assert run(tmp_path, "verify-identities", "--trials", "20", "--tol.scalar=1e-18", "--tol.matrix=1e-18") == 2
    failure = json.loads(read(tmp_path, "identities_failure.json"))
    assert failure["check"] and failure["error"] > 1e-18
    assert json.loads(capsys.readouterr().out.strip().splitlines()[-1]) == failure


def test_young(tmp_path, monkeypatch):
    assert run(tmp_path, "young", "--trials", "20", "--dims", "2,3") == 0
    assert run(tmp_path, "young", "--trials", "20", "--dims", "2,3", out="again") == 0
    assert read(tmp_path, "young.csv") == read(tmp_path, "young.csv", "again")
    # forced failure: flip every defect
    monkeypatch.setattr("deftrace.young.young_defect", lambda A, B, p: 1.0 if p < 0 else -1.0)
    assert run(tmp_path, "young", "--trials", "5", "--dims", "2", out="bad") == 2
    assert json.loads(read(tmp_path, "young_failure.json", "bad"))["defect"] in (1.0, -1.0)


def test_variational(tmp_path):
    args = ("variational", "--trials", "3")
    assert run(tmp_path, *args) == 0
    assert run(tmp_path, *args, out="again") == 0
    assert read(tmp_path, "variational.csv") == read(tmp_path, "variational.csv", "again")
    assert run(tmp_path, *args, "--tol.equality=1e-30", out="bad") == 2
    assert (tmp_path / "bad" / "variational_failure.json").exists()


def test_scan(tmp_path, monkeypatch):
    args = ("scan", "--grid", "0.5:2.5:3,-1:1:3", "--trials", "20")
    assert run(tmp_path, *args) == 0
    assert run(tmp_path, *args, out="again") == 0
    for ext in ("csv", "txt", "dat", "json"):
        assert read(tmp_path, f"region_phi.{ext}") == read(tmp_path, f"region_phi.{ext}", "again")
    assert run(tmp_path, "scan", "--target", "upsilon", "--k-mode", "psd", "--grid=-0.5:0.5:2,0.5:1:2",
               "--trials", "20") == 0
    assert (tmp_path / "out" / "region_upsilon_kpsd.csv").exists()
    # forced failure: a scan that sees only forbidden-sign evidence
    from deftrace import scanner

    real = scanner.classify_at

    def flipped(*a, **k):
        v = real(*a, **k)
        if v.expected:
            v.verdict = "concave" if v.expected == "convex" else "convex"
        return v

    monkeypatch.setattr(scanner, "classify_at", flipped)
    assert run(tmp_path, *args, out="bad") == 2


def test_search(tmp_path, monkeypatch):
    assert run(tmp_path, "search", "--budget", "2000") == 0
    cert = json.loads(read(tmp_path, "search_certificate.json"))
    assert cert["p"] == -2.0 and cert["s"] == -1.0
    assert run(tmp_path, "search", "--budget", "2000", out="again") == 0
    assert read(tmp_path, "search_certificate.json") == read(tmp_path, "search_certificate.json", "again")
    assert run(tmp_path, "search", "--p", "0.5", "--s", "-0.5", "--budget", "500", out="none") == 0
    assert json.loads(read(tmp_path, "search.json", "none"))["found"] is False
    monkeypatch.setattr("deftrace.cli.reverify_certificate", lambda cert, tol: False)
    assert run(tmp_path, "search", "--budget", "2000", out="bad") == 2


@pytest.mark.parametrize("args", [
    ["young", "--bogus"],
    ["young", "--trials", "0"],
    ["young", "--dims", "2,x"],
    ["scan", "--grid", "0:3"],
    ["scan", "--grid", "0:3:0,1:2:3"],
    ["verify-identities", "--tol.scalar=-1"],
    ["search", "--budget", "0"],
    [],
])
def test_config_errors(tmp_path, args):
    assert cli.main(args + ["--out", str(tmp_path)] if args else []) == 3


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "envdir"))
    assert cli.main(["young", "--trials", "5", "--dims", "2"]) == 0
    assert (tmp_path / "envdir" / "young.csv").exists()
