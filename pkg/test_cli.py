#!/usr/bin/env python3
"""Tests for the algdyn command line: golden report lines, exit codes and settings."""

import json

import pytest
from click.testing import CliRunner
from pydantic import ValidationError

import algdyn.cli
from algdyn.cli import RunConfig, cli, parse_lattice_family, resolve_dim, run
from algdyn.config import Settings, load_settings
from algdyn.equivariant import EndoOnFinitelyGenerated, StratumVerdict, SurjunctivityReport
from algdyn.errors import LatticeParseError
from algdyn.render import ReportRenderer
from algdyn.zlattice import Lattice


@pytest.fixture(autouse=True)
def isolated_home(tmp_path, monkeypatch):
    """Keep a real ~/.config/algdyn/config.yaml out of the tests."""
    monkeypatch.setenv('HOME', str(tmp_path))


def invoke(*args):
    return CliRunner().invoke(cli, list(args))


def lines(result):
    return result.stdout.splitlines()


@pytest.mark.parametrize("args, expected", [
    (["snf", "--matrix", "2,4;6,8"], ["snf matrix=2,4;6,8 invariants=[2,4]"]),
    (["fixedpoints", "--f", "u1 - 2", "--lattice", "5"],
     ["fixedpoints f=-2 + u1 lattice=5 torus_rank=0 torsion=[31]"]),
    (["fixedpoints", "--f", "u1 - 2", "--lattice", "5", "--oracle"],
     ["fixedpoints f=-2 + u1 lattice=5 torus_rank=0 torsion=[31] oracle=31"]),
    (["fixedpoints", "--f", "1 + u1 + u2", "--lattices", "diag:N<=3", "--oracle"],
     ["fixedpoints f=1 + u2 + u1 lattice=1,0;0,1 torus_rank=0 torsion=[3] oracle=3",
      "fixedpoints f=1 + u2 + u1 lattice=2,0;0,2 torus_rank=0 torsion=[3] oracle=3",
      "fixedpoints f=1 + u2 + u1 lattice=3,0;0,3 torus_rank=2 torsion=[3] oracle=torus"]),
    (["sigma", "--width", "3"], ["sigma width=3 injective=true witness_nonsurjective=010@0"]),
    (["sigma", "--width", "1"], ["sigma width=1 injective=true witness_nonsurjective=none"]),
    (["mul", "--f", "1 + u1", "--g", "1 - u1"], ["mul f=1 + u1 g=1 - u1 product=1 - u1^2"]),
    (["mul", "--f", "u1", "--g", "u2"], ["mul f=u1 g=u2 product=u2*u1"]),
    (["mul", "--f", "1 - u1", "--g", "1 + u1 + u1^2"], ["mul f=1 - u1 g=1 + u1 + u1^2 product=1 - u1^3"]),
    (["certify", "--f", "3 - u1 - u2"],
     ["certify f=3 - u2 - u1 lopsided=(0,0) expansive=Expansive(Lopsided((0,0))) mixing=Mixing "
      "torsion_module=true"]),
    (["certify", "--f", "1 + u1 + u2"],
     ["certify f=1 + u2 + u1 lopsided=none expansive=Unknown mixing=Unknown torsion_module=true"]),
    (["certify", "--f", "4 - 4*u1 + u1^2"],
     ["certify f=4 - 4*u1 + u1^2 lopsided=none expansive=Expansive(Grid(2^-6)) mixing=Unknown "
      "torsion_module=true"]),
    (["surjunctivity", "--f", "3 - u1 - u2", "--a", "u1", "--lattices", "diag:N<=2"],
     ["stratum lattice=1,0;0,1 injective=true surjective=true",
      "stratum lattice=2,0;0,2 injective=true surjective=true",
      "verdict=Consistent"]),
    (["dcc", "--factors", "8", "--matrix", "2"],
     ["dcc group=[8] matrix=2 injective=false surjective=false k=3"]),
    (["dcc", "--f", "u1 - 2", "--a", "2", "--lattice", "5"],
     ["dcc group=[31] matrix=2 injective=true surjective=true k=0"]),
    (["densify", "--cell", "0=a", "--n", "3", "--dim", "1"],
     ["densify lattice=3 cell=(0) value=a",
      "densify lattice=3 cell=(1) value=0",
      "densify lattice=3 cell=(2) value=0"]),
    (["demo", "padic", "--p", "2", "--m", "4"],
     ["demo name=padic p=2 level=4 kernel_order=1 cokernel_order=2 excluded=(1,0,0,0,0) enumerated=true"]),
    (["demo", "solenoid", "--m", "5"], ["demo name=solenoid f=-2 + u1 counts=[1,3,7,15,31]"]),
    (["demo", "ledrappier", "--m", "3"],
     ["demo name=ledrappier f=1 + u2 + u1 first=2 counts=[3,torus] expansive=Unknown mixing=Unknown "
      "routes=noetherian-adcc,torsion-module"]),
    (["demo", "rational-rank"], ["demo name=rational-rank matrix=2,1;1,1 verdict=InjectiveImpliesSurjective"]),
    (["demo", "rational-rank", "--matrix", "1,1;1,1"],
     ["demo name=rational-rank matrix=1,1;1,1 verdict=DualNotSurjective"]),
    (["demo", "shift-embed", "--m", "1"],
     ["demo name=shift-embed level=1 source=(1/3) image=(0,1/3) samples=2 injective=true "
      "excluded=(1/2,0) excluded_has_preimage=false"]),
])
def test_golden_report_lines(args, expected):
    result = invoke(*args)
    assert result.exit_code == 0, result.output
    assert lines(result) == expected


def test_reports_are_deterministic():
    args = ["surjunctivity", "--f", "3 - u1 - u2", "--a", "1 + u1", "--lattices", "random:4,7"]
    first, second = invoke(*args), invoke(*args)
    assert first.exit_code == 0
    assert first.stdout == second.stdout
    parallel = invoke(*args[:-2], "--lattices", "random:4,7", "--jobs", "2")
    assert parallel.stdout == first.stdout


def test_json_lines_output():
    result = invoke("--output", "json-lines", "snf", "--matrix", "2,4;6,8")
    assert result.exit_code == 0
    assert json.loads(result.stdout) == {"record": "snf", "matrix": "2,4;6,8", "invariants": [2, 4]}

    result = invoke("--output", "json-lines", "surjunctivity", "--f", "3 - u1 - u2", "--a", "u1",
                    "--lattice", "2,0;0,2")
    records = [json.loads(line) for line in lines(result)]
    assert [r["record"] for r in records] == ["stratum", "verdict"]
    assert records[0] == {"record": "stratum", "lattice": "2,0;0,2", "injective": True, "surjective": True}
    assert records[1]["verdict"] == "Consistent"

    result = invoke("--output", "json-lines", "certify", "--f", "1 + u1 + u2")
    assert json.loads(result.stdout)["lopsided"] is None


@pytest.mark.parametrize("args, error", [
    (["fixedpoints", "--f", "u1 +", "--lattice", "5"], "PolyParseError"),
    (["snf", "--matrix", "1,x"], "LatticeParseError"),
    (["fixedpoints", "--f", "u1", "--lattice", "1,2;2,4"], "SingularLattice"),
    (["fixedpoints", "--f", "u1", "--lattices", "hex:3"], "LatticeParseError"),
    (["mul", "--f", "u1", "--g", "u2", "--dim", "1"], "PolyParseError"),
    (["surjunctivity", "--f", "u1 + 1", "--a", "u1", "--b", "1/3", "--lattice", "2"], "EquivarianceViolation"),
    (["dcc", "--factors", "2,3", "--matrix", "0,0;1,0"], "InvalidEndomorphism"),
    (["densify", "--cell", "0,3=a", "--n", "3", "--dim", "2"], "WindowTooLarge"),
    (["densify", "--cell", "0=a", "--n", "3", "--dim", "2"], "DimensionMismatch"),
    (["sigma", "--width", "40"], "ValueError"),
    (["certify", "--f", "4 - 4*u1 + u1^2", "--grid-exponent", "0"], "ValueError"),
    (["surjunctivity", "--f", "u1 - 2", "--a", "u1", "--lattice", "2", "--jobs", "0"], "ValueError"),
    (["demo", "solenoid", "--m", "0"], "ValueError"),
    (["demo", "shift-embed", "--m", "0"], "ValueError"),
    (["demo", "padic", "--p", "2", "--m", "0"], "ValueError"),
])
def test_input_errors_exit_two(args, error):
    result = invoke(*args)
    assert result.exit_code == 2
    assert f"[ERROR] {error}:" in result.output
    assert "position" in result.output or error not in ("PolyParseError", "LatticeParseError")


def test_negative_verdict_exits_one(monkeypatch):
    e = EndoOnFinitelyGenerated((0,), ((2,),))
    L = Lattice.scalar(1, 1)
    report = SurjunctivityReport((L,), (StratumVerdict(L, True, False, e),))
    monkeypatch.setattr(algdyn.cli, 'surjunctivity_experiment', lambda *args, **kwargs: report)
    result = invoke("surjunctivity", "--f", "u1 - 2", "--a", "u1", "--lattice", "1")
    assert result.exit_code == 1
    assert "stratum lattice=1 injective=true surjective=false" in result.output
    assert "verdict=Counterexample" in result.output


def test_settings_file_overrides_defaults(tmp_path):
    config = tmp_path / "coarse.yaml"
    config.write_text("grid_exponent: 3\n", encoding="utf-8")
    result = invoke("--config", str(config), "certify", "--f", "4 - 4*u1 + u1^2")
    assert result.exit_code == 0
    assert "expansive=Unknown" in result.stdout
    result = invoke("--config", str(config), "certify", "--f", "4 - 4*u1 + u1^2", "--grid-exponent", "6")
    assert "expansive=Expansive(Grid(2^-6))" in result.stdout


def test_user_settings_file_is_read(tmp_path):
    user_dir = tmp_path / ".config" / "algdyn"
    user_dir.mkdir(parents=True)
    (user_dir / "config.yaml").write_text("default_symbol: x\n", encoding="utf-8")
    result = invoke("densify", "--cell", "0=a", "--n", "2", "--dim", "1")
    assert lines(result) == ["densify lattice=2 cell=(0) value=a", "densify lattice=2 cell=(1) value=x"]


def test_unknown_setting_is_rejected(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text("grid_size: 3\n", encoding="utf-8")
    result = invoke("--config", str(config), "snf", "--matrix", "1")
    assert result.exit_code == 2
    assert "[ERROR] ValidationError" in result.output


def test_load_settings_defaults():
    settings = load_settings()
    assert settings == Settings()
    assert settings.eps_fraction.denominator == 10 ** 6
    with pytest.raises(ValidationError):
        Settings(eps="-1/2")
    with pytest.raises(ValidationError):
        Settings(jobs=0)


def test_run_without_click():
    result = run(RunConfig(command='snf', params={'matrix': '2,4;6,8'}))
    assert (result.status, result.lines, result.error) == (0, ["snf matrix=2,4;6,8 invariants=[2,4]"], None)
    failed = run(RunConfig(command='snf', params={'matrix': '2,4;6'}))
    assert failed.status == 2
    assert isinstance(failed.error, LatticeParseError)
    with pytest.raises(ValidationError):
        RunConfig(command='plot')


def test_dimension_resolution():
    assert resolve_dim(["u1 - 2"], ["5"]) == 1
    assert resolve_dim(["u1"], ["2,0;0,2"]) == 2
    assert resolve_dim(["u1", "u3"]) == 3
    assert resolve_dim(["u1"], dim=4) == 4
    assert [L.index for L in parse_lattice_family("diag:N<=3", 1)] == [1, 2, 3]
    assert len(parse_lattice_family("random:5,1", 2)) == 5
    with pytest.raises(LatticeParseError):
        parse_lattice_family("diag:3", 2)


def test_renderer_covers_every_record_kind():
    renderer = ReportRenderer()
    assert set(renderer.get_template_names()) == {
        'certify', 'dcc', 'demo', 'densify', 'fixedpoints', 'mul', 'snf', 'sigma', 'stratum', 'verdict'}
    with pytest.raises(ValueError):
        ReportRenderer('yaml')
