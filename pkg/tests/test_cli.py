"""Command-line interface: exit codes, explain mode, golden JSON reports."""
import json
import pathlib

import pytest

from epsilon_rh.cli import main

GOLDEN = pathlib.Path(__file__).parent / "golden"


def _assert_same_schema(got, want, path="$"):
    """Exact structural match; floats compared to 1e-8 absolute/relative."""
    assert type(got) is type(want), f"{path}: {type(got)} != {type(want)}"
    if isinstance(got, dict):
        assert sorted(got) == sorted(want), f"{path}: keys differ"
        for k in got:
            _assert_same_schema(got[k], want[k], f"{path}.{k}")
    elif isinstance(got, list):
        assert len(got) == len(want), f"{path}: length differs"
        for i, (a, b) in enumerate(zip(got, want)):
            _assert_same_schema(a, b, f"{path}[{i}]")
    elif isinstance(got, float):
        assert abs(got - want) <= 1e-8 * max(1.0, abs(want)), \
            f"{path}: {got} != {want}"
    else:
        assert got == want, f"{path}: {got!r} != {want!r}"


@pytest.mark.parametrize("argv_tail,golden_name", [
    (["--omega", "1/2/z - 1"], "kummer_half.json"),
    (["--omega=-2*z"], "gaussian_two.json"),
    (["--omega", "1/3/z - 1", "--nu", "z"], "kummer_third_znu.json"),
])
def test_golden_json_reports(tmp_path, argv_tail, golden_name):
    out = tmp_path / "report.json"
    assert main(argv_tail + ["--json", str(out)]) == 0
    got = json.loads(out.read_text())
    want = json.loads((GOLDEN / golden_name).read_text())
    _assert_same_schema(got, want)


def test_exit_code_pass(capsys):
    assert main(["--omega", "1/2/z - 1"]) == 0
    out = capsys.readouterr().out
    assert "product check" in out and "pass = True" in out


def test_exit_code_parse_error(capsys):
    assert main(["--omega", "(("]) == 2
    assert main([]) == 2
    assert main(["--omega", "1/z", "--anchor", "x"]) == 2


def test_exit_code_precondition(capsys):
    # anchor placed on a singular point of the connection
    assert main(["--omega", "1/2/z - 1", "--anchor", "0"]) == 3
    assert "precondition violation" in capsys.readouterr().err


def test_explain_mode(capsys):
    assert main(["--omega", "1/2/z - 1", "--explain"]) == 0
    out = capsys.readouterr().out
    assert "point" in out and "tame" in out and "wild" in out
    # no numerics in explain mode
    assert "product check" not in out


def test_smooth_connection_notice(capsys):
    assert main(["--omega", "0"]) == 0
    assert "extends to the projective line" in capsys.readouterr().out


def test_omit_m_units(capsys):
    assert main(["--omega", "1/2/z - 1", "--omit-m-units"]) == 0
    out = capsys.readouterr().out
    assert "e^(2pi*i" not in out.split("product check")[0]


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "job.toml"
    cfg.write_text('[connection]\nomega = "1/2/z - 1"\n[form]\nnu = "1"\n')
    assert main(["--config", str(cfg)]) == 0
    assert main(["--config", str(tmp_path / "missing.toml")]) == 2


def test_oracle_flag(capsys):
    assert main(["--omega", "1/3/z - 1", "--oracle", "--precision", "6"]) == 0
    assert "oracle:" in capsys.readouterr().out
