import csv
import io
import json
import subprocess
import sys

import pytest

from rmfsign.cli import SUBCOMMANDS, run

# small parameters per subcommand; the workers flag is appended per test
SMALL = {
    "census": ["--seed", "4", "--x-limit", "20000", "--block-size", "3000"],
    "verify-identity": ["--seed", "42", "--t-grid", "1,0.3,0.1", "--x-limit", "20000", "--block-size", "3000"],
    "euler": ["--seed", "3", "--t", "1", "--t", "0.3", "--x-limit", "20000", "--prime-limit", "20000", "--block-size", "3000"],
    "rstat": ["--seed", "3", "--t-grid", "2^-2^i:i=1..3", "--prime-limit", "20000"],
    "fscan": ["--seed", "42", "--t-grid", "0.25,0.0625", "--x-limit", "20000", "--block-size", "3000"],
    "variance": ["--t-grid", "0.1,0.01,0.001"],
    "covariance": ["--t-grid", "2^-2^i:i=1..3"],
    "clt": ["--seed", "7", "--samples", "600", "--t-grid", "2^-2^i:i=1..3", "--prime-limit", "5000"],
    "tail": ["--seed", "7", "--samples", "600", "--t", "0.1", "--prime-limit", "5000"],
    "ensemble-census": ["--seed", "7", "--samples", "20", "--checkpoints", "1000,10000", "--x-limit", "10000"],
}


def call(argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_every_subcommand_covered():
    assert set(SMALL) == set(SUBCOMMANDS)


@pytest.mark.parametrize("command", SUBCOMMANDS)
def test_byte_identical_across_workers(command):
    outputs = set()
    for w in (1, 4, 16):
        code, out, err = call([command, *SMALL[command], "--workers", str(w)])
        assert code == 0, err
        assert out
        outputs.add(out)
    assert len(outputs) == 1


def test_census_all_plus():
    code, out, _ = call(["census", "--mode", "all_plus", "--x-limit", "10000"])
    assert code == 0
    table = rows(out)
    assert list(table[0]) == ["checkpoint_x", "S_x", "crossings_so_far", "min", "max", "rounding_bound"]
    assert all(r["crossings_so_far"] == "0" for r in table)
    assert table[-1]["checkpoint_x"] == "10000"


def test_census_json_has_crossings():
    code, out, _ = call(["census", "--mode", "all_minus", "--x-limit", "10", "--format", "json"])
    assert code == 0
    report = json.loads(out)
    assert report["crossings"][0] == 3


def test_variance_row():
    code, out, _ = call(["variance", "--t", "0.001"])
    row = rows(out)[0]
    assert list(row) == ["t", "exact", "leading_approx", "difference", "tail_bound"]
    assert abs(float(row["exact"]) - 0.1178) <= 3 * 0.001


def test_covariance_pair_flags():
    code, out, _ = call(["covariance", "--t", "0.0625", "--t2", "0.00390625"])
    row = rows(out)[0]
    assert abs(float(row["leading_approx"]) - 0.02731) < 1e-5
    assert abs(float(row["difference"])) <= 2 * 0.0625


def test_verify_identity_residual():
    code, out, _ = call(["verify-identity", "--seed", "42", "--t", "0.3", "--x-limit", "100000"])
    assert code == 0
    assert float(rows(out)[0]["residual"]) < 1e-10


def test_floats_round_trip():
    code, out, _ = call(["variance", "--t", "0.01"])
    row = rows(out)[0]
    from rmfsign.analytic import r_variance

    assert float(row["exact"]) == r_variance(0.01).value
    assert row["exact"] == repr(r_variance(0.01).value)


def test_exit_codes():
    with pytest.raises(SystemExit) as exc:
        call(["census", "--nope"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        call(["frobnicate"])
    assert exc.value.code == 1
    code, _, err = call(["clt", "--samples", "50"])
    assert code == 1 and "n_samples" in err
    code, _, err = call(["census", "--x-limit", "100000000000"])
    assert code == 2 and "capacity" in err
    code, _, _ = call(["variance"])
    assert code == 1
    code, _, _ = call(["census", "--seed", "0xZZ"])
    assert code == 1


def test_manifest_sidecar_reproduces(tmp_path):
    out = tmp_path / "rstat.csv"
    code, _, _ = call(["rstat", "--seed", "0x2a", "--t", "0.1", "--prime-limit", "1000", "--out", str(out)])
    assert code == 0
    manifest = json.loads((tmp_path / "rstat.csv.manifest.json").read_text())
    assert manifest["subcommand"] == "rstat"
    assert manifest["parameters"]["seed"] == "0x2a"
    assert "tool_version" in manifest and "wall_clock_seconds" in manifest
    again = tmp_path / "again.csv"
    code, _, _ = call([*manifest["argv"][:-2], "--out", str(again)])
    assert again.read_bytes() == out.read_bytes()


def test_manifest_to_stderr():
    code, out, err = call(["variance", "--t", "0.1"])
    manifest = json.loads(err.strip().splitlines()[-1])
    assert manifest["argv"] == ["variance", "--t", "0.1"]


def test_console_script_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "rmfsign.cli", "variance", "--t", "0.001"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert proc.stdout.startswith("t,exact,")
