import json
import math

import numpy as np
import pytest

from prior_forge.cli import main
from prior_forge.density import read_density


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def write_pool_spec(tmp_path, components, weights=None):
    spec = {"components": components}
    if weights is not None:
        spec["weights"] = weights
    path = tmp_path / "pool.json"
    path.write_text(json.dumps(spec))
    return str(path)


def test_pool_geometric_csv_roundtrip(tmp_path, capsys):
    spec = write_pool_spec(
        tmp_path,
        [{"family": "beta", "a": 0.5, "b": 0.5},
         {"family": "beta", "a": 1.5, "b": 2.5}],
        [0.3, 0.7],
    )
    out = tmp_path / "pool.csv"
    code, stdout, _ = run(capsys, "pool", "--spec", spec, "--out", str(out))
    assert code == 0
    assert stdout == ""
    lines = out.read_text().splitlines()
    assert lines[0] == "# domain=0,1 normalized=1"
    assert any(line.startswith("# config: command=pool") for line in lines[1:8])
    loaded = read_density(out)
    assert loaded.normalized
    assert len(loaded.nodes) >= 16


def test_pool_json_stdout(tmp_path, capsys):
    spec = write_pool_spec(
        tmp_path,
        [{"family": "normal", "mean": 0.0, "sd": 1.0},
         {"family": "exp-tilt", "b": 0.5}],
    )
    code, stdout, _ = run(capsys, "pool", "--spec", spec, "--format", "json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["config"]["command"] == "pool"
    assert payload["normalized"] is True
    assert len(payload["nodes"]) == len(payload["log_values"])


def test_pool_improper_still_succeeds(tmp_path, capsys):
    spec = write_pool_spec(
        tmp_path,
        [{"family": "flat", "lo": "-inf", "hi": "inf"},
         {"family": "exp-tilt", "b": 1.0}],
    )
    code, stdout, _ = run(capsys, "pool", "--spec", spec, "--format", "json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["normalized"] is False
    assert "improper" in payload["note"]


def test_pool_arithmetic_kind(tmp_path, capsys):
    spec = write_pool_spec(
        tmp_path,
        [{"family": "beta", "a": 0.5, "b": 0.5},
         {"family": "flat", "lo": 0.0, "hi": 1.0}],
    )
    code, stdout, _ = run(capsys, "pool", "--spec", spec, "--kind", "arithmetic",
                          "--format", "json")
    assert code == 0
    assert json.loads(stdout)["normalized"] is True


def test_holder_json_fields(capsys):
    code, stdout, _ = run(capsys, "holder", "--mu", "flat:lo=-inf,hi=inf",
                          "--nu", "exp-tilt:b=1", "--alpha", "0.5",
                          "--likelihood", "normal", "--data", "0",
                          "--format", "json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["holds"] is True
    want = math.sqrt(2 * math.pi) * math.exp(0.125)
    assert payload["lhs"] == pytest.approx(want, rel=1e-8)
    assert payload["mu_posterior_mass"] == pytest.approx(math.sqrt(2 * math.pi),
                                                         rel=1e-8)


def test_holder_csv_headers(capsys):
    code, stdout, _ = run(capsys, "holder", "--mu", "beta:a=0.5,b=0.5",
                          "--nu", "beta:a=2,b=1", "--alpha", "0.3",
                          "--likelihood", "binomial", "--data", "3,5")
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0].startswith("# config: command=holder")
    assert lines[1].split(",")[:2] == ["lhs", "rhs"]
    values = lines[2].split(",")
    assert values[4] == "true"  # holds column


def test_holder_violation_exits_two(capsys, monkeypatch):
    import prior_forge.cli as cli_mod
    from prior_forge.errors import NumericalError

    def boom(*args, **kwargs):
        raise NumericalError("forced violation for the exit-code contract")

    monkeypatch.setattr(cli_mod, "holder_check", boom)
    code, _, err = run(capsys, "holder", "--mu", "beta:a=0.5,b=0.5",
                       "--nu", "beta:a=2,b=1", "--alpha", "0.3",
                       "--likelihood", "binomial", "--data", "3,5")
    assert code == 2
    assert "numerical failure" in err


def test_sparse_mn_improper_row(capsys):
    code, stdout, _ = run(capsys, "sparse-mn", "--m", "1000", "--n", "3",
                          "--r0", "3", "--hyperprior", "flat-in-a")
    assert code == 0
    lines = stdout.splitlines()
    header = lines[1].split(",")
    row = dict(zip(header, lines[2].split(",")))
    assert row["proper"] == "false"
    assert row["median_v"] == ""


def test_sparse_mn_proper_row(capsys):
    code, stdout, _ = run(capsys, "sparse-mn", "--m", "1000", "--n", "3",
                          "--r0", "1", "--hyperprior", "pareto-v",
                          "--format", "json")
    assert code == 0
    payload = json.loads(stdout)
    row = payload["rows"][0]
    assert row["proper"] is True
    assert row["mode_v"] < row["median_v"] < row["q95_v"]


def test_sparse_mn_counts_argument(capsys):
    code, stdout, _ = run(capsys, "sparse-mn", "--counts", "2,1," + ",".join(["0"] * 48),
                          "--format", "json")
    assert code == 0
    row = json.loads(stdout)["rows"][0]
    assert row["m"] == 50 and row["n"] == 3 and row["r0"] == 2


def test_sparse_mn_configs_sweep(tmp_path, capsys):
    sweep = [{"m": 1000, "n": 3, "r0": 1}, {"m": 1000, "n": 5, "r0": 2}]
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(sweep))
    code, stdout, _ = run(capsys, "sparse-mn", "--configs", str(path),
                          "--format", "json")
    assert code == 0
    rows = json.loads(stdout)["rows"]
    assert [r["n"] for r in rows] == [3, 5]


def test_compare_exact_columns(capsys):
    code, stdout, _ = run(capsys, "compare", "--m", "1000", "--n", "3",
                          "--r0", "3", "--format", "json")
    assert code == 0
    rows = json.loads(stdout)["rows"]
    by = {r["cell"]: r for r in rows}
    assert by["observed"]["jeffreys_mean"] == pytest.approx(1.5 / 503.0, abs=1e-15)
    assert by["observed"]["conditional_mean"] == pytest.approx(0.25025, abs=1e-15)
    assert by["unobserved"]["conditional_mean"] == pytest.approx(2.5e-4, abs=1e-15)


def test_poisson_equiv(capsys):
    code, stdout, _ = run(capsys, "poisson-equiv", "--a", "0.5", "--m", "4",
                          "--count", "20000", "--betas", "0.5,2",
                          "--format", "json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["all_ok"] is True
    assert payload["exact_invariance_sup"] < 1e-13
    assert len(payload["rows"]) == 2
    assert all(r["ks_ok"] for r in payload["rows"])


def test_ordered_mn(capsys):
    code, stdout, _ = run(capsys, "ordered-mn", "--m", "5", "--count", "20000")
    assert code == 0
    lines = stdout.splitlines()
    assert lines[0].startswith("# config: command=ordered-mn")
    assert lines[1].startswith("# k_star=")
    assert lines[2].startswith("# mean_sum=")
    assert lines[3].split(",")[0] == "k"
    assert len(lines) == 4 + 5


def test_seed_determinism_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "ordered-mn", "--m", "6", "--count", "5000",
                         "--seed", "31", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    code, _, _ = run(capsys, "ordered-mn", "--m", "6", "--count", "5000",
                     "--seed", "32", "--out", str(c))
    assert code == 0
    assert a.read_bytes() != c.read_bytes()


def test_out_files_replace_existing(tmp_path, capsys):
    out = tmp_path / "table.csv"
    out.write_text("stale content")
    code, _, _ = run(capsys, "ordered-mn", "--m", "3", "--count", "1000",
                     "--out", str(out))
    assert code == 0
    assert "stale" not in out.read_text()
    assert out.read_text().startswith("# config:")


def test_bad_inputs_exit_one(tmp_path, capsys):
    # unknown density family
    code, _, err = run(capsys, "holder", "--mu", "cauchy:x=1", "--nu",
                       "beta:a=1,b=1", "--alpha", "0.5",
                       "--likelihood", "binomial", "--data", "1,2")
    assert code == 1 and "error" in err
    # malformed pool spec JSON
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    code, _, _ = run(capsys, "pool", "--spec", str(bad))
    assert code == 1
    # missing spec file
    code, _, _ = run(capsys, "pool", "--spec", str(tmp_path / "absent.json"))
    assert code == 1
    # missing required argument
    code, _, _ = run(capsys, "holder", "--mu", "beta:a=1,b=1")
    assert code == 1
    # inconsistent counts flags
    code, _, _ = run(capsys, "sparse-mn", "--m", "10")
    assert code == 1
    # unknown subcommand
    code, _, _ = run(capsys, "no-such-command")
    assert code == 1


def test_pool_mixed_supports_rejected(tmp_path, capsys):
    spec = write_pool_spec(
        tmp_path,
        [{"family": "beta", "a": 1.0, "b": 1.0},
         {"family": "normal", "mean": 0.0, "sd": 1.0}],
    )
    code, _, err = run(capsys, "pool", "--spec", spec)
    assert code == 1
    assert "support" in err


def test_pool_grid_file_component(tmp_path, capsys):
    from prior_forge.density import beta_density, write_density

    ref = tmp_path / "ref.csv"
    write_density(beta_density(2.0, 2.0), ref)
    spec = write_pool_spec(
        tmp_path,
        [{"family": "grid-file", "path": str(ref)},
         {"family": "beta", "a": 0.5, "b": 0.5}],
    )
    code, stdout, _ = run(capsys, "pool", "--spec", spec, "--format", "json")
    assert code == 0
    payload = json.loads(stdout)
    assert payload["normalized"] is True
