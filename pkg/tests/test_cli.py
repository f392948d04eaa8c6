import json

import numpy as np
import pytest

from signcov.cli import main

TRIANGLE_CSV = "0,0\n1,0\n0,1\n"
SHAPE_MODEL = json.dumps(
    {"generator": "gaussian", "mu": [0.0, 0.0], "V": [[1.0, 0.5], [0.5, 1.0]]}
)


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_estimate_median_triangle(tmp_path, capsys):
    csv_path = write(tmp_path, "tri.csv", TRIANGLE_CSV)
    code, out, _ = run(capsys, ["estimate", csv_path, "--location", "median", "--star"])
    assert code == 0
    payload = json.loads(out)
    est = payload["location"]["estimate"]
    assert est[0] == pytest.approx(0.21132, abs=1e-4)
    assert est[1] == pytest.approx(0.21132, abs=1e-4)
    assert payload["location"]["converged"]
    star = payload["starred"]
    assert star["matrix"]["dims"] == [2, 2]
    data = star["matrix"]["data"]
    assert data[0] + data[3] == pytest.approx(1.0, abs=1e-12)
    assert payload["coincidence"]["n_star"] == 3


def test_estimate_fixed_location(tmp_path, capsys):
    csv_path = write(tmp_path, "two.csv", "0,0\n1,0\n")
    code, out, _ = run(
        capsys, ["estimate", csv_path, "--location", "fixed", "--fixed", "0,0"]
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["sscm"]["matrix"]["data"] == [0.5, 0.0, 0.0, 0.0]
    assert payload["coincidence"]["n_star"] == 1
    assert payload["coincidence"]["indices_coincident"] == [0]


def test_estimate_missing_input(tmp_path, capsys):
    out_file = tmp_path / "result.json"
    code, _, err = run(
        capsys,
        ["estimate", str(tmp_path / "nope.csv"), "--out", str(out_file)],
    )
    assert code == 2
    assert not out_file.exists()
    assert "not found" in err


def test_estimate_malformed_csv(tmp_path, capsys):
    csv_path = write(tmp_path, "bad.csv", "x,y\n1,2\n3,oops\n")
    code, _, err = run(capsys, ["estimate", csv_path])
    assert code == 2
    assert "line 3" in err and "column 2" in err


def test_estimate_header_autodetect(tmp_path, capsys):
    plain = write(tmp_path, "plain.csv", TRIANGLE_CSV)
    headed = write(tmp_path, "headed.csv", "a,b\n" + TRIANGLE_CSV)
    code1, out1, _ = run(capsys, ["estimate", plain])
    code2, out2, _ = run(capsys, ["estimate", headed])
    assert code1 == code2 == 0
    assert out1 == out2


def test_estimate_too_small(tmp_path, capsys):
    csv_path = write(tmp_path, "one.csv", "1,2\n")
    code, _, _ = run(capsys, ["estimate", csv_path])
    assert code == 2


def test_estimate_degenerate_star(tmp_path, capsys):
    csv_path = write(tmp_path, "same.csv", "1,1\n1,1\n1,1\n")
    code, _, err = run(capsys, ["estimate", csv_path, "--star"])
    assert code == 3
    assert "degenerate" in err


def test_estimate_round_trip_precision(tmp_path, capsys):
    rng = np.random.default_rng(70)
    X = rng.standard_normal((20, 2))
    csv_path = write(
        tmp_path,
        "data.csv",
        "\n".join(",".join(repr(float(v)) for v in row) for row in X) + "\n",
    )
    code, out, _ = run(capsys, ["estimate", csv_path, "--location", "mean"])
    assert code == 0
    payload = json.loads(out)
    assert payload["location"]["estimate"] == list(X.mean(axis=0))

    from signcov import sscm_plugin

    S, _, _ = sscm_plugin(X, method="mean")
    assert payload["sscm"]["matrix"]["data"] == list(S.matrix.ravel())


def test_estimate_csv_output(tmp_path, capsys):
    csv_path = write(tmp_path, "tri.csv", TRIANGLE_CSV)
    code, out, _ = run(capsys, ["estimate", csv_path, "--output", "csv"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "section,i,j,value"
    assert any(line.startswith("location,0,,") for line in lines)
    assert any(line.startswith("sscm,1,1,") for line in lines)


def test_estimate_with_asymptotics(tmp_path, capsys):
    rng = np.random.default_rng(71)
    X = rng.standard_normal((50, 2))
    csv_path = write(
        tmp_path,
        "data.csv",
        "\n".join(",".join(repr(float(v)) for v in row) for row in X) + "\n",
    )
    code, out, _ = run(
        capsys, ["estimate", csv_path, "--location", "mean", "--asymptotics"]
    )
    assert code == 0
    bundle = json.loads(out)["asymptotics"]
    assert bundle["fixed_cov"]["dims"] == [4, 4]
    assert bundle["plugin_cov"]["dims"] == [4, 4]
    assert bundle["location_method"] == "mean"


def test_oracle_closed_matches_printed_value(capsys):
    code, out, _ = run(capsys, ["oracle", "--model", SHAPE_MODEL])
    assert code == 0
    payload = json.loads(out)
    offdiag = payload["matrix"]["data"][1]
    assert abs(offdiag - 0.13397) <= 5e-6
    assert payload["method"] == "closed"
    assert payload["se"] is None


def test_oracle_closed_p3_unsupported(capsys):
    model = json.dumps(
        {"generator": "gaussian", "mu": [0.0, 0.0, 0.0], "V": np.eye(3).tolist()}
    )
    code, _, err = run(capsys, ["oracle", "--model", model, "--method", "closed"])
    assert code == 4
    assert "p = 2" in err


def test_oracle_mc_spherical(capsys):
    model = json.dumps(
        {"generator": "gaussian", "mu": [0.0, 0.0, 0.0], "V": np.eye(3).tolist()}
    )
    code, out, _ = run(
        capsys,
        ["oracle", "--model", model, "--method", "mc", "--mc-size", "200000",
         "--seed", "5"],
    )
    assert code == 0
    payload = json.loads(out)
    M = np.array(payload["matrix"]["data"]).reshape(3, 3)
    se = np.array(payload["se"]["data"]).reshape(3, 3)
    assert np.all(np.abs(M - np.eye(3) / 3.0) <= 3.0 * se + 1e-12)


def test_oracle_invalid_model_json(capsys):
    code, _, err = run(capsys, ["oracle", "--model", "{bad"])
    assert code == 2
    assert "JSON" in err


def test_asymptotics_subcommand(tmp_path, capsys):
    rng = np.random.default_rng(72)
    X = rng.standard_normal((40, 2))
    csv_path = write(
        tmp_path,
        "data.csv",
        "\n".join(",".join(repr(float(v)) for v in row) for row in X) + "\n",
    )
    code, out, _ = run(capsys, ["asymptotics", csv_path, "--location", "mean"])
    assert code == 0
    payload = json.loads(out)
    assert payload["joint_cov"]["dims"] == [6, 6]

    code, out, _ = run(capsys, ["asymptotics", csv_path, "--location", "median"])
    assert code == 0
    payload = json.loads(out)
    assert payload["joint_cov"] is None
    assert payload["fixed_cov"]["dims"] == [4, 4]


def table_config(tmp_path, seed=2002):
    cfg = {
        "statistic": "table",
        "model": {"generator": "gaussian", "mu": [0.0, 0.0], "V": [[1.0, 0.0], [0.0, 1.0]]},
        "p_grid": [10, 50],
        "n_grid": [5, 1000],
        "methods": ["known", "mean"],
        "replications": 100,
        "master_seed": seed,
    }
    return write(tmp_path, "table.json", json.dumps(cfg))


def test_table_fast_profile_artifacts(tmp_path, capsys):
    cfg_path = table_config(tmp_path)
    out_dir = tmp_path / "out"
    code, out, _ = run(
        capsys, ["table", "--config", cfg_path, "--fast", "--out", str(out_dir)]
    )
    assert code == 0
    lines = (out_dir / "table.csv").read_text().strip().splitlines()
    assert lines[0] == "p,n,method,mean,se,replications"
    assert len(lines) == 1 + 2 * 2 * 2  # 8 cells
    assert all(line.endswith(",10") for line in lines[1:])  # fast: 100 // 10
    meta = json.loads((out_dir / "table_metadata.json").read_text())
    assert meta["config"]["replications"] == 10
    assert "artifacts:" in out


def test_table_worker_independence(tmp_path, capsys):
    cfg_path = table_config(tmp_path)
    outs = []
    for workers in ("1", "2"):
        out_dir = tmp_path / f"w{workers}"
        code, _, _ = run(
            capsys,
            ["table", "--config", cfg_path, "--fast", "--workers", workers,
             "--out", str(out_dir)],
        )
        assert code == 0
        outs.append((out_dir / "table.csv").read_bytes())
    assert outs[0] == outs[1]


def test_seed_env_override(tmp_path, capsys, monkeypatch):
    cfg_path = table_config(tmp_path, seed=1)
    env_dir = tmp_path / "env"
    monkeypatch.setenv("SIGNCOV_SEED", "4242")
    code, _, _ = run(capsys, ["table", "--config", cfg_path, "--fast", "--out", str(env_dir)])
    assert code == 0
    monkeypatch.delenv("SIGNCOV_SEED")
    flag_dir = tmp_path / "flag"
    code, _, _ = run(
        capsys,
        ["table", "--config", cfg_path, "--fast", "--seed", "4242", "--out", str(flag_dir)],
    )
    assert code == 0
    assert (env_dir / "table.csv").read_bytes() == (flag_dir / "table.csv").read_bytes()
    meta = json.loads((env_dir / "table_metadata.json").read_text())
    assert meta["master_seed"] == 4242


def test_experiment_config_errors(tmp_path, capsys):
    code, _, err = run(capsys, ["table", "--config", str(tmp_path / "none.json")])
    assert code == 2

    bad = write(tmp_path, "bad.json", "{not json")
    code, _, err = run(capsys, ["table", "--config", bad])
    assert code == 2
    assert "JSON" in err

    qq_cfg = write(
        tmp_path,
        "qq.json",
        json.dumps(
            {
                "statistic": "qq",
                "model": {"generator": "gaussian", "mu": [0.0, 0.0],
                          "V": [[1.0, 0.0], [0.0, 1.0]]},
                "n_grid": [10],
                "replications": 5,
                "master_seed": 3,
            }
        ),
    )
    code, _, err = run(capsys, ["table", "--config", qq_cfg])
    assert code == 2
    assert "does not match" in err


def test_unknown_flag_rejected(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["estimate", "x.csv", "--bogus"])
    assert exc.value.code == 2
