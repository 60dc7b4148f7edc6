import csv
import io
import json

import numpy as np
import pytest

from pusgen.cli import main
from pusgen.synthetic import planted_series, write_csv


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    raw, _ = planted_series(n_days=360, seed=0)
    write_csv(d / "data.csv", raw)
    (d / "config.toml").write_text("p_tilde = 0.0\n[defaults]\nrestarts = 4\n")
    assert main(["fit", str(d / "data.csv"), "--config", str(d / "config.toml"), "--model", str(d / "model.json")]) == 0
    return d


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


def first_key(workspace, capsys):
    _, out, _ = run(["inspect", "--model", workspace / "model.json"], capsys)
    return read_csv(out)[1][0]


def test_fit_defaults_structure(workspace):
    doc = json.loads((workspace / "model.json").read_text())
    assert len(doc["groups"]) == 3
    assert all(len(g["pus"]) == 4 for g in doc["groups"])


def test_fit_with_default_config(workspace, tmp_path):
    assert main(["fit", str(workspace / "data.csv"), "--model", str(tmp_path / "m.json")]) == 0
    doc = json.loads((tmp_path / "m.json").read_text())
    assert len(doc["groups"]) == 3 and all(len(g["pus"]) == 4 for g in doc["groups"])
    assert doc["scenarios"]["threshold"] == 0.03


def test_fit_deterministic(workspace, tmp_path):
    out = tmp_path / "again.json"
    assert main(["fit", str(workspace / "data.csv"), "--config", str(workspace / "config.toml"), "--model", str(out)]) == 0
    assert out.read_bytes() == (workspace / "model.json").read_bytes()


def test_fit_empty_csv(tmp_path, capsys):
    (tmp_path / "empty.csv").write_text("timestamp,a\n")
    code, _, err = run(["fit", tmp_path / "empty.csv", "--model", tmp_path / "m.json"], capsys)
    assert code == 1 and "MissingHours" in err


def test_inspect_table(workspace, capsys):
    code, out, _ = run(["inspect", "--model", workspace / "model.json"], capsys)
    rows = read_csv(out)
    assert code == 0 and rows[0] == ["key", "p_hat", "p", "days"]
    assert abs(sum(float(r[2]) for r in rows[1:]) - 1.0) <= 1e-12
    doc = json.loads((workspace / "model.json").read_text())
    counts = {"-".join(map(str, e["key"])): e["count"] for e in doc["scenarios"]["joint"]}
    labels = np.column_stack([g["clusters"]["assignments"] for g in doc["groups"]])
    for key, p_hat, _, days in rows[1:]:
        expected = int(np.all(labels == np.array(key.split("-"), dtype=int), axis=1).sum())
        assert int(days) == expected == counts[key]
        assert float(p_hat) == expected / labels.shape[0]


def test_inspect_curve(workspace, capsys):
    code, out, _ = run(["inspect", "--model", workspace / "model.json", "--threshold-curve", "0:0.06:50"], capsys)
    rows = read_csv(out)[1:]
    assert code == 0 and len(rows) == 50
    counts = [int(r[1]) for r in rows]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_inspect_groups_and_months(workspace, capsys):
    code, out, _ = run(["inspect", "--model", workspace / "model.json", "--groups"], capsys)
    assert code == 0 and len(read_csv(out)) == 13
    code, out, _ = run(["inspect", "--model", workspace / "model.json", "--months"], capsys)
    assert code == 0 and read_csv(out)[0] == ["group", "cluster", "month", "proportion"]


def test_sample_then_check(workspace, capsys, tmp_path):
    key = first_key(workspace, capsys)
    out = tmp_path / "s.csv"
    code, _, _ = run(["sample", "--model", workspace / "model.json", "--scenario", key, "--count", 100,
                      "--seed", 5, "--out", out], capsys)
    assert code == 0
    code, text, _ = run(["check", "--model", workspace / "model.json", "--scenario", key, out], capsys)
    rows = read_csv(text)[1:]
    assert code == 0 and len(rows) == 100 and all(r[1] == "inside" for r in rows)


def test_sample_deterministic(workspace, capsys, tmp_path):
    key = first_key(workspace, capsys)
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["sample", "--model", str(workspace / "model.json"), "--scenario", key, "--count", "100",
                     "--seed", "9", "--out", str(p)]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sample_raw_units_check(workspace, capsys, tmp_path):
    key = first_key(workspace, capsys)
    out = tmp_path / "raw.csv"
    assert main(["sample", "--model", str(workspace / "model.json"), "--scenario", key, "--count", "20",
                 "--raw-units", "--out", str(out)]) == 0
    values = np.array([r[1:] for r in read_csv(out.read_text())[1:]], dtype=float)
    assert values.mean() > 5  # physical units, not standardized
    code, _, _ = run(["check", "--model", workspace / "model.json", "--scenario", key, "--raw-units", out], capsys)
    assert code == 0


def test_sample_count_zero_and_unknown_cluster(workspace, capsys):
    code, _, err = run(["sample", "--model", workspace / "model.json", "--scenario", "0-0-0", "--count", 0], capsys)
    assert code == 1
    code, _, err = run(["sample", "--model", workspace / "model.json", "--scenario", "0-0-7", "--count", 1], capsys)
    assert code == 1 and "UnknownCluster" in err
    code, _, err = run(["sample", "--model", workspace / "model.json", "--count", 1], capsys)
    assert code == 1


def test_check_zero_profile_outside_box(workspace, capsys, tmp_path):
    doc = json.loads((workspace / "model.json").read_text())
    # pick a cluster of the first group whose quantile box excludes the origin
    chosen = next(p["cluster"] for p in doc["groups"][0]["pus"]
                  if any(lb > 0 or ub < 0 for lb, ub in zip(p["xi_lb"], p["xi_ub"])))
    key = f"{chosen}-0-0"
    prof = tmp_path / "zeros.csv"
    prof.write_text(",".join(["c"] * 144) + "\n" + ",".join(["0"] * 144) + "\n")
    code, out, _ = run(["check", "--model", workspace / "model.json", "--scenario", key, prof], capsys)
    row = read_csv(out)[1]
    assert code == 1 and row[1] == "outside" and "box" in row[2]


def test_check_malformed_rows(workspace, capsys, tmp_path):
    prof = tmp_path / "bad.csv"
    prof.write_text("sample,a\n0,1,2\n1," + ",".join(["x"] * 144) + "\n")
    code, out, _ = run(["check", "--model", workspace / "model.json", "--scenario", "0-0-0", prof], capsys)
    rows = read_csv(out)[1:]
    assert code == 1
    assert [r[1] for r in rows] == ["error", "error"]
    assert rows[0][2] == "DimensionMismatch"


def test_export_scenario_and_chain(workspace, capsys, tmp_path):
    key = first_key(workspace, capsys)
    out = tmp_path / "e.json"
    assert main(["export", "--model", str(workspace / "model.json"), "--scenario", key, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    model = json.loads((workspace / "model.json").read_text())
    expected = 0
    for g in model["groups"]:
        r = g["basis"]["rank"]
        s = g["pus"][0]["s"]
        expected += 4 * r + 1 + s * (s + 1) // 2
    assert len(doc["constraints"]) == expected
    assert doc["version"] == 1 and doc["affine_maps"]["v"]["dim"] == 144

    chain = ",".join([key] * 5)
    assert main(["export", "--model", str(workspace / "model.json"), "--chain", chain, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    n = 6
    assert len(doc["constraints"]) == 5 * expected + 2 * n * 4
    assert doc["affine_maps"]["v"]["dim"] == 5 * 144


def test_chain_sample_and_check(workspace, capsys, tmp_path):
    key = first_key(workspace, capsys)
    chain = ",".join([key] * 5)
    out = tmp_path / "chain.csv"
    assert main(["sample", "--model", str(workspace / "model.json"), "--chain", chain, "--count", "10",
                 "--out", str(out)]) == 0
    code, text, _ = run(["check", "--model", workspace / "model.json", "--chain", chain, out], capsys)
    assert code == 0 and all(r[1] == "inside" for r in read_csv(text)[1:])


def test_version_mismatch_exit(workspace, capsys, tmp_path):
    doc = json.loads((workspace / "model.json").read_text())
    doc["version"] = 2
    bad = tmp_path / "old.json"
    bad.write_text(json.dumps(doc))
    code, _, err = run(["inspect", "--model", bad], capsys)
    assert code == 1 and "VersionMismatch" in err
