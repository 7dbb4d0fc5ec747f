import json

import pytest

from hiercontagion.cli import run

TREE = {"id": "root", "coeff": 1, "exp": [9, 8], "children": [
    {"id": "A", "coeff": 1, "exp": [1, 2], "v": 0.5},
    {"id": "B", "coeff": 0.8, "exp": [1, 2], "v": 0.5},
]}


@pytest.fixture
def tree_file(tmp_path):
    p = tmp_path / "tree.json"
    p.write_text(json.dumps(TREE))
    return str(p)


def lines(capsys):
    return capsys.readouterr().out.splitlines()


def test_validate_ok(tree_file, capsys):
    assert run(["validate", tree_file]) == 0
    out = lines(capsys)
    assert out[0].startswith("# hiercontagion validate ") and out[1] == "valid"


def test_validate_gap_tree(tmp_path, capsys):
    doc = dict(TREE, exp=[3, 2])
    p = tmp_path / "gap.json"
    p.write_text(json.dumps(doc))
    assert run(["validate", str(p)]) == 1
    assert any("regime-gap" in line for line in lines(capsys))


def test_malformed_tree_names_node(tmp_path, capsys):
    doc = json.loads(json.dumps(TREE))
    del doc["children"][1]["v"]
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(doc))
    assert run(["validate", str(p)]) == 1
    assert "'B'" in capsys.readouterr().err


def test_usage_errors(tree_file, capsys):
    assert run(["zeta", "--k", "2", "--c", "1", "--bogus"]) == 2
    assert "usage" in capsys.readouterr().err
    assert run([]) == 2
    assert run(["zeta", "--k", "2", "--c", "-1"]) == 2
    assert run(["optimize", "--tree", "/nonexistent.json", "--K", "2"]) == 2
    assert run(["--help"]) == 0


def test_zeta_row(capsys):
    assert run(["zeta", "--k", "2", "--c", "1", "--r", "2", "--trials", "200000"]) == 0
    out = lines(capsys)
    assert out[1] == "k,trials,hits,truncated,p_hat,ci_low,ci_high"
    k, trials, hits, trunc, p, lo, hi = out[2].split(",")
    assert abs(float(p) - 0.42436830099781236) < 3 * (0.4244 * 0.5756 / 200000) ** 0.5
    assert trunc == "0"


def test_zeta_distribution(capsys):
    assert run(["zeta", "--k", "2", "--c", "1", "--trials", "1000", "--distribution"]) == 0
    rows = [r.split(",") for r in lines(capsys)[2:]]
    assert abs(sum(float(r[2]) for r in rows) - 1) < 1e-9
    assert rows[-1][1] == "inf"


def test_optimize_line(tree_file, capsys, tmp_path):
    trace = tmp_path / "trace.csv"
    assert run(["optimize", "--tree", tree_file, "--K", "4", "--r", "2",
                "--walk-trials", "20000", "--dp-trace", str(trace)]) == 0
    out = lines(capsys)
    assert "subtree_0/leaf_A: 4" in out
    assert any(line.startswith("value: ") for line in out)
    assert trace.read_text().splitlines()[1] == "subtree,k,H"


def test_byte_identical_outputs(tree_file, tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert run(["bruteforce", "--tree", tree_file, "--K", "2", "--n", "400",
                    "--trials", "3", "--seed", "5", "--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode().splitlines()
    assert "seed=5" in text[0] and "K=2" in text[0] and "n=400" in text[0]
    assert text[1] == "allocation,mean,se,rank"


def test_sample_and_cascade(tree_file, capsys):
    assert run(["sample", "--tree", tree_file, "--n", "50", "--seed", "3"]) == 0
    out = lines(capsys)
    assert out[1] == "# n=50 seed=3"
    assert run(["cascade", "--p", "0.5", "--n", "40", "--k", "2"]) == 0
    out = lines(capsys)
    assert out[-2].startswith("TOTAL,40,2,40,")
    assert run(["cascade", "--tree", tree_file, "--n", "100", "--alloc", "3|0"]) == 0
    assert lines(capsys)[1] == "leaf,size,seeds,infected,activated"
    assert run(["sample", "--n", "10"]) == 2


def test_logconcavity_and_couple(capsys):
    assert run(["logconcavity", "--c", "1", "--k-min", "2", "--k-max", "3",
                "--trials", "20000"]) == 0
    out = lines(capsys)
    assert out[1] == "k,product,square,se,margin,verdict"
    assert all(line.endswith("holds") for line in out[2:])
    assert run(["couple", "--k", "2", "--c", "1", "--trials", "20000"]) == 0
    rows = dict(line.split(",") for line in lines(capsys)[2:])
    assert rows["a_not_b"] == "0" and float(rows["pvalue_A"]) > 1e-3


def test_htable_and_submodular(tree_file, capsys):
    assert run(["htable", "--tree", tree_file, "--K", "3", "--walk-trials", "10000"]) == 0
    out = lines(capsys)
    assert out[1] == "subtree,k,h,se,provenance" and len(out) == 2 + 4
    assert run(["htable", "--tree", tree_file, "--K", "3", "--mode", "monte-carlo"]) == 2
    assert run(["submodular-demo", "--K", "3", "--n", "30000", "--trials", "4"]) == 0
    rows = dict(line.split(",") for line in lines(capsys)[2:])
    assert float(rows["leaf_mean_degree"]) > 1
