import json

import numpy as np
import pytest
from click.testing import CliRunner

from exactcpd.cli import main
from exactcpd.formats import parse_cpd, write_cpd, write_tensor
from exactcpd.oracle import verify_cpd
from exactcpd.tensor import Cpd, generate

WSQ_A0 = [[1, 0, 0, 0, 0, 0, 0, 0], [1, 0, 0, 1, 0, 0, 1, 0], [1, 0, 1, 0, 0, 1, 0, 0], [1, 1, 0, 0, 1, 1, 1, 1]]
WSQ_A1 = [[1, 1, 1, 1, 0, 0, 0, 0], [0, 0, 0, 1, 0, 0, 1, 1], [0, 0, 1, 0, 0, 1, 0, 1], [0, 1, 0, 0, 1, 0, 0, 0]]


@pytest.fixture
def runner():
    return CliRunner()


def _witness(stdout, p=2):
    body = stdout.split("\n", 1)[1]
    cpd, _, _ = parse_cpd(f"field {p}\nrank {len(body.splitlines()[1].split())}\n" + body)
    return cpd


def test_rank_exact_wstate(runner):
    r = runner.invoke(main, ["rank", "--gen", "wstate", "--field", "2", "--exact"])
    assert r.exit_code == 0
    assert r.stdout.splitlines()[0] == "rank = 3"
    assert verify_cpd(generate("wstate"), _witness(r.stdout), 2)


def test_rank_le_mm222(runner):
    r = runner.invoke(main, ["rank", "--gen", "mm:2,2,2", "--field", "2", "--le", "6"])
    assert r.exit_code == 0
    assert r.stdout.strip() == "rank <= 6: no"


def test_rank_from_files(runner, tmp_path):
    f = tmp_path / "t.txt"
    f.write_text(write_tensor(generate("addmod2"), 3))
    r = runner.invoke(main, ["rank", str(f), "--exact"])
    assert r.exit_code == 0 and r.stdout.startswith("rank = 2")
    c = tmp_path / "c.txt"
    c.write_text("v0, v1; v1, 0\n")
    out = tmp_path / "w.json"
    r = runner.invoke(main, ["rank", str(c), "--le", "3", "--json", str(out)])
    assert r.exit_code == 0 and r.stdout.startswith("rank <= 3: yes")
    obj = json.loads(out.read_text())
    assert obj["rank"] == 3 and obj["shape"] == [2, 2, 2]
    assert verify_cpd(generate("wstate"), Cpd([np.array(A) for A in obj["factors"]]), 2)


def test_rank_usage_errors(runner, tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("field 2\nshape 2 two 2\n")
    r = runner.invoke(main, ["rank", str(bad), "--exact"])
    assert r.exit_code == 2 and "line 2" in r.output
    assert runner.invoke(main, ["rank", "--gen", "wstate"]).exit_code == 2
    assert runner.invoke(main, ["rank", "--gen", "nope", "--exact"]).exit_code == 2
    assert runner.invoke(main, ["rank", "--gen", "wstate", "--exact", "--pruners", "zap"]).exit_code == 2
    assert runner.invoke(main, ["rank", "--gen", "wstate", "--exact", "--field", "4"]).exit_code == 2


def test_rank_budget_refusal(runner):
    r = runner.invoke(main, ["rank", "--gen", "mm:3,3,3", "--le", "20"])
    assert r.exit_code == 3
    assert "estimate" in r.output


def test_border_rank(runner, tmp_path):
    f = tmp_path / "w.txt"
    f.write_text(write_tensor(generate("wstate"), 2))
    r = runner.invoke(main, ["border-rank", str(f), "--H", "2", "--exact"])
    assert r.exit_code == 0
    assert r.stdout.splitlines()[0] == "border-rank(H=2) = 2"
    assert "x" in r.stdout
    r = runner.invoke(main, ["border-rank", str(f), "--H", "1", "--exact"])
    assert r.stdout.splitlines()[0] == "border-rank(H=1) = 3"
    assert runner.invoke(main, ["border-rank", str(f), "--H", "0", "--exact"]).exit_code == 2
    r = runner.invoke(main, ["border-rank", "--gen", "mm:2,2,2", "--H", "2", "--le", "6"])
    assert r.exit_code == 3


def test_border_rank_file_with_h(runner, tmp_path):
    X = np.zeros((2, 2, 2, 2), dtype=np.int64)
    X[0, 0, 0, 1] = X[1, 1, 1, 1] = 1
    f = tmp_path / "x.txt"
    f.write_text(write_tensor(X, 2, 2))
    r = runner.invoke(main, ["border-rank", str(f), "--H", "2", "--le", "1"])
    assert r.stdout.strip() == "border-rank(H=2) <= 1: no"
    r = runner.invoke(main, ["border-rank", str(f), "--H", "2", "--le", "2"])
    assert r.stdout.startswith("border-rank(H=2) <= 2: yes")
    assert runner.invoke(main, ["border-rank", str(f), "--H", "3", "--exact"]).exit_code == 2


def test_maxrank(runner):
    r = runner.invoke(main, ["maxrank", "--shape", "3,3,4", "--R0", "6", "--count-only"])
    assert r.exit_code == 0 and r.stdout.strip() == "14664"
    r = runner.invoke(main, ["maxrank", "--shape", "2,2,3", "--R0", "2"])
    assert r.exit_code == 0 and "max rank = 3" in r.stdout
    assert runner.invoke(main, ["maxrank", "--shape", "5,5,5"]).exit_code == 3
    assert runner.invoke(main, ["maxrank", "--shape", "2,2"]).exit_code == 2


def test_bounds(runner):
    r = runner.invoke(main, ["bounds", "--shape", "3,3,3"])
    assert r.exit_code == 0
    lines = r.stdout.splitlines()
    assert "lower counting: 3" in lines and "upper howell: 7" in lines and "upper trivial: 9" in lines
    r = runner.invoke(main, ["bounds", "--shape", "4,2,2", "--field", "2"])
    assert "lower nn2: 4" in r.stdout and "upper nn2: 4" in r.stdout
    assert runner.invoke(main, ["bounds", "--shape", "2,2"]).exit_code == 2


def test_verify(runner, tmp_path):
    t = tmp_path / "wsq.txt"
    t.write_text(write_tensor(generate("wstate_sq"), 2))
    good = Cpd([np.array(WSQ_A0), np.array(WSQ_A1), np.array(WSQ_A1)])
    c = tmp_path / "c.txt"
    c.write_text(write_cpd(good, 2))
    r = runner.invoke(main, ["verify", str(t), str(c)])
    assert r.exit_code == 0 and r.stdout.strip() == "OK"
    bad = np.array(WSQ_A0)
    bad[0, 0] = 0
    c.write_text(write_cpd(Cpd([bad, np.array(WSQ_A1), np.array(WSQ_A1)]), 2))
    r = runner.invoke(main, ["verify", str(t), str(c)])
    assert r.exit_code == 1 and r.stdout.startswith("MISMATCH at (0, ")
    c.write_text(write_cpd(Cpd([np.array(WSQ_A0)[:3], np.array(WSQ_A1), np.array(WSQ_A1)]), 2))
    assert runner.invoke(main, ["verify", str(t), str(c)]).exit_code == 2


def test_gen_roundtrips_through_rank(runner, tmp_path):
    r = runner.invoke(main, ["gen", "polymul:2"])
    f = tmp_path / "p.txt"
    f.write_text(r.stdout)
    r = runner.invoke(main, ["rank", str(f), "--exact"])
    assert r.stdout.startswith("rank = 3")


def test_emitted_witnesses_verify(runner, tmp_path):
    for name in ("t1", "diagshift:3", "addmod2"):
        r = runner.invoke(main, ["rank", "--gen", name, "--exact"])
        t = tmp_path / "t.txt"
        t.write_text(write_tensor(generate(name), 2))
        c = tmp_path / "c.txt"
        body = r.stdout.split("\n", 1)[1]
        R = int(r.stdout.split()[2])
        c.write_text(f"field 2\nrank {R}\n" + body)
        assert runner.invoke(main, ["verify", str(t), str(c)]).stdout.strip() == "OK"
