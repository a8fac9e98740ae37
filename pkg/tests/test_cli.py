import json
import os
import shutil
import subprocess

import numpy as np
import pytest

from conftest import HAMMING_ALIST, write_text
from tannerlab import cli
from tannerlab.graph import read_alist


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def hamming_alist(tmp_path):
    return write_text(tmp_path / "hamming.alist", HAMMING_ALIST)


def test_decode_json(capsys, hamming_alist):
    code, out, _ = run(capsys, "decode", "--alist", hamming_alist, "--param", "0.01", "--h", "4")
    res = json.loads(out)
    assert code == 0 and res["decoder"] == "cert_nwms"
    assert res["success"] and res["certified"] and res["word"] == "0000000"


def test_decode_llr_file(capsys, tmp_path, hamming_alist):
    llr = write_text(tmp_path / "llr.txt", "1 1 1 1 1 1 -0.5\n")
    for dec in ("ml_brute", "lp"):
        code, out, _ = run(capsys, "decode", "--alist", hamming_alist, "--llr", llr, "--decoder", dec, "--h", "3")
        assert code == 0 and json.loads(out)["word"] == "0000000"
    # min-sum on this small cyclic graph is not ML; only check the output shape
    _, out, _ = run(capsys, "decode", "--alist", hamming_alist, "--llr", llr, "--decoder", "nwms", "--h", "3")
    res = json.loads(out)
    assert len(res["word"]) == 7 and isinstance(res["is_codeword"], bool)
    bad = write_text(tmp_path / "short.txt", "1 2 3\n")
    with pytest.raises(SystemExit):
        cli.main(["decode", "--alist", hamming_alist, "--llr", bad])


def test_verify(capsys, tmp_path, hamming_alist):
    llr = write_text(tmp_path / "llr.txt", "1 1 1 1 1 1 1")
    _, out, _ = run(capsys, "verify", "--alist", hamming_alist, "--llr", llr, "--h", "2")
    res = json.loads(out)
    assert res["locally_optimal"] and res["min_value"] > 0
    llr = write_text(tmp_path / "bad.txt", "1 1 1 1 1 1 -5")
    _, out, _ = run(capsys, "verify", "--alist", hamming_alist, "--llr", llr, "--h", "2")
    assert not json.loads(out)["locally_optimal"]


def test_explicit_weights_length(hamming_alist):
    with pytest.raises(SystemExit, match="h = 3"):
        cli.main(["decode", "--alist", hamming_alist, "--h", "3", "--weights", "1,2"])


SIM = ("simulate", "--gen", "3,6,60,6,1", "--grid", "0.02,0.06", "--trials", "120", "--h", "6",
       "--decoder", "cert_nwms", "--seed", "5")


def test_simulate_deterministic(capsys, tmp_path):
    a, b = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
    assert cli.main([*SIM, "--out", a]) == 0
    assert cli.main([*SIM, "--out", b]) == 0
    with open(a, "rb") as fa, open(b, "rb") as fb:
        ta, tb = fa.read(), fb.read()
    assert ta == tb
    lines = ta.decode().splitlines()
    assert lines[0].split(",") == list(cli.SIM_COLUMNS) and len(lines) == 3
    with open(a + ".json", encoding="utf-8") as f:
        side = json.load(f)
    assert side["config"]["seed"] == 5 and side["config"]["N"] == 60 and "build" in side
    rows = [dict(zip(cli.SIM_COLUMNS, ln.split(","))) for ln in lines[1:]]
    for r in rows:
        assert r["cert_not_success"] == "0"
        assert int(r["certified"]) + int(r["cert_failures"]) == 120
    assert int(rows[0]["errors"]) <= int(rows[1]["errors"])


def test_simulate_worker_count_irrelevant(capsys):
    one = run(capsys, *SIM, "--workers", "1")[1]
    two = run(capsys, *SIM, "--workers", "2")[1]
    assert one == two


def test_simulate_other_seed_differs(capsys):
    a = run(capsys, *SIM)[1]
    b = run(capsys, *SIM[:-1], "6")[1]
    assert a != b


def test_simulate_validation(hamming_alist, tmp_path):
    with pytest.raises(ValueError, match="trials"):
        cli.main(["simulate", "--alist", hamming_alist, "--trials", "0"])
    code_json = write_text(tmp_path / "code.json", json.dumps(
        {"alist": hamming_alist.replace("hamming", "one"), "local_codes": ["Hamming(7,4)"]}))
    write_text(tmp_path / "one.alist", "7 1\n1 7\n1 1 1 1 1 1 1\n7\n1\n1\n1\n1\n1\n1\n1\n1 2 3 4 5 6 7\n")
    with pytest.raises(ValueError, match="single-parity"):
        cli.main(["simulate", "--code", code_json, "--decoder", "nwms"])


def test_simulate_random_codewords(capsys, hamming_alist):
    _, out, _ = run(capsys, "simulate", "--alist", hamming_alist, "--grid", "0.01", "--trials", "50",
                    "--decoder", "ml_brute", "--random-codewords", "--h", "1")
    row = out.splitlines()[1].split(",")
    assert row[3] == "ml_brute" and int(row[6]) <= 5


def test_config_defaults_and_override(capsys, tmp_path):
    conf = write_text(tmp_path / "c.json", json.dumps({"d": 4, "dl": 2, "dr": 16, "mode": "uniform", "p": 0.01}))
    _, out, _ = run(capsys, "--config", conf, "bound")
    res = json.loads(out)
    assert res["d"] == 4 and res["p"] == 0.01
    _, out, _ = run(capsys, "--config", conf, "bound", "--p", "0.02")
    assert json.loads(out)["p"] == 0.02


def test_bound(capsys):
    code, out, _ = run(capsys, "bound", "--p", "0.005", "--d", "3", "--exact-pi", "2")
    res = json.loads(out)
    assert code == 0 and res["alpha"] < 1 and 0 < res["exact_pi"] < 1
    with pytest.raises(SystemExit, match="--p"):
        cli.main(["bound"])


def test_threshold(capsys, tmp_path):
    csv_path = str(tmp_path / "t.csv")
    code, out, _ = run(capsys, "threshold", "--d", "3", "--mode", "improved", "--s", "0", "--csv", csv_path)
    assert code == 0 and out.startswith("p0 = 0.0086")
    assert "alpha trace:" in out
    with open(csv_path, encoding="utf-8") as f:
        assert f.readline().strip() == "p,alpha,t_star,s,d,dL,dR"
    assert os.path.exists(csv_path + ".json")


def test_threshold_exit_codes(capsys):
    code, _, err = run(capsys, "threshold", "--d", "3", "--dr", "4000")
    assert code == 1 and "no threshold" in err
    code, _, err = run(capsys, "threshold", "--d", "4", "--mode", "improved", "--s", "10")
    assert code == 2 and "level 7" in err


def test_graph_gen_and_info(capsys, tmp_path):
    path = str(tmp_path / "g.alist")
    assert cli.main(["graph", "gen", "--dl", "3", "--dr", "6", "--n", "60", "--girth", "6", "--seed", "2",
                     "--out", path]) == 0
    g = read_alist(path)
    assert g.num_variables == 60 and g.num_checks == 30
    _, out, _ = run(capsys, "graph", "info", path)
    info = json.loads(out)
    assert info["variable_degrees"] == [3] and info["check_degrees"] == [6]
    assert info["girth"] >= 6
    with pytest.raises(SystemExit, match="--dl"):
        cli.main(["graph", "gen", "--dr", "6", "--n", "12"])


def test_lp(capsys, tmp_path, hamming_alist):
    dump = str(tmp_path / "p.lp")
    code, out, _ = run(capsys, "lp", "--alist", hamming_alist, "--param", "0.01", "--unique", "--dump", dump)
    res = json.loads(out)
    assert code == 0 and res["status"] == "optimal" and res["integral"] and res["unique"]
    assert np.allclose(res["x"], 0)
    with open(dump, encoding="utf-8") as f:
        assert "Subject To" in f.read()


def test_console_script():
    exe = shutil.which("tannerlab")
    if exe is None:
        pytest.skip("console script not installed")
    out = subprocess.run([exe, "--help"], capture_output=True, text=True, timeout=60)
    assert out.returncode == 0
    for cmd in ("decode", "verify", "simulate", "bound", "threshold", "graph", "lp"):
        assert cmd in out.stdout
