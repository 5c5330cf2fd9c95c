import json

import numpy as np
import pytest

from ooi.cli import main, verify_fsc
from ooi.fsc import Fsc, make_alternator, random_fsc, save_fsc


def write_config(tmp_path, **doc):
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(doc))
    return path


def test_train_writes_csv_and_metadata(tmp_path, capsys):
    cfg = write_config(tmp_path, env="treemaze", agent="ooi", episodes=5, runs=2, hidden=8, smoothing=1)
    assert main(["train", "--config", str(cfg), "--out", str(tmp_path / "out"), "--episodes", "4"]) == 0
    rows = (tmp_path / "out" / "exp.csv").read_text().splitlines()
    assert rows[0] == "episode,mean,std" and len(rows) == 5
    meta = json.loads((tmp_path / "out" / "exp.metadata.json").read_text())
    assert meta["config"]["episodes"] == 4 and len(meta["runs"]) == 2


def test_train_is_byte_identical_across_invocations(tmp_path):
    cfg = write_config(tmp_path, env="gathering", agent="ooi", episodes=20, runs=2, hidden=8)
    for d in ("a", "b"):
        main(["train", "--config", str(cfg), "--out", str(tmp_path / d), "--seed", "3"])
    assert (tmp_path / "a" / "exp.csv").read_bytes() == (tmp_path / "b" / "exp.csv").read_bytes()


def test_verify_fsc_default_and_file(tmp_path, capsys):
    assert main(["verify-fsc"]) == 0
    assert "equivalent" in capsys.readouterr().out
    path = save_fsc(random_fsc(np.random.default_rng(0)), tmp_path / "f.json")
    assert main(["verify-fsc", "--config", str(path), "--horizon", "6"]) == 0


def test_verify_fsc_samples_large_alphabets():
    fsc = Fsc(psi=[[1.0]], eta=np.ones((1, 7, 1)), eta0=np.ones((7, 1)))
    gap, checked = verify_fsc(fsc, horizon=10, rng=0)
    assert checked == 200 and gap == 0.0
    assert verify_fsc(make_alternator(), horizon=10)[1] == 1


def test_oracle_reports(tmp_path, capsys):
    cfg = write_config(tmp_path, env="treemaze")
    assert main(["oracle", "--config", str(cfg), "--episodes", "20", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "oracle_treemaze.json").read_text())
    assert report["shortest_path_steps"] == [18]
    assert report["scripted_mean_return"] == pytest.approx(8.2)

    capsys.readouterr()
    cfg = write_config(tmp_path, env="dupinput")
    main(["oracle", "--config", str(cfg), "--episodes", "2000"])
    report = json.loads(capsys.readouterr().out)
    assert 15 < report["expected_optimal_reward"] < 21
    assert report["expected_copy_only_reward"] < report["expected_optimal_reward"]


def test_missing_subcommand_exits():
    with pytest.raises(SystemExit):
        main([])
