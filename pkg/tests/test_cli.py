import json

from safenav.cli import EXIT_CONFIG, EXIT_OK, EXIT_USAGE, resolve_train_config, run, build_parser
from safenav.netopt import GaussianPolicy, Mlp, save_checkpoint
from safenav.tasks import generate_dataset, save_dataset


def test_gen_dataset_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert run(["gen-dataset", "--seed", "7", "--count", "5", "--scenario", "corridor",
                    "--out", str(p)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    assert len(json.loads(a.read_text())["tasks"]) == 5


def test_usage_errors(capsys):
    assert run([]) == EXIT_USAGE
    assert run(["train", "--out", "x"]) == EXIT_USAGE  # --seed is mandatory
    assert run(["gen-dataset", "--seed", "1", "--count", "1", "--scenario", "maze",
                "--out", "x"]) == EXIT_USAGE
    assert run(["eval", "--bogus"]) == EXIT_USAGE
    assert "safenav" in capsys.readouterr().err


def test_gen_dataset_zero_count(tmp_path, capsys):
    assert run(["gen-dataset", "--seed", "1", "--count", "0", "--scenario", "parking",
                "--out", str(tmp_path / "d.json")]) == EXIT_CONFIG


def test_eval_shape_mismatch(tmp_path, capsys):
    ds = tmp_path / "d.json"
    save_dataset(generate_dataset(0, 2, "random_boxes"), ds)
    ck = tmp_path / "c.json"
    save_checkpoint(GaussianPolicy(Mlp([10, 2]), [0.0, 0.0]), ck)
    code = run(["eval", "--checkpoint", str(ck), "--dataset", str(ds), "--out",
                str(tmp_path / "r.json")])
    assert code == EXIT_CONFIG
    assert "10-dim" in capsys.readouterr().err


def test_missing_files(tmp_path, capsys):
    code = run(["eval", "--checkpoint", str(tmp_path / "nope.json"), "--dataset",
                str(tmp_path / "d.json"), "--out", str(tmp_path / "r.json")])
    assert code == EXIT_CONFIG
    assert "nope.json" in capsys.readouterr().err


def test_bad_dataset_reports_field(tmp_path, capsys):
    ds = tmp_path / "d.json"
    ds.write_text(json.dumps({"tasks": [{"id": "q", "start": [0, 0, 0], "goal": [1, 0, 0, 0, 0]}]}))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"total_iterations": 1}))
    code = run(["train", "--config", str(cfg), "--seed", "1", "--dataset", str(ds),
                "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "q.start" in capsys.readouterr().err


def test_bad_config_field(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"total_iterations": 1, "learning_rate": 3}))
    code = run(["train", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG
    assert "learning_rate" in capsys.readouterr().err


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"algo": "lppo", "num_envs": 4, "steps_per_iteration": 512,
                               "seed": 11}))
    p = build_parser()
    args = p.parse_args(["train", "--config", str(cfg), "--seed", "3", "--algo", "ppo",
                         "--out", str(tmp_path / "o")])
    tc = resolve_train_config(args)
    assert tc.algo == "ppo"          # flag beats file
    assert tc.seed == 3              # flag beats file
    assert tc.num_envs == 4          # file beats default
    assert tc.total_iterations == 300  # default
    assert tc.out_dir == str(tmp_path / "o")


def test_train_eval_rollout_smoke(tmp_path):
    ds = tmp_path / "d.json"
    save_dataset(generate_dataset(0, 2, "random_boxes"), ds)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"total_iterations": 1, "steps_per_iteration": 128, "num_envs": 2,
                               "ppo": {"hidden": [16], "epochs": 1}}))
    out = tmp_path / "run"
    assert run(["train", "--config", str(cfg), "--seed", "0", "--dataset", str(ds),
                "--out", str(out)]) == EXIT_OK
    assert (out / "log.csv").exists() and (out / "ckpt_final.json").exists()
    assert set(p.name for p in tmp_path.iterdir()) == {"d.json", "cfg.json", "run"}
    rep = out / "report.json"
    assert run(["eval", "--checkpoint", str(out / "ckpt_final.json"), "--dataset", str(ds),
                "--out", str(rep), "--config", str(cfg)]) == EXIT_OK
    assert set(json.loads(rep.read_text())) == {"sr", "cr", "timeout", "mmc", "tasks"}
    tid = json.loads(ds.read_text())["tasks"][1]["id"]
    traj = out / "traj.csv"
    assert run(["rollout", "--checkpoint", str(out / "ckpt_final.json"), "--dataset", str(ds),
                "--task-id", tid, "--out", str(traj)]) == EXIT_OK
    assert traj.read_text().startswith("step,x,y,theta,v,gamma,a,omega,reward,cost,min_lidar,clearance")
    assert run(["rollout", "--checkpoint", str(out / "ckpt_final.json"), "--dataset", str(ds),
                "--task-id", "missing", "--out", str(traj)]) == EXIT_CONFIG
