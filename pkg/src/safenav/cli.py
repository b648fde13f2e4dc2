"""``safenav`` command line: train, eval, rollout and gen-dataset."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

from safenav.env import EnvConfig
from safenav.evalkit import ObservationMismatch, check_policy, evaluate, export_trajectory, run_episode
from safenav.harness import TrainConfig, train
from safenav.netopt import ShapeError, load_checkpoint
from safenav.tasks import SCENARIOS, DatasetError, generate_dataset, load_dataset, save_dataset

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="safenav", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a PPO or Lagrangian-PPO policy")
    t.add_argument("--config", type=Path, help="JSON file with TrainConfig fields")
    t.add_argument("--algo", choices=("ppo", "lppo"))
    t.add_argument("--seed", type=int, required=True)
    t.add_argument("--out", type=Path, required=True, help="output directory")
    t.add_argument("--dataset", type=Path)
    t.add_argument("--iterations", type=int, dest="total_iterations")
    t.add_argument("--steps-per-iteration", type=int, dest="steps_per_iteration")
    t.add_argument("--num-envs", type=int, dest="num_envs")

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    e.add_argument("--checkpoint", type=Path, required=True)
    e.add_argument("--dataset", type=Path, required=True)
    e.add_argument("--out", type=Path, required=True, help="report JSON path")
    e.add_argument("--config", type=Path, help="JSON with an 'env' section (or an EnvConfig)")
    e.add_argument("--mode", choices=("mean_action", "sample"), default="mean_action")
    e.add_argument("--seed", type=int, default=0)

    r = sub.add_parser("rollout", help="export one trajectory as CSV")
    r.add_argument("--checkpoint", type=Path, required=True)
    r.add_argument("--dataset", type=Path, required=True)
    r.add_argument("--task-id", required=True)
    r.add_argument("--out", type=Path, required=True, help="trajectory CSV path")
    r.add_argument("--config", type=Path)

    g = sub.add_parser("gen-dataset", help="write a generated task dataset")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--scenario", choices=SCENARIOS, required=True)
    g.add_argument("--out", type=Path, required=True)
    g.add_argument("--width", type=float, help="corridor passage width (m)")
    return p


def _read_json(path: Path) -> dict:
    if not path.is_file():
        raise ConfigError(f"{path}: no such file")
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return obj


def resolve_train_config(args) -> TrainConfig:
    """Built-in defaults, overlaid by the config file, overlaid by flags."""
    obj = _read_json(args.config) if args.config else {}
    for name in ("algo", "seed", "total_iterations", "steps_per_iteration", "num_envs"):
        val = getattr(args, name, None)
        if val is not None:
            obj[name] = val
    if args.dataset is not None:
        obj["dataset"] = str(args.dataset)
    obj["out_dir"] = str(args.out)
    try:
        return TrainConfig.from_json(obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid train config: {exc}") from None


def _env_config(path: Path | None) -> EnvConfig:
    if path is None:
        return EnvConfig()
    obj = _read_json(path)
    train_keys = {f.name for f in fields(TrainConfig)} - {"env"}
    if "env" in obj:
        env = obj["env"]
    elif set(obj) & train_keys:
        env = {}
    else:
        env = obj
    try:
        return EnvConfig.from_json(env)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: invalid env config: {exc}") from None


def _load_policy(path: Path, env_cfg: EnvConfig):
    if not path.is_file():
        raise ConfigError(f"{path}: no such file")
    try:
        policy, _ = load_checkpoint(path)
        check_policy(policy, env_cfg)
    except (json.JSONDecodeError, ShapeError, ObservationMismatch) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return policy


def _load_tasks(path: Path, env_cfg: EnvConfig):
    if not path.is_file():
        raise ConfigError(f"{path}: no such file")
    try:
        return load_dataset(path, env_cfg.vehicle)
    except DatasetError as exc:
        raise ConfigError(str(exc)) from None


def _cmd_train(args) -> None:
    cfg = resolve_train_config(args)
    if cfg.dataset is None:
        raise ConfigError("train needs a dataset (--dataset or 'dataset' in the config)")
    tasks = _load_tasks(Path(cfg.dataset), cfg.env)
    res = train(cfg, tasks)
    print(f"wrote {res.out_dir / 'log.csv'} and {res.out_dir / 'ckpt_final.json'}")


def _cmd_eval(args) -> None:
    env_cfg = _env_config(args.config)
    policy = _load_policy(args.checkpoint, env_cfg)
    tasks = _load_tasks(args.dataset, env_cfg)
    if not tasks:
        raise ConfigError(f"{args.dataset}: dataset is empty")
    report = evaluate(policy, tasks, env_cfg, args.mode, args.seed)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    report.save(args.out)
    mmc = "n/a" if report.mmc is None else f"{report.mmc:.3f} m"
    print(f"SR {report.success_rate:.3f}  CR {report.collision_rate:.3f}  "
          f"timeout {report.timeout_rate:.3f}  MMC {mmc}")


def _cmd_rollout(args) -> None:
    env_cfg = _env_config(args.config)
    policy = _load_policy(args.checkpoint, env_cfg)
    tasks = {t.id: t for t in _load_tasks(args.dataset, env_cfg)}
    if args.task_id not in tasks:
        raise ConfigError(f"task id {args.task_id!r} not found in {args.dataset}")
    ep = run_episode(policy, tasks[args.task_id], env_cfg, record=True)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    export_trajectory(ep, args.out)
    print(f"{args.task_id}: {ep.outcome.value} after {len(ep.states) - 1} steps -> {args.out}")


def _cmd_gen(args) -> None:
    params = {}
    if args.width is not None:
        if args.scenario != "corridor":
            raise UsageError("--width only applies to the corridor scenario")
        params["width"] = args.width
    try:
        tasks = generate_dataset(args.seed, args.count, args.scenario, **params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    args.out.parent.mkdir(parents=True, exist_ok=True)
    save_dataset(tasks, args.out)
    print(f"wrote {len(tasks)} {args.scenario} tasks to {args.out}")


_COMMANDS = {"train": _cmd_train, "eval": _cmd_eval, "rollout": _cmd_rollout,
             "gen-dataset": _cmd_gen}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"safenav: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, DatasetError) as exc:
        print(f"safenav: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - report and map to the runtime exit code
        print(f"safenav: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
