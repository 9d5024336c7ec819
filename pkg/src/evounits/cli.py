"""Command-line entry point: train, eval, probe, resume."""

from __future__ import annotations

import argparse
import csv
import pickle
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import ExperimentConfig, from_preset, load_config, save_config
from .errors import CheckpointError, ConfigError, EvaluationError, EvoUnitsError
from .genome import initial_genome
from .architecture import count_parameters
from .cartpole import CartPoleSwingUp, run_episode
from .harness import (
    EVAL_SEED_OFFSET,
    PopulationEvaluator,
    compare_orderings,
    evaluate,
    probe_activations,
    write_eval_json,
    write_trace_csv,
)
from .network import build_policy, load_champion, save_champion
from .neural_unit import NeuronMode
from .optimizers import PipelineRunner

RUNNER_SCHEMA_VERSION = 1
FINAL_EVAL_SEED_SUBOFFSET = 100_000

HISTORY_COLUMNS = [
    "generation", "stage", "best_fitness", "mean_fitness", "std_fitness",
    "periodic_eval_mean", "periodic_eval_std", "wallclock",
]


def write_history_csv(path, history):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_COLUMNS)
        for rec in history:
            writer.writerow([
                rec.generation, rec.stage,
                repr(rec.best_fitness), repr(rec.mean_fitness), repr(rec.std_fitness),
                repr(rec.periodic_eval_mean), repr(rec.periodic_eval_std),
                repr(rec.wallclock),
            ])


def _save_runner_checkpoint(path, cfg: ExperimentConfig, out_dir, runner):
    payload = {
        "schema_version": RUNNER_SCHEMA_VERSION,
        "config": cfg,
        "out_dir": str(out_dir),
        "runner": runner,
    }
    with open(path, "wb") as fh:
        pickle.dump(payload, fh)


def _load_runner_checkpoint(path):
    try:
        with open(path, "rb") as fh:
            payload = pickle.load(fh)
    except (OSError, pickle.UnpicklingError, EOFError) as exc:
        raise CheckpointError(f"cannot decode run checkpoint {path}: {exc}") from exc
    if payload.get("schema_version") != RUNNER_SCHEMA_VERSION:
        raise CheckpointError("unsupported run checkpoint schema")
    return payload


class _GuardedEvaluator:
    """Wraps the fitness function; on failure dumps the candidates for post-mortem."""

    def __init__(self, inner, dump_dir):
        self.inner = inner
        self.dump_dir = Path(dump_dir)

    def __call__(self, genomes, generation):
        try:
            return self.inner(genomes, generation)
        except Exception as exc:
            path = self.dump_dir / f"failed_genomes_gen{generation}.npy"
            np.save(path, np.atleast_2d(genomes))
            raise EvaluationError(
                f"evaluation failed at generation {generation}: {exc}; "
                f"candidates dumped to {path}",
                genome_path=str(path),
            ) from exc


def _run_training(cfg: ExperimentConfig, out_dir: Path, runner=None, quiet=False):
    out_dir.mkdir(parents=True, exist_ok=True)
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(exist_ok=True)
    save_config(out_dir / "config.yaml", cfg)

    arch = cfg.architecture()
    env_params = cfg.env_params()
    pipe_cfg = cfg.pipeline()
    if runner is None:
        x0 = initial_genome(arch)
        runner = PipelineRunner(pipe_cfg, count_parameters(arch), x0)

    eval_fn = _GuardedEvaluator(
        PopulationEvaluator(
            arch, env_params,
            episodes_per_candidate=cfg.episodes_per_candidate,
            train_seed_base=cfg.master_seed,
            workers=cfg.workers,
        ),
        out_dir,
    )

    def periodic_eval(genome):
        report = evaluate(
            genome, arch, env_params, pipe_cfg.eval_episodes,
            cfg.master_seed + EVAL_SEED_OFFSET,
        )
        return report.mean, report.std

    def on_generation(r, rec):
        if r.generation % cfg.checkpoint_every == 0 or r.finished:
            _save_runner_checkpoint(
                ckpt_dir / f"runner_gen{r.generation}.pkl", cfg, out_dir, r
            )
        if not quiet and rec.generation % 10 == 0:
            print(
                f"gen {rec.generation:5d} [{rec.stage}] "
                f"best {rec.best_fitness:8.2f} mean {rec.mean_fitness:8.2f}",
                flush=True,
            )

    result = runner.run(eval_fn, periodic_eval, on_generation)
    write_history_csv(out_dir / "history.csv", result.history)

    final_report = evaluate(
        result.champion, arch, env_params, cfg.final_eval_episodes,
        cfg.master_seed + EVAL_SEED_OFFSET + FINAL_EVAL_SEED_SUBOFFSET,
        genome_id=f"{cfg.name}-champion",
    )
    save_champion(
        out_dir / "champion.json", arch, result.champion,
        eval_info={
            "mean": final_report.mean,
            "std": final_report.std,
            "n_episodes": final_report.n_episodes,
            "periodic_eval_mean": result.champion_eval_mean,
        },
    )
    write_eval_json(out_dir / "eval.json", final_report)
    if not quiet:
        print(
            f"done: champion mean {final_report.mean:.1f} "
            f"+/- {final_report.std:.1f} over {final_report.n_episodes} episodes"
        )
        print(f"outputs in {out_dir}")
    return 0


def cmd_train(args):
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = from_preset(args.preset)
    else:
        raise ConfigError("train: provide --config or --preset")
    if args.seed_override is not None:
        cfg.seeds["master_seed"] = args.seed_override
        cfg.validate()
    if args.workers is not None:
        cfg.run["workers"] = args.workers
        cfg.validate()
    return _run_training(cfg, Path(args.out_dir), quiet=args.quiet)


def cmd_resume(args):
    payload = _load_runner_checkpoint(args.checkpoint)
    cfg: ExperimentConfig = payload["config"]
    runner: PipelineRunner = payload["runner"]
    if args.config:
        current = load_config(args.config)
        for section in ("env", "arch", "optimizer", "seeds", "evaluation"):
            if getattr(current, section) != getattr(cfg, section):
                raise ConfigError(
                    f"resume: config section {section!r} differs from the "
                    "checkpointed run; refusing to continue"
                )
    if runner.finished:
        print("run already finished; nothing to do")
        return 0
    out_dir = Path(args.out_dir) if args.out_dir else Path(payload["out_dir"])
    if args.workers is not None:
        cfg.run["workers"] = args.workers
        cfg.validate()
    return _run_training(cfg, out_dir, runner=runner, quiet=args.quiet)


def cmd_eval(args):
    arch, genome, _ = load_champion(args.champion)
    env_params = (
        load_config(args.config).env_params() if args.config else None
    )
    from .cartpole import SwingUpParams

    env_params = env_params or SwingUpParams()
    report = evaluate(
        genome, arch, env_params, args.episodes, args.seed,
        genome_id=Path(args.champion).stem,
    )
    out = args.out or str(Path(args.champion).with_name("eval.json"))
    write_eval_json(out, report)
    print(
        f"{report.genome_id}: mean {report.mean:.2f} +/- {report.std:.2f} "
        f"over {report.n_episodes} episodes (base seed {report.base_seed})"
    )
    if args.dump_trajectory:
        policy = build_policy(arch, genome)
        env = CartPoleSwingUp(env_params)
        result = run_episode(policy, env, args.seed, record_trajectory=True)
        with open(args.dump_trajectory, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "x_dot", "theta", "theta_dot", "action", "reward"])
            for row in result.trajectory:
                writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])
        print(f"trajectory written to {args.dump_trajectory}")
    return 0


def cmd_probe(args):
    arch, genome, _ = load_champion(args.champion)
    if arch.neuron_mode is NeuronMode.PLAIN_TANH:
        raise ConfigError("probe: champion is a plain-tanh baseline, no units to probe")
    traces = probe_activations(genome, arch, args.layer)
    divergence = compare_orderings(genome, arch, args.layer)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"traces_layer{args.layer}.csv"
    write_trace_csv(csv_path, traces)
    import json

    with open(out_dir / f"divergence_layer{args.layer}.json", "w") as fh:
        json.dump(
            {
                "layer": divergence.layer,
                "max_divergence": divergence.max_divergence,
                "per_neuron": [float(d) for d in divergence.divergence],
            },
            fh,
            indent=2,
        )
    print(
        f"layer {args.layer}: {len(traces)} neurons, "
        f"max ordering divergence {divergence.max_divergence:.4f}"
    )
    print(f"traces written to {csv_path}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="evounits",
        description="Evolve per-neuron parameters in random-weight networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the staged training pipeline")
    p_train.add_argument("--config", help="YAML experiment config")
    p_train.add_argument("--preset", choices=sorted(config_mod.PRESETS),
                         help="built-in experiment preset")
    p_train.add_argument("--out-dir", required=True)
    p_train.add_argument("--workers", type=int, default=None)
    p_train.add_argument("--seed-override", type=int, default=None)
    p_train.add_argument("--quiet", action="store_true")
    p_train.set_defaults(func=cmd_train)

    p_resume = sub.add_parser("resume", help="continue a checkpointed run")
    p_resume.add_argument("--checkpoint", required=True)
    p_resume.add_argument("--config", help="verify against the checkpointed config")
    p_resume.add_argument("--out-dir", default=None)
    p_resume.add_argument("--workers", type=int, default=None)
    p_resume.add_argument("--quiet", action="store_true")
    p_resume.set_defaults(func=cmd_resume)

    p_eval = sub.add_parser("eval", help="score a champion checkpoint")
    p_eval.add_argument("--champion", required=True)
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=EVAL_SEED_OFFSET)
    p_eval.add_argument("--config", help="env overrides from a config file")
    p_eval.add_argument("--out", default=None, help="eval report JSON path")
    p_eval.add_argument("--dump-trajectory", default=None,
                        help="write one episode's trajectory CSV here")
    p_eval.set_defaults(func=cmd_eval)

    p_probe = sub.add_parser("probe", help="per-neuron activation traces")
    p_probe.add_argument("--champion", required=True)
    p_probe.add_argument("--layer", type=int, required=True)
    p_probe.add_argument("--out-dir", required=True)
    p_probe.set_defaults(func=cmd_probe)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except EvoUnitsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
