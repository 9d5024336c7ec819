"""Evaluation protocol and activation-probe analysis.

Evaluation runs seeded episode batches and reports mean/std scores; probes
feed an ordered input sweep straight into each neuron of a layer to expose
the activation function each unit has evolved.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .architecture import Architecture
from .cartpole import BatchedSwingUp, SwingUpParams
from .errors import ConfigError
from .genome import decode
from .neural_unit import NeuronMode, layer_step_recurrent, layer_step_simple
from .network import BatchedPolicy, sample_weights

# Evaluation episode seeds live far away from training seeds (which count up
# from the master seed by generation).
EVAL_SEED_OFFSET = 1_000_000_007

# Population evaluation always proceeds in fixed-size chunks so results are
# bitwise independent of the worker count.
CHUNK_SIZE = 128


@dataclass
class EvalReport:
    genome_id: str
    scores: list
    mean: float
    std: float
    n_episodes: int
    base_seed: int

    def to_dict(self):
        return {
            "genome_id": self.genome_id,
            "scores": [float(s) for s in self.scores],
            "mean": float(self.mean),
            "std": float(self.std),
            "n_episodes": self.n_episodes,
            "base_seed": self.base_seed,
        }


@dataclass
class ActivationTrace:
    layer: int
    neuron: int
    inputs: np.ndarray
    outputs: np.ndarray
    states: np.ndarray = None  # absent for simple (stateless) units


@dataclass
class OrderingDivergence:
    layer: int
    divergence: np.ndarray  # per neuron: max |ascending - descending| output
    max_divergence: float = field(init=False)

    def __post_init__(self):
        self.max_divergence = float(self.divergence.max()) if len(self.divergence) else 0.0


def _rollout_chunk(arch, env_params, genomes, episode_seeds, weights=None):
    """Mean episode score per candidate for one chunk of genomes."""
    genomes = np.atleast_2d(genomes)
    n = genomes.shape[0]
    net = BatchedPolicy(arch, genomes, weights=weights)
    env = BatchedSwingUp(env_params, n)
    totals = np.zeros(n)
    for seed in episode_seeds:
        net.reset_states()
        obs = env.reset([seed] * n)
        ep_total = np.zeros(n)
        while not env.all_done:
            actions = net.forward(obs)
            obs, reward, _ = env.step(actions[:, 0])
            ep_total += reward
        totals += ep_total
    return totals / len(episode_seeds)


def _chunk_worker(args):
    arch, env_params, genomes, episode_seeds = args
    return _rollout_chunk(arch, env_params, genomes, episode_seeds)


def evaluate_population(arch, env_params, genomes, episode_seeds,
                        workers=1, pool=None):
    """Fitness for every candidate: mean total reward over the given seeds.

    Work is split into fixed-size chunks; the worker count only controls how
    many chunks run concurrently, never the math inside a chunk.
    """
    genomes = np.atleast_2d(np.asarray(genomes, dtype=np.float64))
    chunks = [genomes[i : i + CHUNK_SIZE] for i in range(0, genomes.shape[0], CHUNK_SIZE)]
    if workers <= 1 and pool is None:
        weights = None
        if arch.neuron_mode is not NeuronMode.PLAIN_TANH:
            weights = sample_weights(arch)
        results = [
            _rollout_chunk(arch, env_params, c, episode_seeds, weights=weights)
            for c in chunks
        ]
    else:
        payloads = [(arch, env_params, c, episode_seeds) for c in chunks]
        owned = pool is None
        if owned:
            pool = ProcessPoolExecutor(max_workers=workers)
        try:
            results = list(pool.map(_chunk_worker, payloads))
        finally:
            if owned:
                pool.shutdown()
    return np.concatenate(results)


class PopulationEvaluator:
    """Training-time fitness function: candidates in one generation share the
    same episode seed(s), and seeds advance with the generation counter.
    """

    def __init__(self, arch: Architecture, env_params: SwingUpParams,
                 episodes_per_candidate=1, train_seed_base=0, workers=1):
        self.arch = arch
        self.env_params = env_params
        self.episodes = int(episodes_per_candidate)
        if self.episodes < 1:
            raise ConfigError("episodes_per_candidate: must be at least 1")
        self.train_seed_base = int(train_seed_base)
        self.workers = int(workers)

    def seeds_for_generation(self, generation):
        base = self.train_seed_base + generation * self.episodes
        return [base + k for k in range(self.episodes)]

    def __call__(self, genomes, generation):
        return evaluate_population(
            self.arch, self.env_params, genomes,
            self.seeds_for_generation(generation), workers=self.workers,
        )


def evaluate(genome, arch: Architecture, env_params: SwingUpParams,
             n_episodes, base_seed, genome_id="genome") -> EvalReport:
    """Score one genome over episodes seeded base_seed .. base_seed+n-1."""
    if n_episodes < 1:
        raise ConfigError("n_episodes: must be at least 1")
    genome = np.asarray(genome, dtype=np.float64)
    seeds = [base_seed + k for k in range(n_episodes)]
    scores = []
    # Batch episodes of the same genome; chunked like population evaluation.
    for i in range(0, n_episodes, CHUNK_SIZE):
        batch_seeds = seeds[i : i + CHUNK_SIZE]
        n = len(batch_seeds)
        net = BatchedPolicy(arch, np.tile(genome, (n, 1)))
        env = BatchedSwingUp(env_params, n)
        obs = env.reset(batch_seeds)
        ep_total = np.zeros(n)
        while not env.all_done:
            actions = net.forward(obs)
            obs, reward, _ = env.step(actions[:, 0])
            ep_total += reward
        scores.extend(float(s) for s in ep_total)
    scores_arr = np.array(scores)
    return EvalReport(
        genome_id=genome_id,
        scores=scores,
        mean=float(scores_arr.mean()),
        std=float(scores_arr.std()),
        n_episodes=n_episodes,
        base_seed=base_seed,
    )


def _sweep(params_layer, mode, inputs):
    """Run an ordered input sweep through every unit of one layer.

    Returns (outputs, states) arrays of shape (len(inputs), n); states is
    None for simple units. State starts at zero before the first input.
    """
    n = params_layer.shape[0]
    steps = len(inputs)
    outputs = np.empty((steps, n))
    if mode is NeuronMode.SIMPLE:
        for t, x in enumerate(inputs):
            outputs[t] = layer_step_simple(params_layer, x)
        return outputs, None
    states = np.empty((steps, n))
    h = np.zeros(n)
    for t, x in enumerate(inputs):
        out, h = layer_step_recurrent(params_layer, np.full(n, x), h)
        outputs[t] = out
        states[t] = h
    return outputs, states


def probe_activations(genome, arch: Architecture, layer, n_points=1000,
                      lo=-3.0, hi=3.0):
    """Per-neuron response traces for one layer of a unit-mode network.

    Inputs go directly into the units (bypassing the random weights), in
    ascending order; neuron states are zeroed first.
    """
    if arch.neuron_mode is NeuronMode.PLAIN_TANH:
        raise ConfigError("neuron_mode: probes apply to unit-mode networks only")
    if not (0 <= layer < arch.n_layers):
        raise ConfigError(
            f"layer: index {layer} out of range for {arch.n_layers} layers"
        )
    params = decode(genome, arch)[layer]
    inputs = np.linspace(lo, hi, n_points)
    outputs, states = _sweep(params, arch.neuron_mode, inputs)
    traces = []
    for i in range(params.shape[0]):
        traces.append(
            ActivationTrace(
                layer=layer,
                neuron=i,
                inputs=inputs.copy(),
                outputs=outputs[:, i].copy(),
                states=None if states is None else states[:, i].copy(),
            )
        )
    return traces


def compare_orderings(genome, arch: Architecture, layer, n_points=1000,
                      lo=-3.0, hi=3.0) -> OrderingDivergence:
    """Ascending vs. descending sweep divergence per neuron.

    Stateless units diverge by exactly zero; state-coupled units generally do
    not, which is the history-dependence signature.
    """
    if not (0 <= layer < arch.n_layers):
        raise ConfigError(
            f"layer: index {layer} out of range for {arch.n_layers} layers"
        )
    params = decode(genome, arch)[layer]
    inputs = np.linspace(lo, hi, n_points)
    out_asc, _ = _sweep(params, arch.neuron_mode, inputs)
    out_desc, _ = _sweep(params, arch.neuron_mode, inputs[::-1])
    # Align by input value: reverse the descending sweep.
    diff = np.abs(out_asc - out_desc[::-1])
    return OrderingDivergence(layer=layer, divergence=diff.max(axis=0))


def write_eval_json(path, report: EvalReport):
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)


def write_trace_csv(path, traces):
    """One CSV per layer: input column, then output (and state) per neuron."""
    if not traces:
        raise ConfigError("traces: nothing to write")
    has_states = traces[0].states is not None
    header = ["input"]
    for tr in traces:
        header.append(f"out_{tr.neuron}")
        if has_states:
            header.append(f"state_{tr.neuron}")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(len(traces[0].inputs)):
            row = [repr(float(traces[0].inputs[t]))]
            for tr in traces:
                row.append(repr(float(tr.outputs[t])))
                if has_states:
                    row.append(repr(float(tr.states[t])))
            writer.writerow(row)
