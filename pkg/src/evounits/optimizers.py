"""Derivative-free optimizers behind one ask/tell interface, plus the staged
GA -> CMA-ES training pipeline.

Convention throughout: fitness is maximized.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ConfigError, DomainError

log = logging.getLogger(__name__)


def _check_fitnesses(fitnesses, expected):
    f = np.asarray(fitnesses, dtype=np.float64)
    if f.shape != (expected,):
        raise DomainError(f"expected {expected} fitnesses, got shape {f.shape}")
    if not np.all(np.isfinite(f)):
        raise DomainError("non-finite fitness received; evaluator bug")
    return f


class GeneticAlgorithm:
    """Truncation-selection GA: elites survive unchanged, offspring are
    elites plus elementwise Gaussian noise. No crossover.
    """

    def __init__(self, x0, popsize=512, elite_frac=0.125, mutation_std=1.0, seed=None):
        self.dim = len(x0)
        self.popsize = int(popsize)
        self.n_elite = max(1, int(round(self.popsize * elite_frac)))
        if self.n_elite >= self.popsize:
            raise ConfigError("elite_frac: must leave room for offspring")
        self.mutation_std = float(mutation_std)
        self.rng = np.random.default_rng(seed)
        x0 = np.asarray(x0, dtype=np.float64)
        # First population: the start point plus mutated copies of it.
        pop = np.tile(x0, (self.popsize, 1))
        pop[1:] += self.rng.normal(0.0, self.mutation_std, size=(self.popsize - 1, self.dim))
        self.population = pop
        self.best = x0.copy()
        self.best_fitness = -np.inf
        self.generation = 0

    def ask(self):
        return self.population.copy()

    def tell(self, fitnesses):
        f = _check_fitnesses(fitnesses, self.popsize)
        order = np.argsort(-f, kind="stable")
        elites = self.population[order[: self.n_elite]]
        if f[order[0]] > self.best_fitness:
            self.best_fitness = float(f[order[0]])
            self.best = self.population[order[0]].copy()
        n_children = self.popsize - self.n_elite
        parents = elites[self.rng.integers(0, self.n_elite, size=n_children)]
        children = parents + self.rng.normal(0.0, self.mutation_std,
                                             size=(n_children, self.dim))
        self.population = np.vstack([elites, children])
        self.generation += 1


class CmaEs:
    """Covariance matrix adaptation evolution strategy, canonical constants.

    Rank-based selection over the best half of the population, rank-one and
    rank-mu covariance updates, cumulative step-size adaptation. No fitness
    shaping beyond ranking (no weight decay penalty).
    """

    def __init__(self, x0, sigma0=0.5, popsize=None, seed=None):
        x0 = np.asarray(x0, dtype=np.float64)
        n = self.dim = len(x0)
        if sigma0 <= 0:
            raise ConfigError("sigma0: must be positive")
        self.popsize = int(popsize) if popsize else 4 + int(3 * math.log(n))
        lam = self.popsize
        mu = lam // 2
        w = np.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        self.weights = w / w.sum()
        self.mu = mu
        self.mueff = 1.0 / np.sum(self.weights**2)

        self.cc = (4 + self.mueff / n) / (n + 4 + 2 * self.mueff / n)
        self.cs = (self.mueff + 2) / (n + self.mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + self.mueff)
        self.cmu = min(
            1 - self.c1,
            2 * (self.mueff - 2 + 1 / self.mueff) / ((n + 2) ** 2 + self.mueff),
        )
        self.damps = 1 + 2 * max(0.0, math.sqrt((self.mueff - 1) / (n + 1)) - 1) + self.cs
        self.chi_n = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n**2))

        self.mean = x0.copy()
        self.sigma = float(sigma0)
        self.cov = np.eye(n)
        self.p_sigma = np.zeros(n)
        self.p_c = np.zeros(n)
        self.generation = 0
        self.rng = np.random.default_rng(seed)

        self._eig_basis = np.eye(n)
        self._eig_scale = np.ones(n)
        self._eig_stale_gens = 0
        # Eigendecomposition refresh cadence (lazy update, standard heuristic).
        self._eig_gap = max(1, int(1.0 / ((self.c1 + self.cmu) * n * 10.0)))

        self.best = x0.copy()
        self.best_fitness = -np.inf
        self._pending = None

    def _update_eigensystem(self):
        self.cov = (self.cov + self.cov.T) / 2.0
        evals, basis = np.linalg.eigh(self.cov)
        floor = max(evals.max(), 0.0) * 1e-14 + 1e-300
        if evals[0] < floor:
            log.warning(
                "covariance eigenvalue floor hit (min %.3e); repairing", evals[0]
            )
            evals = np.maximum(evals, floor)
            self.cov = (basis * evals) @ basis.T
        self._eig_basis = basis
        self._eig_scale = np.sqrt(evals)
        self._eig_stale_gens = 0

    def ask(self):
        if self._eig_stale_gens >= self._eig_gap or self.generation == 0:
            self._update_eigensystem()
        z = self.rng.standard_normal((self.popsize, self.dim))
        y = z @ (self._eig_basis * self._eig_scale).T
        self._pending = y
        return self.mean + self.sigma * y

    def tell(self, fitnesses):
        if self._pending is None:
            raise DomainError("tell() before ask()")
        f = _check_fitnesses(fitnesses, self.popsize)
        y = self._pending
        self._pending = None
        n = self.dim

        order = np.argsort(-f, kind="stable")
        if f[order[0]] > self.best_fitness:
            self.best_fitness = float(f[order[0]])
            self.best = self.mean + self.sigma * y[order[0]]

        y_sel = y[order[: self.mu]]
        y_w = self.weights @ y_sel
        self.mean = self.mean + self.sigma * y_w

        inv_sqrt = (self._eig_basis / self._eig_scale) @ self._eig_basis.T
        self.p_sigma = (1 - self.cs) * self.p_sigma + math.sqrt(
            self.cs * (2 - self.cs) * self.mueff
        ) * (inv_sqrt @ y_w)
        norm_ps = np.linalg.norm(self.p_sigma)
        h_sigma = norm_ps / math.sqrt(
            1 - (1 - self.cs) ** (2 * (self.generation + 1))
        ) / self.chi_n < 1.4 + 2 / (n + 1)
        self.p_c = (1 - self.cc) * self.p_c + h_sigma * math.sqrt(
            self.cc * (2 - self.cc) * self.mueff
        ) * y_w

        rank_mu = (y_sel.T * self.weights) @ y_sel
        delta_h = (1 - h_sigma) * self.cc * (2 - self.cc)
        self.cov = (
            (1 - self.c1 - self.cmu) * self.cov
            + self.c1 * (np.outer(self.p_c, self.p_c) + delta_h * self.cov)
            + self.cmu * rank_mu
        )
        self.cov = (self.cov + self.cov.T) / 2.0
        self.sigma *= math.exp((self.cs / self.damps) * (norm_ps / self.chi_n - 1))
        self.generation += 1
        self._eig_stale_gens += 1


class OpenEs:
    """Evolution strategy with mirrored Gaussian perturbations and
    centered-rank fitness shaping; plain gradient ascent on the center.
    """

    def __init__(self, x0, sigma=0.1, lr=0.01, popsize=128, seed=None):
        if popsize % 2 != 0:
            raise ConfigError("popsize: mirrored sampling needs an even population")
        self.dim = len(x0)
        self.popsize = int(popsize)
        self.sigma = float(sigma)
        self.lr = float(lr)
        self.center = np.asarray(x0, dtype=np.float64).copy()
        self.rng = np.random.default_rng(seed)
        self.generation = 0
        self.best = self.center.copy()
        self.best_fitness = -np.inf
        self._pending = None

    def ask(self):
        half = self.rng.standard_normal((self.popsize // 2, self.dim))
        eps = np.empty((self.popsize, self.dim))
        eps[0::2] = half
        eps[1::2] = -half
        self._pending = eps
        return self.center + self.sigma * eps

    def tell(self, fitnesses):
        if self._pending is None:
            raise DomainError("tell() before ask()")
        f = _check_fitnesses(fitnesses, self.popsize)
        eps = self._pending
        self._pending = None
        i_best = int(np.argmax(f))
        if f[i_best] > self.best_fitness:
            self.best_fitness = float(f[i_best])
            self.best = self.center + self.sigma * eps[i_best]
        # Average ranks on ties so a flat landscape yields a zero update.
        shaped = (rankdata(f, method="average") - 1) / (self.popsize - 1) - 0.5
        grad = shaped @ eps
        self.center = self.center + self.lr / (self.popsize * self.sigma) * grad
        self.generation += 1


@dataclass(frozen=True)
class PipelineConfig:
    """Staged training schedule and optimizer hyperparameters."""

    total_generations: int
    ga_generations: int = 100
    ga_pop: int = 512
    ga_elite_frac: float = 0.125
    ga_mutation_std: float = 1.0
    cmaes_pop: int = 128
    cmaes_sigma0: float = 0.5
    optimizer_kind: str = "ga-cmaes"  # or "openes"
    openes_pop: int = 128
    openes_sigma: float = 0.1
    openes_lr: float = 0.01
    eval_every: int = 50
    eval_episodes: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.optimizer_kind not in ("ga-cmaes", "openes"):
            raise ConfigError(f"optimizer_kind: unknown kind {self.optimizer_kind!r}")
        if self.total_generations < 1:
            raise ConfigError("total_generations: must be at least 1")
        if self.optimizer_kind == "ga-cmaes" and not (
            0 < self.ga_generations <= self.total_generations
        ):
            raise ConfigError(
                "ga_generations: must be in 1..total_generations "
                f"(got {self.ga_generations} vs {self.total_generations})"
            )
        if self.eval_every < 1:
            raise ConfigError("eval_every: must be at least 1")


@dataclass
class GenerationRecord:
    generation: int
    stage: str
    best_fitness: float
    mean_fitness: float
    std_fitness: float
    periodic_eval_mean: float = float("nan")
    periodic_eval_std: float = float("nan")
    wallclock: float = 0.0


@dataclass
class PipelineResult:
    champion: np.ndarray
    champion_eval_mean: float
    champion_eval_std: float
    history: list


class PipelineRunner:
    """Drives the staged search and keeps all state needed to resume.

    The runner is picklable between generations; evaluation callables are
    supplied to :meth:`run` so checkpoints never capture closures.
    """

    def __init__(self, cfg: PipelineConfig, dim: int, x0):
        self.cfg = cfg
        self.dim = dim
        x0 = np.asarray(x0, dtype=np.float64)
        if x0.shape != (dim,):
            raise ConfigError(f"x0: expected shape ({dim},), got {x0.shape}")
        seq = np.random.SeedSequence(cfg.seed)
        self._opt_seeds = seq.spawn(2)
        if cfg.optimizer_kind == "openes":
            self.stage = "openes"
            self.optimizer = OpenEs(
                x0, sigma=cfg.openes_sigma, lr=cfg.openes_lr,
                popsize=cfg.openes_pop, seed=self._opt_seeds[0],
            )
        else:
            self.stage = "ga"
            self.optimizer = GeneticAlgorithm(
                x0, popsize=cfg.ga_pop, elite_frac=cfg.ga_elite_frac,
                mutation_std=cfg.ga_mutation_std, seed=self._opt_seeds[0],
            )
        self.generation = 0
        self.history: list[GenerationRecord] = []
        self.champion = x0.copy()
        self.champion_eval_mean = -np.inf
        self.champion_eval_std = float("nan")

    @property
    def finished(self) -> bool:
        return self.generation >= self.cfg.total_generations

    def _maybe_switch_stage(self):
        if (
            self.stage == "ga"
            and self.generation >= self.cfg.ga_generations
            and self.generation < self.cfg.total_generations
        ):
            self.stage = "cmaes"
            self.optimizer = CmaEs(
                self.optimizer.best,
                sigma0=self.cfg.cmaes_sigma0,
                popsize=self.cfg.cmaes_pop,
                seed=self._opt_seeds[1],
            )

    def step(self, eval_population, periodic_eval=None):
        """Run one generation; returns its GenerationRecord."""
        if self.finished:
            raise DomainError("pipeline already finished")
        t0 = time.perf_counter()
        candidates = self.optimizer.ask()
        fitnesses = np.asarray(eval_population(candidates, self.generation),
                               dtype=np.float64)
        i_best = int(np.argmax(fitnesses))
        gen_best = candidates[i_best]
        self.optimizer.tell(fitnesses)
        rec = GenerationRecord(
            generation=self.generation,
            stage=self.stage,
            best_fitness=float(fitnesses[i_best]),
            mean_fitness=float(fitnesses.mean()),
            std_fitness=float(fitnesses.std()),
        )
        if periodic_eval is not None and self.generation % self.cfg.eval_every == 0:
            mean, std = periodic_eval(gen_best)
            rec.periodic_eval_mean = float(mean)
            rec.periodic_eval_std = float(std)
            if mean > self.champion_eval_mean:
                self.champion_eval_mean = float(mean)
                self.champion_eval_std = float(std)
                self.champion = np.array(gen_best)
        rec.wallclock = time.perf_counter() - t0
        self.history.append(rec)
        self.generation += 1
        self._maybe_switch_stage()
        return rec

    def run(self, eval_population, periodic_eval=None, on_generation=None) -> PipelineResult:
        while not self.finished:
            rec = self.step(eval_population, periodic_eval)
            if on_generation is not None:
                on_generation(self, rec)
        if self.champion_eval_mean == -np.inf:
            # No periodic evaluation ran; fall back to the best training fitness.
            self.champion = np.array(self.optimizer.best)
            self.champion_eval_mean = float(self.optimizer.best_fitness)
        return PipelineResult(
            champion=self.champion,
            champion_eval_mean=self.champion_eval_mean,
            champion_eval_std=self.champion_eval_std,
            history=self.history,
        )

    def __getstate__(self):
        state = self.__dict__.copy()
        return state


def run_pipeline(cfg: PipelineConfig, dim, x0, eval_population, periodic_eval=None,
                 on_generation=None) -> PipelineResult:
    """One-shot convenience wrapper around :class:`PipelineRunner`."""
    runner = PipelineRunner(cfg, dim, x0)
    return runner.run(eval_population, periodic_eval, on_generation)
