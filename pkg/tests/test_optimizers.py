import numpy as np
import pytest

from evounits.errors import ConfigError, DomainError
from evounits.optimizers import (
    CmaEs,
    GeneticAlgorithm,
    OpenEs,
    PipelineConfig,
    PipelineRunner,
    run_pipeline,
)


def sphere(x):
    return -np.sum(np.square(x), axis=-1)


class TestGeneticAlgorithm:
    def test_population_shape(self):
        ga = GeneticAlgorithm(np.zeros(7), popsize=32, seed=0)
        assert ga.ask().shape == (32, 7)

    def test_constant_landscape_keeps_best(self):
        ga = GeneticAlgorithm(np.zeros(5), popsize=16, seed=1)
        bests = []
        for _ in range(10):
            pop = ga.ask()
            ga.tell(np.full(16, 3.0))
            bests.append(ga.best_fitness)
        assert all(b == 3.0 for b in bests)

    def test_elites_survive_unchanged(self):
        ga = GeneticAlgorithm(np.zeros(6), popsize=16, elite_frac=0.25, seed=2)
        pop = ga.ask()
        f = sphere(pop)
        ga.tell(f)
        elites_expected = pop[np.argsort(-f, kind="stable")[:4]]
        assert np.array_equal(ga.ask()[:4], elites_expected)

    def test_best_monotone_on_deterministic_fitness(self):
        ga = GeneticAlgorithm(np.full(10, 3.0), popsize=32, seed=3)
        per_gen_best = []
        for _ in range(50):
            f = sphere(ga.ask())
            per_gen_best.append(f.max())
            ga.tell(f)
        assert np.all(np.diff(per_gen_best) >= 0)
        assert per_gen_best[-1] > per_gen_best[0]  # actually improved

    def test_same_seed_same_population_sequence(self):
        runs = []
        for _ in range(2):
            ga = GeneticAlgorithm(np.zeros(4), popsize=8, seed=9)
            seq = []
            for _ in range(5):
                pop = ga.ask()
                seq.append(pop.copy())
                ga.tell(sphere(pop))
            runs.append(seq)
        for a, b in zip(*runs):
            assert np.array_equal(a, b)

    def test_nan_fitness_rejected(self):
        ga = GeneticAlgorithm(np.zeros(3), popsize=8, seed=0)
        ga.ask()
        with pytest.raises(DomainError):
            ga.tell([1.0, np.nan] + [0.0] * 6)

    def test_improves_from_random_start(self):
        # Statistical: strict improvement within 50 generations on the sphere.
        for seed in range(5):
            rng = np.random.default_rng(seed)
            ga = GeneticAlgorithm(rng.normal(0, 3, 20), popsize=64, seed=seed)
            first = None
            for _ in range(50):
                f = sphere(ga.ask())
                if first is None:
                    first = f.max()
                ga.tell(f)
            assert ga.best_fitness > first


class TestCmaEs:
    def test_ask_shape_and_sigma_positive(self):
        es = CmaEs(np.zeros(6), sigma0=0.5, popsize=12, seed=0)
        assert es.ask().shape == (12, 6)
        assert es.sigma > 0

    def test_sphere_dim10(self):
        es = CmaEs(np.ones(10), sigma0=0.5, seed=5)
        evals, best = 0, np.inf
        while evals < 20000:
            x = es.ask()
            f = sphere(x)
            es.tell(f)
            evals += len(x)
            best = min(best, -f.max())
        assert best < 1e-10

    def test_dim1_quadratic_converges_to_three(self):
        es = CmaEs(np.zeros(1), sigma0=0.5, seed=1)
        for _ in range(400):
            x = es.ask()
            es.tell(-((x[:, 0] - 3.0) ** 2))
        assert es.mean[0] == pytest.approx(3.0, abs=1e-5)

    def test_rosenbrock_dim5(self):
        def rosenbrock(x):
            return -np.sum(
                100.0 * (x[:, 1:] - x[:, :-1] ** 2) ** 2 + (1 - x[:, :-1]) ** 2,
                axis=1,
            )

        es = CmaEs(np.zeros(5), sigma0=0.5, seed=3)
        evals, best = 0, -np.inf
        while evals < 100_000 and best <= -1e-6:
            x = es.ask()
            f = rosenbrock(x)
            es.tell(f)
            evals += len(x)
            best = max(best, f.max())
        assert best > -1e-6

    def test_invariances_and_state_health(self):
        # Shifting all fitnesses by a constant must not change the update.
        a = CmaEs(np.ones(8), sigma0=0.3, popsize=16, seed=7)
        b = CmaEs(np.ones(8), sigma0=0.3, popsize=16, seed=7)
        for _ in range(20):
            xa, xb = a.ask(), b.ask()
            assert np.array_equal(xa, xb)
            f = sphere(xa)
            a.tell(f)
            b.tell(f + 123.456)
            assert np.array_equal(a.mean, b.mean)
            assert a.sigma == b.sigma
            assert np.array_equal(a.cov, b.cov)
            assert np.array_equal(a.cov, a.cov.T)
            assert a.sigma > 0

    def test_tell_before_ask_rejected(self):
        es = CmaEs(np.zeros(3), seed=0)
        with pytest.raises(DomainError):
            es.tell(np.zeros(es.popsize))


class TestOpenEs:
    def test_population_even_required(self):
        with pytest.raises(ConfigError):
            OpenEs(np.zeros(3), popsize=7)

    def test_mirrored_pairs(self):
        es = OpenEs(np.full(4, 2.0), sigma=0.1, popsize=10, seed=0)
        x = es.ask()
        for i in range(0, 10, 2):
            np.testing.assert_allclose(x[i] + x[i + 1], 2 * es.center, atol=1e-12)

    def test_zero_update_on_equal_fitnesses(self):
        es = OpenEs(np.ones(6), popsize=16, seed=2)
        before = es.center.copy()
        es.ask()
        es.tell(np.full(16, 7.7))
        assert np.array_equal(es.center, before)

    def test_monotone_improvement_on_sphere(self):
        # Statistical over 5 seeds: center fitness improves over 200 generations.
        for seed in range(5):
            rng = np.random.default_rng(seed)
            es = OpenEs(rng.normal(0, 1, 10), sigma=0.1, lr=0.05, popsize=32,
                        seed=seed)
            start = sphere(es.center)
            for _ in range(200):
                x = es.ask()
                es.tell(sphere(x))
            assert sphere(es.center) > start

    def test_nan_rejected(self):
        es = OpenEs(np.zeros(3), popsize=4, seed=0)
        es.ask()
        with pytest.raises(DomainError):
            es.tell([np.nan, 0, 0, 0])


def _deterministic_eval(candidates, generation):
    return sphere(candidates)


class TestPipeline:
    def cfg(self, **kw):
        base = dict(
            total_generations=20, ga_generations=10, ga_pop=16, cmaes_pop=8,
            eval_every=5, eval_episodes=4, seed=0,
        )
        base.update(kw)
        return PipelineConfig(**base)

    def test_pure_ga_boundary(self):
        cfg = self.cfg(total_generations=10, ga_generations=10)
        result = run_pipeline(cfg, 5, np.full(5, 2.0), _deterministic_eval)
        assert all(rec.stage == "ga" for rec in result.history)
        assert len(result.history) == 10

    def test_history_bookkeeping(self):
        cfg = self.cfg()
        evals = []

        def periodic(genome):
            evals.append(genome.copy())
            return sphere(genome), 0.0

        result = run_pipeline(cfg, 5, np.zeros(5), _deterministic_eval, periodic)
        assert len(result.history) == 20
        gens_with_eval = [
            rec.generation for rec in result.history
            if not np.isnan(rec.periodic_eval_mean)
        ]
        assert gens_with_eval == [0, 5, 10, 15]
        stages = [rec.stage for rec in result.history]
        assert stages[:10] == ["ga"] * 10 and stages[10:] == ["cmaes"] * 10

    def test_champion_is_best_periodic_eval(self):
        cfg = self.cfg()
        result = run_pipeline(
            cfg, 5, np.full(5, 3.0), _deterministic_eval,
            lambda g: (sphere(g), 0.0),
        )
        assert result.champion_eval_mean == pytest.approx(sphere(result.champion))

    def test_full_determinism(self):
        histories = []
        for _ in range(2):
            result = run_pipeline(
                self.cfg(), 6, np.full(6, 1.5), _deterministic_eval,
                lambda g: (sphere(g), 0.0),
            )
            histories.append(
                [(r.generation, r.stage, r.best_fitness, r.mean_fitness,
                  r.std_fitness, r.periodic_eval_mean) for r in result.history]
            )
        assert histories[0] == histories[1]

    def test_stage_handoff_uses_ga_best(self):
        cfg = self.cfg(total_generations=11)
        runner = PipelineRunner(cfg, 5, np.zeros(5))
        for _ in range(10):
            runner.step(_deterministic_eval)
        assert runner.stage == "cmaes"
        # The CMA-ES mean starts at the GA champion.
        ga_best_fitness = max(r.best_fitness for r in runner.history)
        assert sphere(runner.optimizer.mean) == pytest.approx(ga_best_fitness)

    def test_openes_pipeline_stage(self):
        cfg = PipelineConfig(
            total_generations=5, optimizer_kind="openes", openes_pop=8,
            eval_every=2, seed=1,
        )
        result = run_pipeline(cfg, 4, np.zeros(4), _deterministic_eval)
        assert all(rec.stage == "openes" for rec in result.history)

    def test_pipeline_beats_pure_ga_on_sphere(self):
        # Head-to-head: 10 GA + 40 CMA-ES vs 50 GA, dim 50, >= 4/5 seeds.
        wins = 0
        for seed in range(5):
            rng = np.random.default_rng(seed + 100)
            x0 = rng.normal(0, 1, 50)
            pipe = run_pipeline(
                PipelineConfig(total_generations=50, ga_generations=10,
                               ga_pop=64, cmaes_pop=16, seed=seed),
                50, x0, _deterministic_eval,
            )
            ga = GeneticAlgorithm(x0, popsize=64, seed=seed)
            for _ in range(50):
                f = _deterministic_eval(ga.ask(), 0)
                ga.tell(f)
            pipe_best = max(r.best_fitness for r in pipe.history)
            if pipe_best > ga.best_fitness:
                wins += 1
        assert wins >= 4

    def test_invalid_schedule_rejected(self):
        with pytest.raises(ConfigError):
            PipelineConfig(total_generations=5, ga_generations=10)

    def test_runner_pickle_round_trip(self):
        import pickle

        cfg = self.cfg()
        runner = PipelineRunner(cfg, 5, np.zeros(5))
        for _ in range(7):
            runner.step(_deterministic_eval)
        clone = pickle.loads(pickle.dumps(runner))
        for _ in range(13):
            runner.step(_deterministic_eval)
            clone.step(_deterministic_eval)
        assert runner.finished and clone.finished
        a = [(r.best_fitness, r.mean_fitness) for r in runner.history]
        b = [(r.best_fitness, r.mean_fitness) for r in clone.history]
        assert a == b
