"""Cart-pole swing-up task with self-contained physics.

The pole (a uniform rod) starts hanging down; the agent pushes the cart with
a force in [-force_mag, force_mag] and is rewarded for holding the pole
upright while keeping the cart centered. Angle convention: theta = 0 is
upright, pi is hanging down; the pole's center of mass sits at
(x + (l/2) sin(theta), (l/2) cos(theta)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class SwingUpParams:
    m_cart: float = 0.5
    m_pole: float = 0.5
    length: float = 0.6  # full rod length
    gravity: float = 9.82
    friction: float = 0.1  # cart-ground friction coefficient on x velocity
    force_mag: float = 10.0
    dt: float = 0.01
    x_threshold: float = 2.4
    max_steps: int = 1000
    reset_noise: float = 0.01  # uniform half-width around (0, 0, pi, 0)

    def __post_init__(self):
        for name in ("m_cart", "m_pole", "length", "gravity", "force_mag", "dt",
                     "x_threshold"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name}: must be positive")
        if self.friction < 0:
            raise ConfigError("friction: must be non-negative")
        if self.reset_noise < 0:
            raise ConfigError("reset_noise: must be non-negative")
        if self.max_steps < 1:
            raise ConfigError("max_steps: must be at least 1")


def accelerations(params: SwingUpParams, state, force):
    """(x_acc, theta_acc) from the rod-on-cart equations of motion.

    Works elementwise on arrays; ``state`` is (x, x_dot, theta, theta_dot).
    """
    _, x_dot, theta, theta_dot = state
    mc, mp = params.m_cart, params.m_pole
    length, g, b = params.length, params.gravity, params.friction
    total = mc + mp
    sin_t = np.sin(theta)
    cos_t = np.cos(theta)
    # Uniform rod: COM at length/2, inertia mp*length^2/12 about the COM.
    denom = 4.0 * total - 3.0 * mp * cos_t**2
    x_acc = (
        4.0 * force
        - 4.0 * b * x_dot
        + 2.0 * mp * length * theta_dot**2 * sin_t
        - 3.0 * mp * g * sin_t * cos_t
    ) / denom
    theta_acc = 3.0 * (g * sin_t - x_acc * cos_t) / (2.0 * length)
    return x_acc, theta_acc


def initial_state(params: SwingUpParams, seed):
    """Seeded start near (0, 0, pi, 0) with small uniform perturbations."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-params.reset_noise, params.reset_noise, size=4)
    return np.array([0.0, 0.0, np.pi, 0.0]) + noise


def step_reward(params: SwingUpParams, x, theta):
    """Per-step reward in [0, 1]: upright-ness times centered-ness."""
    r_theta = (np.cos(theta) + 1.0) / 2.0
    r_x = np.cos((x / params.x_threshold) * (np.pi / 2.0))
    return r_theta * np.maximum(r_x, 0.0)


class CartPoleSwingUp:
    """Single-instance environment with the generic reset/step contract."""

    obs_dim = 5
    action_dim = 1

    def __init__(self, params: SwingUpParams = None):
        self.params = params or SwingUpParams()
        self.max_steps = self.params.max_steps
        self.state = None
        self.t = 0
        self.done = True

    def reset(self, seed):
        self.state = initial_state(self.params, seed)
        self.t = 0
        self.done = False
        return self._observe()

    def _observe(self):
        x, x_dot, theta, theta_dot = self.state
        return np.array([x, x_dot, np.cos(theta), np.sin(theta), theta_dot])

    def step(self, action):
        """Advance one dt with semi-implicit Euler; returns (obs, reward, done)."""
        if self.done:
            raise DomainError("step() called on a terminated episode; reset first")
        action = float(np.asarray(action).reshape(()))
        if not math.isfinite(action):
            raise DomainError("action must be finite")
        force = np.clip(action, -1.0, 1.0) * self.params.force_mag
        p = self.params
        x, x_dot, theta, theta_dot = self.state
        x_acc, theta_acc = accelerations(p, self.state, force)
        x_dot = x_dot + x_acc * p.dt
        theta_dot = theta_dot + theta_acc * p.dt
        x = x + x_dot * p.dt
        theta = theta + theta_dot * p.dt
        self.state = np.array([x, x_dot, theta, theta_dot])
        self.t += 1
        reward = float(step_reward(p, x, theta))
        self.done = bool(abs(x) > p.x_threshold or self.t >= p.max_steps)
        return self._observe(), reward, self.done


class BatchedSwingUp:
    """N independent environment instances advanced in lockstep.

    Finished instances freeze their state and emit zero reward; callers can
    stop looping once ``all_done`` is true.
    """

    def __init__(self, params: SwingUpParams, n: int):
        self.params = params
        self.n = n
        self.state = np.zeros((4, n))
        self.t = 0
        self.done = np.ones(n, dtype=bool)

    def reset(self, seeds):
        if len(seeds) != self.n:
            raise ConfigError(f"need {self.n} seeds, got {len(seeds)}")
        cols = [initial_state(self.params, s) for s in seeds]
        self.state = np.stack(cols, axis=1)
        self.t = 0
        self.done = np.zeros(self.n, dtype=bool)
        return self._observe()

    def _observe(self):
        x, x_dot, theta, theta_dot = self.state
        return np.stack([x, x_dot, np.cos(theta), np.sin(theta), theta_dot], axis=1)

    @property
    def all_done(self):
        return bool(self.done.all())

    def step(self, actions):
        if not np.all(np.isfinite(actions)):
            raise DomainError("actions must be finite")
        p = self.params
        force = np.clip(actions, -1.0, 1.0) * p.force_mag
        x, x_dot, theta, theta_dot = self.state
        x_acc, theta_acc = accelerations(p, self.state, force)
        alive = ~self.done
        x_dot = np.where(alive, x_dot + x_acc * p.dt, x_dot)
        theta_dot = np.where(alive, theta_dot + theta_acc * p.dt, theta_dot)
        x = np.where(alive, x + x_dot * p.dt, x)
        theta = np.where(alive, theta + theta_dot * p.dt, theta)
        self.state = np.stack([x, x_dot, theta, theta_dot])
        self.t += 1
        reward = np.where(alive, step_reward(p, x, theta), 0.0)
        self.done |= np.abs(x) > p.x_threshold
        if self.t >= p.max_steps:
            self.done[:] = True
        return self._observe(), reward, self.done.copy()


@dataclass
class EpisodeResult:
    total_reward: float
    steps: int
    seed: int
    trajectory: list = field(default=None, repr=False)


def run_episode(policy, env, seed, record_trajectory=False) -> EpisodeResult:
    """Roll one episode: reset env and policy state, loop obs -> action -> step."""
    obs = env.reset(seed)
    policy.reset_states()
    total = 0.0
    steps = 0
    rows = [] if record_trajectory else None
    done = False
    while not done:
        action = policy.forward(obs)
        obs, reward, done = env.step(action)
        total += reward
        steps += 1
        if rows is not None:
            x, x_dot, theta, theta_dot = env.state
            rows.append((steps, x, x_dot, theta, theta_dot,
                         float(np.asarray(action).reshape(())), reward))
    return EpisodeResult(total_reward=total, steps=steps, seed=seed, trajectory=rows)
