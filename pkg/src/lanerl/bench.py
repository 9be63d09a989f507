"""Micro and end-to-end benchmarks comparing the kernel backends."""

import time

import numpy as np

from lanerl import _backend, nn
from lanerl.agents import DdacAgent, DdacConfig
from lanerl.simulator import LaneKeepingEnv, TerminationPolicy
from lanerl.track import load_builtin


def _time_us(fn, min_time=0.2, max_rounds=20_000):
    """Median microseconds per call over enough rounds to fill min_time."""
    fn()  # warmup / jit out the first-call overhead
    samples = []
    spent = 0.0
    rounds = 0
    while spent < min_time and rounds < max_rounds:
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        samples.append(dt)
        spent += dt
        rounds += 1
    return float(np.median(samples) * 1e6)


def _kernel_cases():
    layer_sizes = [3, 64, 64, 3]
    params = nn.init_mlp(layer_sizes, seed=0)
    act_codes = params.act_codes
    rng = np.random.default_rng(1)
    x1 = rng.normal(size=(1, 3))
    x32 = rng.normal(size=(32, 3))
    gout1 = rng.normal(size=(1, 3))
    gout32 = rng.normal(size=(32, 3))
    flat = [w for w in params.weights] + [b for b in params.biases]
    grads = [rng.normal(size=a.shape) for a in flat]
    vels = [np.zeros_like(a) for a in flat]

    def fwd(x):
        return lambda: _backend.kernels.forward_pass(
            params.weights, params.biases, act_codes, x
        )

    def bwd(x, gout):
        pres, posts = _backend.kernels.forward_pass(params.weights, params.biases, act_codes, x)

        def run():
            _backend.kernels.backward_pass(params.weights, act_codes, x, pres, posts, gout)

        return run

    def sgd():
        _backend.kernels.sgd_update(flat, grads, vels, 1e-9, 0.9, 10.0)

    return [
        ("forward batch=1", fwd(x1)),
        ("forward batch=32", fwd(x32)),
        ("backward batch=1", bwd(x1, gout1)),
        ("backward batch=32", bwd(x32, gout32)),
        ("sgd ~8.5k params", sgd),
    ]


def _ddac_slice(steps=1500):
    """End-to-end training microbenchmark: DDAC on the builtin track."""
    trk = load_builtin("figure1")
    agent = DdacAgent(obs_dim=3, cfg=DdacConfig(reward_scale=0.01), seed=0)
    env = LaneKeepingEnv(trk, term=TerminationPolicy.from_condition("none"))
    obs = env.reset()
    t0 = time.perf_counter()
    for k in range(steps):
        vec = agent.encoder.encode(obs)
        action = agent.select_action(vec, k)
        res = env.step(action)
        nvec = agent.encoder.encode(res.observation)
        agent.store(vec, np.array([action.steer, action.accel, action.brake]), res.reward, nvec, res.terminated)
        agent.train_step()
        obs = res.observation
        if res.terminated:
            obs = env.reset()
    return (time.perf_counter() - t0) / steps * 1e6


def run_bench(backends=None, train_steps=1500):
    """Returns [(row_name, {backend: microseconds})] over selected backends."""
    if backends is None:
        backends = ["python"]
        try:
            _backend._load("compiled")
            backends.append("compiled")
        except ImportError:
            pass
    rows = {}
    order = []
    for backend in backends:
        previous = _backend.use_backend(backend)
        try:
            for name, fn in _kernel_cases():
                rows.setdefault(name, {})[backend] = _time_us(fn)
                if name not in order:
                    order.append(name)
            name = f"ddac train step (end to end, {train_steps} steps)"
            rows.setdefault(name, {})[backend] = _ddac_slice(train_steps)
            if name not in order:
                order.append(name)
        finally:
            _backend.use_backend(previous)
    return [(name, rows[name]) for name in order], backends


def format_table(rows, backends):
    name_w = max(len(name) for name, _ in rows)
    header = "benchmark".ljust(name_w) + "".join(f"  {b:>12}" for b in backends)
    lines = [header, "-" * len(header)]
    for name, by_backend in rows:
        cells = "".join(
            f"  {by_backend.get(b, float('nan')):>10.1f}us" for b in backends
        )
        lines.append(name.ljust(name_w) + cells)
    return "\n".join(lines)
