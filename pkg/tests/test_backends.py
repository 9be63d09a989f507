import os
import subprocess
import sys

import numpy as np
import pytest

import lanerl
from lanerl import _backend, nn


@pytest.fixture
def restore_backend():
    name = lanerl.backend_name()
    yield
    lanerl.use_backend(name)


def _compiled_available():
    try:
        import lanerl._speedups  # noqa: F401
    except ImportError:
        return False
    return True


requires_compiled = pytest.mark.skipif(
    not _compiled_available(), reason="compiled extension not built"
)


@requires_compiled
class TestEquivalence:
    """Both backends must agree to rounding on identical inputs."""

    CASES = [
        ([3, 1], ["linear"], 1),
        ([5, 16, 4], ["tanh", "linear"], 1),
        ([5, 16, 4], ["tanh", "linear"], 32),
        ([7, 8, 8, 2], ["relu", "sigmoid", "linear"], 7),
        ([7, 8, 8, 2], ["relu", "sigmoid", "linear"], 64),
        ([4, 600, 2], ["tanh", "linear"], 3),  # exceeds the kernel block width
    ]

    @pytest.mark.parametrize("arch,acts,batch", CASES)
    def test_forward_backward_match(self, restore_backend, arch, acts, batch):
        p = nn.init_mlp(arch, activations=acts, seed=17)
        rng = np.random.default_rng(99)
        x = rng.normal(size=(batch, arch[0]))
        gout = rng.normal(size=(batch, arch[-1]))

        lanerl.use_backend("compiled")
        out_c, cache_c = nn.forward(p, x)
        g_c = nn.backward(p, cache_c, gout)
        lanerl.use_backend("python")
        out_p, cache_p = nn.forward(p, x)
        g_p = nn.backward(p, cache_p, gout)

        np.testing.assert_allclose(out_c, out_p, rtol=1e-12, atol=1e-14)
        for a, b in zip(g_c.weights, g_p.weights):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
        for a, b in zip(g_c.biases, g_p.biases):
            np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)
        np.testing.assert_allclose(g_c.input_grad, g_p.input_grad, rtol=1e-12, atol=1e-14)

    def test_sgd_match(self, restore_backend):
        def run(backend):
            lanerl.use_backend(backend)
            p = nn.init_mlp([6, 12, 3], seed=2)
            state = nn.SgdState.for_params(p)
            cfg = nn.SgdConfig(learning_rate=0.05, momentum=0.9, clip_norm=1.0)
            local = np.random.default_rng(5)
            for _ in range(10):
                x = local.normal(size=(4, 6))
                out, cache = nn.forward(p, x)
                grads = nn.backward(p, cache, out)
                nn.sgd_step(p, grads, cfg, state)
            return p

        p_c = run("compiled")
        p_p = run("python")
        for a, b in zip(p_c.weights, p_p.weights):
            np.testing.assert_allclose(a, b, rtol=1e-11, atol=1e-13)

    def test_training_is_bitwise_deterministic_per_backend(self, restore_backend):
        def run():
            p = nn.init_mlp([6, 12, 3], seed=2)
            state = nn.SgdState.for_params(p)
            cfg = nn.SgdConfig(learning_rate=0.05, momentum=0.9)
            local = np.random.default_rng(5)
            for _ in range(20):
                x = local.normal(size=(4, 6))
                out, cache = nn.forward(p, x)
                grads = nn.backward(p, cache, out)
                nn.sgd_step(p, grads, cfg, state)
            return p

        for backend in ("compiled", "python"):
            lanerl.use_backend(backend)
            a, b = run(), run()
            for wa, wb in zip(a.weights, b.weights):
                assert np.array_equal(wa, wb)


class TestSelection:
    def test_use_backend_switches_and_returns_previous(self, restore_backend):
        prev = lanerl.use_backend("python")
        assert prev in ("compiled", "python")
        assert lanerl.backend_name() == "python"
        assert _backend.kernels.__name__.endswith("_purepy")

    def test_invalid_name_rejected(self):
        with pytest.raises(ValueError):
            lanerl.use_backend("cuda")

    def test_env_var_python(self):
        code = (
            "import lanerl; import sys;"
            "sys.exit(0 if lanerl.backend_name() == 'python' else 1)"
        )
        env = dict(os.environ, LANERL_BACKEND="python")
        assert subprocess.run([sys.executable, "-c", code], env=env).returncode == 0

    def test_env_var_invalid_raises(self):
        code = "import lanerl"
        env = dict(os.environ, LANERL_BACKEND="fortran")
        proc = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True
        )
        assert proc.returncode != 0
        assert "LANERL_BACKEND" in proc.stderr

    @requires_compiled
    def test_env_var_compiled(self):
        code = (
            "import lanerl; import sys;"
            "sys.exit(0 if lanerl.backend_name() == 'compiled' else 1)"
        )
        env = dict(os.environ, LANERL_BACKEND="compiled")
        assert subprocess.run([sys.executable, "-c", code], env=env).returncode == 0
