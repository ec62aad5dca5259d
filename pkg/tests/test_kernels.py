import subprocess
import sys

import numpy as np
import pytest

import tatkit as tk
from tatkit import kernels


needs_numba = pytest.mark.skipif(not kernels.NUMBA_ENABLED, reason="numba backend off")


def test_backend_reports():
    assert kernels.backend() in ("numba", "numpy")


@needs_numba
def test_feature_rows_paths_agree():
    rng = np.random.default_rng(0)
    m = rng.uniform(-2, 2, (7, 3))
    exps = rng.integers(0, 4, (11, 3))
    w = rng.uniform(0.1, 2.0, 11)
    a = kernels.feature_rows(m, exps, w)
    b = kernels.feature_rows_np(m, exps, w)
    assert np.abs(a - b).max() <= 1e-13 * np.abs(b).max()


@needs_numba
def test_bilinear_rows_paths_agree():
    rng = np.random.default_rng(1)
    u = rng.uniform(-1, 1, (9, 5))
    g = rng.uniform(-1, 1, (5, 4))
    v = rng.uniform(-1, 1, (9, 4))
    a = kernels.bilinear_rows(u, g, v)
    b = kernels.bilinear_rows_np(u, g, v)
    assert np.abs(a - b).max() <= 1e-13


@needs_numba
def test_hard_probe_paths_agree():
    hi = tk.make_hard_instance(4, 2, 3.0, 5)
    a = kernels.hard_probe_rows(hi.H, hi.V, 0.4)
    b = kernels.hard_probe_rows_np(hi.H, hi.V, 0.4)
    assert np.abs(a - b).max() <= 1e-9 * np.abs(b).max()


@needs_numba
def test_streaming_matches_materialized_pipeline():
    inst = tk.random_instance(6, 2, 0.8, 2)
    inter = tk.compute_intermediates(inst)
    out = tk.forward(inst)
    assert np.abs(out - inter.F @ inter.H).max() <= 1e-13


def test_set_threads_clamps():
    kernels.set_threads(0)
    assert kernels.get_threads() == 1
    kernels.set_threads(1)
    assert kernels.get_threads() == 1


def test_env_flag_selects_numpy_backend():
    code = (
        "import tatkit as tk\n"
        "from tatkit import kernels\n"
        "import numpy as np\n"
        "assert kernels.backend() == 'numpy'\n"
        "inst = tk.random_instance(4, 2, 0.8, 7)\n"
        "print(repr(float(np.abs(tk.grad_exact(inst)).max())))\n"
    )
    proc = subprocess.run(
        [sys.executable, "-c", code],
        capture_output=True, text=True,
        env={"TAT_NUMBA": "0", "PATH": "/usr/bin:/bin"},
    )
    assert proc.returncode == 0, proc.stderr
    inst = tk.random_instance(4, 2, 0.8, 7)
    here = float(np.abs(tk.grad_exact(inst)).max())
    assert abs(float(proc.stdout.strip()) - here) <= 1e-12 * max(1.0, here)
