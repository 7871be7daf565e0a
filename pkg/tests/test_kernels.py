import os
import subprocess
import sys

import numpy as np
import pytest

from ladder_inversion import _kernels
from ladder_inversion.dynamics import coupling_matrix, lindblad_channels, liouvillian
from ladder_inversion.model import ground_state


@pytest.fixture
def operators(rb):
    drive = liouvillian(coupling_matrix(rb, 2))
    static = liouvillian(np.zeros((4, 4), dtype=complex), lindblad_channels(rb))
    v0 = ground_state(4).reshape(-1).copy()
    v0[0], v0[5] = 0.5, 0.5
    return v0, drive, static


@pytest.mark.skipif(_kernels.rk4_segment_numba is None, reason="numba unavailable")
@pytest.mark.parametrize("shape", [0, 1, 2])
def test_backends_agree(operators, shape):
    v0, drive, static = operators
    args = (v0, drive, static, shape, 0.3, 5.0, 250, 7)
    a = _kernels.rk4_segment_numba(*args)
    b = _kernels.rk4_segment_numpy(*args)
    assert a.shape == b.shape == (250 // 7 + 2, 16)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-14)


def test_sample_rows(operators):
    v0, drive, static = operators
    out = _kernels.rk4_segment_numpy(v0, drive, static, 0, 0.3, 1.0, 10, 5)
    assert out.shape == (3, 16)
    np.testing.assert_array_equal(out[0], v0)


def test_kernel_does_not_mutate_input(operators):
    v0, drive, static = operators
    before = v0.copy()
    _kernels.rk4_segment(v0, drive, static, 0, 0.3, 1.0, 10, 1)
    np.testing.assert_array_equal(v0, before)


def test_env_flag_selects_numpy():
    env = dict(os.environ, LADDER_INVERSION_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "import ladder_inversion as li; print(li.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
