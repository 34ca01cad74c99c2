"""The compiled kernels and their pure-Python fallbacks must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest
import scipy.sparse as sp

from monge_ampere import _backend, _pykernels
from monge_ampere.fdops import assemble_laplacian
from monge_ampere.grid import make_grid

ck = pytest.importorskip("monge_ampere._ckernels")


def _csr(A):
    A = sp.csr_matrix(A)
    A.sort_indices()
    return (np.ascontiguousarray(A.indptr, dtype=np.intc), np.ascontiguousarray(A.indices, dtype=np.intc),
            np.ascontiguousarray(A.data, dtype=float))


def test_backend_prefers_extension():
    assert _backend.BACKEND == "cython"


@pytest.mark.parametrize("n", [1, 2, 17])
def test_hessian_stencils_agree(n):
    full = np.random.default_rng(n).standard_normal((n + 2, n + 2))
    dx = 1.0 / (n + 1)
    for a, b in zip(ck.hessian_stencils(full, dx), _pykernels.hessian_stencils(full, dx)):
        np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13 * np.abs(b).max())


def _random_pattern_matrix(seed, size=40):
    rng = np.random.default_rng(seed)
    A = sp.random(size, size, density=0.1, random_state=seed, format="csr")
    return (A + A.T + sp.diags(rng.uniform(5, 10, size))).tocsr()


@pytest.mark.parametrize("which", ["laplacian", "random"])
def test_ilu0_agree(which):
    A = assemble_laplacian(make_grid(9)).matrix if which == "laplacian" else _random_pattern_matrix(3)
    indptr, indices, data = _csr(A)
    lu_c, d_c = ck.ilu0_factor(indptr, indices, data)
    lu_p, d_p = _pykernels.ilu0_factor(indptr, indices, data)
    np.testing.assert_allclose(lu_c, lu_p, rtol=1e-13)
    assert np.array_equal(np.asarray(d_c), np.asarray(d_p))
    b = np.random.default_rng(0).standard_normal(A.shape[0])
    np.testing.assert_allclose(ck.ilu0_solve(indptr, indices, lu_c, d_c, b),
                               _pykernels.ilu0_solve(indptr, indices, lu_p, d_p, b), rtol=1e-12)


def test_zero_pivot_both():
    indptr, indices, data = _csr(np.array([[0.0, 1.0], [1.0, 1.0]]))
    for k in (ck, _pykernels):
        with pytest.raises(ZeroDivisionError):
            k.ilu0_factor(indptr, indices, data)


_SCRIPT = """
import json
from monge_ampere import BACKEND, gaussian_case, make_grid, InitialGuess, LschemeConfig, lscheme_solve
r = lscheme_solve(gaussian_case(), make_grid(20), InitialGuess("convex_bump", 30), LschemeConfig(solver="pcg-ilu"))
print(json.dumps({"backend": BACKEND, "iterations": r.iterations, "u": r.u.tolist()}))
"""


def _run(pure):
    env = dict(os.environ, MA_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", _SCRIPT], env=env, capture_output=True, text=True, check=True)
    import json
    return json.loads(out.stdout)


@pytest.mark.slow
def test_full_solve_identical_across_backends():
    c, p = _run(False), _run(True)
    assert (c["backend"], p["backend"]) == ("cython", "python")
    assert abs(c["iterations"] - p["iterations"]) <= 1
    assert np.max(np.abs(np.array(c["u"]) - np.array(p["u"]))) <= 1e-10
