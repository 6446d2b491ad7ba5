import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import linprog

from cvnecert import ipm


def _sym_vec(m):
    return m.ravel(order="F")


def test_random_lp_matches_linprog(rng):
    n, m = 6, 14
    G = rng.normal(size=(m, n))
    x0 = rng.normal(size=n)
    h = G @ x0 + rng.random(m) + 0.1
    c = -G.T @ rng.random(m)  # dual feasible, so the LP is bounded
    res = ipm.solve(c, sp.csr_matrix(G), h, {"l": m, "q": [], "s": []})
    ref = linprog(c, A_ub=G, b_ub=h, bounds=[(None, None)] * n, method="highs")
    assert res["status"] == "optimal"
    assert res["primal objective"] == pytest.approx(ref.fun, abs=1e-6)


def test_lp_with_equalities(rng):
    n = 5
    c = rng.random(n)
    A = np.ones((1, n))
    res = ipm.solve(c, sp.csr_matrix(-np.eye(n)), np.zeros(n), {"l": n, "q": [], "s": []},
                    sp.csr_matrix(A), np.array([1.0]))
    assert res["status"] == "optimal"
    assert res["primal objective"] == pytest.approx(c.min(), abs=1e-7)


@pytest.mark.parametrize("d", [2, 4, 7])
def test_max_eigenvalue_sdp(rng, d):
    # max Tr(C X), Tr X = 1, X >= 0 with X parametrized by its upper triangle
    C = rng.normal(size=(d, d))
    C = C + C.T
    iu, ju = np.triu_indices(d)
    basis = np.zeros((d * d, len(iu)))
    for k, (i, j) in enumerate(zip(iu, ju)):
        basis[i * d + j, k] = basis[j * d + i, k] = 1.0
    c = -basis.T @ C.ravel()
    A = sp.csr_matrix((iu == ju).astype(float)[None, :])
    res = ipm.solve(c, sp.csr_matrix(-basis), np.zeros(d * d), {"l": 0, "q": [], "s": [d]}, A, np.ones(1))
    assert res["status"] == "optimal"
    assert -res["primal objective"] == pytest.approx(np.linalg.eigvalsh(C)[-1], abs=1e-6)
    X = (basis @ np.asarray(res["x"])).reshape(d, d)
    assert np.linalg.eigvalsh(X)[0] > -1e-7


def test_infeasible_detected():
    # x >= 1 and x <= 0
    G = sp.csr_matrix(np.array([[-1.0], [1.0]]))
    res = ipm.solve(np.array([1.0]), G, np.array([-1.0, 0.0]), {"l": 2, "q": [], "s": []})
    assert res["status"] == "primal infeasible"


def test_redundant_equalities_are_dropped():
    c = np.array([1.0, 2.0])
    A = sp.csr_matrix(np.array([[1.0, 1.0], [2.0, 2.0]]))
    res = ipm.solve(c, sp.csr_matrix(-np.eye(2)), np.zeros(2), {"l": 2, "q": [], "s": []}, A, np.array([1.0, 2.0]))
    assert res["status"] == "optimal"
    assert res["primal objective"] == pytest.approx(1.0, abs=1e-7)
    assert len(res["y"]) == 2


def test_inconsistent_equalities():
    A = sp.csr_matrix(np.array([[1.0, 1.0], [2.0, 2.0]]))
    res = ipm.solve(np.ones(2), sp.csr_matrix(-np.eye(2)), np.zeros(2), {"l": 2, "q": [], "s": []},
                    A, np.array([1.0, 3.0]))
    assert res["status"] == "primal infeasible"


def test_rejects_mismatched_dims():
    with pytest.raises(ValueError):
        ipm.solve(np.ones(1), sp.csr_matrix(np.ones((3, 1))), np.ones(3), {"l": 2, "q": [], "s": []})
    with pytest.raises(ValueError):
        ipm.solve(np.ones(1), sp.csr_matrix(np.ones((3, 1))), np.ones(3), {"l": 0, "q": [3], "s": []})
