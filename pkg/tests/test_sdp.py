import io

import numpy as np
import pytest

from cvnecert import sdp
from cvnecert.quantum import partial_trace_array, random_state
from cvnecert.relent import CvneApproxConfig, append_cvne_constraint


def test_affine_maps_match_numpy(rng):
    p = sdp.SdpProblem()
    x = p.add_variable("x", 4)
    rho = random_state(2, 2, rng).rho
    params = np.linalg.lstsq(x.basis.toarray(), rho.ravel(), rcond=None)[0]
    assert np.allclose(x.decode(params), rho)
    vals = {x: params}
    expected = {"x": rho}
    m = rng.normal(size=(2, 2))
    assert np.allclose(sdp.partial_trace(x, (2, 2), "B").value(vals), partial_trace_array(expected["x"], (2, 2), "B"))
    assert np.allclose(sdp.partial_trace(x, (2, 2), "A").value(vals), partial_trace_array(expected["x"], (2, 2), "A"))
    assert np.allclose(sdp.kron(m, x).value(vals), np.kron(m, expected["x"]))
    assert np.allclose(sdp.kron(x, m).value(vals), np.kron(expected["x"], m))
    assert np.allclose((x.expr.T).value(vals), expected["x"].T)
    assert np.allclose((x.expr.H).value(vals), expected["x"].conj().T)
    assert np.allclose((x.expr @ np.eye(4)[:, :2]).value(vals), expected["x"][:, :2])
    assert np.isclose(sdp.inner(m.repeat(2, 0).repeat(2, 1), x).value(vals)[0, 0],
                      np.trace(m.repeat(2, 0).repeat(2, 1) @ expected["x"]).real)
    blk = sdp.bmat([[x.expr, x.expr], [x.expr, np.eye(4)]])
    assert np.allclose(blk.value(vals), np.block([[expected["x"], expected["x"]], [expected["x"], np.eye(4)]]))


def test_hermitian_embedding_spectrum(rng):
    m = random_state(2, 2, rng).rho
    e = sdp.embed_hermitian(m)
    assert np.allclose(np.sort(np.linalg.eigvalsh(e)), np.sort(np.repeat(np.linalg.eigvalsh(m), 2)))


def test_duplicate_variable_name():
    p = sdp.SdpProblem()
    p.add_variable("x", 2)
    with pytest.raises(ValueError):
        p.add_variable("x", 2)


def _eig_problem(c, real):
    p = sdp.SdpProblem("maximize")
    x = sdp.add_density_variable(p, 2, 2, real=real)
    p.set_objective(sdp.inner(c, x.expr))
    return p, x


@pytest.mark.parametrize("real", [True, False])
def test_density_eigen_oracle(rng, real):
    c = rng.normal(size=(4, 4)) + (0 if real else 1j * rng.normal(size=(4, 4)))
    c = c + c.conj().T
    p, x = _eig_problem(c, real)
    sol = p.solve()
    assert sol.status == "optimal"
    assert sol.objective_value == pytest.approx(np.linalg.eigvalsh(c)[-1], abs=1e-6)
    assert np.trace(sol[x]).real == pytest.approx(1, abs=1e-7)


def test_set_objective_reuses_compiled_program(rng):
    c1, c2 = (lambda a: a + a.T)(rng.normal(size=(4, 4))), (lambda a: a + a.T)(rng.normal(size=(4, 4)))
    p, x = _eig_problem(c1, True)
    first = p.compile()
    p.solve()
    p.set_objective(sdp.inner(c2, x.expr))
    assert p.compile() is first
    assert p.solve().objective_value == pytest.approx(np.linalg.eigvalsh(c2)[-1], abs=1e-6)


def test_povm_variables_sum_to_identity(rng):
    p = sdp.SdpProblem("maximize")
    handles = sdp.add_povm_variables(p, 2, 2, 3, real=True)
    k = [(lambda a: a + a.T)(rng.normal(size=(3, 3))) for _ in range(2)]
    p.set_objective(sum((sdp.inner(kk, m0.expr) - sdp.inner(kk, m1.expr) for kk, (m0, m1) in zip(k, handles)),
                        sdp.Affine((1, 1), [0.0], {})))
    sol = p.solve()
    assert sol.ok
    for m0, m1 in handles:
        assert np.allclose(sol[m0] + sol[m1], np.eye(3), atol=1e-7)
    # optimum is the sum of absolute eigenvalues
    assert sol.objective_value == pytest.approx(sum(np.abs(np.linalg.eigvalsh(kk)).sum() for kk in k), abs=1e-6)


def test_infeasible_status():
    p = sdp.SdpProblem("maximize")
    x = sdp.add_density_variable(p, 2, 2, real=True)
    p.add_ge(sdp.inner(np.eye(4), x.expr), 2.0)
    p.set_objective(sdp.inner(np.eye(4), x.expr))
    assert p.solve().status == "infeasible"


def test_dump_format(rng):
    p, x = _eig_problem(np.diag([1.0, 2, 3, 4]), True)
    text = p.dump()
    lines = text.splitlines()
    assert lines[0] == "# cvnecert conic program v1"
    assert lines[1] == "sense maximize"
    assert lines[2].startswith("var rho 4 real 0 ")
    assert any(line.startswith("dims l=0 s=4 eq=") for line in lines)
    assert {line.split()[0] for line in lines[4:]} <= {"objective_const", "c", "G", "A", "h", "b"}
    buf = io.StringIO()
    p.dump(buf)
    assert buf.getvalue() == text
    # numeric fields are plain decimal literals; triplets rebuild the compiled matrices
    prog = p.compile()
    G = np.zeros(prog.G.shape)
    c = np.zeros(prog.c.shape)
    for line in lines[4:]:
        key, *rest = line.split()
        if key == "G":
            G[int(rest[0]), int(rest[1])] = float(rest[2])
        elif key == "c":
            c[int(rest[0])] = float(rest[1])
        elif key != "objective_const":
            float(rest[-1])
    assert np.array_equal(G, prog.G.toarray())
    assert np.array_equal(c, prog.c)


def test_ipm_and_cvxopt_backends_agree(rng):
    pytest.importorskip("cvxopt")
    c = (lambda a: a + a.conj().T)(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    p, x = _eig_problem(c, False)
    append_cvne_constraint(p, x, 2, 2, -0.5, CvneApproxConfig(m=2, k=2))
    a, b = p.solve(), p.solve(backend="cvxopt")
    assert a.ok and b.ok
    assert a.objective_value == pytest.approx(b.objective_value, abs=1e-5)


def test_unknown_backend():
    p, _ = _eig_problem(np.eye(4), True)
    with pytest.raises(ValueError):
        p.solve(backend="mosek")
