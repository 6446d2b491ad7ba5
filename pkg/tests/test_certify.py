import numpy as np
import pytest

from cvnecert import bell, certify
from cvnecert.bell import bell_value, builtin_spec, observable
from cvnecert.certify import (
    SeesawConfig, entropy_bound_at, invert_curve, method1_witness_iteration, method2_fixed_measurements,
    method3_seesaw, optimal_party_povms, random_binary_povms, tsirelson_check, visibility_curve,
)
from cvnecert.quantum import BipartiteState, cvne_exact, random_state
from cvnecert.relent import CvneApproxConfig, cvne_approx

CHSH = builtin_spec("CHSH")


@pytest.mark.parametrize("name", ["CHSH", "BC3", "I1"])
@pytest.mark.parametrize("party", ["A", "B"])
def test_party_operators_reproduce_bell_value(rng, name, party):
    spec = builtin_spec(name)
    alice, bob = spec.optimal_povms()
    s = random_state(2, 2, rng)
    other = bob if party == "A" else alice
    own = alice if party == "A" else bob
    ks = certify._party_operators(spec, s.rho, (2, 2), other, party)
    total = sum(np.trace(observable(p) @ k).real for p, k in zip(own, ks))
    assert total == pytest.approx(bell_value(s, spec, alice, bob), abs=1e-12)


@pytest.mark.parametrize("real,d", [(False, 2), (True, 3)])
def test_measurement_sdp_matches_closed_form(rng, real, d):
    ks = []
    for _ in range(3):
        g = rng.normal(size=(d, d)) + (0 if real else 1j * rng.normal(size=(d, d)))
        ks.append(g + g.conj().T)
    sol, povms = certify._MeasurementProblem(3, d, real).solve(ks)
    closed = optimal_party_povms(ks)
    value = sum(np.trace(observable(p) @ k).real for p, k in zip(closed, ks))
    assert sol.objective_value == pytest.approx(value, abs=1e-6)
    assert sum(np.trace(observable(p) @ k).real for p, k in zip(povms, ks)) == pytest.approx(value, abs=1e-6)


def test_method2_monotone_and_consistent():
    omegas = []
    for H in (0.0, -0.5, -0.9):
        r = method2_fixed_measurements(CHSH, H)
        assert r.status == "converged"
        assert bell_value(r.extremal_state, CHSH, *r.extremal_measurements) == pytest.approx(r.omega, abs=1e-6)
        assert cvne_approx(r.extremal_state, CvneApproxConfig()) >= H - 1e-6
        omegas.append(r.omega)
    assert omegas[0] < omegas[1] < omegas[2] <= CHSH.tsirelson_bound + 1e-7


def test_method2_apx_bracket():
    lo = method2_fixed_measurements(CHSH, -0.5, CvneApproxConfig(apx=-1)).omega
    hi = method2_fixed_measurements(CHSH, -0.5, CvneApproxConfig(apx=1)).omega
    assert lo <= hi + 1e-7
    assert hi - lo < 1e-3


def test_method2_rejects_bad_h():
    with pytest.raises(ValueError):
        method2_fixed_measurements(CHSH, -1.2)


def test_method1_history_and_agreement():
    r = method1_witness_iteration(CHSH, -0.5)
    assert r.status == "converged"
    assert all(b <= a + 1e-7 for a, b in zip(r.history, r.history[1:]))
    assert cvne_exact(r.extremal_state) >= -0.5 - 1e-6
    assert r.omega == pytest.approx(method2_fixed_measurements(CHSH, -0.5).omega, abs=5e-3)


def test_method1_iteration_cap():
    r = method1_witness_iteration(CHSH, -0.5, max_iters=3)
    assert r.status == "iteration_cap"
    assert r.iterations == 3 and len(r.history) == 3


def test_random_povms_deterministic():
    a = random_binary_povms(3, 2, certify._restart_rng(7, 2))
    b = random_binary_povms(3, 2, certify._restart_rng(7, 2))
    c = random_binary_povms(3, 2, certify._restart_rng(7, 3))
    assert all(np.array_equal(x.elements[0], y.elements[0]) for x, y in zip(a, b))
    assert not np.allclose(a[1].elements[0], c[1].elements[0])
    assert np.allclose(a[0].elements[0], np.diag([1, 0]))
    real = random_binary_povms(2, 3, certify._restart_rng(0, 0), real=True)
    assert np.all(np.isreal(real[1].elements[0]))


def test_seesaw_reproducible_and_close_to_fixed():
    ss = SeesawConfig(restarts=2, seed=3)
    a = method3_seesaw(CHSH, -0.5, ss=ss, apx_values=(1,))
    b = method3_seesaw(CHSH, -0.5, ss=ss, apx_values=(1,))
    assert a.omega == b.omega
    assert a.omega == pytest.approx(method2_fixed_measurements(CHSH, -0.5).omega, abs=5e-3)
    state = a.extremal_state
    assert cvne_approx(state, CvneApproxConfig(apx=1)) >= -0.5 - 1e-6


def test_seesaw_config_validation():
    with pytest.raises(ValueError):
        SeesawConfig(restarts=0)
    with pytest.raises(ValueError):
        SeesawConfig(d_A=2, d_B=3)
    assert SeesawConfig(d_A=3, d_B=3).use_real and not SeesawConfig().use_real


@pytest.mark.parametrize("name", bell.BUILTIN_NAMES)
def test_tsirelson_check(name):
    spec = builtin_spec(name)
    assert tsirelson_check(spec) == pytest.approx(spec.tsirelson_bound, abs=1e-6)


def test_entropy_bound_endpoints():
    assert entropy_bound_at(CHSH, 2 * np.sqrt(2)) == pytest.approx(-1.0, abs=2e-3)
    assert entropy_bound_at(CHSH, 2.0) > 0


def test_invert_curve():
    hs = [0.0, -0.5, -1.0]
    ws = [2.2, 2.5, 2.8]
    assert invert_curve(hs, ws, 2.1, 2) == 1.0
    assert invert_curve(hs, ws, 2.9, 2) == -1.0
    assert invert_curve(hs, ws, 2.35, 2) == pytest.approx(-0.25)
    assert invert_curve(hs, ws, 2.5, 2) == pytest.approx(-0.5)
    # solver noise that breaks monotonicity is flattened, not inverted
    assert invert_curve(hs, [2.2, 2.19, 2.8], 2.5, 2) <= 0
    assert np.isnan(invert_curve(hs, [np.nan] * 3, 2.5, 2))


def test_visibility_curve_qubits():
    pairs, curve = visibility_curve(CHSH, 2, [0.7, 0.8, 0.9, 1.0], h_grid=np.linspace(0, -1, 5))
    bounds = [b for _, b in pairs]
    assert bounds[0] == 1.0
    assert all(b2 <= b1 + 1e-12 for b1, b2 in zip(bounds, bounds[1:]))
    assert bounds[-1] == pytest.approx(-1.0, abs=1e-3)
    assert len(curve) == 5
    with pytest.raises(ValueError):
        visibility_curve(CHSH, 2, [1.2])


@pytest.mark.parametrize("spec", [builtin_spec(n) for n in bell.BUILTIN_NAMES]
                         + [bell.idelta_spec(d) for d in (0.05, 0.3, np.pi / 6)])
def test_best_local_assignment_reaches_local_bound(spec):
    a, b = certify.best_local_assignment(spec)
    assert a @ spec.coeffs @ b == pytest.approx(spec.local_bound, rel=1e-12)
    alice, bob = certify.deterministic_povms(a, 3), certify.deterministic_povms(b, 3)
    st = random_state(3, 3, np.random.default_rng(0))
    assert bell_value(st, spec, alice, bob) == pytest.approx(spec.local_bound, rel=1e-12)


def test_structured_starts_embed_optimal_measurements():
    spec = builtin_spec("MCHSH")
    (da, db), (oa, ob) = certify.structured_starts(spec, 3, 3)
    assert [p.dim for p in oa + ob] == [3] * 5
    # the embedded strategy keeps the qubit Tsirelson value on the embedded maximally entangled state
    ket = np.zeros(9)
    ket[[0, 4]] = 1 / np.sqrt(2)
    st = BipartiteState(np.outer(ket, ket), 3, 3)
    assert bell_value(st, spec, oa, ob) == pytest.approx(spec.tsirelson_bound, abs=1e-12)


def test_seesaw_floors_from_structured_starts():
    # one random restart alone can stall; the structured starts guarantee both floors
    spec = bell.idelta_spec(0.3)
    r = method3_seesaw(spec, 0.0, ss=SeesawConfig(restarts=1))
    assert r.omega >= spec.local_bound - 1e-6
    mchsh = builtin_spec("MCHSH")
    r3 = method3_seesaw(mchsh, -0.5, ss=SeesawConfig(restarts=1))
    assert r3.omega >= method2_fixed_measurements(mchsh, -0.5).omega - 1e-6
    bare = method3_seesaw(spec, 0.0, ss=SeesawConfig(restarts=1, structured_starts=False))
    assert bare.omega <= r.omega + 1e-9
