"""Threshold Bell values omega_H under a conditional-entropy constraint.

omega_H is the largest Bell value reachable by states with S(A|B) >= H.  Three
routes are implemented:

* method 1: fixed measurements, exact entropy handled by a growing set of
  linear witness cuts ``Tr(W sigma) >= H`` (an outer approximation);
* method 2: fixed measurements, entropy replaced by the Gauss-Radau SDP
  approximation in a single solve;
* method 3: see-saw over state, Alice's and Bob's POVMs with the SDP
  approximation in the state step; a heuristic lower estimate over all
  measurements.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import sdp
from .bell import BellSpec, Povm, bell_operator_matrix, bell_value, observable
from .quantum import BipartiteState, cvne_exact, partial_trace_array
from .relent import CvneApproxConfig, append_cvne_constraint, cvne_approx_expr
from .witness import NoBracketing, regularized_witness

log = logging.getLogger(__name__)

ENTROPY_EQ_TOL = 1e-6
MONOTONE_SLACK = 1e-7
METHOD1_MAX_ITERS = 200
STATUSES = ("converged", "iteration_cap", "numerical_failure")


@dataclass
class CertificationResult:
    spec_name: str
    H: float | None
    omega: float
    method: int
    apx: int | None
    iterations: int
    extremal_state: BipartiteState | None
    extremal_measurements: tuple[list[Povm], list[Povm]] | None = None
    status: str = "converged"
    history: list[float] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status != "numerical_failure"


@dataclass(frozen=True)
class SeesawConfig:
    """See-saw controls.  ``real=None`` picks real variables for qutrits only.

    With ``structured_starts`` the random restarts are joined by cycles started
    from the best deterministic local strategy and, when the spec tabulates
    them, from its optimal measurements (embedded for qutrits).  Cycle values
    never decrease, so the result is at least beta_C for H <= 0 and at least
    the fixed-measurement value.
    """

    restarts: int = 100
    cycle_tol: float = 1e-7
    max_cycles: int = 60
    seed: int = 0
    d_A: int = 2
    d_B: int = 2
    real: bool | None = None
    jobs: int = 1
    structured_starts: bool = True

    def __post_init__(self):
        if self.restarts < 1 or self.cycle_tol <= 0 or self.max_cycles < 1:
            raise ValueError(f"invalid see-saw config {self}")
        if self.d_A != self.d_B or self.d_A not in (2, 3):
            raise ValueError("see-saw needs d_A = d_B in {2, 3}")

    @property
    def use_real(self) -> bool:
        return self.d_A == 3 if self.real is None else self.real


def _failed(spec, H, method, apx, iterations=0, history=None) -> CertificationResult:
    return CertificationResult(spec.name, H, float("nan"), method, apx, iterations, None, None,
                               "numerical_failure", history or [])


def _is_real(m: np.ndarray) -> bool:
    return bool(np.all(np.abs(np.imag(m)) < 1e-14))


def _check_H(H: float, d_A: int) -> None:
    if not -np.log2(d_A) - 1e-12 <= H <= np.log2(d_A) + 1e-12:
        raise ValueError(f"H = {H!r} outside [-log2 d_A, log2 d_A]")


# -- state step ---------------------------------------------------------------

class _StateProblem:
    """max Tr(B sigma) s.t. sigma a density matrix (and S_apx(sigma) >= H); compiled once, objective swapped."""

    def __init__(self, d_A: int, d_B: int, H: float | None, cfg: CvneApproxConfig | None, real: bool):
        self.d_A, self.d_B, self.real = d_A, d_B, real
        self.p = sdp.SdpProblem("maximize")
        self.rho = sdp.add_density_variable(self.p, d_A, d_B, real=real)
        if H is not None:
            append_cvne_constraint(self.p, self.rho, d_A, d_B, H, cfg)

    def solve(self, bell_op: np.ndarray):
        op = bell_op.real if self.real else bell_op
        self.p.set_objective(sdp.inner(op, self.rho.expr))
        sol = self.p.solve()
        if not sol.ok:
            return sol, None
        return sol, BipartiteState.from_matrix(sol[self.rho], self.d_A, self.d_B)


# -- measurement step -----------------------------------------------------------

def _party_operators(spec: BellSpec, rho: np.ndarray, dims, other: Sequence[Povm], party: str) -> list[np.ndarray]:
    """K_x with Bell value = sum_x Tr((M_x0 - M_x1) K_x) for the given party."""
    d_A, d_B = dims
    obs = [observable(p) for p in other]
    out = []
    if party == "A":
        for i in range(spec.m_A):
            b = sum(spec.coeffs[i, j] * o for j, o in enumerate(obs))
            out.append(partial_trace_array(rho @ np.kron(np.eye(d_A), b), dims, "A"))
    else:
        for j in range(spec.m_B):
            a = sum(spec.coeffs[i, j] * o for i, o in enumerate(obs))
            out.append(partial_trace_array(rho @ np.kron(a, np.eye(d_B)), dims, "B"))
    # K_x is Hermitian up to the ordering of the product under the trace
    return [0.5 * (k + k.conj().T) for k in out]


class _MeasurementProblem:
    """Jointly optimal binary POVMs of one party against fixed operators K_x."""

    def __init__(self, settings: int, dim: int, real: bool):
        self.real = real
        self.p = sdp.SdpProblem("maximize")
        self.handles = sdp.add_povm_variables(self.p, settings, 2, dim, real=real)

    def solve(self, ks: Sequence[np.ndarray]):
        obj = None
        for (m0, m1), k in zip(self.handles, ks):
            k = k.real if self.real else k
            term = sdp.inner(k, m0.expr) - sdp.inner(k, m1.expr)
            obj = term if obj is None else obj + term
        self.p.set_objective(obj)
        sol = self.p.solve()
        if not sol.ok:
            return sol, None
        return sol, [Povm.from_element(sol[m0]) for m0, _ in self.handles]


def optimal_party_povms(ks: Sequence[np.ndarray]) -> list[Povm]:
    """Closed-form optimum of the measurement step: projector onto the positive part of each K_x."""
    out = []
    for k in ks:
        lam, u = np.linalg.eigh(k)
        pos = u[:, lam > 0]
        out.append(Povm.from_projector(pos @ pos.conj().T))
    return out


# -- methods 1 and 2 ----------------------------------------------------------------

def _fixed_measurements(spec: BellSpec, measurements):
    if measurements is not None:
        return measurements
    return spec.optimal_povms()


def method1_witness_iteration(
    spec: BellSpec,
    H: float,
    max_iters: int = METHOD1_MAX_ITERS,
    measurements: tuple[list[Povm], list[Povm]] | None = None,
    real: bool | None = None,
) -> CertificationResult:
    """Outer approximation of omega_H by witness cuts at fixed measurements.

    Each round maximises the Bell value over states obeying all cuts so far.
    The optimiser sigma is accepted once S(A|B)[sigma] >= H - 1e-6; otherwise a
    regularized witness at the level set S = H is added as a new cut.  The
    sequence of optima is non-increasing and each is an upper estimate.
    """
    alice, bob = _fixed_measurements(spec, measurements)
    d_A, d_B = alice[0].dim, bob[0].dim
    _check_H(H, d_A)
    bop = bell_operator_matrix(spec, alice, bob)
    real = _is_real(bop) if real is None else real
    p = sdp.SdpProblem("maximize")
    rho = sdp.add_density_variable(p, d_A, d_B, real=real)
    p.set_objective(sdp.inner(bop.real if real else bop, rho.expr))
    history: list[float] = []
    state = None
    for it in range(1, max_iters + 1):
        sol = p.solve()
        if not sol.ok:
            log.warning("method 1: solver status %s at iteration %d", sol.status, it)
            return _failed(spec, H, 1, None, it, history)
        omega = sol.objective_value
        if history and omega > history[-1] + MONOTONE_SLACK:
            raise AssertionError(f"witness iteration increased omega: {history[-1]!r} -> {omega!r}")
        history.append(omega)
        state = BipartiteState.from_matrix(sol[rho], d_A, d_B)
        if cvne_exact(state) >= H - ENTROPY_EQ_TOL:
            return CertificationResult(spec.name, H, omega, 1, None, it, state, (alice, bob), "converged", history)
        try:
            w = regularized_witness(state, H)
        except NoBracketing as exc:
            log.warning("method 1: %s", exc)
            return _failed(spec, H, 1, None, it, history)
        wm = w.w.real if real else w.w
        p.add_ge(sdp.inner(wm, rho.expr), H, f"witness {it}")
    return CertificationResult(spec.name, H, history[-1], 1, None, max_iters, state, (alice, bob), "iteration_cap", history)


def method2_fixed_measurements(
    spec: BellSpec,
    H: float,
    cfg: CvneApproxConfig = CvneApproxConfig(),
    measurements: tuple[list[Povm], list[Povm]] | None = None,
    real: bool | None = None,
) -> CertificationResult:
    """Single SDP: max Tr(B sigma) subject to S_apx(sigma) >= H."""
    alice, bob = _fixed_measurements(spec, measurements)
    d_A, d_B = alice[0].dim, bob[0].dim
    _check_H(H, d_A)
    bop = bell_operator_matrix(spec, alice, bob)
    real = _is_real(bop) if real is None else real
    sol, state = _StateProblem(d_A, d_B, H, cfg, real).solve(bop)
    if state is None:
        log.warning("method 2: solver status %s", sol.status)
        return _failed(spec, H, 2, cfg.apx, sol.iterations)
    return CertificationResult(spec.name, H, sol.objective_value, 2, cfg.apx, sol.iterations, state,
                               (alice, bob), "converged", [sol.objective_value])


def entropy_bound_at(
    spec: BellSpec,
    value: float,
    cfg: CvneApproxConfig = CvneApproxConfig(),
    measurements: tuple[list[Povm], list[Povm]] | None = None,
) -> float:
    """Largest S_apx over states reaching Bell ``value`` at fixed measurements (bits).

    This is the inverse of the method-2 curve evaluated directly: max S_apx(sigma)
    subject to Tr(B sigma) >= value.  Returns nan if the solve fails.
    """
    alice, bob = _fixed_measurements(spec, measurements)
    d_A, d_B = alice[0].dim, bob[0].dim
    bop = bell_operator_matrix(spec, alice, bob)
    real = _is_real(bop)
    p = sdp.SdpProblem("maximize")
    rho = sdp.add_density_variable(p, d_A, d_B, real=real)
    p.add_ge(sdp.inner(bop.real if real else bop, rho.expr), value, "Bell value")
    p.set_objective(cvne_approx_expr(p, rho, d_A, d_B, cfg))
    sol = p.solve()
    return sol.objective_value if sol.ok else float("nan")


# -- method 3 ---------------------------------------------------------------------

def random_binary_povms(settings: int, dim: int, rng: np.random.Generator, real: bool = False) -> list[Povm]:
    """First setting measures the computational basis; others project on a random vector.

    The vector has entries u + i v with u, v drawn uniformly from [0, 1) (only
    u for real runs), normalised.
    """
    out = []
    for x in range(settings):
        if x == 0:
            p = np.zeros((dim, dim))
            p[0, 0] = 1.0
        else:
            v = rng.random(dim) if real else rng.random(dim) + 1j * rng.random(dim)
            p = np.outer(v, v.conj()) / np.vdot(v, v).real
        out.append(Povm.from_projector(p))
    return out


def deterministic_povms(signs: Sequence[int], dim: int) -> list[Povm]:
    """Binary POVMs answering +1 (sign > 0) or -1 with certainty."""
    return [Povm.from_projector(np.eye(dim) if a > 0 else np.zeros((dim, dim))) for a in signs]


def best_local_assignment(spec: BellSpec) -> tuple[np.ndarray, np.ndarray]:
    """Signs a, b maximising sum_ij c_ij a_i b_j (Bob's signs chosen optimally for each a)."""
    best, best_val = None, -np.inf
    for a in itertools.product((1, -1), repeat=spec.m_A):
        col = np.asarray(a, dtype=float) @ spec.coeffs
        val = np.abs(col).sum()
        if val > best_val + 1e-12:
            best, best_val = (np.array(a), np.where(col >= 0, 1, -1)), val
    return best


def _embed_povms(povms: Sequence[Povm], dim: int) -> list[Povm]:
    out = []
    for p in povms:
        e = np.eye(dim, dtype=complex)
        e[:p.dim, :p.dim] = p.elements[0]
        out.append(Povm.from_element(e.real if _is_real(e) else e))
    return out


def structured_starts(spec: BellSpec, d_A: int, d_B: int) -> list[tuple[list[Povm], list[Povm]]]:
    a, b = best_local_assignment(spec)
    starts = [(deterministic_povms(a, d_A), deterministic_povms(b, d_B))]
    if spec.has_optimal_angles:
        alice, bob = spec.optimal_povms()
        starts.append((_embed_povms(alice, d_A), _embed_povms(bob, d_B)))
    return starts


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, restart]))


@dataclass
class _RestartOutcome:
    restart: int
    omega: float
    cycles: int
    state: BipartiteState | None
    alice: list[Povm] | None
    bob: list[Povm] | None
    ok: bool


def _seesaw_once(spec: BellSpec, H: float | None, cfg: CvneApproxConfig | None, ss: SeesawConfig,
                 restart: int, problems=None) -> _RestartOutcome:
    """One see-saw run; negative ``restart`` indices select the structured starts."""
    real = ss.use_real
    d_A, d_B = ss.d_A, ss.d_B
    if problems is None:
        problems = _seesaw_problems(spec, H, cfg, ss)
    state_p, alice_p, bob_p = problems
    if restart < 0:
        alice, bob = structured_starts(spec, d_A, d_B)[-restart - 1]
    else:
        rng = _restart_rng(ss.seed, restart)
        alice = random_binary_povms(spec.m_A, d_A, rng, real)
        bob = random_binary_povms(spec.m_B, d_B, rng, real)
    prev, state = -np.inf, None
    omega = -np.inf
    for cycle in range(1, ss.max_cycles + 1):
        sol, new_state = state_p.solve(bell_operator_matrix(spec, alice, bob))
        if new_state is None:
            log.info("see-saw restart %d: state step failed (%s)", restart, sol.status)
            return _RestartOutcome(restart, -np.inf, cycle, None, None, None, False)
        state = new_state
        sol, new_alice = alice_p.solve(_party_operators(spec, state.rho, (d_A, d_B), bob, "A"))
        if new_alice is None:
            return _RestartOutcome(restart, -np.inf, cycle, None, None, None, False)
        alice = new_alice
        sol, new_bob = bob_p.solve(_party_operators(spec, state.rho, (d_A, d_B), alice, "B"))
        if new_bob is None:
            return _RestartOutcome(restart, -np.inf, cycle, None, None, None, False)
        bob = new_bob
        omega = bell_value(state, spec, alice, bob)
        if abs(omega - prev) < ss.cycle_tol:
            break
        prev = omega
    return _RestartOutcome(restart, omega, cycle, state, alice, bob, True)


def _seesaw_problems(spec, H, cfg, ss):
    real = ss.use_real
    return (
        _StateProblem(ss.d_A, ss.d_B, H, cfg, real),
        _MeasurementProblem(spec.m_A, ss.d_A, real),
        _MeasurementProblem(spec.m_B, ss.d_B, real),
    )


def _seesaw_batch(args) -> list[_RestartOutcome]:
    spec, H, cfg, ss, restarts = args
    problems = _seesaw_problems(spec, H, cfg, ss)
    return [_seesaw_once(spec, H, cfg, ss, r, problems) for r in restarts]


def _run_restarts(spec, H, cfg, ss) -> list[_RestartOutcome]:
    indices = list(range(ss.restarts))
    if ss.structured_starts:
        indices = list(range(-len(structured_starts(spec, ss.d_A, ss.d_B)), 0)) + indices
    if ss.jobs <= 1:
        return _seesaw_batch((spec, H, cfg, ss, indices))
    chunks = [indices[i::ss.jobs] for i in range(ss.jobs)]
    with ProcessPoolExecutor(max_workers=ss.jobs) as pool:
        parts = pool.map(_seesaw_batch, [(spec, H, cfg, ss, c) for c in chunks if c])
    return sorted((o for part in parts for o in part), key=lambda o: o.restart)


def method3_seesaw(
    spec: BellSpec,
    H: float | None,
    cfg: CvneApproxConfig = CvneApproxConfig(),
    ss: SeesawConfig = SeesawConfig(),
    apx_values: Sequence[int] = (-1, 1),
) -> CertificationResult:
    """See-saw estimate of omega_H over arbitrary binary POVMs; ``H=None`` drops the entropy constraint.

    The maximum is taken over restarts and over the listed approximation
    directions.  Ties keep the earliest (apx, restart) pair, so results do not
    depend on scheduling.
    """
    if H is not None:
        _check_H(H, ss.d_A)
    runs = [None] if H is None else list(apx_values)
    best, best_apx, total = None, None, 0
    for apx in runs:
        c = cfg if apx is None else cfg.with_apx(apx)
        for o in _run_restarts(spec, H, c, ss):
            total += o.cycles
            if not o.ok:
                log.info("see-saw restart %d skipped", o.restart)
                continue
            if best is None or o.omega > best.omega:
                best, best_apx = o, apx
    if best is None:
        return _failed(spec, H, 3, None, total)
    return CertificationResult(spec.name, H, best.omega, 3, best_apx, total, best.state,
                               (best.alice, best.bob), "converged", [best.omega])


def seesaw_measurements(spec: BellSpec, ss: SeesawConfig = SeesawConfig()) -> tuple[list[Povm], list[Povm]]:
    """Measurements maximising the unconstrained Bell value, found by see-saw."""
    res = method3_seesaw(spec, None, ss=ss)
    if not res.ok:
        raise RuntimeError(f"see-saw failed for {spec.name}")
    return res.extremal_measurements


# -- Tsirelson checks and curves --------------------------------------------------

def tsirelson_check(spec: BellSpec, ss: SeesawConfig | None = None) -> float:
    """Maximal quantum value: at the tabulated angles when present, otherwise by see-saw."""
    if spec.has_optimal_angles:
        alice, bob = spec.optimal_povms()
        bop = bell_operator_matrix(spec, alice, bob)
        sol, state = _StateProblem(alice[0].dim, bob[0].dim, None, None, _is_real(bop)).solve(bop)
        return sol.objective_value if state is not None else float("nan")
    res = method3_seesaw(spec, None, ss=ss or SeesawConfig(restarts=5))
    return res.omega


def omega_curve(
    spec: BellSpec,
    h_grid: Sequence[float],
    method: int = 2,
    cfg: CvneApproxConfig = CvneApproxConfig(),
    ss: SeesawConfig | None = None,
    measurements: tuple[list[Povm], list[Povm]] | None = None,
    apx_values: Sequence[int] = (-1, 1),
) -> list[CertificationResult]:
    out = []
    for H in h_grid:
        if method == 1:
            out.append(method1_witness_iteration(spec, H, measurements=measurements))
        elif method == 2:
            out.append(method2_fixed_measurements(spec, H, cfg, measurements=measurements))
        elif method == 3:
            out.append(method3_seesaw(spec, H, cfg, ss or SeesawConfig(), apx_values))
        else:
            raise ValueError(f"method must be 1, 2 or 3, got {method!r}")
    return out


def invert_curve(h_values: Sequence[float], omegas: Sequence[float], value: float, d_A: int) -> float:
    """Certified CVNE upper bound at Bell ``value`` from a sampled (H, omega_H) curve.

    omega_H is non-increasing in H.  Values at or below the omega of the largest
    grid H give no certificate and return +log2 d_A; values above the largest
    omega are clamped to the smallest grid H (still a valid, looser bound).
    """
    order = np.argsort(h_values)
    hs = np.asarray(h_values, float)[order]
    ws = np.asarray(omegas, float)[order]
    keep = np.isfinite(ws)
    hs, ws = hs[keep], ws[keep]
    if len(hs) == 0:
        return float("nan")
    # enforce monotonicity against solver noise before inverting
    ws = np.maximum.accumulate(ws[::-1])[::-1]
    if value <= ws[-1]:
        return float(np.log2(d_A))
    if value >= ws[0]:
        return float(hs[0])
    i = np.flatnonzero(ws >= value)[-1]
    w0, w1, h0, h1 = ws[i], ws[i + 1], hs[i], hs[i + 1]
    if w0 == w1:
        return float(h1)
    return float(h0 + (value - w0) * (h1 - h0) / (w1 - w0))


def default_h_grid(d: int) -> np.ndarray:
    return np.linspace(0.0, -1.0, 11) if d == 2 else np.linspace(0.0, -1.5, 7)


def visibility_curve(
    spec: BellSpec,
    d: int,
    v_grid: Sequence[float],
    cfg: CvneApproxConfig = CvneApproxConfig(),
    ss: SeesawConfig | None = None,
    h_grid: Sequence[float] | None = None,
    method: int | None = None,
    apx_values: Sequence[int] = (1,),
) -> tuple[list[tuple[float, float]], list[CertificationResult]]:
    """Certified CVNE bound at Bell value v*T for each visibility v.

    Samples omega_H on ``h_grid`` (method 3 for qutrits, method 2 for qubits by
    default) and inverts the curve.  Returns the (v, bound) pairs and the
    underlying curve.
    """
    if any(not 0 <= v <= 1 for v in v_grid):
        raise ValueError("visibilities must lie in [0, 1]")
    method = method or (3 if d == 3 else 2)
    h_grid = default_h_grid(d) if h_grid is None else np.asarray(h_grid, float)
    if method == 3:
        ss = replace(ss or SeesawConfig(), d_A=d, d_B=d)
        curve = omega_curve(spec, h_grid, 3, cfg, ss, apx_values=apx_values)
    else:
        measurements = None
        if not spec.has_optimal_angles:
            measurements = seesaw_measurements(spec, replace(ss or SeesawConfig(restarts=5), d_A=d, d_B=d))
        curve = omega_curve(spec, h_grid, method, cfg.with_apx(apx_values[-1]), measurements=measurements)
    omegas = [r.omega for r in curve]
    pairs = [(float(v), invert_curve(h_grid, omegas, v * spec.tsirelson_bound, d)) for v in v_grid]
    return pairs, curve
