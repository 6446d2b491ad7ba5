"""Linear witnesses for the conditional entropy.

The witness of a full-rank state rho is ``W = -log2 rho_AB + I_A (x) log2 rho_B``.
Since S(A|B) is concave, ``Tr(W sigma) >= S(A|B)[sigma]`` for every sigma with
equality at rho, so ``Tr(W sigma) >= H`` is a valid linear relaxation of
``S(A|B)[sigma] >= H``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import BipartiteState, cvne_exact, hermitize, matrix_log2, partial_trace

RANK_TOL = 1e-10
BISECTION_WINDOW = 1e-9
MAX_BISECTIONS = 200


class SingularState(ValueError):
    """The state (or its B marginal) has eigenvalues too close to zero for a witness."""


class NoBracketing(ValueError):
    """The bisection target is not bracketed by the maximally mixed state and the input."""


@dataclass(frozen=True)
class EntropyWitness:
    w: np.ndarray
    source_state: BipartiteState
    mixing_c: float = 1.0

    @property
    def support_state(self) -> BipartiteState:
        """State at which the witness is tight (the regularized mixture when ``mixing_c < 1``)."""
        if self.mixing_c == 1.0:
            return self.source_state
        return self.source_state.mix(self.mixing_c)

    def value(self, sigma: BipartiteState | np.ndarray) -> float:
        rho = sigma.rho if isinstance(sigma, BipartiteState) else np.asarray(sigma)
        return float(np.real(np.vdot(self.w, rho)))


def _witness_matrix(state: BipartiteState) -> np.ndarray:
    rho_b = partial_trace(state, "B")
    if np.linalg.eigvalsh(state.rho)[0] <= RANK_TOL or np.linalg.eigvalsh(rho_b)[0] <= RANK_TOL:
        raise SingularState("witness needs a full-rank state; regularize first")
    return hermitize(-matrix_log2(state.rho) + np.kron(np.eye(state.d_A), matrix_log2(rho_b)))


def cvne_witness(rho: BipartiteState) -> EntropyWitness:
    return EntropyWitness(_witness_matrix(rho), rho)


def witness_bound_check(w: EntropyWitness, sigma: BipartiteState, T: float) -> bool:
    """True when ``Tr(W sigma) <= T``, which certifies ``S(A|B)[sigma] <= T``."""
    return w.value(sigma) <= T


def regularized_witness(rho: BipartiteState, H: float) -> EntropyWitness:
    """Witness of the mixture ``c rho + (1-c) I/d`` whose conditional entropy lies in [H - 1e-9, H).

    ``c`` is found by bisection on [0, 1]; the bracket (entropy >= H at the low
    end, < H at the high end) is maintained explicitly rather than assumed.
    """
    f_hi = cvne_exact(rho)
    if f_hi >= H:
        raise NoBracketing(f"S(A|B)[rho] = {f_hi:.12g} is not below H = {H!r}")
    if cvne_exact(rho.mix(0.0)) < H:
        raise NoBracketing(f"H = {H!r} exceeds the maximal conditional entropy")
    lo, hi = 0.0, 1.0
    for _ in range(MAX_BISECTIONS):
        if f_hi >= H - BISECTION_WINDOW and hi < 1.0:
            break
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = cvne_exact(rho.mix(mid))
        if f_mid < H:
            hi, f_hi = mid, f_mid
        else:
            lo = mid
    if not (H - BISECTION_WINDOW <= f_hi < H):
        raise NoBracketing(f"bisection stalled at c={hi!r} with S(A|B)={f_hi!r}")
    mixture = rho.mix(hi)
    return EntropyWitness(_witness_matrix(mixture), rho, hi)
