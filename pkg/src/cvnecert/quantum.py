"""Dense Hermitian linear algebra and entropy functionals for small bipartite states.

All entropies are returned in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSD_TOL = 1e-9
TRACE_TOL = 1e-9
SUPPORTED_DIMS = (2, 3)


class NotPSD(ValueError):
    """Raised when a matrix that must be positive semi-definite is not."""


def hermitize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    return (m + m.conj().T) / 2


def is_hermitian(m: np.ndarray, atol: float = 1e-12) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=atol, rtol=0)


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def partial_trace_array(rho: np.ndarray, dims: tuple[int, int], keep: str) -> np.ndarray:
    """Reduced matrix of a ``dims[0]*dims[1]`` operator, keeping subsystem ``'A'`` or ``'B'``."""
    d_a, d_b = dims
    t = np.asarray(rho).reshape(d_a, d_b, d_a, d_b)
    if keep == "A":
        return np.einsum("ibjb->ij", t)
    if keep == "B":
        return np.einsum("aiaj->ij", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


@dataclass(frozen=True)
class BipartiteState:
    """Density matrix on C^d_A (x) C^d_B."""

    rho: np.ndarray
    d_A: int
    d_B: int

    def __post_init__(self):
        if self.d_A not in SUPPORTED_DIMS or self.d_B not in SUPPORTED_DIMS:
            raise ValueError(f"subsystem dimensions must be in {SUPPORTED_DIMS}")
        rho = np.array(self.rho, dtype=complex)
        n = self.d_A * self.d_B
        if rho.shape != (n, n):
            raise ValueError(f"rho has shape {rho.shape}, expected {(n, n)}")
        if not is_hermitian(rho, atol=1e-10):
            raise ValueError("rho is not Hermitian")
        rho = hermitize(rho)
        if abs(np.trace(rho).real - 1) > TRACE_TOL:
            raise ValueError(f"rho has trace {np.trace(rho).real:.12g}, expected 1")
        lmin = np.linalg.eigvalsh(rho)[0]
        if lmin < -PSD_TOL:
            raise NotPSD(f"rho has eigenvalue {lmin:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.d_A * self.d_B

    @classmethod
    def from_ket(cls, psi, d_A: int, d_B: int) -> "BipartiteState":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), d_A, d_B)

    @classmethod
    def from_matrix(cls, m, d_A: int, d_B: int) -> "BipartiteState":
        """Build a state from a PSD matrix, renormalizing the trace and clipping round-off negativity."""
        m = hermitize(m)
        lam, u = np.linalg.eigh(m)
        if lam[0] < -PSD_TOL * max(1.0, lam[-1]):
            raise NotPSD(f"matrix has eigenvalue {lam[0]:.3e}")
        lam = np.clip(lam, 0, None)
        m = (u * lam) @ u.conj().T
        return cls(hermitize(m / lam.sum()), d_A, d_B)

    def mix(self, c: float) -> "BipartiteState":
        """``c*rho + (1-c)*I/(d_A d_B)``."""
        return BipartiteState(c * self.rho + (1 - c) * np.eye(self.dim) / self.dim, self.d_A, self.d_B)


def partial_trace(state: BipartiteState, keep: str) -> np.ndarray:
    return hermitize(partial_trace_array(state.rho, (state.d_A, state.d_B), keep))


def _eigh_psd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, u = np.linalg.eigh(hermitize(m))
    if lam[0] < -PSD_TOL:
        raise NotPSD(f"minimum eigenvalue {lam[0]:.3e} < {-PSD_TOL}")
    return lam, u


def matrix_log2(m: np.ndarray, eigenvalue_floor: float = 1e-12) -> np.ndarray:
    """Base-2 matrix logarithm of a PSD matrix, with eigenvalues floored at ``eigenvalue_floor``."""
    lam, u = _eigh_psd(m)
    return hermitize((u * np.log2(np.maximum(lam, eigenvalue_floor))) @ u.conj().T)


def matrix_exp2(m: np.ndarray) -> np.ndarray:
    lam, u = np.linalg.eigh(hermitize(m))
    return hermitize((u * np.exp2(lam)) @ u.conj().T)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


def vn_entropy(m: np.ndarray) -> float:
    """Von Neumann entropy ``-Tr(m log2 m)`` in bits."""
    lam, _ = _eigh_psd(m)
    if abs(lam.sum() - 1) > TRACE_TOL:
        raise ValueError(f"trace {lam.sum():.12g} is not 1")
    return shannon_entropy(lam)


def cvne_exact(state: BipartiteState) -> float:
    """Conditional entropy S(A|B) = S(rho_AB) - S(rho_B) in bits."""
    return vn_entropy(state.rho) - vn_entropy(partial_trace(state, "B"))


def binary_entropy(x: float) -> float:
    return shannon_entropy([x, 1 - x])


def werner_cvne(p: float) -> float:
    """Closed-form S(A|B) of the two-qubit Werner state with singlet weight ``p``."""
    if not 0 <= p <= 1:
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    return shannon_entropy([(1 - p) / 4] * 3 + [(1 + 3 * p) / 4]) - 1


PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def werner_state(p: float) -> BipartiteState:
    """``(I - p * sum_i sigma_i (x) sigma_i) / 4``."""
    rho = np.eye(4, dtype=complex) - p * sum(np.kron(s, s) for s in PAULI)
    return BipartiteState(rho / 4, 2, 2)


def max_entangled_ket(D: int) -> np.ndarray:
    psi = np.zeros(D * D, dtype=complex)
    psi[[i * D + i for i in range(D)]] = 1 / np.sqrt(D)
    return psi


def noisy_max_entangled(v: float, D: int) -> BipartiteState:
    """Isotropic state ``v |Phi><Phi| + (1-v) I/D^2``."""
    if not 0 <= v <= 1:
        raise ValueError(f"visibility must lie in [0, 1], got {v!r}")
    psi = max_entangled_ket(D)
    rho = v * np.outer(psi, psi.conj()) + (1 - v) * np.eye(D * D) / D**2
    return BipartiteState(rho, D, D)


def random_state(d_A: int, d_B: int, rng: np.random.Generator, rank: int | None = None) -> BipartiteState:
    """Ginibre-ensemble state; full rank unless ``rank`` is given."""
    n = d_A * d_B
    g = rng.normal(size=(n, rank or n)) + 1j * rng.normal(size=(n, rank or n))
    rho = g @ g.conj().T
    return BipartiteState(hermitize(rho / np.trace(rho).real), d_A, d_B)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))
