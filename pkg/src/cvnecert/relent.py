"""Gauss-Radau semidefinite approximations of the conditional entropy.

The logarithm is written as ``ln z = int_0^1 f_t(z) dt`` with
``f_t(z) = (z - 1) / (t (z - 1) + 1)``.  Since the (2m-1)-th t-derivative of
``f_t`` is negative for every z, an m-point Radau rule pinned at t = 1 never
overshoots ``ln z`` and one pinned at t = 0 never undershoots it.  Combined
with ``ln z = 2^k ln z^(1/2^k)`` this gives one-sided rational bounds which
lift to operator perspectives and hence to LMIs.

For the conditional entropy, ``S(A|B) = -D(rho || I_A (x) rho_B)``.  The
non-commuting pair is lifted to the commuting pair

    X = rho (x) I_B',   Y = I_AB (x) rho_B^T

on ``H_AB (x) H_B'`` (dimension n*d_B), and ``S(A|B) = sum_a f_a^dag X log(Y X^-1) f_a``
with ``f_a = sum_b |a b>|b>``.  This is the compression of the usual
``vec(I)`` lift on n^2 dimensions: that lift carries an identity factor on a
copy of H_A, which drops out exactly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps

from . import sdp
from .quantum import BipartiteState, partial_trace

LN2 = np.log(2.0)
MIN_WEIGHT = 1e-14


@dataclass(frozen=True)
class QuadratureRule:
    m: int
    fixed_endpoint: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class CvneApproxConfig:
    """``m`` quadrature nodes, ``k`` square-root steps, ``apx`` = -1 (lower) or +1 (upper)."""

    m: int = 3
    k: int = 3
    apx: int = 1

    def __post_init__(self):
        if self.m < 1 or self.k < 0 or self.apx not in (-1, 1):
            raise ValueError(f"invalid approximation config {self}")

    @property
    def endpoint(self) -> int:
        return 1 if self.apx == -1 else 0

    def with_apx(self, apx: int) -> "CvneApproxConfig":
        return CvneApproxConfig(self.m, self.k, apx)


def gauss_radau(m: int, fixed_endpoint: int) -> QuadratureRule:
    """m-point Radau rule on [0, 1] with one node pinned at ``fixed_endpoint``.

    Golub's construction: the last diagonal entry of the Jacobi matrix of the
    shifted Legendre polynomials is modified so that ``fixed_endpoint`` becomes
    an eigenvalue; nodes are the eigenvalues and weights the squared first
    components of the normalised eigenvectors.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if fixed_endpoint not in (0, 1):
        raise ValueError("fixed_endpoint must be 0 or 1")
    a = float(fixed_endpoint)
    if m == 1:
        return QuadratureRule(1, fixed_endpoint, np.array([a]), np.array([1.0]))
    j = np.arange(1, m)
    off = j / (2 * np.sqrt(4.0 * j**2 - 1))
    diag = np.full(m, 0.5)
    lead = np.diag(diag[:-1]) + np.diag(off[:-1], 1) + np.diag(off[:-1], -1)
    rhs = np.zeros(m - 1)
    rhs[-1] = off[-1] ** 2
    delta = np.linalg.solve(lead - a * np.eye(m - 1), rhs)
    diag[-1] = a + delta[-1]
    jac = np.diag(diag) + np.diag(off, 1) + np.diag(off, -1)
    nodes, vecs = np.linalg.eigh(jac)
    weights = vecs[0] ** 2
    nodes[np.argmin(np.abs(nodes - a))] = a
    nodes = np.clip(nodes, 0.0, 1.0)
    return QuadratureRule(m, fixed_endpoint, nodes, weights / weights.sum())


def _rule(cfg: CvneApproxConfig) -> tuple[np.ndarray, np.ndarray]:
    rule = gauss_radau(cfg.m, cfg.endpoint)
    keep = rule.weights >= MIN_WEIGHT
    if not keep.all():
        warnings.warn(f"dropping {np.sum(~keep)} quadrature nodes with weight < {MIN_WEIGHT}")
    return rule.nodes[keep], rule.weights[keep]


def scalar_log_bound(x: float, cfg: CvneApproxConfig) -> float:
    """Natural-log approximation ``2^k sum_j w_j f_{t_j}(x^(1/2^k))``; below ln x for apx=-1, above for +1."""
    if not x > 0:
        raise ValueError("x must be positive")
    nodes, weights = _rule(cfg)
    z = x ** (0.5**cfg.k)
    return float(2**cfg.k * np.sum(weights * (z - 1) / (nodes * (z - 1) + 1)))


def _log_bound_vec(z: np.ndarray, cfg: CvneApproxConfig) -> np.ndarray:
    nodes, weights = _rule(cfg)
    r = z[..., None] ** (0.5**cfg.k)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2**cfg.k * np.sum(weights * (r - 1) / (nodes * (r - 1) + 1), axis=-1)


def cvne_approx(state: BipartiteState, cfg: CvneApproxConfig) -> float:
    """Value of the approximate conditional entropy (bits) at a fixed state.

    Evaluates the lifted-pair formula on the joint eigenbasis of the commuting
    pair; this is what the LMI construction of :func:`append_cvne_constraint`
    attains at its optimum.
    """
    lam, u = np.linalg.eigh(state.rho)
    y = np.kron(np.eye(state.d_A), partial_trace(state, "B"))
    mu, v = np.linalg.eigh(y)
    overlap = np.abs(u.conj().T @ v) ** 2
    total = 0.0
    for i in np.flatnonzero(lam > 1e-300):
        w = overlap[i]
        pos = mu > 0
        if np.any(w[~pos] > 1e-14):
            return -np.inf
        total += lam[i] * np.sum(w[pos] * _log_bound_vec(mu[pos] / lam[i], cfg))
    return float(total / LN2)


def lifted_pair(rho, d_A: int, d_B: int):
    """Affine lifted pair ``(rho (x) I_B, I_AB (x) rho_B^T)`` and the compression matrix ``F``."""
    n = d_A * d_B
    rho = sdp.as_affine(rho)
    rho_b = sdp.partial_trace(rho, (d_A, d_B), "B")
    x = sdp.kron(rho, np.eye(d_B))
    y = sdp.kron(np.eye(n), rho_b.T)
    f = np.zeros((n * d_B, d_A))
    for a in range(d_A):
        for b in range(d_B):
            f[(a * d_B + b) * d_B + b, a] = 1.0
    return x, y, f


def cvne_approx_expr(
    p: sdp.SdpProblem, rho: sdp.Variable, d_A: int, d_B: int, cfg: CvneApproxConfig, tag: str = "ent"
) -> sdp.Affine:
    """Append auxiliary variables/LMIs and return a scalar expression ``s`` (bits) with ``s <= S_apx(rho)``.

    Maximising over the auxiliaries makes ``s`` reach ``S_apx(rho)``, so the
    set ``{rho : exists aux, s >= H}`` is exactly ``{rho : S_apx(rho) >= H}``.
    """
    real = rho.real
    x, y, f = lifted_pair(rho, d_A, d_B)
    dim = x.shape[0]
    # hypograph of the weighted geometric mean X #_{2^-k} Y through k halvings
    z = y
    for i in range(cfg.k):
        zi = p.add_variable(f"{tag}_Z{i + 1}", dim, real=real)
        p.add_psd(sdp.bmat([[x, zi.expr], [zi.expr, z]]), f"{tag} geomean {i + 1}")
        z = zi.expr
    nodes, weights = _rule(cfg)
    xf = x @ f
    fxf = f.T @ xf
    total = None
    for j, (t, w) in enumerate(zip(nodes, weights)):
        if t == 0.0:
            # f_0(z) = z - 1: perspective is linear, F^T (Z - X) F
            term = (f.T @ (z - x) @ f).trace()
        else:
            tj = p.add_variable(f"{tag}_T{j}", d_A, real=real)
            block = sdp.bmat([
                [fxf / t - tj.expr, xf.H / t],
                [xf / t, z + x * (1 / t - 1)],
            ])
            p.add_psd(block, f"{tag} node {j}")
            term = tj.expr.trace()
        term = term * w
        total = term if total is None else total + term
    return sdp.Affine((1, 1), total.const.real, {v: _real(c) for v, c in total.terms.items()}) * (2**cfg.k / LN2)


def _real(m):
    return sps.csr_matrix(m.real)


def append_cvne_constraint(
    p: sdp.SdpProblem, rho: sdp.Variable, d_A: int, d_B: int, H: float, cfg: CvneApproxConfig, tag: str = "ent"
) -> sdp.Affine:
    """Constrain ``S_apx(rho) >= H`` (bits); returns the entropy expression."""
    if not -np.log2(d_A) - 1e-12 <= H <= np.log2(d_A) + 1e-12:
        raise ValueError(f"H = {H!r} outside [-log2 d_A, log2 d_A]")
    expr = cvne_approx_expr(p, rho, d_A, d_B, cfg, tag)
    p.add_ge(expr, H, f"S_apx >= {H}")
    return expr
