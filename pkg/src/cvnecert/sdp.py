"""Conic models over Hermitian matrix variables, compiled to a real SDP and solved by interior point.

A problem holds Hermitian (or real symmetric) matrix variables, affine
equalities, scalar inequalities and linear matrix inequalities.  Every
Hermitian variable is parametrised by its n^2 real degrees of freedom; complex
LMI blocks are embedded as real symmetric blocks ``[[Re, -Im], [Im, Re]]`` of
twice the size, which preserves positivity and objective values exactly.
The compiled program is solved by the interior-point method in :mod:`ipm`;
CVXOPT can be selected instead (``backend="cvxopt"``) for cross-checks.
"""

from __future__ import annotations

import io
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import ipm

GAP_TOL = 1e-7
FEAS_TOL = 1e-7
NEAR_TOL = 1e-5
SOLVER_OPTIONS = {"abstol": 1e-7, "reltol": 1e-8, "feastol": 1e-8, "maxiters": 100}
CVXOPT_OPTIONS = {"abstol": 1e-9, "reltol": 1e-9, "feastol": 1e-9, "maxiters": 200, "show_progress": False, "refinement": 2}
STATUSES = ("optimal", "near_optimal", "infeasible", "numerical_failure")


class Variable:
    """Hermitian (or real symmetric when ``real``) matrix variable."""

    def __init__(self, name: str, dim: int, real: bool, index: int):
        self.name = name
        self.dim = dim
        self.real = real
        self.index = index
        self.basis = _param_basis(dim, real)
        self.nparams = self.basis.shape[1]

    def __repr__(self):
        kind = "sym" if self.real else "herm"
        return f"Variable({self.name!r}, {self.dim}, {kind})"

    @property
    def expr(self) -> "Affine":
        return Affine((self.dim, self.dim), np.zeros(self.dim**2, complex), {self: self.basis})

    def decode(self, params: np.ndarray) -> np.ndarray:
        m = (self.basis @ params).reshape(self.dim, self.dim)
        return (m + m.conj().T) / 2


def _param_basis(dim: int, real: bool) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    k = 0
    for i in range(dim):
        rows.append(i * dim + i); cols.append(k); vals.append(1.0)
        k += 1
    for i, j in itertools.combinations(range(dim), 2):
        rows += [i * dim + j, j * dim + i]; cols += [k, k]; vals += [1.0, 1.0]
        k += 1
        if not real:
            rows += [i * dim + j, j * dim + i]; cols += [k, k]; vals += [1j, -1j]
            k += 1
    return sp.csr_matrix((np.array(vals, complex), (rows, cols)), shape=(dim * dim, k))


_MAP_CACHE: dict = {}


def _linear_map(key, fn, in_shape: tuple[int, int]) -> sp.csr_matrix:
    """Sparse matrix of the linear map ``vec(X) -> vec(fn(X))`` (row-major vec)."""
    if key is not None and key in _MAP_CACHE:
        return _MAP_CACHE[key]
    p, q = in_shape
    cols = []
    for idx in range(p * q):
        e = np.zeros(p * q, complex)
        e[idx] = 1.0
        cols.append(sp.csc_matrix(np.asarray(fn(e.reshape(p, q))).reshape(-1, 1)))
    m = sp.hstack(cols).tocsr()
    m.eliminate_zeros()
    if key is not None:
        _MAP_CACHE[key] = m
    return m


class Affine:
    """Matrix-valued affine function ``const + sum_v coef_v @ params_v`` (row-major vec)."""

    __array_priority__ = 100

    def __init__(self, shape, const, terms):
        self.shape = tuple(shape)
        self.const = np.asarray(const, complex).ravel()
        self.terms = dict(terms)

    @classmethod
    def constant(cls, m) -> "Affine":
        m = np.atleast_2d(np.asarray(m, complex))
        return cls(m.shape, m.ravel(), {})

    @property
    def size(self) -> int:
        return self.shape[0] * self.shape[1]

    def _map(self, matrix: sp.spmatrix, shape) -> "Affine":
        return Affine(shape, matrix @ self.const, {v: (matrix @ c).tocsr() for v, c in self.terms.items()})

    def apply(self, fn, out_shape, key=None) -> "Affine":
        return self._map(_linear_map(key, fn, self.shape), out_shape)

    def __add__(self, other):
        other = as_affine(other, self.shape)
        if other.shape != self.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        terms = dict(self.terms)
        for v, c in other.terms.items():
            terms[v] = terms[v] + c if v in terms else c
        return Affine(self.shape, self.const + other.const, terms)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-as_affine(other, self.shape))

    def __rsub__(self, other):
        return as_affine(other, self.shape) - self

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return Affine(self.shape, self.const * scalar, {v: c * scalar for v, c in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __matmul__(self, right):
        right = np.atleast_2d(np.asarray(right, complex))
        p, q = self.shape
        m = sp.kron(sp.identity(p), sp.csr_matrix(right.T), format="csr")
        return self._map(m, (p, right.shape[1]))

    def __rmatmul__(self, left):
        left = np.atleast_2d(np.asarray(left, complex))
        p, q = self.shape
        m = sp.kron(sp.csr_matrix(left), sp.identity(q), format="csr")
        return self._map(m, (left.shape[0], q))

    @property
    def T(self) -> "Affine":
        p, q = self.shape
        return self.apply(lambda x: x.T, (q, p), key=("T", p, q))

    @property
    def H(self) -> "Affine":
        t = self.T
        return Affine(t.shape, t.const.conj(), {v: c.conj() for v, c in t.terms.items()})

    def trace(self) -> "Affine":
        p, q = self.shape
        m = sp.csr_matrix((np.ones(p), (np.zeros(p, int), np.arange(p) * (q + 1))), shape=(1, p * q))
        return self._map(m, (1, 1))

    def value(self, values: dict) -> np.ndarray:
        out = self.const.copy()
        for v, c in self.terms.items():
            out = out + c @ values[v]
        return out.reshape(self.shape)

    def is_real(self) -> bool:
        if np.any(np.abs(self.const.imag) > 0):
            return False
        return all(c.nnz == 0 or np.all(c.data.imag == 0) for c in self.terms.values())


def as_affine(x, shape=None) -> Affine:
    if isinstance(x, Affine):
        return x
    if isinstance(x, Variable):
        return x.expr
    if np.isscalar(x) and shape is not None and shape != (1, 1):
        if x != 0:
            raise ValueError("only zero broadcasts to a matrix")
        return Affine(shape, np.zeros(shape[0] * shape[1]), {})
    return Affine.constant(x)


def kron(a, b) -> Affine:
    """Kronecker product where exactly one factor may be affine."""
    if isinstance(b, (Affine, Variable)) and not isinstance(a, (Affine, Variable)):
        b = as_affine(b)
        a = np.atleast_2d(np.asarray(a, complex))
        shape = (a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
        return b.apply(lambda x: np.kron(a, x), shape, key=("kronL", a.tobytes(), a.shape, b.shape))
    a = as_affine(a)
    b = np.atleast_2d(np.asarray(b, complex))
    shape = (a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return a.apply(lambda x: np.kron(x, b), shape, key=("kronR", b.tobytes(), b.shape, a.shape))


def partial_trace(x, dims: tuple[int, int], keep: str) -> Affine:
    x = as_affine(x)
    d_a, d_b = dims
    if keep == "A":
        fn, d = (lambda m: np.einsum("ibjb->ij", m.reshape(d_a, d_b, d_a, d_b))), d_a
    elif keep == "B":
        fn, d = (lambda m: np.einsum("aiaj->ij", m.reshape(d_a, d_b, d_a, d_b))), d_b
    else:
        raise ValueError(keep)
    return x.apply(fn, (d, d), key=("ptr", d_a, d_b, keep))


def inner(c, x) -> Affine:
    """Real scalar ``Re Tr(c^dagger x)`` for constant Hermitian ``c``."""
    x = as_affine(x)
    c = np.asarray(c, complex)
    row = sp.csr_matrix(c.conj().ravel().reshape(1, -1))
    out = x._map(row, (1, 1))
    return Affine((1, 1), out.const.real, {v: sp.csr_matrix(m.real) for v, m in out.terms.items()})


def bmat(blocks: Sequence[Sequence]) -> Affine:
    """Assemble a block matrix from affine expressions, constants and ``None`` (zero) blocks."""
    heights = [None] * len(blocks)
    widths = [None] * len(blocks[0])
    for i, row in enumerate(blocks):
        for j, blk in enumerate(row):
            if blk is None:
                continue
            shape = blk.shape if isinstance(blk, (Affine, Variable)) else np.atleast_2d(blk).shape
            if isinstance(blk, Variable):
                shape = (blk.dim, blk.dim)
            heights[i] = heights[i] or shape[0]
            widths[j] = widths[j] or shape[1]
    if None in heights or None in widths:
        raise ValueError("every block row and column needs at least one explicit block")
    r_off = np.concatenate([[0], np.cumsum(heights)])
    c_off = np.concatenate([[0], np.cumsum(widths)])
    P, Q = int(r_off[-1]), int(c_off[-1])
    out = Affine((P, Q), np.zeros(P * Q), {})
    for i, row in enumerate(blocks):
        for j, blk in enumerate(row):
            if blk is None:
                continue
            blk = as_affine(blk)
            h, w = blk.shape
            ii, jj = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
            target = ((ii + r_off[i]) * Q + (jj + c_off[j])).ravel()
            sel = sp.csr_matrix((np.ones(h * w), (target, np.arange(h * w))), shape=(P * Q, h * w))
            out = out + blk._map(sel, (P, Q))
    return out


def embed_hermitian(m: np.ndarray) -> np.ndarray:
    """Real symmetric embedding ``[[Re m, -Im m], [Im m, Re m]]``; same spectrum, each eigenvalue doubled."""
    m = np.asarray(m, complex)
    return np.block([[m.real, -m.imag], [m.imag, m.real]])


@dataclass
class ConicProgram:
    """Real cone LP ``min c'x  s.t.  Gx + s = h, Ax = b, s in R+^l x PSD(s_1) x ...``.

    ``G`` and ``h`` store each PSD block column-major, as CVXOPT expects.
    """

    c: np.ndarray
    G: sp.csr_matrix
    h: np.ndarray
    dims: dict
    A: sp.csr_matrix
    b: np.ndarray
    offsets: dict
    objective_sign: float
    objective_const: float


@dataclass
class SdpSolution:
    values: dict
    objective_value: float
    duality_gap: float
    status: str
    primal_residual: float = float("nan")
    dual_residual: float = float("nan")
    dual_objective: float = float("nan")
    iterations: int = 0
    scalars: dict = field(default_factory=dict)

    def __getitem__(self, var):
        return self.values[var.name if isinstance(var, Variable) else var]

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near_optimal")


class SdpProblem:
    """Builder for a conic problem; see module docstring."""

    def __init__(self, sense: str = "maximize"):
        if sense not in ("maximize", "minimize"):
            raise ValueError(sense)
        self.sense = sense
        self.variables: list[Variable] = []
        self.eq_constraints: list[tuple[Affine, str]] = []
        self.ineq_constraints: list[tuple[Affine, str]] = []
        self.psd_constraints: list[tuple[Affine, str]] = []
        self.objective: Affine = Affine((1, 1), [0.0], {})
        self._compiled: ConicProgram | None = None

    # -- declaration -------------------------------------------------------
    def add_variable(self, name: str, dim: int, real: bool = False, psd: bool = False) -> Variable:
        if any(v.name == name for v in self.variables):
            raise ValueError(f"duplicate variable name {name!r}")
        v = Variable(name, dim, real, len(self.variables))
        self.variables.append(v)
        if psd:
            self.add_psd(v.expr, f"{name} >= 0")
        self._compiled = None
        return v

    def add_scalar(self, name: str) -> Affine:
        return self.add_variable(name, 1, real=True).expr

    def add_eq(self, lhs, rhs=0.0, label: str = "") -> None:
        lhs = as_affine(lhs)
        self.eq_constraints.append((lhs - as_affine(rhs, lhs.shape), label))
        self._compiled = None

    def add_ge(self, lhs, rhs=0.0, label: str = "") -> None:
        """Scalar inequality ``lhs >= rhs``."""
        d = as_affine(lhs) - as_affine(rhs)
        if d.shape != (1, 1):
            raise ValueError("add_ge takes scalar expressions; use add_psd for matrices")
        self.ineq_constraints.append((d, label))
        self._compiled = None

    def add_psd(self, expr, label: str = "") -> None:
        expr = as_affine(expr)
        if expr.shape[0] != expr.shape[1]:
            raise ValueError("LMI block must be square")
        self.psd_constraints.append((expr, label))
        self._compiled = None

    def set_objective(self, expr) -> None:
        """Replace the objective; compiled constraint data is kept."""
        expr = as_affine(expr)
        if expr.shape != (1, 1):
            raise ValueError("objective must be scalar")
        self.objective = expr
        if self._compiled is not None:
            self._compiled.c, self._compiled.objective_const = self._objective_vector(self._compiled.offsets)

    # -- compilation -------------------------------------------------------
    def _stack(self, expr: Affine, offsets, n) -> sp.csr_matrix:
        mats = []
        for v in self.variables:
            if v in expr.terms:
                mats.append(expr.terms[v])
            else:
                mats.append(sp.csr_matrix((expr.size, v.nparams)))
        return sp.hstack(mats, format="csr") if mats else sp.csr_matrix((expr.size, n))

    def _objective_vector(self, offsets):
        n = sum(v.nparams for v in self.variables)
        row = self._stack(self.objective, offsets, n).toarray().ravel()
        sign = -1.0 if self.sense == "maximize" else 1.0
        return sign * row.real, float(self.objective.const.real[0])

    def compile(self) -> ConicProgram:
        if self._compiled is not None:
            return self._compiled
        offsets, n = {}, 0
        for v in self.variables:
            offsets[v.name] = (n, v.nparams)
            n += v.nparams

        a_rows, b_vals = [], []
        for expr, label in self.eq_constraints:
            coef = self._stack(expr, offsets, n)
            p, q = expr.shape
            if p == q and p > 1:
                iu = [(i, j) for i in range(p) for j in range(i, p)]
                idx = np.array([i * q + j for i, j in iu])
                off = np.array([i * q + j for i, j in iu if i != j], dtype=int)
                sub_re = coef[idx].real
                sub_im = coef[off].imag if off.size else sp.csr_matrix((0, n))
                rows = sp.vstack([sub_re, sub_im], format="csr")
                rhs = -np.concatenate([expr.const[idx].real, expr.const[off].imag if off.size else []])
            else:
                rows = sp.vstack([coef.real, coef.imag], format="csr")
                rhs = -np.concatenate([expr.const.real, expr.const.imag])
            rows.eliminate_zeros()
            keep = np.diff(rows.indptr) > 0
            if np.any(np.abs(rhs[~keep]) > 1e-12):
                raise ValueError(f"equality {label!r} is inconsistent")
            a_rows.append(rows[keep])
            b_vals.append(rhs[keep])

        g_blocks, h_blocks = [], []
        l_dim = 0
        for expr, _ in self.ineq_constraints:
            coef = self._stack(expr, offsets, n)
            g_blocks.append(-coef.real)
            h_blocks.append(expr.const.real)
            l_dim += 1
        s_dims = []
        for expr, _ in self.psd_constraints:
            coef = self._stack(expr, offsets, n)
            p = expr.shape[0]
            if expr.is_real():
                # symmetric blocks: row-major vec coincides with column-major vec
                g_blocks.append(-coef.real)
                h_blocks.append(expr.const.real)
                s_dims.append(p)
            else:
                emb = _embedding_map(p)
                stacked = sp.vstack([coef.real, coef.imag], format="csr")
                g_blocks.append(-(emb @ stacked))
                h_blocks.append(emb @ np.concatenate([expr.const.real, expr.const.imag]))
                s_dims.append(2 * p)

        G = sp.vstack(g_blocks, format="csr") if g_blocks else sp.csr_matrix((0, n))
        G.eliminate_zeros()
        h = np.concatenate(h_blocks) if h_blocks else np.zeros(0)
        A = sp.vstack(a_rows, format="csr") if a_rows else sp.csr_matrix((0, n))
        b = np.concatenate(b_vals) if b_vals else np.zeros(0)
        c, const = self._objective_vector(offsets)
        self._compiled = ConicProgram(
            c=c, G=G, h=h, dims={"l": l_dim, "q": [], "s": s_dims}, A=A, b=b,
            offsets=offsets, objective_sign=-1.0 if self.sense == "maximize" else 1.0,
            objective_const=const,
        )
        return self._compiled

    # -- solving -----------------------------------------------------------
    def solve(self, backend: str = "ipm", **options) -> SdpSolution:
        prog = self.compile()
        if backend == "ipm":
            opts = dict(SOLVER_OPTIONS)
            opts.update(options)
            res = ipm.solve(prog.c, prog.G, prog.h, prog.dims, prog.A, prog.b, **opts)
        elif backend == "cvxopt":
            import cvxopt

            opts = dict(CVXOPT_OPTIONS)
            opts.update(options)
            res = cvxopt.solvers.conelp(
                cvxopt.matrix(prog.c), _to_spmatrix(prog.G), cvxopt.matrix(prog.h), prog.dims,
                _to_spmatrix(prog.A), cvxopt.matrix(prog.b), options=opts,
            )
        else:
            raise ValueError(f"unknown backend {backend!r}")
        return self._decode(prog, res)

    def _decode(self, prog: ConicProgram, res: dict) -> SdpSolution:
        raw = res["status"]
        if raw in ("primal infeasible", "dual infeasible"):
            # dual infeasibility means an unbounded objective: not a usable answer here
            status = "infeasible" if raw == "primal infeasible" else "numerical_failure"
            return SdpSolution({}, float("nan"), float("nan"), status, iterations=int(res.get("iterations", 0)))
        if res["x"] is None:
            return SdpSolution({}, float("nan"), float("nan"), "numerical_failure", iterations=int(res.get("iterations", 0)))
        x = np.array(res["x"]).ravel()
        values, scalars = {}, {}
        for v in self.variables:
            start, k = prog.offsets[v.name]
            values[v.name] = v.decode(x[start:start + k])
            if v.dim == 1:
                scalars[v.name] = float(values[v.name][0, 0].real)
        sign = prog.objective_sign
        pobj = sign * res["primal objective"] + prog.objective_const
        dobj = sign * res["dual objective"] + prog.objective_const
        gap = max(abs(pobj - dobj), abs(res["gap"]))
        pres = res["primal infeasibility"] or 0.0
        dres = res["dual infeasibility"] or 0.0
        if gap <= GAP_TOL and pres <= FEAS_TOL and dres <= FEAS_TOL:
            status = "optimal"
        elif gap <= NEAR_TOL * max(1.0, abs(pobj)) and pres <= NEAR_TOL and dres <= NEAR_TOL:
            status = "near_optimal"
        else:
            status = "numerical_failure"
        return SdpSolution(
            values=values, objective_value=pobj, duality_gap=gap, status=status,
            primal_residual=pres, dual_residual=dres, dual_objective=dobj,
            iterations=int(res.get("iterations", 0)), scalars=scalars,
        )

    # -- debugging ---------------------------------------------------------
    def dump(self, stream: io.TextIOBase | None = None) -> str:
        """Render the compiled real program as plain-text triplets (see README for the format)."""
        prog = self.compile()
        out = io.StringIO()
        out.write("# cvnecert conic program v1\n")
        out.write(f"sense {self.sense}\n")
        for v in self.variables:
            start, k = prog.offsets[v.name]
            out.write(f"var {v.name} {v.dim} {'real' if v.real else 'complex'} {start} {k}\n")
        out.write(f"dims l={prog.dims['l']} s={','.join(map(str, prog.dims['s']))} eq={prog.A.shape[0]}\n")
        out.write(f"objective_const {float(prog.objective_const)!r}\n")
        for i in np.flatnonzero(prog.c):
            out.write(f"c {i} {float(prog.c[i])!r}\n")
        for name, mat in (("G", prog.G), ("A", prog.A)):
            coo = mat.tocoo()
            for r, col, val in sorted(zip(coo.row, coo.col, coo.data)):
                out.write(f"{name} {r} {col} {float(val)!r}\n")
        for name, vec in (("h", prog.h), ("b", prog.b)):
            for i in np.flatnonzero(vec):
                out.write(f"{name} {i} {float(vec[i])!r}\n")
        text = out.getvalue()
        if stream is not None:
            stream.write(text)
        return text


def complex_to_real_embed(p: SdpProblem) -> ConicProgram:
    """The real symmetric program equivalent to ``p`` (complex LMIs doubled in size)."""
    return p.compile()


@dataclass
class _Cached:
    maps: dict = field(default_factory=dict)


_EMB = _Cached()


def _embedding_map(p: int) -> sp.csr_matrix:
    """Map ``[vec_r(Re M); vec_r(Im M)] -> vec_col(embed_hermitian(M))``."""
    if p in _EMB.maps:
        return _EMB.maps[p]
    n2 = 2 * p
    rows, cols, vals = [], [], []
    for i in range(p):
        for j in range(p):
            re, im = i * p + j, p * p + i * p + j
            # column-major index of (r, c) in a 2p x 2p block is c * 2p + r
            rows += [j * n2 + i, (j + p) * n2 + (i + p), j * n2 + (i + p), (j + p) * n2 + i]
            cols += [re, re, im, im]
            vals += [1.0, 1.0, 1.0, -1.0]
    m = sp.csr_matrix((vals, (rows, cols)), shape=(n2 * n2, 2 * p * p))
    _EMB.maps[p] = m
    return m


def _to_spmatrix(m: sp.spmatrix):
    import cvxopt

    coo = m.tocoo()
    return cvxopt.spmatrix(coo.data.astype(float).tolist(), coo.row.tolist(), coo.col.tolist(), size=m.shape)


# -- density-matrix and POVM helpers --------------------------------------

def add_density_variable(p: SdpProblem, d_A: int, d_B: int, name: str = "rho", real: bool = False) -> Variable:
    """PSD unit-trace variable on C^d_A (x) C^d_B."""
    rho = p.add_variable(name, d_A * d_B, real=real, psd=True)
    p.add_eq(rho.expr.trace(), 1.0, f"Tr {name} = 1")
    return rho


def add_povm_variables(
    p: SdpProblem, settings: int, outcomes: int, dim: int, name: str = "M", real: bool = False
) -> list[list[Variable]]:
    """Per setting, ``outcomes`` PSD variables summing to the identity."""
    handles = []
    for x in range(settings):
        elems = [p.add_variable(f"{name}{x}_{a}", dim, real=real, psd=True) for a in range(outcomes)]
        p.add_eq(sum((e.expr for e in elems[1:]), elems[0].expr), np.eye(dim), f"{name}{x} complete")
        handles.append(elems)
    return handles


def variables_named(solution: SdpSolution, names: Iterable[str]) -> list[np.ndarray]:
    return [solution.values[n] for n in names]
