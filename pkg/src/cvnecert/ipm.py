"""Primal-dual interior-point method for real cone LPs with PSD blocks.

Solves ``min c'x  s.t.  G x + s = h,  A x = b,  s in K`` together with its dual
``max -h'z - b'y  s.t.  G'z + A'y + c = 0,  z in K`` where K is a product of a
nonnegative orthant and real PSD cones.  Cone vectors store each PSD block as
a full symmetric matrix (column-major, which for symmetric blocks is the same
as row-major), so the cone inner product is the plain dot product.

Infeasible-start path following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step.  Scalings are updated multiplicatively in the scaled
space, which keeps the Cholesky factors well conditioned close to the
boundary.  The Newton systems are reduced to dense normal equations whose
PSD-block contributions ``Tr(A_i R A_j R)`` are assembled directly from the
nonzeros of G; the constraint columns here are very sparse, so this is much
cheaper than scaling every column.

Normal equations square the conditioning of the scaled problem, so accuracy
saturates around 1e-8 on degenerate instances.  The best iterate seen is
kept and returned when progress stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

DEFAULTS = {
    "abstol": 1e-7,
    "reltol": 1e-8,
    "feastol": 1e-8,
    "maxiters": 100,
    "step": 0.99,
    "stall": 4,
    "verbose": False,
}
CHUNK_ENTRIES = 1 << 24


class KKTFailure(ArithmeticError):
    pass


@dataclass
class _Scaling:
    d: np.ndarray          # orthant: W u = d * u
    lam_l: np.ndarray
    r: list                # PSD: W U = r' U r
    rti: list              # inverse transpose of r
    lam: list              # eigenvalues of the scaled point


class _Cone:
    def __init__(self, dims: dict):
        self.l = int(dims.get("l", 0))
        if dims.get("q"):
            raise ValueError("second-order cones are not supported")
        self.s = [int(s) for s in dims.get("s", [])]
        self.offsets = []
        off = self.l
        for s in self.s:
            self.offsets.append(off)
            off += s * s
        self.size = off
        self.degree = self.l + sum(self.s)

    def split(self, v: np.ndarray):
        return v[: self.l], [v[o:o + s * s].reshape(s, s) for o, s in zip(self.offsets, self.s)]

    def join(self, vl, blocks) -> np.ndarray:
        out = np.empty(self.size)
        out[: self.l] = vl
        for o, s, m in zip(self.offsets, self.s, blocks):
            out[o:o + s * s] = m.ravel()
        return out

    def identity(self) -> np.ndarray:
        return self.join(np.ones(self.l), [np.eye(s) for s in self.s])

    def min_eig(self, v) -> float:
        vl, blocks = self.split(v)
        vals = [vl.min()] if self.l else []
        vals += [np.linalg.eigvalsh(_sym(m))[0] for m in blocks]
        return min(vals) if vals else 0.0


def _sym(m):
    return 0.5 * (m + m.T)


class _NormalEquations:
    """Factorises and solves the scaled KKT system for a fixed sparsity pattern."""

    def __init__(self, G: sp.csr_matrix, A: sp.csr_matrix, cone: _Cone):
        self.G, self.A, self.cone = G, A, cone
        self.GT = G.T.tocsr()
        self.n = G.shape[1]
        self.Gl = G[: cone.l].tocsr()
        self.Ad = A.toarray()
        self.AtA = self.Ad.T @ self.Ad
        self.blocks = []
        for o, s in zip(cone.offsets, cone.s):
            gb = G[o:o + s * s].tocoo()
            cols, inv = np.unique(gb.col, return_inverse=True)
            # stacked coefficient matrices: rows (i, a), columns b
            stack = sp.csr_matrix((gb.data, (inv * s + gb.row // s, gb.row % s)), shape=(len(cols) * s, s))
            iu, ju = np.triu_indices(s)
            wt = np.where(iu == ju, 1.0, np.sqrt(2.0))
            self.blocks.append((s, cols, stack, iu, ju, wt))

    def factor(self, W: _Scaling):
        n = self.n
        H = np.zeros((n, n))
        if self.cone.l:
            gl = sp.diags(1.0 / W.d) @ self.Gl
            H += (gl.T @ gl).toarray()
        R = []
        for (s, cols, stack, iu, ju, wt), rti in zip(self.blocks, W.rti):
            R.append(rti @ rti.T)
            nc = len(cols)
            step = max(1, CHUNK_ENTRIES // (s * s))
            gp = np.empty((nc, len(iu)))
            for start in range(0, nc, step):
                stop = min(nc, start + step)
                y = (stack[start * s:stop * s] @ rti).reshape(stop - start, s, s)
                # packed rows of W^{-T} G: rti' A_i rti
                gp[start:stop] = np.matmul(rti.T, y)[:, iu, ju] * wt
            H[np.ix_(cols, cols)] += gp @ gp.T
        H = _sym(H)
        scale = max(np.mean(np.diag(H)), 1e-300)
        gamma = scale / max(np.mean(np.diag(self.AtA)), 1e-300) if self.Ad.shape[0] else 0.0
        Hr = H + gamma * self.AtA
        reg = 0.0
        for _ in range(8):
            try:
                L = sla.cho_factor(Hr + reg * scale * np.eye(n) if reg else Hr, lower=True)
                break
            except np.linalg.LinAlgError:
                reg = 1e-14 if reg == 0 else reg * 100
        else:
            raise KKTFailure("normal equations not positive definite")
        p = self.Ad.shape[0]
        S = None
        if p:
            HiAt = sla.cho_solve(L, self.Ad.T)
            S = self.Ad @ HiAt
            S = sla.lu_factor(_sym(S))
        return (W, R, L, S, gamma)

    def _wtw_inv(self, F, v):
        W, R = F[0], F[1]
        vl, blocks = self.cone.split(v)
        return self.cone.join(vl / W.d**2, [r @ _sym(m) @ r for r, m in zip(R, blocks)])

    def _raw_solve(self, F, bx, by, bz):
        W, R, L, S, gamma = F
        rx = bx + self.GT @ self._wtw_inv(F, bz)
        if S is not None:
            rhs = rx + gamma * (self.Ad.T @ by)
            t = sla.cho_solve(L, rhs)
            uy = sla.lu_solve(S, self.Ad @ t - by)
            ux = sla.cho_solve(L, rhs - self.Ad.T @ uy)
        else:
            uy = np.zeros(0)
            ux = sla.cho_solve(L, rx)
        # W uz = W^{-T} (G ux - bz), applied directly rather than through (W'W)^{-1}
        return ux, uy, _apply_inv_t(self.cone, W, self.G @ ux - bz)

    def solve(self, F, bx, by, bz, refine: int = 2):
        """Return ``(ux, uy, W uz)`` for the unscaled KKT system."""
        W = F[0]
        ux, uy, wz = self._raw_solve(F, bx, by, bz)
        for _ in range(refine):
            r1 = bx - self.A.T @ uy - self.GT @ _apply_inv(self.cone, W, wz)
            r2 = by - self.A @ ux
            r3 = bz - self.G @ ux + _apply_t(self.cone, W, wz)
            dx, dy, dwz = self._raw_solve(F, r1, r2, r3)
            ux, uy, wz = ux + dx, uy + dy, wz + dwz
        return ux, uy, wz


def _apply(cone, W, v):
    vl, blocks = cone.split(v)
    return cone.join(W.d * vl, [r.T @ m @ r for r, m in zip(W.r, blocks)])


def _apply_inv(cone, W, v):
    vl, blocks = cone.split(v)
    return cone.join(vl / W.d, [t @ m @ t.T for t, m in zip(W.rti, blocks)])


def _apply_inv_t(cone, W, v):
    vl, blocks = cone.split(v)
    return cone.join(vl / W.d, [t.T @ _sym(m) @ t for t, m in zip(W.rti, blocks)])


def _apply_t(cone, W, v):
    vl, blocks = cone.split(v)
    return cone.join(W.d * vl, [r @ m @ r.T for r, m in zip(W.r, blocks)])


def _lam_vec(cone, W):
    return cone.join(W.lam_l, [np.diag(l) for l in W.lam])


def _lam_prod(cone, W, v):
    vl, blocks = cone.split(v)
    return cone.join(W.lam_l * vl, [0.5 * (l[:, None] + l[None, :]) * m for l, m in zip(W.lam, blocks)])


def _lam_div(cone, W, v):
    vl, blocks = cone.split(v)
    return cone.join(vl / W.lam_l, [2.0 * m / (l[:, None] + l[None, :]) for l, m in zip(W.lam, blocks)])


def _sprod(cone, u, v):
    ul, ub = cone.split(u)
    vl, vb = cone.split(v)
    return cone.join(ul * vl, [_sym(a @ b) for a, b in zip(ub, vb)])


def _max_step(cone, W, v) -> float:
    """Largest alpha with lambda + alpha v in the cone."""
    vl, blocks = cone.split(v)
    alpha = np.inf
    if cone.l:
        neg = vl < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(-W.lam_l[neg] / vl[neg])))
    for l, m in zip(W.lam, blocks):
        isq = 1.0 / np.sqrt(l)
        e = np.linalg.eigvalsh(_sym(isq[:, None] * m * isq[None, :]))[0]
        if e < 0:
            alpha = min(alpha, -1.0 / e)
    return alpha


def _initial_scaling(cone, s, z) -> _Scaling:
    sl, sb = cone.split(s)
    zl, zb = cone.split(z)
    r, rti, lam = [], [], []
    for S, Z in zip(sb, zb):
        ls = np.linalg.cholesky(_sym(S))
        lz = np.linalg.cholesky(_sym(Z))
        U, sv, Vt = np.linalg.svd(lz.T @ ls)
        isq = 1.0 / np.sqrt(sv)
        r.append(ls @ Vt.T * isq)
        rti.append(lz @ U * isq)
        lam.append(sv)
    return _Scaling(np.sqrt(sl / zl), np.sqrt(sl * zl), r, rti, lam)


def _update_scaling(cone, W, s_t, z_t) -> _Scaling:
    """Compose W with the NT scaling of the scaled pair (s_t, z_t)."""
    sl, sb = cone.split(s_t)
    zl, zb = cone.split(z_t)
    r, rti, lam = [], [], []
    for S, Z, r0, t0 in zip(sb, zb, W.r, W.rti):
        ls = np.linalg.cholesky(_sym(S))
        lz = np.linalg.cholesky(_sym(Z))
        U, sv, Vt = np.linalg.svd(lz.T @ ls)
        isq = 1.0 / np.sqrt(sv)
        r.append(r0 @ (ls @ Vt.T * isq))
        rti.append(t0 @ (lz @ U * isq))
        lam.append(sv)
    return _Scaling(W.d * np.sqrt(sl / zl), np.sqrt(sl * zl), r, rti, lam)


def _independent_rows(A: sp.csr_matrix, b: np.ndarray, tol: float = 1e-10):
    """Indices of a maximal independent row subset of A and whether the dropped rows are consistent."""
    m = A.shape[0]
    if m == 0:
        return np.arange(0), True
    ad = A.toarray()
    _, r, piv = sla.qr(ad.T, mode="economic", pivoting=True)
    d = np.abs(np.diag(r))
    rank = int(np.sum(d > tol * max(d[0], 1.0))) if len(d) else 0
    keep = np.sort(piv[:rank])
    if rank == m:
        return keep, True
    drop = np.setdiff1d(np.arange(m), keep)
    coef = np.linalg.lstsq(ad[keep].T, ad[drop].T, rcond=None)[0]
    consistent = np.allclose(coef.T @ b[keep], b[drop], atol=1e-9 * max(1.0, np.abs(b).max()))
    return keep, consistent


def solve(c, G, h, dims, A=None, b=None, **options) -> dict:
    """Solve the cone LP; returns a CVXOPT-style result dictionary.

    Linearly dependent equality rows are removed first (their multipliers are
    reported as zero); inconsistent ones make the problem primal infeasible.
    """
    G = sp.csr_matrix(G)
    n = G.shape[1]
    A = sp.csr_matrix((0, n)) if A is None else sp.csr_matrix(A)
    b = np.zeros(0) if b is None else np.asarray(b, float)
    keep, consistent = _independent_rows(A, b)
    if not consistent:
        return {"status": "primal infeasible", "x": None, "y": None, "s": None, "z": None, "iterations": 0}
    if len(keep) == A.shape[0]:
        return _solve(c, G, h, dims, A, b, **options)
    res = _solve(c, G, h, dims, A[keep], b[keep], **options)
    if res.get("y") is not None:
        y = np.zeros(A.shape[0])
        y[keep] = res["y"]
        res["y"] = y
    return res


def _solve(c, G, h, dims, A, b, **options) -> dict:
    opts = dict(DEFAULTS)
    opts.update(options)
    n = G.shape[1]
    c = np.asarray(c, float)
    h = np.asarray(h, float)
    cone = _Cone(dims)
    if cone.size != G.shape[0]:
        raise ValueError("dims do not match the rows of G")
    ne = _NormalEquations(G, A, cone)
    e = cone.identity()
    resx0, resy0, resz0 = max(1.0, np.linalg.norm(c)), max(1.0, np.linalg.norm(b)), max(1.0, np.linalg.norm(h))

    def result(status, it, best):
        if best is None:
            return {"status": status, "x": None, "y": None, "s": None, "z": None, "iterations": it}
        out = dict(best)
        out["status"] = status
        out["iterations"] = it
        return out

    try:
        W0 = _initial_scaling(cone, e, e)
        F0 = ne.factor(W0)
        x, y, u = ne.solve(F0, np.zeros(n), b, h)
        s = -u
        _, y, z = ne.solve(F0, -c, np.zeros(len(b)), np.zeros(cone.size))
    except (KKTFailure, np.linalg.LinAlgError):
        return result("unknown", 0, None)
    for v in (s, z):
        t = -cone.min_eig(v)
        if t >= -1e-8 * max(np.linalg.norm(v), 1.0):
            v += (1.0 + t) * e
    try:
        W = _initial_scaling(cone, s, z)
    except np.linalg.LinAlgError:
        return result("unknown", 0, None)

    best, best_score, since_best = None, np.inf, 0
    for it in range(opts["maxiters"] + 1):
        lam = _lam_vec(cone, W)
        s = _apply_t(cone, W, lam)
        z = _apply_inv(cone, W, lam)
        gap = float(lam @ lam)
        mu = gap / cone.degree
        pcost, dcost = float(c @ x), float(-h @ z - b @ y)
        rx = ne.GT @ z + A.T @ y + c
        ry = A @ x - b
        rz = G @ x + s - h
        pres = max(np.linalg.norm(rz) / resz0, np.linalg.norm(ry) / resy0 if len(b) else 0.0)
        dres = np.linalg.norm(rx) / resx0
        if pcost < 0:
            relgap = gap / -pcost
        elif dcost > 0:
            relgap = gap / dcost
        else:
            relgap = None
        snap = {
            "x": x.copy(), "y": y.copy(), "s": s.copy(), "z": z.copy(),
            "primal objective": pcost, "dual objective": dcost, "gap": gap, "relative gap": relgap,
            "primal infeasibility": pres, "dual infeasibility": dres,
        }
        gap_score = gap / opts["abstol"] if relgap is None else min(gap / opts["abstol"], relgap / opts["reltol"])
        score = max(pres / opts["feastol"], dres / opts["feastol"], gap_score)
        if score < best_score:
            if score < 0.5 * best_score:
                since_best = 0
            best, best_score = snap, score
        else:
            since_best += 1
        if opts.get("verbose"):
            print(f"{it:3d} {pcost: .8e} {dcost: .8e} {gap:.1e} {pres:.1e} {dres:.1e}")
        if score <= 1.0:
            return result("optimal", it, best)
        # infeasibility certificates
        hz = float(h @ z + b @ y)
        if hz < 0 and np.linalg.norm(rx - c) / resx0 <= opts["feastol"] * -hz:
            return result("primal infeasible", it, None)
        if pcost < 0 and max(np.linalg.norm(rz + h) / resz0, np.linalg.norm(ry + b) / resy0) <= opts["feastol"] * -pcost:
            return result("dual infeasible", it, None)
        if it == opts["maxiters"] or since_best >= opts["stall"]:
            break
        try:
            F = ne.factor(W)
            # predictor
            ds = -_lam_prod(cone, W, lam)
            dx, dy, wz = ne.solve(F, -rx, -ry, -rz - _apply_t(cone, W, _lam_div(cone, W, ds)))
            ws = _lam_div(cone, W, ds) - wz
            a_aff = min(1.0, _max_step(cone, W, ws), _max_step(cone, W, wz))
            gap_aff = float((lam + a_aff * ws) @ (lam + a_aff * wz))
            sigma = min(1.0, max(0.0, gap_aff / gap)) ** 3
            # corrector
            ds = -_lam_prod(cone, W, lam) - _sprod(cone, ws, wz) + sigma * mu * e
            eta = 1.0 - sigma
            dx, dy, wz = ne.solve(F, -eta * rx, -eta * ry, -eta * rz - _apply_t(cone, W, _lam_div(cone, W, ds)))
            ws = _lam_div(cone, W, ds) - wz
            alpha = min(1.0, opts["step"] * min(_max_step(cone, W, ws), _max_step(cone, W, wz)))
            if alpha < 1e-12:
                break
            x = x + alpha * dx
            y = y + alpha * dy
            W = _update_scaling(cone, W, lam + alpha * ws, lam + alpha * wz)
        except (KKTFailure, np.linalg.LinAlgError, FloatingPointError):
            break
    return result("unknown", it, best)
