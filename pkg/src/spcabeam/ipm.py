"""Primal-dual interior-point solver for standard-form cone programs.

Solves

    minimize    c'x
    subject to  A x + s = b,   s in K

with K a product of zero cones, nonnegative orthants and second-order
cones, via the homogeneous self-dual embedding: zero-cone rows become an
equality block with free multipliers, the remaining rows keep symmetric
cone slacks, and the embedding variables (tau, kappa) certify optimality
or infeasibility.  Search directions use Nesterov-Todd scaling with a
Mehrotra predictor-corrector step.  Each iteration factorizes one
statically regularized quasi-definite KKT matrix (second-order-cone
scaling blocks are kept sparse through the standard diagonal-plus-rank-two
expansion) with sparse LU, and every linear solve is polished by iterative
refinement against the exact KKT operator.

The module also provides :func:`residuals`, an independent recomputation
of all optimality/certificate quantities straight from the program data;
tests use it as the trust anchor for the solve path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .cones import NONNEG, SOC, ZERO, ConicProgram, validate
from .errors import ProgramError, SolverError

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal-infeasible"
DUAL_INFEASIBLE = "dual-infeasible"
MAX_ITERATIONS = "max-iterations"
NUMERICAL_FAILURE = "numerical-failure"

_STEP_CAP = 1e16


@dataclass
class SolverSettings:
    max_iterations: int = 100
    feas_tol: float = 1e-8
    gap_tol: float = 1e-8
    static_reg: float = 1e-8
    refine_rounds: int = 3
    step_fraction: float = 0.99

    def check(self) -> None:
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        for name in ("feas_tol", "gap_tol", "static_reg"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if not 0 < self.step_fraction < 1:
            raise ValueError("step_fraction must be in (0, 1)")


@dataclass
class Solution:
    """Result of a conic solve.

    On ``optimal`` the fields hold the primal/dual pair.  On
    ``primal-infeasible`` ``y`` holds the normalized Farkas certificate
    (A'y = 0, y in K*, b'y = -1).  On ``dual-infeasible`` ``x`` and ``s``
    hold the unboundedness certificate (Ax + s = 0, s in K, c'x = -1).
    """

    x: np.ndarray
    y: np.ndarray
    s: np.ndarray
    status: str
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    gap: float = np.nan
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    iterations: int = 0
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# composite symmetric cone (orthant x SOCs), vectorized operations


class _ConeOps:
    """Vectorized Jordan-algebra and scaling operations for R+^l x SOCs."""

    def __init__(self, l: int, soc_dims: list[int]):
        self.l = l
        self.dims = np.asarray(soc_dims, dtype=int)
        self.nsoc = len(soc_dims)
        self.m = l + int(self.dims.sum())
        if self.nsoc:
            rel = np.concatenate(([0], np.cumsum(self.dims)[:-1]))
            self.heads = l + rel          # absolute head indices
            self.rel_starts = rel         # starts within the SOC-packed part
        else:
            self.heads = np.zeros(0, dtype=int)
            self.rel_starts = np.zeros(0, dtype=int)
        self.degree = l + self.nsoc
        e = np.zeros(self.m)
        e[:l] = 1.0
        e[self.heads] = 1.0
        self.e = e

    # segment reductions over the SOC-packed tail part ----------------------

    def _reduce(self, arr: np.ndarray) -> np.ndarray:
        if not self.nsoc:
            return np.zeros(0)
        return np.add.reduceat(arr, self.rel_starts)

    def _rep(self, per_cone: np.ndarray) -> np.ndarray:
        return np.repeat(per_cone, self.dims)

    def soc_residual(self, u: np.ndarray) -> np.ndarray:
        """Per-SOC hyperbolic residual u1^2 - ||u_tail||^2."""
        us = u[self.l:]
        return 2.0 * u[self.heads] ** 2 - self._reduce(us * us)

    def min_eig(self, u: np.ndarray) -> float:
        """Distance-to-boundary measure; > 0 iff strictly interior."""
        vals = []
        if self.l:
            vals.append(float(np.min(u[:self.l])))
        if self.nsoc:
            heads = u[self.heads]
            us = u[self.l:]
            tail_sq = np.maximum(self._reduce(us * us) - heads ** 2, 0.0)
            vals.append(float(np.min(heads - np.sqrt(tail_sq))))
        return min(vals) if vals else np.inf

    def jprod(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Jordan product u o v."""
        out = np.empty(self.m)
        out[:self.l] = u[:self.l] * v[:self.l]
        if self.nsoc:
            us, vs = u[self.l:], v[self.l:]
            dots = self._reduce(us * vs)
            u1, v1 = u[self.heads], v[self.heads]
            out[self.l:] = self._rep(u1) * vs + self._rep(v1) * us
            out[self.heads] = dots
        return out

    def jsolve(self, lam: np.ndarray, d: np.ndarray) -> np.ndarray:
        """Solve lam o u = d for u (arrow-matrix inverse per cone)."""
        out = np.empty(self.m)
        out[:self.l] = d[:self.l] / lam[:self.l]
        if self.nsoc:
            ls, ds = lam[self.l:], d[self.l:]
            l1, d1 = lam[self.heads], d[self.heads]
            res = self.soc_residual(lam)
            dot = self._reduce(ls * ds)
            tail_dot = dot - l1 * d1              # lam_tail . d_tail
            u1 = (l1 * d1 - tail_dot) / res
            out[self.l:] = (ds - self._rep(u1) * ls) / self._rep(l1)
            out[self.heads] = u1
        return out

    def _jflip(self, v: np.ndarray) -> np.ndarray:
        """Reflection J v = (v1, -v_tail) applied per SOC."""
        out = v.copy()
        out[self.l:] = -out[self.l:]
        out[self.heads] = v[self.heads]
        return out


class _Scaling:
    """Nesterov-Todd scaling point for the composite cone."""

    def __init__(self, ops: _ConeOps, s: np.ndarray | None = None,
                 z: np.ndarray | None = None):
        self.ops = ops
        if s is None:
            # identity scaling (used for initialization solves)
            self.w_lin = np.ones(ops.l)
            self.eta = np.ones(ops.nsoc)
            self.wbar = ops.e[ops.l:].copy()
            self.lam = ops.e.copy()
            return
        if ops.min_eig(s) <= 0 or ops.min_eig(z) <= 0:
            raise FloatingPointError("scaling point left the cone interior")
        self.w_lin = np.sqrt(s[:ops.l] / z[:ops.l])
        if ops.nsoc:
            sres = ops.soc_residual(s)
            zres = ops.soc_residual(z)
            if np.any(sres <= 0) or np.any(zres <= 0):
                raise FloatingPointError("degenerate second-order-cone iterate")
            snorm, znorm = np.sqrt(sres), np.sqrt(zres)
            sb = s[ops.l:] / ops._rep(snorm)
            zb = z[ops.l:] / ops._rep(znorm)
            sb1, zb1 = s[ops.heads] / snorm, z[ops.heads] / znorm
            # wbar = (sbar + J zbar)/(2 gamma), gamma^2 = (1 + sbar'zbar)/2,
            # the unique unit-residual point with W^2 z = s
            dot = ops._reduce(sb * zb)
            gamma = np.sqrt((1.0 + dot) / 2.0)
            wbar = (sb - zb) / ops._rep(2.0 * gamma)
            wbar[ops.heads - ops.l] = (sb1 + zb1) / (2.0 * gamma)
            self.wbar = wbar
            self.eta = (sres / zres) ** 0.25
        else:
            self.wbar = np.zeros(0)
            self.eta = np.zeros(0)
        self.lam = self.apply(z)

    def _wbar_apply(self, v: np.ndarray) -> np.ndarray:
        """Multiply the SOC part by the symmetric hyperbolic rotation.

        Uses Wbar v = v + alpha*wbar + beta*e1 with
        alpha = v1 + t, beta = -v1 + t, t = (q'v_tail)/(1+a).
        """
        ops = self.ops
        vs = v[ops.l:].copy()
        a = self.wbar[ops.heads - ops.l]
        v1 = v[ops.heads]
        dot = ops._reduce(self.wbar * vs)
        t = (dot - a * v1) / (1.0 + a)
        alpha = v1 + t
        beta = -v1 + t
        vs += ops._rep(alpha) * self.wbar
        vs[ops.heads - ops.l] += beta
        return vs

    def apply(self, v: np.ndarray) -> np.ndarray:
        """W v."""
        ops = self.ops
        out = np.empty(ops.m)
        out[:ops.l] = self.w_lin * v[:ops.l]
        if ops.nsoc:
            out[ops.l:] = ops._rep(self.eta) * self._wbar_apply(v)
        return out

    def apply_inv(self, v: np.ndarray) -> np.ndarray:
        """W^{-1} v, using Wbar^{-1} = J Wbar J."""
        ops = self.ops
        out = np.empty(ops.m)
        out[:ops.l] = v[:ops.l] / self.w_lin
        if ops.nsoc:
            flipped = ops._jflip(v)
            wv = np.empty(ops.m)
            wv[ops.l:] = self._wbar_apply(flipped)
            wv[:ops.l] = 0.0
            jwv = ops._jflip(wv)
            out[ops.l:] = jwv[ops.l:] / ops._rep(self.eta)
        return out

    def apply_sq(self, v: np.ndarray) -> np.ndarray:
        """W^2 v (exact, used by iterative refinement)."""
        return self.apply(self.apply(v))


def _max_step(ops: _ConeOps, u: np.ndarray, du: np.ndarray) -> float:
    """Largest alpha >= 0 with u + alpha*du in K (u strictly interior)."""
    alpha = _STEP_CAP
    if ops.l:
        neg = du[:ops.l] < 0
        if neg.any():
            alpha = min(alpha, float(np.min(-u[:ops.l][neg] / du[:ops.l][neg])))
    if ops.nsoc:
        us, dus = u[ops.l:], du[ops.l:]
        u1, d1 = u[ops.heads], du[ops.heads]
        a = 2.0 * d1 ** 2 - ops._reduce(dus * dus)
        b = 2.0 * (2.0 * u1 * d1 - ops._reduce(us * dus))
        cc = np.maximum(ops.soc_residual(u), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            disc = b * b - 4.0 * a * cc
            sq = np.sqrt(np.maximum(disc, 0.0))
            r1 = (-b - sq) / (2.0 * a)
            r2 = (-b + sq) / (2.0 * a)
            lo = np.minimum(r1, r2)
            hi = np.maximum(r1, r2)
            lin = -cc / b
        for k in range(ops.nsoc):
            if abs(a[k]) < 1e-14 * (abs(b[k]) + 1.0):
                cand = lin[k] if b[k] < 0 else _STEP_CAP
            elif a[k] < 0:
                cand = hi[k]
            else:  # opens upward; blocks only if both roots positive
                cand = lo[k] if (disc[k] >= 0 and lo[k] > 0) else _STEP_CAP
            if d1[k] < 0:
                cand = min(cand, -u1[k] / d1[k])
            if np.isfinite(cand) and cand >= 0:
                alpha = min(alpha, float(cand))
    return alpha


# ---------------------------------------------------------------------------
# KKT system


class _KKT:
    """Regularized quasi-definite KKT matrix with fixed sparsity pattern.

        [ +d*I   Aeq'    G'     .  ]
        [ Aeq    -d*I    .      .  ]
        [ G       .     -W^2-d  E  ]
        [ .       .      E'     D  ]

    The (3,3)/(3,4)/(4,4) blocks expand each SOC scaling block
    -eta^2 (I + uu' - vv'), u = sqrt(2)*wbar, v = sqrt(2)*e1, into a
    diagonal plus two extra columns so the factorization stays sparse.
    """

    def __init__(self, Aeq: sp.csr_matrix, G: sp.csr_matrix, ops: _ConeOps,
                 reg: float):
        n = Aeq.shape[1]
        p = Aeq.shape[0]
        m = G.shape[0]
        self.n, self.p, self.m = n, p, m
        self.ops = ops
        self.reg = reg
        self.dim = n + p + m + 2 * ops.nsoc

        rows, cols, vals = [], [], []

        def block(i_off, j_off, M):
            coo = M.tocoo()
            rows.append(coo.row + i_off)
            cols.append(coo.col + j_off)
            vals.append(coo.data.copy())

        block(n, 0, Aeq)
        block(0, n, Aeq.T.tocsr())
        block(n + p, 0, G)
        block(0, n + p, G.T.tocsr())
        static_i = np.concatenate(rows) if rows else np.zeros(0, int)
        static_j = np.concatenate(cols) if cols else np.zeros(0, int)
        static_v = np.concatenate(vals) if vals else np.zeros(0)

        # regularized diagonals for x and eq blocks (values fixed)
        idx = np.arange(n + p)
        diag_v = np.where(idx < n, reg, -reg)

        # cone-block diagonal positions (values per iteration)
        zdiag = n + p + np.arange(m)

        # SOC expansion positions
        exp0 = n + p + m
        u_i, u_j, v_i, v_j, e_diag_i, e_diag_v = [], [], [], [], [], []
        for k in range(ops.nsoc):
            d = int(ops.dims[k])
            zrows = n + p + ops.heads[k] + np.arange(d)
            cu = exp0 + 2 * k
            cv = exp0 + 2 * k + 1
            u_i.append(zrows)
            u_j.append(np.full(d, cu))
            v_i.append(zrows[:1])
            v_j.append(np.array([cv]))
            e_diag_i.extend([cu, cv])
            e_diag_v.extend([1.0 + reg, -1.0 - reg])
        if ops.nsoc:
            u_i = np.concatenate(u_i)
            u_j = np.concatenate(u_j)
            v_i = np.concatenate(v_i)
            v_j = np.concatenate(v_j)
        else:
            u_i = u_j = v_i = v_j = np.zeros(0, int)
        e_diag_i = np.asarray(e_diag_i, dtype=int)
        e_diag_v = np.asarray(e_diag_v)

        self._i = np.concatenate([
            static_i, idx, zdiag,
            u_i, u_j, v_i, v_j, e_diag_i,
        ])
        self._j = np.concatenate([
            static_j, idx, zdiag,
            u_j, u_i, v_j, v_i, e_diag_i,
        ])
        self._static_v = static_v
        self._diag_v = diag_v
        self._e_diag_v = e_diag_v
        self._nu = len(u_i)
        # sign pattern of the static regularization, for exact residuals
        regsign = np.concatenate([
            np.ones(n), -np.ones(p), -np.ones(m),
            np.tile([1.0, -1.0], ops.nsoc),
        ])
        self._regvec = reg * regsign
        self._lu = None
        self._K = None

    def factor(self, scaling: _Scaling) -> None:
        ops = self.ops
        dvals = np.empty(self.m)
        dvals[:ops.l] = -scaling.w_lin ** 2 - self.reg
        if ops.nsoc:
            eta2 = scaling.eta ** 2
            dvals[ops.l:] = -np.repeat(eta2, ops.dims) - self.reg
            uvals = np.sqrt(2.0) * np.repeat(scaling.eta, ops.dims) * scaling.wbar
            vvals = np.sqrt(2.0) * scaling.eta
        else:
            uvals = np.zeros(0)
            vvals = np.zeros(0)
        v = np.concatenate([
            self._static_v, self._diag_v, dvals,
            uvals, uvals, vvals, vvals, self._e_diag_v,
        ])
        K = sp.coo_matrix((v, (self._i, self._j)),
                          shape=(self.dim, self.dim)).tocsc()
        self._K = K
        # quasi-definite after regularization: symmetric-mode LU with a
        # relaxed pivot threshold keeps fill-in low; refinement restores
        # accuracy lost to the weak pivoting
        self._lu = splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=1e-3,
                        options={"SymmetricMode": True})

    def solve(self, r1: np.ndarray, r2: np.ndarray, r3: np.ndarray,
              refine_rounds: int):
        """Solve the exact (unregularized) KKT system by LU + refinement."""
        rhs = np.concatenate([r1, r2, r3, np.zeros(2 * self.ops.nsoc)])
        sol = self._lu.solve(rhs)
        scale = 1.0 + float(np.max(np.abs(rhs)))
        for _ in range(refine_rounds):
            resid = rhs - (self._K @ sol - self._regvec * sol)
            if np.max(np.abs(resid)) <= 1e-13 * scale:
                break
            sol = sol + self._lu.solve(resid)
        n, p, m = self.n, self.p, self.m
        return sol[:n], sol[n:n + p], sol[n + p:n + p + m]


# ---------------------------------------------------------------------------
# Ruiz equilibration (cone-aware: one row scale per second-order cone)


class _Equilibration:
    """Diagonal row/column scaling of the split problem data.

    Rows belonging to one second-order cone share a single scale factor so
    the scaled slacks stay in the same cone.  A scalar normalization of b
    and c is folded in; ``unscale_*`` map iterates back to original space.
    """

    def __init__(self, Aeq, beq, G, h, c, ops: _ConeOps, rounds: int = 10):
        p, n = Aeq.shape
        m = G.shape[0]
        self.p, self.m, self.n = p, m, n
        M = sp.vstack([Aeq, G]).tocsr() if p else G.tocsr()
        dcol = np.ones(n)
        drow = np.ones(p + m)
        for _ in range(rounds):
            Mabs = abs(M)
            colmax = Mabs.max(axis=0).toarray().ravel()
            colmax[colmax <= 0] = 1.0
            cs = 1.0 / np.sqrt(colmax)
            M = M @ sp.diags(cs)
            dcol *= cs
            rowmax = abs(M).max(axis=1).toarray().ravel()
            for k in range(ops.nsoc):
                lo = p + ops.heads[k]
                hi = lo + ops.dims[k]
                rowmax[lo:hi] = rowmax[lo:hi].max()
            rowmax[rowmax <= 0] = 1.0
            rs = 1.0 / np.sqrt(rowmax)
            M = sp.diags(rs) @ M
            drow *= rs
        self.dcol = dcol
        self.drow_eq = drow[:p]
        self.drow_cone = drow[p:]
        self.Aeq = M[:p].tocsr() if p else Aeq
        self.G = M[p:].tocsr()
        bs = np.concatenate([self.drow_eq * beq, self.drow_cone * h])
        self.sigma_b = 1.0 / max(1.0, np.max(np.abs(bs)) if bs.size else 1.0)
        cscaled = dcol * c
        self.sigma_c = 1.0 / max(1.0, float(np.max(np.abs(cscaled)))
                                 if cscaled.size else 1.0)
        self.beq = self.sigma_b * self.drow_eq * beq
        self.h = self.sigma_b * self.drow_cone * h
        self.c = self.sigma_c * cscaled

    # iterate mapping back to the original problem space (tau untouched)
    def unscale_x(self, x):
        return self.dcol * x / self.sigma_b

    def unscale_y(self, y):
        return self.drow_eq * y / self.sigma_c

    def unscale_z(self, z):
        return self.drow_cone * z / self.sigma_c

    def unscale_s(self, s):
        return s / self.drow_cone / self.sigma_b


# ---------------------------------------------------------------------------
# public solve


def _split_program(prog: ConicProgram):
    """Reorder rows into (equalities, orthant, SOCs); remember the mapping."""
    eq_rows: list[int] = []
    lin_rows: list[int] = []
    soc_rows: list[int] = []
    soc_dims: list[int] = []
    for kind, rng in prog.cone_ranges():
        if kind == ZERO:
            eq_rows.extend(rng)
        elif kind == NONNEG:
            lin_rows.extend(rng)
        elif kind == SOC:
            soc_rows.extend(rng)
            soc_dims.append(len(rng))
        else:
            raise ProgramError(f"unsupported cone kind {kind!r}")
    A = prog.A.tocsr()
    eq_idx = np.asarray(eq_rows, dtype=int)
    cone_idx = np.asarray(lin_rows + soc_rows, dtype=int)
    Aeq = A[eq_idx] if len(eq_idx) else sp.csr_matrix((0, prog.num_vars))
    G = A[cone_idx] if len(cone_idx) else sp.csr_matrix((0, prog.num_vars))
    beq = prog.b[eq_idx] if len(eq_idx) else np.zeros(0)
    h = prog.b[cone_idx] if len(cone_idx) else np.zeros(0)
    ops = _ConeOps(len(lin_rows), soc_dims)
    return Aeq, beq, G, h, ops, eq_idx, cone_idx


def solve(prog: ConicProgram, settings: SolverSettings | None = None) -> Solution:
    """Solve a cone program; never returns a silent wrong answer.

    Raises :class:`ProgramError` if the program fails validation and
    :class:`SolverError` only for structurally unsupported inputs; numeric
    trouble is reported through the ``numerical-failure`` status.
    """
    settings = settings or SolverSettings()
    settings.check()
    diag = validate(prog)
    if not diag.ok:
        raise ProgramError("program failed validation: " + "; ".join(diag.issues))

    Aeq0, beq0, G0, h0, ops, eq_idx, cone_idx = _split_program(prog)
    if ops.m == 0:
        raise SolverError("program has no inequality cone rows; nothing to "
                          "optimize over (add an orthant or SOC constraint)")
    n, p, m = prog.num_vars, Aeq0.shape[0], ops.m
    c0 = prog.c.astype(float)

    scalings = _Equilibration(Aeq0, beq0, G0, h0, c0, ops)
    Aeq, beq, G, h, c = (scalings.Aeq, scalings.beq, scalings.G, scalings.h,
                         scalings.c)

    kkt = _KKT(Aeq.tocsr(), G.tocsr(), ops, settings.static_reg)

    try:
        kkt.factor(_Scaling(ops))
    except (RuntimeError, FloatingPointError) as exc:
        return _failure(prog, n, f"initial KKT factorization failed: {exc}")

    # unit initialization: least-squares-style primal/dual guesses, pushed
    # into the cone interior if needed
    x, y, q = kkt.solve(np.zeros(n), beq, h, settings.refine_rounds)
    s = -q
    alpha_p = -ops.min_eig(s)
    if alpha_p >= 0:
        s = s + (1.0 + alpha_p) * ops.e
    _, _, z = kkt.solve(-c, np.zeros(p), np.zeros(m), settings.refine_rounds)
    alpha_d = -ops.min_eig(z)
    if alpha_d >= 0:
        z = z + (1.0 + alpha_d) * ops.e
    tau, kappa = 1.0, 1.0

    bnorm0 = 1.0 + np.linalg.norm(np.concatenate([beq0, h0]))
    beqnorm0 = 1.0 + np.linalg.norm(beq0)
    hnorm0 = 1.0 + np.linalg.norm(h0)
    cnorm0 = 1.0 + np.linalg.norm(c0)
    datascale = 1.0 + (np.max(np.abs(prog.A.data)) if prog.A.nnz else 0.0)

    status = MAX_ITERATIONS
    info: dict = {}
    best = None
    best_metric = np.inf
    best_progress: dict = {}
    no_progress = 0
    it = 0
    for it in range(settings.max_iterations + 1):
        # residuals of the homogeneous model (scaled space, drive Newton)
        r1 = Aeq.T @ y + G.T @ z + c * tau
        r2 = -(Aeq @ x) + beq * tau
        r3 = -(G @ x) + h * tau - s
        r4 = -(c @ x) - (beq @ y) - (h @ z) - kappa

        if not np.all(np.isfinite(np.concatenate([r1, r2, r3, [r4]]))):
            return _failure(prog, n, "non-finite iterate", iterations=it)

        # termination metrics in the original problem space
        xo = scalings.unscale_x(x)
        yo = scalings.unscale_y(y)
        zo = scalings.unscale_z(z)
        so = scalings.unscale_s(s)
        pres = max(
            np.linalg.norm(Aeq0 @ xo - beq0 * tau) / beqnorm0,
            np.linalg.norm(G0 @ xo + so - h0 * tau) / hnorm0) / tau
        dual_vec = Aeq0.T @ yo + G0.T @ zo + c0 * tau
        dres = np.linalg.norm(dual_vec) / cnorm0 / tau
        pcost = float(c0 @ xo) / tau
        dcost = float(-(beq0 @ yo) - (h0 @ zo)) / tau
        gap = float(so @ zo) / tau ** 2
        objscale = max(1.0, abs(pcost), abs(dcost))

        opt_metric = max(pres, dres, gap / objscale)
        if opt_metric < best_metric:
            best_metric = opt_metric
            best = (xo.copy(), yo.copy(), zo.copy(), so.copy(), tau,
                    pres, dres, pcost, dcost, gap)

        if (pres <= settings.feas_tol and dres <= settings.feas_tol
                and (gap <= settings.gap_tol * objscale
                     or abs(pcost - dcost) <= settings.gap_tol * objscale)):
            status = OPTIMAL
            break

        # infeasibility certificates (original space)
        pinf_metric = dinf_metric = np.inf
        beta = -(float(beq0 @ yo) + float(h0 @ zo))
        if beta > 1e-10 * bnorm0:
            pinf_metric = np.linalg.norm(
                Aeq0.T @ yo + G0.T @ zo) / beta / datascale
            if pinf_metric <= settings.feas_tol:
                return _package_infeasible(
                    prog, n, eq_idx, cone_idx, yo / beta, zo / beta, it,
                    {"pres": pres, "dres": dres})
        gamma_d = -float(c0 @ xo)
        if gamma_d > 1e-10 * cnorm0:
            dinf_metric = max(np.linalg.norm(Aeq0 @ xo),
                              np.linalg.norm(G0 @ xo + so)) / gamma_d / datascale
            if dinf_metric <= settings.feas_tol:
                return _package_unbounded(
                    prog, n, eq_idx, cone_idx, xo / gamma_d, so / gamma_d, it,
                    {"pres": pres, "dres": dres})

        # stall detection: reset whenever any convergence channel improves
        improved = False
        for key, val in (("opt", opt_metric), ("pinf", pinf_metric),
                         ("dinf", dinf_metric)):
            if val < 0.99 * best_progress.get(key, np.inf):
                best_progress[key] = val
                improved = True
        no_progress = 0 if improved else no_progress + 1

        if it == settings.max_iterations:
            break
        if no_progress >= 10:
            info["message"] = "stopped early, no progress over 10 iterations"
            break

        # Nesterov-Todd scaling and KKT factorization
        try:
            scaling = _Scaling(ops, s, z)
            kkt.factor(scaling)
        except (RuntimeError, FloatingPointError) as exc:
            info["message"] = f"stopped early, KKT breakdown: {exc}"
            break

        lam = scaling.lam
        mu = (float(s @ z) + tau * kappa) / (ops.degree + 1)
        if mu <= 0 or not np.isfinite(mu):
            info["message"] = "stopped early, complementarity measure collapsed"
            break

        x2, y2, z2 = kkt.solve(-c, beq, h, settings.refine_rounds)
        denom_dot = float(c @ x2) + float(beq @ y2) + float(h @ z2)

        def direction(eta: float, ds_target: np.ndarray, dk_target: float):
            dtil = ops.jsolve(lam, ds_target)
            wd = scaling.apply(dtil)
            x1, y1, z1 = kkt.solve(-eta * r1, eta * r2, eta * r3 + wd,
                                   settings.refine_rounds)
            num = (-eta * r4 - dk_target / tau
                   + float(c @ x1) + float(beq @ y1) + float(h @ z1))
            den = kappa / tau - denom_dot
            if den == 0:
                raise FloatingPointError("singular tau equation")
            dtau = num / den
            dx = x1 + dtau * x2
            dy = y1 + dtau * y2
            dz = z1 + dtau * z2
            # recover ds from the primal row: exact there by construction,
            # leaving any KKT solve error in the self-correcting
            # complementarity equation instead of primal feasibility
            dsv = eta * r3 - G @ dx + h * dtau
            dkappa = -(dk_target + kappa * dtau) / tau
            return dx, dy, dz, dsv, dtau, dkappa

        try:
            # predictor (affine) direction
            ds_aff = ops.jprod(lam, lam)
            dxa, dya, dza, dsa, dta, dka = direction(1.0, ds_aff, tau * kappa)
            amax = min(_max_step(ops, s, dsa), _max_step(ops, z, dza))
            if dta < 0:
                amax = min(amax, -tau / dta)
            if dka < 0:
                amax = min(amax, -kappa / dka)
            alpha_aff = min(1.0, amax)
            sigma = (1.0 - alpha_aff) ** 3

            # corrector (combined) direction with Mehrotra second-order term
            corr = ops.jprod(scaling.apply_inv(dsa), scaling.apply(dza))
            ds_cmb = ds_aff + corr - sigma * mu * ops.e
            dk_cmb = tau * kappa + dta * dka - sigma * mu
            dx, dy, dz, dsv, dtau, dkappa = direction(1.0 - sigma, ds_cmb, dk_cmb)
        except FloatingPointError as exc:
            info["message"] = f"stopped early, direction computation failed: {exc}"
            break

        amax = min(_max_step(ops, s, dsv), _max_step(ops, z, dz))
        if dtau < 0:
            amax = min(amax, -tau / dtau)
        if dkappa < 0:
            amax = min(amax, -kappa / dkappa)
        alpha = min(1.0, settings.step_fraction * amax)
        if alpha <= 1e-13:
            info["message"] = "stopped early, step length collapsed"
            break

        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * dsv
        tau += alpha * dtau
        kappa += alpha * dkappa

        # the embedding is positively homogeneous; renormalizing keeps the
        # iterate's scale O(1) so absolute complementarity never sinks into
        # the refinement noise floor while scaled residuals still matter
        nf = tau + kappa
        x /= nf
        y /= nf
        z /= nf
        s /= nf
        tau /= nf
        kappa /= nf

    # package the solution in original space; fall back to the best iterate
    # seen when the final one is not the terminating optimum
    xo = scalings.unscale_x(x)
    yo = scalings.unscale_y(y)
    zo = scalings.unscale_z(z)
    so = scalings.unscale_s(s)
    if status != OPTIMAL and best is not None and best_metric < max(
            pres, dres, gap / objscale):
        xo, yo, zo, so, tau, pres, dres, pcost, dcost, gap = best
    xhat = xo / tau
    shat = so / tau
    y_merged = np.zeros(prog.num_rows)
    s_merged = np.zeros(prog.num_rows)
    if len(eq_idx):
        y_merged[eq_idx] = yo / tau
    y_merged[cone_idx] = zo / tau
    s_merged[cone_idx] = shat
    if status != OPTIMAL and (
            pres <= settings.feas_tol and dres <= settings.feas_tol
            and (gap <= settings.gap_tol * max(1.0, abs(pcost), abs(dcost))
                 or abs(pcost - dcost)
                 <= settings.gap_tol * max(1.0, abs(pcost), abs(dcost)))):
        status = OPTIMAL
    info.update(pres=pres, dres=dres)
    return Solution(
        x=xhat, y=y_merged, s=s_merged, status=status,
        primal_objective=pcost, dual_objective=dcost, gap=gap,
        primal_residual=pres, dual_residual=dres, iterations=it, info=info)


def _failure(prog, n, message, iterations=0) -> Solution:
    return Solution(
        x=np.full(n, np.nan), y=np.full(prog.num_rows, np.nan),
        s=np.full(prog.num_rows, np.nan), status=NUMERICAL_FAILURE,
        iterations=iterations, info={"message": message})


def _package_infeasible(prog, n, eq_idx, cone_idx, ycert, zcert, it, extra):
    y = np.zeros(prog.num_rows)
    if len(eq_idx):
        y[eq_idx] = ycert
    y[cone_idx] = zcert
    return Solution(
        x=np.full(n, np.nan), y=y, s=np.full(prog.num_rows, np.nan),
        status=PRIMAL_INFEASIBLE, iterations=it,
        info=dict(extra, certificate="b'y = -1, A'y = 0, y in K*"))


def _package_unbounded(prog, n, eq_idx, cone_idx, xcert, scert, it, extra):
    s = np.zeros(prog.num_rows)
    s[cone_idx] = scert
    return Solution(
        x=xcert, y=np.full(prog.num_rows, np.nan), s=s,
        status=DUAL_INFEASIBLE, iterations=it,
        info=dict(extra, certificate="c'x = -1, Ax + s = 0, s in K"))


# ---------------------------------------------------------------------------
# independent residual checks


@dataclass
class ResidualReport:
    status: str
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    complementarity: float = np.nan
    cone_violation_s: float = np.nan
    cone_violation_y: float = np.nan
    primal_objective: float = np.nan
    dual_objective: float = np.nan
    certificate_value: float = np.nan
    certificate_residual: float = np.nan

    def max_residual(self) -> float:
        vals = [self.primal_residual, self.dual_residual,
                self.cone_violation_s, self.cone_violation_y]
        return max(v for v in vals if np.isfinite(v))


def _dual_cone_violation(y: np.ndarray, prog: ConicProgram) -> float:
    """Membership violation of y in K* (zero-cone rows are free)."""
    worst = 0.0
    for kind, rng in prog.cone_ranges():
        blk = y[rng.start:rng.stop]
        if kind == ZERO:
            continue
        if kind == NONNEG:
            worst = max(worst, float(np.max(-blk)))
        else:
            worst = max(worst, float(np.linalg.norm(blk[1:]) - blk[0]))
    return worst


def _primal_cone_violation(s: np.ndarray, prog: ConicProgram) -> float:
    from .cones import cone_violation
    return cone_violation(s, prog.cones)


def residuals(prog: ConicProgram, sol: Solution) -> ResidualReport:
    """Recompute all residuals from program data, independent of the solver.

    For ``optimal`` (and ``max-iterations``) solutions this reports primal
    and dual residuals, complementarity and cone violations.  For
    infeasibility statuses it verifies the certificate inequalities instead.
    """
    A, b, c = prog.A, prog.b, prog.c
    rep = ResidualReport(status=sol.status)
    if sol.status in (OPTIMAL, MAX_ITERATIONS):
        x, y, s = sol.x, sol.y, sol.s
        rep.primal_residual = float(
            np.linalg.norm(A @ x + s - b) / (1.0 + np.linalg.norm(b)))
        rep.dual_residual = float(
            np.linalg.norm(A.T @ y + c) / (1.0 + np.linalg.norm(c)))
        rep.complementarity = abs(float(s @ y))
        rep.cone_violation_s = _primal_cone_violation(s, prog)
        rep.cone_violation_y = _dual_cone_violation(y, prog)
        rep.primal_objective = float(c @ x)
        rep.dual_objective = float(-(b @ y))
    elif sol.status == PRIMAL_INFEASIBLE:
        y = sol.y
        rep.certificate_value = float(b @ y)          # must be < 0
        rep.certificate_residual = float(np.linalg.norm(A.T @ y))
        rep.cone_violation_y = _dual_cone_violation(y, prog)
    elif sol.status == DUAL_INFEASIBLE:
        x, s = sol.x, sol.s
        rep.certificate_value = float(c @ x)          # must be < 0
        rep.certificate_residual = float(np.linalg.norm(A @ x + s))
        rep.cone_violation_s = _primal_cone_violation(s, prog)
    return rep


# ---------------------------------------------------------------------------
# adapter registry

_SOLVERS = {}


def register_solver(name: str, fn) -> None:
    """Register a (program, settings) -> Solution adapter."""
    _SOLVERS[name] = fn


def get_solver(name: str):
    try:
        return _SOLVERS[name]
    except KeyError:
        raise SolverError(
            f"no solver registered under {name!r}; known: {sorted(_SOLVERS)}"
        ) from None


register_solver("ipm", solve)
