"""Small convex programs of the form

    minimize    sum_x m[x] * rho[x]**p
    subject to  A @ rho >= b,   rho >= 0

with ``A >= 0`` entrywise.  Every modulus, minimal Hajlasz gradient and
arena-restricted gradient norm in this package reduces to it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog, minimize

REL_TOL = 1e-8


class SolverError(RuntimeError):
    pass


@dataclass
class Solution:
    x: np.ndarray
    value: float
    method: str
    converged: bool = True
    gap: float = 0.0
    unique: bool = True
    iterations: int = 0
    multipliers: np.ndarray = field(default_factory=lambda: np.zeros(0))


def minimize_weighted_power(A, b, m, p: float, method: str = "auto",
                            tol: float = REL_TOL) -> Solution:
    """Solve the program above.

    ``method`` is ``"auto"`` (active set for p=2, simplex for p=1, dual ascent
    otherwise), ``"active-set"``, ``"dual"`` or ``"lp"``.  Coordinates with
    zero weight are free: any row touching one is satisfied by setting it to
    ``inf``, which costs nothing under ``inf * 0 = 0``.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(-1, len(m))
    b = np.asarray(b, dtype=float).reshape(-1)
    m = np.asarray(m, dtype=float)
    n = m.size
    if np.any(A < 0) or np.any(m < 0):
        raise ValueError("constraint matrix and weights must be nonnegative")

    keep = b > 0
    free = m == 0
    touches_free = (A[:, free] > 0).any(axis=1) if free.any() else np.zeros(len(b), bool)
    x = np.zeros(n)
    if free.any():
        hit = (A[keep & touches_free][:, free] > 0).any(axis=0)
        x[np.flatnonzero(free)[hit]] = np.inf
    keep &= ~touches_free
    A, b = A[keep], b[keep]
    if A.shape[0] == 0:
        return Solution(x, 0.0, "trivial")
    if np.any(A.sum(axis=1) == 0):
        raise SolverError("a constraint row is identically zero and cannot be satisfied")

    rows = np.unique(A / b[:, None], axis=0)
    live = ~free
    R, w = rows[:, live], m[live]
    if p == 1 and method in ("auto", "lp"):
        sol = _solve_lp(R, w, tol)
    elif p == 2 and method in ("auto", "active-set"):
        sol = _solve_active_set(R, w)
    elif method in ("auto", "dual"):
        sol = _canonical_dual(R, w, p, tol)
    else:
        raise ValueError(f"method {method!r} does not apply to p={p}")
    x[live] = sol.x
    sol.x = x
    return sol


def _objective(x: np.ndarray, m: np.ndarray, p: float) -> float:
    return float(np.sum(m * x ** p))


# ---------------------------------------------------------------- p = 2

def _solve_active_set(R: np.ndarray, m: np.ndarray, max_iter: int = 10_000) -> Solution:
    """Primal active-set method for the strictly convex quadratic case.

    Starts from the feasible constant density and keeps a linearly independent
    working set of rows of ``[R; I]`` held at equality.
    """
    k, n = R.shape
    G = np.vstack([R, np.eye(n)])
    h = np.concatenate([np.ones(k), np.zeros(n)])
    H = 2.0 * m
    x = np.full(n, 1.0 / R.sum(axis=1).min())
    work: list = []
    lam = np.zeros(0)
    for it in range(max_iter):
        GW = G[work]
        nw = len(work)
        kkt = np.zeros((n + nw, n + nw))
        kkt[:n, :n] = np.diag(H)
        kkt[:n, n:] = -GW.T
        kkt[n:, :n] = GW
        rhs = np.concatenate([-H * x, np.zeros(nw)])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        step, lam = sol[:n], sol[n:]
        if np.linalg.norm(step) <= 1e-13 * (1.0 + np.linalg.norm(x)):
            if nw == 0 or lam.min() >= -1e-12 * max(1.0, np.abs(lam).max()):
                x = np.maximum(x, 0.0)
                mult = np.zeros(k)
                for j, c in enumerate(work):
                    if c < k:
                        mult[c] = lam[j]
                return Solution(x, _objective(x, m, 2), "active-set", iterations=it + 1,
                                multipliers=mult)
            work.pop(int(np.argmin(lam)))
            continue
        Gp = G @ step
        slack = G @ x - h
        alpha, block = 1.0, None
        for i in np.flatnonzero(Gp < -1e-15):
            if i in work:
                continue
            ratio = max(slack[i], 0.0) / -Gp[i]
            if ratio < alpha:
                alpha, block = ratio, int(i)
        x = x + alpha * step
        if block is not None:
            work.append(block)
    raise SolverError("active-set iteration limit reached")


# ---------------------------------------------------------------- p = 1

def _solve_lp(R: np.ndarray, m: np.ndarray, tol: float) -> Solution:
    """Linear program; ties among optimal vertices broken lexicographically."""
    k, n = R.shape
    A_ub, b_ub = -R, -np.ones(k)
    res = linprog(m, A_ub=A_ub, b_ub=b_ub, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        raise SolverError(f"linear program failed: {res.message}")
    best = float(res.fun)
    cap = best * (1 + 1e-12) + 1e-15
    fixed: list = []
    x = res.x
    for j in range(n):
        c = np.zeros(n)
        c[j] = 1.0
        ub_rows = [A_ub, m[None, :]]
        ub_rhs = [b_ub, [cap]]
        for i, v in fixed:
            e = np.zeros(n)
            e[i] = 1.0
            ub_rows.append(e[None, :])
            ub_rhs.append([v + 1e-12 * max(1.0, v)])
        r = linprog(c, A_ub=np.vstack(ub_rows), b_ub=np.concatenate(ub_rhs),
                    bounds=[(0, None)] * n, method="highs")
        if r.status != 0:
            break
        fixed.append((j, float(r.fun)))
        x = r.x
    unique = True
    for j in range(n):
        c = np.zeros(n)
        c[j] = -1.0
        hi = linprog(c, A_ub=np.vstack([A_ub, m[None, :]]), b_ub=np.concatenate([b_ub, [cap]]),
                     bounds=[(0, None)] * n, method="highs")
        lo = linprog(-c, A_ub=np.vstack([A_ub, m[None, :]]), b_ub=np.concatenate([b_ub, [cap]]),
                     bounds=[(0, None)] * n, method="highs")
        if hi.status == 0 and lo.status == 0 and -hi.fun - lo.fun > 1e-9 * max(1.0, -hi.fun):
            unique = False
            break
    x = np.where(x > 1e-11 * max(1.0, float(np.max(x))), x, 0.0)
    mult = -np.asarray(res.ineqlin.marginals) if res.ineqlin is not None else np.zeros(k)
    return Solution(x, _objective(x, m, 1), "lp", unique=unique, multipliers=mult)


# ---------------------------------------------------------------- general p

def _solve_dual(R: np.ndarray, m: np.ndarray, p: float, tol: float) -> Solution:
    """Maximize the concave dual over ``lam >= 0``, then polish with Newton.

    For multipliers ``lam`` the Lagrangian minimizer is
    ``rho = (R.T @ lam / (p m))**(1/(p-1))``; the dual value is a lower bound
    and the rescaled-to-feasible ``rho`` an upper bound.
    """
    k, n = R.shape
    q_exp = 1.0 / (p - 1.0)

    def primal(lam):
        q = np.maximum(R.T @ lam, 0.0)
        return (q / (p * m)) ** q_exp

    def dual(lam):
        rho = primal(lam)
        return float(lam.sum() - (p - 1.0) * np.sum(m * rho ** p)), 1.0 - R @ rho

    def neg(lam):
        val, grad = dual(lam)
        return -val, -grad

    lam0 = np.full(k, 1.0 / k)
    res = minimize(neg, lam0, jac=True, method="L-BFGS-B", bounds=[(0, None)] * k,
                   options={"maxiter": 20_000, "ftol": 1e-15, "gtol": 1e-13, "maxcor": 30})
    lam = np.maximum(res.x, 0.0)

    def bounds(lam):
        rho = primal(lam)
        cover = (R @ rho).min()
        if cover <= 0:
            rho = np.full(n, 1.0 / R.sum(axis=1).min())
        elif cover < 1:
            rho = rho / cover
        upper = _objective(rho, m, p)
        return rho, upper, max(upper - dual(lam)[0], 0.0) / max(upper, 1e-300)

    candidates = [(lam, *bounds(lam))]
    polished = _newton_polish(R, m, p, lam, primal)
    candidates.append((polished, *bounds(polished)))
    lam, rho, upper, gap = min(candidates, key=lambda c: c[3])
    return Solution(rho, upper, "dual", converged=gap <= tol, gap=gap,
                    iterations=int(res.nit), multipliers=lam)


def _canonical_dual(R: np.ndarray, m: np.ndarray, p: float, tol: float) -> Solution:
    """Dual solve, then a re-solve on the tight rows alone.

    The answer then depends only on the (sorted) tight rows, so appending
    rows that stay slack returns bit-identical values; this keeps the
    modulus exactly monotone under family inclusion.
    """
    sol = _solve_dual(R, m, p, tol)
    tight = R @ sol.x <= 1.0 + 1e-7
    if tight.all() or not tight.any():
        return sol
    again = _solve_dual(R[tight], m, p, tol)
    if np.all(R[~tight] @ again.x >= 1.0) and again.gap <= max(sol.gap, tol):
        lam = np.zeros(R.shape[0])
        lam[tight] = again.multipliers
        again.multipliers = lam
        return again
    return sol


def _newton_polish(R, m, p, lam, primal, iters: int = 60):
    scale = lam.max() if lam.size else 0.0
    if scale <= 0:
        return lam
    active = lam > 1e-9 * scale
    lam = np.where(active, lam, 0.0)
    for _ in range(iters):
        idx = np.flatnonzero(active)
        RJ = R[idx]
        q = R.T @ lam
        rho = primal(lam)
        resid = RJ @ rho - 1.0
        if np.abs(resid).max() < 1e-15:
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            drho = np.where(q > 0, rho / ((p - 1.0) * q), 0.0)
        J = (RJ * drho[None, :]) @ RJ.T
        delta = np.linalg.lstsq(J, -resid, rcond=None)[0]
        new = lam[idx] + delta
        if np.any(new < 0):
            t = np.min(np.where(new < 0, lam[idx] / (lam[idx] - new), 1.0))
            new = lam[idx] + 0.99 * t * delta
            drop = new <= 1e-12 * scale
            new[drop] = 0.0
            active[idx[drop]] = False
        lam = lam.copy()
        lam[idx] = new
    return lam
