"""LP decoding over the generalized fundamental polytope.

The solver is a dense two-phase tableau simplex with Bland's rule.  Problems
are small (desk-scale codes), so determinism matters more than speed.
"""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .codes import TannerCode

PARITY_MAX_DEGREE = 12
BIG_M = 1e6  # stand-in for BEC infinities
MAX_COLUMNS = 5000
MAX_ROWS = 20000
PIVOT_TOL = 1e-9
INTEGRAL_TOL = 1e-6


class LpError(RuntimeError):
    pass


@dataclass
class LpProblem:
    """min c.z  s.t.  A_ub z <= b_ub,  A_eq z = b_eq,  0 <= z <= upper.

    The first ``n_code`` structural variables are the code bits.
    """
    c: np.ndarray
    A_ub: np.ndarray
    b_ub: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    upper: np.ndarray
    n_code: int
    names: list = field(default_factory=list)

    @property
    def num_vars(self):
        return len(self.c)

    def to_lp_text(self) -> str:
        """Plain-text dump in the CPLEX LP layout."""
        names = self.names or [f"z{i + 1}" for i in range(self.num_vars)]

        def expr(coefs):
            terms = [f"{'-' if a < 0 else '+'} {abs(a):.17g} {names[i]}" for i, a in enumerate(coefs) if a != 0]
            s = " ".join(terms) if terms else "0 " + names[0]
            return s[2:] if s.startswith("+ ") else s

        out = ["\\ LP decoding problem", "Minimize", " obj: " + expr(self.c), "Subject To"]
        for k, (row, b) in enumerate(zip(self.A_ub, self.b_ub)):
            out.append(f" u{k + 1}: {expr(row)} <= {b:.17g}")
        for k, (row, b) in enumerate(zip(self.A_eq, self.b_eq)):
            out.append(f" e{k + 1}: {expr(row)} = {b:.17g}")
        out.append("Bounds")
        for i, u in enumerate(self.upper):
            out.append(f" 0 <= {names[i]} <= {u:.17g}" if np.isfinite(u) else f" {names[i]} >= 0")
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass
class LpSolution:
    x: np.ndarray  # code-bit part of the optimum
    value: float
    status: str  # "optimal", "infeasible" or "unbounded"
    integral: bool
    z: np.ndarray = None  # every structural variable
    residual: float = 0.0
    unique: bool | None = None  # set by lp_decode when uniqueness is tested


def _finite_objective(llr):
    lam = np.asarray(llr, dtype=float)
    if np.isnan(lam).any():
        raise LpError("LLR vector contains NaN")
    if np.isinf(lam).any():
        warnings.warn(f"infinite LLRs replaced by +-{BIG_M:g} for LP decoding", RuntimeWarning, stacklevel=3)
        lam = np.clip(lam, -BIG_M, BIG_M)
    return lam


def odd_subset_rows(nbrs, N):
    """Parity inequalities sum_S x - sum_{rest} x <= |S| - 1 for every odd S."""
    rows, rhs = [], []
    n = len(nbrs)
    for size in range(1, n + 1, 2):
        for S in itertools.combinations(range(n), size):
            row = np.zeros(N)
            row[list(nbrs)] = -1.0
            row[[nbrs[k] for k in S]] = 1.0
            rows.append(row)
            rhs.append(size - 1)
    return rows, rhs


def build_lp(code: TannerCode, llr, spc_formulation="auto") -> LpProblem:
    """LP over the intersection of the local-code convex hulls.

    SPC checks of degree <= 12 use the odd-subset inequalities unless
    ``spc_formulation == "hull"``; all other checks use one convex-combination
    weight per local codeword.
    """
    if spc_formulation not in ("auto", "hull"):
        raise LpError(f"unknown SPC formulation {spc_formulation!r}")
    lam = _finite_objective(llr)
    N = code.N
    if lam.shape != (N,):
        raise LpError("LLR vector length must equal N")
    g = code.graph
    ub_rows, ub_rhs = [], []
    hull = []  # (check, local codeword matrix)
    for j, (nbrs, lc) in enumerate(zip(g.check_vars, code.locals)):
        if lc.kind == "SPC" and spc_formulation == "auto" and lc.n <= PARITY_MAX_DEGREE:
            r, b = odd_subset_rows(nbrs, N)
            ub_rows += r
            ub_rhs += b
        else:
            hull.append((j, lc.codewords()))
    n_aux = sum(len(W) for _, W in hull)
    nv = N + n_aux
    if nv > MAX_COLUMNS:
        raise LpError(f"{nv} LP variables exceed the limit {MAX_COLUMNS}")
    A_ub = np.zeros((len(ub_rows), nv))
    if ub_rows:
        A_ub[:, :N] = np.array(ub_rows)
    eq_rows, eq_rhs = [], []
    names = [f"x{i + 1}" for i in range(N)]
    col = N
    for j, W in hull:
        nbrs = g.check_vars[j]
        cols = np.arange(col, col + len(W))
        names += [f"a{j + 1}_{k + 1}" for k in range(len(W))]
        row = np.zeros(nv)
        row[cols] = 1.0
        eq_rows.append(row)
        eq_rhs.append(1.0)
        for pos, v in enumerate(nbrs):
            row = np.zeros(nv)
            row[v] = -1.0
            row[cols] = W[:, pos]
            eq_rows.append(row)
            eq_rhs.append(0.0)
        col += len(W)
    A_eq = np.array(eq_rows).reshape(-1, nv)
    if len(ub_rows) + len(eq_rows) + N > MAX_ROWS:
        raise LpError("LP has too many rows")
    c = np.zeros(nv)
    c[:N] = lam
    upper = np.full(nv, np.inf)
    upper[:N] = 1.0
    return LpProblem(c, A_ub, np.array(ub_rhs, dtype=float), A_eq, np.array(eq_rhs, dtype=float),
                     upper, N, names)


class _Tableau:
    """Rows 0..m-1 are constraints, row m the objective; last column the rhs."""

    def __init__(self, A, b, basis):
        m, n = A.shape
        self.T = np.zeros((m + 1, n + 1))
        self.T[:m, :n] = A
        self.T[:m, n] = b
        self.basis = list(basis)
        self.m, self.n = m, n

    def set_objective(self, cost):
        T = self.T
        T[self.m, :] = 0.0
        T[self.m, : self.n] = cost
        for i, j in enumerate(self.basis):
            if T[self.m, j] != 0:
                T[self.m] -= T[self.m, j] * T[i]

    def pivot(self, r, c):
        T = self.T
        T[r] /= T[r, c]
        col = T[:, c].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, c] = 0.0
        T[r, c] = 1.0
        self.basis[r] = c

    def run(self, allowed):
        """Bland's rule on the columns flagged in ``allowed``; returns status."""
        T, m = self.T, self.m
        for _ in range(50000):
            red = T[m, : self.n]
            cand = np.flatnonzero((red < -PIVOT_TOL) & allowed)
            if not len(cand):
                return "optimal"
            c = cand[0]
            colv = T[:m, c]
            pos = colv > PIVOT_TOL
            if not pos.any():
                return "unbounded"
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / colv[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + PIVOT_TOL * max(1.0, abs(best)))
            r = min(ties, key=lambda i: self.basis[i])
            self.pivot(r, c)
        raise LpError("simplex iteration limit reached")


def simplex_solve(p: LpProblem) -> LpSolution:
    """Two-phase dense tableau simplex with Bland's anti-cycling rule."""
    nv = p.num_vars
    fin = np.flatnonzero(np.isfinite(p.upper))
    bound_rows = np.zeros((len(fin), nv))
    bound_rows[np.arange(len(fin)), fin] = 1.0
    A_ub = np.vstack([p.A_ub.reshape(-1, nv), bound_rows])
    b_ub = np.concatenate([p.b_ub, p.upper[fin]])
    A_eq = p.A_eq.reshape(-1, nv)
    m_ub, m_eq = len(A_ub), len(A_eq)
    m = m_ub + m_eq
    # columns: structural | slacks | artificials
    A = np.zeros((m, nv + m_ub))
    A[:m_ub, :nv] = A_ub
    A[:m_ub, nv:] = np.eye(m_ub)
    A[m_ub:, :nv] = A_eq
    b = np.concatenate([b_ub, p.b_eq])
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1
    need_art = [i for i in range(m) if i >= m_ub or neg[i]]
    n_art = len(need_art)
    full = np.zeros((m, nv + m_ub + n_art))
    full[:, : nv + m_ub] = A
    basis = [nv + i if i < m_ub else -1 for i in range(m)]
    for k, i in enumerate(need_art):
        full[i, nv + m_ub + k] = 1.0
        basis[i] = nv + m_ub + k
    tab = _Tableau(full, b, basis)
    n_real = nv + m_ub
    if n_art:
        cost = np.zeros(full.shape[1])
        cost[n_real:] = 1.0
        tab.set_objective(cost)
        tab.run(np.ones(full.shape[1], dtype=bool))
        if -tab.T[m, -1] > 1e-7:
            return LpSolution(np.full(p.n_code, np.nan), np.nan, "infeasible", False)
        # drive zero-level artificials out of the basis
        keep = []
        for i in range(m):
            if tab.basis[i] >= n_real:
                row = tab.T[i, :n_real]
                nz = np.flatnonzero(np.abs(row) > PIVOT_TOL)
                if len(nz):
                    tab.pivot(i, nz[0])
                    keep.append(i)
            else:
                keep.append(i)
        if len(keep) < m:
            rows = keep + [m]
            tab.T = tab.T[rows]
            tab.basis = [tab.basis[i] for i in keep]
            tab.m = m = len(keep)
    allowed = np.zeros(tab.T.shape[1] - 1, dtype=bool)
    allowed[:n_real] = True
    cost = np.zeros(tab.T.shape[1] - 1)
    cost[:nv] = p.c
    tab.set_objective(cost)
    status = tab.run(allowed)
    if status != "optimal":
        return LpSolution(np.full(p.n_code, np.nan), -np.inf, status, False)
    z = np.zeros(tab.T.shape[1] - 1)
    for i, j in enumerate(tab.basis):
        z[j] = tab.T[i, -1]
    z = z[:nv]
    z[np.abs(z) < 1e-12] = 0.0
    resid = 0.0
    if len(p.A_ub):
        resid = max(resid, float(np.max(p.A_ub @ z - p.b_ub, initial=0.0)))
    if len(p.A_eq):
        resid = max(resid, float(np.max(np.abs(p.A_eq @ z - p.b_eq))))
    resid = max(resid, float(np.max(-z, initial=0.0)), float(np.max(z[fin] - p.upper[fin], initial=0.0)))
    if resid > 1e-8:
        raise LpError(f"simplex solution violates constraints by {resid:.3g}")
    x = z[: p.n_code]
    integral = bool(np.all(np.minimum(np.abs(x), np.abs(1 - x)) <= INTEGRAL_TOL))
    return LpSolution(x, float(p.c @ z), "optimal", integral, z, resid)


def lp_decode(code: TannerCode, llr, check_unique=False, eps=1e-7, seed=0, spc_formulation="auto") -> LpSolution:
    """argmin over the fundamental polytope of <llr, x>.

    With ``check_unique`` the LP is re-solved with the objective perturbed by
    ``eps`` times a uniform random vector; the optimum is declared unique when
    the perturbed argmin matches.
    """
    sol = simplex_solve(build_lp(code, llr, spc_formulation))
    if sol.status != "optimal":
        raise LpError(f"LP decoding returned status {sol.status}")
    if check_unique:
        rng = np.random.default_rng(seed)
        lam = _finite_objective(llr)
        alt = simplex_solve(build_lp(code, lam + eps * rng.uniform(-1, 1, len(lam)), spc_formulation))
        sol.unique = bool(alt.status == "optimal" and np.allclose(alt.x, sol.x, atol=INTEGRAL_TOL))
    return sol
