"""Normalized weighted min-sum decoding, local-optimality verification and ML oracles.

Messages live on edges ordered by check then port (``TannerGraph.edges``).
Level weights ``w`` are stored 0-based: ``w[k]`` is the weight of level k+1,
so iteration l of an h-iteration run uses ``w[h - l - 1]``.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .channel import ExtendedRealError, check_finite_pair, ext_scale
from .codes import TannerCode, enumerate_codewords

TIE_TOL = 1e-12


class DecodeError(ValueError):
    pass


@dataclass(frozen=True)
class DecodeOutcome:
    word: np.ndarray
    certified: bool
    iterations: int


@dataclass
class MessageTrace:
    """Per-iteration edge messages; index l holds iteration l."""
    var_to_check: list
    check_to_var: list


class _Layout:
    def __init__(self, g):
        edges = g.edges()
        self.E = len(edges)
        self.edge_var = np.array([v for _, _, v in edges], dtype=np.int64)
        self.edge_check = np.array([j for j, _, _ in edges], dtype=np.int64)
        self.var_deg = g.var_degrees()
        self.N = g.num_variables
        eid = {}
        for e, (j, k, v) in enumerate(edges):
            eid[j, v] = e
        # check groups by degree: (edge-id matrix, leave-one-out columns)
        self.check_groups = []
        by_deg = {}
        for j, row in enumerate(g.check_vars):
            by_deg.setdefault(len(row), []).append([eid[j, v] for v in row])
        for n, rows in sorted(by_deg.items()):
            self.check_groups.append((np.array(rows, dtype=np.int64), _loo(n)))
        self.var_groups = []
        by_deg = {}
        for v, nb in enumerate(g.var_checks):
            by_deg.setdefault(len(nb), []).append((v, [eid[j, v] for j, _ in nb]))
        for k, items in sorted(by_deg.items()):
            vids = np.array([v for v, _ in items], dtype=np.int64)
            mat = np.array([es for _, es in items], dtype=np.int64)
            self.var_groups.append((k, vids, mat, _loo(k)))


def _loo(n):
    """Row i lists the columns 0..n-1 except i."""
    return np.array([[c for c in range(n) if c != i] for i in range(n)], dtype=np.int64).reshape(n, n - 1)


@functools.lru_cache(maxsize=64)
def _layout(g):
    return _Layout(g)


def _as_weights(w, h):
    w = np.asarray(w, dtype=float).reshape(-1)
    if h is None:
        h = len(w)
    if h < 1:
        raise DecodeError("h must be >= 1")
    if len(w) != h:
        raise DecodeError(f"weight vector has length {len(w)}, expected h = {h}")
    if (w < 0).any() or not np.isfinite(w).all():
        raise DecodeError("weights must be finite and non-negative")
    if not (w > 0).any():
        raise DecodeError("weight vector must not be all zero")
    return w, h


def _sum_excluding(L, msgs):
    """Per-edge sum over the other edges of the same variable."""
    out = np.zeros(L.E, dtype=float)
    for k, vids, mat, loo in L.var_groups:
        if k == 1:
            continue
        O = msgs[mat][:, loo]
        if np.isinf(O).any():
            pos = (O == np.inf).any(axis=-1)
            neg = (O == -np.inf).any(axis=-1)
            if (pos & neg).any():
                raise ExtendedRealError("+inf added to -inf at a variable node")
        out[mat] = O.sum(axis=-1) / (k - 1)
    return out


def _variable_update(L, lam, mu_cv, weight):
    lam_e = lam[L.edge_var]
    deg_e = L.var_deg[L.edge_var]
    own = ext_scale(weight / deg_e, lam_e)
    rest = _sum_excluding(L, mu_cv)
    with np.errstate(invalid="ignore"):
        total = own + rest
    return check_finite_pair(total)


def _final_sum(L, mu_cv):
    mu = np.zeros(L.N)
    for k, vids, mat, loo in L.var_groups:
        M = mu_cv[mat]
        pos = (M == np.inf).any(axis=-1)
        neg = (M == -np.inf).any(axis=-1)
        if (pos & neg).any():
            raise ExtendedRealError("+inf added to -inf in the decision sum")
        mu[vids] = M.sum(axis=-1)
    return mu


def _require_spc(code):
    if not code.all_spc:
        raise DecodeError("min-sum decoders need single-parity-check local codes")


def nwms_messages(code: TannerCode, llr, h, w, trace=False):
    """Run NWMS; returns (mu_v, trace or None)."""
    _require_spc(code)
    w, h = _as_weights(w, h)
    lam = np.asarray(llr, dtype=float)
    if lam.shape != (code.N,):
        raise DecodeError("LLR vector length must equal N")
    if np.isnan(lam).any():
        raise DecodeError("LLR vector contains NaN")
    L = _layout(code.graph)
    mu_cv = np.zeros(L.E)
    tr = MessageTrace([], []) if trace else None
    for l in range(h):
        mu_vc = _variable_update(L, lam, mu_cv, w[h - l - 1])
        mu_cv = np.empty(L.E)
        for mat, loo in L.check_groups:
            O = mu_vc[mat][:, loo]
            mu_cv[mat] = np.prod(np.sign(O), axis=-1) * np.min(np.abs(O), axis=-1)
        if trace:
            tr.var_to_check.append(mu_vc.copy())
            tr.check_to_var.append(mu_cv.copy())
    return _final_sum(L, mu_cv), tr


def nwms(code: TannerCode, llr, h, w) -> np.ndarray:
    """Normalized w-weighted min-sum; bit v is 0 iff its final value is > 0."""
    mu, _ = nwms_messages(code, llr, h, w)
    return (mu <= 0).astype(np.uint8)


def _parity_min(O0, O1):
    """Best sums over the last axis with even / odd number of ones."""
    even = np.zeros(O0.shape[:-1])
    odd = np.full(O0.shape[:-1], np.inf)
    for k in range(O0.shape[-1]):
        a, b = O0[..., k], O1[..., k]
        with np.errstate(invalid="ignore"):
            even, odd = np.minimum(even + a, odd + b), np.minimum(even + b, odd + a)
    return even, odd


def nwms2_messages(code: TannerCode, llr0, llr1, h, w, trace=False):
    """Run NWMS2 on log-likelihood vectors; returns (mu_v(0), mu_v(1), trace).

    Trace entries are arrays of shape (E, 2) indexed by the assumed bit.
    """
    _require_spc(code)
    w, h = _as_weights(w, h)
    lam = np.stack([np.asarray(llr0, dtype=float), np.asarray(llr1, dtype=float)], axis=1)
    if lam.shape != (code.N, 2):
        raise DecodeError("log-likelihood vectors must have length N")
    L = _layout(code.graph)
    mu_cv = np.zeros((L.E, 2))
    tr = MessageTrace([], []) if trace else None
    for l in range(h):
        mu_vc = np.empty((L.E, 2))
        for a in (0, 1):
            mu_vc[:, a] = _variable_update(L, lam[:, a], mu_cv[:, a], w[h - l - 1])
        mu_cv = np.empty((L.E, 2))
        for mat, loo in L.check_groups:
            O0 = mu_vc[:, 0][mat][:, loo]
            O1 = mu_vc[:, 1][mat][:, loo]
            even, odd = _parity_min(O0, O1)
            mu_cv[mat, 0] = even
            mu_cv[mat, 1] = odd
        check_finite_pair(mu_cv)
        if trace:
            tr.var_to_check.append(mu_vc.copy())
            tr.check_to_var.append(mu_cv.copy())
    return _final_sum(L, mu_cv[:, 0]), _final_sum(L, mu_cv[:, 1]), tr


def nwms2(code: TannerCode, llr0, llr1, h, w) -> np.ndarray:
    m0, m1, _ = nwms2_messages(code, llr0, llr1, h, w)
    with np.errstate(invalid="ignore"):
        diff = m1 - m0
    check_finite_pair(diff)
    # a difference within rounding of zero is a tie, decided as 1 like nwms
    with np.errstate(invalid="ignore"):
        tol = TIE_TOL * np.maximum(1.0, np.maximum(np.abs(m0), np.abs(m1)))
    tol[~np.isfinite(tol)] = 0.0
    return (diff <= tol).astype(np.uint8)


def verify_values(code: TannerCode, x, llr, h, w, d) -> np.ndarray:
    """Final per-variable values of VERIFY: min-cost w-weighted d-tree per root.

    The division by ||w||_1 is omitted; only signs are meaningful.
    """
    w, h = _as_weights(w, h)
    x = np.asarray(x, dtype=np.uint8)
    if not code.is_codeword(x):
        raise DecodeError("verify needs a codeword")
    if not 2 <= d <= code.d_star:
        raise DecodeError(f"d = {d} outside [2, d* = {code.d_star}]")
    if d > int(code.graph.check_degrees().min()):
        raise DecodeError("d exceeds the smallest check degree")
    lam = np.asarray(llr, dtype=float) * np.where(x == 1, -1.0, 1.0)
    L = _layout(code.graph)
    mu_cv = np.zeros(L.E)
    for l in range(h):
        mu_vc = _variable_update(L, lam, mu_cv, w[h - l - 1])
        mu_cv = np.empty(L.E)
        for mat, loo in L.check_groups:
            O = np.sort(mu_vc[mat][:, loo], axis=-1)[..., : d - 1]
            pos = (O == np.inf).any(axis=-1)
            neg = (O == -np.inf).any(axis=-1)
            if (pos & neg).any():
                raise ExtendedRealError("+inf added to -inf at a check node")
            mu_cv[mat] = O.sum(axis=-1) / (d - 1)
    return _final_sum(L, mu_cv)


def verify(code: TannerCode, x, llr, h, w, d=2) -> bool:
    """True iff codeword x is (h, w, d)-locally optimal for the LLR vector."""
    return bool((verify_values(code, x, llr, h, w, d) > 0).all())


def cert_nwms(code: TannerCode, llr, h, w) -> DecodeOutcome:
    """NWMS followed by a local-optimality certificate with d = 2.

    ``certified`` is False for a failure; ``word`` then holds the raw NWMS
    output for inspection only.
    """
    x = nwms(code, llr, h, w)
    ok = code.is_codeword(x) and verify(code, x, llr, h, w, 2)
    return DecodeOutcome(x, bool(ok), len(np.atleast_1d(w)))


@functools.lru_cache(maxsize=16)
def _codebook(code):
    return enumerate_codewords(code)


def inner_products(words, llr):
    """<llr, x> for each row x, summing only the positions where x is 1."""
    llr = np.asarray(llr, dtype=float)
    if np.isfinite(llr).all():
        return words.astype(float) @ llr
    terms = np.where(words == 1, llr[None, :], 0.0)
    pos = (terms == np.inf).any(axis=1)
    neg = (terms == -np.inf).any(axis=1)
    if (pos & neg).any():
        raise ExtendedRealError("+inf added to -inf in an inner product")
    return terms.sum(axis=1)


def ml_brute(code: TannerCode, llr):
    """Exhaustive ML decoding: (argmin <llr, x>, minimizer is strict)."""
    W = _codebook(code)
    cost = inner_products(W, llr)
    order = np.argsort(cost, kind="stable")
    best = W[order[0]].copy()
    if len(W) == 1:
        return best, True
    c0, c1 = cost[order[0]], cost[order[1]]
    if np.isinf(c0) or np.isinf(c1):
        unique = c0 != c1
    else:
        unique = c1 - c0 > TIE_TOL
    return best, bool(unique)


def weight_preset(kind: str, h: int, dl: int = 3, alpha: float = 1.0) -> np.ndarray:
    """Level weights: ``unit``, ``minsum`` (dl*(dl-1)^(l-1)) or ``normalized`` (dl*((dl-1)/alpha)^(l-1))."""
    if h < 1:
        raise DecodeError("h must be >= 1")
    levels = np.arange(h)
    if kind == "unit":
        return np.ones(h)
    if dl < 2:
        raise DecodeError("dl must be >= 2")
    if kind == "minsum":
        return dl * float(dl - 1) ** levels
    if kind == "normalized":
        if alpha <= 0:
            raise DecodeError("alpha must be positive")
        return dl * ((dl - 1) / alpha) ** levels
    raise DecodeError(f"unknown weight preset {kind!r}")
