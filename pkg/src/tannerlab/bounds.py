"""Exact sum-min-sum process laws and the LP-decoding error bounds built on them.

Laws live on an integer lattice scaled by ``step``.  For the BSC the LLRs are
scaled to gamma = -1 (probability p) or +1 (probability 1 - p) and every
level weight is an integer, so the whole recursion is exact up to float
rounding of the masses.

Recursion (weights omega_0, omega_1, ...):

    Y_0 = omega_0 * gamma
    X_l = sum of the d-1 smallest of dR-1 independent copies of Y_l
    Y_l = omega_l * gamma + X_{l-1}^(1) + ... + X_{l-1}^(dL-1)
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import bdtrc, logsumexp, ndtr

LATTICE_GUARD = 2 * 10 ** 6
STATE_GUARD = 10 ** 9  # (support point, slot, partial sum) states per order-statistic sum
T_MAX = 50.0
T_TOL = 1e-10
GRID = 1e-4


class BoundsError(ValueError):
    pass


class LatticeGuardError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class Pmf:
    """Law of ``step * (start + k)`` with probability ``mass[k]``."""
    start: int
    mass: np.ndarray
    step: float = 1.0

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        if m.ndim != 1 or not len(m):
            raise BoundsError("mass must be a nonempty vector")
        if (m < -1e-15).any():
            raise BoundsError("negative probability mass")
        object.__setattr__(self, "mass", np.clip(m, 0.0, None))

    @classmethod
    def from_points(cls, values, probs, step=1.0):
        """Build from integer lattice indices ``values`` (any order, repeats allowed)."""
        values = np.asarray(values, dtype=np.int64)
        lo = int(values.min())
        mass = np.zeros(int(values.max()) - lo + 1)
        np.add.at(mass, values - lo, np.asarray(probs, dtype=float))
        return cls(lo, mass, step).trimmed()

    @property
    def support_size(self):
        return len(self.mass)

    def lattice(self):
        return np.arange(self.start, self.start + len(self.mass), dtype=np.int64)

    def values(self):
        return self.step * self.lattice().astype(float)

    def total(self):
        return math.fsum(self.mass)

    def trimmed(self):
        nz = np.flatnonzero(self.mass > 0)
        if not len(nz):
            raise BoundsError("law has no mass")
        return Pmf(self.start + int(nz[0]), self.mass[nz[0]: nz[-1] + 1], self.step)

    def normalized(self):
        tot = self.total()
        if abs(tot - 1.0) > 1e-12:
            raise BoundsError(f"masses sum to {tot!r}, not 1")
        return Pmf(self.start, self.mass / tot, self.step)

    def prob_le(self, x):
        return math.fsum(self.mass[self.values() <= x])

    def mean(self):
        return float(self.mass @ self.values())

    def log_laplace(self, t):
        """ln E exp(-t X)."""
        nz = self.mass > 0
        return float(logsumexp(np.log(self.mass[nz]) - t * self.values()[nz]))

    def laplace(self, t):
        return math.exp(self.log_laplace(t))

    def scaled(self, k: int):
        """Law of k * X (k a positive integer)."""
        if k < 1 or int(k) != k:
            raise BoundsError("lattice scale factor must be a positive integer")
        k = int(k)
        mass = np.zeros((len(self.mass) - 1) * k + 1)
        mass[::k] = self.mass
        return Pmf(self.start * k, mass, self.step)


def _check_lattice(n, what):
    if n > LATTICE_GUARD:
        raise LatticeGuardError(f"{what}: {n} lattice points exceed the guard {LATTICE_GUARD}")


def _same_step(a: Pmf, b: Pmf):
    if not math.isclose(a.step, b.step, rel_tol=1e-12):
        raise BoundsError("laws live on different lattices")


def convolve(a: Pmf, b: Pmf) -> Pmf:
    """Law of the sum of independent draws."""
    _same_step(a, b)
    _check_lattice(len(a.mass) + len(b.mass) - 1, "convolution")
    return Pmf(a.start + b.start, np.convolve(a.mass, b.mass), a.step)


def convolve_power(a: Pmf, n: int) -> Pmf:
    if n < 1:
        raise BoundsError("need at least one copy")
    out = a
    for _ in range(n - 1):
        out = convolve(out, a)
    return out


def order_stat_sum_pmf(y: Pmf, n: int, k: int) -> Pmf:
    """Law of the sum of the k smallest among n i.i.d. copies of y.

    Sweeps the support upward.  When the sweep is at value b, the k-th
    smallest copy equals b exactly when i < k copies lie below b, c >= k - i
    copies equal b and the rest exceed b.  ``below[i]`` keeps the unnormalized
    law of the sum of i copies restricted to values < b.
    """
    if not 1 <= k <= n:
        raise BoundsError("need 1 <= k <= n")
    y = y.trimmed()
    L = len(y.mass) - 1
    _check_lattice(k * L + 1, "order-statistic sum")
    states = int(np.count_nonzero(y.mass)) * k * (k * L + 1)
    if states > STATE_GUARD:
        raise LatticeGuardError(f"order-statistic sum needs {states:.3g} states (guard {STATE_GUARD:.0e})")
    q = y.mass
    above = np.concatenate([np.cumsum(q[::-1])[::-1][1:], [0.0]])  # P(Y > b)
    below = [np.ones(1)] + [np.zeros(i * L + 1) for i in range(1, k)]
    out = np.zeros(k * L + 1)
    for off in range(L + 1):
        qb, tb = q[off], above[off]
        if qb == 0:
            continue
        for i in range(k):
            coef = math.comb(n, i) * math.fsum(
                math.comb(n - i, c) * qb ** c * tb ** (n - i - c) for c in range(k - i, n - i + 1))
            if coef:
                sh = (k - i) * off
                out[sh: sh + len(below[i])] += coef * below[i]
        for i in range(k - 1, 0, -1):
            for c in range(1, i + 1):
                src = below[i - c]
                sh = c * off
                below[i][sh: sh + len(src)] += math.comb(i, c) * qb ** c * src
    return Pmf(k * y.start, out, y.step).trimmed()


def bsc_gamma(p: float) -> Pmf:
    """Scaled BSC LLR under the all-zero word: -1 w.p. p, +1 w.p. 1-p."""
    if not 0 < p < 0.5:
        raise BoundsError("p must lie in (0, 1/2)")
    return Pmf(-1, np.array([p, 0.0, 1.0 - p]))


def quantized_awgn_gamma(sigma: float, points: int = 2001, width: float = 10.0) -> Pmf:
    """BI-AWGN LLR law under the all-zero word, binned on a uniform grid.

    The LLR is N(2/sigma^2, 4/sigma^2).  The grid is centred at 0, spans the
    mean plus ``width`` standard deviations on each side, and each point
    receives the normal mass of its cell (tails folded into the end cells).
    """
    if sigma <= 0:
        raise BoundsError("sigma must be positive")
    if points < 3 or points % 2 == 0:
        raise BoundsError("points must be odd and >= 3")
    mu, sd = 2.0 / sigma ** 2, 2.0 / sigma
    half = (points - 1) // 2
    step = (mu + width * sd) / half
    edges = (np.arange(-half, half + 2) - 0.5) * step
    cdf = ndtr((edges - mu) / sd)
    cdf[0], cdf[-1] = 0.0, 1.0
    return Pmf(-half, np.diff(cdf), step).trimmed()


@dataclass
class ProcessParams:
    p: float
    d: int
    dL: int
    dR: int
    omega: tuple = ()  # integer level weights omega_0, omega_1, ...
    gamma: Pmf = field(default=None, repr=False)  # defaults to the scaled BSC law

    def __post_init__(self):
        if self.d < 2 or self.dL < 2 or self.dR < 2:
            raise BoundsError("need d, dL, dR >= 2")
        if self.d > self.dR:
            raise BoundsError("d cannot exceed dR")
        if self.gamma is None:
            self.gamma = bsc_gamma(self.p)
        self.omega = tuple(self.omega)

    @property
    def D(self):
        return (self.dL - 1) * (self.d - 1)

    def weight(self, l):
        if l >= len(self.omega):
            raise BoundsError(f"omega has no entry for level {l}")
        w = self.omega[l]
        if w < 1 or int(w) != w:
            raise BoundsError("lattice recursion needs positive integer weights")
        return int(w)


def geometric_weights(d, dL, s):
    """omega_l = ((dL-1)(d-1))^l for l = 0..s."""
    return tuple(((dL - 1) * (d - 1)) ** l for l in range(s + 1))


def omega_from_w(w, d, dL):
    """Process weights for certificate weights w (w[k] is w_{k+1})."""
    h = len(w)
    return tuple(w[h - l - 1] / dL * (dL - 1) ** (l - h + 1) * (d - 1) ** (h - l) for l in range(h))


def pmf_x0(p: float, d: int, dR: int) -> Pmf:
    """Closed-form law of X_0 for the scaled BSC with omega_0 = 1."""
    dp, n = d - 1, dR - 1
    probs = [math.comb(n, k) * p ** k * (1 - p) ** (n - k) for k in range(dp)]
    tail = float(bdtrc(dp - 1, n, p))  # P(Bin(n, p) >= dp)
    vals = [dp - 2 * k for k in range(dp)] + [-dp]
    return Pmf.from_points(vals, probs + [tail])


def process_laws(params: ProcessParams, s: int, trace=None):
    """Exact laws [(Y_0, X_0), ..., (Y_s, X_s)].

    ``trace`` (a list) collects (level, |supp Y|, |supp X|).
    """
    laws = []
    X = None
    g = params.gamma
    for l in range(s + 1):
        Y = g.scaled(params.weight(l))
        if l > 0:
            for _ in range(params.dL - 1):
                Y = convolve(Y, X)
        Y = Y.trimmed()
        try:
            X = order_stat_sum_pmf(Y, params.dR - 1, params.d - 1)
        except LatticeGuardError as exc:
            raise LatticeGuardError(f"level {l}: {exc}") from None
        if trace is not None:
            trace.append((l, Y.support_size, X.support_size))
        laws.append((Y, X))
    return laws


def propagate_process(params: ProcessParams, s: int, trace=None) -> Pmf:
    """Exact law of X_s."""
    return process_laws(params, s, trace)[-1][1]


def exact_pi(params: ProcessParams, h: int) -> float:
    """Pr{ X_{h-1}^(1) + ... + X_{h-1}^(dL) <= 0 }, omega of length >= h."""
    if h < 1:
        raise BoundsError("h must be >= 1")
    X = propagate_process(params, h - 1)
    return min(1.0, convolve_power(X, params.dL).prob_le(0.0))


class LaplaceMin(NamedTuple):
    t: float
    value: float
    log_value: float
    at_boundary: bool  # minimum sits at t = 0 or t = T_MAX


def _ternary(f, lo=0.0, hi=T_MAX, tol=T_TOL):
    while hi - lo > tol:
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    t = 0.5 * (lo + hi)
    if f(0.0) <= f(t):
        t = 0.0
    return t


def minimize_convex(f) -> LaplaceMin:
    """Minimize a convex log-scale function of t on [0, T_MAX]."""
    t = _ternary(f)
    lv = f(t)
    edge = t <= 1e-8 or t >= T_MAX - 1e-6
    return LaplaceMin(t, math.exp(lv), lv, edge)


def min_laplace(x: Pmf) -> LaplaceMin:
    """min over t >= 0 of E exp(-t X)."""
    return minimize_convex(x.log_laplace)


class AlphaResult(NamedTuple):
    alpha: float
    log_alpha: float
    t: float
    at_boundary: bool


def _log_alpha2_bsc(p, d, dR, t):
    dp = d - 1
    return math.log(math.comb(dR - 1, dp)) + dp * math.log((1 - p) * math.exp(-t) + p * math.exp(t))


def alpha1_closed(p, d, dR, t):
    """E exp(-t X_0) for the scaled BSC, closed form."""
    dp, n = d - 1, dR - 1
    head = math.fsum(math.comb(n, k) * p ** k * (1 - p) ** (n - k) * math.exp(-t * (dp - 2 * k)) for k in range(dp))
    tail = float(bdtrc(dp - 1, n, p))  # P(Bin(n, p) >= dp)
    return head + tail * math.exp(t * dp)


def alpha(p: float, d: int, dL: int, dR: int, mode="uniform", s: int = 0) -> AlphaResult:
    """Bound parameter alpha; the bound is useful when alpha < 1.

    uniform:  min_t alpha1(t) * alpha2(t)^(1/(D-1)), D = (dL-1)(d-1)
    improved: min_t E exp(-t X_s) * (C(dR-1, d-1) (2 sqrt(p(1-p)))^(d-1))^(1/(D-1)),
              X_s computed with omega_l = D^l.
    """
    D = (dL - 1) * (d - 1)
    if D < 2:
        raise BoundsError("need (dL-1)(d-1) >= 2")
    if not 0 < p < 0.5:
        raise BoundsError("p must lie in (0, 1/2)")
    if d > dR:
        raise BoundsError("d cannot exceed dR")
    if mode == "uniform":
        def f(t):
            return math.log(alpha1_closed(p, d, dR, t)) + _log_alpha2_bsc(p, d, dR, t) / (D - 1)
        m = minimize_convex(f)
        return AlphaResult(m.value, m.log_value, m.t, m.at_boundary)
    if mode == "improved":
        X = propagate_process(ProcessParams(p, d, dL, dR, geometric_weights(d, dL, s)), s)
        m = min_laplace(X)
        extra = (math.log(math.comb(dR - 1, d - 1)) + (d - 1) * math.log(2 * math.sqrt(p * (1 - p)))) / (D - 1)
        la = m.log_value + extra
        return AlphaResult(math.exp(la), la, m.t, m.at_boundary)
    raise BoundsError(f"unknown mode {mode!r}")


def mbios_alpha(gamma: Pmf, d: int, dL: int, dR: int) -> AlphaResult:
    """min_t E e^{-tX_0} (C(dR-1,d-1) (E e^{-t gamma})^(d-1))^(1/((dL-1)(d-1)-1))."""
    D = (dL - 1) * (d - 1)
    if D < 2:
        raise BoundsError("need (dL-1)(d-1) >= 2")
    X0 = order_stat_sum_pmf(gamma, dR - 1, d - 1)
    logc = math.log(math.comb(dR - 1, d - 1))

    def f(t):
        return X0.log_laplace(t) + (logc + (d - 1) * gamma.log_laplace(t)) / (D - 1)

    m = minimize_convex(f)
    return AlphaResult(m.value, m.log_value, m.t, m.at_boundary)


def uniform_pi_bound(a: float, dL: int, d: int, h: int) -> float:
    """alpha^(dL (dL' d')^(h-1) - dL) for uniform weights."""
    D = (dL - 1) * (d - 1)
    return a ** (dL * D ** (h - 1) - dL)


class NoThresholdError(BoundsError):
    pass


@dataclass
class ThresholdResult:
    p0: float
    trace: list  # (p, alpha, t) in evaluation order
    d: int
    dL: int
    dR: int
    mode: str
    s: int

    def csv_rows(self):
        return [(p, a, t, self.s, self.d, self.dL, self.dR) for p, a, t in sorted(self.trace)]


CSV_HEADER = ("p", "alpha", "t_star", "s", "d", "dL", "dR")


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def threshold_search(d: int, dL: int, dR: int, mode="uniform", s: int = 0, grid=GRID) -> ThresholdResult:
    """Largest p on the grid with alpha(p) < 1, by bisection over grid indices.

    alpha is assumed increasing in p; the evaluated samples are checked for
    that and a violation raises BoundsError.
    """
    trace = []

    def below_one(k):
        p = k * grid
        r = alpha(p, d, dL, dR, mode, s)
        trace.append((p, r.alpha, r.t))
        return r.log_alpha < 0

    lo = 1
    if not below_one(lo):
        raise NoThresholdError(f"alpha >= 1 already at p = {grid}")
    hi = int(math.ceil(0.5 / grid)) - 1
    if below_one(hi):
        return ThresholdResult(hi * grid, trace, d, dL, dR, mode, s)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if below_one(mid):
            lo = mid
        else:
            hi = mid
    pts = sorted(trace)
    for (p1, a1, _), (p2, a2, _) in zip(pts, pts[1:]):
        if a2 < a1 * (1 - 1e-12):
            raise BoundsError(f"alpha not monotone in p: alpha({p1}) = {a1} > alpha({p2}) = {a2}")
    return ThresholdResult(round(lo * grid, 10), trace, d, dL, dR, mode, s)
