"""MBIOS channels (BSC, BI-AWGN, BEC) and their log-likelihood ratios.

LLRs are natural-log ratios ln f(y|0)/f(y|1).  BEC outputs map to +inf, -inf
or 0; infinities are IEEE float infinities and every sum that would combine
+inf with -inf is rejected with ExtendedRealError.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

ERASURE = -1  # BEC output symbol for an erased bit


class ChannelError(ValueError):
    pass


class ExtendedRealError(ArithmeticError):
    """Raised when +inf and -inf meet in a sum."""


def ext_sum(a, axis=None):
    """Sum over the affinely extended reals; +inf + -inf is an error."""
    a = np.asarray(a, dtype=float)
    has_pos = np.any(a == np.inf, axis=axis)
    has_neg = np.any(a == -np.inf, axis=axis)
    if np.any(has_pos & has_neg):
        raise ExtendedRealError("+inf added to -inf")
    return a.sum(axis=axis)


def ext_scale(coef, a):
    """coef * a with the convention 0 * (+-inf) = 0 for a zero coefficient."""
    coef = np.asarray(coef, dtype=float)
    a = np.asarray(a, dtype=float)
    with np.errstate(invalid="ignore"):
        out = coef * a
    return np.where(coef == 0, 0.0, out)


def check_finite_pair(x):
    if np.isnan(x).any():
        raise ExtendedRealError("+inf added to -inf")
    return x


@dataclass(frozen=True)
class BSC:
    p: float
    scaled: bool = False  # LLRs in {+1, -1} instead of +-ln((1-p)/p)

    def __post_init__(self):
        if not 0 < self.p < 0.5:
            raise ChannelError("BSC crossover must lie in (0, 1/2)")

    @property
    def name(self):
        return "bsc"

    @property
    def param(self):
        return self.p


@dataclass(frozen=True)
class BIAWGN:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ChannelError("BI-AWGN noise std dev must be positive")

    @property
    def name(self):
        return "awgn"

    @property
    def param(self):
        return self.sigma


@dataclass(frozen=True)
class BEC:
    eps: float

    def __post_init__(self):
        if not 0 <= self.eps < 1:
            raise ChannelError("BEC erasure probability must lie in [0, 1)")

    @property
    def name(self):
        return "bec"

    @property
    def param(self):
        return self.eps


def make_channel(name: str, param: float, scaled=False):
    name = name.lower()
    if name == "bsc":
        return BSC(param, scaled)
    if name in ("awgn", "biawgn"):
        return BIAWGN(param)
    if name == "bec":
        return BEC(param)
    raise ChannelError(f"unknown channel {name!r}")


def llr_of_output(ch, y) -> np.ndarray:
    y = np.asarray(y)
    if isinstance(ch, BSC):
        if not np.isin(y, (0, 1)).all():
            raise ChannelError("BSC outputs must be bits")
        mag = 1.0 if ch.scaled else math.log((1 - ch.p) / ch.p)
        return np.where(y == 0, mag, -mag).astype(float)
    if isinstance(ch, BIAWGN):
        y = y.astype(float)
        if not np.isfinite(y).all():
            raise ChannelError("AWGN outputs must be finite reals")
        return 2.0 * y / ch.sigma ** 2
    if isinstance(ch, BEC):
        if not np.isin(y, (0, 1, ERASURE)).all():
            raise ChannelError("BEC outputs must be 0, 1 or ERASURE")
        return np.select([y == 0, y == 1], [np.inf, -np.inf], 0.0)
    raise ChannelError(f"unsupported channel {ch!r}")


def log_likelihoods(ch, y):
    """Pair (lambda(0), lambda(1)) with lambda_i(a) = -ln f(y_i | a).

    Densities are taken up to a per-symbol constant, which cancels in every
    decoder.  For the BEC, an impossible symbol gets +inf.
    """
    y = np.asarray(y)
    if isinstance(ch, BSC):
        if ch.scaled:
            l0 = np.where(y == 0, 0.0, 1.0)
            l1 = np.where(y == 1, 0.0, 1.0)
            return l0 - 0.5, l1 - 0.5
        a, b = -math.log(1 - ch.p), -math.log(ch.p)
        return np.where(y == 0, a, b), np.where(y == 1, a, b)
    if isinstance(ch, BIAWGN):
        y = y.astype(float)
        s2 = 2 * ch.sigma ** 2
        return (y - 1) ** 2 / s2, (y + 1) ** 2 / s2
    if isinstance(ch, BEC):
        l0 = np.where(y == 1, np.inf, 0.0)
        l1 = np.where(y == 0, np.inf, 0.0)
        return l0, l1
    raise ChannelError(f"unsupported channel {ch!r}")


def transmit(ch, x, rng):
    """Channel output for codeword x using the given numpy Generator."""
    x = np.asarray(x, dtype=np.uint8)
    if isinstance(ch, BSC):
        return x ^ (rng.random(x.shape) < ch.p).astype(np.uint8)
    if isinstance(ch, BIAWGN):
        return (1.0 - 2.0 * x) + ch.sigma * rng.standard_normal(x.shape)
    if isinstance(ch, BEC):
        y = x.astype(np.int64)
        y[rng.random(x.shape) < ch.eps] = ERASURE
        return y
    raise ChannelError(f"unsupported channel {ch!r}")


def sample_transmission(ch, x, seed):
    """Send x through the channel; returns (y, llr).  Deterministic per seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = np.asarray(x, dtype=np.uint8)
    if not np.isin(x, (0, 1)).all():
        raise ChannelError("transmitted word must be binary")
    y = transmit(ch, x, rng)
    return y, llr_of_output(ch, y)


def trial_rng(base_seed, *keys):
    """Independent generator for one trial, keyed by (base seed, keys...)."""
    ss = np.random.SeedSequence(entropy=int(base_seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.default_rng(ss)
