"""Local codes and Tanner codes, with brute-force enumeration helpers."""
from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .graph import TannerGraph, read_alist

MAX_EXPLICIT_WORDS = 4096
ENUMERATION_GUARD = 24


class CodeError(ValueError):
    pass


def _all_words(n):
    """All binary words of length n as rows of a uint8 matrix, lexicographic order."""
    idx = np.arange(2 ** n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def _word_index(words):
    n = words.shape[1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return words.astype(np.int64) @ weights


@dataclass(frozen=True, eq=False)
class LocalCode:
    kind: str  # "SPC" or "explicit"
    n: int
    words: np.ndarray = field(default=None, repr=False)  # explicit codeword list
    d_min: int = field(init=False)
    _table: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if self.kind == "SPC":
            if self.n < 2:
                raise CodeError("SPC length must be >= 2")
            object.__setattr__(self, "d_min", 2)
            return
        if self.kind != "explicit":
            raise CodeError(f"unknown local code kind {self.kind!r}")
        W = np.unique(np.asarray(self.words, dtype=np.uint8).reshape(-1, self.n), axis=0)
        if len(W) > MAX_EXPLICIT_WORDS:
            raise CodeError(f"explicit local code has {len(W)} words (limit {MAX_EXPLICIT_WORDS})")
        if self.n > 24:
            raise CodeError("explicit local code longer than 24 bits")
        table = np.zeros(2 ** self.n, dtype=bool)
        table[_word_index(W)] = True
        if not table[0]:
            raise CodeError("explicit local code does not contain the zero word")
        idx = _word_index(W)
        closed = table[np.bitwise_xor.outer(idx, idx)].all()
        if not closed:
            raise CodeError("explicit local code is not closed under XOR (non-linear)")
        weights = W.sum(axis=1)
        nonzero = weights[weights > 0]
        d = int(nonzero.min()) if len(nonzero) else 0
        if d < 2:
            raise CodeError(f"local code minimum distance {d} < 2")
        object.__setattr__(self, "words", W)
        object.__setattr__(self, "d_min", d)
        object.__setattr__(self, "_table", table)

    @property
    def size(self):
        return 2 ** (self.n - 1) if self.kind == "SPC" else len(self.words)

    def codewords(self):
        if self.kind == "SPC":
            W = _all_words(self.n)
            return W[W.sum(axis=1) % 2 == 0]
        return self.words

    def contains(self, word):
        word = np.asarray(word, dtype=np.uint8)
        if self.kind == "SPC":
            return word.sum(axis=-1) % 2 == 0
        return self._table[_word_index(word.reshape(-1, self.n))].reshape(word.shape[:-1])


def _hamming_parity(r):
    """Parity-check matrix whose columns are 1..2^r-1 in binary."""
    cols = np.arange(1, 2 ** r)
    return ((cols[None, :] >> np.arange(r - 1, -1, -1)[:, None]) & 1).astype(np.uint8)


def _null_space_words(H):
    n = H.shape[1]
    W = _all_words(n)
    return W[((W.astype(np.int64) @ H.T.astype(np.int64)) % 2 == 0).all(axis=1)]


def make_local_code(spec) -> LocalCode:
    """Build a local code from a tag.

    Accepted tags: ``"SPC(n)"`` (or ``("SPC", n)``), ``"Hamming(7,4)"``,
    ``"ExtHamming(8,4)"``, ``"ExtHamming(16,11)"``, or an explicit list of
    codewords.
    """
    if isinstance(spec, LocalCode):
        return spec
    if isinstance(spec, tuple) and len(spec) == 2 and spec[0] == "SPC":
        return LocalCode("SPC", int(spec[1]))
    if isinstance(spec, str):
        tag = spec.replace(" ", "")
        if tag.startswith("SPC(") and tag.endswith(")"):
            return LocalCode("SPC", int(tag[4:-1]))
        if tag == "Hamming(7,4)":
            return LocalCode("explicit", 7, _null_space_words(_hamming_parity(3)))
        if tag in ("ExtHamming(8,4)", "ExtHamming(16,11)"):
            r = 3 if tag == "ExtHamming(8,4)" else 4
            W = _null_space_words(_hamming_parity(r))
            W = np.hstack([W, W.sum(axis=1, keepdims=True) % 2]).astype(np.uint8)
            return LocalCode("explicit", 2 ** r, W)
        raise CodeError(f"unknown local code tag {spec!r}")
    W = np.asarray(spec, dtype=np.uint8)
    if W.ndim != 2:
        raise CodeError("explicit local code must be a list of equal-length words")
    return LocalCode("explicit", W.shape[1], W)


@dataclass(frozen=True, eq=False)
class TannerCode:
    graph: TannerGraph
    locals: tuple

    def __post_init__(self):
        locs = tuple(self.locals)
        if len(locs) != self.graph.num_checks:
            raise CodeError("one local code per check is required")
        for j, lc in enumerate(locs):
            if lc.n != self.graph.check_degree(j):
                raise CodeError(f"check {j}: local code length {lc.n} != degree {self.graph.check_degree(j)}")
        object.__setattr__(self, "locals", locs)

    @classmethod
    def ldpc(cls, graph):
        """Tanner code with a single parity check at every check node."""
        return cls(graph, tuple(LocalCode("SPC", graph.check_degree(j)) for j in range(graph.num_checks)))

    @property
    def N(self):
        return self.graph.num_variables

    @property
    def d_star(self):
        return min(lc.d_min for lc in self.locals)

    @property
    def all_spc(self):
        return all(lc.kind == "SPC" for lc in self.locals)

    def _check(self, x):
        x = np.asarray(x, dtype=np.uint8)
        if x.shape[-1] != self.N:
            raise CodeError(f"word length {x.shape[-1]} != N = {self.N}")
        return x

    def is_codeword(self, x) -> bool:
        x = self._check(x)
        return bool(self._members(x[None, :])[0])

    def _members(self, X):
        ok = np.ones(len(X), dtype=bool)
        for row, lc in zip(self.graph.check_vars, self.locals):
            ok &= lc.contains(X[:, list(row)])
        return ok


def is_codeword(code: TannerCode, x) -> bool:
    return code.is_codeword(x)


def enumerate_codewords(code: TannerCode, override=False) -> np.ndarray:
    """All codewords, sorted lexicographically, by scanning {0,1}^N."""
    N = code.N
    if N > ENUMERATION_GUARD and not override:
        raise CodeError(f"N = {N} exceeds the enumeration guard {ENUMERATION_GUARD}")
    out = []
    chunk = 1 << 18
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    for start in range(0, 2 ** N, chunk):
        idx = np.arange(start, min(start + chunk, 2 ** N), dtype=np.int64)
        X = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        out.append(X[code._members(X)])
    return np.concatenate(out)


def intersect_extensions(code: TannerCode) -> np.ndarray:
    """Codewords computed check by check as an intersection of local-code extensions."""
    N = code.N
    survivors = None
    for row, lc in zip(code.graph.check_vars, code.locals):
        # extension of this local code to length N: free outside the check
        local = lc.codewords()
        free = [v for v in range(N) if v not in row]
        ext = set()
        for cw in local:
            for bits in itertools.product((0, 1), repeat=len(free)):
                word = [0] * N
                for v, b in zip(row, cw):
                    word[v] = int(b)
                for v, b in zip(free, bits):
                    word[v] = b
                ext.add(tuple(word))
        survivors = ext if survivors is None else survivors & ext
    return np.array(sorted(survivors), dtype=np.uint8).reshape(-1, N)


def minimum_distance(code: TannerCode) -> int:
    W = enumerate_codewords(code)
    w = W.sum(axis=1)
    w = w[w > 0]
    return int(w.min()) if len(w) else 0


def load_code(spec) -> TannerCode:
    """Load a Tanner code from a JSON description (dict, JSON text, or path).

    Layout: ``{"alist": "path/to/graph.alist", "local_codes": "SPC"}``; the
    ``local_codes`` entry is either one tag applied to every check or a list
    with one tag per check.  Relative alist paths resolve against the JSON
    file's directory.
    """
    base = "."
    if isinstance(spec, (str, os.PathLike)) and os.path.exists(spec):
        base = os.path.dirname(os.path.abspath(spec))
        with open(spec, encoding="utf-8") as f:
            spec = json.load(f)
    elif isinstance(spec, str):
        spec = json.loads(spec)
    path = spec["alist"]
    if not os.path.isabs(path):
        path = os.path.join(base, path)
    g = read_alist(path)
    tags = spec.get("local_codes", "SPC")
    if isinstance(tags, str):
        tags = [tags] * g.num_checks
    if len(tags) != g.num_checks:
        raise CodeError("local_codes list length must equal the number of checks")
    locs = []
    for j, tag in enumerate(tags):
        if tag == "SPC":
            tag = f"SPC({g.check_degree(j)})"
        locs.append(make_local_code(tag))
    return TannerCode(g, tuple(locs))
