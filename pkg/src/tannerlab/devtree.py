"""Path-prefix trees, d-trees, weighted projections and brute-force local optimality.

Path weights follow the w-weighted subtree rule: a variable path p of length
2l gets ``w_l / ||w||_1 / deg_G(t(p))`` times ``1 / (deg_T(q) - 1)`` for every
proper prefix q of positive length.  The zero-length root path carries no
factor; this is the normalization under which the min-sum messages, VERIFY
and the conic decomposition identities all hold.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .codes import TannerCode
from .graph import TannerGraph

VAR, CHECK = 0, 1
NODE_GUARD = 10 ** 6
DTREE_GUARD = 10 ** 5


class GuardError(RuntimeError):
    pass


@dataclass(eq=False)
class PathPrefixTree:
    """All backtrackless paths of length <= height starting at a root node.

    Node 0 is the zero-length path.  ``parent[i]`` is the prefix one step
    shorter, ``terminal[i]`` the graph node the path ends at (a variable index
    for VAR nodes, a check index for CHECK nodes).
    """
    graph: TannerGraph
    root: int
    height: int
    root_kind: int = VAR
    parent: list = field(default_factory=list)
    kind: list = field(default_factory=list)
    terminal: list = field(default_factory=list)
    depth: list = field(default_factory=list)
    children: list = field(default_factory=list)

    def __len__(self):
        return len(self.parent)

    def var_paths(self):
        return [i for i in range(len(self)) if self.kind[i] == VAR]

    def prefixes(self, i):
        """Proper prefixes of path i, root first."""
        out = []
        p = self.parent[i]
        while p != -1:
            out.append(p)
            p = self.parent[p]
        return out[::-1]

    def path_nodes(self, i):
        return [(self.kind[j], self.terminal[j]) for j in self.prefixes(i) + [i]]


def build_path_prefix(g: TannerGraph, r: int, height: int, root_kind=VAR, guard=NODE_GUARD) -> PathPrefixTree:
    t = PathPrefixTree(g, r, height, root_kind)

    def add(par, kind, term, depth):
        if len(t.parent) >= guard:
            raise GuardError(f"path-prefix tree exceeds {guard} nodes")
        t.parent.append(par)
        t.kind.append(kind)
        t.terminal.append(term)
        t.depth.append(depth)
        t.children.append([])
        if par >= 0:
            t.children[par].append(len(t.parent) - 1)
        return len(t.parent) - 1

    add(-1, root_kind, r, 0)
    frontier = [0]
    for depth in range(1, height + 1):
        nxt = []
        for i in frontier:
            back = t.terminal[t.parent[i]] if t.parent[i] >= 0 else None
            if t.kind[i] == VAR:
                for j, _ in g.var_checks[t.terminal[i]]:
                    if j != back:
                        nxt.append(add(i, CHECK, j, depth))
            else:
                for v in g.check_vars[t.terminal[i]]:
                    if v != back:
                        nxt.append(add(i, VAR, v, depth))
        frontier = nxt
    return t


@dataclass(frozen=True, eq=False)
class DTree:
    tree: PathPrefixTree
    nodes: frozenset

    def tree_children(self, i):
        return [c for c in self.tree.children[i] if c in self.nodes]


def count_d_trees(t: PathPrefixTree, d: int) -> int:
    """Exact number of d-trees (elementary symmetric sums over check children)."""
    memo = {}

    def cnt(i):
        if i in memo:
            return memo[i]
        ch = t.children[i]
        if t.kind[i] == VAR:
            val = 1
            for c in ch:
                val *= cnt(c)
        else:
            k = d - 1
            e = [1] + [0] * k  # elementary symmetric polynomials
            for c in ch:
                x = cnt(c)
                for m in range(k, 0, -1):
                    e[m] += e[m - 1] * x
            val = e[k]
        memo[i] = val
        return val

    return cnt(0)


def enumerate_d_trees(t: PathPrefixTree, d: int, guard=DTREE_GUARD) -> list:
    if t.root_kind != VAR or t.height % 2:
        raise ValueError("d-trees need a variable root and even height")
    total = count_d_trees(t, d)
    if total > guard:
        raise GuardError(f"{total} d-trees exceed the enumeration guard {guard}")

    def options(i):
        ch = t.children[i]
        if t.kind[i] == VAR:
            parts = [options(c) for c in ch]
            return [(i,) + sum(combo, ()) for combo in itertools.product(*parts)]
        out = []
        for sub in itertools.combinations(ch, d - 1):
            for combo in itertools.product(*[options(c) for c in sub]):
                out.append((i,) + sum(combo, ()))
        return out

    return [DTree(t, frozenset(o)) for o in options(0)]


def sample_d_tree(t: PathPrefixTree, d: int, rng) -> DTree:
    """Top-down sample: every check path keeps d-1 children chosen uniformly."""
    nodes = []
    stack = [0]
    while stack:
        i = stack.pop()
        nodes.append(i)
        ch = t.children[i]
        if t.kind[i] == VAR:
            stack.extend(ch)
        else:
            if len(ch) < d - 1:
                raise ValueError("check path with fewer than d-1 children")
            stack.extend(ch[k] for k in rng.choice(len(ch), size=d - 1, replace=False))
    return DTree(t, frozenset(nodes))


def _path_weights(t: PathPrefixTree, member, tdeg, w):
    """Weights of variable paths for the subtree given by ``member``.

    ``tdeg(i)`` is the tree degree of node i inside the subtree.
    """
    w = np.asarray(w, dtype=float)
    wn = w / w.sum()
    g = t.graph
    out = {}
    stack = [(0, 1.0)]
    while stack:
        i, prod = stack.pop()
        if t.kind[i] == VAR and i != 0:
            out[i] = wn[math.ceil(t.depth[i] / 2) - 1] / g.var_degree(t.terminal[i]) * prod
        kids = [c for c in t.children[i] if member(c)]
        if not kids:
            continue
        factor = prod if i == 0 else prod / (tdeg(i) - 1)
        stack.extend((c, factor) for c in kids)
    return out


def weighted_tree(dtree: DTree, w) -> dict:
    """w_T(p) for every variable path p of the d-tree (root gets 0)."""
    t = dtree.tree
    if len(w) * 2 != t.height:
        raise ValueError("weight vector length must equal height / 2")
    nodes = dtree.nodes

    def tdeg(i):
        return sum(1 for c in t.children[i] if c in nodes) + (1 if i != 0 else 0)

    return _path_weights(t, nodes.__contains__, tdeg, w)


def project_weighted_tree(g: TannerGraph, dtree: DTree, w) -> np.ndarray:
    """Projection of the w-weighted d-tree onto the variables of g."""
    pi = np.zeros(g.num_variables)
    for i, val in weighted_tree(dtree, w).items():
        pi[dtree.tree.terminal[i]] += val
    return pi


def full_tree_weights(t: PathPrefixTree, w) -> dict:
    """w-weighted path-prefix tree (every node kept)."""
    return _path_weights(t, lambda c: True, lambda i: len(t.children[i]) + 1, w)


@dataclass(frozen=True, eq=False)
class Deviation:
    beta: np.ndarray
    root: int
    dtree: DTree
    c: float


def deviation_set(code: TannerCode, h: int, w, d: int, guard=DTREE_GUARD) -> list:
    """All PNW deviations, normalized by the smallest c >= 1 that keeps them in [0,1]^N."""
    w = _check_weights(w, h)
    g = code.graph
    raw = []
    budget = guard
    for r in range(g.num_variables):
        t = build_path_prefix(g, r, 2 * h)
        trees = enumerate_d_trees(t, d, guard=budget)
        budget -= len(trees)
        for T in trees:
            raw.append((r, T, project_weighted_tree(g, T, w)))
    c = max([1.0] + [float(pi.max()) for _, _, pi in raw])
    return [Deviation(pi / c, r, T, c) for r, T, pi in raw]


def _check_weights(w, h):
    w = np.asarray(w, dtype=float).reshape(-1)
    if len(w) != h:
        raise ValueError("weight vector length must equal h")
    if (w < 0).any() or not (w > 0).any():
        raise ValueError("weights must be non-negative and not all zero")
    return w


def min_deviation_costs(code: TannerCode, x, llr, h, w, d, guard=DTREE_GUARD) -> np.ndarray:
    """Per root r: min over d-trees rooted at r of <(-1)^x * llr, pi_T>."""
    w = _check_weights(w, h)
    x = np.asarray(x, dtype=np.uint8)
    lam = np.asarray(llr, dtype=float) * np.where(x == 1, -1.0, 1.0)
    g = code.graph
    out = np.full(g.num_variables, np.inf)
    for r in range(g.num_variables):
        t = build_path_prefix(g, r, 2 * h)
        for T in enumerate_d_trees(t, d, guard=guard):
            pi = project_weighted_tree(g, T, w)
            mask = pi != 0
            out[r] = min(out[r], float(lam[mask] @ pi[mask]))
    return out


def local_opt_brute(code: TannerCode, x, llr, h, w, d, guard=DTREE_GUARD) -> bool:
    """x is (h, w, d)-locally optimal iff every deviation has positive cost."""
    x = np.asarray(x, dtype=np.uint8)
    if not code.is_codeword(x):
        raise ValueError("local optimality is defined for codewords")
    if not 2 <= d <= code.d_star:
        raise ValueError(f"d = {d} outside [2, d*]")
    return bool((min_deviation_costs(code, x, llr, h, w, d, guard) > 0).all())


# ---------------------------------------------------------------------------
# conic decomposition of a codeword


def support_subgraph(g: TannerGraph, x):
    """Subgraph induced by supp(x) and its neighboring checks.

    Returns (G_x, variable map to g, check map to g).
    """
    x = np.asarray(x, dtype=np.uint8)
    vx = [int(v) for v in np.flatnonzero(x)]
    pos = {v: i for i, v in enumerate(vx)}
    checks = sorted({j for v in vx for j, _ in g.var_checks[v]})
    rows = [tuple(pos[v] for v in g.check_vars[j] if v in pos) for j in checks]
    return TannerGraph(len(vx), tuple(rows)), np.array(vx, dtype=int), np.array(checks, dtype=int)


def full_projection_mp(g: TannerGraph, r: int, h: int, w) -> np.ndarray:
    """Projection of the full w-weighted path-prefix tree rooted at r, by message passing.

    Mass on directed edges is pushed level by level; nothing is materialized.
    """
    w = np.asarray(w, dtype=float)
    wn = w / w.sum()
    pi = np.zeros(g.num_variables)
    # mass on (check, variable-it-came-from)
    cur = {(j, r): 1.0 for j, _ in g.var_checks[r]}
    for level in range(1, h + 1):
        arrived = {}
        for (j, frm), m in cur.items():
            share = m / (g.check_degree(j) - 1)
            for v in g.check_vars[j]:
                if v != frm:
                    arrived[v, j] = arrived.get((v, j), 0.0) + share
        cur = {}
        for (v, frm), m in arrived.items():
            dv = g.var_degree(v)
            pi[v] += m * wn[level - 1] / dv
            if dv > 1:
                for j, _ in g.var_checks[v]:
                    if j != frm:
                        cur[j, v] = cur.get((j, v), 0.0) + m / (dv - 1)
    return pi


def expected_projection(t: PathPrefixTree, d: int, w, guard=DTREE_GUARD):
    """Exact E[pi] under top-down uniform d-tree sampling.

    Enumerates every d-tree with its sampling probability when the count fits
    the guard; otherwise averages over each check path's (d-1)-subsets
    recursively.  Returns (vector, method).
    """
    g = t.graph
    N = g.num_variables
    if count_d_trees(t, d) <= guard:
        acc = np.zeros(N)
        for T in enumerate_d_trees(t, d, guard):
            prob = 1.0
            for i in T.nodes:
                if t.kind[i] == CHECK:
                    prob /= math.comb(len(t.children[i]), d - 1)
            acc += prob * project_weighted_tree(g, T, w)
        return acc, "enumeration"
    # inclusion probability of a child given its check parent is included,
    # counted over the parent's (d-1)-subsets
    incl = {0: 1.0}
    order = sorted(range(len(t)), key=lambda i: t.depth[i])
    for i in order:
        if i not in incl:
            continue
        ch = t.children[i]
        if t.kind[i] == VAR:
            for c in ch:
                incl[c] = incl[i]
        else:
            subsets = list(itertools.combinations(range(len(ch)), d - 1))
            hits = [0] * len(ch)
            for s in subsets:
                for k in s:
                    hits[k] += 1
            for k, c in enumerate(ch):
                incl[c] = incl[i] * hits[k] / len(subsets)
    member = lambda c: True  # noqa: E731
    weights = _path_weights(t, member, lambda i: (d if t.kind[i] == CHECK else len(t.children[i]) + 1), w)
    acc = np.zeros(N)
    for i, val in weights.items():
        acc[t.terminal[i]] += incl[i] * val
    return acc, "recursive"


def conic_check(code: TannerCode, x, h, w, d, guard=DTREE_GUARD) -> dict:
    """Residuals of the conic decomposition of a nonzero codeword.

    a: sum over roots of full-tree projections on G_x versus x.
    b: expected d-tree projection versus full-tree projection, per root.
    c: ||x||_1 times the root-mixture expectation versus x.
    """
    x = np.asarray(x, dtype=np.uint8)
    w = _check_weights(w, h)
    if not x.any():
        raise ValueError("conic decomposition needs a nonzero codeword")
    if not code.is_codeword(x):
        raise ValueError("x is not a codeword")
    if not 2 <= d <= code.d_star:
        raise ValueError(f"d = {d} outside [2, d*]")
    gx, vmap, _ = support_subgraph(code.graph, x)
    N = code.N
    sum_full = np.zeros(N)
    sum_exp = np.zeros(N)
    res_b = 0.0
    methods = set()
    counts = []
    for r in range(gx.num_variables):
        full = full_projection_mp(gx, r, h, w)
        t = build_path_prefix(gx, r, 2 * h)
        exp, method = expected_projection(t, d, w, guard)
        methods.add(method)
        counts.append(count_d_trees(t, d))
        res_b = max(res_b, float(np.abs(exp - full).max()))
        sum_full[vmap] += full
        sum_exp[vmap] += exp
    K = int(x.sum())
    mixture = sum_exp / K
    return {
        "residual_a": float(np.abs(sum_full - x).max()),
        "residual_b": res_b,
        "residual_c": float(np.abs(K * mixture - x).max()),
        "weight": K,
        "d_tree_counts": counts,
        "methods": sorted(methods),
        "h": h,
        "d": d,
    }


def suffix_level_masses(g: TannerGraph, h: int, w=None) -> np.ndarray:
    """Sum of path weights over all backtrackless paths of each length ending at each variable.

    Paths may start at any node.  Entry [v, l-1] covers length l; with unit
    weights every entry should be 1/h.
    """
    w = np.ones(h) if w is None else np.asarray(w, dtype=float)
    wn = w / w.sum()
    N, J = g.num_variables, g.num_checks
    out = np.zeros((N, 2 * h))
    # state: mass sitting on a directed edge (node kind, node, came-from)
    cur = {}
    for v in range(N):
        for j, _ in g.var_checks[v]:
            cur[CHECK, j, ("v", v)] = cur.get((CHECK, j, ("v", v)), 0.0) + 1.0
    for j in range(J):
        for v in g.check_vars[j]:
            cur[VAR, v, ("c", j)] = cur.get((VAR, v, ("c", j)), 0.0) + 1.0
    for length in range(1, 2 * h + 1):
        nxt = {}
        for (kind, node, frm), m in cur.items():
            if kind == VAR:
                dv = g.var_degree(node)
                out[node, length - 1] += m * wn[math.ceil(length / 2) - 1] / dv
                if dv > 1:
                    for j, _ in g.var_checks[node]:
                        if ("c", j) != frm:
                            key = (CHECK, j, ("v", node))
                            nxt[key] = nxt.get(key, 0.0) + m / (dv - 1)
            else:
                dc = g.check_degree(node)
                for v in g.check_vars[node]:
                    if ("v", v) != frm:
                        key = (VAR, v, ("c", node))
                        nxt[key] = nxt.get(key, 0.0) + m / (dc - 1)
        cur = nxt
    return out
