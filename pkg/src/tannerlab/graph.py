"""Tanner graphs: data model, alist I/O, girth, regular generation and random covers.

Variables and checks are numbered from 0.  The port label of a variable at a
check is its position in that check's neighbor list.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    pass


class AlistError(GraphError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class TannerGraph:
    num_variables: int
    check_vars: tuple  # check j -> tuple of variable indices, in port order
    var_checks: tuple = field(init=False)  # variable v -> tuple of (check, port)

    def __post_init__(self):
        cv = tuple(tuple(int(v) for v in row) for row in self.check_vars)
        object.__setattr__(self, "check_vars", cv)
        vc = [[] for _ in range(self.num_variables)]
        for j, row in enumerate(cv):
            if len(set(row)) != len(row):
                raise GraphError(f"check {j} has a parallel edge")
            for port, v in enumerate(row):
                if not 0 <= v < self.num_variables:
                    raise GraphError(f"check {j} references variable {v} out of range")
                vc[v].append((j, port))
        for v, nbrs in enumerate(vc):
            if not nbrs:
                raise GraphError(f"variable {v} has no incident check")
        for j, row in enumerate(cv):
            if len(row) < 2:
                raise GraphError(f"check {j} has degree {len(row)} < 2")
        object.__setattr__(self, "var_checks", tuple(tuple(n) for n in vc))

    @property
    def num_checks(self):
        return len(self.check_vars)

    @property
    def num_edges(self):
        return sum(len(r) for r in self.check_vars)

    def var_degree(self, v):
        return len(self.var_checks[v])

    def check_degree(self, j):
        return len(self.check_vars[j])

    def var_degrees(self):
        return np.array([len(n) for n in self.var_checks], dtype=int)

    def check_degrees(self):
        return np.array([len(r) for r in self.check_vars], dtype=int)

    def parity_matrix(self):
        H = np.zeros((self.num_checks, self.num_variables), dtype=np.uint8)
        for j, row in enumerate(self.check_vars):
            H[j, list(row)] = 1
        return H

    @classmethod
    def from_parity_matrix(cls, H):
        H = np.asarray(H)
        rows = [tuple(np.flatnonzero(r)) for r in H]
        return cls(H.shape[1], tuple(rows))

    def edges(self):
        """Edges as (check, port, variable), ordered by check then port."""
        return [(j, k, v) for j, row in enumerate(self.check_vars) for k, v in enumerate(row)]

    def same_structure(self, other):
        return self.num_variables == other.num_variables and self.check_vars == other.check_vars


def parse_alist(text: str) -> TannerGraph:
    """Parse a MacKay alist description.

    Columns are variables and rows are checks.  Zero entries are padding and
    are ignored; CRLF line endings and blank lines are tolerated.
    """
    lines = []
    for no, raw in enumerate(text.replace("\r\n", "\n").replace("\r", "\n").split("\n"), start=1):
        toks = raw.split()
        if toks:
            try:
                lines.append((no, [int(t) for t in toks]))
            except ValueError:
                raise AlistError(f"non-integer token in {raw.strip()!r}", no) from None

    it = iter(lines)

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise AlistError(f"unexpected end of input while reading {what}") from None

    no, hdr = take("header")
    if len(hdr) != 2 or min(hdr) < 1:
        raise AlistError("header must be 'N J' with positive counts", no)
    n, m = hdr
    no, mx = take("max degrees")
    if len(mx) != 2 or min(mx) < 1:
        raise AlistError("max-degree line must hold two positive integers", no)
    no, col_deg = take("variable degrees")
    if len(col_deg) != n:
        raise AlistError(f"expected {n} variable degrees, found {len(col_deg)}", no)
    if max(col_deg) > mx[0] or min(col_deg) < 1:
        raise AlistError("variable degree outside [1, max]", no)
    no, row_deg = take("check degrees")
    if len(row_deg) != m:
        raise AlistError(f"expected {m} check degrees, found {len(row_deg)}", no)
    if max(row_deg) > mx[1] or min(row_deg) < 1:
        raise AlistError("check degree outside [1, max]", no)

    def neighbor_lists(count, degs, bound, what):
        out = []
        for i in range(count):
            no, vals = take(f"{what} {i + 1} neighbors")
            nz = [x for x in vals if x != 0]
            if len(nz) != degs[i]:
                raise AlistError(f"{what} {i + 1}: degree {degs[i]} but {len(nz)} neighbors listed", no)
            if any(x < 1 or x > bound for x in nz):
                raise AlistError(f"{what} {i + 1}: neighbor index out of range 1..{bound}", no)
            if len(set(nz)) != len(nz):
                raise AlistError(f"{what} {i + 1}: parallel edge (repeated neighbor)", no)
            out.append((no, [x - 1 for x in nz]))
        return out

    cols = neighbor_lists(n, col_deg, m, "variable")
    rows = neighbor_lists(m, row_deg, n, "check")
    extra = next(it, None)
    if extra is not None:
        raise AlistError("trailing data after check lists", extra[0])

    col_edges = {(j, v) for v, (_, js) in enumerate(cols) for j in js}
    row_edges = {(j, v) for j, (_, vs) in enumerate(rows) for v in vs}
    if col_edges != row_edges:
        j, v = sorted(col_edges ^ row_edges)[0]
        line = rows[j][0]
        raise AlistError(f"variable and check lists disagree on edge (check {j + 1}, variable {v + 1})", line)
    try:
        return TannerGraph(n, tuple(tuple(vs) for _, vs in rows))
    except GraphError as exc:
        raise AlistError(str(exc)) from None


def write_alist(g: TannerGraph) -> str:
    vdeg, cdeg = g.var_degrees(), g.check_degrees()
    mv, mc = int(vdeg.max()), int(cdeg.max())
    out = [f"{g.num_variables} {g.num_checks}", f"{mv} {mc}",
           " ".join(map(str, vdeg)), " ".join(map(str, cdeg))]
    for nb in g.var_checks:
        js = sorted(j + 1 for j, _ in nb)
        out.append(" ".join(map(str, js + [0] * (mv - len(js)))))
    for row in g.check_vars:
        vs = [v + 1 for v in row]
        out.append(" ".join(map(str, vs + [0] * (mc - len(vs)))))
    return "\n".join(out) + "\n"


def read_alist(path) -> TannerGraph:
    with open(path, encoding="utf-8", newline="") as f:
        return parse_alist(f.read())


def _adjacency(g):
    """Node ids: variables 0..N-1, checks N..N+J-1."""
    n = g.num_variables
    adj = [[n + j for j, _ in nb] for nb in g.var_checks]
    adj += [list(row) for row in g.check_vars]
    return adj


def girth(g: TannerGraph):
    """Length of the shortest cycle, or math.inf for a forest."""
    adj = _adjacency(g)
    best = math.inf
    # every cycle passes through a variable node
    for root in range(g.num_variables):
        dist = {root: 0}
        parent = {root: -1}
        q = deque([root])
        while q:
            u = q.popleft()
            if 2 * dist[u] + 1 >= best:
                break
            for x in adj[u]:
                if x == parent[u]:
                    continue
                if x in dist:
                    best = min(best, dist[u] + dist[x] + 1)
                else:
                    dist[x] = dist[u] + 1
                    parent[x] = u
                    q.append(x)
    return best


def _edge_on_short_cycle(var_adj, chk_adj, v, c, limit):
    """True if edge (v, c) lies on a cycle of length < limit."""
    # BFS from c to v avoiding the edge itself; cycle length = dist + 1.
    max_dist = limit - 2
    seen_v = {v: None}
    seen_c = {c: 0}
    frontier = [("c", c)]
    depth = 0
    while frontier and depth < max_dist:
        depth += 1
        nxt = []
        for kind, node in frontier:
            if kind == "c":
                for u in chk_adj[node]:
                    if node == c and u == v and depth == 1:
                        continue
                    if u == v:
                        return True
                    if u not in seen_v:
                        seen_v[u] = depth
                        nxt.append(("v", u))
            else:
                for k in var_adj[node]:
                    if k not in seen_c:
                        seen_c[k] = depth
                        nxt.append(("c", k))
        frontier = nxt
    return False


def gen_regular(dl: int, dr: int, n: int, min_girth: int = 4, seed=None) -> TannerGraph:
    """Random (dl, dr)-regular Tanner graph with girth >= min_girth.

    Configuration-model pairing followed by random edge swaps that break
    parallel edges and short cycles.  Raises GraphError when the swap budget
    (10 * n) runs out.
    """
    if dl < 1 or dr < 2 or n < 1:
        raise GraphError("degrees and length must be positive (dr >= 2)")
    if (n * dl) % dr:
        raise GraphError(f"n*dl = {n * dl} is not divisible by dr = {dr}")
    if min_girth < 4 or min_girth % 2:
        raise GraphError("min_girth must be even and >= 4")
    rng = np.random.default_rng(seed)
    m = n * dl // dr
    E = n * dl
    ev = np.repeat(np.arange(n), dl)
    ec = np.repeat(np.arange(m), dr)[rng.permutation(E)]
    var_adj = [[] for _ in range(n)]
    chk_adj = [[] for _ in range(m)]
    # multiset adjacency, parallel edges appear twice
    for e in range(E):
        var_adj[ev[e]].append(int(ec[e]))
        chk_adj[ec[e]].append(int(ev[e]))

    def bad(e):
        v, c = int(ev[e]), int(ec[e])
        if var_adj[v].count(c) > 1:
            return True
        return _edge_on_short_cycle(var_adj, chk_adj, v, c, min_girth)

    queue = deque(e for e in range(E) if bad(e))
    budget = 10 * n
    while queue:
        e = queue.popleft()
        if not bad(e):
            continue
        if budget == 0:
            raise GraphError(f"swap budget exhausted before reaching girth {min_girth}")
        budget -= 1
        f = int(rng.integers(E))
        if f == e or ec[f] == ec[e]:
            queue.append(e)
            continue
        ve, ce, vf, cf = int(ev[e]), int(ec[e]), int(ev[f]), int(ec[f])
        var_adj[ve].remove(ce); var_adj[ve].append(cf)
        var_adj[vf].remove(cf); var_adj[vf].append(ce)
        chk_adj[ce].remove(ve); chk_adj[ce].append(vf)
        chk_adj[cf].remove(vf); chk_adj[cf].append(ve)
        ec[e], ec[f] = cf, ce
        # any new short cycle runs through one of the two rewired edges
        queue.extend((e, f))
    rows = [[] for _ in range(m)]
    for e in np.lexsort((ev, ec)):
        rows[ec[e]].append(int(ev[e]))
    return TannerGraph(n, tuple(tuple(r) for r in rows))


@dataclass(frozen=True, eq=False)
class CoverMap:
    base: TannerGraph
    M: int
    lifted: TannerGraph
    var_projection: np.ndarray
    check_projection: np.ndarray

    def lift_vector(self, x):
        """Lift a per-variable vector: copy m of variable v gets x[v]."""
        return np.asarray(x)[self.var_projection]


def lift_cover(g: TannerGraph, M: int, seed=None) -> CoverMap:
    """Random M-cover: each base edge becomes a uniform random matching between copies.

    Lifted variable v*M + a and lifted check j*M + a are copy a of v and j.
    """
    if M < 1:
        raise GraphError("cover degree must be >= 1")
    rng = np.random.default_rng(seed)
    rows = []
    perms = {}
    for j, row in enumerate(g.check_vars):
        for k in range(len(row)):
            perms[j, k] = rng.permutation(M) if M > 1 else np.zeros(1, dtype=int)
    for j, row in enumerate(g.check_vars):
        for a in range(M):
            rows.append(tuple(v * M + int(perms[j, k][a]) for k, v in enumerate(row)))
    lifted = TannerGraph(g.num_variables * M, tuple(rows))
    return CoverMap(g, M, lifted,
                    np.repeat(np.arange(g.num_variables), M),
                    np.repeat(np.arange(g.num_checks), M))
