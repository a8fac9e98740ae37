import os

import numpy as np
import pytest

from tannerlab.codes import TannerCode, make_local_code
from tannerlab.graph import TannerGraph, gen_regular

HAMMING_H = np.array([
    [1, 1, 1, 0, 1, 0, 0],
    [0, 1, 1, 1, 0, 1, 0],
    [1, 1, 0, 1, 0, 0, 1],
], dtype=np.uint8)

REP2_ALIST = "2 2\n2 2\n2 2\n2 2\n1 2\n1 2\n1 2\n1 2\n"

HAMMING_ALIST = """7 3
3 4
2 3 2 2 1 1 1
4 4 4
1 3 0
1 2 3
1 2 0
2 3 0
1 0 0
2 0 0
3 0 0
1 2 3 5
2 3 4 6
1 2 4 7
"""


def rep2_graph():
    return TannerGraph(2, ((0, 1), (0, 1)))


def spc3_graph():
    return TannerGraph(3, ((0, 1, 2),))


def hamming_graph():
    return TannerGraph.from_parity_matrix(HAMMING_H)


@pytest.fixture
def rep2():
    return TannerCode.ldpc(rep2_graph())


@pytest.fixture
def spc3():
    return TannerCode.ldpc(spc3_graph())


@pytest.fixture
def hamming():
    return TannerCode.ldpc(hamming_graph())


def random_ldpc(rng, max_n=12, dl_choices=(2, 3), dr_choices=(3, 4, 6)):
    """Small random regular LDPC code (parallel edges resolved by the generator)."""
    for _ in range(100):
        dl = int(rng.choice(dl_choices))
        dr = int(rng.choice(dr_choices))
        n_opts = [n for n in range(dr, max_n + 1) if (n * dl) % dr == 0]
        if not n_opts:
            continue
        n = int(rng.choice(n_opts))
        try:
            return TannerCode.ldpc(gen_regular(dl, dr, n, 4, int(rng.integers(1 << 30))))
        except Exception:
            continue
    raise RuntimeError("could not draw a random code")


def random_irregular_graph(rng, n, m, p_edge=0.4):
    """Random parity-check matrix, patched so rows have weight >= 2 and columns >= 1."""
    H = (rng.random((m, n)) < p_edge).astype(np.uint8)
    for j in range(m):
        while H[j].sum() < 2:
            H[j, rng.integers(n)] = 1
    for v in np.flatnonzero(H.sum(axis=0) == 0):
        H[rng.integers(m), v] = 1
    return TannerGraph.from_parity_matrix(H)


def random_tanner_code(rng, max_n=16):
    """Small Tanner code mixing SPC and Hamming(7,4) / ExtHamming(8,4) local codes."""
    kind = rng.integers(3)
    if kind == 0:
        return random_ldpc(rng, max_n)
    if kind == 1:
        # two Hamming(7,4) checks sharing some variables
        n = int(rng.integers(7, min(max_n, 14) + 1))
        rows = [tuple(sorted(rng.choice(n, 7, replace=False))) for _ in range(2)]
        covered = set(rows[0]) | set(rows[1])
        extra = [v for v in range(n) if v not in covered]
        checks = list(rows)
        locs = [make_local_code("Hamming(7,4)")] * 2
        if extra:
            others = [v for v in range(n) if v not in extra][:max(0, 2 - len(extra))]
            checks.append(tuple(sorted(extra + others)))
            locs.append(make_local_code(f"SPC({len(checks[-1])})"))
        return TannerCode(TannerGraph(n, tuple(checks)), tuple(locs))
    g = TannerGraph(8, (tuple(range(8)), (0, 2, 4, 6, 1, 3, 5, 7)))
    return TannerCode(g, (make_local_code("ExtHamming(8,4)"),) * 2)


@pytest.fixture
def data_dir(tmp_path):
    return str(tmp_path)


def write_text(path, text):
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    return os.fspath(path)
