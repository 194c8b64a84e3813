"""Synthetic benchmark instances and CSV ingestion.

Randomness comes from ``numpy.random.default_rng(seed)`` (PCG64 seeded via
SeedSequence), so a fixed seed and numpy version reproduce an instance
bit for bit.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix
from scipy.spatial import cKDTree

from .errors import EmptyAfterCleaning, GraphDisconnected, ParseError
from .reductions import GeneralInstance

GRAPH_ATTEMPTS = 10


@dataclass
class RandomMatrixSpec:
    d: int
    n: int
    seed: int = 0

    def __post_init__(self):
        if self.d < 1 or self.n < 1:
            raise ValueError("need d, n >= 1")


@dataclass
class RandomGraphSpec:
    n_nodes: int
    n_labeled: int = 10
    p: float = 2.0
    seed: int = 0
    ambient_dim: int = 10
    k_neighbors: int = 10

    def __post_init__(self):
        if not 0 < self.n_labeled < self.n_nodes:
            raise ValueError("need 0 < n_labeled < n_nodes")
        if self.k_neighbors >= self.n_nodes:
            raise ValueError("need k_neighbors < n_nodes")


def gen_random_matrix(spec, p=2.0):
    """min ||N x - v||_p with N (d x n) and v drawn i.i.d. Uniform[0, 1]."""
    rng = np.random.default_rng(spec.seed)
    N = rng.random((spec.d, spec.n))
    v = rng.random(spec.d)
    return GeneralInstance(N=N, v=v, p=p, meta={"kind": "matrix", "seed": spec.seed})


def knn_edges(points, k):
    """Undirected edge list (i < j) of the symmetrised k-NN graph, with lengths."""
    tree = cKDTree(points)
    dist, idx = tree.query(points, k=k + 1)
    n = points.shape[0]
    edges = {}
    for i in range(n):
        for dij, j in zip(dist[i], idx[i]):
            if j == i:
                continue
            a, b = (i, int(j)) if i < j else (int(j), i)
            edges[(a, b)] = float(dij)
    keys = sorted(edges)
    pairs = np.array(keys, dtype=int).reshape(-1, 2)
    return pairs, np.array([edges[e] for e in keys])


def incidence(pairs, n):
    """Edge-vertex incidence: +1 at the smaller endpoint, -1 at the larger."""
    B = np.zeros((len(pairs), n))
    rows = np.arange(len(pairs))
    B[rows, pairs[:, 0]] = 1.0
    B[rows, pairs[:, 1]] = -1.0
    return B


def _connected(pairs, n):
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    count, _ = connected_components(adj, directed=False)
    return count == 1


def gen_random_graph(spec):
    """p-Laplacian label propagation on a random k-NN graph.

    Edge weights are exp(-|u - v|^2 / s2) with s2 the mean squared k-NN
    distance. The last ``n_labeled`` nodes carry Uniform[0, 1] labels g;
    with C = W^(1/p) B the instance is N = C[:, unlabeled], v = -C[:, labeled] g.
    """
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n_nodes, spec.n_labeled
    for attempt in range(GRAPH_ATTEMPTS):
        pts = rng.random((n, spec.ambient_dim))
        pairs, length = knn_edges(pts, spec.k_neighbors)
        if _connected(pairs, n):
            break
    else:
        raise GraphDisconnected(f"k-NN graph disconnected after {GRAPH_ATTEMPTS} attempts")
    s2 = float(np.mean(length**2))
    w = np.exp(-(length**2) / s2)
    g = rng.random(k)
    C = w[:, None] ** (1.0 / spec.p) * incidence(pairs, n)
    N = C[:, : n - k]
    v = -C[:, n - k :] @ g
    meta = {"kind": "graph", "seed": spec.seed, "nodes": n, "edges": len(pairs), "attempts": attempt + 1}
    return GeneralInstance(N=N, v=v, p=spec.p, meta=meta)


def _number(cell):
    x = float(cell)
    if not math.isfinite(x):
        raise ValueError(cell)
    return x


def load_csv(path, target_column):
    """Regression instance from a headed numeric CSV.

    Features become the columns of N followed by an all-ones intercept;
    the target column is v. Rows with a non-numeric cell are dropped and
    counted in ``meta["dropped_count"]``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise ParseError(f"{path}: row 1: target column {target_column!r} not in header")
        tcol = header.index(target_column)
        rows, dropped = [], 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}: row {lineno}: expected {len(header)} columns, got {len(row)}"
                )
            try:
                rows.append([_number(c) for c in row])
            except ValueError:
                dropped += 1
    if not rows:
        raise EmptyAfterCleaning(f"{path}: no numeric rows left ({dropped} dropped)")
    data = np.array(rows)
    feats = np.delete(data, tcol, axis=1)
    N = np.hstack([feats, np.ones((data.shape[0], 1))])
    names = [h for i, h in enumerate(header) if i != tcol] + ["intercept"]
    meta = {"kind": "csv", "path": str(path), "dropped_count": dropped, "columns": names}
    return GeneralInstance(N=N, v=data[:, tcol], meta=meta)
