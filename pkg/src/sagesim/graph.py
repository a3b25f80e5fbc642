"""Undirected communication graphs, link failures and Laplacian spectra.

Vertices are 0-based internally. The edge-list text format is 1-based:
a header line ``"N E"`` followed by ``E`` lines ``"u v"``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# lambda_2 above this counts as connected
CONNECTIVITY_TOL = 1e-9


def _canonical_edges(n, edges):
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if arr.size and (arr.min() < 0 or arr.max() >= n):
        raise ValueError(f"edge endpoint outside [0, {n})")
    if np.any(arr[:, 0] == arr[:, 1]):
        raise ValueError("self-loops are not allowed")
    arr = np.sort(arr, axis=1)
    arr = np.unique(arr, axis=0) if len(arr) else arr
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected graph on vertices ``0..n_vertices-1``.

    ``edges`` is an ``(E, 2)`` integer array with ``u < v`` on every row,
    lexicographically sorted and duplicate free. ``coords`` keeps the
    placement of geometric graphs for later audits.
    """

    n_vertices: int
    edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    coords: np.ndarray | None = None

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("a graph needs at least one vertex")
        object.__setattr__(self, "edges", _canonical_edges(self.n_vertices, self.edges))
        if self.coords is not None:
            c = np.array(self.coords, dtype=float)
            c.setflags(write=False)
            object.__setattr__(self, "coords", c)

    @classmethod
    def _from_endpoints(cls, n, u, v):
        # (u, v) already canonical, e.g. a subset of another graph's edges
        g = object.__new__(cls)
        edges = np.column_stack([u, v])
        edges.setflags(write=False)
        object.__setattr__(g, "n_vertices", n)
        object.__setattr__(g, "edges", edges)
        object.__setattr__(g, "coords", None)
        object.__setattr__(g, "_endpoints", (u, v))
        return g

    @property
    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Contiguous ``(u, v)`` endpoint arrays of the edges."""
        uv = self.__dict__.get("_endpoints")
        if uv is None:
            uv = tuple(np.ascontiguousarray(self.edges[:, k]) for k in (0, 1))
            object.__setattr__(self, "_endpoints", uv)
        return uv

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_vertices)

    def neighbors(self) -> list[list[int]]:
        nbrs: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            nbrs[u].append(int(v))
            nbrs[v].append(int(u))
        return nbrs

    def edge_set(self) -> set[tuple[int, int]]:
        return {(int(u), int(v)) for u, v in self.edges}


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """A base graph whose links fail independently at every iteration."""

    base: Graph
    link_failure_prob: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.link_failure_prob <= 1.0:
            raise ValueError("link_failure_prob must lie in [0, 1]")

    def mean_laplacian(self) -> np.ndarray:
        """Expected Laplacian of a sampled instance, ``(1 - p) L(base)``."""
        return (1.0 - self.link_failure_prob) * laplacian(self.base)


def random_geometric(n: int, radius: float, rng_seed: int) -> Graph:
    """Place ``n`` points uniformly in the unit square and link every pair
    at Euclidean distance ``<= radius``. Connectivity is not enforced."""
    if n < 1:
        raise ValueError("n must be positive")
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = np.random.default_rng(rng_seed)
    return geometric_graph(rng.random((n, 2)), radius)


def geometric_graph(points, radius: float) -> Graph:
    """Link every pair of ``points`` at Euclidean distance ``<= radius``."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    iu, ju = np.triu_indices(n, k=1)
    d = np.linalg.norm(pts[iu] - pts[ju], axis=1)
    keep = d <= radius
    return Graph(n, np.column_stack([iu[keep], ju[keep]]), coords=pts)


def connected_random_geometric(n, radius, rng_seed, max_tries=1000):
    """First connected geometric graph over seeds ``rng_seed, rng_seed + 1, ...``.

    Returns the graph and the seed that produced it.
    """
    for k in range(max_tries):
        g = random_geometric(n, radius, rng_seed + k)
        if is_connected(g):
            return g, rng_seed + k
    raise RuntimeError(f"no connected graph in {max_tries} draws; increase the radius")


def sample_instance(model: NetworkModel, rng: np.random.Generator) -> Graph:
    """Keep every base edge independently with probability ``1 - p``."""
    p = model.link_failure_prob
    base = model.base
    if p == 0.0:
        return base
    keep = rng.random(base.n_edges) >= p
    u, v = base.endpoints
    return Graph._from_endpoints(base.n_vertices, u[keep], v[keep])


def laplacian(g: Graph, dtype=float) -> np.ndarray:
    """``L = D - A``. Pass ``dtype=int`` for an exact integer matrix."""
    n = g.n_vertices
    L = np.zeros((n, n), dtype=dtype)
    if g.n_edges:
        u, v = g.edges[:, 0], g.edges[:, 1]
        L[u, v] = -1
        L[v, u] = -1
        L[np.arange(n), np.arange(n)] = g.degrees()
    return L


def laplacian_spectrum(L) -> np.ndarray:
    return np.linalg.eigvalsh(np.asarray(L, dtype=float))


def algebraic_connectivity(L) -> float:
    """Second-smallest Laplacian eigenvalue (0 for a single vertex)."""
    ev = laplacian_spectrum(L)
    if len(ev) < 2:
        return 0.0
    return float(max(ev[1], 0.0))


def max_laplacian_eigenvalue(L) -> float:
    ev = laplacian_spectrum(L)
    return float(max(ev[-1], 0.0))


def is_connected(g: Graph) -> bool:
    nbrs = g.neighbors()
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in nbrs[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == g.n_vertices


def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n_vertices} {g.n_edges}"]
    lines += [f"{u + 1} {v + 1}" for u, v in g.edges]
    return "\n".join(lines) + "\n"


def parse_edge_list(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not rows:
        raise ValueError("empty edge list")
    n, e = int(rows[0][0]), int(rows[0][1])
    body = rows[1:]
    if len(body) != e:
        raise ValueError(f"header announces {e} edges, found {len(body)}")
    edges = [(int(u) - 1, int(v) - 1) for u, v in body]
    return Graph(n, edges)


def write_edge_list(g: Graph, path) -> None:
    Path(path).write_text(format_edge_list(g))


def read_edge_list(path) -> Graph:
    return parse_edge_list(Path(path).read_text())
