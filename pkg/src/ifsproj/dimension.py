"""Similarity-dimension solvers and spectral-radius machinery.

The similarity dimension of a self-similar system is the unique root of
sum(r_i^s) = 1; for a strongly connected graph-directed system it is the
unique s with spectral radius rho(A(s)) = 1, where A(s)[i, j] sums r_e^s over
the edges from i to j.  Both maps are strictly decreasing in s, so bisection
applies.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import tolerances
from .geometry import DimensionMismatchError, GeometryError, NumericFailureError, SSIFS, Similarity


class GdifsStructureError(GeometryError):
    pass


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    map: Similarity


class GDIFS:
    """Directed multigraph with a contracting similarity on every edge."""

    def __init__(self, vertex_count: int, edges: Sequence[Edge], name: str | None = None):
        edges = tuple(edges)
        if vertex_count < 1:
            raise GdifsStructureError("need at least one vertex")
        if not edges:
            raise GdifsStructureError("need at least one edge")
        d = edges[0].map.ambient_dim
        has_outgoing = [False] * vertex_count
        for e in edges:
            if not (0 <= e.source < vertex_count and 0 <= e.target < vertex_count):
                raise GdifsStructureError(f"edge endpoint out of range: {e.source}->{e.target}")
            if e.map.ambient_dim != d:
                raise DimensionMismatchError("all edge maps must share the ambient dimension")
            has_outgoing[e.source] = True
        if not all(has_outgoing):
            raise GdifsStructureError("every vertex needs at least one outgoing edge")
        self.vertex_count = vertex_count
        self.edges = edges
        self.name = name

    @property
    def ambient_dim(self) -> int:
        return self.edges[0].map.ambient_dim

    def transition_matrix(self, s: float) -> np.ndarray:
        """A(s)[i, j] = sum of r_e^s over edges from i to j."""
        q = self.vertex_count
        a = np.zeros((q, q))
        for e in self.edges:
            a[e.source, e.target] += e.map.ratio**s
        return a

    def delete_edge(self, index: int) -> "GDIFS":
        if not 0 <= index < len(self.edges):
            raise GdifsStructureError("edge index out of range")
        return GDIFS(
            self.vertex_count,
            self.edges[:index] + self.edges[index + 1 :],
            name=self.name,
        )


def strongly_connected_components(vertex_count: int, arcs) -> list[list[int]]:
    """Tarjan's algorithm, iterative; arcs is an iterable of (source, target)."""
    adj: list[list[int]] = [[] for _ in range(vertex_count)]
    for u, v in arcs:
        adj[u].append(v)
    index_of = [-1] * vertex_count
    lowlink = [0] * vertex_count
    on_stack = [False] * vertex_count
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(vertex_count):
        if index_of[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index_of[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(adj[v]):
                w = adj[v][pi]
                pi += 1
                if index_of[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index_of[w])
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index_of[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(comp)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
    return components


def is_strongly_connected(g: GDIFS) -> bool:
    comps = strongly_connected_components(
        g.vertex_count, ((e.source, e.target) for e in g.edges)
    )
    return len(comps) == 1


def _power_iteration(a: np.ndarray, tol: float, max_iter: int):
    """Perron root and vector of a nonnegative matrix with an irreducible
    positivity pattern, via power iteration on A + I (always primitive)."""
    q = a.shape[0]
    shifted = a + np.eye(q)
    x = np.ones(q)
    scale = max(1.0, float(np.abs(a).max()))
    lam = 0.0
    for _ in range(max_iter):
        y = shifted @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0, x
        y /= norm
        lam = float(y @ (shifted @ y))
        residual = float(np.linalg.norm(shifted @ y - lam * y, np.inf))
        x = y
        if residual <= tol * scale:
            return lam - 1.0, x
    raise NumericFailureError("power iteration did not converge within the cap")


def spectral_radius(a, tol: float | None = None, max_iter: int = 10**5) -> float:
    """Largest absolute eigenvalue of a nonnegative matrix.

    Computed per strongly connected component of the positivity pattern and
    maximized, so reducible matrices are handled as well.
    """
    if tol is None:
        tol = tolerances.TAU_EIG
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GeometryError("matrix must be square")
    if (a < 0).any():
        raise GeometryError("matrix must be entrywise nonnegative")
    q = a.shape[0]
    arcs = zip(*np.nonzero(a))
    best = 0.0
    for comp in strongly_connected_components(q, arcs):
        sub = a[np.ix_(comp, comp)]
        if len(comp) == 1 and sub[0, 0] == 0.0:
            continue
        rho, _ = _power_iteration(sub, tol, max_iter)
        best = max(best, rho)
    return best


def perron_eigenpair(a, tol: float | None = None, max_iter: int = 10**5):
    """(rho, y) with A y = rho y and y > 0; requires an irreducible matrix."""
    if tol is None:
        tol = tolerances.TAU_EIG
    a = np.asarray(a, dtype=float)
    comps = strongly_connected_components(a.shape[0], zip(*np.nonzero(a)))
    if len(comps) != 1:
        raise GeometryError("matrix is reducible; no Perron eigenpair")
    rho, y = _power_iteration(a, tol, max_iter)
    return rho, y


class DimensionMethod(enum.Enum):
    SSIFS_MORAN = "ssifs_moran_equation"
    GDIFS_SPECTRAL_RADIUS = "gdifs_spectral_radius"


@dataclass(frozen=True)
class DimensionReport:
    value: float
    residual: float
    iterations: int
    method: DimensionMethod


def _bisect_root(f, hi_start: float, max_iter: int = 200):
    """Root of a strictly decreasing f with f(0) >= 0 on [0, inf)."""
    tau = tolerances.tau_dim()
    f0 = f(0.0)
    if f0 < -tau:
        raise NumericFailureError("function already negative at s=0")
    if abs(f0) <= tau:
        return 0.0, f0, 0
    lo, hi = 0.0, max(hi_start, 1e-6)
    widen = 0
    while f(hi) > 0.0:
        hi *= 2.0
        widen += 1
        if widen > 60:
            raise NumericFailureError("failed to bracket the dimension root")
    s = hi
    for it in range(1, max_iter + 1):
        s = 0.5 * (lo + hi)
        fs = f(s)
        if abs(fs) <= tau and hi - lo <= 1e-14 * (1.0 + s):
            return s, fs, it
        if fs > 0.0:
            lo = s
        else:
            hi = s
    return s, f(s), max_iter


def sim_dim_ssifs(ifs: SSIFS) -> DimensionReport:
    """Similarity dimension: the root of sum(r_i^s) = 1."""
    if len(ifs) < 2:
        raise GeometryError("similarity dimension needs at least two maps")
    ratios = [s.ratio for s in ifs]
    r_max = max(ratios)

    def f(s: float) -> float:
        return math.fsum(r**s for r in ratios) - 1.0

    hi = ifs.ambient_dim * math.log(len(ratios)) / math.log(1.0 / r_max) + 1.0
    s, residual, iterations = _bisect_root(f, hi)
    return DimensionReport(s, residual, iterations, DimensionMethod.SSIFS_MORAN)


def sim_dim_words(ifs: SSIFS, words) -> DimensionReport:
    """Similarity dimension of the subsystem given by composition words."""
    ratios = [w.ratio for w in words]
    if len(ratios) < 2:
        raise GeometryError("similarity dimension needs at least two words")
    r_max = max(ratios)

    def f(s: float) -> float:
        return math.fsum(r**s for r in ratios) - 1.0

    hi = ifs.ambient_dim * math.log(len(ratios)) / math.log(1.0 / r_max) + 1.0
    s, residual, iterations = _bisect_root(f, hi)
    return DimensionReport(s, residual, iterations, DimensionMethod.SSIFS_MORAN)


def sim_dim_gdifs(g: GDIFS) -> DimensionReport:
    """The unique s with rho(A(s)) = 1, for a strongly connected system."""
    if not is_strongly_connected(g):
        raise GdifsStructureError(
            "graph is not strongly connected; the dimension equation is ambiguous"
        )

    def f(s: float) -> float:
        return spectral_radius(g.transition_matrix(s)) - 1.0

    # Upper bracket: drive the max row sum below 1 (rho <= max row sum).
    hi = 1.0
    for _ in range(200):
        if g.transition_matrix(hi).sum(axis=1).max() < 1.0:
            break
        hi *= 2.0
    s, residual, iterations = _bisect_root(f, hi)
    return DimensionReport(s, residual, iterations, DimensionMethod.GDIFS_SPECTRAL_RADIUS)


def single_vertex_gdifs(ifs: SSIFS) -> GDIFS:
    """Embed an SSIFS as a one-vertex GDIFS with one self-loop per map."""
    return GDIFS(1, [Edge(0, 0, s) for s in ifs], name=ifs.name)
