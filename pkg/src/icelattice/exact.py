"""Exhaustive enumeration of legal fill-ins and the flip graph they span."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .config import BoundarySpec, Configuration, face_orientation
from .lattice import DomainError, FlipFamily, HexDomain

DEFAULT_CAP = 10**7


class TruncatedEnumeration(ValueError):
    """Operation needs the complete list of fill-ins."""


@dataclass(eq=False)
class EnumerationResult:
    domain: HexDomain
    count: int
    configs: list = field(default_factory=list)  # canonical (lexicographic) order
    truncated: bool = False

    def bit_matrix(self) -> np.ndarray:
        if self.truncated:
            raise TruncatedEnumeration("enumeration was truncated")
        if not self.configs:
            return np.zeros((0, self.domain.n_edges), dtype=bool)
        return np.array([c.bits for c in self.configs])

    def index(self) -> dict[bytes, int]:
        return {np.packbits(c.bits).tobytes(): k for k, c in enumerate(self.configs)}


def edge_order(domain: HexDomain) -> list[int]:
    """Interior edges by (lower endpoint, direction): a row-by-row sweep."""
    inner = domain.interior_edge_ids
    lo = np.minimum(domain.edge_tail[inner], domain.edge_head[inner])
    return [int(e) for e in inner[np.lexsort((domain.edge_dir[inner], lo))]]


class _Search:
    """Backtracking over interior edges with forced-move propagation.

    A vertex that already has half of its arrows pointing out (in) forces all
    its remaining arrows in (out); exceeding half is a contradiction.
    """

    def __init__(self, domain: HexDomain, spec: BoundarySpec, cap: int):
        self.d = domain
        self.cap = cap
        nv, ne = domain.n_vertices, domain.n_edges
        self.half = domain.kind.degree // 2
        self.tail = domain.edge_tail.tolist()
        self.head = domain.edge_head.tolist()
        self.inter = domain.interior.tolist()
        self.inc = [[] for _ in range(nv)]
        for e in range(ne):
            self.inc[self.tail[e]].append(e)
            self.inc[self.head[e]].append(e)
        self.val = [-1] * ne
        self.out = [0] * nv
        self.inn = [0] * nv
        self.trail: list[int] = []
        self.order = edge_order(domain)
        self.spec = spec
        self.count = 0
        self.found: list[np.ndarray] = []

    def _set(self, e, b, queue) -> bool:
        self.val[e] = b
        self.trail.append(e)
        t, h = self.tail[e], self.head[e]
        if b:
            self.out[t] += 1
            self.inn[h] += 1
        else:
            self.inn[t] += 1
            self.out[h] += 1
        for v in (t, h):
            if self.inter[v]:
                if self.out[v] > self.half or self.inn[v] > self.half:
                    return False
                queue.append(v)
        return True

    def _propagate(self, queue) -> bool:
        while queue:
            v = queue.pop()
            o, i = self.out[v], self.inn[v]
            if o == self.half and i < self.half:
                want_out = False
            elif i == self.half and o < self.half:
                want_out = True
            else:
                continue
            for e in self.inc[v]:
                if self.val[e] != -1:
                    continue
                is_tail = self.tail[e] == v
                if not self._set(e, 1 if is_tail == want_out else 0, queue):
                    return False
        return True

    def _undo(self, mark):
        while len(self.trail) > mark:
            e = self.trail.pop()
            b = self.val[e]
            t, h = self.tail[e], self.head[e]
            if b:
                self.out[t] -= 1
                self.inn[h] -= 1
            else:
                self.inn[t] -= 1
                self.out[h] -= 1
            self.val[e] = -1

    def run(self):
        queue = []
        for e, b in zip(self.spec.edges.tolist(), self.spec.bits.tolist()):
            if not self._set(e, 1 if b else 0, queue):
                return
        if not self._propagate(queue):
            return
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 4 * len(self.order) + 100))
        try:
            self._dfs(0)
        finally:
            sys.setrecursionlimit(limit)

    def _dfs(self, pos):
        order, val = self.order, self.val
        while pos < len(order) and val[order[pos]] != -1:
            pos += 1
        if pos == len(order):
            self.count += 1
            if len(self.found) < self.cap:
                self.found.append(np.array(val, dtype=bool))
            return
        e = order[pos]
        for b in (0, 1):
            mark = len(self.trail)
            queue = []
            if self._set(e, b, queue) and self._propagate(queue):
                self._dfs(pos + 1)
            self._undo(mark)


def enumerate_fillins(domain: HexDomain, spec: BoundarySpec, cap: int = DEFAULT_CAP) -> EnumerationResult:
    """All legal fill-ins of ``spec``; stores at most ``cap`` but always counts exactly."""
    if spec.domain is not domain:
        raise DomainError("boundary spec belongs to another domain")
    if spec.flux() != 0:
        return EnumerationResult(domain, 0, [], False)
    s = _Search(domain, spec, cap)
    s.run()
    truncated = s.count > len(s.found)
    found = sorted(s.found, key=lambda b: b.tobytes())
    configs = [Configuration(domain, b) for b in found]
    return EnumerationResult(domain, s.count, configs, truncated)


def brute_force_count(domain: HexDomain, spec: BoundarySpec, limit_edges: int = 22) -> int:
    """Independent check: try every assignment of the interior edges."""
    inner = domain.interior_edge_ids
    if inner.size > limit_edges:
        raise ValueError(f"{inner.size} interior edges is too many for brute force")
    base = np.zeros(domain.n_edges, dtype=bool)
    base[spec.edges] = spec.bits
    m = inner.size
    codes = np.arange(1 << m, dtype=np.int64)
    assign = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    bits = np.broadcast_to(base, (len(codes), domain.n_edges)).copy()
    bits[:, inner] = assign
    sgn = np.where(bits, 1, -1)
    nv = domain.n_vertices
    bal = np.zeros((len(codes), nv), dtype=np.int64)
    np.add.at(bal.T, domain.edge_tail, sgn.T)
    np.subtract.at(bal.T, domain.edge_head, sgn.T)
    ok = np.all(bal[:, domain.interior] == 0, axis=1)
    return int(ok.sum())


# ---------------------------------------------------------------- flip graph

@dataclass(eq=False)
class FlipGraph:
    n_nodes: int
    edges: np.ndarray  # (m, 2) node pairs, i < j
    families: tuple[FlipFamily, ...]

    def components(self) -> tuple[int, np.ndarray]:
        if self.n_nodes == 0:
            return 0, np.zeros(0, dtype=np.int64)
        m = self.edges.shape[0]
        adj = coo_matrix((np.ones(m), (self.edges[:, 0], self.edges[:, 1])),
                         shape=(self.n_nodes, self.n_nodes))
        return connected_components(adj, directed=False)

    def is_connected(self) -> bool:
        return self.components()[0] <= 1


def flip_graph(result: EnumerationResult, domain: HexDomain, families=None) -> FlipGraph:
    """Fill-ins joined by single off-boundary 1-cycle reversals from ``families``."""
    if result.truncated:
        raise TruncatedEnumeration("flip graph needs a complete enumeration")
    fams = tuple(FlipFamily.parse(f) for f in families) if families is not None else domain.kind.families
    for f in fams:
        if f not in domain.kind.families:
            raise DomainError(f"{f.name} moves do not exist on {domain.kind.value}")
    index = result.index()
    offb = np.array([f.off_boundary for f in domain.faces], dtype=bool)
    pairs = set()
    for k, c in enumerate(result.configs):
        for fam in fams:
            fa = domain.family_arrays[fam]
            if fa.edges.size == 0:
                continue
            _, orient = face_orientation(domain, c.bits, fam)
            for row in np.flatnonzero((orient != 0) & offb[fa.face_ids]):
                nb = c.bits.copy()
                nb[fa.edges[row]] ^= True
                j = index[np.packbits(nb).tobytes()]
                pairs.add((min(k, j), max(k, j)))
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    return FlipGraph(len(result.configs), edges, fams)


# ---------------------------------------------------------------- entropy

def entropy_of(count: int, arrow_count: int) -> float:
    """log(#fill-ins) / #arrows on the whole domain (boundary arrows included)."""
    if count < 1:
        raise ValueError("entropy undefined: boundary admits no fill-in")
    if arrow_count <= 0:
        raise ValueError("arrow count must be positive")
    return math.log(count) / arrow_count


# ---------------------------------------------------------------- sampler oracle

@dataclass
class UniformityReport:
    n_states: int
    n_samples: int
    chi2: float
    dof: int
    p_value: float
    unseen: int

    def passed(self, alpha: float = 0.01) -> bool:
        return self.p_value > alpha


def chi_square_uniform(counts) -> tuple[float, int, float]:
    counts = np.asarray(counts, dtype=float)
    k = counts.size
    if k <= 1:
        return 0.0, 0, 1.0
    chi2, p = stats.chisquare(counts)
    return float(chi2), k - 1, float(p)


def uniformity_test(domain, spec, schedule, sample_count, spacing, seed,
                    burn_in=None, initial=None, result=None) -> UniformityReport:
    """Chi-square test of spaced sampler states against the uniform law on all fill-ins."""
    from .dynamics import Sampler  # local import: dynamics depends on config only

    if result is None:
        result = enumerate_fillins(domain, spec)
    if result.truncated:
        raise TruncatedEnumeration("uniformity test needs a complete enumeration")
    if result.count == 0:
        raise ValueError("boundary admits no fill-in")
    index = result.index()
    start = initial if initial is not None else result.configs[0]
    sampler = Sampler(domain, start, schedule, seed)
    sampler.sweeps(burn_in if burn_in is not None else 10 * domain.n)
    counts = np.zeros(result.count, dtype=np.int64)
    for _ in range(sample_count):
        sampler.sweeps(spacing)
        counts[index[np.packbits(sampler.bits).tobytes()]] += 1
    chi2, dof, p = chi_square_uniform(counts)
    return UniformityReport(result.count, sample_count, chi2, dof, p, int((counts == 0).sum()))
