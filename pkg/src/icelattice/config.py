"""Arrow configurations, the ice rule and the height function.

A configuration stores one bit per edge: ``True`` when the arrow points along
the edge's canonical direction (tail -> head).  Heights live on the dual
cover; crossing edge ``e`` from its left face to its right face changes the
height by ``+1`` when the arrow is canonical and ``-1`` otherwise, so that
the centre of a counterclockwise 1-cycle is a strict local minimum.
"""
from __future__ import annotations

import enum
import weakref
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, dijkstra

from .lattice import DomainError, FlipFamily, HexDomain, LatticeKind


class IllegalConfiguration(ValueError):
    """Configuration violates the ice rule where a legal one is required."""


class InfeasibleBoundary(ValueError):
    """No legal fill-in can exist for the requested boundary."""


@dataclass(eq=False)
class Configuration:
    domain: HexDomain
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != (self.domain.n_edges,):
            raise DomainError(
                f"configuration has {self.bits.size} bits, domain has {self.domain.n_edges} edges")

    def copy(self) -> "Configuration":
        return Configuration(self.domain, self.bits.copy())

    def reversed(self) -> "Configuration":
        return Configuration(self.domain, ~self.bits)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.domain is other.domain and np.array_equal(self.bits, other.bits)

    def boundary(self) -> "BoundarySpec":
        loop = self.domain.dual.loop_edges
        return BoundarySpec(self.domain, self.bits[loop].copy())

    def to_bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(eq=False)
class BoundarySpec:
    """Fixed boundary arrows, in boundary-loop order (``domain.dual.loop_edges``)."""

    domain: HexDomain
    bits: np.ndarray

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=bool)
        if self.bits.shape != self.domain.dual.loop_edges.shape:
            raise DomainError("boundary spec does not cover the boundary arrows")

    @property
    def edges(self) -> np.ndarray:
        return self.domain.dual.loop_edges

    def reversed(self) -> "BoundarySpec":
        return BoundarySpec(self.domain, ~self.bits)

    def __eq__(self, other):
        if not isinstance(other, BoundarySpec):
            return NotImplemented
        return self.domain is other.domain and np.array_equal(self.bits, other.bits)

    def flux(self) -> int:
        return int(loop_steps(self.domain, self.bits).sum())

    def matches(self, config: Configuration) -> bool:
        return bool(np.array_equal(config.bits[self.edges], self.bits))


class Order(enum.Enum):
    EQUAL = "equal"
    FIRST_MAJORS = "first"
    SECOND_MAJORS = "second"
    INCOMPARABLE = "incomparable"


def arrow_signs(bits) -> np.ndarray:
    return np.where(bits, 1, -1).astype(np.int64)


# ---------------------------------------------------------------- ice rule

def vertex_balance(domain: HexDomain, bits) -> np.ndarray:
    """Out-degree minus in-degree at every vertex (only meaningful on interior ones)."""
    s = arrow_signs(bits)
    nv = domain.n_vertices
    return (np.bincount(domain.edge_tail, weights=s, minlength=nv)
            - np.bincount(domain.edge_head, weights=s, minlength=nv)).astype(np.int64)


def validate(domain: HexDomain, config) -> list[int]:
    """Interior vertices with unequal in/out arrow counts (empty iff legal)."""
    bits = config.bits if isinstance(config, Configuration) else np.asarray(config, dtype=bool)
    if bits.shape != (domain.n_edges,):
        raise DomainError("configuration size does not match domain")
    bal = vertex_balance(domain, bits)
    return [int(v) for v in np.flatnonzero(domain.interior & (bal != 0))]


def is_legal(config: Configuration) -> bool:
    return not validate(config.domain, config)


def local_pattern_count(kind: LatticeKind) -> int:
    """Legal arrow stars at one vertex, by exhaustive enumeration."""
    deg = kind.degree
    count = 0
    for m in range(1 << deg):
        if bin(m).count("1") * 2 == deg:
            count += 1
    return count


def vertex_orientation_classes(domain: HexDomain) -> int:
    """Distinct arrangements of edge directions around interior vertices."""
    stars = [set() for _ in range(domain.n_vertices)]
    ij = domain.vert_ij
    for t, h in zip(domain.edge_tail.tolist(), domain.edge_head.tolist()):
        d = tuple(ij[h] - ij[t])
        stars[t].add(d)
        stars[h].add((-d[0], -d[1]))
    return len({frozenset(stars[v]) for v in domain.interior_vertex_ids.tolist()})


def vertex_type_count(domain: HexDomain) -> int:
    """Legal vertex types of the model: orientation classes times legal stars."""
    return vertex_orientation_classes(domain) * local_pattern_count(domain.kind)


# ---------------------------------------------------------------- heights

_TREES: "weakref.WeakKeyDictionary[HexDomain, tuple]" = weakref.WeakKeyDictionary()


def dual_adjacency(domain: HexDomain):
    d = domain.dual
    nd = len(d.pos)
    rows = np.r_[d.left, d.right]
    cols = np.r_[d.right, d.left]
    data = np.r_[np.arange(domain.n_edges), np.arange(domain.n_edges)] + 1
    return coo_matrix((data, (rows, cols)), shape=(nd, nd)).tocsr()


def _tree(domain: HexDomain):
    """BFS spanning tree of the dual cover, grouped by depth for vectorised sweeps."""
    cached = _TREES.get(domain)
    if cached is not None:
        return cached
    adj = dual_adjacency(domain)
    order, pred = breadth_first_order(adj, domain.dual.base, directed=False,
                                      return_predecessors=True)
    if len(order) != adj.shape[0]:
        raise AssertionError("dual cover is not connected")
    depth = np.zeros(adj.shape[0], dtype=np.int64)
    for v in order[1:]:
        depth[v] = depth[pred[v]] + 1
    levels = []
    for lev in range(1, int(depth.max()) + 1):
        nodes = np.flatnonzero(depth == lev)
        parents = pred[nodes]
        edges = np.asarray(adj[nodes, parents]).ravel() - 1
        # stepping onto the right face of an edge adds s, onto the left face subtracts it
        factor = np.where(domain.dual.right[edges] == nodes, 1, -1)
        levels.append((nodes, parents, edges, factor))
    _TREES[domain] = levels
    return levels


def height_unchecked(domain: HexDomain, bits) -> np.ndarray:
    s = arrow_signs(bits)
    h = np.zeros(len(domain.dual.pos), dtype=np.int64)
    for nodes, parents, edges, factor in _tree(domain):
        h[nodes] = h[parents] + factor * s[edges]
    return h


def height_step(domain: HexDomain, bits, edge: int, frm: int) -> int:
    """Height change when crossing ``edge`` starting from dual vertex ``frm``."""
    s = 1 if bits[edge] else -1
    return s if domain.dual.left[edge] == frm else -s


def height(domain: HexDomain, config) -> np.ndarray:
    """Height on every dual vertex, zero at the base point.

    Raises IllegalConfiguration naming a vertex whose surrounding dual loop
    has nonzero circulation.
    """
    bits = config.bits if isinstance(config, Configuration) else np.asarray(config, dtype=bool)
    h = height_unchecked(domain, bits)
    d = domain.dual
    bad = np.flatnonzero(h[d.right] - h[d.left] != arrow_signs(bits))
    if bad.size:
        viol = validate(domain, bits)
        where = f"around vertex {viol[0]}" if viol else f"through edge {int(bad[0])}"
        raise IllegalConfiguration(f"height circulation nonzero {where}")
    return h


# ---------------------------------------------------------------- boundary heights

def loop_steps(domain: HexDomain, boundary_bits) -> np.ndarray:
    """Height increments along the boundary loop, counterclockwise from the base point."""
    d = domain.dual
    s = arrow_signs(boundary_bits)
    frm = d.loop_vertices
    return np.where(d.left[d.loop_edges] == frm, s, -s)


def boundary_profile(domain: HexDomain, spec: BoundarySpec | Configuration) -> np.ndarray:
    """Heights along the boundary loop; length = loop length + 1, both ends 0."""
    if isinstance(spec, Configuration):
        spec = spec.boundary()
    steps = loop_steps(domain, spec.bits)
    prof = np.r_[0, np.cumsum(steps)]
    if prof[-1] != 0:
        raise InfeasibleBoundary(f"boundary flux is {int(prof[-1])}, not zero")
    return prof


@dataclass(frozen=True)
class Signature:
    tilts: tuple[Fraction, ...]

    def nominal(self) -> tuple[int, ...]:
        """Tilts rounded to the nearest of -1, 0, +1."""
        return tuple(int(round(t)) for t in self.tilts)

    def __str__(self):
        return ",".join(str(t) for t in self.tilts)


def signature_of(profile, domain: HexDomain) -> Signature:
    """Per-side tilt: height change over the side divided by its dual steps."""
    profile = np.asarray(profile)
    sides = domain.boundary_side
    tilts = []
    for k in range(6):
        idx = np.flatnonzero(sides == k)
        if idx.size == 0:
            tilts.append(Fraction(0))
            continue
        dh = int(profile[idx[-1] + 1] - profile[idx[0]])
        tilts.append(Fraction(dh, idx.size))
    return Signature(tuple(tilts))


# ---------------------------------------------------------------- partial order

def compare(c1: Configuration, c2: Configuration) -> Order:
    if c1.domain is not c2.domain:
        raise DomainError("configurations live on different domains")
    loop = c1.domain.dual.loop_edges
    if not np.array_equal(c1.bits[loop], c2.bits[loop]):
        raise DomainError("configurations have different boundary arrows")
    h1, h2 = height(c1.domain, c1), height(c2.domain, c2)
    ge, le = bool(np.all(h1 >= h2)), bool(np.all(h1 <= h2))
    if ge and le:
        return Order.EQUAL
    if ge:
        return Order.FIRST_MAJORS
    if le:
        return Order.SECOND_MAJORS
    return Order.INCOMPARABLE


def face_orientation(domain: HexDomain, bits, family: FlipFamily):
    """For each face of ``family``: +1 CCW 1-cycle, -1 CW 1-cycle, 0 otherwise."""
    fa = domain.family_arrays[family]
    if fa.edges.size == 0:
        return fa.face_ids, np.zeros(0, dtype=np.int64)
    along = bits[fa.edges] == fa.sense
    ccw = along.all(axis=1)
    cw = (~along).all(axis=1)
    return fa.face_ids, ccw.astype(np.int64) - cw.astype(np.int64)


def extremal(domain: HexDomain, config: Configuration, direction: str = "max") -> Configuration:
    """Raise (or lower) the height surface by local moves until no move is left.

    For ``max`` every off-boundary counterclockwise 1-cycle is reversed; such
    cycles are pairwise edge-disjoint, so each round flips all of them at once.
    """
    if direction not in ("max", "min"):
        raise ValueError("direction must be 'max' or 'min'")
    if validate(domain, config):
        raise IllegalConfiguration("extremal() needs a legal configuration")
    want = 1 if direction == "max" else -1
    bits = config.bits.copy()
    offb = np.array([f.off_boundary for f in domain.faces], dtype=bool)
    while True:
        moved = False
        for fam in domain.kind.families:
            fa = domain.family_arrays[fam]
            if fa.edges.size == 0:
                continue
            _, orient = face_orientation(domain, bits, fam)
            hit = (orient == want) & offb[fa.face_ids]
            if hit.any():
                bits[fa.edges[hit].ravel()] ^= True
                moved = True
        if not moved:
            return Configuration(domain, bits)


# ---------------------------------------------------------------- fill-ins from heights

def config_from_heights(domain: HexDomain, h) -> Configuration:
    d = domain.dual
    s = np.asarray(h)[d.right] - np.asarray(h)[d.left]
    if np.any(np.abs(s) != 1):
        raise InfeasibleBoundary("height field is not a valid ice height function")
    return Configuration(domain, s > 0)


def lipschitz_fill(domain: HexDomain, spec: BoundarySpec, direction: str = "max") -> Configuration:
    """Extremal fill-in of ``spec`` built directly from boundary heights.

    Legal configurations correspond to integer heights with unit steps on every
    dual edge; on the bipartite dual this is the 1-Lipschitz condition.  The
    largest such extension is ``min_b (h(b) + dist(b, .))`` over boundary-loop
    vertices (the smallest is symmetric).  Raises InfeasibleBoundary when the
    boundary admits no legal fill-in.
    """
    prof = boundary_profile(domain, spec)
    loop_v = domain.dual.loop_vertices
    hb = prof[:-1]
    sign = 1 if direction == "max" else -1
    off = sign * hb
    shift = off.min()
    nd = len(domain.dual.pos)
    adj = dual_adjacency(domain)
    adj.data[:] = 1
    # super source with weighted spokes into the loop vertices
    src = nd
    rows = np.r_[adj.tocoo().row, np.full(len(loop_v), src)]
    cols = np.r_[adj.tocoo().col, loop_v]
    w = np.r_[np.ones(adj.nnz), off - shift + 1.0]
    g = coo_matrix((w, (rows, cols)), shape=(nd + 1, nd + 1)).tocsr()
    dist = dijkstra(g, directed=True, indices=src)[:nd]
    if not np.all(np.isfinite(dist)):
        raise AssertionError("dual cover is not connected")
    h = sign * (np.rint(dist).astype(np.int64) - 1 + shift)
    if not np.array_equal(h[loop_v], hb):
        raise InfeasibleBoundary("boundary heights violate the unit-step constraint")
    try:
        cfg = config_from_heights(domain, h)
    except InfeasibleBoundary:
        raise InfeasibleBoundary("boundary heights have inconsistent parity") from None
    return cfg


def forced_edges(domain: HexDomain, spec: BoundarySpec) -> np.ndarray:
    """Edges whose orientation is the same in every legal fill-in of ``spec``."""
    hi = lipschitz_fill(domain, spec, "max")
    lo = lipschitz_fill(domain, spec, "min")
    return hi.bits == lo.bits


# ---------------------------------------------------------------- file formats

def write_config(config: Configuration, header: str = "ICECFG") -> str:
    d = config.domain
    lines = [f"{header} {d.kind.value} {d.n}"]
    lines += [f"{e} {int(b)}" for e, b in enumerate(config.bits)]
    return "\n".join(lines) + "\n"


def write_boundary(spec: BoundarySpec) -> str:
    d = spec.domain
    lines = [f"ICEBND {d.kind.value} {d.n}"]
    order = np.argsort(spec.edges)
    lines += [f"{spec.edges[k]} {int(spec.bits[k])}" for k in order]
    return "\n".join(lines) + "\n"


def parse_header(text: str) -> tuple[str, LatticeKind, int]:
    first = text.strip().splitlines()[0].split()
    if len(first) != 3 or first[0] not in ("ICECFG", "ICEBND"):
        raise ValueError("missing ICECFG/ICEBND header")
    return first[0], LatticeKind.parse(first[1]), int(first[2])


def _records(text: str) -> dict[int, bool]:
    out = {}
    for ln in text.strip().splitlines()[1:]:
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        e, b = ln.split()
        if b not in ("0", "1"):
            raise ValueError(f"bad bit {b!r}")
        out[int(e)] = b == "1"
    return out


def read_config(text: str, domain: HexDomain) -> Configuration:
    tag, kind, n = parse_header(text)
    if tag != "ICECFG" or (kind, n) != domain.key():
        raise ValueError("configuration header does not match the domain")
    rec = _records(text)
    if sorted(rec) != list(range(domain.n_edges)):
        raise ValueError("configuration must list every edge exactly once")
    return Configuration(domain, np.array([rec[e] for e in range(domain.n_edges)]))


def read_boundary(text: str, domain: HexDomain) -> BoundarySpec:
    tag, kind, n = parse_header(text)
    if tag != "ICEBND" or (kind, n) != domain.key():
        raise ValueError("boundary header does not match the domain")
    rec = _records(text)
    loop = domain.dual.loop_edges
    if set(rec) != set(int(e) for e in loop):
        raise ValueError("boundary file must list exactly the boundary arrows")
    return BoundarySpec(domain, np.array([rec[int(e)] for e in loop]))
