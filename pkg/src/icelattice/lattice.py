"""Hexagonal domains on the triangular, Kagome and 3.4.6.4 lattices.

All three lattices are realised as subgraphs of the unit triangular lattice.
A site is addressed by integer coordinates ``(i, j)`` with embedding
``i * (1, 0) + j * (1/2, sqrt(3)/2)``.

* Triangular: every site, every nearest-neighbour bond.
* Kagome: the sites with ``i`` and ``j`` both even are removed (these are the
  centres of the 1-hexagons); all remaining unit bonds are kept.
* 3.4.6.4: the index-7 sublattice ``(3i + j) % 7 == 0`` is removed (1-hexagon
  centres) together with the short diagonal of every lozenge, i.e. the bond
  ``c + e_k -- c + e_k + e_(k+1)`` for every centre ``c``.  Squares of the
  rhombitrihexagonal tiling therefore appear as unit lozenges.

Minimal faces ("1-polygons") are unit triangles, 1-hexagons around removed
sites and lozenges around removed diagonals.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

SQRT3 = math.sqrt(3.0)

# unit vectors in triangular coordinates, counterclockwise from angle 0
UNIT = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))

# generous cap so that a typo in N does not eat the machine
MAX_VERTICES = 2_000_000


class DomainError(ValueError):
    """Invalid domain request."""


class CapacityError(DomainError):
    """Domain would exceed the memory budget."""


class LatticeKind(enum.Enum):
    TRIANGULAR = "tri"
    KAGOME = "kagome"
    T3464 = "3464"

    @classmethod
    def parse(cls, name: str) -> "LatticeKind":
        aliases = {
            "tri": cls.TRIANGULAR, "triangular": cls.TRIANGULAR,
            "kagome": cls.KAGOME, "kag": cls.KAGOME,
            "3464": cls.T3464, "t3464": cls.T3464, "3.4.6.4": cls.T3464,
        }
        try:
            return aliases[name.lower()]
        except KeyError:
            raise DomainError(f"unknown lattice {name!r}") from None

    @property
    def degree(self) -> int:
        return 6 if self is LatticeKind.TRIANGULAR else 4

    @property
    def families(self) -> tuple["FlipFamily", ...]:
        if self is LatticeKind.TRIANGULAR:
            return (FlipFamily.EVEN, FlipFamily.ODD)
        if self is LatticeKind.KAGOME:
            return (FlipFamily.EVEN, FlipFamily.ODD, FlipFamily.HEXAGON)
        return tuple(FlipFamily)


class FlipFamily(enum.Enum):
    EVEN = "fe"
    ODD = "fo"
    HEXAGON = "fh"
    LEFT = "fl"
    RIGHT = "fr"
    STRAIGHT = "fs"

    @classmethod
    def parse(cls, code) -> "FlipFamily":
        if isinstance(code, cls):
            return code
        try:
            return cls(code.lower())
        except ValueError:
            raise DomainError(f"unknown flip family {code!r}") from None

    @property
    def index(self) -> int:
        return list(FlipFamily).index(self)


def hexdist(i, j):
    """Hexagonal (triangular lattice graph) norm of ``(i, j)``; works on arrays."""
    return np.maximum(np.maximum(np.abs(i), np.abs(j)), np.abs(np.add(i, j)))


def embed(ij) -> np.ndarray:
    ij = np.asarray(ij, dtype=float)
    x = ij[..., 0] + 0.5 * ij[..., 1]
    y = ij[..., 1] * (SQRT3 / 2)
    return np.stack([x, y], axis=-1)


def _is_hole(kind: LatticeKind, i: int, j: int) -> bool:
    if kind is LatticeKind.KAGOME:
        return i % 2 == 0 and j % 2 == 0
    if kind is LatticeKind.T3464:
        return (3 * i + j) % 7 == 0
    return False


def _center_of(i: int, j: int) -> tuple[int, int, int]:
    """Adjacent 1-hexagon centre of a 3.4.6.4 site and the site's index around it."""
    for k, (di, dj) in enumerate(UNIT):
        ci, cj = i - di, j - dj
        if (3 * ci + cj) % 7 == 0:
            return ci, cj, k
    raise AssertionError(f"site {(i, j)} has no adjacent centre")


def _is_diagonal(kind: LatticeKind, a: tuple[int, int], b: tuple[int, int]) -> bool:
    if kind is not LatticeKind.T3464:
        return False
    for p, q in ((a, b), (b, a)):
        _, _, k = _center_of(*p)
        di, dj = UNIT[(k + 1) % 6]
        if (p[0] + di, p[1] + dj) == q:
            return True
    return False


def site_present(kind: LatticeKind, i: int, j: int) -> bool:
    return not _is_hole(kind, i, j)


def bond_present(kind: LatticeKind, a, b) -> bool:
    if _is_hole(kind, *a) or _is_hole(kind, *b):
        return False
    return not _is_diagonal(kind, tuple(a), tuple(b))


def cut_radius(kind: LatticeKind, n: int) -> int:
    """Hexagonal-norm radius of the cut that defines an ``n``-hexagon."""
    return n // 2 if kind is LatticeKind.TRIANGULAR else n


def cell_basis(kind: LatticeKind, i: int, j: int) -> tuple[int, int, int]:
    if kind is LatticeKind.TRIANGULAR:
        return i, j, 0
    if kind is LatticeKind.KAGOME:
        return i // 2, j // 2, (i % 2) + 2 * (j % 2) - 1
    ci, cj, k = _center_of(i, j)
    # sublattice coordinates: c = m (2, 1) + n (-1, 3)
    return (3 * ci + cj) // 7, (2 * cj - ci) // 7, k


@dataclass(frozen=True, eq=False)
class Face:
    id: int
    family: FlipFamily
    edges: tuple[int, ...]
    sense: tuple[bool, ...]
    centroid: tuple[float, float]
    off_boundary: bool


@dataclass(frozen=True, eq=False)
class DualCover:
    """Dual vertices are lattice faces touching at least one domain edge.

    Dual edge ``e`` crosses primal edge ``e``; ``left[e]`` / ``right[e]`` are
    the dual vertices on the left and right of the canonical edge direction.
    """

    pos: np.ndarray
    keys: list
    left: np.ndarray
    right: np.ndarray
    base: int
    loop_edges: np.ndarray
    loop_vertices: np.ndarray
    face_of: np.ndarray  # dual vertex -> face id, -1 for partial faces


@dataclass(frozen=True, eq=False)
class FamilyArrays:
    """Vectorised view of one flip family: faces are rows, edges columns."""

    face_ids: np.ndarray
    edges: np.ndarray
    sense: np.ndarray


@dataclass(frozen=True, eq=False)
class HexDomain:
    kind: LatticeKind
    n: int
    radius: int
    vert_ij: np.ndarray
    vert_pos: np.ndarray
    vert_cell: np.ndarray
    vert_basis: np.ndarray
    interior: np.ndarray
    edge_tail: np.ndarray
    edge_head: np.ndarray
    edge_dir: np.ndarray
    edge_boundary: np.ndarray
    faces: tuple[Face, ...]
    dual: DualCover
    boundary_side: np.ndarray  # side index per entry of dual.loop_edges
    family_arrays: dict = field(repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vert_ij)

    @property
    def n_edges(self) -> int:
        return len(self.edge_tail)

    @property
    def interior_vertex_ids(self) -> np.ndarray:
        return np.flatnonzero(self.interior)

    @property
    def interior_edge_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.edge_boundary)

    @property
    def boundary_edge_ids(self) -> np.ndarray:
        return self.dual.loop_edges

    def key(self) -> tuple:
        return (self.kind, self.n)

    def face_mask(self, families=None, off_boundary_only=True) -> np.ndarray:
        fams = set(families) if families is not None else None
        return np.array([
            (fams is None or f.family in fams) and (f.off_boundary or not off_boundary_only)
            for f in self.faces
        ], dtype=bool)


def build_domain(kind: LatticeKind | str, n: int) -> HexDomain:
    """Construct the ``n``-hexagon on ``kind``.

    A site is interior when it and all of its lattice neighbours lie in the
    closed hexagonal cut; a bond belongs to the domain when at least one end
    is interior, and it is a boundary arrow when exactly one end is.
    """
    if isinstance(kind, str):
        kind = LatticeKind.parse(kind)
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool):
        raise DomainError("N must be an integer")
    n = int(n)
    if n < 2 or n % 2:
        raise DomainError(f"N must be a positive even integer, got {n}")
    rho = cut_radius(kind, n)
    if 3 * (rho + 1) ** 2 > MAX_VERTICES:
        raise CapacityError(f"N={n} exceeds the vertex budget")

    def neighbours(p):
        for d, (di, dj) in enumerate(UNIT):
            q = (p[0] + di, p[1] + dj)
            if bond_present(kind, p, q):
                yield d, q

    # interior sites, scanned row by row
    interior_sites = []
    for j in range(-rho, rho + 1):
        for i in range(-rho, rho + 1):
            if hexdist(i, j) > rho or not site_present(kind, i, j):
                continue
            if all(hexdist(*q) <= rho for _, q in neighbours((i, j))):
                interior_sites.append((i, j))
    interior_set = set(interior_sites)

    bonds = set()
    for p in interior_sites:
        for d, q in neighbours(p):
            # canonical direction has angle in [0, pi): unit vectors 0, 1, 2
            bonds.add((p, d) if d < 3 else (q, d - 3))
    sites = set(interior_sites)
    for p, d in bonds:
        sites.add(p)
        sites.add((p[0] + UNIT[d][0], p[1] + UNIT[d][1]))
    site_list = sorted(sites, key=lambda s: (s[1], s[0]))
    vid = {s: k for k, s in enumerate(site_list)}

    bond_list = sorted(bonds, key=lambda b: (vid[b[0]], b[1]))
    eid = {b: k for k, b in enumerate(bond_list)}
    tail = np.array([vid[p] for p, _ in bond_list], dtype=np.int64)
    head = np.array([vid[(p[0] + UNIT[d][0], p[1] + UNIT[d][1])] for p, d in bond_list],
                    dtype=np.int64)
    edir = np.array([d for _, d in bond_list], dtype=np.int8)

    vert_ij = np.array(site_list, dtype=np.int64).reshape(-1, 2)
    interior = np.array([s in interior_set for s in site_list], dtype=bool)
    is_bnd = interior[tail] != interior[head]
    cb = np.array([cell_basis(kind, *s) for s in site_list], dtype=np.int64).reshape(-1, 3)

    def edge_between(a, b):
        """Edge id and whether a->b follows the canonical direction."""
        d = UNIT.index((b[0] - a[0], b[1] - a[1]))
        if d < 3:
            return eid.get((a, d)), True
        return eid.get((b, d - 3)), False

    faces = _collect_faces(kind, interior_sites, edge_between, is_bnd)
    fam_arrays = {}
    for fam in kind.families:
        rows = [f for f in faces if f.family is fam]
        k = len(rows[0].edges) if rows else {FlipFamily.HEXAGON: 6}.get(fam, 3 if fam in (FlipFamily.EVEN, FlipFamily.ODD) else 4)
        fam_arrays[fam] = FamilyArrays(
            face_ids=np.array([f.id for f in rows], dtype=np.int64),
            edges=np.array([f.edges for f in rows], dtype=np.int64).reshape(-1, k),
            sense=np.array([f.sense for f in rows], dtype=bool).reshape(-1, k),
        )

    dual = _build_dual(kind, bond_list, faces, edge_between, is_bnd)
    sides = _assign_sides(embed(vert_ij), tail, head, dual.loop_edges)
    return HexDomain(
        kind=kind, n=n, radius=rho,
        vert_ij=vert_ij, vert_pos=embed(vert_ij), vert_cell=cb[:, :2], vert_basis=cb[:, 2],
        interior=interior,
        edge_tail=tail, edge_head=head, edge_dir=edir, edge_boundary=is_bnd,
        faces=tuple(faces), dual=dual, boundary_side=sides, family_arrays=fam_arrays,
    )


def _triangle_cycles(i, j):
    """CCW vertex cycles of the even and odd unit triangles anchored at (i, j)."""
    even = ((i, j), (i + 1, j), (i, j + 1))
    odd = ((i + 1, j), (i + 1, j + 1), (i, j + 1))
    return even, odd


def _lozenge_cycle(p, d):
    """CCW cycle of the lozenge whose short diagonal is p -> p + e_d."""
    out = []
    for off in ((d - 1) % 6, d, (d + 1) % 6):
        out.append((p[0] + UNIT[off][0], p[1] + UNIT[off][1]))
    return (p, out[0], out[1], out[2])


LOZENGE_FAMILY = {0: FlipFamily.STRAIGHT, 1: FlipFamily.LEFT, 2: FlipFamily.RIGHT}


def _candidate_polygons(kind, interior_sites):
    """Every minimal polygon that could lie entirely inside the domain, as
    (family, anchor, ccw vertex cycle)."""
    seen = set()
    for p in interior_sites:
        for di in (-1, 0):
            for dj in (-1, 0):
                ev, od = _triangle_cycles(p[0] + di, p[1] + dj)
                for fam, cyc in ((FlipFamily.EVEN, ev), (FlipFamily.ODD, od)):
                    key = (fam, cyc)
                    if key in seen:
                        continue
                    seen.add(key)
                    if all(bond_present(kind, cyc[a], cyc[(a + 1) % 3]) for a in range(3)):
                        yield fam, cyc
        if kind is LatticeKind.TRIANGULAR:
            continue
        for di, dj in UNIT:
            c = (p[0] + di, p[1] + dj)
            if _is_hole(kind, *c) and ("H", c) not in seen:
                seen.add(("H", c))
                yield FlipFamily.HEXAGON, tuple((c[0] + u, c[1] + v) for u, v in UNIT)
        if kind is LatticeKind.T3464:
            for s in [p] + [(p[0] + u, p[1] + v) for u, v in UNIT]:
                if not site_present(kind, *s):
                    continue
                for d in range(3):
                    q = (s[0] + UNIT[d][0], s[1] + UNIT[d][1])
                    if ("L", s, d) in seen or not site_present(kind, *q):
                        continue
                    if _is_diagonal(kind, s, q):
                        seen.add(("L", s, d))
                        yield LOZENGE_FAMILY[d], _lozenge_cycle(s, d)


def _collect_faces(kind, interior_sites, edge_between, is_bnd):
    found = []
    for fam, cyc in _candidate_polygons(kind, interior_sites):
        m = len(cyc)
        edges, sense = [], []
        for a in range(m):
            e, s = edge_between(cyc[a], cyc[(a + 1) % m])
            if e is None:
                break
            edges.append(e)
            sense.append(s)
        else:
            cen = embed(np.array(cyc)).mean(axis=0)
            found.append((fam.index, round(cen[1], 9), round(cen[0], 9), fam, edges, sense, cen))
    found.sort(key=lambda r: r[:3])
    faces = []
    for k, (_, _, _, fam, edges, sense, cen) in enumerate(found):
        faces.append(Face(
            id=k, family=fam, edges=tuple(edges), sense=tuple(sense),
            centroid=(float(cen[0]), float(cen[1])),
            off_boundary=not bool(is_bnd[edges].any()),
        ))
    return faces


def _lattice_face_key(kind, tri):
    """Map a unit triangle (3 sites) to the lattice face containing it."""
    for s in tri:
        if _is_hole(kind, *s):
            return ("H", s)
    if kind is LatticeKind.T3464:
        for a in range(3):
            p, q = tri[a], tri[(a + 1) % 3]
            if _is_diagonal(kind, p, q):
                d = UNIT.index((q[0] - p[0], q[1] - p[1]))
                return ("L",) + ((p, d) if d < 3 else (q, d - 3))
    return ("T",) + tuple(sorted(tri))


def _key_position(key):
    if key[0] == "H":
        return embed(np.array(key[1]))
    if key[0] == "L":
        return embed(np.array(_lozenge_cycle(key[1], key[2]))).mean(axis=0)
    return embed(np.array(key[1:])).mean(axis=0)


def _build_dual(kind, bond_list, faces, edge_between, is_bnd):
    keys, index = [], {}
    left = np.empty(len(bond_list), dtype=np.int64)
    right = np.empty(len(bond_list), dtype=np.int64)

    def intern(key):
        if key not in index:
            index[key] = len(keys)
            keys.append(key)
        return index[key]

    for e, (p, d) in enumerate(bond_list):
        q = (p[0] + UNIT[d][0], p[1] + UNIT[d][1])
        lu, ru = UNIT[(d + 1) % 6], UNIT[(d - 1) % 6]
        lt = (p, q, (p[0] + lu[0], p[1] + lu[1]))
        rt = (p, q, (p[0] + ru[0], p[1] + ru[1]))
        left[e] = intern(_lattice_face_key(kind, lt))
        right[e] = intern(_lattice_face_key(kind, rt))

    pos = np.array([_key_position(k) for k in keys]).reshape(-1, 2)
    face_of = np.full(len(keys), -1, dtype=np.int64)
    for f in faces:
        # every face edge has the face on its left when traversed CCW
        e = f.edges[0]
        dv = left[e] if f.sense[0] else right[e]
        face_of[dv] = f.id

    # boundary loop: dual edges crossing boundary arrows form a closed cycle
    bnd = np.flatnonzero(is_bnd)
    inc = {}
    for e in bnd:
        for v in (left[e], right[e]):
            inc.setdefault(int(v), []).append(int(e))
    bad = [v for v, es in inc.items() if len(es) != 2]
    if bad:
        raise AssertionError(f"boundary loop is not a simple cycle at dual vertices {bad[:5]}")
    loop_v = np.array(sorted(inc), dtype=np.int64)
    order = np.lexsort((pos[loop_v, 1], pos[loop_v, 0]))
    base = int(loop_v[order[0]])

    def walk(first_edge):
        verts, edges = [base], []
        v, e = base, first_edge
        while True:
            edges.append(e)
            v = int(right[e] if left[e] == v else left[e])
            if v == base:
                return verts, edges
            verts.append(v)
            e = inc[v][0] if inc[v][0] != e else inc[v][1]

    verts, edges = walk(inc[base][0])
    xy = pos[verts]
    area = 0.5 * np.sum(xy[:, 0] * np.roll(xy[:, 1], -1) - np.roll(xy[:, 0], -1) * xy[:, 1])
    if area < 0:
        verts, edges = walk(inc[base][1])
    if len(edges) != len(bnd):
        raise AssertionError("boundary arrows do not form a single loop")
    return DualCover(
        pos=pos, keys=keys, left=left, right=right, base=base,
        loop_edges=np.array(edges, dtype=np.int64),
        loop_vertices=np.array(verts, dtype=np.int64),
        face_of=face_of,
    )


def _assign_sides(vpos, tail, head, loop_edges):
    """Side index 0..5 for each boundary arrow in loop order.

    The loop is cut into six equal consecutive runs starting at the base
    point (side 0 leaves the leftmost corner heading down).  On the triangular
    and Kagome cuts this coincides with classifying arrows by the bearing of
    their midpoints; on the chiral 3.4.6.4 cut the runs are offset from the
    geometric corners by at most one arrow.
    """
    m = len(loop_edges)
    if m % 6:
        raise AssertionError(f"boundary loop of length {m} does not split into six sides")
    return np.arange(m) // (m // 6)


def faces_by_family(domain: HexDomain, family: FlipFamily | str) -> list[Face]:
    if isinstance(family, str):
        family = FlipFamily.parse(family)
    if family not in domain.kind.families:
        raise DomainError(f"{family.name} faces do not exist on {domain.kind.value}")
    return [f for f in domain.faces if f.family is family]


def boundary_edges(domain: HexDomain) -> list[tuple[int, int, int]]:
    """(edge id, side, position within side), counterclockwise from the base point."""
    out, counts = [], [0] * 6
    for e, s in zip(domain.dual.loop_edges, domain.boundary_side):
        out.append((int(e), int(s), counts[s]))
        counts[s] += 1
    return out


def side_lengths(domain: HexDomain) -> np.ndarray:
    return np.bincount(domain.boundary_side, minlength=6)


def export_domain(domain: HexDomain) -> str:
    """Line-oriented text description (V/E/F records ordered by id)."""
    lines = [f"# domain {domain.kind.value} {domain.n}"]
    for v in range(domain.n_vertices):
        cx, cy = domain.vert_cell[v]
        x, y = domain.vert_pos[v]
        lines.append(f"V {v} {cx} {cy} {domain.vert_basis[v]} {x:.6f} {y:.6f}")
    for e in range(domain.n_edges):
        flag = "B" if domain.edge_boundary[e] else "I"
        lines.append(f"E {e} {domain.edge_tail[e]} {domain.edge_head[e]} {domain.edge_dir[e]} {flag}")
    for f in domain.faces:
        lines.append(f"F {f.id} {f.family.value} " + " ".join(map(str, f.edges)))
    return "\n".join(lines) + "\n"
