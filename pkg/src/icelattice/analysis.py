"""Post-processing: heatmaps, frozen/temperate demarcation, flip ratios,
3.4.6.4 bound checks and entropy brackets."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .config import BoundarySpec, Configuration, boundary_profile, face_orientation
from .dynamics import FlipStats
from .lattice import DomainError, FlipFamily, HexDomain, LatticeKind

TRIANGLES = (FlipFamily.EVEN, FlipFamily.ODD)
LOZENGES = (FlipFamily.LEFT, FlipFamily.RIGHT, FlipFamily.STRAIGHT)

BACKGROUND = 200  # light gray inside the hexagon
OUTSIDE = 255


class EmptyWindow(ValueError):
    pass


def _require_window(stats: FlipStats):
    if stats.window <= 0:
        raise EmptyWindow("flip statistics cover an empty window")


def centroids(domain: HexDomain) -> np.ndarray:
    return np.array([f.centroid for f in domain.faces], dtype=float)


def hexagon_outline(domain: HexDomain) -> np.ndarray:
    """Corners of the domain's convex hull, counterclockwise from angle 0."""
    pos = domain.vert_pos[domain.interior]
    r = np.max(pos @ np.array([1.0, 0.0]))
    ang = np.arange(6) * np.pi / 3
    return np.c_[r * np.cos(ang), r * np.sin(ang)]


# ---------------------------------------------------------------- heatmap

@dataclass
class Heatmap:
    values: np.ndarray  # uint8, row 0 at the top

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    def to_pgm(self, binary: bool = True) -> bytes:
        h, w = self.values.shape
        if binary:
            return f"P5\n{w} {h}\n255\n".encode() + self.values.astype(np.uint8).tobytes()
        rows = [" ".join(str(int(v)) for v in row) for row in self.values]
        return (f"P2\n{w} {h}\n255\n" + "\n".join(rows) + "\n").encode()


def read_pgm(data: bytes) -> np.ndarray:
    parts = data.split(maxsplit=4)
    magic, w, h, mx = parts[0], int(parts[1]), int(parts[2]), int(parts[3])
    if mx != 255:
        raise ValueError("only maxval 255 is supported")
    if magic == b"P5":
        return np.frombuffer(parts[4][: w * h], dtype=np.uint8).reshape(h, w)
    if magic == b"P2":
        return np.array(parts[4].split(), dtype=np.uint8).reshape(h, w)
    raise ValueError(f"not a graymap: {magic!r}")


def heatmap(stats: FlipStats, domain: HexDomain, pixels_per_unit: float = 1.0) -> Heatmap:
    """Counts deposited at face centroids; the busiest pixel is black."""
    _require_window(stats)
    if pixels_per_unit <= 0:
        raise ValueError("pixels per unit must be positive")
    corners = hexagon_outline(domain)
    lo = corners.min(axis=0) - 1.0
    hi = corners.max(axis=0) + 1.0
    w = int(math.ceil((hi[0] - lo[0]) * pixels_per_unit))
    h = int(math.ceil((hi[1] - lo[1]) * pixels_per_unit))
    cen = centroids(domain)
    col = np.clip(((cen[:, 0] - lo[0]) * pixels_per_unit).astype(int), 0, w - 1)
    row = np.clip(((hi[1] - cen[:, 1]) * pixels_per_unit).astype(int), 0, h - 1)
    acc = np.zeros((h, w), dtype=np.float64)
    np.add.at(acc, (row, col), stats.counts)
    xs = lo[0] + (np.arange(w) + 0.5) / pixels_per_unit
    ys = hi[1] - (np.arange(h) + 0.5) / pixels_per_unit
    gx, gy = np.meshgrid(xs, ys)
    inside = Path(np.vstack([corners, corners[:1]])).contains_points(np.c_[gx.ravel(), gy.ravel()])
    img = np.where(inside.reshape(h, w), BACKGROUND, OUTSIDE).astype(np.float64)
    peak = acc.max()
    if peak > 0:
        hot = acc > 0
        img[hot] = BACKGROUND * (1.0 - acc[hot] / peak)
    return Heatmap(np.rint(img).astype(np.uint8))


# ---------------------------------------------------------------- demarcation

def face_adjacency(domain: HexDomain):
    """Sparse face-face adjacency through shared edges."""
    owner = [[] for _ in range(domain.n_edges)]
    for f in domain.faces:
        for e in f.edges:
            owner[e].append(f.id)
    pairs = [(a, b) for fs in owner for a, b in itertools.combinations(fs, 2)]
    n = len(domain.faces)
    if not pairs:
        return coo_matrix((n, n)).tocsr()
    p = np.array(pairs)
    return coo_matrix((np.ones(len(p)), (p[:, 0], p[:, 1])), shape=(n, n)).tocsr()


def corner_triangle_mask(domain: HexDomain, fraction: float = 0.25) -> np.ndarray:
    """Per face: centroid inside one of the six corner triangles.

    Each corner triangle has two legs along the hexagon sides of length
    ``fraction`` times the side length.
    """
    corners = hexagon_outline(domain)
    r = float(np.hypot(*corners[0]))  # circumradius = side length
    cen = centroids(domain)
    ang = np.arange(6) * np.pi / 3
    u = np.c_[np.cos(ang), np.sin(ang)]
    proj = cen @ u.T  # (faces, 6)
    return (proj >= r - fraction * r / 2).any(axis=1)


def central_disc_mask(domain: HexDomain, radius: float) -> np.ndarray:
    cen = centroids(domain)
    return np.hypot(cen[:, 0], cen[:, 1]) <= radius


@dataclass
class DemarcationReport:
    frozen: np.ndarray  # face ids
    temperate: np.ndarray
    corner_frozen: tuple[int, ...]
    frozen_fraction: float

    def summary(self) -> dict:
        return {
            "frozen_faces": int(self.frozen.size),
            "temperate_faces": int(self.temperate.size),
            "frozen_fraction": f"{self.frozen_fraction:.6f}",
            "corner_frozen": ",".join(str(c) for c in self.corner_frozen),
        }


def demarcation(stats: FlipStats, domain: HexDomain) -> DemarcationReport:
    """Zero-count off-boundary faces are frozen; corner areas are their components."""
    _require_window(stats)
    offb = np.array([f.off_boundary for f in domain.faces], dtype=bool)
    ids = np.flatnonzero(offb)
    zero = offb & (stats.counts == 0)
    frozen = np.flatnonzero(zero)
    temperate = np.flatnonzero(offb & ~zero)
    adj = face_adjacency(domain)
    sub = adj[frozen][:, frozen]
    ncomp, label = connected_components(sub, directed=False)
    sizes = np.bincount(label, minlength=ncomp) if frozen.size else np.zeros(0, int)
    cen = centroids(domain)
    corners = hexagon_outline(domain)
    per_corner = []
    for c in corners:
        near = ids[np.argmin(np.hypot(*(cen[ids] - c).T))] if ids.size else -1
        k = np.searchsorted(frozen, near)
        hit = k < frozen.size and frozen[k] == near
        per_corner.append(int(sizes[label[k]]) if hit else 0)
    frac = frozen.size / ids.size if ids.size else 1.0
    return DemarcationReport(frozen, temperate, tuple(per_corner), frac)


# ---------------------------------------------------------------- Kagome ratio

def flip_ratio(stats: FlipStats, domain: HexDomain, center_radius: float | None = None) -> float:
    """Mean per-face triangle flips over mean per-face hexagon flips near the centre."""
    if domain.kind is not LatticeKind.KAGOME:
        raise DomainError("flip ratio is defined for the Kagome lattice")
    _require_window(stats)
    radius = domain.n / 6 if center_radius is None else center_radius
    near = central_disc_mask(domain, radius)
    fam = np.array([f.family.index for f in domain.faces])
    tri = near & np.isin(fam, [f.index for f in TRIANGLES])
    hexa = near & (fam == FlipFamily.HEXAGON.index)
    if not tri.any() or not hexa.any():
        raise ValueError("centre region holds no triangles or no hexagons")
    h = stats.counts[hexa].mean()
    if h == 0:
        raise ZeroDivisionError("no hexagon flips in the centre region")
    return float(stats.counts[tri].mean() / h)


def bernoulli_null_ratio(hexagon_checks: int = 1) -> float:
    """Triangle/hexagon flip ratio if every arrow were an independent fair coin."""
    p_tri = 2 / 2 ** 3
    p_hex = 2 / 2 ** 6
    return p_tri / (hexagon_checks * p_hex)


# ---------------------------------------------------------------- 3.4.6.4 bounds

TILT_CEILING = 13 / 15


@dataclass
class BoundReport:
    blocks_checked: int
    periodic_blocks: int
    violations: list
    max_ratio: float  # largest |dh| / n over blocks with n >= 15
    density: float | None = None
    tilt_ceiling: float = TILT_CEILING

    @property
    def ok(self) -> bool:
        return not self.violations and (self.density is None or self.density >= 1 / 7)


def _side_runs(domain: HexDomain, steps: np.ndarray) -> list[np.ndarray]:
    side = domain.boundary_side
    return [steps[side == k] for k in range(6)]


def block_bounds(domain: HexDomain, spec: BoundarySpec) -> BoundReport:
    prof = boundary_profile(domain, spec)
    steps = np.diff(prof)
    checked = periodic = 0
    bad = []
    worst = 0.0
    for k, run in enumerate(_side_runs(domain, steps)):
        cum = np.r_[0, np.cumsum(run)]
        m = len(run)
        for n in range(1, m + 1):
            dh = np.abs(cum[n:] - cum[:-n])
            checked += dh.size
            if n >= 15:
                worst = max(worst, float(dh.max()) / n)
                over = np.flatnonzero(dh > (13 * n + 28) / 15)
                bad += [(k, int(s), n, int(dh[s]), "general") for s in over]
            if n >= 16:
                for s in range(m - n + 1):
                    blk = run[s:s + n]
                    if np.array_equal(blk[8:], blk[:-8]):
                        periodic += 1
                        if dh[s] > (3 * n + 7) / 4:
                            bad.append((k, s, n, int(dh[s]), "period8"))
    return BoundReport(checked, periodic, bad, worst)


def unidirectional_density(domain: HexDomain, config: Configuration) -> float:
    """Directed fraction among off-boundary 1-triangles and 1-lozenges."""
    offb = np.array([f.off_boundary for f in domain.faces], dtype=bool)
    hit = tot = 0
    for fam in TRIANGLES + LOZENGES:
        ids, orient = face_orientation(domain, config.bits, fam)
        keep = offb[ids]
        hit += int((orient[keep] != 0).sum())
        tot += int(keep.sum())
    return hit / tot if tot else float("nan")


def check_3464_bounds(domain: HexDomain, item) -> BoundReport:
    if domain.kind is not LatticeKind.T3464:
        raise DomainError("these bounds concern the 3.4.6.4 lattice")
    if isinstance(item, Configuration):
        rep = block_bounds(domain, item.boundary())
        rep.density = unidirectional_density(domain, item)
        return rep
    return block_bounds(domain, item)


def y_plaquettes(domain: HexDomain) -> list[tuple[int, ...]]:
    """Central 1-triangle, its three lozenges and the three triangles beyond them.

    Only plaquettes made of faces lying wholly in the domain are returned;
    each tuple starts with the central triangle.
    """
    owner = [[] for _ in range(domain.n_edges)]
    for f in domain.faces:
        for e in f.edges:
            owner[e].append(f.id)
    faces = domain.faces
    out = []
    for f in faces:
        if f.family not in TRIANGLES:
            continue
        arms = []
        for e in f.edges:
            loz = [g for g in owner[e] if faces[g].family in LOZENGES]
            if not loz:
                break
            q = faces[loz[0]]
            far = [g for e2 in q.edges if e2 not in f.edges for g in owner[e2]
                   if faces[g].family in TRIANGLES and g != f.id]
            if not far:
                break
            arms.append((q.id, far[0]))
        if len(arms) == 3:
            out.append((f.id,) + tuple(x for arm in arms for x in arm))
    return out


def y_plaquette_exhaustive(domain: HexDomain) -> tuple[int, int]:
    """(legal local patterns, patterns without a unidirectional face) for one Y.

    A pattern is legal when every vertex whose arrows all lie in the Y is
    balanced and no other vertex has more than half its arrows pointing the
    same way.
    """
    ys = y_plaquettes(domain)
    if not ys:
        raise ValueError("domain too small to hold a Y-plaquette")
    cen = centroids(domain)
    y = min(ys, key=lambda t: (np.hypot(*cen[t[0]]), t))
    faces = [domain.faces[f] for f in y]
    edges = sorted({e for f in faces for e in f.edges})
    col = {e: k for k, e in enumerate(edges)}
    m = len(edges)
    codes = np.arange(1 << m, dtype=np.int64)
    bits = ((codes[:, None] >> np.arange(m)) & 1).astype(bool)
    sgn = np.where(bits, 1, -1)
    verts = sorted({int(v) for e in edges for v in (domain.edge_tail[e], domain.edge_head[e])})
    ok = np.ones(len(codes), dtype=bool)
    half = domain.kind.degree // 2
    deg = np.zeros(domain.n_vertices, dtype=int)
    np.add.at(deg, domain.edge_tail, 1)
    np.add.at(deg, domain.edge_head, 1)
    for v in verts:
        inc = [(col[e], 1 if domain.edge_tail[e] == v else -1) for e in edges
               if v in (domain.edge_tail[e], domain.edge_head[e])]
        out_deg = sum(((sgn[:, c] * s) > 0).astype(int) for c, s in inc)
        in_deg = len(inc) - out_deg
        ok &= (out_deg <= half) & (in_deg <= half)
        if len(inc) == deg[v] and domain.interior[v]:
            ok &= out_deg == half
    directed = np.zeros(len(codes), dtype=bool)
    for f in faces:
        cols = [col[e] for e in f.edges]
        along = bits[:, cols] == np.asarray(f.sense)
        directed |= along.all(axis=1) | (~along).all(axis=1)
    return int(ok.sum()), int((ok & ~directed).sum())


# ---------------------------------------------------------------- entropy bracket

# h-bar defaults: per-arrow entropy fitted as h_N = hbar - c / N through the
# all-zero-signature exact counts at the two largest enumerable N.
EXACT_ZERO_COUNTS = {
    LatticeKind.TRIANGULAR: {4: (30, 11), 6: (72, 55790)},
    LatticeKind.KAGOME: {2: (18, 2), 4: (72, 7141)},
    LatticeKind.T3464: {2: (18, 2), 4: (72, 17084)},
}


@dataclass(frozen=True)
class FreeEntropyEstimate:
    value: float
    source: str = "configured"

    def __post_init__(self):
        if not self.value > 0:
            raise ValueError("free entropy estimate must be positive")


def fit_free_entropy(points: dict[int, tuple[int, int]]) -> float:
    """Fit h_N = hbar - c/N through the two largest N in ``points`` (N -> (arrows, count))."""
    (n1, (a1, c1)), (n2, (a2, c2)) = sorted(points.items())[-2:]
    h1, h2 = math.log(c1) / a1, math.log(c2) / a2
    c = (h2 - h1) / (1 / n1 - 1 / n2)
    return h2 + c / n2


def default_free_entropy(kind: LatticeKind) -> FreeEntropyEstimate:
    return FreeEntropyEstimate(fit_free_entropy(EXACT_ZERO_COUNTS[kind]), "sampled")


@dataclass
class EntropyBracket:
    lower: float
    upper: float
    arrows: int
    right_triangles: int
    off_frozen_arrows: int
    hbar: float

    def contains(self, h: float, tol: float = 1e-12) -> bool:
        return self.lower - tol <= h <= self.upper + tol


def entropy_bracket(domain: HexDomain, x: float, hbar: FreeEntropyEstimate | None = None,
                    seed=None) -> EntropyBracket:
    """Lower (A_R / 2A) log 2 and upper (A_F^c / A) * hbar for a QuadrantCross seed.

    A counts every arrow; A_R counts off-boundary 1-triangles of the right
    quadrant, all directed in the seed; A_F^c counts arrows outside the frozen
    region, i.e. arrows not forced by the boundary into the frozen pattern.
    """
    from .boundary import quadrant_cross
    from .config import forced_edges

    if domain.kind is LatticeKind.T3464:
        raise DomainError("the bracket needs a triangular or Kagome domain")
    if hbar is None:
        hbar = default_free_entropy(domain.kind)
    q = seed if seed is not None else quadrant_cross(domain, x)
    A = domain.n_edges
    fam = np.array([f.family.index for f in domain.faces])
    offb = np.array([f.off_boundary for f in domain.faces], dtype=bool)
    tri = np.isin(fam, [f.index for f in TRIANGLES])
    a_r = int((q.right_region & tri & offb).sum())
    forced = forced_edges(domain, q.config.boundary())
    d = domain.dual
    in_f = q.frozen_region[d.left] | q.frozen_region[d.right]
    a_fc = int(A - (forced & in_f).sum())
    if np.all(forced):
        a_fc = 0
    lower = a_r / (2 * A) * math.log(2)
    upper = a_fc / A * hbar.value
    return EntropyBracket(lower, upper, A, a_r, a_fc, hbar.value)


def homogeneity(stats: FlipStats, domain: HexDomain) -> float:
    """Variance of per-face flip counts over off-boundary faces, normalised by the squared mean."""
    _require_window(stats)
    offb = np.array([f.off_boundary for f in domain.faces], dtype=bool)
    c = stats.counts[offb].astype(float)
    mu = c.mean()
    return float(c.var() / mu ** 2) if mu > 0 else float("nan")
