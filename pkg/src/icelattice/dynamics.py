"""Local moves and the probabilistic cellular automaton sampler.

Each flip decision comes from a counter-based hash of
(seed, sweep, pass position, face id), so a pass gives the same result
whatever order or thread split is used to evaluate it.
"""
from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from matplotlib.path import Path

from .config import (
    BoundarySpec,
    Configuration,
    IllegalConfiguration,
    face_orientation,
    validate,
)
from .lattice import DomainError, FlipFamily, HexDomain, LatticeKind

_M64 = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)


class InvalidMove(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


class Orientation(enum.IntEnum):
    CW = -1
    CCW = 1


@dataclass(frozen=True)
class DirectedFace:
    face: int
    orientation: Orientation


# ---------------------------------------------------------------- randomness

def _mix(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser on a uint64 array."""
    with np.errstate(over="ignore"):
        x = x ^ (x >> np.uint64(30))
        x = x * _MUL1
        x = x ^ (x >> np.uint64(27))
        x = x * _MUL2
        return x ^ (x >> np.uint64(31))


def uniforms(seed: int, sweep: int, slot: int, ids) -> np.ndarray:
    """Deterministic U[0,1) per id, independent of evaluation order."""
    ids = np.asarray(ids, dtype=np.uint64)
    with np.errstate(over="ignore"):
        key = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        key = _mix(np.array([key ^ _GOLD]))[0]
        key = _mix(np.array([key + np.uint64(sweep) * _GOLD]))[0]
        key = _mix(np.array([key + np.uint64(slot + 1) * _MUL1]))[0]
        x = _mix(ids * _GOLD + key)
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


# ---------------------------------------------------------------- schedules

@dataclass(frozen=True)
class Schedule:
    passes: tuple[FlipFamily, ...]
    flip_probability: float = 0.5

    def __post_init__(self):
        if not self.passes:
            raise ValueError("schedule needs at least one pass")
        if not 0.0 <= self.flip_probability <= 1.0:
            raise ValueError("flip probability must lie in [0, 1]")

    def check(self, kind: LatticeKind) -> "Schedule":
        for f in self.passes:
            if f not in kind.families:
                raise DomainError(f"{f.value} moves do not exist on {kind.value}")
        return self

    def __str__(self):
        return ",".join(f.value for f in self.passes)


DEFAULT_PASSES = {
    LatticeKind.TRIANGULAR: "fe,fo",
    LatticeKind.KAGOME: "fe,fo,fh",
    LatticeKind.T3464: "fe,fo,fs,fl,fr,fh",
}
KAGOME_DOUBLE_HEX = "fe,fh,fo,fh"


def parse_schedule(text: str | None, kind: LatticeKind, p: float = 0.5) -> Schedule:
    text = text or DEFAULT_PASSES[kind]
    fams = tuple(FlipFamily.parse(t.strip()) for t in text.split(",") if t.strip())
    return Schedule(fams, p).check(kind)


def default_schedule(kind: LatticeKind) -> Schedule:
    return parse_schedule(None, kind)


# ---------------------------------------------------------------- local moves

def _offb(domain):
    return np.array([f.off_boundary for f in domain.faces], dtype=bool)


def directed_faces(domain: HexDomain, config, family: FlipFamily | str) -> list[DirectedFace]:
    family = FlipFamily.parse(family) if isinstance(family, str) else family
    bits = config.bits if isinstance(config, Configuration) else np.asarray(config)
    ids, orient = face_orientation(domain, bits, family)
    keep = (orient != 0) & _offb(domain)[ids]
    return [DirectedFace(int(f), Orientation(int(o))) for f, o in zip(ids[keep], orient[keep])]


def flip(config: Configuration, face: DirectedFace | int) -> Configuration:
    d = config.domain
    fid = face.face if isinstance(face, DirectedFace) else int(face)
    f = d.faces[fid]
    along = config.bits[list(f.edges)] == np.asarray(f.sense)
    if not (along.all() or (~along).all()):
        raise InvalidMove(f"face {fid} is not a unidirectional 1-cycle")
    if not f.off_boundary:
        raise InvalidMove(f"face {fid} contains a boundary arrow")
    bits = config.bits.copy()
    bits[list(f.edges)] ^= True
    return Configuration(d, bits)


@dataclass
class FlipStats:
    counts: np.ndarray
    window_start: int
    window_end: int
    total_sweeps: int = 0
    seed: int = 0

    @classmethod
    def empty(cls, domain: HexDomain, start: int, end: int, seed: int = 0):
        return cls(np.zeros(len(domain.faces), dtype=np.int64), start, end, 0, seed)

    @property
    def window(self) -> int:
        return self.window_end - self.window_start

    def export(self, domain: HexDomain) -> str:
        out = [f"# window {self.window_start} {self.window_end} seed {self.seed}",
               "# face family cx cy count"]
        for f in domain.faces:
            out.append(f"{f.id} {f.family.value} {f.centroid[0]:.6f} {f.centroid[1]:.6f} "
                       f"{int(self.counts[f.id])}")
        return "\n".join(out) + "\n"


def family_pass(domain, bits, family, p, seed, sweep, slot, stats=None, threads=1):
    """Flip every directed off-boundary face of ``family`` with probability p, in place.

    Same-family faces share no edge, so all decisions can be applied at once.
    Returns the number of flips.
    """
    fa = domain.family_arrays[family]
    if fa.edges.size == 0 or p <= 0:
        return 0
    offb = _offb_cached(domain)[fa.face_ids]

    def work(lo, hi):
        e, s = fa.edges[lo:hi], fa.sense[lo:hi]
        along = bits[e] == s
        directed = (along.all(axis=1) | (~along).all(axis=1)) & offb[lo:hi]
        u = uniforms(seed, sweep, slot, fa.face_ids[lo:hi])
        return lo + np.flatnonzero(directed & (u < p))

    m = len(fa.face_ids)
    if threads > 1 and m > 1:
        cuts = np.linspace(0, m, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as ex:
            rows = np.concatenate(list(ex.map(work, cuts[:-1], cuts[1:])))
    else:
        rows = work(0, m)
    bits[fa.edges[rows].ravel()] ^= True
    if stats is not None and stats.window_start <= sweep < stats.window_end:
        np.add.at(stats.counts, fa.face_ids[rows], 1)
    return len(rows)


_OFFB: dict[int, tuple] = {}


def _offb_cached(domain):
    hit = _OFFB.get(id(domain))
    if hit is None or hit[0] is not domain:
        hit = (domain, _offb(domain))
        _OFFB[id(domain)] = hit
    return hit[1]


class Sampler:
    """Mutable sampler state: a legal configuration, a sweep counter and a seed."""

    def __init__(self, domain: HexDomain, start: Configuration, schedule, seed: int,
                 threads: int = 1):
        if isinstance(schedule, str) or schedule is None:
            schedule = parse_schedule(schedule, domain.kind)
        self.domain = domain
        self.schedule = schedule.check(domain.kind)
        self.seed = int(seed)
        self.sweep = 0
        self.threads = threads
        self.bits = start.bits.copy()

    @property
    def config(self) -> Configuration:
        return Configuration(self.domain, self.bits.copy())

    def sweeps(self, k: int, stats: FlipStats | None = None) -> int:
        flips = 0
        p = self.schedule.flip_probability
        for _ in range(k):
            for slot, fam in enumerate(self.schedule.passes):
                flips += family_pass(self.domain, self.bits, fam, p, self.seed,
                                     self.sweep, slot, stats, self.threads)
            self.sweep += 1
            if stats is not None:
                stats.total_sweeps = self.sweep
        return flips


def run(domain: HexDomain, spec: BoundarySpec, initial: Configuration, schedule=None,
        burn_in: int | None = None, window: int | None = None, seed: int = 0,
        threads: int = 1) -> tuple[Configuration, FlipStats]:
    """burn_in + window sweeps; statistics cover the window only."""
    if spec is not None and not spec.matches(initial):
        raise ValueError("initial configuration does not carry the requested boundary")
    bad = validate(domain, initial)
    if bad:
        raise IllegalConfiguration(f"initial configuration violates the ice rule at {bad[:5]}")
    burn_in = 10 * domain.n if burn_in is None else burn_in
    window = 5 * domain.n if window is None else window
    if burn_in < 0 or window < 0:
        raise ValueError("sweep counts must be nonnegative")
    s = Sampler(domain, initial, schedule, seed, threads)
    stats = FlipStats.empty(domain, burn_in, burn_in + window, seed)
    s.sweeps(burn_in + window, stats)
    return s.config, stats


# ---------------------------------------------------------------- enclosed 1-cycles

def cycle_vertices(domain: HexDomain, bits, cycle) -> list[int]:
    """Vertex sequence of a closed unidirectional edge cycle; raises if it is not one."""
    cycle = [int(e) for e in cycle]
    if not cycle:
        raise ValueError("empty cycle")
    tails = np.where(bits[cycle], domain.edge_tail[cycle], domain.edge_head[cycle])
    heads = np.where(bits[cycle], domain.edge_head[cycle], domain.edge_tail[cycle])
    if not np.array_equal(np.roll(tails, -1), heads):
        raise ValueError("edges do not form a closed unidirectional cycle")
    return tails.tolist()


def find_enclosed_1cycle(domain: HexDomain, config: Configuration, cycle) -> DirectedFace:
    """A directed 1-cycle inside a closed unidirectional cycle.

    The face of extremal height inside the cycle is always one; scanning the
    enclosed faces for a directed one is enough.
    """
    verts = cycle_vertices(domain, config.bits, cycle)
    poly = domain.vert_pos[verts]
    x, y = poly[:, 0], poly[:, 1]
    area = np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y)
    want = 1 if area > 0 else -1
    path = Path(np.vstack([poly, poly[:1]]), closed=True)
    cents = np.array([f.centroid for f in domain.faces])
    inside = path.contains_points(cents, radius=0.0)
    fallback = None
    for fam in domain.kind.families:
        ids, orient = face_orientation(domain, config.bits, fam)
        for f, o in zip(ids, orient):
            if o and inside[f]:
                if o == want:
                    return DirectedFace(int(f), Orientation(int(o)))
                fallback = fallback or DirectedFace(int(f), Orientation(int(o)))
    if fallback is not None:
        return fallback
    raise InvariantViolation("no 1-cycle inside a unidirectional cycle")


def random_directed_cycle(domain: HexDomain, bits, rng: np.random.Generator, tries: int = 100):
    """Follow random out-arrows until a vertex repeats; returns the loop's edge ids or None."""
    out = [[] for _ in range(domain.n_vertices)]
    for e in range(domain.n_edges):
        t, h = (domain.edge_tail[e], domain.edge_head[e]) if bits[e] else \
               (domain.edge_head[e], domain.edge_tail[e])
        out[t].append((e, h))
    starts = domain.interior_vertex_ids
    for _ in range(tries):
        v = int(rng.choice(starts))
        seen, path = {v: 0}, []
        while out[v]:
            e, h = out[v][rng.integers(len(out[v]))]
            path.append(int(e))
            v = int(h)
            if v in seen:
                return path[seen[v]:]
            seen[v] = len(path)
    return None
