import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icelattice.boundary import all_one_cycles, boundary_cycle, fig4b, from_signature
from icelattice.config import Configuration, IllegalConfiguration, height, lipschitz_fill, validate
from icelattice.dynamics import (
    DirectedFace,
    FlipStats,
    InvalidMove,
    Orientation,
    Sampler,
    Schedule,
    cycle_vertices,
    directed_faces,
    family_pass,
    find_enclosed_1cycle,
    flip,
    parse_schedule,
    random_directed_cycle,
    run,
    uniforms,
)
from icelattice.lattice import DomainError, FlipFamily, LatticeKind

from conftest import KINDS, domain


def start(kind, n, sig=(0,) * 6):
    d = domain(kind, n)
    spec = from_signature(d, sig)
    return d, spec, lipschitz_fill(d, spec)


def test_uniforms_are_order_independent():
    ids = np.arange(50)
    a = uniforms(3, 7, 1, ids)
    b = uniforms(3, 7, 1, ids[::-1])[::-1]
    assert np.array_equal(a, b)
    assert np.all((a >= 0) & (a < 1))
    assert not np.array_equal(a, uniforms(3, 8, 1, ids))
    assert not np.array_equal(a, uniforms(4, 7, 1, ids))


def test_uniforms_look_uniform():
    u = uniforms(12345, 0, 0, np.arange(200000))
    assert abs(u.mean() - 0.5) < 0.005
    hist, _ = np.histogram(u, bins=10, range=(0, 1))
    assert hist.min() > 19000


def test_schedule_parsing():
    s = parse_schedule("fe, fh,fo,fh", LatticeKind.KAGOME)
    assert s.passes == (FlipFamily.EVEN, FlipFamily.HEXAGON, FlipFamily.ODD, FlipFamily.HEXAGON)
    assert str(parse_schedule(None, LatticeKind.T3464)) == "fe,fo,fs,fl,fr,fh"
    with pytest.raises(DomainError):
        parse_schedule("fe,fh", LatticeKind.TRIANGULAR)
    with pytest.raises(ValueError):
        Schedule(())
    with pytest.raises(ValueError):
        Schedule((FlipFamily.EVEN,), 1.5)


def test_frozen_has_no_directed_faces():
    d = domain("tri", 6)
    cfg = lipschitz_fill(d, from_signature(d, (1, 1, 0, -1, -1, 0)))
    for fam in d.kind.families:
        assert directed_faces(d, cfg, fam) == []


def test_fig4b_directed_faces():
    d = domain("kagome", 6)
    cfg = fig4b(d)
    assert directed_faces(d, cfg, "fh") == []
    offb = [f for f in d.faces if f.off_boundary and f.family is not FlipFamily.HEXAGON]
    got = directed_faces(d, cfg, "fe") + directed_faces(d, cfg, "fo")
    assert len(got) == len(offb)


@pytest.mark.parametrize("kind", KINDS)
def test_reversal_swaps_orientations(kind):
    d, _, cfg = start(kind, 6)
    for fam in d.kind.families:
        a = directed_faces(d, cfg, fam)
        b = directed_faces(d, cfg.reversed(), fam)
        assert [(x.face, -x.orientation) for x in a] == [(x.face, x.orientation) for x in b]


@pytest.mark.parametrize("kind", KINDS)
def test_flip_involution_and_height_step(kind):
    d = domain(kind, 6)
    cfg = all_one_cycles(d)
    h = height(d, cfg)
    centre = {int(f): k for k, f in enumerate(d.dual.face_of) if f >= 0}
    for fam in d.kind.families:
        for df in directed_faces(d, cfg, fam)[:3]:
            once = flip(cfg, df)
            assert validate(d, once) == []
            assert flip(once, df.face) == cfg
            assert np.array_equal(once.bits[d.dual.loop_edges], cfg.bits[d.dual.loop_edges])
            diff = height(d, once) - h
            c = centre[df.face]
            assert diff[c] == 2 * int(df.orientation)
            assert np.count_nonzero(diff) == 1


def test_flip_rejects_undirected():
    d = domain("tri", 6)
    cfg = lipschitz_fill(d, from_signature(d, (1, 1, 0, -1, -1, 0)))
    f = next(f for f in d.faces if f.off_boundary)
    with pytest.raises(InvalidMove):
        flip(cfg, DirectedFace(f.id, Orientation.CCW))


def test_pass_with_zero_probability():
    d, _, cfg = start("tri", 6)
    bits = cfg.bits.copy()
    assert family_pass(d, bits, FlipFamily.EVEN, 0.0, 1, 0, 0) == 0
    assert np.array_equal(bits, cfg.bits)


def test_pass_with_probability_one_reverses_all():
    d = domain("kagome", 6)
    cfg = all_one_cycles(d)
    before = directed_faces(d, cfg, FlipFamily.EVEN)
    bits = cfg.bits.copy()
    n = family_pass(d, bits, FlipFamily.EVEN, 1.0, 1, 0, 0)
    after = directed_faces(d, Configuration(d, bits), FlipFamily.EVEN)
    assert n == len(before) > 0
    assert [(x.face, -x.orientation) for x in before] == [(x.face, x.orientation) for x in after]


@pytest.mark.parametrize("kind", KINDS)
def test_thread_count_does_not_matter(kind):
    d, spec, cfg = start(kind, 8)
    outs = [run(d, spec, cfg, None, 15, 10, seed=42, threads=t) for t in (1, 2, 8)]
    for c, s in outs[1:]:
        assert c == outs[0][0]
        assert np.array_equal(s.counts, outs[0][1].counts)


def test_seed_changes_trajectory():
    d, spec, cfg = start("tri", 8)
    a, _ = run(d, spec, cfg, None, 10, 0, seed=1)
    b, _ = run(d, spec, cfg, None, 10, 0, seed=2)
    assert a != b


@settings(max_examples=10, deadline=None)
@given(kind=st.sampled_from(KINDS), seed=st.integers(0, 2**63))
def test_run_keeps_legality_and_boundary(kind, seed):
    d, spec, cfg = start(kind, 6)
    out, stats = run(d, spec, cfg, None, 5, 5, seed)
    assert validate(d, out) == []
    assert spec.matches(out)
    assert stats.total_sweeps == 10
    offb = np.array([f.off_boundary for f in d.faces])
    assert stats.counts[~offb].sum() == 0


def test_window_accounting():
    d, spec, cfg = start("tri", 8)
    _, s0 = run(d, spec, cfg, None, 10, 0, seed=3)
    assert s0.counts.sum() == 0
    _, s1 = run(d, spec, cfg, None, 10, 5, seed=3)
    _, s2 = run(d, spec, cfg, None, 10, 10, seed=3)
    assert np.all(s2.counts >= s1.counts)


def test_frozen_boundary_never_flips():
    d, spec, cfg = start("kagome", 8, (1, 1, 0, -1, -1, 0))
    out, stats = run(d, spec, cfg, None, 20, 20, seed=5)
    assert out == cfg
    assert stats.counts.sum() == 0


def test_run_rejects_mismatched_start():
    d, spec, cfg = start("tri", 6)
    other = from_signature(d, (1, -1, 1, -1, 1, -1))
    with pytest.raises(ValueError):
        run(d, other, cfg, None, 1, 1, 0)
    bad = cfg.copy()
    bad.bits[int(d.interior_edge_ids[0])] ^= True
    with pytest.raises(IllegalConfiguration):
        run(d, bad.boundary(), bad, None, 1, 1, 0)


def test_stats_export():
    d, spec, cfg = start("tri", 4)
    _, stats = run(d, spec, cfg, None, 2, 3, seed=9)
    text = stats.export(d)
    lines = text.splitlines()
    assert lines[0] == "# window 2 5 seed 9"
    assert len(lines) == 2 + len(d.faces)
    assert sum(int(ln.split()[4]) for ln in lines[2:]) == stats.counts.sum()


def test_enclosed_cycle_of_a_face_is_itself():
    d = domain("tri", 6)
    cfg = all_one_cycles(d)
    df = directed_faces(d, cfg, "fe")[0]
    f = d.faces[df.face]
    order = cycle_order(d, cfg, list(f.edges))
    got = find_enclosed_1cycle(d, cfg, order)
    assert got == df


def cycle_order(d, cfg, edges):
    """Order the edges of a directed cycle head to tail."""
    tail = {int(np.where(cfg.bits[e], d.edge_tail[e], d.edge_head[e])): e for e in edges}
    head = {e: int(np.where(cfg.bits[e], d.edge_head[e], d.edge_tail[e])) for e in edges}
    out = [edges[0]]
    while len(out) < len(edges):
        out.append(tail[head[out[-1]]])
    return out


def outer_circuit(d, cfg, rng, steps=200000):
    """Loop-erased random walk until a closed loop winds around the centre."""
    from matplotlib.path import Path

    out = [[] for _ in range(d.n_vertices)]
    for e in range(d.n_edges):
        t, h = (d.edge_tail[e], d.edge_head[e]) if cfg.bits[e] else (d.edge_head[e], d.edge_tail[e])
        out[t].append((e, int(h)))
    v = int(np.flatnonzero(d.interior)[0])
    seen, path = {v: 0}, []
    for _ in range(steps):
        if not out[v]:
            v = int(rng.choice(np.flatnonzero(d.interior)))
            seen, path = {v: 0}, []
            continue
        e, v = out[v][rng.integers(len(out[v]))]
        path.append(e)
        if v in seen:
            loop = path[seen[v]:]
            if Path(d.vert_pos[cycle_vertices(d, cfg.bits, loop)]).contains_point((0.0, 0.0)):
                return loop
            del path[seen[v]:]
            seen = {u: k for u, k in seen.items() if k <= seen[v]}
        else:
            seen[v] = len(path)
    return None


@pytest.mark.parametrize("kind", KINDS)
def test_whole_boundary_cycle_encloses_a_1cycle(kind):
    from matplotlib.path import Path

    d = domain(kind, 6)
    spec = boundary_cycle(d)
    cfg = lipschitz_fill(d, spec)
    loop = outer_circuit(d, cfg, np.random.default_rng(0))
    assert loop is not None
    df = find_enclosed_1cycle(d, cfg, loop)
    poly = Path(d.vert_pos[cycle_vertices(d, cfg.bits, loop)])
    assert poly.contains_point(d.faces[df.face].centroid)


def test_cycle_vertices_rejects_open_paths():
    d = domain("tri", 6)
    cfg = all_one_cycles(d)
    f = directed_faces(d, cfg, "fe")[0]
    with pytest.raises(ValueError):
        cycle_vertices(d, cfg.bits, list(d.faces[f.face].edges)[:2])


def test_sampler_counts_sweeps():
    d, _, cfg = start("tri", 6)
    s = Sampler(d, cfg, "fe,fo", 1)
    s.sweeps(4)
    assert s.sweep == 4
    stats = FlipStats.empty(d, 0, 10)
    s.sweeps(2, stats)
    assert stats.total_sweeps == 6
