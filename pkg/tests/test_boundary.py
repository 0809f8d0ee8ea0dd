import numpy as np
import pytest

from icelattice.boundary import (
    NoMaximalTilt,
    all_one_cycles,
    alternating_edge_split,
    boundary_cycle,
    clock_to_direction,
    fig4a,
    fig4b,
    fig4c,
    fig4d,
    fig4d_search,
    from_signature,
    lines_config,
    parse_signature,
    periodic_config,
    quadrant_cross,
)
from icelattice.config import InfeasibleBoundary, boundary_profile, forced_edges, height, validate
from icelattice.dynamics import directed_faces
from icelattice.exact import enumerate_fillins
from icelattice.lattice import DomainError, FlipFamily

from conftest import KINDS, domain


def test_parse_signature():
    assert parse_signature("1,-1, 0,0,1,-1") == (1, -1, 0, 0, 1, -1)
    with pytest.raises(ValueError):
        parse_signature("1,2")


def test_signature_validation():
    d = domain("tri", 4)
    with pytest.raises(ValueError):
        from_signature(d, (2, 0, 0, 0, 0, -2))
    with pytest.raises(InfeasibleBoundary):
        from_signature(d, (1, 0, 0, 0, 0, 0))
    with pytest.raises(NoMaximalTilt):
        from_signature(domain("3464", 4), (1, -1, 0, 0, 0, 0))


@pytest.mark.parametrize("kind", KINDS)
def test_zero_signature_is_fillable(kind):
    d = domain(kind, 6)
    spec = from_signature(d, (0,) * 6)
    assert spec.flux() == 0
    assert np.ptp(boundary_profile(d, spec)) <= 3


@pytest.mark.parametrize("kind", ["tri", "kagome"])
def test_edge_split_profile(kind):
    d = domain(kind, 8)
    prof = boundary_profile(d, alternating_edge_split(d))
    assert prof[0] == prof[-1]
    assert np.ptp(prof) >= d.n // 2


def test_edge_split_rejects_3464():
    with pytest.raises(NoMaximalTilt):
        alternating_edge_split(domain("3464", 4))


@pytest.mark.parametrize("kind", KINDS)
def test_boundary_cycle_circulates(kind):
    d = domain(kind, 6)
    spec = boundary_cycle(d)
    prof = boundary_profile(d, spec)
    assert prof[0] == prof[-1]
    # most boundary arrows run the same way round
    loop = d.dual.loop_edges
    p, q = d.vert_pos[d.edge_tail[loop]], d.vert_pos[d.edge_head[loop]]
    mid = (p + q) / 2
    vec = np.where(spec.bits[:, None], q - p, p - q)
    tang = mid[:, 0] * vec[:, 1] - mid[:, 1] * vec[:, 0]
    assert (tang > 1e-9).sum() > 0.6 * len(loop)
    assert (tang < -1e-9).sum() == 0


@pytest.mark.parametrize("hour,want", [(3, (0, True)), (9, (0, False)), (1, (1, True)), (11, (2, True))])
def test_clock(hour, want):
    assert clock_to_direction(hour) == want


def test_clock_rejects_even_hours():
    with pytest.raises(ValueError):
        clock_to_direction(2)
    with pytest.raises(ValueError):
        lines_config(domain("tri", 4), (1, 7, 3))


@pytest.mark.parametrize("kind", KINDS)
def test_all_one_cycles_directs_every_face(kind):
    d = domain(kind, 6)
    cfg = all_one_cycles(d)
    n = sum(len(directed_faces(d, cfg, fam)) for fam in d.kind.families)
    assert n == sum(f.off_boundary for f in d.faces)


def test_fig4a_two_reversed_lines():
    d = domain("tri", 6)
    cfg = fig4a(d)
    assert validate(d, cfg) == []
    assert directed_faces(d, cfg, "fe") or directed_faces(d, cfg, "fo")


def test_fig4c_central_hexagon_directed():
    d = domain("kagome", 6)
    cfg = fig4c(d)
    hexes = directed_faces(d, cfg, FlipFamily.HEXAGON)
    cents = [np.hypot(*d.faces[h.face].centroid) for h in hexes]
    assert min(cents) < 1.0


def test_fig4d_pattern():
    d = domain("3464", 8)
    cfg = fig4d(d)
    assert validate(d, cfg) == []
    assert directed_faces(d, cfg, "fe")


def test_fig4d_search_finds_frozen_pattern():
    d = domain("3464", 4)
    ranked = fig4d_search(d)
    best = [r for r in ranked if r[1]["fe"] > 0][0]
    assert np.array_equal(fig4d(d).bits, periodic_config(d, best[2]).bits)


@pytest.mark.parametrize("fn,kind", [(fig4a, "kagome"), (fig4b, "tri"), (fig4c, "3464"), (fig4d, "tri")])
def test_seeds_check_lattice(fn, kind):
    with pytest.raises(DomainError):
        fn(domain(kind, 4))


@pytest.mark.parametrize("kind", ["tri", "kagome"])
def test_quadrant_cross_extremes(kind):
    d = domain(kind, 4)
    full = quadrant_cross(d, 1.0)
    assert enumerate_fillins(d, full.config.boundary()).count == 1
    assert forced_edges(d, full.config.boundary()).all()
    free = quadrant_cross(d, -1.0)
    assert not free.frozen_region.any()
    assert validate(d, free.config) == []


def test_quadrant_counts_fall_with_x():
    d = domain("tri", 4)
    counts = [enumerate_fillins(d, quadrant_cross(d, x).config.boundary()).count
              for x in (-1, -0.5, 0, 0.5, 1)]
    assert counts == sorted(counts, reverse=True)
    assert counts[-1] == 1


def test_quadrant_height_is_max_of_flat_and_ridge():
    d = domain("kagome", 8)
    seed = quadrant_cross(d, 0.0)
    h = height(d, seed.config)
    flat = height(d, all_one_cycles(d))
    lift = h - flat  # heights are fixed only up to a constant
    c = lift[~seed.frozen_region]
    assert np.ptp(c) == 0
    assert np.all(lift[seed.frozen_region] > c[0])
    assert seed.frozen_region.any() and not seed.frozen_region.all()
    assert seed.right_region.any()


def test_quadrant_rejects_bad_input():
    with pytest.raises(ValueError):
        quadrant_cross(domain("tri", 4), 1.5)
    with pytest.raises(DomainError):
        quadrant_cross(domain("3464", 4), 0.0)
