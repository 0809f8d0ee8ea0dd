import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icelattice.boundary import all_one_cycles, from_signature
from icelattice.config import (
    BoundarySpec,
    Configuration,
    IllegalConfiguration,
    InfeasibleBoundary,
    Order,
    boundary_profile,
    compare,
    extremal,
    face_orientation,
    forced_edges,
    height,
    lipschitz_fill,
    local_pattern_count,
    read_boundary,
    read_config,
    signature_of,
    validate,
    vertex_type_count,
    write_boundary,
    write_config,
)
from icelattice.dynamics import run
from icelattice.lattice import DomainError, LatticeKind

from conftest import KINDS, domain


def sampled(kind, n, seed, sweeps=20):
    d = domain(kind, n)
    spec = from_signature(d, (0,) * 6)
    cfg, _ = run(d, spec, lipschitz_fill(d, spec), None, sweeps, 0, seed)
    return d, cfg


def test_local_pattern_counts():
    assert local_pattern_count(LatticeKind.TRIANGULAR) == 20
    assert local_pattern_count(LatticeKind.KAGOME) == 6
    assert local_pattern_count(LatticeKind.T3464) == 6


@pytest.mark.parametrize("kind,total", [("tri", 20), ("kagome", 18), ("3464", 36)])
def test_vertex_model_sizes(kind, total):
    assert vertex_type_count(domain(kind, 4)) == total


@pytest.mark.parametrize("kind", KINDS)
def test_validate_detects_single_reversal(kind):
    d, cfg = sampled(kind, 4, 1)
    assert validate(d, cfg) == []
    e = int(d.interior_edge_ids[0])
    bad = cfg.copy()
    bad.bits[e] ^= True
    got = validate(d, bad)
    ends = {int(d.edge_tail[e]), int(d.edge_head[e])}
    assert set(got) == ends & set(d.interior_vertex_ids.tolist())


def test_validate_size_mismatch():
    d = domain("tri", 4)
    with pytest.raises(DomainError):
        validate(d, np.zeros(3, dtype=bool))


def test_height_rejects_illegal():
    d, cfg = sampled("tri", 4, 2)
    cfg.bits[int(d.interior_edge_ids[0])] ^= True
    with pytest.raises(IllegalConfiguration):
        height(d, cfg)


@settings(max_examples=15, deadline=None)
@given(kind=st.sampled_from(KINDS), seed=st.integers(0, 2**32))
def test_height_steps_match_arrows(kind, seed):
    d, cfg = sampled(kind, 6, seed)
    h = height(d, cfg)
    assert h[d.dual.base] == 0
    step = h[d.dual.right] - h[d.dual.left]
    assert np.array_equal(step, np.where(cfg.bits, 1, -1))


@settings(max_examples=15, deadline=None)
@given(kind=st.sampled_from(KINDS), seed=st.integers(0, 2**32))
def test_ccw_centres_are_local_minima(kind, seed):
    d, cfg = sampled(kind, 6, seed)
    h = height(d, cfg)
    centre = {int(f): k for k, f in enumerate(d.dual.face_of) if f >= 0}
    for fam in d.kind.families:
        ids, orient = face_orientation(d, cfg.bits, fam)
        for f, o in zip(ids, orient):
            if o == 0:
                continue
            c = centre[int(f)]
            nbrs = np.r_[d.dual.right[d.dual.left == c], d.dual.left[d.dual.right == c]]
            assert np.all(np.sign(h[nbrs] - h[c]) == o)


@pytest.mark.parametrize("kind", KINDS)
def test_reversal_negates_height(kind):
    d, cfg = sampled(kind, 4, 5)
    assert np.array_equal(height(d, cfg.reversed()), -height(d, cfg))


def test_profile_and_flux():
    d = domain("kagome", 4)
    spec = from_signature(d, (1, -1, 1, -1, 1, -1))
    prof = boundary_profile(d, spec)
    assert prof[0] == prof[-1] == 0
    assert spec.flux() == 0
    bad = BoundarySpec(d, np.ones_like(spec.bits))
    if bad.flux() != 0:
        with pytest.raises(InfeasibleBoundary):
            boundary_profile(d, bad)


@pytest.mark.parametrize("kind", ["tri", "kagome"])
def test_signature_round_trip(kind):
    d = domain(kind, 6)
    for sig in [(0,) * 6, (1, -1, 1, -1, 1, -1), (1, 1, 0, -1, -1, 0), (0, 1, 1, 0, -1, -1)]:
        spec = from_signature(d, sig)
        assert signature_of(boundary_profile(d, spec), d).nominal() == sig


def test_compare_orders():
    d, cfg = sampled("kagome", 4, 3)
    hi = extremal(d, cfg, "max")
    lo = extremal(d, cfg, "min")
    assert compare(hi, cfg) in (Order.FIRST_MAJORS, Order.EQUAL)
    assert compare(lo, cfg) in (Order.SECOND_MAJORS, Order.EQUAL)
    assert compare(cfg, cfg) is Order.EQUAL


@pytest.mark.parametrize("kind", KINDS)
def test_extremal_matches_lipschitz(kind):
    d, cfg = sampled(kind, 6, 11)
    spec = cfg.boundary()
    for direction in ("max", "min"):
        assert extremal(d, cfg, direction) == lipschitz_fill(d, spec, direction)


def test_extremal_needs_legal():
    d, cfg = sampled("tri", 4, 1)
    cfg.bits[int(d.interior_edge_ids[0])] ^= True
    with pytest.raises(IllegalConfiguration):
        extremal(d, cfg)


def test_forced_edges_frozen_boundary():
    d = domain("tri", 6)
    assert forced_edges(d, from_signature(d, (1, 1, 0, -1, -1, 0))).all()


def test_all_one_cycles_heights_are_zero_one():
    d = domain("kagome", 6)
    h = height(d, all_one_cycles(d))
    assert set(np.unique(h).tolist()) <= {-1, 0, 1}
    assert np.ptp(h) == 1


def test_file_round_trip():
    d, cfg = sampled("3464", 4, 9)
    assert read_config(write_config(cfg), d) == cfg
    spec = cfg.boundary()
    assert read_boundary(write_boundary(spec), d) == spec


def test_file_header_mismatch():
    d, cfg = sampled("tri", 4, 1)
    with pytest.raises(ValueError):
        read_config(write_config(cfg), domain("tri", 6))
    with pytest.raises(ValueError):
        read_config("ICECFG tri 4\n0 2\n", d)


def test_configuration_size_checked():
    with pytest.raises(DomainError):
        Configuration(domain("tri", 4), np.zeros(5, dtype=bool))
