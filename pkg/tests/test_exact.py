import math

import numpy as np
import pytest

from icelattice.boundary import boundary_cycle, fig4a, fig4b, fig4d, from_signature
from icelattice.config import BoundarySpec, lipschitz_fill, validate
from icelattice.exact import (
    TruncatedEnumeration,
    brute_force_count,
    chi_square_uniform,
    edge_order,
    entropy_of,
    enumerate_fillins,
    flip_graph,
    uniformity_test,
)
from icelattice.lattice import DomainError, FlipFamily

from conftest import domain

SIGS = [(0,) * 6, (1, -1, 1, -1, 1, -1), (1, 1, 0, -1, -1, 0), (0, 1, 1, 0, -1, -1)]


@pytest.mark.parametrize("sig", SIGS)
@pytest.mark.parametrize("kind", ["tri", "kagome"])
def test_enumeration_matches_brute_force(kind, sig):
    d = domain(kind, 4 if kind == "tri" else 2)
    spec = from_signature(d, sig)
    assert enumerate_fillins(d, spec).count == brute_force_count(d, spec)


def test_brute_force_for_3464():
    d = domain("3464", 2)
    spec = lipschitz_fill(d, from_signature(d, (0,) * 6)).boundary()
    assert enumerate_fillins(d, spec).count == brute_force_count(d, spec) == 2


def test_brute_force_refuses_large():
    d = domain("tri", 8)
    with pytest.raises(ValueError):
        brute_force_count(d, from_signature(d, (0,) * 6))


def test_known_counts():
    assert enumerate_fillins(domain("tri", 2), from_signature(domain("tri", 2), (0,) * 6)).count == 1
    assert enumerate_fillins(domain("tri", 4), from_signature(domain("tri", 4), (0,) * 6)).count == 11
    k4 = domain("kagome", 4)
    assert enumerate_fillins(k4, from_signature(k4, (0,) * 6)).count == 7141


@pytest.mark.parametrize("kind", ["tri", "kagome"])
def test_frozen_signatures_have_one_fillin(kind):
    d = domain(kind, 4)
    for r in range(6):
        sig = (1, 1, 0, -1, -1, 0)[r:] + (1, 1, 0, -1, -1, 0)[:r]
        assert enumerate_fillins(d, from_signature(d, sig)).count == 1


def test_results_are_legal_distinct_and_sorted():
    d = domain("kagome", 4)
    spec = from_signature(d, (1, -1, 1, -1, 1, -1))
    res = enumerate_fillins(d, spec)
    keys = [c.bits.tobytes() for c in res.configs]
    assert keys == sorted(set(keys))
    assert all(validate(d, c) == [] and spec.matches(c) for c in res.configs[:50])


def test_cap_truncates_but_counts():
    d = domain("kagome", 4)
    spec = from_signature(d, (0,) * 6)
    res = enumerate_fillins(d, spec, cap=10)
    assert res.truncated and res.count == 7141 and len(res.configs) == 10
    with pytest.raises(TruncatedEnumeration):
        flip_graph(res, d)
    with pytest.raises(TruncatedEnumeration):
        res.bit_matrix()


def test_nonzero_flux_has_no_fillins():
    d = domain("tri", 4)
    bits = from_signature(d, (0,) * 6).bits.copy()
    bits[0] ^= True
    assert enumerate_fillins(d, BoundarySpec(d, bits)).count == 0


def test_edge_order_covers_interior():
    d = domain("3464", 4)
    assert sorted(edge_order(d)) == sorted(d.interior_edge_ids.tolist())


@pytest.mark.parametrize("seed,kind,n,count", [
    (fig4a, "tri", 4, 4), (fig4b, "kagome", 4, 4224), (fig4d, "3464", 4, 48)])
def test_full_move_set_connects(seed, kind, n, count):
    d = domain(kind, n)
    res = enumerate_fillins(d, seed(d).boundary())
    assert res.count == count
    assert flip_graph(res, d).is_connected()


def test_restricted_moves_can_disconnect():
    d = domain("tri", 4)
    res = enumerate_fillins(d, fig4a(d).boundary())
    assert flip_graph(res, d, [FlipFamily.EVEN]).components()[0] == 2
    d = domain("kagome", 4)
    res = enumerate_fillins(d, fig4b(d).boundary())
    assert flip_graph(res, d, ["fe", "fo"]).components()[0] == 3


def test_flip_graph_rejects_foreign_family():
    d = domain("tri", 4)
    res = enumerate_fillins(d, from_signature(d, (0,) * 6))
    with pytest.raises(DomainError):
        flip_graph(res, d, [FlipFamily.HEXAGON])


def test_whole_boundary_cycle_connected():
    d = domain("tri", 4)
    res = enumerate_fillins(d, boundary_cycle(d))
    assert res.count > 1
    assert flip_graph(res, d).is_connected()


def test_entropy():
    assert entropy_of(11, 30) == pytest.approx(math.log(11) / 30)
    assert entropy_of(1, 30) == 0.0
    with pytest.raises(ValueError):
        entropy_of(0, 30)


def test_chi_square():
    chi2, dof, p = chi_square_uniform([100, 100, 100, 100])
    assert chi2 == 0 and dof == 3 and p == pytest.approx(1.0)
    assert chi_square_uniform([400, 0, 0, 0])[2] < 1e-10
    assert chi_square_uniform([5])[2] == 1.0


def test_sampler_is_roughly_uniform():
    d = domain("tri", 4)
    rep = uniformity_test(d, from_signature(d, (0,) * 6), "fe,fo", 3000, 8, seed=4)
    assert rep.n_states == 11 and rep.unseen == 0
    assert rep.passed(1e-4)


def test_single_family_sampler_is_not_uniform():
    d = domain("tri", 4)
    rep = uniformity_test(d, fig4a(d).boundary(), "fe", 2000, 4, seed=1)
    assert rep.unseen > 0 or not rep.passed()
