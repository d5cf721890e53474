"""Polymer weights, partition identity, convergence sums and bounds."""

import itertools
import math
import random

import numpy as np
import pytest

from thinlab.exact import WindowTooLargeError
from thinlab.lattice import Region, UnresolvedNeighborError, neighbors
from thinlab.polymer import (
    CONNECT_RADIUS,
    DEPENDENCE_RADIUS,
    AnnulusContext,
    OccupancyPolynomial,
    PolymerModel,
    boundary_polymer_bound,
    cluster_potential,
    isolation_event_indicator,
    kp_condition_sum,
    kp_condition_sums,
    polymer_partition_identity,
    suppression_check,
    ursell_cluster_sum,
    ursell_coefficient,
)

# --- fixtures ----------------------------------------------------------


def plain_context(rows, cols, bval=0):
    window = Region.from_sites(
        [(r, c) for r in range(rows) for c in range(cols)]
    )
    return AnnulusContext.from_regions(
        window, None, {s: bval for s in window.outer_boundary()}
    )


def holed_context(bval=0):
    """5x4 window with a singleton hole, the smallest valid holed fixture."""
    window = Region.from_sites([(r, c) for r in range(5) for c in range(4)])
    lam = Region.from_sites([(2, 1)])
    hole_values = {(2, 1): 0, (1, 1): 0, (3, 1): 0, (2, 0): 0, (2, 2): 0}
    return AnnulusContext.from_regions(
        window,
        lam,
        {s: bval for s in window.outer_boundary()},
        hole_values=hole_values,
    )


@pytest.fixture(scope="module")
def model34():
    return PolymerModel(plain_context(3, 4))


@pytest.fixture(scope="module")
def model77():
    delta = Region.box(2, 7)
    ctx = AnnulusContext.from_regions(
        delta, None, {s: 0 for s in delta.outer_boundary()}
    )
    return PolymerModel(ctx)


# --- oracle ------------------------------------------------------------


def oracle_weight(model, W, p):
    """Signed polymer weight by full enumeration over all free sites."""
    free = list(model.ctx.free)
    total = 0.0
    for bits in itertools.product((0, 1), repeat=len(free)):
        assignment = dict(zip(free, bits))
        if all(isolation_event_indicator(i, assignment, model.ctx) for i in W):
            w = 1.0
            for v in bits:
                w *= p if v else 1 - p
            total += w
    return (-1.0) ** len(W) * total


# --- occupancy polynomial arithmetic ----------------------------------


def test_polynomial_convolution():
    a = OccupancyPolynomial(1, (1, -1))
    b = OccupancyPolynomial(2, (0, 2, 1))
    c = a.convolve(b)
    assert c.M == 3
    assert c.coeffs == (0, 2, -1, -1)


def test_polynomial_padding_preserves_value():
    a = OccupancyPolynomial(1, (3, 1))
    padded = a.pad(2)
    for p in (0.2, 0.7):
        assert math.isclose(a.evaluate(p), padded.evaluate(p))


# --- geometry ----------------------------------------------------------


def test_connectivity_and_dependence_radii():
    assert CONNECT_RADIUS == 4
    assert DEPENDENCE_RADIUS == 2


def test_polymer_enumeration_small(model34):
    singletons = model34.enumerate_polymers(1)
    assert singletons == [(s,) for s in sorted(model34.ctx.free)]
    pairs = model34.enumerate_polymers(2)
    for W in pairs:
        if len(W) == 2:
            i, j = W
            assert j in model34.ball4(i)
    assert len({W for W in pairs}) == len(pairs)


def test_compatibility_is_dependence_disjointness(model34):
    W1, W2 = ((0, 0),), ((2, 3),)
    assert model34.compatible(W1, W2) == (
        not (model34.dependence_set(W1) & model34.dependence_set(W2))
    )
    assert not model34.compatible(W1, ((0, 1),))


def test_dependence_paths_may_cross_hole():
    ctx = holed_context()
    model = PolymerModel(ctx)
    # (1, 1) and (3, 1) straddle the hole; through it their distance is 2,
    # so each lies in the other's connect ball
    assert (3, 1) in model.ball4((1, 1))


# --- weights -----------------------------------------------------------


def test_weight_matches_oracle(model34):
    random.seed(1)
    polys = model34.enumerate_polymers(3)
    sample = random.sample(polys, 6) + model34.enumerate_polymers(1)[:2]
    for W in sample:
        poly = model34.weight(W)
        for p in (0.15, 0.5, 0.85):
            assert math.isclose(
                poly.evaluate(p), oracle_weight(model34, W, p), abs_tol=1e-12
            )


def test_weight_is_translation_invariant(model77):
    base = ((0, 0), (0, 1))
    shifted = ((1, 0), (1, 1))
    assert model77.weight(base).coeffs == model77.weight(shifted).coeffs


def test_weight_symmetry_under_rotation(model77):
    # the centered vacant-boundary window is dihedral-symmetric
    W = ((0, 0), (1, 2))
    rot = tuple(sorted((-c, r) for r, c in W))
    assert sorted(model77.weight(W).coeffs) == sorted(model77.weight(rot).coeffs)
    for p in (0.2, 0.6):
        assert math.isclose(
            model77.weight(W).evaluate(p), model77.weight(rot).evaluate(p)
        )


def test_weight_bounds_sampled(model77):
    random.seed(2)
    polys = model77.enumerate_polymers(3)
    ps = np.arange(0.05, 1.0, 0.05)
    for W in random.sample(polys, 60):
        poly = model77.weight(W)
        for p in ps:
            assert abs(poly.evaluate(p)) <= p ** (len(W) / 4) + 1e-12


def test_surrounded_exponent_not_a_pointwise_bound(model77):
    """A surrounded corner is not forced occupied, so p^|L| can fail.

    The pair straddling a window corner surrounds it (|L| = 1), yet its
    weight exceeds p at small p because the corner's isolation witnesses
    need not include the corner itself.  The size-exponent bound still
    holds.
    """
    W = ((-3, -2), (-2, -3))
    assert model77.surrounded_set(W) == frozenset({(-3, -3)})
    p = 0.1
    z = abs(model77.weight(W).evaluate(p))
    assert z > p
    assert z <= p ** (len(W) / 4)


def test_surrounded_set_plus_shape(model77):
    W = ((-1, 0), (0, -1), (0, 1), (1, 0))
    assert model77.surrounded_set(W) == frozenset({(0, 0)})


def test_surrounded_set_spread_polymer_is_empty(model77):
    # non-adjacent polymer sites surround nothing
    assert model77.surrounded_set(((1, 0), (2, -1))) == frozenset()


def test_elimination_width_cap():
    delta = Region.box(2, 7)
    ctx = AnnulusContext.from_regions(
        delta, None, {s: 0 for s in delta.outer_boundary()}
    )
    model = PolymerModel(ctx, width_cap=3)
    with pytest.raises(WindowTooLargeError, match="window too large"):
        model.weight(((0, 0), (2, 2)))


# --- partition identity ------------------------------------------------


IDENTITY_FIXTURES = [
    ("2x2 vacant", lambda: plain_context(2, 2, 0)),
    ("2x2 occupied", lambda: plain_context(2, 2, 1)),
    ("2x3 vacant", lambda: plain_context(2, 3, 0)),
    ("2x3 occupied", lambda: plain_context(2, 3, 1)),
    ("3x3 vacant", lambda: plain_context(3, 3, 0)),
    ("3x3 occupied", lambda: plain_context(3, 3, 1)),
    ("3x4 vacant", lambda: plain_context(3, 4, 0)),
    ("3x4 occupied", lambda: plain_context(3, 4, 1)),
    ("3x5 vacant", lambda: plain_context(3, 5, 0)),
    ("5x4 hole vacant", lambda: holed_context(0)),
    ("5x4 hole occupied", lambda: holed_context(1)),
]


@pytest.mark.parametrize("label,make", IDENTITY_FIXTURES, ids=[f[0] for f in IDENTITY_FIXTURES])
def test_partition_identity(label, make):
    ctx = make()
    model = PolymerModel(ctx)
    lhs, rhs, equal = polymer_partition_identity(ctx, model)
    assert equal, (label, lhs, rhs)


def test_partition_identity_premise_violation():
    # a 4x4 window with a singleton hole leaves a corner site whose
    # isolation no free site can witness; the identity must refuse it
    window = Region.from_sites([(r, c) for r in range(4) for c in range(4)])
    lam = Region.from_sites([(1, 1)])
    hole_values = {(1, 1): 0, (0, 1): 0, (1, 0): 0, (2, 1): 0, (1, 2): 0}
    ctx = AnnulusContext.from_regions(
        window,
        lam,
        {s: 0 for s in window.outer_boundary()},
        hole_values=hole_values,
    )
    model = PolymerModel(ctx)
    with pytest.raises(ValueError, match="no free neighbor"):
        polymer_partition_identity(ctx, model)


# --- convergence sums and cluster machinery ----------------------------


def test_kp_sums_monotone_in_p(model77):
    worst = [
        max(kp_condition_sums(model77, p, truncation=2).values())
        for p in (1e-4, 1e-3, 1e-2)
    ]
    assert worst[0] < worst[1] < worst[2]
    assert worst[0] < 1.0  # condition holds deep in the dilute regime


def test_kp_condition_sum_general_reference(model77):
    total, size, holds = kp_condition_sum(
        ((0, 0), (0, 1)), 5e-4, model77, truncation=2
    )
    assert size == 2
    # singleton domination: the pair sum is below the sum of its site sums
    sums = kp_condition_sums(model77, 5e-4, truncation=2)
    assert total <= sums[(0, 0)] + sums[(0, 1)] + 1e-12
    assert holds == (total <= 2)


def test_ursell_coefficients(model77):
    W1, W2, W3 = ((0, 0),), ((1, 0),), ((3, 3),)
    assert ursell_coefficient((W1,), model77) == 1.0
    assert ursell_coefficient((W1, W2), model77) == -1.0
    assert ursell_coefficient((W1, W3), model77) == 0.0  # compatible pair
    assert ursell_coefficient((W1, W1), model77) == -0.5
    # triangle of pairwise-incompatible singletons: three two-edge trees
    # minus the full triangle
    tri = (W1, W2, ((0, 1),))
    assert ursell_coefficient(tri, model77) == pytest.approx(2.0)


def test_cluster_potential_single_is_weight(model77):
    W = ((0, 0),)
    for p in (0.1, 0.4):
        assert math.isclose(
            cluster_potential((W,), p, model77), model77.weight(W).evaluate(p)
        )


def test_exp_cluster_sum_recovers_partition_ratio():
    """On a tiny window exp(cluster sum) must approach Z / product-measure."""
    ctx = plain_context(2, 2, 0)
    model = PolymerModel(ctx)
    polys = model.enumerate_polymers(4)
    p = 0.02
    lhs, rhs, equal = polymer_partition_identity(ctx, model)
    z_ratio = OccupancyPolynomial(len(ctx.free), lhs).evaluate(p)
    approx = math.exp(ursell_cluster_sum(polys, p, model, max_cluster_polymers=4))
    assert math.isclose(approx, z_ratio, rel_tol=2e-3)


def test_suppression_check_dilute(model77):
    total, bound, holds = suppression_check(
        model77, p=1e-4, R=4, x=(0, 0), max_polymer_size=2, max_cluster_polymers=2
    )
    assert holds and total <= bound


def test_boundary_polymer_bound():
    lam = Region.from_sites([(0, 0)])
    delta = Region.box(2, 7)
    hole_values = {
        (0, 0): 0, (1, 0): 0, (-1, 0): 0, (0, 1): 0, (0, -1): 0,
    }
    ctx = AnnulusContext.from_regions(
        delta, lam, {s: 0 for s in delta.outer_boundary()}, hole_values=hole_values
    )
    model = PolymerModel(ctx)
    qs = [((-2, -1),), ((2, 1),)]
    for p in (0.05, 0.5, 0.9):
        prod, bound, holds = boundary_polymer_bound(qs, p, model)
        assert holds and prod <= bound
    with pytest.raises(ValueError, match="does not touch the hole"):
        boundary_polymer_bound([((3, 3),)], 0.2, model)
