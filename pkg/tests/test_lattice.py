"""Sites, regions, configurations and the thinning maps."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thinlab.lattice import (
    Config,
    NotThinnedConfigError,
    Region,
    UnfixedArea,
    UnresolvedNeighborError,
    extension,
    fixed_region,
    format_grid,
    inner_boundary,
    interior,
    is_isolated,
    is_T_feasible,
    neighbors,
    outer_boundary,
    parse_grid,
    s_ball,
    s_distance,
    thin,
    thin_complement,
)


def test_neighbors_2d():
    assert sorted(neighbors((0, 0))) == [(-1, 0), (0, -1), (0, 1), (1, 0)]


def test_neighbors_1d_and_3d():
    assert sorted(neighbors((5,))) == [(4,), (6,)]
    assert len(neighbors((0, 0, 0))) == 6


def test_box_contains_origin():
    for d in (1, 2, 3):
        for side in (1, 2, 3, 4, 5):
            assert (0,) * d in Region.box(d, side)
    assert len(Region.box(2, 3)) == 9


def test_boundary_decomposition():
    box = Region.box(2, 3)
    assert interior(box.site_set) == {(0, 0)}
    assert inner_boundary(box.site_set) == box.site_set - {(0, 0)}
    assert len(outer_boundary(box.site_set)) == 12
    assert extension(box.site_set) == box.site_set | outer_boundary(box.site_set)


def test_config_roundtrip():
    box = Region.box(2, 3)
    cfg = Config.from_occupied(box, [(0, 0), (1, 1)])
    assert cfg[(0, 0)] == 1 and cfg[(1, 1)] == 1 and cfg[(0, 1)] == 0
    assert cfg.occupied_sites() == {(0, 0), (1, 1)}
    assert Config.from_mapping(box, cfg.to_mapping()) == cfg


def test_grid_literals_roundtrip():
    text = "010\n000\n#1#"
    cfg = parse_grid(text)
    assert cfg[(0, 1)] == 1 and cfg[(2, 1)] == 1
    assert (2, 0) not in cfg.region
    assert format_grid(cfg) == text


def test_thin_keeps_only_isolated():
    cfg = parse_grid("010\n011\n000")
    out = thin(cfg, {s: 0 for s in outer_boundary(cfg.region.site_set)})
    assert out.occupied_sites() == set()  # all occupied sites have occupied nbrs
    cfg2 = parse_grid("100\n000\n001")
    out2 = thin(cfg2, {s: 0 for s in outer_boundary(cfg2.region.site_set)})
    assert out2.occupied_sites() == {(0, 0), (2, 2)}


def test_thin_requires_boundary_resolution():
    cfg = parse_grid("1")
    with pytest.raises(UnresolvedNeighborError, match="unresolved neighbor"):
        thin(cfg)
    assert thin(cfg, {s: 0 for s in neighbors((0, 0))}).occupied_sites() == {(0, 0)}


def test_occupied_boundary_kills_isolation():
    cfg = parse_grid("1")
    bnd = {s: 0 for s in neighbors((0, 0))}
    bnd[(0, 1)] = 1
    assert not is_isolated((0, 0), cfg, bnd)
    assert thin(cfg, bnd).occupied_sites() == set()


def test_feasibility_examples():
    bnd0 = lambda c: {s: 0 for s in outer_boundary(c.region.site_set)}
    pair = parse_grid("110\n000\n000")
    assert is_T_feasible(pair, pair.region.sites, bnd0(pair))
    lonely = parse_grid("100\n000\n000")
    assert not is_T_feasible(lonely, lonely.region.sites, bnd0(lonely))
    # a boundary site may rescue the constraint
    bnd = bnd0(lonely)
    bnd[(-1, 0)] = 1
    assert is_T_feasible(lonely, lonely.region.sites, bnd)
    empty = parse_grid("000\n000\n000")
    assert is_T_feasible(empty, empty.region.sites, bnd0(empty))


def test_fixed_region_decomposition():
    box = Region.box(2, 5)
    thinned = Config.from_occupied(box, [(0, 0)])
    fixed, unfixed = fixed_region(thinned)
    assert fixed == {(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)}
    assert unfixed.sites == box.site_set - fixed


def test_fixed_region_rejects_adjacent_occupation():
    box = Region.box(2, 5)
    bad = Config.from_occupied(box, [(0, 0), (0, 1)])
    with pytest.raises(
        NotThinnedConfigError, match="not an admissible thinned configuration"
    ):
        fixed_region(bad)


def test_s_distance_detours_around_hole():
    box = Region.box(2, 5)
    thinned = Config.from_occupied(box, [(0, 0)])
    _, area = fixed_region(thinned)
    # crossing the removed plus-shape forces a detour: every monotone
    # corner-to-corner path passes through it, doubling the distance
    assert s_distance((-1, -1), (1, 1), area) == 8
    assert s_distance((-2, 0), (2, 0), area) == 8
    ball = s_ball((-2, 0), 2, area)
    assert (0, 0) not in ball and (-2, 2) in ball


def test_s_distance_disconnected():
    area = UnfixedArea(sites=frozenset({(0, 0), (2, 0)}), dim=2)
    assert s_distance((0, 0), (2, 0), area) == float("inf")


@st.composite
def window_configs(draw):
    side = draw(st.integers(min_value=1, max_value=4))
    region = Region.box(2, side)
    bits = draw(st.integers(min_value=0, max_value=(1 << len(region)) - 1))
    bval = draw(st.sampled_from([0, 1]))
    boundary = {s: bval for s in outer_boundary(region.site_set)}
    return Config(region, bits), boundary


@given(window_configs())
@settings(max_examples=150, deadline=None)
def test_thinning_decomposes_occupation(cw):
    cfg, boundary = cw
    kept = thin(cfg, boundary)
    dropped = thin_complement(cfg, boundary)
    assert kept.bits & dropped.bits == 0
    assert kept.bits | dropped.bits == cfg.bits


@given(window_configs())
@settings(max_examples=150, deadline=None)
def test_thinned_output_is_admissible(cw):
    cfg, boundary = cw
    out = thin(cfg, boundary)
    fixed_region(out)  # must not raise: no two adjacent survivors


@given(window_configs())
@settings(max_examples=150, deadline=None)
def test_thinning_idempotent_under_vacant_boundary(cw):
    cfg, _ = cw
    boundary = {s: 0 for s in outer_boundary(cfg.region.site_set)}
    once = thin(cfg, boundary)
    assert thin(once, boundary) == once


@given(window_configs())
@settings(max_examples=150, deadline=None)
def test_complement_is_feasible(cw):
    cfg, boundary = cw
    dropped = thin_complement(cfg, boundary)
    # sites kept by the complementary map retain an occupied neighbor there
    kept_bnd = {
        s: (boundary[s] if not is_isolated_bnd(s, cfg, boundary) else 0)
        for s in boundary
    }
    assert is_T_feasible(dropped, dropped.region.sites, kept_bnd)


def is_isolated_bnd(site, cfg, boundary):
    """Isolation check for a boundary site against window plus boundary."""
    if not boundary.get(site):
        return False
    for n in neighbors(site):
        if n in cfg.region.index:
            if cfg[n]:
                return False
        elif boundary.get(n, 0):
            return False
    return True
