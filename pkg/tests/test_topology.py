from itertools import combinations
import pytest
import numpy as np
from naqc.fp import fp_lep
from naqc.topology import (
    GridSpec,
    HardwareState,
    Zone,
    conflicts,
    distance,
    interactable,
    is_connected,
    shortest_path,
    sites_within,
    zone_of,
)


@pytest.fixture
def grid3():
    return GridSpec(3, 3, 1)


def test_grid_validation():
    """
    """
    with pytest.raises(ValueError):
        GridSpec(0, 3, 1)
    with pytest.raises(ValueError):
        GridSpec(3, 3, 0.5)
    with pytest.raises(ValueError):
        GridSpec(3, 3, 1, zone_divisor=0)
    with pytest.raises(ValueError):
        GridSpec(2.5, 3, 1)


def test_site_indexing(grid3):
    """
    """
    assert grid3.site_index((2, 1)) == 5
    assert grid3.site_coord(5) == (2, 1)
    assert grid3.site_index(7) == 7
    assert grid3.num_sites == 9
    with pytest.raises(ValueError):
        grid3.site_index((3, 0))
    with pytest.raises(ValueError):
        grid3.site_index(9)
    assert not grid3.contains((0.5, 0))


def test_center_and_diagonal():
    """
    """
    grid = GridSpec(10, 10, 3)
    assert grid.center_site() == 44
    assert np.isclose(grid.diagonal, np.hypot(9, 9))
    assert GridSpec(3, 1, 1).center_site() == 1
    assert grid.with_mid(2).mid == 2
    assert grid.with_mid(2) != grid


def test_distance(grid3):
    """
    """
    assert np.isclose(distance(0, 8, grid3), np.sqrt(8))
    assert np.isclose(distance((0, 0), (2, 0), grid3), 2)


def test_interactable(grid3):
    """
    """
    assert interactable([0, 1], grid3)
    assert interactable([4], grid3)
    assert not interactable([0, 4], grid3)
    assert interactable([0, 4], grid3.with_mid(np.sqrt(2)))
    assert interactable([0, 1, 4], grid3.with_mid(np.sqrt(2)))
    assert not interactable([0, 1, 2], grid3.with_mid(np.sqrt(2)))
    with pytest.raises(ValueError):
        interactable([1, 1], grid3)


def test_zone_of():
    """
    """
    grid = GridSpec(7, 1, 6)
    zone = zone_of([0, 2], grid)
    assert np.isclose(zone.radius, 1)
    assert zone.centers == [(0, 0), (2, 0)]
    assert zone_of([3], grid).radius == 0


def test_conflicts():
    """
    """
    grid = GridSpec(7, 1, 6)
    za = zone_of([0, 2], grid)
    # tangent zones do not overlap
    assert not conflicts(za, zone_of([4, 6], grid))
    assert conflicts(za, zone_of([3, 5], grid))
    # a single-qubit gate inside a multiqubit zone
    assert conflicts(zone_of([0, 4], grid), zone_of([1], grid))
    assert not conflicts(zone_of([1], grid), zone_of([2], grid))
    assert not conflicts(Zone([], 0), za)


def test_hardware_state(grid3):
    """
    """
    hw = HardwareState(grid3, [4])
    assert hw.usable == [0, 1, 2, 3, 5, 6, 7, 8]
    assert hw.num_usable == 8
    assert not hw.is_usable(4)
    hw2 = hw.with_lost([0])
    assert hw2.lost == frozenset({0, 4})
    assert hw.lost == frozenset({4})
    assert list(hw2.usable_mask()) == [
        False, True, True, True, False, True, True, True, True
    ]


def test_is_connected(grid3):
    """
    """
    assert is_connected(HardwareState(grid3))
    assert is_connected(HardwareState(grid3, [4]))
    assert not is_connected(HardwareState(grid3, [1, 3]))
    # a longer reach bridges the gap
    assert is_connected(HardwareState(grid3.with_mid(np.sqrt(2)), [1, 3]))


def _union_find_connected(hw):
    """
    Connectivity by merging every pair of usable sites within MID.
    """
    parent = {site: site for site in hw.usable}

    def find(site):
        while parent[site] != site:
            parent[site] = parent[parent[site]]
            site = parent[site]
        return site

    for a, b in combinations(hw.usable, 2):
        if fp_lep(distance(a, b, hw.grid), hw.grid.mid):
            parent[find(a)] = find(b)
    return len({find(site) for site in hw.usable}) <= 1


@pytest.mark.parametrize("mid", [1, np.sqrt(2), 2])
def test_is_connected_all_hole_sets(grid3, mid):
    """
    """
    grid = grid3.with_mid(mid)
    for holes in range(6):
        for lost in combinations(range(grid.num_sites), holes):
            hw = HardwareState(grid, lost)
            assert is_connected(hw) == _union_find_connected(hw)


def test_is_connected_random_holes():
    """
    """
    rng = np.random.default_rng(11)
    for width, height in ((2, 2), (4, 3), (3, 4), (4, 4)):
        for mid in (1, np.sqrt(2), 2):
            grid = GridSpec(width, height, mid)
            for _ in range(40):
                holes = min(int(rng.integers(0, 6)), grid.num_sites)
                lost = rng.choice(grid.num_sites, holes, replace=False)
                hw = HardwareState(grid, lost.tolist())
                assert is_connected(hw) == _union_find_connected(hw)


def _random_sites(rng, grid, count):
    return rng.choice(grid.num_sites, count, replace=False).tolist()


def test_conflicts_symmetric():
    """
    """
    rng = np.random.default_rng(5)
    for mid in (1, 2, 3, 6):
        grid = GridSpec(6, 6, mid)
        for _ in range(100):
            za, zb = (
                zone_of(_random_sites(rng, grid, int(rng.integers(1, 4))), grid)
                for _ in range(2)
            )
            assert conflicts(za, zb) == conflicts(zb, za)


def test_shortest_path(grid3):
    """
    """
    hw = HardwareState(grid3)
    path = shortest_path(hw, 0, [8])
    assert len(path) == 5
    assert path[0] == 0 and path[-1] == 8
    for u, v in zip(path, path[1:]):
        assert np.isclose(grid3.distance(u, v), 1)

    path = shortest_path(hw, 0, [8], blocked=[4])
    assert len(path) == 5
    assert 4 not in path

    assert shortest_path(hw, 3, [3, 5]) == [3]
    assert shortest_path(hw, 0, [1, 2]) == [0, 1]
    assert shortest_path(HardwareState(grid3, [1, 3]), 0, [8]) is None
    with pytest.raises(ValueError):
        shortest_path(HardwareState(grid3, [0]), 0, [8])


def test_sites_within(grid3):
    """
    """
    hw = HardwareState(grid3)
    assert sites_within(4, 1, hw) == [1, 3, 5, 7]
    assert sites_within(4, np.sqrt(2), hw) == [0, 1, 2, 3, 5, 6, 7, 8]
    assert sites_within(4, 1, hw.with_lost([1]), exclude=[7]) == [3, 5]
