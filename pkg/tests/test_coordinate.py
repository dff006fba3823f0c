import pytest
import numpy as np
from naqc.coordinate import Coordinate2, c2_maybe_tuple, list_center2


def test_coordinate_tuple_equality():
    coord = Coordinate2(1, 2)
    assert coord == (1, 2)
    assert coord[0] == 1 and coord[1] == 2
    assert coord.as_tuple() == (1, 2)
    assert hash(coord) == hash(Coordinate2(1, 2))
    with pytest.raises(ValueError):
        coord[2]


def test_maybe_tuple():
    assert c2_maybe_tuple((3, 4)) == Coordinate2(3, 4)
    assert c2_maybe_tuple(np.array([3, 4])) == Coordinate2(3, 4)
    with pytest.raises(ValueError):
        c2_maybe_tuple((1, 2, 3))


def test_distance():
    assert np.isclose(Coordinate2(0, 0).distance((3, 4)), 5)


def test_list_center():
    center = list_center2([(0, 0), (2, 0), (1, 3)])
    assert np.isclose(center.x, 1)
    assert np.isclose(center.y, 1)
