from __future__ import annotations
from typing import List, Union, Tuple
import numpy as np


class Coordinate2:
    """
    A position on the atom grid in site units.  Grid sites have
    integer coordinates but centroids used while routing multiqubit
    gates do not, so floats are accepted.
    """

    def __init__(self, x: float, y: float):
        """
        """
        self._x = x
        self._y = y

    @property
    def x(self) -> float:
        """
        """
        return self._x

    @property
    def y(self) -> float:
        """
        """
        return self._y

    def __getitem__(self, key):
        """
        """
        return self._int_to_coord(key)

    def __eq__(self, other) -> bool:
        """
        """
        other = c2_maybe_tuple(other)
        if not isinstance(other, Coordinate2):
            return NotImplemented
        return self.x == other.x and self.y == other.y

    def __hash__(self) -> int:
        """
        """
        return hash((self.x, self.y))

    def __repr__(self) -> str:
        """
        """
        return "Coordinate2({}, {})".format(self.x, self.y)

    def _int_to_coord(self, val) -> float:
        """
        """
        if val == 0:
            return self.x
        elif val == 1:
            return self.y
        else:
            raise ValueError("Invalid index.")

    def coordinate_list(self) -> List[float]:
        """
        """
        return [self._x, self._y]

    def as_tuple(self) -> Tuple[float, float]:
        """
        """
        return (self._x, self._y)

    def distance(self, other: C2Tuple) -> float:
        """
        Euclidean distance to another coordinate.
        """
        other = c2_maybe_tuple(other)
        return float(np.hypot(self.x - other.x, self.y - other.y))


C2Tuple = Union[Coordinate2, Tuple[float, float]]


def c2_maybe_tuple(coord: C2Tuple) -> Coordinate2:
    """
    Convenience function for classes and functions accepting a
    Coordinate2 parameter.  Sites are almost always written as (x, y)
    tuples, so tuples (and lists or numpy rows of length 2) are
    accepted anywhere a Coordinate2 is.
    """
    if isinstance(coord, Coordinate2):
        return coord
    if isinstance(coord, (tuple, list, np.ndarray)):
        if not len(coord) == 2:
            raise ValueError(
                "Tuples passed as Coordinate2 must have length 2."
            )
        return Coordinate2(coord[0], coord[1])

    return coord


def list_center2(coords: List[C2Tuple]) -> Coordinate2:
    """
    Compute the center of a list of 2D coordinates.
    """
    pts = [c2_maybe_tuple(coord).coordinate_list() for coord in coords]
    center = np.average(pts, axis=0)
    return Coordinate2(center[0], center[1])
