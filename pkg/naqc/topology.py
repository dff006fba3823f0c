"""
Atom-grid geometry: sites, interaction-distance adjacency,
restriction zones and hole-aware connectivity.

Sites can be named either by row-major index (``y * width + x``) or by
their (x, y) coordinate.  Every function taking a site accepts both.
"""

import logging
from typing import Iterable, List, Optional, Sequence, Union
import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components
from naqc.const import SPACING, ZONE_DIVISOR
from naqc.coordinate import C2Tuple, Coordinate2, c2_maybe_tuple
from naqc.fp import fp_lep, fp_ltp, fp_nearest

logger = logging.getLogger(__name__)

Site = Union[int, C2Tuple]


class GridSpec:
    """
    A ``width`` x ``height`` grid of unit-spaced atom sites with a
    maximum interaction distance (MID) and the divisor of the
    restriction-zone radius function f(d) = d / zone_divisor.

    MID values above the grid diagonal are accepted and behave as
    all-to-all connectivity.
    """

    def __init__(
        self,
        width: int,
        height: int,
        mid: float,
        zone_divisor: float = ZONE_DIVISOR,
    ):
        """
        :param width: Number of sites along x.
        :param height: Number of sites along y.
        :param mid: Maximum interaction distance in site units.
        :param zone_divisor: Zone radius is the max pairwise operand
            distance divided by this value.
        """
        if int(width) != width or int(height) != height:
            raise ValueError("Grid dimensions must be integers.")
        if width < 1 or height < 1:
            raise ValueError(
                "Grid dimensions must be at least 1, got {}x{}.".format(
                    width, height
                )
            )
        if fp_ltp(mid, 1):
            raise ValueError(
                "Max interaction distance must be at least 1, got {}.".format(
                    mid
                )
            )
        if zone_divisor <= 0:
            raise ValueError("Zone divisor must be positive.")
        self._width = int(width)
        self._height = int(height)
        self._mid = float(mid)
        self._zone_divisor = float(zone_divisor)
        self._coords = None
        self._distances = None

    @property
    def width(self) -> int:
        """
        """
        return self._width

    @property
    def height(self) -> int:
        """
        """
        return self._height

    @property
    def mid(self) -> float:
        """
        """
        return self._mid

    @property
    def zone_divisor(self) -> float:
        """
        """
        return self._zone_divisor

    @property
    def spacing(self) -> float:
        """
        """
        return SPACING

    @property
    def num_sites(self) -> int:
        """
        """
        return self._width * self._height

    @property
    def diagonal(self) -> float:
        """
        Largest site separation on the grid.  A MID this large makes
        every pair of sites interactable.
        """
        return float(np.hypot(self._width - 1, self._height - 1))

    def with_mid(self, mid: float) -> "GridSpec":
        """
        Same grid with a different max interaction distance.
        """
        return GridSpec(self._width, self._height, mid, self._zone_divisor)

    def coords(self) -> np.ndarray:
        """
        (num_sites, 2) array of site coordinates in row-major order.
        """
        if self._coords is None:
            ys, xs = np.divmod(np.arange(self.num_sites), self._width)
            self._coords = np.stack([xs, ys], axis=1).astype(float) * SPACING
        return self._coords

    def distances(self) -> np.ndarray:
        """
        (num_sites, num_sites) Euclidean distance matrix.
        """
        if self._distances is None:
            self._distances = cdist(self.coords(), self.coords())
        return self._distances

    def contains(self, coord: C2Tuple) -> bool:
        """
        Whether a coordinate names a grid site.
        """
        coord = c2_maybe_tuple(coord)
        return (
            float(coord.x).is_integer()
            and float(coord.y).is_integer()
            and 0 <= coord.x < self._width
            and 0 <= coord.y < self._height
        )

    def site_index(self, site: Site) -> int:
        """
        Row-major index of a site given as an index or a coordinate.
        """
        if isinstance(site, (int, np.integer)):
            if not 0 <= site < self.num_sites:
                raise ValueError(
                    "Site index {} outside grid of {} sites.".format(
                        site, self.num_sites
                    )
                )
            return int(site)
        coord = c2_maybe_tuple(site)
        if not self.contains(coord):
            raise ValueError(
                "Site {} outside {}x{} grid.".format(
                    coord.as_tuple(), self._width, self._height
                )
            )
        return int(coord.y) * self._width + int(coord.x)

    def site_coord(self, site: Site) -> Coordinate2:
        """
        Coordinate of a site given as an index or a coordinate.
        """
        idx = self.site_index(site)
        y, x = divmod(idx, self._width)
        return Coordinate2(x, y)

    def distance(self, site1: Site, site2: Site) -> float:
        """
        Euclidean distance between two sites in site units.
        """
        return float(
            self.distances()[self.site_index(site1), self.site_index(site2)]
        )

    def zone_radius(self, dist: float) -> float:
        """
        f(d), the restriction-zone radius for a max pairwise operand
        distance d.
        """
        return dist / self._zone_divisor

    def center_site(self) -> int:
        """
        Index of the center site (floor((W-1)/2), floor((H-1)/2)).
        """
        return self.site_index(
            ((self._width - 1) // 2, (self._height - 1) // 2)
        )

    def __eq__(self, other) -> bool:
        """
        """
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (
            self._width == other._width
            and self._height == other._height
            and self._mid == other._mid
            and self._zone_divisor == other._zone_divisor
        )

    def __hash__(self) -> int:
        """
        """
        return hash((self._width, self._height, self._mid, self._zone_divisor))

    def __repr__(self) -> str:
        """
        """
        return "GridSpec({}x{}, mid={:g}, zone_divisor={:g})".format(
            self._width, self._height, self._mid, self._zone_divisor
        )


class HardwareState:
    """
    A grid plus the set of sites whose atoms have been lost.
    """

    def __init__(self, grid: GridSpec, lost: Iterable[int] = ()):
        """
        """
        self._grid = grid
        self._lost = frozenset(grid.site_index(int(site)) for site in lost)

    @property
    def grid(self) -> GridSpec:
        """
        """
        return self._grid

    @property
    def lost(self) -> frozenset:
        """
        """
        return self._lost

    @property
    def usable(self) -> List[int]:
        """
        Usable site indices, ascending.
        """
        return [
            site
            for site in range(self._grid.num_sites)
            if site not in self._lost
        ]

    @property
    def num_usable(self) -> int:
        """
        """
        return self._grid.num_sites - len(self._lost)

    def usable_mask(self) -> np.ndarray:
        """
        Boolean array over all sites, True where the atom is present.
        """
        mask = np.ones(self._grid.num_sites, dtype=bool)
        mask[list(self._lost)] = False
        return mask

    def is_usable(self, site: int) -> bool:
        """
        """
        return site not in self._lost

    def with_lost(self, sites: Iterable[int]) -> "HardwareState":
        """
        New state with additional lost sites.
        """
        return HardwareState(self._grid, self._lost | frozenset(sites))

    def __repr__(self) -> str:
        """
        """
        return "HardwareState({!r}, lost={})".format(
            self._grid, sorted(self._lost)
        )


class Zone:
    """
    Restriction zone of an executing gate: circles of a common radius
    centered on each operand site.
    """

    def __init__(self, centers: Sequence[C2Tuple], radius: float):
        """
        """
        if radius < 0:
            raise ValueError("Zone radius must be nonnegative.")
        self._centers = [c2_maybe_tuple(center) for center in centers]
        self._radius = float(radius)
        self._array = np.array(
            [center.coordinate_list() for center in self._centers], dtype=float
        ).reshape(-1, 2)

    @property
    def centers(self) -> List[Coordinate2]:
        """
        """
        return list(self._centers)

    @property
    def radius(self) -> float:
        """
        """
        return self._radius

    def center_array(self) -> np.ndarray:
        """
        """
        return self._array

    def __repr__(self) -> str:
        """
        """
        return "Zone({}, radius={:g})".format(
            [c.as_tuple() for c in self._centers], self._radius
        )


def distance(a: Site, b: Site, grid: GridSpec) -> float:
    """
    Euclidean distance between two grid sites.
    """
    return grid.distance(a, b)


def interactable(sites: Sequence[Site], grid: GridSpec) -> bool:
    """
    Whether every pair of operand sites lies within the grid's max
    interaction distance.  A single site is always interactable.

    :param sites: 1 to 3 distinct sites.
    :param grid: Grid providing the max interaction distance.
    """
    idx = [grid.site_index(site) for site in sites]
    if len(set(idx)) != len(idx):
        raise ValueError(
            "Gate placed on duplicate sites {}.".format(sorted(idx))
        )
    if len(idx) < 2:
        return True
    dists = grid.distances()[np.ix_(idx, idx)]
    return fp_lep(np.amax(dists), grid.mid)


def zone_of(sites: Sequence[Site], grid: GridSpec) -> Zone:
    """
    Restriction zone for a gate executing on ``sites``.
    """
    coords = [grid.site_coord(site) for site in sites]
    if len(coords) < 2:
        return Zone(coords, 0)
    max_dist = np.amax(pdist([c.coordinate_list() for c in coords]))
    return Zone(coords, grid.zone_radius(max_dist))


def conflicts(za: Zone, zb: Zone) -> bool:
    """
    Whether two restriction zones overlap, i.e. some pair of centers
    is closer than the sum of the radii.  Tangent zones do not
    overlap.  A center strictly inside a circle of the other zone is
    also an overlap under this test, which is what makes a
    single-qubit gate clash with a nearby multiqubit gate.
    """
    if not za.centers or not zb.centers:
        return False
    nearest = np.amin(cdist(za.center_array(), zb.center_array()))
    return fp_ltp(nearest, za.radius + zb.radius)


def _adjacency(hw: HardwareState, sites: Sequence[int]) -> csr_matrix:
    """
    Interaction graph restricted to ``sites``: an edge wherever two
    sites are within MID of each other.
    """
    grid = hw.grid
    dists = grid.distances()[np.ix_(sites, sites)]
    adj = (fp_nearest(dists) <= fp_nearest(grid.mid)) & (dists > 0)
    return csr_matrix(adj.astype(float))


def is_connected(hw: HardwareState) -> bool:
    """
    Whether the usable sites form one connected component under
    MID adjacency.  Zero or one usable site counts as connected.
    """
    usable = hw.usable
    if len(usable) <= 1:
        return True
    n_components, _ = connected_components(
        _adjacency(hw, usable), directed=False
    )
    return n_components == 1


def shortest_path(
    hw: HardwareState,
    source: int,
    targets: Iterable[int],
    blocked: Iterable[int] = (),
) -> Optional[List[int]]:
    """
    Breadth-first shortest path over usable sites with MID adjacency
    from ``source`` to the nearest (in hops) site of ``targets``.
    Among equally near targets the one reached first in breadth-first
    order wins, which favors lower site indices.

    :param hw: Hardware state.  Lost sites are never entered.
    :param source: Starting site.  Must be usable.
    :param targets: Acceptable end sites.
    :param blocked: Sites the path may not pass through or end on.

    :returns: The site sequence from source to target inclusive, or
        None when no target is reachable.  A source that is itself a
        target gives a single-site path.
    """
    blocked = set(blocked)
    blocked.discard(source)
    targets = {t for t in targets if hw.is_usable(t) and t not in blocked}
    if not hw.is_usable(source):
        raise ValueError("Path source {} is a lost site.".format(source))
    if source in targets:
        return [source]
    nodes = [site for site in hw.usable if site not in blocked]
    local = {site: i for i, site in enumerate(nodes)}
    order, preds = breadth_first_order(
        _adjacency(hw, nodes),
        local[source],
        directed=False,
        return_predecessors=True,
    )
    for node in order:
        if nodes[node] in targets:
            path = [nodes[node]]
            while preds[node] >= 0:
                node = preds[node]
                path.append(nodes[node])
            return path[::-1]
    return None


def sites_within(
    site: int, radius: float, hw: HardwareState, exclude: Iterable[int] = ()
) -> List[int]:
    """
    Usable sites within ``radius`` of ``site`` (excluding the site
    itself and ``exclude``), ascending by index.
    """
    exclude = set(exclude)
    exclude.add(site)
    dists = hw.grid.distances()[site]
    return [
        int(other)
        for other in np.flatnonzero(fp_nearest(dists) <= fp_nearest(radius))
        if hw.is_usable(int(other)) and int(other) not in exclude
    ]
