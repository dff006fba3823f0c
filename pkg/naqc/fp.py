"""
Tolerant floating-point comparisons for grid distances.

Site distances are Euclidean norms of integer offsets, so values like
sqrt(2) and sqrt(8) / 2 are produced by different code paths (hypot,
cdist, radius sums) and may differ in the last few bits.  Every
comparison that decides interactability or zone overlap goes through
these helpers so that, e.g., two zones that are exactly tangent are
never reported as overlapping because of rounding.  Values are only
rounded for comparison; stored distances keep full precision.
"""

import numpy as np

# decimal places kept when comparing distances.  Grid distances are
# O(1)-O(100) site units so 10 places is far below any meaningful
# geometric difference.
PREC = 10


def fp_nearest(val_or_arr):
    """
    Round a distance (or array of distances) to the comparison
    precision.
    """
    return np.around(val_or_arr, PREC)


def fp_ltp(val1: float, val2: float) -> bool:
    """
    Test whether the distance ``val1`` is strictly less than
    ``val2`` with respect to the comparison precision.  This is the
    test used for restriction-zone overlap, where tangent circles do
    not overlap.

    :param val1: The first distance.
    :param val2: The second distance.

    :returns: True if ``val1`` less than ``val2``.
    """
    return bool(np.around(val1, PREC) < np.around(val2, PREC))


def fp_lep(val1: float, val2: float) -> bool:
    """
    Test whether the distance ``val1`` is less than or equal to
    ``val2`` with respect to the comparison precision.  This is the
    test used for the maximum interaction distance.

    :param val1: The first distance.
    :param val2: The second distance.

    :returns: True if ``val1`` less than or equal to ``val2``.
    """
    return bool(np.around(val1, PREC) <= np.around(val2, PREC))
