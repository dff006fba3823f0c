import numpy as np


# site spacing of the atom grid, in site units
SPACING = 1.0
# restriction zone radius is the max pairwise operand distance divided
# by this value
ZONE_DIVISOR = 2.0
# smallest MID at which three sites can be pairwise interactable on a
# unit grid
TOFFOLI_MIN_MID = np.sqrt(2)
# a SWAP is costed as this many two-qubit gates
SWAP_CNOTS = 3
# two-qubit gates in the standard Toffoli decomposition
TOFFOLI_CNOTS = 6
# lookahead terms further than this many layers past the current one
# are below e^-20 and are dropped while routing
LOOKAHEAD_HORIZON = 20
# program success threshold for the max runnable size analysis
SUCCESS_THRESHOLD = 2 / 3
