"""The nine-area worked example with connected and disconnected regions.

The areas sit on a 3x3 layout, numbered so that area 7 is a corner whose only
neighbors are 5 and 6 (5 and 6 themselves touch only diagonally)::

    1 2 3
    5 4 8
    7 6 9

Region 3 = {5, 6, 7} is rooted at 6 and only connected through 7. Moving 7 to
region 1 splits both region 3 ({5, 6}) and region 1 ({3, 8, 9} plus 7).
"""

from __future__ import annotations

import numpy as np

from .dqm import Seeds
from .instance import Assignment, Instance
from .verify import FlowConfig

__all__ = [
    "FIGURE2_LAYOUT",
    "figure2_instance",
    "figure2_seeds",
    "figure2_connected",
    "figure2_disconnected",
    "figure2_region3_flows",
]

FIGURE2_LAYOUT = ((1, 2, 3), (5, 4, 8), (7, 6, 9))
_ATTRS = {1: 2.0, 2: 3.0, 3: 8.0, 4: 2.0, 5: 5.0, 6: 6.0, 7: 5.0, 8: 9.0, 9: 8.0}
_CONNECTED = {1: 2, 2: 2, 4: 2, 3: 1, 8: 1, 9: 1, 5: 3, 6: 3, 7: 3}


def figure2_instance() -> Instance:
    pos = {a: (r, c) for r, row in enumerate(FIGURE2_LAYOUT) for c, a in enumerate(row)}
    names = tuple(str(a) for a in range(1, 10))
    nbrs = []
    for a in range(1, 10):
        r, c = pos[a]
        near = [b for b, (rb, cb) in pos.items() if abs(rb - r) + abs(cb - c) == 1]
        nbrs.append(tuple(sorted(b - 1 for b in near)))
    coords = np.array([[pos[a][1], pos[a][0]] for a in range(1, 10)], dtype=float)
    attrs = np.array([[_ATTRS[a]] for a in range(1, 10)])
    return Instance(names, tuple(nbrs), attrs, 3, coords)


def figure2_seeds() -> Seeds:
    """Roots (internal indices): region 1 at area 9, region 2 at area 1, region 3 at area 6."""
    return Seeds({1: 8, 2: 0, 3: 5})


def figure2_connected() -> Assignment:
    return Assignment([_CONNECTED[a] for a in range(1, 10)])


def figure2_disconnected() -> Assignment:
    labels = dict(_CONNECTED)
    labels[7] = 1
    return Assignment([labels[a] for a in range(1, 10)])


def figure2_region3_flows(connected: bool = True) -> FlowConfig:
    """Region 3 flows of the worked example, internal indices.

    Connected: f_67 = 3, f_76 = 1, f_75 = 1, f_57 = 0. Disconnected: all zero.
    """
    if not connected:
        return FlowConfig({})
    six, seven, five = 5, 6, 4
    return FlowConfig({(six, seven): 3, (seven, six): 1, (seven, five): 1})
