"""
Local aggregation of p-values into p*-values.
"""

from enum import Enum
import logging

import numpy as np

from .errors import DimsMismatchError, InvalidSpecError
from .lattice_grid import Lattice, NeighborhoodTable

logger = logging.getLogger("spatialfdr.aggregate")


class FilterKind(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidSpecError(
                f"Unknown filter '{value}'. Use median or mean") from None


def median_rows(values: np.ndarray) -> np.ndarray:
    """
    Row-wise median by partial selection.

    Even row lengths give the midpoint of the two central order statistics.
    """
    k = values.shape[1]
    half = k // 2
    if k % 2:
        return np.partition(values, half, axis=1)[:, half]
    part = np.partition(values, (half - 1, half), axis=1)
    return (part[:, half - 1] + part[:, half]) / 2.0


def aggregate(p: Lattice, nbrs: NeighborhoodTable,
              filter=FilterKind.MEDIAN) -> Lattice:
    """
    Aggregate p-values over each site's neighborhood.

    Sites sharing a neighborhood size are processed as one block.

    Args:
        p: p-value lattice, values in [0, 1]
        nbrs: Neighborhood table built for p.dims
        filter: FilterKind.MEDIAN or FilterKind.MEAN

    Returns:
        Lattice of p*-values with the dims of p
    """
    kind = FilterKind.parse(filter)
    if tuple(p.dims) != tuple(nbrs.dims):
        raise DimsMismatchError(
            f"p-values have dims {list(p.dims)}, neighborhoods were built "
            f"for {list(nbrs.dims)}")
    p.check_unit_interval("p-values")

    out = np.empty(p.size, dtype=np.float64)
    for k, sites in nbrs.size_groups():
        block = p.values[nbrs.index[sites, :k]]
        if kind is FilterKind.MEDIAN:
            out[sites] = median_rows(block)
        else:
            out[sites] = block.mean(axis=1)

    logger.debug("Aggregated %d sites with %s filter (%s)", p.size,
                 kind.value, nbrs.spec.label())
    return Lattice(p.dims, out)
