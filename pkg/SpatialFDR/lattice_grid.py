"""
Lattice data model and neighborhood construction for 2D/3D sites.

A lattice stores one scalar per site in row-major order next to its
dimensions, so 2D and 3D fields share every code path. Neighborhoods are
realized once per (dims, spec) pair as a padded index table; aggregation and
Method II resampling read from that table.

Neighborhood shapes:
    - cross2d5: site plus its 4 axis neighbours (2D)
    - cross3d7: site plus its 6 axis neighbours (3D)
    - knn(k): the k sites nearest in Euclidean distance, self first, ties
      broken by lexicographic offset order
    - radius(r): every site whose offset has Euclidean norm <= r

Border policies:
    - truncate: offsets falling outside the lattice are dropped
    - mirror: offsets are reflected back into the lattice (-1 -> 0,
      n -> n-1), so every site keeps the interior neighborhood size.
      Border sites then hold repeated p-values: at a cross2d5 corner the
      site itself appears three times out of five, so its median is its
      own p-value and follows the uniform law, not the Beta median law.
      The Beta null is exact at interior sites only.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple
import logging

import numpy as np

from .errors import InvalidLatticeError, InvalidSpecError

logger = logging.getLogger("spatialfdr.grid")

SHAPES = ("cross2d5", "cross3d7", "knn", "radius")
BORDERS = ("truncate", "mirror")

INIT_BORDER = "truncate"


def _as_dims(dims) -> Tuple[int, ...]:
    try:
        dims = tuple(int(d) for d in dims)
    except (TypeError, ValueError):
        raise InvalidLatticeError(f"dims must be a sequence of integers, "
                                  f"got {dims!r}") from None
    if len(dims) not in (2, 3):
        raise InvalidLatticeError(
            f"Only 2D and 3D lattices are supported, got dims {list(dims)}")
    if any(d < 1 for d in dims):
        raise InvalidLatticeError(f"dims must be positive, got {list(dims)}")
    return dims


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Lattice:
    """
    Dense scalar field over a 2D or 3D grid.

    Args:
        dims: Lattice dimensions, length 2 or 3
        values: Site values, flat row-major or already shaped like dims
    """
    dims: Tuple[int, ...]
    values: np.ndarray = field(repr=False)

    dtype = np.float64

    def __post_init__(self):
        dims = _as_dims(self.dims)
        values = np.array(self.values, dtype=self.dtype).reshape(-1)
        if values.size != int(np.prod(dims)):
            raise InvalidLatticeError(
                f"Lattice with dims {list(dims)} needs {int(np.prod(dims))} "
                f"values, got {values.size}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "values", _freeze(values))

    @classmethod
    def from_array(cls, array):
        array = np.asarray(array)
        return cls(array.shape, array.reshape(-1))

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return self.values.size

    def as_array(self) -> np.ndarray:
        """Read-only view shaped like dims."""
        return self.values.reshape(self.dims)

    def check_unit_interval(self, what="values"):
        """Raise InvalidLatticeError unless every value lies in [0, 1]."""
        values = self.values
        if np.isnan(values).any():
            raise InvalidLatticeError(f"{what} contain NaN")
        if values.size and (values.min() < 0.0 or values.max() > 1.0):
            raise InvalidLatticeError(
                f"{what} must lie in [0, 1], found range "
                f"[{values.min():.6g}, {values.max():.6g}]")
        return self

    def same_dims(self, other) -> bool:
        return tuple(self.dims) == tuple(other.dims)


class BooleanLattice(Lattice):
    """Lattice of 0/1 flags, stored one byte per site on disk."""
    dtype = np.bool_

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.values))


class TruthMask(BooleanLattice):
    """True marks a signal site, False a null site."""


@dataclass(frozen=True)
class NeighborhoodSpec:
    """
    Shape and border policy of a neighborhood.

    param holds k for knn and r for radius; cross shapes take no parameter.
    """
    shape: str
    param: Optional[float] = None
    border: str = INIT_BORDER

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise InvalidSpecError(
                f"Unknown neighborhood shape '{self.shape}'. "
                f"Use one of: {', '.join(SHAPES)}")
        if self.border not in BORDERS:
            raise InvalidSpecError(
                f"Unknown border policy '{self.border}'. "
                f"Use one of: {', '.join(BORDERS)}")
        if self.shape == "knn":
            if self.param is None or int(self.param) != self.param:
                raise InvalidSpecError(
                    f"knn needs an integer k, got {self.param!r}")
            if self.param < 1:
                raise InvalidSpecError(f"knn needs k >= 1, got {self.param}")
            object.__setattr__(self, "param", int(self.param))
        elif self.shape == "radius":
            if self.param is None or not float(self.param) > 0:
                raise InvalidSpecError(
                    f"radius needs r > 0, got {self.param!r}")
            object.__setattr__(self, "param", float(self.param))
        elif self.param is not None:
            raise InvalidSpecError(f"{self.shape} takes no parameter")

    @classmethod
    def parse(cls, text: str, ndim: int = 2, border: str = INIT_BORDER):
        """
        Parse the command line form: cross5, cross7, knn:K or radius:R.

        An empty text selects the default cross shape for ndim.
        """
        text = (text or "").strip().lower()
        if not text:
            return cls.default_for(ndim, border)
        aliases = {"cross5": "cross2d5", "cross2d5": "cross2d5",
                   "cross7": "cross3d7", "cross3d7": "cross3d7"}
        if text in aliases:
            return cls(aliases[text], None, border)
        name, sep, value = text.partition(":")
        if not sep or name not in ("knn", "radius"):
            raise InvalidSpecError(
                f"Cannot parse neighborhood '{text}'. "
                "Use cross5, cross7, knn:K or radius:R")
        try:
            number = int(value) if name == "knn" else float(value)
        except ValueError:
            raise InvalidSpecError(
                f"Bad {name} parameter '{value}'") from None
        return cls(name, number, border)

    @classmethod
    def default_for(cls, ndim: int, border: str = INIT_BORDER):
        return cls("cross3d7" if ndim == 3 else "cross2d5", None, border)

    def label(self) -> str:
        if self.shape == "knn":
            return f"knn:{self.param}"
        if self.shape == "radius":
            return f"radius:{self.param:g}"
        return "cross5" if self.shape == "cross2d5" else "cross7"

    def to_dict(self):
        return {"shape": self.shape, "param": self.param,
                "border": self.border}


def _cross_offsets(ndim: int) -> np.ndarray:
    offsets = [np.zeros(ndim, dtype=np.int64)]
    for axis in range(ndim):
        for step in (-1, 1):
            offset = np.zeros(ndim, dtype=np.int64)
            offset[axis] = step
            offsets.append(offset)
    return np.array(offsets)


def _box_offsets(ndim: int, m: int) -> np.ndarray:
    axes = [np.arange(-m, m + 1)] * ndim
    grid = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.reshape(-1) for g in grid], axis=1).astype(np.int64)


def _sort_offsets(offsets: np.ndarray) -> np.ndarray:
    # distance first, then lexicographic offset order; self (0,..) leads
    dist2 = (offsets ** 2).sum(axis=1)
    keys = [offsets[:, axis] for axis in reversed(range(offsets.shape[1]))]
    order = np.lexsort(keys + [dist2])
    return offsets[order]


def neighborhood_offsets(spec: NeighborhoodSpec, ndim: int) -> np.ndarray:
    """
    Interior offsets of a neighborhood, shape (K, ndim), self first.
    """
    if spec.shape == "cross2d5":
        if ndim != 2:
            raise InvalidSpecError(
                f"cross2d5 needs a 2D lattice, got {ndim}D")
        return _cross_offsets(2)
    if spec.shape == "cross3d7":
        if ndim != 3:
            raise InvalidSpecError(
                f"cross3d7 needs a 3D lattice, got {ndim}D")
        return _cross_offsets(3)

    if spec.shape == "radius":
        m = int(np.floor(spec.param))
        box = _box_offsets(ndim, m)
        inside = (box ** 2).sum(axis=1) <= spec.param ** 2
        return _sort_offsets(box[inside])

    # knn: grow the box until the ball of radius m holds at least k points,
    # then every point closer than the k-th lies inside the box
    k = spec.param
    m = 1
    while True:
        box = _box_offsets(ndim, m)
        if np.count_nonzero((box ** 2).sum(axis=1) <= m * m) >= k:
            break
        m += 1
    return _sort_offsets(box)[:k]


def _reflect(coords: np.ndarray, n: int) -> np.ndarray:
    period = 2 * n
    folded = np.mod(coords, period)
    return np.where(folded >= n, period - 1 - folded, folded)


@dataclass(frozen=True)
class NeighborhoodTable:
    """
    Per-site neighbor index lists.

    index has shape (n_sites, K); row v holds the flat indices of N_v in its
    first sizes[v] columns (self first), padded with -1.
    """
    dims: Tuple[int, ...]
    spec: NeighborhoodSpec
    index: np.ndarray = field(repr=False)
    sizes: np.ndarray = field(repr=False)

    @property
    def n_sites(self) -> int:
        return self.index.shape[0]

    @property
    def interior_size(self) -> int:
        """Neighborhood size k away from the borders."""
        return self.index.shape[1]

    def neighbors(self, site: int) -> np.ndarray:
        return self.index[site, :self.sizes[site]]

    def neighbors_at(self, coords) -> np.ndarray:
        """Neighbor coordinates of the site at coords, shape (k_v, ndim)."""
        site = np.ravel_multi_index(tuple(int(c) for c in coords), self.dims)
        flat = self.neighbors(site)
        return np.stack(np.unravel_index(flat, self.dims), axis=1)

    def size_groups(self):
        """Yield (k, site indices) for each distinct neighborhood size."""
        for k in np.unique(self.sizes):
            yield int(k), np.flatnonzero(self.sizes == k)


def build_neighborhoods(dims, spec: NeighborhoodSpec) -> NeighborhoodTable:
    """
    Realize a neighborhood spec on a lattice.

    Args:
        dims: Lattice dimensions (2 or 3 entries)
        spec: Neighborhood shape and border policy

    Returns:
        NeighborhoodTable with one row per site

    Raises:
        InvalidSpecError: knn(k) with more neighbors than sites, or a cross
            shape whose dimensionality disagrees with dims
    """
    dims = _as_dims(dims)
    n_sites = int(np.prod(dims))
    if spec.shape == "knn" and spec.param > n_sites:
        raise InvalidSpecError(
            f"knn({spec.param}) needs at least {spec.param} sites, "
            f"lattice has {n_sites}")

    offsets = neighborhood_offsets(spec, len(dims))
    coords = np.indices(dims).reshape(len(dims), -1).T

    # candidate coordinates, shape (n_sites, K, ndim)
    cand = coords[:, None, :] + offsets[None, :, :]
    shape = np.array(dims)
    if spec.border == "mirror":
        for axis, n in enumerate(dims):
            cand[..., axis] = _reflect(cand[..., axis], n)
        valid = np.ones(cand.shape[:2], dtype=bool)
    else:
        valid = ((cand >= 0) & (cand < shape)).all(axis=2)
        cand = np.where(valid[..., None], cand, 0)

    flat = np.ravel_multi_index(tuple(np.moveaxis(cand, 2, 0)), dims)
    flat = np.where(valid, flat, -1)

    # pack valid entries first, keeping the stencil order
    order = np.argsort(~valid, axis=1, kind="stable")
    index = np.take_along_axis(flat, order, axis=1).astype(np.int64)
    sizes = valid.sum(axis=1).astype(np.int64)

    logger.debug("Built %s neighborhoods on %s: interior k=%d, min k_v=%d",
                 spec.label(), list(dims), offsets.shape[0], sizes.min())

    return NeighborhoodTable(dims, spec, _freeze(index), _freeze(sizes))
