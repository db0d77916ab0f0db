"""Basis matrices for random-effect terms.

Spatial terms use Moran eigenvectors: eigenvectors of the doubly-centered
exponential-kernel proximity matrix over unique locations, keeping the
positive-eigenvalue (positively autocorrelated) pairs.  Covariate-dependent
smooth terms use centered natural cubic splines, and group intercepts use
indicator matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .errors import SpecificationError

MAX_EIGENVECTORS = 200
EIGEN_RTOL = 1e-12

SPATIAL_VC = "spatial_vc"
NONSPATIAL_VC = "nonspatial_vc"
GROUP_INTERCEPT = "group_intercept"
SPATIAL_INTERCEPT = "spatial_intercept"
TEMPORAL_INTERCEPT = "temporal_intercept"

_SPATIAL_KINDS = (SPATIAL_VC, SPATIAL_INTERCEPT)


@dataclass(frozen=True)
class SpatialBasis:
    """Moran eigenvectors over unique locations.

    ``vectors`` is N_u x L with orthonormal columns orthogonal to the
    constant vector; ``eigenvalues`` is the matching strictly positive,
    descending spectrum.  ``ids`` maps location identifiers to rows; when
    the basis was built from bare coordinates the ids are the row indices.
    The kernel column statistics are kept for out-of-sample projection.
    """

    vectors: np.ndarray
    eigenvalues: np.ndarray
    coords: np.ndarray
    kernel_range: float
    ids: tuple
    col_means: np.ndarray
    grand_mean: float

    @property
    def id_to_row(self):
        return {k: i for i, k in enumerate(self.ids)}


def default_kernel_range(coords):
    """Largest nearest-neighbor distance; guarantees every location has a
    neighbor within one kernel range."""
    d = cdist(coords, coords)
    np.fill_diagonal(d, np.inf)
    return float(np.max(np.min(d, axis=1)))


def moran_eigenvectors(coords, kernel_range=None, ids=None, max_vectors=MAX_EIGENVECTORS):
    """Extract positive-eigenvalue Moran eigenvectors.

    Builds C with c_ij = exp(-d_ij / r) and zero diagonal, double-centers
    it, and eigendecomposes.  Eigenpairs with eigenvalue above a round-off
    threshold relative to the largest are kept, sorted descending, capped
    at ``max_vectors`` columns.  Column signs are fixed so the entry of
    largest magnitude is positive.
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise SpecificationError("coords must be an N x 2 array")
    n = coords.shape[0]
    if np.unique(coords, axis=0).shape[0] < 3:
        raise SpecificationError("need at least 3 distinct coordinate pairs")
    if ids is not None:
        ids = tuple(ids)
        if len(ids) != n or len(set(ids)) != n:
            raise SpecificationError("location ids must be unique, one per row")
    else:
        ids = tuple(range(n))

    if kernel_range is None:
        kernel_range = default_kernel_range(coords)
    if kernel_range <= 0:
        raise SpecificationError("kernel_range must be positive")

    d = cdist(coords, coords)
    c = np.exp(-d / kernel_range)
    np.fill_diagonal(c, 0.0)

    row_means = c.mean(axis=1)
    grand = float(c.mean())
    centered = c - row_means[:, None] - row_means[None, :] + grand

    vals, vecs = np.linalg.eigh(centered)
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    keep = vals > EIGEN_RTOL * vals[0] if vals[0] > 0 else np.zeros_like(vals, bool)
    if not np.any(keep):
        raise SpecificationError("proximity matrix has no positive eigenvalues")
    vals, vecs = vals[keep], vecs[:, keep]
    if vals.shape[0] > max_vectors:
        vals, vecs = vals[:max_vectors], vecs[:, :max_vectors]

    flip = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])] < 0
    vecs[:, flip] *= -1.0

    return SpatialBasis(
        vectors=vecs,
        eigenvalues=vals,
        coords=coords,
        kernel_range=float(kernel_range),
        ids=ids,
        col_means=row_means,  # symmetric, so row means double as column means
        grand_mean=grand,
    )


def expand_by_location(sb, location_id):
    """Row-expand eigenvectors: sample i gets the row of its location id."""
    lookup = sb.id_to_row
    try:
        rows = np.asarray([lookup[i] for i in location_id], dtype=int)
    except KeyError as exc:
        raise SpecificationError(f"unknown location id {exc.args[0]!r}") from None
    return sb.vectors[rows]


def project_locations(sb, coords_new):
    """Eigenvector values at new locations via kernel extension.

    Kernel columns against the training locations are centered with the
    training statistics and pushed through E / eigenvalue.  A new point
    coinciding with a training location is treated as that location
    (self-pairs keep the zero kernel used during training), so projecting
    the training coordinates reproduces the stored eigenvectors.  Far from
    the data the projection tends to the data-determined centering
    constant, not to zero.
    """
    coords_new = np.atleast_2d(np.asarray(coords_new, dtype=float))
    dist = cdist(coords_new, sb.coords)
    c0 = np.exp(-dist / sb.kernel_range)
    c0[dist < 1e-12] = 0.0
    centered = c0 - c0.mean(axis=1, keepdims=True) - sb.col_means[None, :] + sb.grand_mean
    return centered @ sb.vectors / sb.eigenvalues[None, :]


def spline_basis(x, knot_count=5):
    """Centered natural cubic spline basis with ``knot_count`` columns.

    Knots sit at equally spaced quantiles of x (boundary knots at the
    extremes); the basis is linear beyond the boundary knots and every
    column has zero mean.
    """
    x = np.asarray(x, dtype=float)
    n_knots = knot_count + 1
    if np.unique(x).shape[0] <= knot_count:
        raise SpecificationError(
            f"need more than {knot_count} distinct values for a "
            f"{knot_count}-column spline basis"
        )
    knots = np.quantile(x, np.linspace(0.0, 1.0, n_knots))
    if np.unique(knots).shape[0] != n_knots:
        raise SpecificationError("quantile knots collide; reduce knot_count")
    cols = [x] + [_natural_spline_col(x, knots, k) for k in range(n_knots - 2)]
    b = np.column_stack(cols)
    return b - b.mean(axis=0)


def _natural_spline_col(x, knots, k):
    # Truncated-power natural spline: d_k - d_{K-2}, where
    # d_j = ((x - knot_j)_+^3 - (x - knot_last)_+^3) / (knot_last - knot_j).
    def d(j):
        num = np.maximum(x - knots[j], 0.0) ** 3 - np.maximum(x - knots[-1], 0.0) ** 3
        return num / (knots[-1] - knots[j])

    return d(k) - d(len(knots) - 2)


def group_basis(ids):
    """N x G indicator matrix; groups ordered by sorted unique id."""
    ids = np.asarray(ids)
    groups, inverse = np.unique(ids, return_inverse=True)
    if groups.shape[0] < 2:
        raise SpecificationError("group intercept needs at least 2 groups")
    out = np.zeros((ids.shape[0], groups.shape[0]))
    out[np.arange(ids.shape[0]), inverse] = 1.0
    return out


@dataclass(frozen=True)
class EffectBlock:
    """One random-effect term, already row-expanded to samples.

    For varying-coefficient kinds the basis columns are the eigenvector or
    spline columns multiplied element-wise by the covariate.  Spatial kinds
    carry the eigenvalue spectrum used in their prior covariance.
    """

    kind: str
    basis: np.ndarray
    eigenvalues: np.ndarray | None = None
    covariate_index: int | None = None
    name: str = ""

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "basis", b)
        if self.kind in _SPATIAL_KINDS:
            if self.eigenvalues is None:
                raise SpecificationError(f"{self.kind} block needs eigenvalues")
            if len(self.eigenvalues) != b.shape[1]:
                raise SpecificationError("eigenvalue count must match columns")
        sv = np.linalg.svd(b, compute_uv=False)
        if sv[-1] <= 1e-10 * sv[0]:
            raise SpecificationError(f"effect block {self.name!r} is rank deficient")

    @property
    def n_cols(self):
        return self.basis.shape[1]

    @property
    def is_spatial(self):
        return self.kind in _SPATIAL_KINDS


def vc_block(expanded_vectors, eigenvalues, covariate, covariate_index, name=""):
    """Spatially varying coefficient block: column l is covariate * e_l."""
    return EffectBlock(
        SPATIAL_VC,
        expanded_vectors * np.asarray(covariate, dtype=float)[:, None],
        eigenvalues=np.asarray(eigenvalues, dtype=float),
        covariate_index=covariate_index,
        name=name,
    )


def nvc_block(x, covariate_index, knot_count=5, name=""):
    """Covariate-dependent (non-spatial) varying coefficient block."""
    b = spline_basis(x, knot_count=knot_count)
    return EffectBlock(
        NONSPATIAL_VC,
        b * np.asarray(x, dtype=float)[:, None],
        covariate_index=covariate_index,
        name=name,
    )
