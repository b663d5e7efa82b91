"""Neighbourhoods, PCA frames, and conversion between world space and patches."""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from . import exceptions

log = logging.getLogger(__name__)

CENTER_STRATEGIES = ('all', 'poisson_stride')

# relative eigenvalue floor below which a covariance direction counts as empty
RANK_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class Frame:
    """ Right-handed orthonormal tangent frame anchored at a patch centroid """
    origin: np.ndarray
    tangent_u: np.ndarray
    tangent_v: np.ndarray
    normal: np.ndarray

    @property
    def rotation(self):
        """ 3x3 matrix whose rows are tangent_u, tangent_v, normal """
        return np.vstack([self.tangent_u, self.tangent_v, self.normal])


@dataclass(frozen=True, eq=False)
class Patch:
    """ One local signal: heights `values` sampled on the irregular `grid`.

    grid and values are in patch units: world offsets divided by `scale`.
    `indices` point back into the cloud the patch was cut from.
    """
    frame: Frame
    grid: np.ndarray
    values: np.ndarray
    scale: float
    indices: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64).reshape(-1, 2)
        values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        indices = np.asarray(self.indices, dtype=np.intp).reshape(-1)
        if not (len(grid) == len(values) == len(indices)):
            raise exceptions.DimensionMismatchFailure(
                'grid, values and indices differ in length: %d, %d, %d' % (len(grid), len(values), len(indices)))
        if not self.scale > 0:
            raise exceptions.InvalidParameterFailure('patch scale must be > 0, got %r' % (self.scale,))
        object.__setattr__(self, 'grid', grid)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'indices', indices)

    def __len__(self):
        return len(self.values)


class CloudIndex(object):
    """ k-d tree over a cloud, built once and then only queried.

    Query results are re-filtered with the exact Euclidean test so they are
    identical to a brute-force scan.
    """

    def __init__(self, cloud):
        self.cloud = cloud
        self.points = cloud.points
        self._tree = cKDTree(self.points) if len(cloud) else None

    def neighbors(self, center_index, radius):
        if not radius > 0:
            raise exceptions.InvalidParameterFailure('radius must be > 0, got %r' % (radius,))
        n = len(self.points)
        if not 0 <= center_index < n:
            raise IndexError('center index %d out of range for %d points' % (center_index, n))
        center = self.points[center_index]
        candidates = self._tree.query_ball_point(center, radius * (1.0 + 1e-9) + 1e-300)
        candidates = np.array(sorted(candidates), dtype=np.intp)
        distances = np.linalg.norm(self.points[candidates] - center, axis=1)
        return candidates[distances <= radius]


def neighbors(cloud, center_index, radius, index=None):
    """ Indices (sorted) of every point within `radius` of the centre point, centre included """
    index = index if index is not None else CloudIndex(cloud)
    return index.neighbors(center_index, radius)


def _orient(vector):
    """ Flip so the largest-magnitude component is positive, earliest axis on ties """
    axis = int(np.argmax(np.abs(vector)))
    return -vector if vector[axis] < 0 else vector


def fit_frame(points):
    """ PCA plane through the centroid of `points`.

    normal is the smallest-eigenvalue direction of the covariance, tangent_u the
    largest; both are oriented by _orient and tangent_v = normal x tangent_u.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) < 3:
        raise exceptions.DegeneratePatchFailure('need at least 3 points to fit a frame, got %d' % len(points))
    origin = points.mean(axis=0)
    centered = points - origin
    covariance = centered.T @ centered / len(points)
    eigenvalues, eigenvectors = scipy.linalg.eigh(covariance)
    if eigenvalues[1] <= RANK_TOLERANCE * max(eigenvalues[2], np.finfo(float).tiny):
        raise exceptions.DegeneratePatchFailure(
            'points are collinear or coincident (covariance eigenvalues %s)' % eigenvalues)

    normal = _orient(eigenvectors[:, 0])
    normal = normal / np.linalg.norm(normal)
    tangent_u = _orient(eigenvectors[:, 2])
    tangent_u = tangent_u - np.dot(tangent_u, normal) * normal
    tangent_u = tangent_u / np.linalg.norm(tangent_u)
    tangent_v = np.cross(normal, tangent_u)
    return Frame(origin=origin, tangent_u=tangent_u, tangent_v=tangent_v, normal=normal)


def extract_patch(cloud, center_index, radius, index=None):
    """ Cut the ball around a point and express it in its PCA frame """
    members = neighbors(cloud, center_index, radius, index=index)
    points = cloud.points[members]
    frame = fit_frame(points)
    local = (points - frame.origin) @ frame.rotation.T
    # the centroid need not be the ball centre, so in-plane offsets may exceed radius
    scale = max(float(radius), float(np.max(np.linalg.norm(local[:, :2], axis=1))))
    local = local / scale
    grid = np.clip(local[:, :2], -1.0, 1.0)
    return Patch(frame=frame, grid=grid, values=local[:, 2], scale=scale, indices=members)


def patch_to_world(patch, new_values):
    """ Map heights over the patch grid back to world coordinates """
    new_values = np.asarray(new_values, dtype=np.float64).reshape(-1)
    if len(new_values) != len(patch.grid):
        raise exceptions.DimensionMismatchFailure(
            'expected %d values for the patch grid, got %d' % (len(patch.grid), len(new_values)))
    local = np.column_stack([patch.grid, new_values])
    return patch.frame.origin + patch.scale * (local @ patch.frame.rotation)


def select_patch_centers(cloud, radius, strategy='all', index=None):
    """ Choose patch centres.

    `all` uses every point. `poisson_stride` walks the cloud in order and
    takes each point not yet within `radius` of a chosen centre, so every
    point ends up covered by at least one centre.
    """
    if not radius > 0:
        raise exceptions.InvalidParameterFailure('radius must be > 0, got %r' % (radius,))
    if strategy not in CENTER_STRATEGIES:
        raise exceptions.InvalidParameterFailure(
            'unknown centre strategy %r (expected one of %s)' % (strategy, ', '.join(CENTER_STRATEGIES)))
    n = len(cloud)
    if strategy == 'all':
        return np.arange(n, dtype=np.intp)

    index = index if index is not None else CloudIndex(cloud)
    covered = np.zeros(n, dtype=bool)
    centers = []
    for i in range(n):
        if covered[i]:
            continue
        centers.append(i)
        covered[index.neighbors(i, radius)] = True
    log.debug('Selected %d of %d points as patch centres', len(centers), n)
    return np.array(centers, dtype=np.intp)
