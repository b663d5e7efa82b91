"""Patch-based denoising and evaluation metrics."""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from . import basis
from . import cloud_io
from . import exceptions
from . import geometry
from . import pursuit
from . import utils
from .pursuit import PursuitParams

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DenoiseParams:
    radius: float
    center_strategy: str = 'poisson_stride'
    pursuit: PursuitParams = field(default_factory=PursuitParams)
    solver: str = 'relaxed'
    min_patch_points: int = 3
    # noise std estimate in world units; sets lambda when pursuit.lam is 0
    noise_sigma: Optional[float] = None
    threads: Optional[int] = None

    def __post_init__(self):
        if not self.radius > 0:
            raise exceptions.InvalidParameterFailure('radius must be > 0, got %r' % (self.radius,))
        if self.center_strategy not in geometry.CENTER_STRATEGIES:
            raise exceptions.InvalidParameterFailure('unknown centre strategy %r' % (self.center_strategy,))
        if self.solver not in pursuit.SOLVERS:
            raise exceptions.InvalidParameterFailure('unknown solver %r' % (self.solver,))
        if int(self.min_patch_points) != self.min_patch_points or self.min_patch_points < 3:
            raise exceptions.InvalidParameterFailure(
                'min_patch_points must be an integer >= 3, got %r' % (self.min_patch_points,))
        if self.noise_sigma is not None and not self.noise_sigma >= 0:
            raise exceptions.InvalidParameterFailure('noise_sigma must be >= 0, got %r' % (self.noise_sigma,))
        if self.solver == 'relaxed' and not self.pursuit.lam > 0 and not self.noise_sigma:
            raise exceptions.InvalidParameterFailure('the relaxed solver needs lambda > 0 or a noise_sigma estimate')

    @property
    def patch_threshold(self):
        """ Patches with fewer points than this are skipped """
        return max(self.min_patch_points, self.pursuit.sparsity_L + 1)


@dataclass(eq=False)
class DenoiseReport:
    n_patches: int
    n_skipped: int
    per_point_coverage: np.ndarray
    mean_residual: float

    @property
    def n_uncovered(self):
        return int(np.sum(self.per_point_coverage == 0))

    def as_dict(self):
        coverage = self.per_point_coverage
        return {
            'n_patches': self.n_patches,
            'n_skipped': self.n_skipped,
            'n_points': len(coverage),
            'n_uncovered': self.n_uncovered,
            'coverage_min': int(coverage.min()) if len(coverage) else 0,
            'coverage_max': int(coverage.max()) if len(coverage) else 0,
            'coverage_mean': float(coverage.mean()) if len(coverage) else 0.0,
            'mean_residual': self.mean_residual,
        }

    def to_text(self):
        lines = []
        for key, value in self.as_dict().items():
            if isinstance(value, float):
                value = utils.format_float(value)
            lines.append('%s %s' % (key, value))
        return '\n'.join(lines) + '\n'


def _patch_params(patch, params):
    if params.solver != 'relaxed' or params.pursuit.lam > 0:
        return params.pursuit
    # sigma in world units becomes sigma / scale in patch units
    lam = pursuit.default_lambda(params.noise_sigma / patch.scale, len(patch))
    return pursuit.PursuitParams(sparsity_L=params.pursuit.sparsity_L,
                                 residual_tol=params.pursuit.residual_tol,
                                 lam=lam,
                                 max_iters=params.pursuit.max_iters)


def denoise_patch(patch, dictionary, params):
    """ Code one patch and return (world estimates of its points, coding residual) """
    code = pursuit.code_patch(patch, dictionary, _patch_params(patch, params), solver=params.solver)
    heights = basis.reconstruct_signal(dictionary, code, patch.grid)
    return geometry.patch_to_world(patch, heights), code.residual


def denoise(cloud, dictionary, params):
    """ Denoise by coding overlapping patches and averaging the per-point estimates.

    Only normal heights are replaced; in-plane positions are kept. Points
    outside every usable patch are returned unchanged.
    """
    if len(cloud) == 0:
        raise exceptions.EmptyCloudFailure('cannot denoise an empty cloud')
    index = geometry.CloudIndex(cloud)
    centers = geometry.select_patch_centers(cloud, params.radius, params.center_strategy, index=index)
    threshold = params.patch_threshold

    def work(center):
        try:
            patch = geometry.extract_patch(cloud, center, params.radius, index=index)
        except exceptions.DegeneratePatchFailure as e:
            log.debug('Skipping degenerate patch at %d: %s', center, e)
            return None
        if len(patch) < threshold:
            log.debug('Skipping patch at %d with %d points', center, len(patch))
            return None
        estimates, residual = denoise_patch(patch, dictionary, params)
        return patch.indices, estimates, residual

    results = utils.parallel_map(work, centers, params.threads)

    sums = np.zeros_like(cloud.points)
    counts = np.zeros(len(cloud), dtype=np.int64)
    residuals = []
    skipped = 0
    for result in results:
        if result is None:
            skipped += 1
            continue
        indices, estimates, residual = result
        np.add.at(sums, indices, estimates)
        np.add.at(counts, indices, 1)
        residuals.append(float(residual @ residual) / len(residual))

    covered = counts > 0
    points = cloud.points.copy()
    points[covered] = sums[covered] / counts[covered, None]
    report = DenoiseReport(
        n_patches=len(residuals),
        n_skipped=skipped,
        per_point_coverage=counts,
        mean_residual=float(np.mean(residuals)) if residuals else 0.0,
    )
    if skipped:
        log.warning('Skipped %d of %d patches', skipped, len(centers))
    if report.n_uncovered:
        log.warning('%d points were not covered by any patch and are unchanged', report.n_uncovered)
    log.info('Denoised %d points with %d patches', len(cloud), report.n_patches)
    return cloud_io.PointCloud(points, name=cloud.name), report


def chamfer_distance(a, b):
    """ Symmetric Chamfer distance: the two mean nearest-neighbour distances, averaged """
    if len(a) == 0 or len(b) == 0:
        raise exceptions.EmptyCloudFailure('chamfer distance needs two non-empty clouds')
    a_to_b, _ = cKDTree(b.points).query(a.points)
    b_to_a, _ = cKDTree(a.points).query(b.points)
    return (float(np.mean(a_to_b)) + float(np.mean(b_to_a))) / 2.0


def rmse_to_surface(cloud, shape):
    """ Root-mean-square distance of the points to an analytic surface """
    if len(cloud) == 0:
        return 0.0
    distances = cloud_io.analytic_distance(cloud.points, shape)
    return float(np.sqrt(np.mean(distances ** 2)))
