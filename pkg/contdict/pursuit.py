"""Gridless sparse coding: the dictionary is sampled on each patch's own grid
and the resulting design matrix is handed to a greedy or convex solver."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
import scipy.linalg

from . import basis
from . import exceptions

log = logging.getLogger(__name__)

SOLVERS = ('omp', 'relaxed')

# OMP stops once the residual is this small relative to the signal
EXACT_FIT_RTOL = 1e-12
# columns whose grid norm falls below this (relative to the largest) are never selected
ZERO_COLUMN_RTOL = 1e-12
RELAXED_OBJECTIVE_RTOL = 1e-10
PRUNE_THRESHOLD = 1e-12
DEFAULT_LAMBDA_FACTOR = 1.5


@dataclass(eq=False)
class SparseCode:
    """ Sparse coefficient vector over M atoms.

    `residual` holds y - D(G) z on the grid the code was computed on, when known.
    """
    length: int
    entries: Dict[int, float] = field(default_factory=dict)
    residual: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        entries = {}
        for m, z in self.entries.items():
            m = int(m)
            if not 0 <= m < self.length:
                raise IndexError('atom %d out of range for %d atoms' % (m, self.length))
            z = float(z)
            if not np.isfinite(z):
                raise exceptions.InvalidParameterFailure('coefficient of atom %d is not finite' % m)
            if z != 0.0:
                entries[m] = z
        self.entries = entries

    def __eq__(self, other):
        if not isinstance(other, SparseCode):
            return NotImplemented
        return self.length == other.length and self.entries == other.entries

    def __len__(self):
        return len(self.entries)

    @property
    def support(self):
        return sorted(self.entries)

    def to_dense(self):
        z = np.zeros(self.length)
        for m, value in self.entries.items():
            z[m] = value
        return z

    @classmethod
    def from_dense(cls, z, threshold=0.0, residual=None):
        z = np.asarray(z, dtype=np.float64).reshape(-1)
        keep = np.flatnonzero(np.abs(z) > threshold)
        return cls(len(z), {int(m): float(z[m]) for m in keep}, residual=residual)

    @property
    def residual_norm(self):
        return None if self.residual is None else float(np.linalg.norm(self.residual))


@dataclass(frozen=True)
class PursuitParams:
    sparsity_L: int = 4
    residual_tol: float = 0.0
    lam: float = 0.0
    max_iters: int = 1000

    def __post_init__(self):
        if int(self.sparsity_L) != self.sparsity_L or self.sparsity_L < 0:
            raise exceptions.InvalidParameterFailure('sparsity_L must be an integer >= 0, got %r' % (self.sparsity_L,))
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise exceptions.InvalidParameterFailure('max_iters must be an integer >= 1, got %r' % (self.max_iters,))
        if not self.residual_tol >= 0:
            raise exceptions.InvalidParameterFailure('residual_tol must be >= 0, got %r' % (self.residual_tol,))
        if not self.lam >= 0:
            raise exceptions.InvalidParameterFailure('lambda must be >= 0, got %r' % (self.lam,))


def default_lambda(sigma_hat, n_points):
    """ l1 weight for a patch of n_points samples with noise std sigma_hat (patch units) """
    return DEFAULT_LAMBDA_FACTOR * sigma_hat * np.sqrt(n_points)


def _check_problem(values, design):
    y = np.asarray(values, dtype=np.float64).reshape(-1)
    D = np.asarray(design, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != len(y):
        raise exceptions.DimensionMismatchFailure(
            'design matrix of shape %s does not match %d values' % (D.shape, len(y)))
    return y, D


def omp(values, design, params):
    """ Orthogonal matching pursuit with at most params.sparsity_L atoms.

    Each step picks the column with the largest |<d_m, r>| / ||d_m|| (grid
    norms, lowest index on ties) and refits all selected coefficients by
    minimum-norm least squares.
    """
    y, D = _check_problem(values, design)
    n_atoms = D.shape[1]
    norms = np.linalg.norm(D, axis=0)
    usable = norms > ZERO_COLUMN_RTOL * max(norms.max(initial=0.0), np.finfo(float).tiny)
    signal_norm = np.linalg.norm(y)
    stop_norm = max(params.residual_tol, EXACT_FIT_RTOL * signal_norm)

    support = []
    coef = np.zeros(0)
    residual = y.copy()
    while len(support) < min(params.sparsity_L, n_atoms):
        if np.linalg.norm(residual) <= stop_norm:
            break
        scores = np.full(n_atoms, -np.inf)
        scores[usable] = np.abs(D[:, usable].T @ residual) / norms[usable]
        scores[support] = -np.inf
        best = int(np.argmax(scores))
        if not scores[best] > 0:
            break
        support.append(best)
        coef, _, rank, _ = scipy.linalg.lstsq(D[:, support], y, lapack_driver='gelsd')
        if rank < len(support):
            log.warning('Rank-deficient OMP refit (%d columns, rank %d); using minimum-norm solution',
                        len(support), rank)
        residual = y - D[:, support] @ coef

    code = SparseCode(n_atoms, {m: z for m, z in zip(support, coef)}, residual=residual)
    log.debug('OMP selected %s, residual %.3g', code.support, np.linalg.norm(residual))
    return code


def relaxed_pursuit(values, design, params, callback=None):
    """ Minimize 1/2 ||y - D z||^2 + lam ||z||_1 by proximal gradient steps.

    The step is 1 / sigma_max(D)^2, so the objective never increases. Stops
    after params.max_iters iterations or when the relative objective change
    drops below 1e-10. `callback(iteration, objective)` is called after every
    iteration.
    """
    y, D = _check_problem(values, design)
    lam = params.lam
    n_atoms = D.shape[1]
    z = np.zeros(n_atoms)
    sigma_max = scipy.linalg.svdvals(D)[0] if D.size else 0.0
    if sigma_max == 0.0:
        return SparseCode(n_atoms, residual=y.copy())
    step = 1.0 / sigma_max ** 2

    def objective(z):
        r = y - D @ z
        return 0.5 * float(r @ r) + lam * float(np.abs(z).sum())

    current = objective(z)
    for iteration in range(params.max_iters):
        gradient = D.T @ (D @ z - y)
        shifted = z - step * gradient
        z = np.sign(shifted) * np.maximum(np.abs(shifted) - lam * step, 0.0)
        previous, current = current, objective(z)
        if callback is not None:
            callback(iteration, current)
        if abs(previous - current) < RELAXED_OBJECTIVE_RTOL * max(abs(previous), np.finfo(float).tiny):
            break

    z[np.abs(z) < PRUNE_THRESHOLD] = 0.0
    code = SparseCode.from_dense(z, residual=y - D @ z)
    log.debug('Relaxed pursuit stopped after %d iterations with %d atoms', iteration + 1, len(code))
    return code


def solve(values, design, params, solver='omp'):
    if solver == 'omp':
        return omp(values, design, params)
    if solver == 'relaxed':
        if not params.lam > 0:
            raise exceptions.InvalidParameterFailure('the relaxed solver needs lambda > 0')
        return relaxed_pursuit(values, design, params)
    raise exceptions.InvalidParameterFailure('unknown solver %r (expected one of %s)' % (solver, ', '.join(SOLVERS)))


def code_patch(patch, dictionary, params, solver='omp'):
    """ Sample the dictionary on the patch grid and sparse-code the patch values """
    if len(patch) == 0:
        raise exceptions.DegeneratePatchFailure('cannot code an empty patch')
    design = basis.sample_dictionary(dictionary, patch.grid)
    return solve(patch.values, design, params, solver=solver)
