"""Continuous k-SVD.

Training patches each carry their own grid, so atom m appears as a different
vector Phi(G_i) a_m in every example. The rank-1 SVD step of classical k-SVD
has no single matrix to act on; instead each atom update alternates between a
(ridge) least-squares solve for a_m and scalar refits of its coefficients.
"""

import csv
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.linalg

from . import basis
from . import exceptions
from . import geometry
from . import pursuit
from . import utils
from .basis import BasisSpec

log = logging.getLogger(__name__)

DEFAULT_RIDGE_FACTOR = 1e-8


class TrainSet(object):
    """ Training patches together with their cached basis matrices Phi(G_i) """

    def __init__(self, patches):
        self.patches = list(patches)
        for i, patch in enumerate(self.patches):
            if len(patch) == 0:
                raise exceptions.DegeneratePatchFailure('training patch %d has an empty grid' % i)
        self._phi = {}

    def __len__(self):
        return len(self.patches)

    def phi(self, i, spec):
        key = (i, spec)
        if key not in self._phi:
            self._phi[key] = basis.basis_matrix(spec, self.patches[i].grid)
        return self._phi[key]

    def values(self, i):
        return self.patches[i].values


@dataclass(frozen=True)
class LearnParams:
    n_atoms: int = 36
    basis: BasisSpec = field(default_factory=BasisSpec)
    sparsity_L: int = 4
    outer_iters: int = 20
    error_threshold: float = 0.0
    seed: int = 0
    # None picks 1e-8 * (trace of the atom normal matrix / N) per update
    inner_ls_ridge: Optional[float] = None
    alternation_rounds: int = 2
    threads: Optional[int] = None
    # relative per-iteration improvement below which an atom re-seed is tried; 0 disables
    stall_tolerance: float = 1e-3

    def __post_init__(self):
        for name, minimum in (('n_atoms', 1), ('outer_iters', 1), ('sparsity_L', 0), ('alternation_rounds', 1)):
            value = getattr(self, name)
            if int(value) != value or value < minimum:
                raise exceptions.InvalidParameterFailure(
                    '%s must be an integer >= %d, got %r' % (name, minimum, value))
        if not self.error_threshold >= 0:
            raise exceptions.InvalidParameterFailure('error_threshold must be >= 0, got %r' % (self.error_threshold,))
        if self.inner_ls_ridge is not None and not self.inner_ls_ridge >= 0:
            raise exceptions.InvalidParameterFailure('inner_ls_ridge must be >= 0, got %r' % (self.inner_ls_ridge,))
        if not self.stall_tolerance >= 0:
            raise exceptions.InvalidParameterFailure(
                'stall_tolerance must be >= 0, got %r' % (self.stall_tolerance,))
        utils.check_seed(self.seed)

    @property
    def pursuit_params(self):
        return pursuit.PursuitParams(sparsity_L=self.sparsity_L)


@dataclass
class LearnTrace:
    """ Mean per-sample squared residual after each outer iteration.

    replaced_atoms[t] lists atoms re-seeded during iteration t; such
    iterations are exempt from the monotonicity guarantee.
    """
    per_iteration_error: List[float] = field(default_factory=list)
    replaced_atoms: List[List[int]] = field(default_factory=list)

    def __len__(self):
        return len(self.per_iteration_error)

    def record(self, error, replaced):
        self.per_iteration_error.append(float(error))
        self.replaced_atoms.append(list(replaced))

    def write_csv(self, path):
        try:
            with open(path, 'w', encoding='utf-8', newline='') as f:
                writer = csv.writer(f, lineterminator='\n')
                writer.writerow(['iteration', 'error'])
                for iteration, error in enumerate(self.per_iteration_error):
                    writer.writerow([iteration, utils.format_float(error)])
        except OSError as e:
            raise exceptions.ContDictIOFailure('cannot write %s: %s' % (path, e), superExc=e)
        log.info('Wrote %d trace rows to %s', len(self), path)


def init_dictionary(params):
    """ Gaussian coefficients drawn from params.seed, then normalized """
    rng = utils.make_rng(params.seed)
    coeffs = rng.standard_normal((params.basis.size, params.n_atoms))
    return basis.normalize_atoms(basis.Dictionary(params.basis, coeffs))


def _residual(train, i, dictionary, code):
    phi = train.phi(i, dictionary.basis)
    if not code.entries:
        return np.array(train.values(i), copy=True)
    support = code.support
    weights = np.array([code.entries[m] for m in support])
    return train.values(i) - phi @ (dictionary.coeffs[:, support] @ weights)


def sample_error(train, i, dictionary, code):
    """ ||y_i - D(G_i) z_i||^2 / |G_i| """
    r = _residual(train, i, dictionary, code)
    return float(r @ r) / len(r)


def mean_error(train, dictionary, codes):
    return float(np.mean([sample_error(train, i, dictionary, code) for i, code in enumerate(codes)]))


def sparse_code_all(train, dictionary, params):
    """ OMP with params.sparsity_L on every patch's own D(G_i) """
    pursuit_params = params.pursuit_params

    def code(i):
        design = train.phi(i, dictionary.basis) @ dictionary.coeffs
        return pursuit.omp(train.values(i), design, pursuit_params)

    # fill the basis cache up front; the threads then only read it
    for i in range(len(train)):
        train.phi(i, dictionary.basis)
    return utils.parallel_map(code, range(len(train)), params.threads)


def atom_support(codes, m):
    """ Lambda_m: indices of the codes that use atom m """
    return [i for i, code in enumerate(codes) if m in code.entries]


def _restricted_error(phis, residuals, a, z):
    return sum(float(np.sum((e - zi * (phi @ a)) ** 2)) for phi, e, zi in zip(phis, residuals, z))


def _ridge_solve(blocks, targets, ridge, n):
    """ argmin_a sum ||B_i a - t_i||^2 + ridge ||a||^2, minimum-norm when singular """
    lhs = np.vstack(blocks + [np.sqrt(ridge) * np.eye(n)]) if ridge > 0 else np.vstack(blocks)
    rhs = np.concatenate(targets + [np.zeros(n)]) if ridge > 0 else np.concatenate(targets)
    a, _, _, _ = scipy.linalg.lstsq(lhs, rhs, lapack_driver='gelsd')
    return a


def _ridge(params, blocks, n):
    if params.inner_ls_ridge is not None:
        return params.inner_ls_ridge
    scale = sum(float(np.sum(b ** 2)) for b in blocks) / n
    return DEFAULT_RIDGE_FACTOR * scale


def _seed_atom(train, codes, dictionary, params, rank=0):
    """ Ridge projection of a badly represented patch's residual onto the basis.

    rank 0 picks the worst-represented patch, rank 1 the next worst and so on.
    Returns (a, patch index) with a normalized, or None when that patch is
    already represented exactly.
    """
    errors = np.array([sample_error(train, i, dictionary, code) for i, code in enumerate(codes)])
    if rank >= len(errors):
        return None
    worst = int(np.argsort(-errors, kind='stable')[rank])
    if not errors[worst] > 0:
        return None
    phi = train.phi(worst, dictionary.basis)
    target = _residual(train, worst, dictionary, codes[worst])
    a = _ridge_solve([phi], [target], _ridge(params, [phi], phi.shape[1]), phi.shape[1])
    norm = basis.atom_norms(basis.Dictionary(dictionary.basis, a[:, None]))[0]
    if norm ** 2 <= basis.ZERO_ATOM_NORM_SQ:
        return None
    return a / norm, worst


def update_atom(train, codes, dictionary, m, params):
    """ Refit atom m and its coefficients on the patches that use it.

    Returns (a_m, {i: z_im}, replaced). a_m is normalized and the z_im are
    rescaled so reconstructions are unchanged. An unused atom is re-seeded
    from the residual of the worst-represented patch; it then has no usages.
    An update that would increase the restricted residual is discarded.
    """
    old_a = np.array(dictionary.coeffs[:, m])
    users = atom_support(codes, m)
    if not users:
        seeded = _seed_atom(train, codes, dictionary, params)
        if seeded is None:
            return old_a, {}, False
        a, worst = seeded
        log.warning('Atom %d is unused; re-seeded from patch %d', m, worst)
        return a, {}, True

    phis = [train.phi(i, dictionary.basis) for i in users]
    old_z = np.array([codes[i].entries[m] for i in users])
    residuals = [_residual(train, i, dictionary, codes[i]) + zi * (phi @ old_a)
                 for i, phi, zi in zip(users, phis, old_z)]
    before = _restricted_error(phis, residuals, old_a, old_z)

    n = dictionary.basis.size
    a, z = old_a, old_z
    for _ in range(params.alternation_rounds):
        blocks = [zi * phi for zi, phi in zip(z, phis)]
        a = _ridge_solve(blocks, residuals, _ridge(params, blocks, n), n)
        samples = [phi @ a for phi in phis]
        energies = np.array([float(s @ s) for s in samples])
        z = np.array([float(s @ e) / en if en > 0 else 0.0 for s, e, en in zip(samples, residuals, energies)])

    norm = basis.atom_norms(basis.Dictionary(dictionary.basis, a[:, None]))[0]
    if norm ** 2 <= basis.ZERO_ATOM_NORM_SQ:
        return old_a, dict(zip(users, old_z)), False
    a = a / norm
    z = z * norm

    after = _restricted_error(phis, residuals, a, z)
    if after > before:
        log.debug('Atom %d update rejected (%.6g > %.6g)', m, after, before)
        return old_a, dict(zip(users, old_z)), False
    return a, dict(zip(users, z)), False


def _apply_update(coeffs, codes, m, a, z_new):
    coeffs[:, m] = a
    for i, z in z_new.items():
        entries = dict(codes[i].entries)
        if z != 0.0:
            entries[m] = float(z)
        else:
            entries.pop(m, None)
        codes[i] = pursuit.SparseCode(codes[i].length, entries)


def atom_contribution(train, codes, dictionary, m):
    """ Increase of the summed per-sample error if atom m were dropped from every code """
    a = dictionary.coeffs[:, m]
    total = 0.0
    for i in atom_support(codes, m):
        r = _residual(train, i, dictionary, codes[i])
        without = r + codes[i].entries[m] * (train.phi(i, dictionary.basis) @ a)
        total += (float(without @ without) - float(r @ r)) / len(r)
    return total


def _refine(train, dictionary, codes, params):
    """ One outer round: code every patch, then update the atoms in order.

    With previous codes given, a patch keeps its old code when the fresh
    OMP code fits it worse under the current dictionary.
    """
    fresh = sparse_code_all(train, dictionary, params)
    if codes is not None:
        fresh = [new if sample_error(train, i, dictionary, new) <= sample_error(train, i, dictionary, old) else old
                 for i, (new, old) in enumerate(zip(fresh, codes))]
    codes = list(fresh)

    coeffs = np.array(dictionary.coeffs)
    replaced = []
    for m in range(params.n_atoms):
        current = basis.Dictionary(params.basis, coeffs)
        a, z_new, was_replaced = update_atom(train, codes, current, m, params)
        _apply_update(coeffs, codes, m, a, z_new)
        if was_replaced:
            replaced.append(m)
    return basis.Dictionary(params.basis, coeffs), codes, replaced


def reseed_atom(train, codes, dictionary, params, tried=()):
    """ Re-seed the least useful atom outside tried and run one round with it.

    The atom with the smallest contribution is replaced by the residual of
    the len(tried)-th worst represented patch; every patch is then coded
    afresh and all atoms are updated once. Returns (m, dictionary, codes,
    replaced, error) for that trial, or None when there is nothing to try.
    """
    candidates = [m for m in range(params.n_atoms) if m not in tried]
    if not candidates:
        return None
    m = min(candidates, key=lambda k: (atom_contribution(train, codes, dictionary, k), k))
    seeded = _seed_atom(train, codes, dictionary, params, rank=len(tried))
    if seeded is None:
        return None
    a, worst = seeded
    coeffs = np.array(dictionary.coeffs)
    coeffs[:, m] = a
    trial, trial_codes, replaced = _refine(train, basis.Dictionary(params.basis, coeffs), None, params)
    error = mean_error(train, trial, trial_codes)
    log.debug('Atom %d re-seeded from patch %d: mean error %.6g', m, worst, error)
    return m, trial, trial_codes, sorted(set(replaced) | {m}), error


def _stalled(previous, error, params):
    return params.stall_tolerance > 0 and previous - error <= params.stall_tolerance * previous


def learn(train, params):
    """ Alternate sparse coding and atom-by-atom updates for params.outer_iters rounds.

    Codes that would fit worse are not taken and rejected atom updates leave
    the atom unchanged, so the recorded error only rises in iterations that
    re-seed unused atoms. When a round improves by less than
    params.stall_tolerance (relative), the least useful atom is re-seeded
    from a badly represented patch and the result is kept only if it lowers
    the error. Kept re-seeds are listed in the trace with the replacements.
    """
    if len(train) == 0:
        raise exceptions.InvalidParameterFailure('cannot learn from an empty training set')
    dictionary = init_dictionary(params)
    trace = LearnTrace()
    codes = None
    tried = set()
    for iteration in range(params.outer_iters):
        dictionary, codes, replaced = _refine(train, dictionary, codes, params)
        error = mean_error(train, dictionary, codes)

        if len(trace) > 0 and error > params.error_threshold and \
                _stalled(trace.per_iteration_error[-1], error, params):
            trial = reseed_atom(train, codes, dictionary, params, tried)
            if trial is not None:
                m, trial_dictionary, trial_codes, trial_replaced, trial_error = trial
                tried.add(m)
                if trial_error < error:
                    log.info('Iteration %d: re-seeded atom %d (%.6g -> %.6g)', iteration, m, error, trial_error)
                    dictionary, codes, error = trial_dictionary, trial_codes, trial_error
                    replaced = sorted(set(replaced) | set(trial_replaced))
                    tried.clear()
        else:
            tried.clear()

        trace.record(error, replaced)
        log.info('Iteration %d: mean error %.6g (%d atoms replaced)', iteration, error, len(replaced))
        if error <= params.error_threshold:
            log.info('Error threshold %.3g reached after %d iterations', params.error_threshold, iteration + 1)
            break
    return dictionary, trace


def training_set_from_cloud(cloud, radius, strategy='all', min_points=3, index=None):
    """ Cut patches around the selected centres, skipping small or degenerate ones """
    index = index if index is not None else geometry.CloudIndex(cloud)
    patches = []
    skipped = 0
    for center in geometry.select_patch_centers(cloud, radius, strategy, index=index):
        try:
            patch = geometry.extract_patch(cloud, center, radius, index=index)
        except exceptions.DegeneratePatchFailure as e:
            log.debug('Skipping patch at %d: %s', center, e)
            skipped += 1
            continue
        if len(patch) < min_points:
            skipped += 1
            continue
        patches.append(patch)
    if skipped:
        log.warning('Skipped %d small or degenerate training patches', skipped)
    return TrainSet(patches)
