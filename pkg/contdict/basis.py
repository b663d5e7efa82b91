"""Cosine tensor-product basis and the continuous dictionaries built on it.

A dictionary is a coefficient matrix A (N basis functions x M atoms); atom m
is the continuous function d_m(u, v) = phi(u, v)^T a_m on [-1, 1]^2.
Basis function (k, l) is cos(pi k u~) cos(pi l v~) with u~ = (u + 1) / 2,
v~ = (v + 1) / 2, stored at flat index k * (K' + 1) + l.

Continuous norms are averages over the domain, i.e. integrals over
(u~, v~) in [0, 1]^2, where the basis is orthogonal with diagonal Gram
entries gamma_k * gamma_l (gamma_0 = 1, gamma_k = 1/2 otherwise).
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import exceptions
from . import utils

log = logging.getLogger(__name__)

DOMAIN_TOLERANCE = 1e-12
ZERO_ATOM_NORM_SQ = 1e-14

CDICT_MAGIC = 'CDICT v1'


@dataclass(frozen=True)
class BasisSpec:
    max_freq_u: int = 5
    max_freq_v: int = 5

    def __post_init__(self):
        for name in ('max_freq_u', 'max_freq_v'):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise exceptions.InvalidParameterFailure('%s must be an integer >= 0, got %r' % (name, value))
            object.__setattr__(self, name, int(value))

    @property
    def size(self):
        return (self.max_freq_u + 1) * (self.max_freq_v + 1)

    def flat_index(self, k_u, k_v):
        return k_u * (self.max_freq_v + 1) + k_v

    def frequencies(self, flat):
        return divmod(flat, self.max_freq_v + 1)


@dataclass(frozen=True, eq=False)
class Dictionary:
    basis: BasisSpec
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.float64)
        if coeffs.ndim != 2 or coeffs.shape[0] != self.basis.size:
            raise exceptions.DimensionMismatchFailure(
                'coefficients must have %d rows (one per basis function), got shape %s'
                % (self.basis.size, coeffs.shape))
        if not np.all(np.isfinite(coeffs)):
            raise exceptions.InvalidParameterFailure('dictionary coefficients must be finite')
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @property
    def n_atoms(self):
        return self.coeffs.shape[1]


def gram_diagonal(spec):
    """ Analytic Gram matrix diagonal of the basis, in flat order """
    gamma_u = np.where(np.arange(spec.max_freq_u + 1) == 0, 1.0, 0.5)
    gamma_v = np.where(np.arange(spec.max_freq_v + 1) == 0, 1.0, 0.5)
    return np.outer(gamma_u, gamma_v).reshape(-1)


def _check_domain(grid):
    grid = np.asarray(grid, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(grid)):
        raise exceptions.DomainFailure('sample locations must be finite')
    outside = np.abs(grid) > 1.0 + DOMAIN_TOLERANCE
    if np.any(outside):
        row = int(np.argmax(np.any(outside, axis=1)))
        raise exceptions.DomainFailure('point %s lies outside [-1, 1]^2' % (grid[row],))
    return np.clip(grid, -1.0, 1.0)


def basis_matrix(spec, grid):
    """ Phi(G): one row of basis values per sample location """
    grid = _check_domain(grid)
    u = (grid[:, 0] + 1.0) / 2.0
    v = (grid[:, 1] + 1.0) / 2.0
    cos_u = np.cos(np.pi * np.outer(u, np.arange(spec.max_freq_u + 1)))
    cos_v = np.cos(np.pi * np.outer(v, np.arange(spec.max_freq_v + 1)))
    return (cos_u[:, :, None] * cos_v[:, None, :]).reshape(len(grid), spec.size)


def eval_basis(spec, point):
    return basis_matrix(spec, np.reshape(point, (1, 2)))[0]


def sample_dictionary(dictionary, grid):
    """ D(G) = Phi(G) A, shape (|G|, M) """
    return basis_matrix(dictionary.basis, grid) @ dictionary.coeffs


def eval_atom(dictionary, m, point):
    if not 0 <= m < dictionary.n_atoms:
        raise IndexError('atom %d out of range for %d atoms' % (m, dictionary.n_atoms))
    return float(eval_basis(dictionary.basis, point) @ dictionary.coeffs[:, m])


def reconstruct_signal(dictionary, code, points):
    """ Evaluate the continuous estimate sum_m z_m d_m at arbitrary domain points """
    phi = basis_matrix(dictionary.basis, points)
    if not code.entries:
        return np.zeros(len(phi))
    support = code.support
    weights = np.array([code.entries[m] for m in support])
    return phi @ (dictionary.coeffs[:, support] @ weights)


def atom_norms(dictionary):
    """ Continuous L2 norm of every atom """
    gram = gram_diagonal(dictionary.basis)
    return np.sqrt(np.sum(gram[:, None] * dictionary.coeffs ** 2, axis=0))


def normalize_atoms(dictionary):
    norms = atom_norms(dictionary)
    zero = np.flatnonzero(norms ** 2 <= ZERO_ATOM_NORM_SQ)
    if len(zero):
        raise exceptions.ZeroAtomFailure('atom %d is identically zero' % zero[0], atom=int(zero[0]))
    return Dictionary(dictionary.basis, dictionary.coeffs / norms)


def cosine_dictionary(spec, n_atoms=None):
    """ Pure cosine atoms: the first n_atoms basis functions, normalized """
    n_atoms = spec.size if n_atoms is None else n_atoms
    if not 1 <= n_atoms <= spec.size:
        raise exceptions.InvalidParameterFailure(
            'a cosine dictionary has between 1 and %d atoms, got %r' % (spec.size, n_atoms))
    return normalize_atoms(Dictionary(spec, np.eye(spec.size)[:, :n_atoms]))


def write_dictionary(dictionary, path):
    spec = dictionary.basis
    lines = [
        CDICT_MAGIC,
        'basis cos %d %d' % (spec.max_freq_u, spec.max_freq_v),
        'atoms %d' % dictionary.n_atoms,
    ]
    for row in dictionary.coeffs:
        lines.append(' '.join(utils.format_float(c) for c in row))
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write('\n'.join(lines) + '\n')
    except OSError as e:
        raise exceptions.ContDictIOFailure('cannot write %s: %s' % (path, e), superExc=e)
    log.info('Wrote %d-atom dictionary to %s', dictionary.n_atoms, path)


def _header_ints(line, lineno, keyword, count):
    fields = line.split()
    if len(fields) != count + 1 or fields[0] != keyword:
        raise exceptions.DictionaryFormatFailure('expected "%s" header, found %r' % (keyword, line), lineno)
    try:
        return [int(f) for f in fields[1:]]
    except ValueError:
        raise exceptions.DictionaryFormatFailure('bad integer in header %r' % line, lineno)


def read_dictionary(path):
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
    except UnicodeDecodeError:
        raise exceptions.DictionaryFormatFailure('%s is not a text file' % path, 1)
    except OSError as e:
        raise exceptions.ContDictIOFailure('cannot read %s: %s' % (path, e), superExc=e)

    lines += [''] * max(0, 3 - len(lines))
    if lines[0].strip() != CDICT_MAGIC:
        raise exceptions.DictionaryFormatFailure('expected %r header, found %r' % (CDICT_MAGIC, lines[0]), 1)
    fields = lines[1].split()
    if len(fields) != 4 or fields[:2] != ['basis', 'cos']:
        raise exceptions.DictionaryFormatFailure('expected "basis cos K K\'" header, found %r' % lines[1], 2)
    try:
        spec = BasisSpec(int(fields[2]), int(fields[3]))
    except (ValueError, exceptions.InvalidParameterFailure):
        raise exceptions.DictionaryFormatFailure('bad basis frequencies in %r' % lines[1], 2)
    (n_atoms,) = _header_ints(lines[2], 3, 'atoms', 1)
    if n_atoms < 1:
        raise exceptions.DictionaryFormatFailure('dictionary needs at least one atom', 3)

    body = lines[3:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != spec.size:
        raise exceptions.DictionaryFormatFailure(
            'expected %d coefficient rows, found %d' % (spec.size, len(body)), 4 + min(len(body), spec.size))
    rows = []
    for offset, line in enumerate(body):
        lineno = 4 + offset
        try:
            row = [float(f) for f in line.split()]
        except ValueError:
            raise exceptions.DictionaryFormatFailure('could not parse coefficients %r' % line, lineno)
        if len(row) != n_atoms or not all(np.isfinite(row)):
            raise exceptions.DictionaryFormatFailure(
                'expected %d finite coefficients, found %r' % (n_atoms, line), lineno)
        rows.append(row)
    log.debug('Read %d-atom dictionary from %s', n_atoms, path)
    return Dictionary(spec, np.array(rows))
