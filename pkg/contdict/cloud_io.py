"""Reading, writing and synthesizing point clouds."""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import least_squares

from . import exceptions
from . import utils

log = logging.getLogger(__name__)

FORMATS = ('ply_ascii', 'xyz')
SHAPES = ('plane', 'sphere', 'saddle')

# saddle surface z = SADDLE_CURVATURE * (x^2 - y^2) over [-1, 1]^2
SADDLE_CURVATURE = 0.5

_PLY_SCALAR_TYPES = {
    'char', 'uchar', 'short', 'ushort', 'int', 'uint', 'float', 'double',
    'int8', 'uint8', 'int16', 'uint16', 'int32', 'uint32', 'float32', 'float64',
}


@dataclass(frozen=True, eq=False)
class PointCloud:
    """ Ordered list of 3D points in world units """
    points: np.ndarray
    name: Optional[str] = None

    def __post_init__(self):
        points = np.array(self.points, dtype=np.float64)
        if points.size == 0:
            points = points.reshape(0, 3)
        if points.ndim != 2 or points.shape[1] != 3:
            raise exceptions.DimensionMismatchFailure(
                'points must have shape (n, 3), got %s' % (points.shape,))
        if not np.all(np.isfinite(points)):
            raise exceptions.InvalidParameterFailure('point coordinates must be finite')
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class NoiseSpec:
    """ Isotropic Gaussian noise of std `sigma` (world units) """
    sigma: float
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise exceptions.InvalidParameterFailure('sigma must be >= 0, got %r' % (self.sigma,))
        utils.check_seed(self.seed)


def format_from_path(path):
    return 'ply_ascii' if str(path).lower().endswith('.ply') else 'xyz'


def _check_format(fmt, path):
    if fmt is None:
        fmt = format_from_path(path)
    if fmt not in FORMATS:
        raise exceptions.UnsupportedFormatFailure(
            'unsupported cloud format %r (expected one of %s)' % (fmt, ', '.join(FORMATS)))
    return fmt


def _parse_floats(fields, lineno):
    try:
        values = [float(f) for f in fields]
    except ValueError:
        raise exceptions.CloudParseFailure('could not parse numbers from %r' % ' '.join(fields), lineno)
    if not all(np.isfinite(values)):
        raise exceptions.CloudParseFailure('non-finite coordinate', lineno)
    return values


def _read_xyz(lines):
    rows = []
    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        fields = stripped.split()
        if len(fields) != 3:
            raise exceptions.CloudParseFailure(
                'expected 3 coordinates, found %d' % len(fields), lineno)
        rows.append(_parse_floats(fields, lineno))
    return rows


def _read_ply(lines):
    if not lines or lines[0].strip() != 'ply':
        raise exceptions.CloudParseFailure('missing "ply" magic', 1)

    n_vertices = None
    properties = []
    element = None
    header_end = None
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.split()
        if not fields or fields[0] in ('comment', 'obj_info'):
            continue
        keyword = fields[0]
        if keyword == 'format':
            if len(fields) < 2:
                raise exceptions.CloudParseFailure('incomplete format line', lineno)
            if fields[1] != 'ascii':
                raise exceptions.UnsupportedFormatFailure(
                    'PLY format %r is not supported; only ascii PLY can be read' % fields[1])
        elif keyword == 'element':
            if len(fields) != 3:
                raise exceptions.CloudParseFailure('malformed element line', lineno)
            element = fields[1]
            if element == 'vertex':
                if n_vertices is not None:
                    raise exceptions.CloudParseFailure('duplicate vertex element', lineno)
                try:
                    n_vertices = int(fields[2])
                except ValueError:
                    raise exceptions.CloudParseFailure('bad vertex count %r' % fields[2], lineno)
                if n_vertices < 0:
                    raise exceptions.CloudParseFailure('negative vertex count', lineno)
            elif n_vertices is None:
                raise exceptions.CloudParseFailure(
                    'element %r before the vertex element is not supported' % element, lineno)
        elif keyword == 'property':
            if element == 'vertex':
                if len(fields) != 3 or fields[1] not in _PLY_SCALAR_TYPES:
                    raise exceptions.CloudParseFailure('unsupported vertex property %r' % line.strip(), lineno)
                properties.append(fields[2])
        elif keyword == 'end_header':
            header_end = lineno
            break
        else:
            raise exceptions.CloudParseFailure('unexpected header line %r' % line.strip(), lineno)

    if header_end is None:
        raise exceptions.CloudParseFailure('missing end_header', len(lines))
    if n_vertices is None:
        raise exceptions.CloudParseFailure('no vertex element declared', header_end)
    try:
        columns = [properties.index(axis) for axis in ('x', 'y', 'z')]
    except ValueError:
        raise exceptions.CloudParseFailure('vertex element lacks x, y and z properties', header_end)

    rows = []
    body = lines[header_end:header_end + n_vertices]
    for offset, line in enumerate(body):
        lineno = header_end + 1 + offset
        fields = line.split()
        if len(fields) != len(properties):
            raise exceptions.CloudParseFailure(
                'vertex row %d has %d values, expected %d' % (offset + 1, len(fields), len(properties)), lineno)
        values = _parse_floats(fields, lineno)
        rows.append([values[c] for c in columns])
    if len(rows) < n_vertices:
        raise exceptions.CloudParseFailure(
            'expected %d vertex rows, vertex row %d is missing' % (n_vertices, len(rows) + 1),
            header_end + len(body) + 1)
    return rows


def read_cloud(path, format=None):
    """ Read all vertex positions of an XYZ or ASCII PLY file, in file order """
    fmt = _check_format(format, path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            lines = f.read().splitlines()
    except UnicodeDecodeError as e:
        if fmt == 'ply_ascii':
            raise exceptions.UnsupportedFormatFailure('%s is not an ascii PLY file' % path)
        raise exceptions.CloudParseFailure('%s is not a text file: %s' % (path, e))
    except OSError as e:
        raise exceptions.ContDictIOFailure('cannot read %s: %s' % (path, e), superExc=e)

    rows = _read_ply(lines) if fmt == 'ply_ascii' else _read_xyz(lines)
    log.debug('Read %d points from %s', len(rows), path)
    return PointCloud(np.array(rows, dtype=np.float64).reshape(-1, 3), name=str(path))


def write_cloud(cloud, path, format=None):
    """ Write a cloud with enough digits that read_cloud reproduces it exactly """
    fmt = _check_format(format, path)
    lines = []
    if fmt == 'ply_ascii':
        lines.extend([
            'ply',
            'format ascii 1.0',
            'element vertex %d' % len(cloud),
            'property float x',
            'property float y',
            'property float z',
            'end_header',
        ])
    for p in cloud.points:
        lines.append(' '.join(utils.format_float(c) for c in p))
    try:
        with open(path, 'w', encoding='utf-8') as f:
            f.write('\n'.join(lines))
            if lines:
                f.write('\n')
    except OSError as e:
        raise exceptions.ContDictIOFailure('cannot write %s: %s' % (path, e), superExc=e)
    log.debug('Wrote %d points to %s', len(cloud), path)


def synth_cloud(shape, n, seed=0):
    """ Sample n points on an analytic surface.

    plane and saddle sample (x, y) uniformly on [-1, 1]^2; the sphere samples
    uniformly on the unit sphere by normalizing Gaussian vectors.
    """
    if shape not in SHAPES:
        raise exceptions.InvalidParameterFailure(
            'unknown shape %r (expected one of %s)' % (shape, ', '.join(SHAPES)))
    if int(n) != n or n < 1:
        raise exceptions.InvalidParameterFailure('n must be a positive integer, got %r' % (n,))
    n = int(n)
    rng = utils.make_rng(seed)

    if shape == 'sphere':
        points = rng.standard_normal((n, 3))
        norms = np.linalg.norm(points, axis=1)
        # a zero draw has probability zero, but keep the division defined
        norms[norms == 0] = 1.0
        points = points / norms[:, None]
    else:
        xy = rng.uniform(-1.0, 1.0, size=(n, 2))
        if shape == 'plane':
            z = np.zeros(n)
        else:
            z = SADDLE_CURVATURE * (xy[:, 0] ** 2 - xy[:, 1] ** 2)
        points = np.column_stack([xy, z])
    return PointCloud(points, name=shape)


def add_noise(cloud, spec):
    """ Perturb every coordinate by i.i.d. N(0, sigma^2) drawn from spec.seed """
    if spec.sigma == 0:
        return PointCloud(cloud.points.copy(), name=cloud.name)
    rng = utils.make_rng(spec.seed)
    noise = rng.normal(0.0, spec.sigma, size=cloud.points.shape)
    return PointCloud(cloud.points + noise, name=cloud.name)


def _saddle_distance(p):
    def residual(st):
        s, t = st
        return np.array([s - p[0], t - p[1], SADDLE_CURVATURE * (s * s - t * t) - p[2]])

    def jacobian(st):
        s, t = st
        return np.array([[1.0, 0.0], [0.0, 1.0],
                         [2 * SADDLE_CURVATURE * s, -2 * SADDLE_CURVATURE * t]])

    fit = least_squares(residual, p[:2], jac=jacobian, method='lm', xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return float(np.linalg.norm(fit.fun))


def analytic_distance(points, shape):
    """ Unsigned distance from each point to the analytic surface `shape` """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if shape == 'plane':
        return np.abs(points[:, 2])
    if shape == 'sphere':
        return np.abs(np.linalg.norm(points, axis=1) - 1.0)
    if shape == 'saddle':
        # the saddle is an unbounded graph; the closest point is found numerically
        return np.array([_saddle_distance(p) for p in points])
    raise exceptions.InvalidParameterFailure(
        'unknown shape %r (expected one of %s)' % (shape, ', '.join(SHAPES)))
