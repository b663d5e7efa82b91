""" Builders and brute-force oracles shared by the contdict tests"""
# -*- coding: utf-8 -*-
import itertools
import logging
import os

import numpy as np

from contdict import basis
from contdict import cloud_io
from contdict import dictlearn
from contdict import geometry

log = logging.getLogger(__name__)
log.setLevel(logging.DEBUG)
log.addHandler(logging.NullHandler())
if os.environ.get('DEBUG_CONTDICT'):
    log.addHandler(logging.StreamHandler())

SLOW_REASON = "Skipping slow benchmark experiments"


def rng(seed=0):
    return np.random.default_rng(seed)


def random_cloud(n, seed=0, spread=1.0):
    return cloud_io.PointCloud(rng(seed).uniform(-spread, spread, size=(n, 3)))


def random_rotation(seed=0):
    q, r = np.linalg.qr(rng(seed).standard_normal((3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def random_patch(seed=0, n=40):
    """ A patch cut from a noisy random quadratic height field """
    g = rng(seed)
    xy = g.uniform(-1, 1, size=(n, 2))
    coeffs = g.normal(size=3)
    z = coeffs[0] * xy[:, 0] ** 2 + coeffs[1] * xy[:, 0] * xy[:, 1] + coeffs[2] * xy[:, 1] ** 2
    z = z + 0.05 * g.standard_normal(n)
    points = np.column_stack([xy, z]) @ random_rotation(seed + 1).T + g.normal(size=3)
    cloud = cloud_io.PointCloud(points)
    radius = float(np.max(np.linalg.norm(points - points[0], axis=1)))
    return cloud, geometry.extract_patch(cloud, 0, radius=radius)


def random_grid(n, seed=0):
    return rng(seed).uniform(-1, 1, size=(n, 2))


def brute_force_neighbors(points, center_index, radius):
    distances = np.linalg.norm(points - points[center_index], axis=1)
    return np.flatnonzero(distances <= radius)


def brute_force_chamfer(a, b):
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return (d.min(axis=1).mean() + d.min(axis=0).mean()) / 2.0


def naive_sample(dictionary, grid):
    """ D(G) by explicit summation over basis functions """
    spec = dictionary.basis
    out = np.zeros((len(grid), dictionary.n_atoms))
    for i, (u, v) in enumerate(grid):
        ut, vt = (u + 1) / 2, (v + 1) / 2
        for m in range(dictionary.n_atoms):
            total = 0.0
            for k in range(spec.max_freq_u + 1):
                for j in range(spec.max_freq_v + 1):
                    phi = np.cos(np.pi * k * ut) * np.cos(np.pi * j * vt)
                    total += phi * dictionary.coeffs[spec.flat_index(k, j), m]
            out[i, m] = total
    return out


def exhaustive_support(y, D, sparsity):
    """ Least-squares residual of every support of the given size, best first """
    results = []
    for support in itertools.combinations(range(D.shape[1]), sparsity):
        sub = D[:, support]
        coef, _, _, _ = np.linalg.lstsq(sub, y, rcond=None)
        results.append((float(np.linalg.norm(y - sub @ coef)), support, coef))
    results.sort(key=lambda r: r[0])
    return results


def greedy_reachable(y, D, support):
    """ True when picking the best normalized correlation with the residual at
    every step stays inside support, refitting on the picks by least squares.
    A pick from outside, or a near-tie with an outside column, makes it unreachable.
    """
    norms = np.linalg.norm(D, axis=0)
    chosen = []
    residual = np.array(y, dtype=np.float64)
    for _ in range(len(support)):
        scores = np.abs(D.T @ residual) / norms
        scores[chosen] = -np.inf
        inside = max(scores[j] for j in support if j not in chosen)
        outside = max([scores[j] for j in range(D.shape[1]) if j not in support] + [-np.inf])
        if not inside > outside * (1 + 1e-9):
            return False
        chosen.append(int(np.argmax(scores)))
        coef, _, _, _ = np.linalg.lstsq(D[:, chosen], y, rcond=None)
        residual = y - D[:, chosen] @ coef
    return True


def exact_lasso(y, D, lam):
    """ Exact minimizer of 1/2 ||y - Dz||^2 + lam ||z||_1 for a tiny full-column-rank D.

    Enumerates supports and sign patterns and keeps the KKT-consistent candidates.
    """
    M = D.shape[1]

    def objective(z):
        r = y - D @ z
        return 0.5 * r @ r + lam * np.abs(z).sum()

    best = np.zeros(M)
    best_value = objective(best)
    for size in range(1, M + 1):
        for support in itertools.combinations(range(M), size):
            sub = D[:, support]
            gram = sub.T @ sub
            for signs in itertools.product((-1.0, 1.0), repeat=size):
                signs = np.array(signs)
                zs = np.linalg.solve(gram, sub.T @ y - lam * signs)
                if np.all(np.sign(zs) == signs):
                    z = np.zeros(M)
                    z[list(support)] = zs
                    value = objective(z)
                    if value < best_value:
                        best, best_value = z, value
    return best, best_value


def planted_problem(n_patches=200, n_atoms=8, sparsity=2, spec=None, seed=0, min_points=30, max_points=60):
    """ Training patches drawn exactly as sparse combinations of a planted dictionary """
    spec = spec or basis.BasisSpec(3, 3)
    g = rng(seed)
    planted = basis.normalize_atoms(basis.Dictionary(spec, g.standard_normal((spec.size, n_atoms))))
    patches = []
    for _ in range(n_patches):
        n = int(g.integers(min_points, max_points + 1))
        grid = g.uniform(-1, 1, size=(n, 2))
        support = g.choice(n_atoms, size=sparsity, replace=False)
        z = np.zeros(n_atoms)
        z[support] = g.choice([-1.0, 1.0], size=sparsity) * g.uniform(1.0, 2.0, size=sparsity)
        values = basis.sample_dictionary(planted, grid) @ z
        patches.append(make_patch(grid, values))
    return planted, dictlearn.TrainSet(patches)


def make_patch(grid, values):
    """ A patch with the world frame as its frame """
    grid = np.asarray(grid, dtype=np.float64)
    frame = geometry.Frame(origin=np.zeros(3), tangent_u=np.array([1.0, 0, 0]),
                           tangent_v=np.array([0, 1.0, 0]), normal=np.array([0, 0, 1.0]))
    return geometry.Patch(frame=frame, grid=grid, values=values, scale=1.0, indices=np.arange(len(grid)))
