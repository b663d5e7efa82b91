import mock
import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

import base
import contdict.pursuit as subject
import contdict.basis as basis
import contdict.exceptions as exc


def planted(seed, n=40, n_atoms=6, sparsity=2):
    g = base.rng(seed)
    D = g.standard_normal((n, n_atoms))
    support = sorted(g.choice(n_atoms, size=sparsity, replace=False).tolist())
    z = np.zeros(n_atoms)
    z[support] = g.choice([-1.0, 1.0], size=sparsity) * g.uniform(1.0, 2.0, size=sparsity)
    return D, z, support


def test_sparse_code_drops_zeros():
    code = subject.SparseCode(5, {3: 1.5, 1: 0.0, 0: -2.0})
    assert code.entries == {3: 1.5, 0: -2.0}
    assert code.support == [0, 3]
    assert len(code) == 2
    assert code.to_dense().tolist() == [-2.0, 0.0, 0.0, 1.5, 0.0]


def test_sparse_code_validation():
    with pytest.raises(IndexError):
        subject.SparseCode(3, {3: 1.0})
    with pytest.raises(exc.InvalidParameterFailure):
        subject.SparseCode(3, {0: np.nan})


def test_sparse_code_equality_ignores_residual():
    a = subject.SparseCode(4, {1: 2.0}, residual=np.ones(3))
    b = subject.SparseCode.from_dense([0, 2.0, 0, 1e-20], threshold=1e-12)
    assert a == b
    assert a.residual_norm == pytest.approx(np.sqrt(3))
    assert b.residual_norm is None


def test_params_validation():
    for kwargs in ({'sparsity_L': -1}, {'max_iters': 0}, {'residual_tol': -1.0}, {'lam': -0.5}):
        with pytest.raises(exc.InvalidParameterFailure):
            subject.PursuitParams(**kwargs)


def test_default_lambda():
    assert subject.default_lambda(0.1, 100) == pytest.approx(1.5)


def test_omp_matches_exhaustive_search():
    reachable = 0
    for seed in range(200):
        D, z, support = planted(seed)
        y = D @ z
        code = subject.omp(y, D, subject.PursuitParams(sparsity_L=2))
        assert np.allclose(D[:, code.support].T @ code.residual, 0.0, atol=1e-8 * np.linalg.norm(y))
        ranked = base.exhaustive_support(y, D, 2)
        best_residual, best_support, best_coef = ranked[0]
        if ranked[1][0] <= 1e-6 * np.linalg.norm(y) or not base.greedy_reachable(y, D, best_support):
            continue
        reachable += 1
        assert code.support == list(best_support) == support, 'seed %d' % seed
        assert np.allclose([code.entries[m] for m in best_support], best_coef, atol=1e-8), 'seed %d' % seed
    base.log.info('OMP checked against the exhaustive optimum on %d reachable instances', reachable)
    assert reachable >= 100


@pytest.mark.parametrize('alpha', [0.5, 4.0])
def test_omp_scaling_covariance(alpha):
    g = base.rng(12)
    D = g.standard_normal((20, 7))
    y = g.standard_normal(20)
    params = subject.PursuitParams(sparsity_L=3)
    code = subject.omp(y, D, params)
    scaled = subject.omp(alpha * y, D, params)
    assert scaled.support == code.support
    assert np.allclose(scaled.to_dense(), alpha * code.to_dense(), rtol=1e-12, atol=0)


def test_omp_single_atom_signal():
    D = base.rng(13).standard_normal((15, 6))
    code = subject.omp(2.5 * D[:, 3], D, subject.PursuitParams(sparsity_L=1))
    assert code.support == [3]
    assert code.residual_norm <= 1e-10


def test_omp_residual_orthogonal_to_support():
    g = base.rng(1)
    D = g.standard_normal((25, 10))
    y = g.standard_normal(25)
    code = subject.omp(y, D, subject.PursuitParams(sparsity_L=4))
    assert len(code) == 4
    assert np.allclose(D[:, code.support].T @ code.residual, 0.0, atol=1e-10)
    assert np.allclose(code.residual, y - D @ code.to_dense(), atol=1e-12)


def test_omp_zero_sparsity():
    D = base.rng(2).standard_normal((5, 3))
    y = np.arange(5.0)
    code = subject.omp(y, D, subject.PursuitParams(sparsity_L=0))
    assert code.entries == {}
    assert np.array_equal(code.residual, y)


def test_omp_zero_signal():
    D = base.rng(2).standard_normal((5, 3))
    assert subject.omp(np.zeros(5), D, subject.PursuitParams()).entries == {}


def test_omp_sparsity_above_atom_count():
    D = base.rng(3).standard_normal((10, 3))
    y = base.rng(4).standard_normal(10)
    code = subject.omp(y, D, subject.PursuitParams(sparsity_L=10))
    assert len(code) <= 3


def test_omp_residual_tolerance_stops_early():
    D = base.rng(5).standard_normal((10, 4))
    y = base.rng(6).standard_normal(10)
    params = subject.PursuitParams(sparsity_L=4, residual_tol=2 * np.linalg.norm(y))
    assert subject.omp(y, D, params).entries == {}


def test_omp_skips_zero_columns():
    D = np.zeros((4, 3))
    D[:, 2] = [1.0, 0, 0, 0]
    code = subject.omp([0.0, 1.0, 0.0, 0.0], D, subject.PursuitParams(sparsity_L=3))
    assert set(code.support) <= {2}


def test_omp_ties_pick_lowest_index():
    D = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    code = subject.omp([1.0, 0.0], D, subject.PursuitParams(sparsity_L=1))
    assert code.support == [0]


def test_omp_uses_normalized_scores():
    D = np.array([[10.0, 0.6], [0.0, 0.8]])
    y = np.array([0.6, 0.8])
    code = subject.omp(y, D, subject.PursuitParams(sparsity_L=1))
    assert code.support == [1]


def test_dimension_mismatch():
    with pytest.raises(exc.DimensionMismatchFailure):
        subject.omp(np.zeros(4), np.zeros((5, 2)), subject.PursuitParams())


@settings(deadline=None, max_examples=15)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.05, 2.0))
def test_relaxed_matches_exact_lasso(seed, lam):
    g = base.rng(seed)
    D = g.standard_normal((20, 3))
    y = g.standard_normal(20)
    params = subject.PursuitParams(lam=lam, max_iters=100000)
    code = subject.relaxed_pursuit(y, D, params)
    expected, expected_value = base.exact_lasso(y, D, lam)
    z = code.to_dense()
    value = 0.5 * np.sum((y - D @ z) ** 2) + lam * np.abs(z).sum()
    assert value == pytest.approx(expected_value, rel=1e-7, abs=1e-9)
    assert np.allclose(z, expected, atol=1e-3)


def test_relaxed_objective_never_increases():
    for seed in range(100):
        g = base.rng(seed)
        n, m = int(g.integers(10, 40)), int(g.integers(2, 15))
        D = g.standard_normal((n, m))
        y = g.standard_normal(n)
        lam = float(g.uniform(0.01, 1.0)) * np.max(np.abs(D.T @ y))
        objectives = []
        subject.relaxed_pursuit(y, D, subject.PursuitParams(lam=lam),
                                callback=lambda i, value: objectives.append(value))
        assert objectives, 'seed %d' % seed
        for t, (a, b) in enumerate(zip(objectives, objectives[1:])):
            assert b <= a + 1e-12 * max(1.0, abs(a)), 'seed %d, iteration %d' % (seed, t + 1)


def test_relaxed_large_lambda_gives_zero_code_everywhere():
    for seed in range(100):
        g = base.rng(seed)
        D = g.standard_normal((12, 5))
        y = g.standard_normal(12)
        code = subject.relaxed_pursuit(y, D, subject.PursuitParams(lam=np.max(np.abs(D.T @ y))))
        assert code.entries == {}, 'seed %d' % seed


def test_relaxed_large_lambda_gives_zero_code():
    g = base.rng(8)
    D = g.standard_normal((15, 5))
    y = g.standard_normal(15)
    lam = 1.01 * np.max(np.abs(D.T @ y))
    code = subject.relaxed_pursuit(y, D, subject.PursuitParams(lam=lam))
    assert code.entries == {}
    assert np.allclose(code.residual, y)


def test_relaxed_respects_max_iters():
    calls = []
    g = base.rng(9)
    subject.relaxed_pursuit(g.standard_normal(10), g.standard_normal((10, 6)),
                            subject.PursuitParams(lam=1e-6, max_iters=3),
                            callback=lambda i, value: calls.append(i))
    assert calls == [0, 1, 2]


def test_relaxed_zero_design():
    code = subject.relaxed_pursuit(np.ones(3), np.zeros((3, 2)), subject.PursuitParams(lam=1.0))
    assert code.entries == {}


def test_solve_dispatch():
    D = base.rng(10).standard_normal((6, 3))
    y = np.ones(6)
    with mock.patch.object(subject, 'relaxed_pursuit') as relaxed:
        subject.solve(y, D, subject.PursuitParams(lam=0.1), solver='relaxed')
        relaxed.assert_called_once()
    with pytest.raises(exc.InvalidParameterFailure):
        subject.solve(y, D, subject.PursuitParams(lam=0.0), solver='relaxed')
    with pytest.raises(exc.InvalidParameterFailure):
        subject.solve(y, D, subject.PursuitParams(), solver='lars')


def test_code_patch_single_atom():
    dictionary = basis.cosine_dictionary(basis.BasisSpec(3, 3))
    grid = base.random_grid(40, seed=11)
    values = 2.0 * basis.sample_dictionary(dictionary, grid)[:, 5]
    code = subject.code_patch(base.make_patch(grid, values), dictionary, subject.PursuitParams(sparsity_L=1))
    assert code.support == [5]
    assert code.entries[5] == pytest.approx(2.0, abs=1e-10)


def test_code_patch_empty():
    dictionary = basis.cosine_dictionary(basis.BasisSpec(1, 1))
    with pytest.raises(exc.DegeneratePatchFailure):
        subject.code_patch(base.make_patch(np.zeros((0, 2)), []), dictionary, subject.PursuitParams())
