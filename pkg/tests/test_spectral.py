"""Eigensolver tests against dense eigendecomposition oracles."""

import numpy as np
import pytest
import scipy.linalg

from walkcut.graph import Bipartition, ncut_cost
from walkcut.spectral import (
    ConvergenceError,
    DegenerateSpectrumError,
    FiedlerResult,
    ZeroDegreeError,
    best_threshold_split,
    fiedler_stochastic,
    fiedler_symmetric,
)


def random_affinity(n, rng):
    a = rng.random((n, n)) + 0.05
    a = (a + a.T) / 2
    return a


def fix_sign(x):
    nz = np.flatnonzero(np.abs(x) > 1e-12)
    return -x if nz.size and x[nz[0]] < 0 else x


def generalized_oracle(a):
    # second-smallest eigenpair of (D - A) x = lam D x by direct dense solve
    d = a.sum(axis=1)
    lams, vecs = scipy.linalg.eigh(np.diag(d) - a, np.diag(d))
    x = vecs[:, 1] / np.linalg.norm(vecs[:, 1])
    return float(lams[1]), fix_sign(x)


def as_sets(part: Bipartition):
    return {frozenset(part.side_a.tolist()), frozenset(part.side_b.tolist())}


def test_symmetric_matches_generalized_oracle():
    rng = np.random.default_rng(101)
    for n in (2, 3, 5, 16, 32):
        a = random_affinity(n, rng)
        res = fiedler_symmetric(a)
        lam, x = generalized_oracle(a)
        assert abs(res.eigenvalue - lam) < 1e-9
        np.testing.assert_allclose(res.vector, x, atol=1e-7)
        assert abs(np.linalg.norm(res.vector) - 1.0) < 1e-12
        assert res.iterations == 0
        assert res.residual < 1e-7 * max(1.0, a.sum())


def test_symmetric_eigenvalue_in_laplacian_range():
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = random_affinity(int(rng.integers(3, 20)), rng)
        res = fiedler_symmetric(a)
        assert -1e-10 <= res.eigenvalue <= 2.0 + 1e-10


def test_symmetric_path_graph_vector_is_monotone():
    n = 7
    a = np.zeros((n, n))
    for i in range(n - 1):
        a[i, i + 1] = a[i + 1, i] = 1.0
    x = fiedler_symmetric(a).vector
    d = np.diff(x)
    assert (d > 0).all() or (d < 0).all()


def test_symmetric_zero_degree_raises():
    a = np.eye(3)
    a[1] = 0.0
    a[:, 1] = 0.0
    with pytest.raises(ZeroDegreeError):
        fiedler_symmetric(a)


def test_symmetric_degenerate_gap_warns():
    # three identical disconnected cliques: eigenvalue 1 has multiplicity 3,
    # so the runner-up is not isolated from the third eigenvalue
    g = scipy.linalg.block_diag(*(np.ones((3, 3)),) * 3)
    with pytest.warns(RuntimeWarning):
        fiedler_symmetric(g)


def nonsymmetric_oracle(p):
    # second-largest real part of the full spectrum with its eigenvector
    vals, vecs = np.linalg.eig(p)
    order = np.argsort(vals.real)[::-1]
    lam = vals[order[1]]
    v = vecs[:, order[1]]
    assert abs(lam.imag) < 1e-10
    return float(lam.real), v.real


def test_stochastic_matches_eig_oracle_up_to_constant_shift():
    # the deflated iteration converges to the mean-centred copy of the
    # second eigenvector; centring shifts by a multiple of the constant
    # vector, so compare after centring the oracle too
    rng = np.random.default_rng(303)
    for trial in range(8):
        n = int(rng.integers(4, 24))
        a = random_affinity(n, rng)
        p = a / a.sum(axis=1, keepdims=True)
        res = fiedler_stochastic(p, max_iterations=20000)
        lam, v = nonsymmetric_oracle(p)
        assert abs(res.eigenvalue - lam) < 1e-5, f"trial {trial}"
        v = v - v.mean()
        v /= np.linalg.norm(v)
        align = abs(float(res.vector @ v))
        assert align > 1 - 1e-6, f"trial {trial}: alignment {align}"
        assert abs(res.vector.mean()) < 1e-10
        assert res.iterations >= 1


def test_stochastic_and_symmetric_agree_on_splits():
    # P = D^{-1} A shares eigenvectors with the generalized problem, so both
    # formulations must induce the same bipartition even though the raw
    # vectors differ by a constant shift
    rng = np.random.default_rng(404)
    for trial in range(10):
        n = int(rng.integers(4, 20))
        a = random_affinity(n, rng)
        p = a / a.sum(axis=1, keepdims=True)
        sym = fiedler_symmetric(a)
        sto = fiedler_stochastic(p, max_iterations=20000)
        assert abs(sto.eigenvalue - (1.0 - sym.eigenvalue)) < 1e-5
        split_sym = best_threshold_split(sym, a)
        split_sto = best_threshold_split(sto, a)
        assert as_sets(split_sym.partition) == as_sets(split_sto.partition), f"trial {trial}"
        assert abs(split_sym.cost - split_sto.cost) < 1e-9


def test_stochastic_block_structure_sign_pattern():
    # two planted communities: the deflated vector is one sign per block
    n = 10
    p = np.full((n, n), 0.02 / 5)
    p[:5, :5] = 0.98 / 5
    p[5:, 5:] = 0.98 / 5
    res = fiedler_stochastic(p)
    first, second = res.vector[:5], res.vector[5:]
    assert (np.sign(first) == np.sign(first[0])).all()
    assert (np.sign(second) == np.sign(second[0])).all()
    assert np.sign(first[0]) != np.sign(second[0])
    # eigenvalue of the two-block chain: within-block minus cross mass
    assert abs(res.eigenvalue - 0.96) < 1e-6


def test_stochastic_half_lazy_targets_algebraic_runner_up():
    # near-bipartite walk: the most negative eigenvalue dominates in
    # magnitude, which defeats plain power iteration; the half-lazy operator
    # must still return the second-largest algebraic eigenvalue
    n = 6
    a = np.full((n, n), 0.05)
    a[:3, 3:] = 1.0
    a[3:, :3] = 1.0
    p = a / a.sum(axis=1, keepdims=True)
    vals = np.sort(np.linalg.eigvals(p).real)
    assert vals[0] < -abs(vals[-2])  # the trap this guards against
    res = fiedler_stochastic(p, max_iterations=20000)
    assert abs(res.eigenvalue - vals[-2]) < 1e-6


def test_stochastic_annihilation_is_degenerate():
    # 2-cycle: eigenvalues {1, -1}; the deflated half-lazy operator is zero
    p = np.array([[0.0, 1.0], [1.0, 0.0]])
    with pytest.raises(DegenerateSpectrumError):
        fiedler_stochastic(p)


def test_stochastic_budget_exhaustion_raises_convergence_error():
    rng = np.random.default_rng(11)
    a = random_affinity(12, rng)
    p = a / a.sum(axis=1, keepdims=True)
    with pytest.raises(ConvergenceError) as exc:
        fiedler_stochastic(p, max_iterations=2)
    assert exc.value.residual is not None


def test_stochastic_rejects_non_stochastic_and_shapes():
    with pytest.raises(ValueError):
        fiedler_stochastic(np.eye(3) * 1.5)
    with pytest.raises(ValueError):
        fiedler_stochastic(np.ones((2, 3)) / 3)


def test_threshold_split_matches_exhaustive_search():
    rng = np.random.default_rng(55)
    for trial in range(20):
        n = int(rng.integers(3, 10))
        a = random_affinity(n, rng)
        x = rng.standard_normal(n)
        got = best_threshold_split(x, a)
        # oracle: try every level set of x
        uniq = np.unique(x)
        best = np.inf
        for t in (uniq[:-1] + uniq[1:]) / 2:
            mask = x <= t
            if mask.all() or not mask.any():
                continue
            part = Bipartition.from_mask(mask)
            best = min(best, ncut_cost(a, part))
        assert abs(got.cost - best) < 1e-12, f"trial {trial}"
        assert abs(got.cost - ncut_cost(a, got.partition)) < 1e-15


def test_threshold_split_tie_breaks_toward_balance():
    # on K4 every bipartition has normalised cut 4/3, so the balanced
    # threshold must win the tie
    a = np.ones((4, 4)) - np.eye(4)
    x = np.array([0.0, 1.0, 2.0, 3.0])
    got = best_threshold_split(x, a)
    assert abs(got.cost - 4.0 / 3.0) < 1e-12
    assert got.partition.side_a.size == 2
    assert abs(got.threshold - 1.5) < 1e-12


def test_threshold_split_quantile_fallback():
    rng = np.random.default_rng(66)
    n = 100
    a = random_affinity(n, rng)
    x = rng.standard_normal(n)
    cands = 5
    got = best_threshold_split(x, a, num_candidates=cands)
    qs = np.quantile(x, np.arange(1, cands + 1) / (cands + 1))
    best = np.inf
    for t in np.unique(qs):
        mask = x <= t
        if mask.all() or not mask.any():
            continue
        best = min(best, ncut_cost(a, Bipartition.from_mask(mask)))
    assert abs(got.cost - best) < 1e-12
    assert got.threshold in set(qs.tolist())


def test_threshold_split_rejects_constant_vector():
    a = np.ones((4, 4))
    with pytest.raises(DegenerateSpectrumError):
        best_threshold_split(np.ones(4), a)


def test_threshold_split_validates_inputs():
    a = np.ones((4, 4))
    with pytest.raises(ValueError):
        best_threshold_split(np.ones(3), a)
    with pytest.raises(ValueError):
        best_threshold_split(np.array([1.0, 2.0, 3.0, 4.0]), a, num_candidates=0)


def test_threshold_split_accepts_result_wrapper():
    a = random_affinity(6, np.random.default_rng(1))
    res = fiedler_symmetric(a)
    direct = best_threshold_split(res.vector, a)
    wrapped = best_threshold_split(res, a)
    assert as_sets(direct.partition) == as_sets(wrapped.partition)


def test_fiedler_result_sign_convention():
    rng = np.random.default_rng(88)
    for _ in range(5):
        a = random_affinity(int(rng.integers(3, 12)), rng)
        x = fiedler_symmetric(a).vector
        nz = np.flatnonzero(np.abs(x) > 1e-12)
        assert x[nz[0]] > 0
