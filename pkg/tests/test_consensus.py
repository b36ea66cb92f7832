import numpy as np
import pytest

from mvclust import consensus


# ---------------------------------------------------------------- oracles

class UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


def component_count_oracle(s, tol=1e-12):
    s = s.toarray() if hasattr(s, "toarray") else np.asarray(s)
    w = 0.5 * (s + s.T)
    n = w.shape[0]
    uf = UnionFind(n)
    for i in range(n):
        for j in range(n):
            if w[i, j] > tol:
                uf.union(i, j)
    return len({uf.find(i) for i in range(n)})


def naive_fused_distances(fbars, q, lam):
    n = q.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = lam * np.sum((q[i] - q[j]) ** 2)
            for fb in fbars:
                out[i, j] += np.sum((fb[i] - fb[j]) ** 2)
    return out


def block_fbars(n_per, c, n_views, noise, rng):
    """Unit-row embeddings concentrated on c orthogonal directions."""
    labels = np.repeat(np.arange(c), n_per)
    fbars = []
    for _ in range(n_views):
        f = np.eye(c)[labels] + noise * rng.normal(size=(labels.size, c))
        f /= np.linalg.norm(f, axis=1, keepdims=True)
        fbars.append(f)
    return fbars, labels


# ---------------------------------------------------------------- distances


def test_fused_distances_all_equal_rows():
    f = np.tile([1.0, 0.0], (5, 1))
    d = consensus.fused_distances([f], np.zeros((5, 2)), 0.0)
    assert np.abs(d).max() == 0.0


def test_fused_distances_unit_row_range():
    rng = np.random.default_rng(0)
    fbars = []
    for _ in range(3):
        f = rng.normal(size=(6, 2))
        f /= np.linalg.norm(f, axis=1, keepdims=True)
        fbars.append(f)
    d = consensus.fused_distances(fbars, np.zeros((6, 2)), 0.0)
    assert d.min() >= 0.0
    assert d.max() <= 4.0 * 3 + 1e-12
    assert np.allclose(np.diag(d), 0.0)


def test_fused_distances_match_double_loop():
    rng = np.random.default_rng(1)
    fbars = [rng.normal(size=(7, 3)) for _ in range(2)]
    q = rng.normal(size=(7, 4))
    d = consensus.fused_distances(fbars, q, 0.37)
    assert np.abs(d - naive_fused_distances(fbars, q, 0.37)).max() <= 1e-9
    assert np.abs(d - d.T).max() <= 1e-12


# ---------------------------------------------------------------- rotation


def test_bottom_eigenvectors_block_graph_has_zero_trace():
    s = np.zeros((6, 6))
    for b in range(3):
        sl = slice(2 * b, 2 * b + 2)
        s[sl, sl] = 0.5
    np.fill_diagonal(s, 0.0)
    l = consensus.graph_laplacian(s)
    q = consensus.bottom_eigenvectors(l, 3)
    assert np.trace(q.T @ l @ q) <= 1e-9
    assert np.linalg.norm(q.T @ q - np.eye(3)) <= 1e-10


def test_bottom_eigenvectors_trace_equals_smallest_eigenvalues():
    rng = np.random.default_rng(2)
    s = rng.uniform(0.1, 1.0, size=(8, 8))
    np.fill_diagonal(s, 0.0)
    l = consensus.graph_laplacian(s)
    q = consensus.bottom_eigenvectors(l, 3)
    vals = np.linalg.eigvalsh(l)
    assert np.trace(q.T @ l @ q) == pytest.approx(vals[:3].sum(), abs=1e-9)


# ---------------------------------------------------------------- laplacian


def test_graph_laplacian_row_sums_and_psd():
    rng = np.random.default_rng(3)
    s = rng.uniform(size=(7, 7))
    l = consensus.graph_laplacian(s)
    assert np.abs(l.sum(axis=1)).max() <= 1e-10
    assert np.linalg.eigvalsh(l).min() >= -1e-9


def test_zero_eig_multiplicity_cliques_and_path():
    c, size = 3, 4
    s = np.zeros((c * size, c * size))
    for b in range(c):
        sl = slice(b * size, (b + 1) * size)
        s[sl, sl] = 1.0
    np.fill_diagonal(s, 0.0)
    assert consensus.zero_eig_multiplicity(consensus.graph_laplacian(s)) == c

    path = np.zeros((5, 5))
    for i in range(4):
        path[i, i + 1] = path[i + 1, i] = 1.0
    assert consensus.zero_eig_multiplicity(consensus.graph_laplacian(path)) == 1


def test_zero_eig_multiplicity_matches_union_find():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(4, 12))
        s = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.25)
        np.fill_diagonal(s, 0.0)
        got = consensus.zero_eig_multiplicity(consensus.graph_laplacian(s))
        assert got == component_count_oracle(s)
        count, _ = consensus.component_labels(s)
        assert count == component_count_oracle(s)


# ---------------------------------------------------------------- row update


def test_update_rows_pairs_case():
    # three well-separated pairs; k=1 links each point to its partner
    pts = np.array([0.0, 0.05, 10.0, 10.05, 20.0, 20.05])
    d = (pts[:, None] - pts[None, :]) ** 2
    s, _ = consensus.neighbor_rows_from_distances(d, 1)
    dense = s.toarray()
    partner = [1, 0, 3, 2, 5, 4]
    for i in range(6):
        assert dense[i, partner[i]] == pytest.approx(1.0)
    assert np.allclose(dense.sum(axis=1), 1.0)
    assert dense.min() >= 0.0


def test_update_rows_uniform_distances():
    n = 5
    d = np.ones((n, n)) - np.eye(n)
    s, _ = consensus.neighbor_rows_from_distances(d, n - 1)
    dense = s.toarray()
    off = ~np.eye(n, dtype=bool)
    assert np.allclose(dense[off], 1.0 / (n - 1))


# ---------------------------------------------------------------- driver


def test_fit_consensus_recovers_blocks():
    rng = np.random.default_rng(5)
    fbars, labels = block_fbars(8, 3, 2, 0.05, rng)
    res = consensus.fit_consensus(fbars, k=5, c=3)
    assert res.converged
    assert res.n_components == 3
    l = consensus.graph_laplacian(res.graph)
    assert consensus.zero_eig_multiplicity(l) == 3
    assert component_count_oracle(res.graph) == 3
    assert np.trace(res.rotation.T @ l @ res.rotation) <= 1e-6
    # clustering by components matches the construction
    _, comp = consensus.component_labels(res.graph)
    for b in range(3):
        block = comp[labels == b]
        assert len(set(block.tolist())) == 1


def test_fit_consensus_c_equals_one_terminates_fast():
    rng = np.random.default_rng(6)
    f = rng.normal(size=(10, 2))
    f /= np.linalg.norm(f, axis=1, keepdims=True)
    res = consensus.fit_consensus([f], k=9, c=1)
    assert res.converged
    assert res.n_components == 1
    assert len(res.objective_trace) == 1


def test_fit_consensus_traces_and_lambda_bounds():
    rng = np.random.default_rng(7)
    fbars, _ = block_fbars(5, 3, 2, 0.2, rng)
    res = consensus.fit_consensus(fbars, k=4, c=3, max_iter=40)
    lam = np.asarray(res.lam_trace)
    assert np.all(np.isfinite(lam))
    assert lam.min() >= 1e-8 and lam.max() <= 1e8
    assert np.all(np.isfinite(res.objective_trace))
    assert len(res.component_trace) == len(res.objective_trace)


def test_fit_consensus_rows_stay_on_simplex():
    rng = np.random.default_rng(8)
    fbars, _ = block_fbars(6, 3, 2, 0.25, rng)
    n = fbars[0].shape[0]
    d0 = consensus.fused_distances(fbars, np.zeros((n, 1)), 0.0)
    s, duals = consensus.neighbor_rows_from_distances(d0, 4)
    lam = duals.gamma_mean
    for _ in range(6):
        q = consensus.bottom_eigenvectors(consensus.graph_laplacian(s), 3)
        d = consensus.fused_distances(fbars, q, lam)
        s, duals = consensus.neighbor_rows_from_distances(d, 4)
        dense = s.toarray()
        assert dense.min() >= 0.0
        assert np.abs(dense.sum(axis=1) - 1.0).max() <= 1e-10
        # zero-eigenvalue multiplicity equals the component count on every iterate
        eig_count = consensus.zero_eig_multiplicity(consensus.graph_laplacian(s))
        assert eig_count == component_count_oracle(s)


def test_fit_consensus_objective_monotone_at_fixed_lambda():
    rng = np.random.default_rng(9)
    for trial in range(10):
        fbars, _ = block_fbars(7, 3, 2, 0.15, rng)
        n = fbars[0].shape[0]
        d0 = consensus.fused_distances(fbars, np.zeros((n, 1)), 0.0)
        s, duals = consensus.neighbor_rows_from_distances(d0, 5)
        lam = duals.gamma_mean
        objs = [consensus.consensus_objective(d0, s, duals.gamma_row)]
        for _ in range(8):
            q = consensus.bottom_eigenvectors(consensus.graph_laplacian(s), 3)
            d = consensus.fused_distances(fbars, q, lam)
            s, duals = consensus.neighbor_rows_from_distances(d, 5)
            objs.append(consensus.consensus_objective(d, s, duals.gamma_row))
        assert np.diff(objs).max() <= 1e-9


def test_fit_consensus_reports_nonconvergence():
    # two orthogonal blobs cannot split into 4 components with k=5 neighbors
    rng = np.random.default_rng(10)
    fbars, _ = block_fbars(8, 2, 1, 0.02, rng)
    res = consensus.fit_consensus(fbars, k=5, c=4, max_iter=8)
    assert not res.converged
    assert res.n_components != 4
    assert len(res.lam_trace) == 8
