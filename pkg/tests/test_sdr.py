import numpy as np
import pytest

from sdrmatch.dataset import ObservationalSample
from sdrmatch.errors import InsufficientData, InvalidArgument, SliceError
from sdrmatch.numerics import RngStream
from sdrmatch.sdr import (
    SlicedMoments,
    candidate_matrix,
    estimate_central_subspace,
    reduce_covariates,
    sequential_rank_test,
    slice_by_quantiles,
)
from sdrmatch.simulation import generate, scenario


def make_sample(x, t, y):
    return ObservationalSample(np.asarray(x, float), np.asarray(t), np.asarray(y, float))


class TestSlicing:
    def test_order_statistic_boundaries(self):
        y = np.arange(1.0, 11.0)
        z = np.arange(10.0).reshape(-1, 1)
        sliced = slice_by_quantiles(y, z, 5)
        assert np.allclose(sliced.boundaries, [2, 4, 6, 8, 10])
        assert sliced.slice_sizes.tolist() == [2, 2, 2, 2, 2]

    def test_all_ties_raises(self):
        y = np.ones(8)
        z = np.zeros((8, 2))
        with pytest.raises(SliceError) as err:
            slice_by_quantiles(y, z, 2)
        assert err.value.effective_slices == 1

    def test_single_slice_rejected(self):
        with pytest.raises(InvalidArgument):
            slice_by_quantiles(np.arange(5.0), np.zeros((5, 1)), 1)

    def test_partial_ties_merge(self):
        # heavy ties at zero should merge, leaving at least two slices
        y = np.array([0.0] * 6 + [1.0, 2.0, 3.0, 4.0])
        z = np.arange(10.0).reshape(-1, 1)
        sliced = slice_by_quantiles(y, z, 5)
        assert 2 <= sliced.slice_count <= 5
        assert sliced.slice_sizes.sum() == 10

    def test_sizes_cover_group(self):
        rng = RngStream(21)
        y = rng.normal(97)
        z = rng.normal((97, 3))
        sliced = slice_by_quantiles(y, z, 5)
        assert sliced.slice_sizes.sum() == 97
        assert (sliced.slice_sizes > 0).all()


class TestCandidateMatrix:
    def test_single_slice_zero_mean(self):
        # single slice: its mean is the standardized overall mean, i.e. zero
        sliced = SlicedMoments(
            slice_count=1,
            boundaries=np.array([1.0]),
            slice_means=np.zeros((1, 3)),
            slice_sizes=np.array([10]),
        )
        assert np.array_equal(candidate_matrix(sliced), np.zeros((3, 3)))

    def test_two_slice_hand_example(self):
        sliced = SlicedMoments(
            slice_count=2,
            boundaries=np.array([0.0, 1.0]),
            slice_means=np.array([[1.0, 0.0], [-1.0, 0.0]]),
            slice_sizes=np.array([5, 5]),
        )
        assert np.allclose(candidate_matrix(sliced), np.diag([1.0, 0.0]))

    def test_single_index_recovery(self):
        rng = RngStream(33)
        n, p = 2000, 5
        x = rng.normal((n, p))
        y = (x[:, 0] + 0.5) ** 2 + 0.1 * rng.normal(n)
        sliced = slice_by_quantiles(y, x - x.mean(axis=0), 5)
        m = candidate_matrix(sliced)
        from sdrmatch.numerics import sym_eigen
        top = sym_eigen(m).eigenvectors[:, 0]
        cosine = abs(top[0]) / np.linalg.norm(top)
        assert cosine >= 0.95

    def test_psd(self):
        rng = RngStream(35)
        means = rng.normal((4, 3))
        sliced = SlicedMoments(4, np.arange(4.0), means, np.full(4, 5))
        from sdrmatch.numerics import sym_eigen
        values = sym_eigen(candidate_matrix(sliced)).eigenvalues
        assert values.min() >= -1e-10


class TestSequentialRankTest:
    def test_all_zero_eigenvalues(self):
        rank, pvalues = sequential_rank_test(np.zeros(6), 100, 6, 5, 0.05)
        assert rank == 0
        assert pvalues[0] == 1.0

    def test_one_strong_direction(self):
        lam = np.array([0.5, 1e-9] + [0.0] * 8)
        rank, pvalues = sequential_rank_test(lam, 250, 10, 5, 0.05)
        assert rank == 1
        assert pvalues[0] < 0.05 < pvalues[1]

    def test_cap_when_everything_significant(self):
        lam = np.full(10, 5.0)
        rank, _ = sequential_rank_test(lam, 1000, 10, 5, 0.05)
        assert rank == min(10, 5 - 1)


class TestEstimateCentralSubspace:
    def test_model_one_control_group(self):
        spec = scenario("case1-I")
        ranks, cosines = [], []
        for rep in range(40):
            data = generate(spec, RngStream(77, rep))
            est = estimate_central_subspace(data.sample, 0)
            ranks.append(0 if est.rank_fallback else est.selected_rank)
            lead = est.composite_map[:, 0]
            cosines.append(abs(lead[0]) / np.linalg.norm(lead))
        assert np.mean(np.asarray(ranks) == 1) >= 0.8
        assert np.mean(cosines) >= 0.9

    def test_pure_noise_falls_back(self):
        flags = []
        for rep in range(40):
            rng = RngStream(78, rep)
            x = rng.normal((200, 4))
            y = rng.normal(200)
            sample = make_sample(x, np.zeros(200, dtype=int), y)
            est = estimate_central_subspace(sample, 0)
            flags.append(est.rank_fallback)
        assert np.mean(flags) > 0.5

    def test_rank_respects_cap(self):
        spec = scenario("case1-III")
        data = generate(spec, RngStream(79, 0))
        est = estimate_central_subspace(data.sample, 0, n_slices=5)
        assert 1 <= est.selected_rank <= 4

    def test_small_group_rejected(self):
        x = np.vstack([np.eye(3), np.eye(3), np.eye(3)])
        t = np.array([0, 0, 0, 1, 1, 1, 1, 1, 1])
        sample = make_sample(x, t, np.arange(9.0))
        with pytest.raises(InsufficientData):
            estimate_central_subspace(sample, 0)

    def test_basis_columns_orthonormal(self):
        spec = scenario("case1-III")
        data = generate(spec, RngStream(80, 1))
        est = estimate_central_subspace(data.sample, 1)
        gram = est.basis.T @ est.basis
        assert np.abs(gram - np.eye(est.selected_rank)).max() < 1e-8


class TestReduceCovariates:
    def test_composite_equals_basis_after_standardization(self):
        spec = scenario("case1-II")
        data = generate(spec, RngStream(81, 0))
        est = estimate_central_subspace(data.sample, 0)
        x = data.sample.covariates
        from sdrmatch.dataset import apply_standardization
        direct = reduce_covariates(est, x)
        via_std = apply_standardization(est.standardization, x) @ est.basis
        assert np.array_equal(direct, via_std)

    def test_coordinate_selector(self):
        from sdrmatch.dataset import StandardizationMap
        from sdrmatch.sdr import CentralSubspaceEstimate
        basis = np.array([[1.0], [0.0], [0.0]])
        est = CentralSubspaceEstimate(
            group_label=0,
            standardization=StandardizationMap(np.zeros(3), np.eye(3), 0),
            candidate=np.zeros((3, 3)),
            eigenvalues=np.zeros(3),
            basis=basis,
            selected_rank=1,
            test_pvalues=np.zeros(1),
            rank_fallback=False,
            composite_map=basis,
        )
        x = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(reduce_covariates(est, x)[:, 0], x[:, 0])

    def test_rank_two_selector_drops_third(self):
        from sdrmatch.dataset import StandardizationMap
        from sdrmatch.sdr import CentralSubspaceEstimate
        basis = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        est = CentralSubspaceEstimate(
            group_label=0,
            standardization=StandardizationMap(np.zeros(3), np.eye(3), 0),
            candidate=np.zeros((3, 3)),
            eigenvalues=np.zeros(3),
            basis=basis,
            selected_rank=2,
            test_pvalues=np.zeros(1),
            rank_fallback=False,
            composite_map=basis,
        )
        x = np.arange(12.0).reshape(4, 3)
        assert np.array_equal(reduce_covariates(est, x), x[:, :2])

    def test_dimension_mismatch(self):
        spec = scenario("case1-I")
        data = generate(spec, RngStream(82, 0))
        est = estimate_central_subspace(data.sample, 0)
        with pytest.raises(InvalidArgument):
            reduce_covariates(est, np.ones((2, 3)))


class TestInvariants:
    def test_slice_mean_identity(self):
        # size-weighted slice means of standardized covariates sum to zero
        rng = RngStream(83)
        x = rng.normal((150, 4))
        y = x[:, 0] + 0.2 * rng.normal(150)
        sample = make_sample(x, np.zeros(150, dtype=int), y)
        from sdrmatch.dataset import apply_standardization, fit_standardization
        smap = fit_standardization(sample, 0)
        z = apply_standardization(smap, x)
        sliced = slice_by_quantiles(y, z, 5)
        weighted = (sliced.slice_sizes[:, None] * sliced.slice_means).sum(axis=0)
        assert np.abs(weighted).max() < 1e-8 * 150

    def test_monotone_outcome_transform_leaves_candidate_unchanged(self):
        rng = RngStream(84)
        x = rng.normal((120, 3))
        y = np.sin(x[:, 0]) + 0.1 * rng.normal(120)
        z = x - x.mean(axis=0)
        before = candidate_matrix(slice_by_quantiles(y, z, 5))
        after = candidate_matrix(slice_by_quantiles(np.exp(y), z, 5))
        assert np.array_equal(before, after)
