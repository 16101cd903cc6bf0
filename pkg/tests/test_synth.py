import numpy as np
import pytest
from pydantic import ValidationError

from mirror_select.errors import BadDimension
from mirror_select.linalg import is_standardized
from mirror_select.rng import make_rng
from mirror_select.synth import (
    CovarianceKind,
    CovarianceSpec,
    DesignDistribution,
    DesignSpec,
    GraphKind,
    GraphSpec,
    build_covariance,
    build_precision,
    sample_conditioned_pair_means,
    sample_design,
    sample_gaussian_graph_data,
    sample_linear_truth,
    sample_normal_means,
    sample_response,
)


def test_toeplitz_block_entries():
    sigma = build_covariance(CovarianceSpec(kind=CovarianceKind.TOEPLITZ_BLOCK, rho=0.5, p=50))
    # Blocks of 5: lag k carries (4 - k) / 4 * rho.
    assert sigma[0, 0] == 1.0
    assert sigma[0, 1] == pytest.approx(0.375)
    assert sigma[0, 3] == pytest.approx(0.125)
    assert sigma[0, 4] == 0.0
    assert sigma[0, 5] == 0.0
    assert sigma[7, 8] == pytest.approx(0.375)
    assert np.allclose(sigma, sigma.T)


def test_toeplitz_needs_ten_blocks_of_two_or_more():
    with pytest.raises(BadDimension):
        build_covariance(CovarianceSpec(p=55))
    with pytest.raises(BadDimension):
        build_covariance(CovarianceSpec(p=10))


def test_constant_correlation():
    sigma = build_covariance(CovarianceSpec(kind=CovarianceKind.CONSTANT, rho=0.3, p=4))
    assert np.allclose(np.diag(sigma), 1.0)
    assert sigma[1, 3] == pytest.approx(0.3)


def test_rho_must_be_below_one():
    with pytest.raises(ValidationError):
        CovarianceSpec(rho=1.0, p=20)


def test_gaussian_design_moments():
    spec = DesignSpec(
        covariance=CovarianceSpec(kind=CovarianceKind.CONSTANT, rho=0.5, p=5), n=20_000
    )
    x = sample_design(spec, make_rng(1), standardize_output=False)
    assert np.allclose(x.mean(axis=0), 0.0, atol=0.05)
    assert np.allclose(np.cov(x.T), build_covariance(spec.covariance), atol=0.05)


def test_student_t_design_has_inflated_variance():
    spec = DesignSpec(
        distribution=DesignDistribution.STUDENT_T,
        covariance=CovarianceSpec(kind=CovarianceKind.IDENTITY, p=3),
        n=50_000,
        df=5,
    )
    x = sample_design(spec, make_rng(2), standardize_output=False)
    assert np.allclose(x.var(axis=0), 5 / 3, rtol=0.1)


def test_mixture_design_is_bimodal_shift():
    spec = DesignSpec(
        distribution=DesignDistribution.MIXTURE2,
        covariance=CovarianceSpec(kind=CovarianceKind.IDENTITY, p=2),
        n=40_000,
    )
    x = sample_design(spec, make_rng(3), standardize_output=False)
    # A common +-0.5 shift adds 0.25 to each variance and covariance.
    cov = np.cov(x.T)
    assert cov[0, 0] == pytest.approx(1.25, abs=0.05)
    assert cov[0, 1] == pytest.approx(0.25, abs=0.05)


def test_design_is_standardized_by_default():
    spec = DesignSpec(covariance=CovarianceSpec(p=20), n=100)
    assert is_standardized(sample_design(spec, make_rng(4)))


def test_linear_truth_and_response():
    truth = sample_linear_truth(100, 10, 5.0, 400, make_rng(5))
    assert len(truth.s1) == 10
    assert np.count_nonzero(truth.beta_star) == 10
    assert np.array_equal(np.flatnonzero(truth.beta_star), truth.s1)

    x = make_rng(6).standard_normal((400, 100))
    y = sample_response(x, truth, make_rng(7), noise=False)
    fitted = x @ truth.beta_star
    assert np.allclose(y, fitted - fitted.mean())


def test_linear_truth_signal_scale():
    scale = 5.0 * np.sqrt(np.log(200) / 100)
    truth = sample_linear_truth(200, 200, 5.0, 100, make_rng(8))
    assert truth.beta_star.std() == pytest.approx(scale, rel=0.15)
    variance = sample_linear_truth(200, 200, 5.0, 100, make_rng(8), delta_as_variance=True)
    assert variance.beta_star.std() == pytest.approx(np.sqrt(scale), rel=0.15)


def test_banded_precision_entries_and_edges():
    precision, edges = build_precision(GraphSpec(p=20, s=2, a=-0.6, c=1.5))
    assert precision[0, 1] == pytest.approx(-(0.6 ** (1 / 1.5)))
    assert precision[0, 2] == pytest.approx(-(0.6 ** (2 / 1.5)))
    assert precision[0, 3] == 0.0
    assert (0, 1) in edges and (0, 2) in edges and (0, 3) not in edges
    assert len(edges) == 19 + 18
    assert np.linalg.eigvalsh(precision)[0] > 0


def test_repair_keeps_edges_and_restores_definiteness():
    spec = GraphSpec(p=100, s=8, a=-0.6, c=1.5)
    precision, edges = build_precision(spec)
    assert np.linalg.eigvalsh(precision)[0] > 0
    rows, cols = np.nonzero(np.triu(precision, k=1))
    assert edges == frozenset(zip(rows.tolist(), cols.tolist()))
    # Only the diagonal moves.
    assert np.all(np.diag(precision) >= 1.0)


def test_block_precision_magnitudes():
    spec = GraphSpec(kind=GraphKind.BLOCK_DIAG, p=50, block=25)
    precision, edges = build_precision(spec, make_rng(9))
    first = np.abs(precision[:25, :25][np.triu_indices(25, k=1)])
    assert np.all((first >= 0.4) & (first <= 0.8))
    assert np.all(precision[:25, 25:] == 0)
    assert len(edges) == 2 * 300
    assert np.linalg.eigvalsh(precision)[0] > 0


def test_block_precision_needs_a_stream_and_divisible_p():
    with pytest.raises(ValueError):
        build_precision(GraphSpec(kind=GraphKind.BLOCK_DIAG, p=50))
    with pytest.raises(BadDimension):
        build_precision(GraphSpec(kind=GraphKind.BLOCK_DIAG, p=60, block=25), make_rng(10))


def test_graph_data_covariance_inverts_precision():
    spec = GraphSpec(p=6, s=1, a=-0.4, c=1.0)
    x, _ = sample_gaussian_graph_data(spec, 60_000, make_rng(11), standardize_output=False)
    precision, _ = build_precision(spec)
    assert np.allclose(np.cov(x.T), np.linalg.inv(precision), atol=0.03)


def test_normal_means_sample():
    x, s1, mu = sample_normal_means(5000, 30, 6, 0.5, make_rng(12))
    assert x.shape == (5000, 30)
    assert len(s1) == 6
    assert np.array_equal(np.flatnonzero(mu), s1)
    assert np.allclose(x.mean(axis=0), mu, atol=0.06)


def test_conditioned_pair_has_pinned_means():
    n = 400
    x = sample_conditioned_pair_means(n, 50, make_rng(13))
    z = np.sqrt(n) * x[:, :2].mean(axis=0)
    assert z[0] == pytest.approx(2.3263, abs=1e-3)
    assert z[0] - z[1] == pytest.approx(0.02)
    assert x.shape == (n, 50)
