import numpy as np
import numpy.testing as npt
import pytest

from durationlab.criterion import FitConfig
from durationlab.density import DensityEstimate, empirical_density, log_edges
from durationlab.errors import ConvergenceError, InvalidArgumentError
from durationlab.estimators import (
    compare_models,
    fit,
    fit_qexp_mle,
    fit_qexp_nlse,
    fit_weibull_mle,
    fit_weibull_nlse,
)
from durationlab.families.qexp import QExpParams, qexp_pdf
from durationlab.families.weibull import WeibullParams, weibull_pdf
from durationlab.synthetic import gen_qexp_iid, gen_weibull_iid, spawn_seeds


@pytest.fixture(scope="module")
def weibull_sample():
    return gen_weibull_iid(0.41, 0.67, 50_000, seed=7)


@pytest.fixture(scope="module")
def large_weibull_sample():
    return gen_weibull_iid(0.41, 0.67, 1_000_000, seed=9)


@pytest.fixture(scope="module")
def qexp_sample():
    return gen_qexp_iid(0.24, 1.67, 50_000, seed=8)


def test_weibull_mle_recovers_parameters(weibull_sample):
    result = fit_weibull_mle(weibull_sample)
    assert result.params.alpha == pytest.approx(0.41, abs=0.02)
    assert result.params.beta == pytest.approx(0.67, abs=0.02)
    assert result.converged
    assert result.grad_norm < 1e-6
    assert result.n == weibull_sample.size
    assert 0 < result.chi < 1


def test_weibull_mle_scale_equivariant(weibull_sample):
    a = fit_weibull_mle(weibull_sample)
    b = fit_weibull_mle(weibull_sample * 37.0)
    npt.assert_allclose(b.params.alpha, 37.0 * a.params.alpha, rtol=1e-6)
    npt.assert_allclose(b.params.beta, a.params.beta, rtol=1e-6)


def test_weibull_mle_preconditions():
    with pytest.raises(InvalidArgumentError):
        fit_weibull_mle(np.ones(10))
    with pytest.raises(InvalidArgumentError):
        fit_weibull_mle(np.r_[np.ones(200), 0.0])
    with pytest.raises(ConvergenceError):
        fit_weibull_mle(np.full(200, 2.5))


def test_qexp_mle_recovers_parameters(qexp_sample):
    result = fit_qexp_mle(qexp_sample)
    assert result.params.mu == pytest.approx(0.24, abs=0.01)
    assert result.params.q == pytest.approx(1.67, abs=0.04)
    assert len(result.starts) == 5


def test_qexp_mle_accepts_zeros(qexp_sample):
    result = fit_qexp_mle(np.r_[qexp_sample[:5_000], np.zeros(50)])
    assert result.n == 5_050
    with pytest.raises(InvalidArgumentError):
        fit_qexp_mle(np.r_[qexp_sample[:500], -1.0])


def _exact_density(pdf, lo: float, hi: float) -> DensityEstimate:
    edges = log_edges(lo, hi, 20)
    centers = np.sqrt(edges[:-1] * edges[1:])
    return DensityEstimate(
        edges=edges, centers=centers, density=pdf(centers), counts=np.full(centers.size, 100), n_samples=100 * centers.size
    )


def test_nlse_recovers_noise_free_density():
    w = fit_weibull_nlse(_exact_density(lambda t: weibull_pdf(t, WeibullParams(0.41, 0.67)), 1e-3, 10.0))
    npt.assert_allclose([w.params.alpha, w.params.beta], [0.41, 0.67], rtol=1e-5)
    assert w.chi == pytest.approx(0.0, abs=1e-6)
    assert w.estimator == "nlse"

    q = fit_qexp_nlse(_exact_density(lambda t: qexp_pdf(t, QExpParams(0.24, 1.67)), 1e-3, 100.0))
    npt.assert_allclose([q.params.mu, q.params.q], [0.24, 1.67], rtol=1e-5)


def test_nlse_on_samples(large_weibull_sample, qexp_sample):
    w = fit_weibull_nlse(empirical_density(large_weibull_sample, 20))
    assert w.params.alpha == pytest.approx(0.41, abs=0.03)
    assert w.params.beta == pytest.approx(0.67, abs=0.03)
    q = fit_qexp_nlse(empirical_density(qexp_sample, 20))
    assert 1.3 < q.params.q < 2.0


def test_tail_truncation_biases_mle_more_than_nlse(large_weibull_sample):
    # drop the top 5% of the distribution: u = (tau / alpha)^beta > 3
    kept = large_weibull_sample[large_weibull_sample < 0.41 * 3.0 ** (1 / 0.67)]
    mle = fit_weibull_mle(kept)
    nlse = fit_weibull_nlse(empirical_density(kept, 20))
    # the likelihood reads the missing tail as a lighter one
    assert mle.params.beta > 0.70
    assert abs(nlse.params.beta - 0.67) < abs(mle.params.beta - 0.67)


def test_nlse_needs_enough_bins():
    density = empirical_density(np.linspace(1.0, 1.5, 200), 20)
    with pytest.raises(InvalidArgumentError):
        fit_weibull_nlse(density, FitConfig(min_bins=10))


def test_fit_drops_zeros_and_validates_names(weibull_sample):
    with_zeros = np.r_[weibull_sample[:2_000], np.zeros(100)]
    assert fit(with_zeros, "weibull", "mle").n == 2_000
    with pytest.raises(InvalidArgumentError):
        fit(weibull_sample, "lognormal", "mle")
    with pytest.raises(InvalidArgumentError):
        fit(weibull_sample, "weibull", "moments")


def test_to_row(weibull_sample):
    row = fit(weibull_sample, "weibull", "mle").to_row()
    assert {"family", "estimator", "alpha", "beta", "chi", "n", "converged"} <= row.keys()


def test_model_selection_single_sample(weibull_sample, qexp_sample):
    assert compare_models(weibull_sample)["mle"]["better"] == "weibull"
    assert compare_models(qexp_sample)["mle"]["better"] == "qexp"


@pytest.mark.slow
def test_weibull_mle_recovery_many_trials():
    errors = []
    for seed in spawn_seeds(2003, 100):
        result = fit_weibull_mle(gen_weibull_iid(0.41, 0.67, 100_000, seed))
        errors.append((abs(result.params.alpha - 0.41), abs(result.params.beta - 0.67)))
    mean_alpha_err, mean_beta_err = np.mean(errors, axis=0)
    assert mean_alpha_err < 0.01
    assert mean_beta_err < 0.01


@pytest.mark.slow
def test_qexp_mle_recovery_many_trials():
    hits = 0
    for seed in spawn_seeds(2004, 100):
        result = fit_qexp_mle(gen_qexp_iid(0.24, 1.67, 100_000, seed))
        hits += abs(result.params.mu - 0.24) < 0.01 and abs(result.params.q - 1.67) < 0.02
    assert hits >= 95


def _weibull_beats_qexp(sample: np.ndarray) -> bool:
    return fit(sample, "weibull", "mle").chi < fit(sample, "qexp", "mle").chi


@pytest.mark.slow
def test_model_selection_many_trials():
    weibull_wins = sum(_weibull_beats_qexp(gen_weibull_iid(0.41, 0.67, 100_000, s)) for s in spawn_seeds(5, 100))
    qexp_wins = sum(not _weibull_beats_qexp(gen_qexp_iid(0.24, 1.67, 100_000, s)) for s in spawn_seeds(6, 100))
    assert weibull_wins >= 95
    assert qexp_wins >= 95
