import math

import numpy as np
import numpy.testing as npt
import pytest
import torch
from scipy.integrate import quad

from durationlab.console import Console
from durationlab.errors import InvalidArgumentError, ParameterError
from durationlab.families import FAMILY_DICT, get_family, load_families
from durationlab.families.qexp import QExpParams, qexp_pdf
from durationlab.families.weibull import WeibullParams, weibull_pdf
from durationlab.utils.executor import gauss_newton, minimize_lbfgs


def test_loader_finds_both_families():
    assert set(FAMILY_DICT) == {"weibull", "qexp"}
    assert get_family("weibull").param_names == ("alpha", "beta")
    assert get_family("qexp").param_names == ("mu", "q")
    with pytest.raises(InvalidArgumentError):
        get_family("lognormal")


def test_loader_debug_lines_follow_debug_flag(monkeypatch, capsys):
    monkeypatch.setattr(Console, "debug_enabled", False)
    load_families()
    assert "DEBUG" not in capsys.readouterr().out

    monkeypatch.setattr(Console, "debug_enabled", True)
    load_families()
    assert "[FAMILIES] DEBUG: Loaded family: weibull" in capsys.readouterr().out


@pytest.mark.parametrize("beta", [0.4, 0.67, 1.0, 2.0])
def test_weibull_pdf_normalized(beta):
    params = WeibullParams(0.41, beta)
    total, _ = quad(lambda t: weibull_pdf(t, params), 0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("q", [1.2, 1.5, 1.67])
def test_qexp_pdf_normalized(q):
    params = QExpParams(0.24, q)
    total, _ = quad(lambda t: qexp_pdf(t, params), 0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-4)


def test_qexp_tends_to_exponential():
    tau = np.linspace(0.0, 3.0, 31)
    npt.assert_allclose(qexp_pdf(tau, QExpParams(0.5, 1.0 + 1e-7)), np.exp(-tau / 0.5) / 0.5, rtol=1e-5)


def test_support_checks():
    assert qexp_pdf(0.0, QExpParams(0.24, 1.67)) == pytest.approx(1 / 0.24)
    with pytest.raises(InvalidArgumentError):
        weibull_pdf(0.0, WeibullParams(1.0, 0.5))
    with pytest.raises(InvalidArgumentError):
        qexp_pdf(np.array([1.0, -1.0]), QExpParams(1.0, 1.5))
    with pytest.raises(ParameterError):
        WeibullParams(-1.0, 0.5)
    with pytest.raises(ParameterError):
        QExpParams(1.0, 0.9)


def test_weibull_mean():
    assert WeibullParams(2.0, 1.0).mean() == pytest.approx(2.0)
    assert WeibullParams(1.0, 0.5).mean() == pytest.approx(math.gamma(3.0))


@pytest.mark.parametrize(
    "name, params",
    [("weibull", WeibullParams(0.41, 0.67)), ("qexp", QExpParams(0.24, 1.67))],
)
def test_torch_log_pdf_matches_numpy(name, params):
    family = get_family(name)
    tau = np.array([0.01, 0.1, 0.5, 2.0, 30.0])
    theta = torch.as_tensor(family.from_params(params), dtype=torch.float64)
    log_pdf = family.log_pdf(theta, torch.as_tensor(tau, dtype=torch.float64)).numpy()
    npt.assert_allclose(log_pdf, np.log(family.pdf(tau, params)), rtol=1e-10, atol=1e-12)
    back = family.to_params(family.from_params(params))
    npt.assert_allclose(list(back.as_dict().values()), list(params.as_dict().values()))


def test_initial_guesses_count():
    tau = np.array([0.1, 0.2, 0.5, 1.0, 3.0])
    for name in ("weibull", "qexp"):
        starts = get_family(name).initial_guesses(tau, np.ones_like(tau), 4)
        assert len(starts) == 5
        assert all(s.shape == (2,) for s in starts)


def test_lbfgs_minimizes_quadratic():
    target = torch.tensor([1.5, -0.5], dtype=torch.float64)
    outcome = minimize_lbfgs(lambda t: torch.sum((t - target) ** 2), np.zeros(2), num_iters=50)
    npt.assert_allclose(outcome.theta, target.numpy(), atol=1e-6)
    assert outcome.converged
    assert outcome.trajectory.shape[1] == 2


def test_gauss_newton_solves_linear_least_squares():
    x = torch.linspace(0, 1, 20, dtype=torch.float64)
    y = 2.0 * x + 0.5
    outcome = gauss_newton(lambda t: t[0] * x + t[1] - y, np.array([0.0, 0.0]), num_iters=50)
    npt.assert_allclose(outcome.theta, [2.0, 0.5], atol=1e-8)
    assert outcome.loss == pytest.approx(0.0, abs=1e-16)


def test_gauss_newton_reports_stall(capsys):
    # any move away from 0.5 raises the residual
    outcome = gauss_newton(lambda t: t + 1e6 * torch.relu(0.5 - t), np.array([0.5]), num_iters=20)
    assert not outcome.converged
    assert outcome.reason.startswith("stalled")
    npt.assert_array_equal(outcome.theta, [0.5])
    assert outcome.loss == pytest.approx(0.25)
    assert "WARNING" in capsys.readouterr().out
