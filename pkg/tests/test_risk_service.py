import numpy as np
import pytest
from scipy import stats

from conftest import load_data_params
from exceptions import InsufficientDataError, UnsupportedLambdaError, ValidationError
from models import RiskMethod, Standardization
from services import analytic_service, moment_service, risk_service

INDICES = ["sp500", "csi300"]
LEVELS = ["0.05", "0.01"]


@pytest.mark.parametrize("index", INDICES)
@pytest.mark.parametrize("level", LEVELS)
def test_closed_form_matches_published_risk(return_summaries, index, level):
    params = load_data_params(f"{index}_lambda1")
    report = risk_service.var_es_closed(params, float(level))
    var, es = return_summaries[index]["risk"]["1"][level]
    assert report.var == pytest.approx(var, abs=2e-3)
    assert report.es == pytest.approx(es, abs=2e-3)
    assert report.method == RiskMethod.CLOSED_FORM
    assert report.es < report.var


@pytest.mark.parametrize("index", INDICES)
@pytest.mark.parametrize("level", LEVELS)
def test_normal_theory_matches_published_risk(return_summaries, index, level):
    entry = return_summaries[index]
    report = risk_service.var_es_normal(entry["mean"], entry["mu2"], float(level))
    var, es = entry["risk"]["normal"][level]
    assert report.var == pytest.approx(var, abs=2e-3)
    assert report.es == pytest.approx(es, abs=2e-3)


@pytest.mark.parametrize("index", INDICES)
def test_sample_risk_figures_are_ordered(return_summaries, index):
    sample = return_summaries[index]["risk"]["sample"]
    for level in LEVELS:
        var, es = sample[level]
        assert es < var < 0.0
    assert sample["0.01"][0] < sample["0.05"][0]
    assert sample["0.01"][1] < sample["0.05"][1]


@pytest.mark.parametrize("index", INDICES)
def test_su_tail_is_closer_to_sample_than_normal(return_summaries, index):
    entry = return_summaries[index]
    su = risk_service.var_es_closed(load_data_params(f"{index}_lambda1"), 0.01)
    normal = risk_service.var_es_normal(entry["mean"], entry["mu2"], 0.01)
    var, es = entry["risk"]["sample"]["0.01"]
    assert abs(su.var - var) < abs(normal.var - var)
    assert abs(su.es - es) < abs(normal.es - es)


def test_es_is_var_minus_scaled_put(su_params):
    for p in (0.001, 0.01, 0.05, 0.2):
        var = risk_service.var_closed(su_params, p)
        put = analytic_service.option_price(var, False, su_params)
        assert risk_service.es_closed(su_params, p) == pytest.approx(var - put / p, rel=1e-10)


def test_closed_form_needs_lambda_one(su_params):
    with pytest.raises(UnsupportedLambdaError):
        risk_service.es_closed(su_params.with_lambda(0.0), 0.05)


@pytest.mark.parametrize("p", [0.0, 1.0, -0.5, 1.5])
def test_level_must_be_inside_the_unit_interval(su_params, p):
    with pytest.raises(ValidationError):
        risk_service.var_es_closed(su_params, p)


def test_empirical_interpolates_the_rank():
    data = np.arange(100, 0, -1, dtype=float)
    report = risk_service.empirical_var_es(data, 0.05)
    # rank 0.05 * 101 = 5.05 between the 5th and 6th smallest
    assert report.var == pytest.approx(5.05, rel=1e-14)
    assert report.es == pytest.approx(3.0, rel=1e-14)
    assert report.method == RiskMethod.EMPIRICAL


def test_empirical_fractional_tail_mass():
    data = np.arange(1.0, 11.0)
    report = risk_service.empirical_var_es(data, 0.25)
    # tail mass 2.5: 1 + 2 + half of 3, divided by 2.5
    assert report.es == pytest.approx((1.0 + 2.0 + 1.5) / 2.5, rel=1e-14)


def test_empirical_needs_a_tail():
    with pytest.raises(InsufficientDataError):
        risk_service.empirical_var_es(np.arange(100.0), 0.005)


def test_normal_needs_positive_variance():
    with pytest.raises(ValidationError):
        risk_service.var_es_normal(0.0, 0.0, 0.05)


@pytest.mark.parametrize("fast_su", [False, True])
def test_mc_risk_matches_closed_form(su_params, seed, fast_su):
    exact = risk_service.var_es_closed(su_params, 0.05)
    report = risk_service.var_es_mc(su_params, 0.05, 200_000, seed, n_groups=50, fast_su=fast_su)
    assert report.method == RiskMethod.MONTE_CARLO
    assert abs(report.var - exact.var) < 4.0 * report.var_std_err
    assert abs(report.es - exact.es) < 4.0 * report.es_std_err


def test_mc_risk_is_thread_count_invariant(su_params, seed):
    one = risk_service.var_es_mc(su_params, 0.05, 50_000, seed, n_groups=10, threads=1)
    four = risk_service.var_es_mc(su_params, 0.05, 50_000, seed, n_groups=10, threads=4)
    assert one == four


def test_mc_risk_guards(su_params, seed):
    with pytest.raises(InsufficientDataError):
        risk_service.var_es_mc(su_params, 0.01, 1000, seed, n_groups=50)
    with pytest.raises(UnsupportedLambdaError):
        risk_service.var_es_mc(su_params.with_lambda(0.0), 0.05, 10_000, seed, fast_su=True)
    with pytest.raises(ValidationError):
        risk_service.var_es_mc(su_params, 0.05, 10_001, seed, n_groups=50)


@pytest.mark.slow
@pytest.mark.parametrize("index", INDICES)
@pytest.mark.parametrize("level", LEVELS)
def test_mc_matches_published_lambda_zero_risk(return_summaries, seed, index, level):
    params = load_data_params(f"{index}_lambda0")
    report = risk_service.var_es_mc(params, float(level), 1_000_000, seed, n_groups=50)
    var, es = return_summaries[index]["risk"]["0"][level]
    # published figures are themselves simulated and rounded
    assert abs(report.var - var) < 4.0 * report.var_std_err + 5e-3
    assert abs(report.es - es) < 4.0 * report.es_std_err + 5e-3


def test_probability_plot_scores(su_params, seed):
    data = analytic_service.sample(su_params, 2000, seed)
    frame = risk_service.probability_plot_scores(data, su_params)
    assert list(frame.columns) == ["x", "z0", "z1", "z2"]
    assert np.all(np.diff(frame["x"]) >= 0)
    assert frame["z0"].iloc[0] == pytest.approx(-frame["z0"].iloc[-1], rel=1e-12)
    assert frame["z1"].mean() == pytest.approx(0.0, abs=1e-12)
    assert np.mean(frame["z1"] ** 2) == pytest.approx(1.0, rel=1e-12)
    expected = stats.norm.ppf(analytic_service.cdf(frame["x"].to_numpy(), su_params))
    np.testing.assert_allclose(frame["z2"], expected, rtol=1e-8, atol=1e-10)
    # a well-specified model lines up with the plotting positions away from the extremes
    body = frame.iloc[200:1800]
    assert np.max(np.abs(body["z2"] - body["z0"])) < 0.3


def test_probability_plot_rejects_constant_data(su_params):
    with pytest.raises(ValidationError):
        risk_service.probability_plot_scores(np.ones(10), su_params)


def test_probability_plot_model_standardization(su_params, seed):
    data = analytic_service.sample(su_params, 500, seed)
    frame = risk_service.probability_plot_scores(data, su_params, standardize=Standardization.MODEL)
    summary = moment_service.central_moments(su_params)
    expected = (np.sort(data) - summary.mean) / np.sqrt(summary.mu2)
    np.testing.assert_allclose(frame["z1"], expected, rtol=1e-12, atol=1e-14)
    sample = risk_service.probability_plot_scores(data, su_params)
    np.testing.assert_array_equal(frame["z2"], sample["z2"])

    with pytest.raises(ValidationError):
        risk_service.probability_plot_scores(data, su_params, standardize="robust")
