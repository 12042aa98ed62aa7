import math

import numpy as np
import pytest

from conftest import load_data_params
from exceptions import InfeasibleMomentsError, InsufficientDataError, ValidationError
from models import MomentSummary, NsvhParams
from services import moment_service


def summary_of(entry) -> MomentSummary:
    return MomentSummary(mean=entry["mean"], mu2=entry["mu2"], skew=entry["skew"], exkurt=entry["exkurt"])


def test_lambda_one_variance_has_su_form():
    s_var, rho = 0.7, -0.3
    w = math.exp(s_var)
    mu2 = moment_service.canonical_moments(s_var, rho, 1.0)[0]
    assert mu2 == pytest.approx((w * w - 1) / 2 + rho * rho * (w - 1) ** 2 / 2, rel=1e-14)


@pytest.mark.parametrize("s_var, rho", [(0.05, 0.2), (0.5, -0.6), (1.5, 0.9), (0.3, 0.0)])
def test_reduced_lambda_zero_forms(s_var, rho):
    skew, exkurt = moment_service.skew_exkurt(s_var, rho, 0.0)
    reduced = moment_service.normal_sabr_skew_exkurt(math.expm1(s_var), rho)
    assert skew == pytest.approx(reduced[0], rel=1e-10, abs=1e-14)
    assert exkurt == pytest.approx(reduced[1], rel=1e-10)


def test_moments_are_finite_at_removable_singularities():
    for lam in (-1.0, -3.0, -5.0):
        mu2, mu3, mu4 = moment_service.canonical_moments(0.4, 0.3, lam)
        assert all(math.isfinite(m) for m in (mu2, mu3, mu4))
        assert mu2 > 0 and mu4 > 0


def test_zero_alpha_moments_are_normal():
    p = NsvhParams(sigma0=0.5, alpha=0.0, rho=0.3, lam=1.0, f0=0.1, t_expiry=4.0)
    summary = moment_service.central_moments(p)
    assert (summary.mean, summary.mu2, summary.skew, summary.exkurt) == (0.1, 1.0, 0.0, 0.0)


@pytest.mark.parametrize("index", ["sp500", "csi300"])
@pytest.mark.parametrize("lam, fitter", [(0, moment_service.fit_normal_sabr), (1, moment_service.fit_su)])
def test_fits_match_published_parameters(return_summaries, index, lam, fitter):
    entry = return_summaries[index]
    params = fitter(summary_of(entry), 1.0)
    published = entry["fits"][str(lam)]
    # published values carry five significant figures and come from rounded moments
    assert params.rho == pytest.approx(published["rho"], abs=5e-5)
    assert params.alpha == pytest.approx(published["alpha"], abs=5e-5)
    assert params.sigma0 == pytest.approx(published["sigma0"], rel=2e-4)
    assert params.mean == pytest.approx(entry["mean"], abs=1e-12)
    assert params.lam == lam


@pytest.mark.parametrize("name", ["sp500_lambda1", "csi300_lambda1", "1y1y_lambda1"])
def test_su_fit_round_trip(name):
    p = load_data_params(name)
    fitted = moment_service.fit_su(moment_service.central_moments(p), p.t_expiry)
    assert fitted.alpha == pytest.approx(p.alpha, rel=1e-8)
    assert fitted.rho == pytest.approx(p.rho, rel=1e-7)
    assert fitted.sigma0 == pytest.approx(p.sigma0, rel=1e-8)
    assert fitted.mean == pytest.approx(p.mean, rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("name", ["sp500_lambda0", "10y10y_lambda0"])
def test_normal_sabr_fit_round_trip(name):
    p = load_data_params(name)
    fitted = moment_service.fit_normal_sabr(moment_service.central_moments(p), p.t_expiry)
    assert fitted.alpha == pytest.approx(p.alpha, rel=1e-9)
    assert fitted.rho == pytest.approx(p.rho, rel=1e-8)
    assert fitted.sigma0 == pytest.approx(p.sigma0, rel=1e-9)


def test_bracket_encloses_the_root(return_summaries):
    entry = return_summaries["sp500"]
    w_m, w_big = moment_service.bracket_w(entry["skew"], entry["exkurt"])
    fitted = moment_service.fit_normal_sabr(summary_of(entry), 1.0)
    assert w_m <= fitted.w <= w_big
    # the lower edge solves s^2 = (w - 1)(w + 2)^2
    assert entry["skew"] ** 2 == pytest.approx((w_m - 1) * (w_m + 2) ** 2, rel=1e-12)


def test_bracket_needs_finite_input():
    with pytest.raises(ValidationError):
        moment_service.bracket_w(float("nan"), 1.0)


def test_infeasible_kurtosis_reports_the_boundary():
    target = MomentSummary(mean=0.0, mu2=1.0, skew=1.0, exkurt=0.5)
    with pytest.raises(InfeasibleMomentsError) as err:
        moment_service.fit_normal_sabr(target, 1.0)
    assert err.value.details["min_exkurt"] == pytest.approx(1.8293, rel=1e-3)
    assert err.value.details["boundary"]["rho"] == 1.0

    with pytest.raises(InfeasibleMomentsError):
        moment_service.fit_su(MomentSummary(mean=0.0, mu2=1.0, skew=1.0, exkurt=-0.5), 1.0)


def test_normal_target_gives_zero_alpha():
    target = MomentSummary(mean=0.1, mu2=2.0, skew=0.0, exkurt=0.0)
    for fitter in (moment_service.fit_normal_sabr, moment_service.fit_su):
        params = fitter(target, 1.0)
        assert params.alpha == 0.0
        assert params.sigma0 == pytest.approx(math.sqrt(2.0), rel=1e-15)
        assert params.f0 == 0.1


def test_fit_rejects_bad_horizon(return_summaries):
    with pytest.raises(ValidationError):
        moment_service.fit_su(summary_of(return_summaries["sp500"]), 0.0)


def test_sample_moments():
    summary = moment_service.sample_moments([1.0, 2.0, 3.0, 4.0])
    assert summary.mean == 2.5
    assert summary.mu2 == pytest.approx(1.25, rel=1e-15)
    assert summary.skew == pytest.approx(0.0, abs=1e-15)
    assert summary.exkurt == pytest.approx(-1.36, rel=1e-12)


def test_sample_moments_errors():
    with pytest.raises(InsufficientDataError):
        moment_service.sample_moments([1.0, 2.0, 3.0])
    with pytest.raises(InfeasibleMomentsError):
        moment_service.sample_moments(np.full(10, 0.5))
    with pytest.raises(ValidationError):
        moment_service.sample_moments([1.0, 2.0, float("inf"), 4.0])


@pytest.mark.parametrize("sigma0, alpha, rho, t", [(1.0, 0.7, 0.0, 1.0), (0.006, 0.3, 0.0, 10.0), (1.5, 0.6, 1e-4, 1.0)])
def test_su_fit_round_trip_near_zero_skew(sigma0, alpha, rho, t):
    p = NsvhParams(sigma0=sigma0, alpha=alpha, rho=rho, lam=1.0, f0=0.02, t_expiry=t)
    fitted = moment_service.fit_su(moment_service.central_moments(p), t)
    assert fitted.alpha == pytest.approx(alpha, rel=1e-9)
    assert fitted.sigma0 == pytest.approx(sigma0, rel=1e-9)
    assert fitted.rho == pytest.approx(rho, abs=1e-10)


def test_symmetric_su_target():
    params = moment_service.fit_su(MomentSummary(mean=0.0, mu2=1.0, skew=0.0, exkurt=3.0), 1.0)
    assert params.rho == 0.0
    back = moment_service.central_moments(params)
    assert back.exkurt == pytest.approx(3.0, rel=1e-12)
    assert back.mu2 == pytest.approx(1.0, rel=1e-12)
    assert back.skew == 0.0

    with pytest.raises(InfeasibleMomentsError):
        moment_service.fit_su(MomentSummary(mean=0.0, mu2=1.0, skew=0.0, exkurt=-0.2), 1.0)


def test_skewness_needs_positive_s():
    with pytest.raises(ValidationError):
        moment_service.skew_exkurt(0.0, 0.0, 1.0)


@pytest.mark.parametrize("lam", [-1.0, -3.0])
def test_moments_are_continuous_at_singular_lambda(lam):
    at = moment_service.canonical_moments(0.4, 0.3, lam)
    for h in (1e-7, -1e-7):
        near = moment_service.canonical_moments(0.4, 0.3, lam + h)
        for a, b in zip(at, near):
            assert b == pytest.approx(a, rel=1e-5)


@pytest.mark.parametrize("rho", [0.5, -0.3])
def test_leading_order_shape_does_not_depend_on_lambda(rho):
    skew_ratios, kurt_ratios = [], []
    for w in (20.0, 40.0, 80.0, 160.0):
        s_var = math.log(w)
        skew0, kurt0 = moment_service.skew_exkurt(s_var, rho, 0.0)
        skew1, kurt1 = moment_service.skew_exkurt(s_var, rho, 1.0)
        skew_ratios.append(skew0 / skew1)
        kurt_ratios.append(kurt0 / kurt1)
    for ratios in (skew_ratios, kurt_ratios):
        assert max(ratios) / min(ratios) < 1.1
