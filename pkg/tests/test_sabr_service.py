import csv
import math

import numpy as np
import pytest

from conftest import data_path, load_data_params
from exceptions import DegenerateCorrelationError, NoSolutionError
from models import NsvhParams
from services import sabr_service


def test_atm_vol_is_sigma0_times_correction():
    p = load_data_params("1y1y_lambda0")
    expected = p.sigma0 * (1.0 + (2.0 - 3.0 * p.rho ** 2) / 24.0 * p.s_var)
    assert sabr_service.hagan_normal_vol(p, p.f0) == pytest.approx(expected, rel=1e-14)


def test_vol_is_continuous_through_atm():
    p = load_data_params("1y1y_lambda0")
    atm = sabr_service.hagan_normal_vol(p, p.f0)
    for h in (1e-12, 1e-9, 1e-7):
        assert sabr_service.hagan_normal_vol(p, p.f0 + h) == pytest.approx(atm, rel=1e-4)
        assert sabr_service.hagan_normal_vol(p, p.f0 - h) == pytest.approx(atm, rel=1e-4)


def test_vol_smile_is_skewed_by_rho():
    p = load_data_params("1y1y_lambda0")
    vols = sabr_service.hagan_normal_vol(p, p.f0 + np.array([-0.01, 0.01]))
    # positive rho lifts the upper wing
    assert vols[1] > vols[0]


def test_degenerate_rho():
    p = NsvhParams(sigma0=0.01, alpha=0.3, rho=1.0, lam=0.0, f0=0.02, t_expiry=1.0)
    with pytest.raises(DegenerateCorrelationError):
        sabr_service.hagan_normal_vol(p, 0.03)


def test_bachelier_atm_and_parity():
    vol, t = 0.007, 4.0
    atm = sabr_service.bachelier_price(0.03, 0.03, vol, t, True)
    assert atm == pytest.approx(vol * 2.0 / math.sqrt(2 * math.pi), rel=1e-15)
    call = sabr_service.bachelier_price(0.03, 0.025, vol, t, True)
    put = sabr_service.bachelier_price(0.03, 0.025, vol, t, False)
    assert call - put == pytest.approx(0.005, abs=1e-16)
    assert sabr_service.bachelier_price(0.03, 0.025, 0.0, t, True) == pytest.approx(0.005, abs=1e-17)


@pytest.mark.parametrize("strike, is_call", [(0.03, True), (0.045, True), (0.01, False), (0.035, False)])
def test_implied_normal_vol_round_trip(strike, is_call):
    price = sabr_service.bachelier_price(0.03, strike, 0.0065, 2.0, is_call)
    assert sabr_service.implied_normal_vol(price, 0.03, strike, 2.0, is_call) == pytest.approx(0.0065, rel=1e-10)


def test_implied_normal_vol_rejects_price_at_intrinsic():
    with pytest.raises(NoSolutionError):
        sabr_service.implied_normal_vol(0.005, 0.03, 0.025, 1.0, True)


def test_swaption_table_lambda_zero():
    p = load_data_params("10y10y_lambda0")
    with open(data_path("swaption_10y10y_prices.csv")) as fh:
        rows = list(csv.DictReader(fh))
    strikes = p.mean + np.array([float(r["offset_bps"]) * 1e-4 for r in rows])
    vols = sabr_service.hagan_normal_vol(p, strikes)
    prices = sabr_service.bachelier_price(p.f0, strikes, vols, p.t_expiry, True)
    expected = [float(r["call_lambda0"]) for r in rows]
    # table values are rounded to four figures from rounded parameters
    np.testing.assert_allclose(prices, expected, rtol=5e-3)


@pytest.mark.parametrize("strike", [0.01, 0.03, 0.05])
def test_bachelier_vega_is_the_vol_derivative(strike):
    vol, t, h = 0.007, 2.0, 1e-7
    bumped = (sabr_service.bachelier_price(0.03, strike, vol + h, t, True)
              - sabr_service.bachelier_price(0.03, strike, vol - h, t, True)) / (2 * h)
    vega = sabr_service.bachelier_vega(0.03, strike, vol, t)
    assert vega > 0
    assert vega == pytest.approx(bumped, rel=1e-6)
