# ui/price.py
import logging

import numpy as np
import pandas as pd

from exceptions import UnsupportedLambdaError
from models import OptionSide
from services import analytic_service, mc_service, sabr_service
from settings import Settings
from ui.common import load_params
from utils.io_utils import parse_float_list

logger = logging.getLogger(__name__)


def _analytic(params, strikes):
    if params.lam == 1:
        return {side: analytic_service.option_price(strikes, side == OptionSide.CALL, params)
                for side in (OptionSide.CALL, OptionSide.PUT)}
    if params.lam != 0:
        raise UnsupportedLambdaError("analytic prices need lambda 0 or 1", lam=params.lam)
    # lambda = 0: Hagan normal vol into the Bachelier formula
    vols = sabr_service.hagan_normal_vol(params, strikes)
    return {side: sabr_service.bachelier_price(params.f0, strikes, vols, params.t_expiry, side == OptionSide.CALL)
            for side in (OptionSide.CALL, OptionSide.PUT)}


def render(args, settings: Settings) -> pd.DataFrame:
    """Call and put prices per strike; strikes are offsets from F_bar_T unless --absolute."""
    params = load_params(args.params, args.lam)
    offsets = np.array(parse_float_list(args.strikes, "strikes"))
    strikes = offsets if args.absolute else params.mean + offsets
    if args.absolute:
        offsets = strikes - params.mean

    rows = []
    if args.method == "analytic":
        prices = _analytic(params, strikes)
        for side in (OptionSide.CALL, OptionSide.PUT):
            for offset, strike, price in zip(offsets, strikes, np.atleast_1d(prices[side])):
                rows.append({"offset": offset, "strike": strike, "side": side, "price": float(price)})
        return pd.DataFrame(rows)

    n_triplets = args.paths or settings.mc_triplets
    n_groups = args.groups or settings.mc_groups
    logger.info("pricing %d strikes on %d triplets", len(strikes), n_triplets)
    for side in (OptionSide.CALL, OptionSide.PUT):
        estimates = mc_service.price_strip_mc(params, strikes, side == OptionSide.CALL, n_triplets, n_groups,
                                              settings.seed, threads=settings.threads)
        for offset, strike, est in zip(offsets, strikes, estimates):
            rows.append({"offset": offset, "strike": strike, "side": side,
                         "price": est.value, "std_err": est.std_err})
    return pd.DataFrame(rows)
