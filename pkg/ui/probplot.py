import pandas as pd

from exceptions import UnsupportedLambdaError
from services import risk_service
from settings import Settings
from ui.common import load_params
from utils.io_utils import load_returns


def render(args, settings: Settings) -> pd.DataFrame:
    """Plot data only: (x, z0, z1, z2) per ordered observation."""
    returns = load_returns(args.returns, levels=args.levels)
    params = load_params(args.params)
    if params.lam != 1:
        raise UnsupportedLambdaError("probability-plot scores need a lambda = 1 parameter file", lam=params.lam)
    return risk_service.probability_plot_scores(returns, params, standardize=args.standardize)
