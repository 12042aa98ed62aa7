# ui/common.py
from typing import Optional

from models import NsvhParams
from utils import io_utils


def load_params(path: str, lam: Optional[float] = None) -> NsvhParams:
    """Params file with an optional lambda override; the mean F_bar_T is held fixed."""
    params = io_utils.load_params(path)
    if lam is None or lam == params.lam:
        return params
    return NsvhParams.from_mean(params.sigma0, params.alpha, params.rho, lam, params.mean, params.t_expiry)
