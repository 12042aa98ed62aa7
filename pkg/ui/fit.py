# ui/fit.py
from typing import Any, Dict

from services import moment_service
from settings import Settings
from utils.io_utils import load_returns


def render(args, settings: Settings) -> Dict[str, Any]:
    returns = load_returns(args.returns, levels=args.levels)
    summary = moment_service.sample_moments(returns)

    fitter = moment_service.fit_su if args.lam == 1 else moment_service.fit_normal_sabr
    params = fitter(summary, args.horizon)
    return {"n": len(returns), "moments": summary.to_dict(), "params": params.to_dict()}
