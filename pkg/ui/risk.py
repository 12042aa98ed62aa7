# ui/risk.py
import pandas as pd

from exceptions import ValidationError
from services import moment_service, risk_service
from settings import Settings
from ui.common import load_params
from utils.io_utils import load_returns, parse_float_list


def render(args, settings: Settings) -> pd.DataFrame:
    levels = parse_float_list(args.p, "p")
    returns = load_returns(args.returns, levels=args.levels) if args.returns else None
    params = load_params(args.params, args.lam) if args.params else None

    if args.method == "empirical":
        if returns is None:
            raise ValidationError("--method empirical needs --returns", field="returns")
        reports = [risk_service.empirical_var_es(returns, p) for p in levels]

    elif args.method == "normal":
        if returns is not None:
            summary = moment_service.sample_moments(returns)
        elif params is not None:
            summary = moment_service.central_moments(params)
        else:
            raise ValidationError("--method normal needs --returns or --params")
        reports = [risk_service.var_es_normal(summary.mean, summary.mu2, p) for p in levels]

    else:
        if params is None:
            raise ValidationError(f"--method {args.method} needs --params", field="params")
        if args.method == "closed":
            reports = [risk_service.var_es_closed(params, p) for p in levels]
        else:
            reports = [risk_service.var_es_mc(params, p, args.paths or settings.mc_triplets, settings.seed,
                                              n_groups=args.groups or settings.risk_groups,
                                              threads=settings.threads, fast_su=args.fast_su)
                       for p in levels]

    return pd.DataFrame([r.to_dict() for r in reports])
