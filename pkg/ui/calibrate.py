# ui/calibrate.py
from typing import Any, Dict

from exceptions import ValidationError
from services import calibration_service
from settings import Settings
from utils.io_utils import load_quotes


def render(args, settings: Settings) -> Dict[str, Any]:
    forward, expiry, quotes = load_quotes(args.quotes)
    # command-line values win over the file
    forward = args.forward if args.forward is not None else forward
    expiry = args.expiry if args.expiry is not None else expiry
    if forward is None or expiry is None:
        raise ValidationError("forward and expiry are required (file or --forward/--expiry)")

    result = calibration_service.calibrate_smile(quotes, forward, expiry, args.lam,
                                                 tolerance=args.tolerance or settings.calibration_tolerance,
                                                 max_iterations=settings.max_iterations)
    payload = result.to_dict()
    payload["params"]["mean"] = result.params.mean
    return payload
