# ui/simulate.py
import numpy as np
import pandas as pd

from services import mc_service
from settings import Settings
from ui.common import load_params
from utils.io_utils import parse_float_list


def render(args, settings: Settings) -> pd.DataFrame:
    """Long table of (path_id, time, f, sigma)."""
    params = load_params(args.params, args.lam)
    grid = parse_float_list(args.grid, "grid")
    batch = mc_service.simulate_paths(params, grid, args.paths, settings.seed, n_groups=args.groups or 1,
                                      independent=args.independent, threads=settings.threads)

    n_paths, n_times = batch.f.shape
    return pd.DataFrame({
        "path_id": np.repeat(np.arange(n_paths), n_times),
        "time": np.tile(batch.times, n_paths),
        "f": batch.f.ravel(),
        "sigma": batch.sigma.ravel(),
    })
