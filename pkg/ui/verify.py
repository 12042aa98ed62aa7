# ui/verify.py
import sys

import pandas as pd

from services import oracle_service
from settings import Settings


def _progress(msg: str):
    print(msg, file=sys.stderr)


def render(args, settings: Settings) -> pd.DataFrame:
    rows = oracle_service.run_suite(args.suite, settings.seed, n_paths=args.paths, n_triplets=args.triplets,
                                    threads=settings.threads, progress_callback=_progress)
    return pd.DataFrame(rows, columns=["check", "passed", "message"])
