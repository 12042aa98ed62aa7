from . import sabr_service
from . import analytic_service
from . import mc_service
from . import moment_service
from . import calibration_service
from . import risk_service
from . import oracle_service