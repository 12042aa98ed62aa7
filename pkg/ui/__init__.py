from . import price
from . import fit
from . import calibrate
from . import risk
from . import probplot
from . import simulate
from . import verify