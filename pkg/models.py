# models.py
from dataclasses import dataclass, field, asdict
from typing import Any, Dict, List, Optional, final
import math

import numpy as np

from exceptions import ValidationError
from utils.numerics import stable_exp_ratio

# Largest accepted integrated log-vol variance S = alpha^2 T; the e^{6S}
# terms of the fourth moment overflow beyond this.
S_VAR_CAP = 50.0


# --- ENUMS (Centralized) ---

@final
class QuoteKind:
    NORMAL_VOL = "normal_vol"
    OPTION_PRICE = "option_price"


@final
class OptionSide:
    CALL = "call"
    PUT = "put"


@final
class RiskMethod:
    CLOSED_FORM = "closed_form"
    MONTE_CARLO = "monte_carlo"
    EMPIRICAL = "empirical"
    NORMAL = "normal"


@final
class Standardization:
    SAMPLE = "sample"
    MODEL = "model"


def _require_finite(**values: float):
    for name, value in values.items():
        if value is None or not math.isfinite(value):
            raise ValidationError(f"{name} must be a finite real", field=name)


# --- 1. MODEL PARAMETERS ---

@dataclass(frozen=True)
class NsvhParams:
    """
    Full parameter set of one asset/expiry.
    Validated at construction; every service assumes these invariants hold.
    """
    sigma0: float
    alpha: float
    rho: float
    lam: float
    f0: float
    t_expiry: float

    def __post_init__(self):
        _require_finite(sigma0=self.sigma0, alpha=self.alpha, rho=self.rho,
                        lam=self.lam, f0=self.f0, t_expiry=self.t_expiry)
        if self.sigma0 <= 0:
            raise ValidationError("sigma0 must be positive", field="sigma0")
        if self.t_expiry <= 0:
            raise ValidationError("t_expiry must be positive", field="t_expiry")
        if self.alpha < 0:
            raise ValidationError("alpha must be non-negative", field="alpha")
        if abs(self.rho) > 1:
            raise ValidationError("rho must lie in [-1, 1]", field="rho")
        if self.s_var > S_VAR_CAP:
            raise ValidationError(f"alpha^2 * t_expiry must not exceed {S_VAR_CAP}", field="alpha")

    @property
    def s_var(self) -> float:
        return self.alpha * self.alpha * self.t_expiry

    @property
    def w(self) -> float:
        return math.exp(self.s_var)

    @property
    def rho_star(self) -> float:
        return math.sqrt(max(1.0 - self.rho * self.rho, 0.0))

    @property
    def scale(self) -> float:
        """sigma0/alpha: maps canonical prices back to price units."""
        return self.sigma0 / self.alpha

    @property
    def mean(self) -> float:
        """F_bar_T = f0 + (sigma0 rho/alpha)(e^{lam alpha^2 T/2} - 1)."""
        return self.f0 + mean_shift(self.sigma0, self.alpha, self.rho, self.lam, self.t_expiry)

    @classmethod
    def from_mean(cls, sigma0: float, alpha: float, rho: float, lam: float,
                  mean: float, t_expiry: float) -> "NsvhParams":
        """Builds parameters from F_bar_T, the convention the quote tables use."""
        _require_finite(mean=mean)
        f0 = mean - mean_shift(sigma0, alpha, rho, lam, t_expiry)
        return cls(sigma0=sigma0, alpha=alpha, rho=rho, lam=lam, f0=f0, t_expiry=t_expiry)

    def with_lambda(self, lam: float) -> "NsvhParams":
        return NsvhParams(self.sigma0, self.alpha, self.rho, lam, self.f0, self.t_expiry)

    def to_canonical(self) -> "CanonicalParams":
        return CanonicalParams(s_var=self.s_var, rho=self.rho, lam=self.lam)

    def to_dict(self) -> Dict[str, float]:
        return {"sigma0": self.sigma0, "alpha": self.alpha, "rho": self.rho,
                "lambda": self.lam, "f0": self.f0, "t_expiry": self.t_expiry}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "NsvhParams":
        """Accepts the params JSON schema; `mean` may replace `f0`."""
        try:
            values = {k: float(data[k]) for k in ("sigma0", "alpha", "rho", "lambda", "t_expiry")}
        except KeyError as e:
            raise ValidationError(f"missing parameter {e.args[0]}", field=e.args[0])
        except (TypeError, ValueError):
            raise ValidationError("parameters must be real numbers")

        if "f0" in data:
            return cls(values["sigma0"], values["alpha"], values["rho"], values["lambda"],
                       float(data["f0"]), values["t_expiry"])
        if "mean" in data:
            return cls.from_mean(values["sigma0"], values["alpha"], values["rho"], values["lambda"],
                                 float(data["mean"]), values["t_expiry"])
        raise ValidationError("missing parameter f0", field="f0")


def mean_shift(sigma0: float, alpha: float, rho: float, lam: float, t_expiry: float) -> float:
    """(sigma0 rho/alpha)(e^{lam alpha^2 T/2} - 1), exactly zero when rho, lam or alpha vanish."""
    if rho == 0 or lam == 0 or alpha == 0:
        return 0.0
    half_lam = 0.5 * lam
    return sigma0 * rho * half_lam * stable_exp_ratio(half_lam, alpha * alpha * t_expiry) / alpha


@dataclass(frozen=True)
class CanonicalParams:
    """Dimensionless (S, rho, lambda); w = e^S."""
    s_var: float
    rho: float
    lam: float

    def __post_init__(self):
        _require_finite(s_var=self.s_var, rho=self.rho, lam=self.lam)
        if self.s_var < 0 or self.s_var > S_VAR_CAP:
            raise ValidationError(f"s_var must lie in [0, {S_VAR_CAP}]", field="s_var")
        if abs(self.rho) > 1:
            raise ValidationError("rho must lie in [-1, 1]", field="rho")

    @property
    def w(self) -> float:
        return math.exp(self.s_var)

    @property
    def rho_star(self) -> float:
        return math.sqrt(max(1.0 - self.rho * self.rho, 0.0))

    def to_params(self, sigma0: float, f0: float, t_expiry: float) -> NsvhParams:
        alpha = math.sqrt(self.s_var / t_expiry)
        return NsvhParams(sigma0=sigma0, alpha=alpha, rho=self.rho, lam=self.lam,
                          f0=f0, t_expiry=t_expiry)


# --- 2. ANALYTICS ---

@dataclass(frozen=True)
class SuScore:
    """Standardized score d of the S_U distribution; xi is the asinh operand."""
    d: float
    xi: float


@dataclass(frozen=True)
class NormalVolQuote:
    strike: float
    normal_vol: float
    error: Optional[str] = None


# --- 3. MONTE-CARLO ---

@dataclass(frozen=True)
class TripletDraw:
    z: float
    r_sq: float
    cos_theta: float
    sin_theta: float


@dataclass
class TripletBatch:
    """Vectorised triplets; row i is one (X1, Y1, Z1) draw."""
    z: np.ndarray
    r_sq: np.ndarray
    cos_theta: np.ndarray
    sin_theta: np.ndarray

    def __len__(self):
        return len(self.z)

    def __getitem__(self, i) -> TripletDraw:
        return TripletDraw(float(self.z[i]), float(self.r_sq[i]),
                           float(self.cos_theta[i]), float(self.sin_theta[i]))


@dataclass(frozen=True)
class TerminalSample:
    f_t: float
    sigma_t: float


@dataclass
class TerminalBatch:
    """
    Terminal draws laid out group by group. Within a group the cosine
    projections of all triplets come first, then the sine projections.
    """
    f_t: np.ndarray
    sigma_t: np.ndarray
    n_groups: int = 1

    def __len__(self):
        return len(self.f_t)

    def __getitem__(self, i) -> TerminalSample:
        return TerminalSample(float(self.f_t[i]), float(self.sigma_t[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def groups(self) -> List[np.ndarray]:
        return np.split(self.f_t, self.n_groups)


@dataclass
class PathBatch:
    """Simulated paths: arrays of shape (n_paths, n_times)."""
    times: np.ndarray
    f: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_err: float
    n_groups: int


# --- 4. MOMENTS ---

@dataclass(frozen=True)
class MomentSummary:
    mean: float
    mu2: float
    skew: float
    exkurt: float

    def __post_init__(self):
        _require_finite(mean=self.mean, mu2=self.mu2, skew=self.skew, exkurt=self.exkurt)
        if self.mu2 <= 0:
            raise ValidationError("zero variance: mu2 must be positive", field="mu2")
        if self.exkurt < self.skew * self.skew - 2 - 1e-9:
            raise ValidationError("excess kurtosis below skew^2 - 2 is not attainable", field="exkurt")

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


# --- 5. CALIBRATION ---

@dataclass(frozen=True)
class SmileQuote:
    strike_offset: float
    kind: str
    value: float
    option_side: Optional[str] = None

    def __post_init__(self):
        _require_finite(strike_offset=self.strike_offset, value=self.value)
        if self.kind not in (QuoteKind.NORMAL_VOL, QuoteKind.OPTION_PRICE):
            raise ValidationError(f"unknown quote kind '{self.kind}'", field="kind")
        if self.value <= 0:
            raise ValidationError("quote value must be positive", field="value")
        if self.kind == QuoteKind.OPTION_PRICE and self.option_side not in (OptionSide.CALL, OptionSide.PUT):
            raise ValidationError("option_price quotes need option_side call or put", field="option_side")


@dataclass
class CalibrationResult:
    params: NsvhParams
    residuals: List[float]
    iterations: int
    converged: bool
    diagnostics: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {"params": self.params.to_dict(), "residuals": list(self.residuals),
                "iterations": self.iterations, "converged": self.converged,
                "diagnostics": list(self.diagnostics)}


# --- 6. RISK ---

@dataclass(frozen=True)
class RiskReport:
    """Left-tail measures on signed values: losses are negative, es <= var."""
    p: float
    var: float
    es: float
    method: str
    var_std_err: Optional[float] = None
    es_std_err: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# --- 7. HYPERBOLIC GEOMETRY ---

@dataclass(frozen=True)
class HypPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not self.z > 0:
            raise ValidationError("z must be positive in the upper half-space", field="z")
