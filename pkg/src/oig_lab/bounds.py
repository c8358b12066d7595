"""Closed-form bound evaluators.

The suffix-average risk bound combines two martingale tail bounds at
confidence delta/2 each:

* forward:  sum of prefix risks <= A * (observed suffix losses) + e^eta/(e^eta-1) * log(2/delta)
* reverse:  observed suffix losses <= (ln 4 + 1/2) * B * M_n + log(2/delta) / lambda

with A = eta e^eta / (e^eta - 1) and B = (e^lambda - 1) / lambda. Dividing by
the 3n/4 suffix length gives coefficients on M_n/n and log(2/delta)/n; the
overall constant C is the larger of the two.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidArgument

LAMBDA = 0.82
ETA = 0.78
HARMONIC_TAIL = math.log(4) + 0.5
SETTINGS = ("main", "multiclass", "binary", "partial", "regression")


def _unit(name, value, closed_right=False):
    ok = 0 < value <= 1 if closed_right else 0 < value < 1
    if not ok:
        raise InvalidArgument(f"{name} must lie in (0, 1{']' if closed_right else ')'}, got {value}")


def upper_coefficient(lam: float) -> float:
    """(e^lambda - 1) / lambda."""
    return math.expm1(lam) / lam


def lower_coefficient(eta: float) -> float:
    """eta e^eta / (e^eta - 1)."""
    return eta * math.exp(eta) / math.expm1(eta)


def chernoff_upper_rhs(lam: float, delta: float, sum_conditional_means: float) -> float:
    """Threshold that sum W_t exceeds with probability at most delta."""
    _unit("lambda", lam)
    _unit("delta", delta, closed_right=True)
    return upper_coefficient(lam) * sum_conditional_means + math.log(1 / delta) / lam


def chernoff_lower_rhs(eta: float, delta: float, sum_observed: float) -> float:
    """Threshold that sum E[W_t | past] exceeds with probability at most delta."""
    _unit("eta", eta)
    _unit("delta", delta, closed_right=True)
    e = math.exp(eta)
    return lower_coefficient(eta) * sum_observed + e * math.log(1 / delta) / (e - 1)


def main_constant(lam: float = LAMBDA, eta: float = ETA) -> tuple[float, float]:
    """(coefficient of M_n/n, coefficient of log(2/delta)/n) in the suffix-average bound."""
    _unit("lambda", lam)
    _unit("eta", eta)
    a = lower_coefficient(eta)
    coef_m = 4 / 3 * a * HARMONIC_TAIL * upper_coefficient(lam)
    coef_log = 4 / 3 * (a / lam + math.exp(eta) / math.expm1(eta))
    return coef_m, coef_log


def constant(lam: float = LAMBDA, eta: float = ETA) -> float:
    return max(main_constant(lam, eta))


def reverse_rhs(lam: float, delta: float, m_n: float) -> float:
    """Cap on the observed suffix losses: (ln 4 + 1/2) B M_n + log(1/delta)/lambda."""
    return HARMONIC_TAIL * upper_coefficient(lam) * m_n + math.log(1 / delta) / lam


def forward_rhs(eta: float, delta: float, observed_suffix_loss: float) -> float:
    """Cap on the summed prefix risks given the observed suffix losses."""
    return chernoff_lower_rhs(eta, delta, observed_suffix_loss)


def harmonic_tail_sums(t_max: int, t_min: int = 4) -> np.ndarray:
    """sum_{i=floor(T/4)+1}^{T} 1/i for T = t_min..t_max."""
    h = np.concatenate([[0.0], np.cumsum(1.0 / np.arange(1, t_max + 1))])
    ts = np.arange(t_min, t_max + 1)
    return h[ts] - h[ts // 4]


@dataclass(frozen=True)
class BoundParams:
    n: int
    delta: float
    lam: float = LAMBDA
    eta: float = ETA
    m_n: float | None = None
    d: int | None = None
    ceil_dens: int | None = None
    gamma: float | None = None
    fat_v: int | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        _unit("lambda", self.lam)
        _unit("eta", self.eta)
        _unit("delta", self.delta)
        if self.n < 4:
            raise InvalidArgument("bounds need n >= 4")

    def with_(self, **kw) -> "BoundParams":
        return replace(self, **kw)


def _need(params, *names):
    missing = [k for k in names if getattr(params, k) is None]
    if missing:
        raise InvalidArgument(f"missing bound parameters: {', '.join(missing)}")


def risk_bound(setting: str, params: BoundParams) -> float:
    """Evaluate the high-probability risk bound for one setting.

    ``main`` bounds the suffix-average of prefix risks with a LOO cap M_n.
    ``multiclass`` and ``binary`` bound the suffix plurality vote and carry the
    extra factor 2; ``binary`` uses the VC dimension d, ``multiclass`` and
    ``partial`` use ceil(dens_n) (falling back to d). ``regression`` bounds the
    suffix average under absolute loss.
    """
    c = constant(params.lam, params.eta)
    n, delta = params.n, params.delta
    tail = math.log(2 / delta) / n
    if setting == "main":
        _need(params, "m_n")
        return c * (params.m_n / n + tail)
    if setting == "binary":
        _need(params, "d")
        return 2 * c * (params.d / n + tail)
    if setting in ("multiclass", "partial"):
        cap = params.ceil_dens if params.ceil_dens is not None else params.d
        if cap is None:
            raise InvalidArgument("missing bound parameters: ceil_dens (or d)")
        return 2 * c * (cap / n + tail)
    if setting == "regression":
        _need(params, "gamma", "fat_v")
        return c * (params.gamma + params.fat_v / n + math.log(2 * math.e / delta) / n)
    raise InvalidArgument(f"unknown setting {setting!r}; expected one of {SETTINGS}")


def composed_bound(n: int, delta: float, m_n: float, lam: float = LAMBDA, eta: float = ETA) -> float:
    """The suffix-average bound written as the nested forward/reverse expression."""
    e = math.exp(eta)
    a = eta * e / (e - 1)
    inner = HARMONIC_TAIL * (math.exp(lam) - 1) / lam * m_n + math.log(2 / delta) / lam
    return 4 / (3 * n) * (a * inner + e * math.log(2 / delta) / (e - 1))
