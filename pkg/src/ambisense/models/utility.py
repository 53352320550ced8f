"""Prospect-style option utility and the logistic aggressive-vs-stealthy choice rule."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# An unknown probability is represented by ``None``.
UNKNOWN = None


class ContractError(ValueError):
    """An operation received input its contract rules out."""


@dataclass(frozen=True)
class OptionFeature:
    option_id: str
    gain: float
    loss: float
    p_success: float | None = UNKNOWN
    p_detect: float | None = UNKNOWN
    novelty: float = 1.0
    complexity: float = 0.5
    n_uses: int = 0
    n_successes: int = 0
    is_chosen: bool = False
    style: str = "unknown"
    technique_id: str = ""
    target: str | None = None

    def __post_init__(self):
        if self.gain < 0 or self.loss < 0:
            raise ValueError("gain and loss must be non-negative")
        for name in ("p_success", "p_detect"):
            p = getattr(self, name)
            if p is not None and not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")
        if not 0 <= self.n_successes <= self.n_uses:
            raise ValueError("need 0 <= n_successes <= n_uses")
        if not (0.0 <= self.novelty <= 1.0 and 0.0 <= self.complexity <= 1.0):
            raise ValueError("novelty and complexity must lie in [0, 1]")

    @property
    def is_ambiguous(self) -> bool:
        return self.p_success is None or self.p_detect is None


def subjective_utility(option: OptionFeature, lambda_l: float) -> float:
    """Gain weighted by success probability minus loss weighted by detection and ``lambda_l``."""
    if option.p_success is None or option.p_detect is None:
        raise ContractError(f"option {option.option_id!r} has an unknown probability; substitute a reference first")
    return option.p_success * option.gain - lambda_l * option.p_detect * option.loss


def gamma_choice(eps_a: float, eps_s: float, mu: float) -> float:
    """Probability of the aggressive option: logistic of ``mu * (eps_a - eps_s)``."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    x = mu * (eps_a - eps_s)
    # split by sign so exp never overflows
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


def with_reference(option: OptionFeature, reference: float = 0.5) -> OptionFeature:
    """Copy of ``option`` with any unknown probability replaced by ``reference``."""
    return replace(
        option,
        p_success=reference if option.p_success is None else option.p_success,
        p_detect=reference if option.p_detect is None else option.p_detect,
    )


def seu_reference(option: OptionFeature, reference: float = 0.5) -> float:
    """Ambiguity-neutral benchmark utility: unknowns at ``reference``, no loss weighting."""
    return subjective_utility(with_reference(option, reference), 1.0)
