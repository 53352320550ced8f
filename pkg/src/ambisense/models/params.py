from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np


def default_lambda_grid() -> tuple[float, ...]:
    return tuple(float(x) for x in np.linspace(0.5, 3.0, 21))


@dataclass(frozen=True)
class ModelParams:
    """Tunable constants for both trait models.

    Only ``mu`` and the loss-aversion grid come from the choice equation
    itself; every other default is a working guess meant to be overridden
    from a config file once real calibration data exists.
    """

    mu: float = 1.0
    lambda_grid: tuple[float, ...] = field(default_factory=default_lambda_grid)
    gate_delta: float = 0.3
    gate_uncertainty: float = 0.5
    w_novelty: float = 0.4
    w_complexity: float = 0.3
    w_variance: float = 0.3
    novelty_decay: float = 0.5
    evidence_slope: float = 2.0
    alpha0: float = 1.0
    beta0: float = 3.0
    lambda_threshold: float = 1.0
    hedging_window: float = 600.0
    hedging_evidence: float = 0.15
    hedging_high: float = 0.7
    hedging_low: float = 0.3
    reference_probability: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        weights = (self.w_novelty, self.w_complexity, self.w_variance)
        if min(weights) < 0 or abs(sum(weights) - 1.0) > 1e-9:
            raise ValueError("ambiguity weights must be non-negative and sum to 1")
        for name in ("gate_delta", "gate_uncertainty", "hedging_high", "hedging_low", "reference_probability"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.alpha0 <= 0 or self.beta0 <= 0:
            raise ValueError("Beta prior parameters must be positive")
        if len(self.lambda_grid) < 2 or min(self.lambda_grid) < 0:
            raise ValueError("lambda_grid needs at least two non-negative points")
        if self.novelty_decay < 0 or self.evidence_slope < 0:
            raise ValueError("novelty_decay and evidence_slope must be non-negative")
        if self.hedging_window <= 0 or self.hedging_evidence < 0:
            raise ValueError("hedging_window must be positive, hedging_evidence non-negative")

    @property
    def weights(self) -> tuple[float, float, float]:
        return (self.w_novelty, self.w_complexity, self.w_variance)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda_grid"] = list(self.lambda_grid)
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> "ModelParams":
        d = dict(d or {})
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown model parameter(s): {sorted(unknown)}")
        return cls(**d)
