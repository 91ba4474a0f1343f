import logging
from bisect import bisect_right
from typing import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from tubemesh.errors import GradientError
from tubemesh.nn.tensor import Parameter

log = logging.getLogger(__name__)


class OptimizerConfig(BaseModel):
    """AdamW hyperparameters plus a step-decay schedule on epoch milestones."""

    model_config = ConfigDict(extra="forbid")

    learning_rate: float = Field(0.01, gt=0)
    weight_decay: float = Field(0.01, ge=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    epsilon: float = Field(1e-8, gt=0)
    milestones: list[int] = Field(default_factory=lambda: [300, 400, 500])
    gamma: float = 0.1

    @field_validator("gamma")
    @classmethod
    def _gamma_in_unit_interval(cls, value: float) -> float:
        if not 0 < value < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {value}")
        return value

    @field_validator("milestones")
    @classmethod
    def _milestones_increasing(cls, value: list[int]) -> list[int]:
        if any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError(f"milestones must be strictly increasing, got {value}")
        return value


def learning_rate_at(config: OptimizerConfig, epoch: int) -> float:
    """Initial rate times ``gamma`` for every milestone already reached."""
    return config.learning_rate * config.gamma ** bisect_right(config.milestones, epoch)


class AdamW:
    """
    Adam with decoupled weight decay.

    The decay shrinks the parameter value directly and never enters the
    moment estimates.
    """

    def __init__(self, params: Sequence[Parameter], config: OptimizerConfig):
        self.params = list(params)
        self.config = config
        self.step_count = 0

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()

    def step(self, epoch: int) -> float:
        """
        Apply one update and return the learning rate that was used.

        Raises
        ------
        GradientError
            If any populated gradient is not finite.
        """
        for p in self.params:
            if p.grad is not None and not np.isfinite(p.grad).all():
                raise GradientError(f"non-finite gradient in '{p.name}', step aborted")

        cfg = self.config
        lr = learning_rate_at(cfg, epoch)
        self.step_count += 1
        t = self.step_count
        correction1 = 1.0 - cfg.beta1**t
        correction2 = 1.0 - cfg.beta2**t
        for p in self.params:
            grad = p.grad if p.grad is not None else np.zeros_like(p.data)
            p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * grad
            p.v = cfg.beta2 * p.v + (1.0 - cfg.beta2) * grad * grad
            m_hat = p.m / correction1
            v_hat = p.v / correction2
            value = p.data * (1.0 - lr * cfg.weight_decay)
            p.data = value - lr * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        return lr
