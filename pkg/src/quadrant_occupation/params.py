from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError


@dataclass(frozen=True)
class Params:
    """Laplace rate ``alpha`` and occupation weight ``lam``.

    The killing rate is ``beta1 = alpha + lam`` on the first and third quadrants
    and ``beta2 = alpha`` on the second and fourth.
    """

    alpha: float
    lam: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha!r}")
        if not self.lam >= 0:
            raise DomainError(f"lambda must be nonnegative, got {self.lam!r}")

    @property
    def beta1(self) -> float:
        return self.alpha + self.lam

    @property
    def beta2(self) -> float:
        return self.alpha

    @property
    def ratio(self) -> float:
        """beta1 / beta2 (>= 1)."""
        return self.beta1 / self.beta2
