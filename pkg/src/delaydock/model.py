"""Parameter and verdict types shared by every analysis.

All quantities are SI: kg, N/m, N*s/m, s, rad/s.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

# |h - h_c| at or below this counts as neutrally stable (seconds).
NEUTRAL_TOL = 1e-6


class DomainError(ValueError):
    """A parameter lies outside the domain where an operation is defined."""


class NumericalError(ArithmeticError):
    """An iterative or numerical procedure failed to produce a valid result."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


def _check_finite(name, value):
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class MassPair:
    m_chaser: float
    m_target: float

    def __post_init__(self):
        for name in ("m_chaser", "m_target"):
            value = _check_finite(name, getattr(self, name))
            if value <= 0.0:
                raise DomainError(f"{name} must be > 0, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class PlantParams:
    """Equivalent mass ``m``, contact stiffness ``k``, damping ``b`` and loop delay ``h``."""

    m: float
    k: float
    b: float = 0.0
    h: float = 0.0

    def __post_init__(self):
        for name in ("m", "k", "b", "h"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.m <= 0.0:
            raise DomainError(f"m must be > 0, got {self.m!r}")
        if self.k <= 0.0:
            raise DomainError(f"k must be > 0, got {self.k!r}")
        if self.b < 0.0:
            raise DomainError(f"b must be >= 0, got {self.b!r}")
        if self.h < 0.0:
            raise DomainError(f"h must be >= 0, got {self.h!r}")

    def with_(self, **changes) -> "PlantParams":
        return replace(self, **changes)

    @property
    def damping_ratio(self) -> float:
        return self.b / (2.0 * math.sqrt(self.k * self.m))


class Verdict(enum.Enum):
    STABLE = "Stable"
    NEUTRALLY_STABLE = "NeutrallyStable"
    UNSTABLE = "Unstable"

    @property
    def letter(self) -> str:
        return self.value[0]


@dataclass(frozen=True)
class StabilityVerdict:
    verdict: Verdict
    margin: float  # h_c - h, seconds

    @property
    def is_stable(self) -> bool:
        return self.verdict is Verdict.STABLE


def equivalent_mass(pair: MassPair) -> float:
    """Reduced mass governing the relative motion of two free-floating bodies."""
    mc, mt = pair.m_chaser, pair.m_target
    # mc*mt/(mc+mt) written to stay exact when one mass dwarfs the other
    if mc <= mt:
        return mc / (1.0 + mc / mt)
    return mt / (1.0 + mt / mc)


def neutral_band(h_c: float) -> float:
    return max(NEUTRAL_TOL, 1e-9 * h_c)


def verdict_from_margin(margin: float, h_c: float) -> StabilityVerdict:
    if abs(margin) <= neutral_band(h_c):
        return StabilityVerdict(Verdict.NEUTRALLY_STABLE, margin)
    if margin > 0.0:
        return StabilityVerdict(Verdict.STABLE, margin)
    return StabilityVerdict(Verdict.UNSTABLE, margin)
