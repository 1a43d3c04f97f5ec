"""Exact stability analysis of the loop-delay characteristic function

    chi_h(s) = m s^2 + exp(-s h) (k + b s)

Roots of chi_h reach the imaginary axis only at the delay-independent
frequency ``omega_c``, at the delays ``h_n = h_c + 2 pi n / omega_c``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .model import (
    DomainError,
    NumericalError,
    PlantParams,
    StabilityVerdict,
    Verdict,
    neutral_band,
    verdict_from_margin,
)


@dataclass(frozen=True)
class CrossingSet:
    omega_c: float
    h_values: tuple
    sigma: float

    @property
    def h_c(self) -> float:
        return self.h_values[0]


@dataclass(frozen=True)
class DominantRoot:
    real_part: float
    imag_part: float
    residual: float
    iterations: int = 0

    @property
    def s(self) -> complex:
        return complex(self.real_part, self.imag_part)

    @property
    def restitution(self) -> float:
        """Velocity ratio over one half-period of the dominant mode."""
        if self.imag_part <= 0.0:
            raise DomainError("dominant root is real; no oscillatory half-period")
        return math.exp(self.real_part * math.pi / self.imag_part)


def _require_stiffness(p: PlantParams):
    if not p.k > 0.0:
        raise DomainError(f"k must be > 0, got {p.k!r}")


def delay_free_stable(p: PlantParams) -> StabilityVerdict:
    """Verdict for m s^2 + b s + k: stable iff every coefficient is positive."""
    if p.b > 0.0:
        return StabilityVerdict(Verdict.STABLE, critical_delay(p))
    return StabilityVerdict(Verdict.NEUTRALLY_STABLE, 0.0)


def crossing_frequency(p: PlantParams) -> float:
    _require_stiffness(p)
    m, k, b = p.m, p.k, p.b
    half = b * b / (2.0 * m * m)
    return math.sqrt(half + math.hypot(half, k / m))


def switch_criterion(p: PlantParams) -> float:
    """Sign decides switch (> 0) or reversal (< 0) at the crossing; always positive here."""
    _require_stiffness(p)
    m, k, b = p.m, p.k, p.b
    return math.hypot(b * b / (2.0 * m * m), k / m)


def critical_delay(p: PlantParams) -> float:
    """Smallest delay placing a root pair on the imaginary axis."""
    w = crossing_frequency(p)
    return math.atan(w * p.b / p.k) / w


def critical_delay_set(p: PlantParams, n_max: int) -> CrossingSet:
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max!r}")
    w = crossing_frequency(p)
    h_c = math.atan(w * p.b / p.k) / w
    period = 2.0 * math.pi / w
    return CrossingSet(
        omega_c=w,
        h_values=tuple(h_c + n * period for n in range(n_max)),
        sigma=switch_criterion(p),
    )


def approx_critical_delay(p: PlantParams) -> float:
    """``b / k``; accurate while ``omega_c * b << k``."""
    _require_stiffness(p)
    return p.b / p.k


def classify(p: PlantParams) -> StabilityVerdict:
    h_c = critical_delay(p)
    return verdict_from_margin(h_c - p.h, h_c)


def max_critical_delay(m: float, k: float):
    """Largest delay that any damping can stabilize, and the damping achieving it.

    Returns ``(h_max, b_peak)``.
    """
    scale = math.sqrt(k * m)

    def neg_hc(b):
        return -critical_delay(PlantParams(m, k, b))

    res = optimize.minimize_scalar(
        neg_hc, bounds=(0.0, 20.0 * scale), method="bounded",
        options={"xatol": 1e-10 * scale},
    )
    return -float(res.fun), float(res.x)


def neutral_damping(m: float, k: float, h: float, xtol: float = 1e-12) -> float:
    """Minimum damping ``b`` with ``critical_delay(m, k, b) == h``.

    Raises DomainError when ``h`` exceeds the largest stabilizable delay.
    """
    if h < 0.0:
        raise DomainError(f"h must be >= 0, got {h!r}")
    if h == 0.0:
        return 0.0
    h_max, b_peak = max_critical_delay(m, k)
    if h > h_max:
        raise DomainError(
            f"no damping stabilizes h={h!r} s (largest stabilizable delay {h_max:.6g} s)"
        )

    def gap(b):
        return critical_delay(PlantParams(m, k, b)) - h

    return float(optimize.brentq(gap, 0.0, b_peak, xtol=xtol, rtol=4 * np.finfo(float).eps))


def characteristic(p: PlantParams, s: complex) -> complex:
    return p.m * s * s + cmath.exp(-s * p.h) * (p.k + p.b * s)


def _characteristic_derivative(p: PlantParams, s: complex) -> complex:
    e = cmath.exp(-s * p.h)
    return 2.0 * p.m * s + e * (p.b - p.h * (p.k + p.b * s))


def normalized_residual(p: PlantParams, s: complex) -> float:
    r = abs(s)
    return abs(characteristic(p, s)) / (p.m * r * r + p.k + p.b * r)


def _delay_free_root(p: PlantParams) -> complex:
    roots = np.roots([p.m, p.b, p.k])
    best = max(roots, key=lambda z: (z.real, z.imag))
    return complex(best.real, abs(best.imag))


def dominant_root(p: PlantParams, tol: float = 1e-12, max_iter: int = 100) -> DominantRoot:
    """Rightmost root pair of chi_h, by Newton iteration from a Pade seed.

    The representative with non-negative imaginary part is returned.
    """
    if p.h == 0.0:
        s = _delay_free_root(p)
        return DominantRoot(s.real, s.imag, normalized_residual(p, s), 0)

    h_c = critical_delay(p)
    if abs(p.h - h_c) <= max(10 * neutral_band(h_c), 1e-3 * h_c):
        seed = complex(0.0, crossing_frequency(p))
    else:
        from .pade import pade_roots

        roots = pade_roots(p)
        seed = max(roots, key=lambda z: (z.real, z.imag))
        seed = complex(seed.real, abs(seed.imag))

    s = seed
    trace = [s]
    for it in range(1, max_iter + 1):
        step = characteristic(p, s) / _characteristic_derivative(p, s)
        s = s - step
        trace.append(s)
        if not (math.isfinite(s.real) and math.isfinite(s.imag)):
            break
        res = normalized_residual(p, s)
        if res <= tol or abs(step) <= 4e-16 * max(abs(s), 1.0):
            if res <= max(tol, 1e-10):
                return DominantRoot(s.real, abs(s.imag), res, it)
    raise NumericalError(
        f"Newton iteration on chi_h did not converge for {p}", trace=trace
    )


def delay_free_restitution(p: PlantParams) -> float:
    """Overshoot of the delay-free oscillator, equal to its restitution coefficient."""
    zeta = p.damping_ratio
    if zeta >= 1.0:
        raise DomainError(f"damping ratio {zeta:.6g} >= 1: no overshoot")
    return math.exp(-math.pi * zeta / math.sqrt(1.0 - zeta * zeta))


def delay_free_damping(m: float, k: float, epsilon: float) -> float:
    """Inverse of :func:`delay_free_restitution` for the damping ``b``."""
    if not 0.0 < epsilon <= 1.0:
        raise DomainError(f"epsilon must lie in (0, 1], got {epsilon!r}")
    log_eps = math.log(epsilon)
    zeta = -log_eps / math.sqrt(math.pi ** 2 + log_eps ** 2)
    return 2.0 * zeta * math.sqrt(k * m)
