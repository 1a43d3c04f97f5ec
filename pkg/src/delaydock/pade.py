"""First-order Pade treatment of the loop delay.

Substituting exp(-s h) ~ (2 - s h) / (2 + s h) into chi_h and clearing the
denominator gives the cubic

    m h s^3 + (2 m - b h) s^2 + (2 b - k h) s + 2 k

which is what every routine here works on.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError, PlantParams

PARAMETERS = ("h", "b", "k", "m")


@dataclass(frozen=True)
class PadeCubic:
    a3: float
    a2: float
    a1: float
    a0: float

    @property
    def coeffs(self) -> np.ndarray:
        """Coefficients in descending powers of s."""
        return np.array([self.a3, self.a2, self.a1, self.a0])

    def __call__(self, s):
        return ((self.a3 * s + self.a2) * s + self.a1) * s + self.a0

    @property
    def routh_stable(self) -> bool:
        c = (self.a3, self.a2, self.a1, self.a0)
        return all(x > 0.0 for x in c) and self.a2 * self.a1 > self.a3 * self.a0


@dataclass(frozen=True)
class RouthMargins:
    q34: float  # h^2 - 2(b/k + 2m/b) h + 4m/k, -inf when b == 0
    q35: float  # 2m - b h
    q36: float  # 2b - k h
    undamped: bool = False

    @property
    def stable(self) -> bool:
        return self.q34 > 0.0 and self.q35 > 0.0 and self.q36 > 0.0


@dataclass
class RootLocusTrace:
    parameter: str
    values: np.ndarray  # (n,)
    roots: np.ndarray  # (n, 3) complex; nan where the cubic degenerates

    def rightmost_real(self) -> np.ndarray:
        return np.nanmax(self.roots.real, axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["param", "re1", "im1", "re2", "im2", "re3", "im3"])
        for value, row in zip(self.values, self.roots):
            cells = [value]
            for z in row:
                cells.extend((z.real, z.imag))
            writer.writerow([f"{c:.9g}" for c in cells])
        return buf.getvalue()


def _coeffs(m, k, b, h):
    return PadeCubic(m * h, 2.0 * m - b * h, 2.0 * b - k * h, 2.0 * k)


def pade_cubic(p: PlantParams) -> PadeCubic:
    return _coeffs(p.m, p.k, p.b, p.h)


def pade_roots(p: PlantParams) -> np.ndarray:
    """Roots of the Pade cubic (two roots when ``h == 0``)."""
    return _cubic_roots(pade_cubic(p).coeffs)


def _cubic_roots(coeffs) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs[0] == 0.0:
        return np.roots(coeffs[1:]).astype(complex)
    roots = np.roots(coeffs).astype(complex)
    # one Newton polish per root on the original polynomial
    d = np.polyder(coeffs)
    for i, z in enumerate(roots):
        dz = np.polyval(d, z)
        if dz != 0:
            roots[i] = z - np.polyval(coeffs, z) / dz
    return roots


def evans_form(p: PlantParams, gain: str):
    """Split the Pade cubic as ``P(s) + gain * Q(s)``.

    Returns ``(P, Q)`` as length-4 coefficient arrays in descending powers.
    """
    m, k, b, h = p.m, p.k, p.b, p.h
    if gain == "h":
        P = [0.0, 2.0 * m, 2.0 * b, 2.0 * k]
        Q = [m, -b, -k, 0.0]
    elif gain == "b":
        P = [m * h, 2.0 * m, -k * h, 2.0 * k]
        Q = [0.0, -h, 2.0, 0.0]
    elif gain == "k":
        P = [m * h, 2.0 * m - b * h, 2.0 * b, 0.0]
        Q = [0.0, 0.0, -h, 2.0]
    elif gain == "m":
        P = [0.0, -b * h, 2.0 * b - k * h, 2.0 * k]
        Q = [h, 2.0, 0.0, 0.0]
    else:
        raise DomainError(f"gain must be one of {PARAMETERS}, got {gain!r}")
    return np.array(P), np.array(Q)


def routh_margins(p: PlantParams) -> RouthMargins:
    m, k, b, h = p.m, p.k, p.b, p.h
    q35 = 2.0 * m - b * h
    q36 = 2.0 * b - k * h
    if b == 0.0:
        return RouthMargins(-math.inf, q35, q36, undamped=True)
    q34 = h * h - 2.0 * (b / k + 2.0 * m / b) * h + 4.0 * m / k
    return RouthMargins(q34, q35, q36)


def pade_critical_delay(p: PlantParams) -> float:
    """Smaller root in ``h`` of the Routh quadratic ``q34``."""
    m, k, b = p.m, p.k, p.b
    if b == 0.0:
        return 0.0
    # with u = b^2 / 2mk the roots are (2b/k)/(1+u) / (1 +- sqrt(1 - 2u/(1+u)^2));
    # 2u/(1+u)^2 <= 1/2, so the discriminant stays positive and nothing overflows
    u = b * b / (2.0 * m * k)
    ratio = 2.0 * u / (1.0 + u) ** 2
    return (2.0 * b / k) / (1.0 + u) / (1.0 + math.sqrt(1.0 - ratio))


def pade_crossing_frequency(p: PlantParams) -> float:
    """Imaginary-axis frequency of the Pade cubic at its critical delay."""
    h = pade_critical_delay(p)
    if h == 0.0:
        raise DomainError("Pade critical delay is zero; crossing frequency undefined")
    c = pade_cubic(p.with_(h=h))
    return math.sqrt(c.a1 / c.a3)


def _match(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    """Reorder ``new`` to follow ``prev`` with least total displacement."""
    n = len(new)
    finite_prev = np.where(np.isfinite(prev), prev, 0.0)
    best, best_cost = None, math.inf
    for perm in itertools.permutations(range(n)):
        cand = new[list(perm)]
        cost = sum(
            abs(a - c) for a, c, ok in zip(finite_prev, cand, np.isfinite(prev)) if ok and np.isfinite(c)
        )
        if cost < best_cost - 1e-15:
            best, best_cost = cand, cost
    return best


def _sort_initial(roots: np.ndarray) -> np.ndarray:
    return np.array(sorted(roots, key=lambda z: (np.isnan(z.real), z.imag, z.real)))


def root_locus(p: PlantParams, vary: str, start: float, stop: float, steps: int) -> RootLocusTrace:
    """Roots of the Pade cubic as one parameter sweeps ``[start, stop]``.

    Roots are carried across samples by nearest-neighbour matching so each
    column traces one branch. When the leading coefficient vanishes the
    missing root is reported as ``nan``.
    """
    if vary not in PARAMETERS:
        raise DomainError(f"vary must be one of {PARAMETERS}, got {vary!r}")
    if start < 0.0:
        raise DomainError(f"{vary} must be >= 0, got start={start!r}")
    if not start < stop:
        raise DomainError(f"need start < stop, got {start!r}, {stop!r}")
    if steps < 2:
        raise DomainError(f"steps must be >= 2, got {steps!r}")
    values = np.linspace(start, stop, steps)
    out = np.full((steps, 3), complex(np.nan, np.nan))
    prev = None
    for i, v in enumerate(values):
        params = {"m": p.m, "k": p.k, "b": p.b, "h": p.h, vary: float(v)}
        coeffs = _coeffs(**params).coeffs
        roots = _cubic_roots(coeffs)
        row = np.full(3, complex(np.nan, np.nan))
        row[: len(roots)] = roots
        row = _sort_initial(row) if prev is None else _match(prev, row)
        out[i] = row
        prev = row
    return RootLocusTrace(vary, values, out)
