"""Critical-boundary curves and classified grids in the (h, b), (h, k) and (h, m) planes."""

from __future__ import annotations

import csv
import io
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import DomainError, PlantParams, Verdict, verdict_from_margin
from .pade import pade_critical_delay
from .pole_location import critical_delay

AXES = ("b", "k", "m")
METHODS = ("pole-location", "pade")


def _held(y_axis, fixed):
    if y_axis not in AXES:
        raise DomainError(f"y_axis must be one of {AXES}, got {y_axis!r}")
    missing = [n for n in AXES if n != y_axis and n not in fixed]
    if missing:
        raise DomainError(f"missing held parameter(s) {missing}")
    return {name: float(fixed[name]) for name in AXES if name != y_axis}


def _critical(method):
    if method == "pole-location":
        return critical_delay
    if method == "pade":
        return pade_critical_delay
    raise DomainError(f"method must be one of {METHODS}, got {method!r}")


def sweep_workers() -> int:
    """Worker cap for parameter sweeps, from ``DELAYDOCK_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("DELAYDOCK_THREADS", "1")))
    except ValueError:
        return 1


def _map(fn, items):
    items = list(items)
    n = min(sweep_workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


@dataclass
class BoundaryCurve:
    y_axis: str
    fixed: dict
    method: str
    points: np.ndarray  # (n, 2) columns h, y; sorted by h
    label: str = ""
    skipped: list = field(default_factory=list)

    @property
    def h(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h", self.y_axis])
        for h, y in self.points:
            writer.writerow([f"{h:.9g}", f"{y:.9g}"])
        return buf.getvalue()


@dataclass
class VerdictGrid:
    y_axis: str
    h: np.ndarray  # (nx,)
    y: np.ndarray  # (ny,)
    verdicts: np.ndarray  # (ny, nx) of Verdict, row-major with h fastest
    method: str

    def letters(self) -> np.ndarray:
        return np.vectorize(lambda v: v.letter)(self.verdicts)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["h", self.y_axis, "verdict"])
        for j, y in enumerate(self.y):
            for i, h in enumerate(self.h):
                writer.writerow([f"{h:.9g}", f"{y:.9g}", self.verdicts[j, i].letter])
        return buf.getvalue()


def boundary_curve(y_axis, fixed, y_range, samples, method="pole-location", label=""):
    """Critical delay as a function of one parameter, the other two held.

    Points whose parameters are out of domain are skipped; each skip is
    recorded on the curve and raised as a warning.
    """
    if samples < 2:
        raise DomainError(f"samples must be >= 2, got {samples!r}")
    held = _held(y_axis, fixed)
    h_of = _critical(method)
    def point(y):
        try:
            return h_of(PlantParams(h=0.0, **held, **{y_axis: float(y)})), None
        except (DomainError, ArithmeticError) as exc:
            return None, str(exc)

    ys = np.linspace(y_range[0], y_range[1], samples)
    pts, skipped = [], []
    for y, (h, err) in zip(ys, _map(point, ys)):
        if err is None:
            pts.append((h, float(y)))
        else:
            skipped.append((float(y), err))
            warnings.warn(f"skipping {y_axis}={y!r}: {err}", stacklevel=2)
    arr = np.array(pts, dtype=float).reshape(-1, 2)
    arr = arr[np.argsort(arr[:, 0], kind="stable")]
    return BoundaryCurve(y_axis, dict(held), method, arr, label, skipped)


def classify_grid(x_range, y_axis, y_range, nx, ny, fixed, method="pole-location"):
    """Verdict per (h, y) cell with the same neutral band as pole-location classify."""
    if nx < 2 or ny < 2:
        raise DomainError(f"nx and ny must be >= 2, got {nx!r}, {ny!r}")
    held = _held(y_axis, fixed)
    h_of = _critical(method)
    hs = np.linspace(x_range[0], x_range[1], nx)
    ys = np.linspace(y_range[0], y_range[1], ny)
    verdicts = np.empty((ny, nx), dtype=object)
    h_cs = _map(lambda y: h_of(PlantParams(h=0.0, **held, **{y_axis: float(y)})), ys)
    for j, h_c in enumerate(h_cs):
        for i, h in enumerate(hs):
            verdicts[j, i] = verdict_from_margin(h_c - h, h_c).verdict
    return VerdictGrid(y_axis, hs, ys, verdicts, method)


def sensitivity_family(y_axis, sweep_param, sweep, fixed, y_range, samples, method="pole-location"):
    """One boundary curve per value of a third parameter."""
    sweep = list(sweep)
    if not sweep:
        raise DomainError("sweep must be non-empty")
    if sweep_param == y_axis or sweep_param not in AXES:
        raise DomainError(f"sweep parameter must be a held axis, got {sweep_param!r}")
    curves = []
    for value in sweep:
        held = dict(fixed)
        held[sweep_param] = value
        curves.append(
            boundary_curve(y_axis, held, y_range, samples, method, label=f"{sweep_param}={value:g}")
        )
    return curves


__all__ = [
    "AXES",
    "METHODS",
    "BoundaryCurve",
    "Verdict",
    "VerdictGrid",
    "boundary_curve",
    "classify_grid",
    "sensitivity_family",
]
