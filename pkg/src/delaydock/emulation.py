"""Find the virtual damping that makes the delayed loop reproduce a target restitution."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .model import DomainError, PlantParams
from .pole_location import delay_free_damping
from .simulator import ContactError, SimConfig, Trajectory, simulate

COMPARISON_COLUMNS = ("label", "m", "k", "b", "h", "epsilon", "f_max")


class BracketError(DomainError):
    def __init__(self, message, eps_range):
        super().__init__(message)
        self.eps_range = eps_range


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    m: float
    k: float
    b: float
    h: float
    epsilon: float
    f_max: float


@dataclass
class EmulationResult:
    b_star: float
    epsilon_achieved: float
    iterations: int
    bracket: tuple
    target: float
    comparison: list = field(default_factory=list)
    evaluations: list = field(default_factory=list)  # (b, epsilon) in call order

    def as_dict(self) -> dict:
        return {
            "b_star": self.b_star,
            "epsilon_achieved": self.epsilon_achieved,
            "target": self.target,
            "iterations": self.iterations,
            "bracket": list(self.bracket),
            "comparison": [row.__dict__ for row in self.comparison],
        }

    def comparison_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(COMPARISON_COLUMNS)
        for row in self.comparison:
            writer.writerow([row.label] + [f"{getattr(row, c):.9g}" for c in COMPARISON_COLUMNS[1:]])
        return buf.getvalue()


def peak_force(traj: Trajectory) -> float:
    """Largest feedback-force magnitude while in contact."""
    if not traj.contact.any():
        raise ContactError("trajectory has no contact samples")
    return float(np.max(np.abs(traj.f_in[traj.contact])))


def _run(cfg: SimConfig, b: float):
    traj, metrics = simulate(replace(cfg, plant=cfg.plant.with_(b=b)))
    if not metrics.contact:
        raise ContactError(f"no contact within {cfg.horizon:g} s at b={b!r}")
    return traj, metrics.epsilon


def _epsilon(cfg: SimConfig, b: float) -> float:
    try:
        return _run(cfg, b)[1]
    except ContactError:
        # contact never releases: all incoming speed absorbed
        return 0.0


def solve_virtual_damping(target_eps: float, m: float, k: float, h: float,
                          cfg: Optional[SimConfig] = None, tol: float = 1e-3,
                          max_iter: int = 100) -> EmulationResult:
    """Bisection on ``b`` for ``epsilon(b) == target_eps`` at fixed ``(m, k, h)``.

    ``cfg`` supplies the simulation settings; its plant is replaced. The
    upper bracket starts at ``k h`` (or a tenth of the critical damping when
    ``h == 0``) and doubles until the restitution falls below the target.
    """
    if not 0.0 < target_eps <= 1.0:
        raise DomainError(f"target_eps must lie in (0, 1], got {target_eps!r}")
    if not tol > 0.0:
        raise DomainError(f"tol must be > 0, got {tol!r}")
    plant = PlantParams(m, k, 0.0, h)
    cfg = SimConfig(plant) if cfg is None else replace(cfg, plant=plant)
    b_cap = 100.0 * k * h + 10.0 * math.sqrt(k * m)
    evals = []

    def eps_of(b):
        e = _epsilon(cfg, b)
        evals.append((b, e))
        return e

    b_lo, e_lo = 0.0, eps_of(0.0)
    if e_lo < target_eps - tol:
        raise BracketError(
            f"epsilon at b=0 is {e_lo:.6g}, already below target {target_eps:.6g}", (e_lo, e_lo)
        )
    iterations = 0
    if abs(e_lo - target_eps) <= tol:
        b_star, e_star, b_hi = 0.0, e_lo, 0.0
    else:
        b_hi = k * h if h > 0.0 else 0.2 * math.sqrt(k * m)
        e_hi = eps_of(b_hi)
        while e_hi > target_eps:
            b_lo, e_lo = b_hi, e_hi
            if b_hi >= b_cap:
                raise BracketError(
                    f"target {target_eps:.6g} unreachable for b <= {b_cap:.6g}",
                    (min(e for _, e in evals), max(e for _, e in evals)),
                )
            b_hi = min(2.0 * b_hi, b_cap)
            e_hi = eps_of(b_hi)
        b_star, e_star = b_hi, e_hi
        while abs(e_star - target_eps) > tol and iterations < max_iter:
            iterations += 1
            b_mid = 0.5 * (b_lo + b_hi)
            e_mid = eps_of(b_mid)
            b_star, e_star = b_mid, e_mid
            if e_mid > target_eps:
                b_lo, e_lo = b_mid, e_mid
            elif e_mid < target_eps:
                b_hi = b_mid
            else:
                break
        if abs(e_star - target_eps) > tol:
            raise BracketError(
                f"bisection stalled at b={b_star:.6g}, epsilon={e_star:.6g}", (e_lo, e_hi)
            )

    traj, _ = _run(cfg, b_star)
    rows = []
    if target_eps < 1.0:
        b_ref = delay_free_damping(m, k, target_eps)
        ref_traj, ref_eps = _run(replace(cfg, plant=PlantParams(m, k, 0.0, 0.0)), b_ref)
        rows.append(ComparisonRow("delay-free reference", m, k, b_ref, 0.0, ref_eps, peak_force(ref_traj)))
    rows.append(ComparisonRow("emulated", m, k, b_star, h, e_star, peak_force(traj)))
    return EmulationResult(
        b_star=b_star, epsilon_achieved=e_star, iterations=iterations,
        bracket=(b_lo, b_hi), target=target_eps, comparison=rows, evaluations=evals,
    )
