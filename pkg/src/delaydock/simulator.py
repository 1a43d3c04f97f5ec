"""Fixed-step integration of the loop-delay contact dynamics

    m x_r''(t) = f(t),    f = -k x - b x'  while x < 0, else 0,
    x(t) = x_r(t - h)

and the data-driven metrics computed from a trajectory: restitution
coefficient, contact duration, fitted stiffness and the passivity
observer energy.

Sign conventions: ``x`` is the separation between the contact surfaces,
negative while penetrating; ``v_r`` and ``v_m`` are its time derivatives
(positive while receding). The approach speed ``v0`` is positive.
"""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .model import DomainError, NumericalError, PlantParams
from .pole_location import crossing_frequency

DEFAULT_DT = 1e-4
DEFAULT_V0 = 0.020
DEFAULT_X0 = 0.01
DEFAULT_WINDOW = 0.2
DEFAULT_OBSERVER_DT = 4e-3

TRAJECTORY_COLUMNS = ("t", "x_r", "x", "v_r", "v_m", "f", "f_in", "contact")
METRIC_KEYS = ("v_minus", "v_plus", "epsilon", "tau", "tau_hat", "k_hat", "delta_E_final")


class ContactError(DomainError):
    """The trajectory lacks the contact phase an operation needs."""


class TraceFormatError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SimulationDiverged(NumericalError):
    def __init__(self, message, trajectory):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True)
class SimConfig:
    plant: PlantParams
    v0: float = DEFAULT_V0
    x0: float = DEFAULT_X0
    dt: float = DEFAULT_DT
    t_max: Optional[float] = None
    post_contact_window: float = DEFAULT_WINDOW
    clamp_push_only: bool = False
    observer_dt: float = DEFAULT_OBSERVER_DT
    # which feedback components are computed in software rather than sensed
    virtual_stiffness: bool = False
    virtual_damping: bool = True

    def __post_init__(self):
        for name in ("v0", "x0", "dt", "post_contact_window", "observer_dt"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")
        if self.observer_dt < self.step:
            raise DomainError(f"observer_dt {self.observer_dt!r} is below the step {self.step!r}")
        if self.t_max is not None and not self.t_max > self.x0 / self.v0:
            raise DomainError(f"t_max must exceed x0/v0 = {self.x0 / self.v0!r}")

    @property
    def delay_steps(self) -> int:
        h = self.plant.h
        if h == 0.0:
            return 0
        return max(1, math.ceil(h / self.dt - 1e-9))

    @property
    def step(self) -> float:
        """Integrator step; shrunk from ``dt`` so the delay is a whole number of steps."""
        n = self.delay_steps
        return self.plant.h / n if n else self.dt

    @property
    def dt_adjusted(self) -> bool:
        return self.step != self.dt

    @property
    def horizon(self) -> float:
        if self.t_max is not None:
            return self.t_max
        p = self.plant
        half_period = math.pi * math.sqrt(p.m / p.k)
        return (self.x0 / self.v0 + 2 * p.h
                + 6 * half_period + 20 * p.h
                + self.post_contact_window + 4 * p.h + 0.05)


@dataclass
class Trajectory:
    t: np.ndarray
    x_r: np.ndarray
    x: np.ndarray
    v_r: np.ndarray
    v_m: np.ndarray
    f: np.ndarray
    f_in: np.ndarray
    contact: np.ndarray
    h: Optional[float] = None
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.t)

    @property
    def dt(self) -> float:
        return float((self.t[-1] - self.t[0]) / (len(self.t) - 1))

    def to_csv(self, precision: Optional[int] = None) -> str:
        """CSV text with header ``t,x_r,x,v_r,v_m,f,f_in,contact``.

        ``precision`` is the number of significant digits; ``None`` writes
        the shortest representation that round-trips exactly.
        """
        fmt = repr if precision is None else (lambda v, p=precision: f"{v:.{p}g}")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TRAJECTORY_COLUMNS)
        cols = [self.t, self.x_r, self.x, self.v_r, self.v_m, self.f, self.f_in]
        for i in range(len(self.t)):
            row = [fmt(float(c[i])) for c in cols]
            row.append("1" if self.contact[i] else "0")
            writer.writerow(row)
        return buf.getvalue()

    def save_csv(self, path, precision: Optional[int] = None):
        atomic_write(path, self.to_csv(precision))


@dataclass
class ContactMetrics:
    contact: bool
    v_minus: float = math.nan
    v_plus: float = math.nan
    epsilon: float = math.nan
    tau: float = math.nan
    tau_hat: float = math.nan
    k_hat: float = math.nan
    delta_E_final: float = math.nan
    delta_E_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    delta_E_series: np.ndarray = field(default_factory=lambda: np.empty(0))
    t_start: float = math.nan
    t_end: float = math.nan

    def as_dict(self) -> dict:
        return {key: float(getattr(self, key)) for key in METRIC_KEYS}


def atomic_write(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- integration ---------------------------------------------------------------


def _hermite(x0, v0, x1, v1, dt, c):
    """Cubic Hermite value and derivative at fraction ``c`` of a step."""
    c2 = c * c
    c3 = c2 * c
    h00 = 2 * c3 - 3 * c2 + 1
    h10 = c3 - 2 * c2 + c
    h01 = -2 * c3 + 3 * c2
    h11 = c3 - c2
    x = h00 * x0 + h10 * dt * v0 + h01 * x1 + h11 * dt * v1
    d00 = 6 * c2 - 6 * c
    d10 = 3 * c2 - 4 * c + 1
    d01 = -6 * c2 + 6 * c
    d11 = 3 * c2 - 2 * c
    v = (d00 * x0 + d01 * x1) / dt + d10 * v0 + d11 * v1
    return x, v


def _hermite_root(x0, v0, x1, v1, dt):
    """Fraction in [0, 1] where the Hermite cubic through the step changes sign."""
    lo, hi = 0.0, 1.0
    f_lo = x0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        f_mid = _hermite(x0, v0, x1, v1, dt, mid)[0]
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class _History:
    """Grid values of x_r and its derivative, with split points inside kinked steps."""

    def __init__(self, x0, v0, dt, n):
        self.x0, self.v0, self.dt = x0, v0, dt
        self.X = [0.0] * (n + 1)
        self.V = [0.0] * (n + 1)
        self.splits = {}  # step index -> (fraction, x, v)

    def at(self, j, c):
        """x_r and x_r' at time (j + c) * dt; negative times use free flight."""
        if j < 0:
            theta = (j + c) * self.dt
            return self.x0 - self.v0 * theta, -self.v0
        dt = self.dt
        X, V = self.X, self.V
        split = self.splits.get(j)
        if split is None:
            return _hermite(X[j], V[j], X[j + 1], V[j + 1], dt, c)
        cs, xs, vs = split
        if c <= cs:
            if cs == 0.0:
                return xs, vs
            x, v = _hermite(X[j], V[j], xs, vs, cs * dt, c / cs)
        else:
            x, v = _hermite(xs, vs, X[j + 1], V[j + 1], (1.0 - cs) * dt, (c - cs) / (1.0 - cs))
        return x, v


def _force(k, b, x, v, clamp):
    f = -k * x - b * v
    if clamp and f < 0.0:
        return 0.0
    return f


def _rk4_sub(hist, j_del, c0, c1, X, V, dt, m, k, b, clamp, in_contact):
    """RK4 over the fraction [c0, c1] of a step with delayed state read from step ``j_del``."""
    tau = (c1 - c0) * dt
    if in_contact:
        def acc(c):
            xd, vd = hist.at(j_del, c)
            return _force(k, b, xd, vd, clamp) / m
        a1 = acc(c0)
        am = acc(0.5 * (c0 + c1))
        a4 = acc(c1)
    else:
        a1 = am = a4 = 0.0
    # stage derivatives of (x, v): (V, a1), (V + tau/2 a1, am), (V + tau/2 am, am), (V + tau am, a4)
    x_new = X + tau / 6.0 * (V + 2 * (V + 0.5 * tau * a1) + 2 * (V + 0.5 * tau * am) + (V + tau * am))
    v_new = V + tau / 6.0 * (a1 + 4 * am + a4)
    return x_new, v_new


def _rk4_state(X, V, tau, m, k, b, clamp, in_contact):
    """RK4 step of the delay-free system where the force depends on the current state."""
    if not in_contact:
        return X + tau * V, V

    def acc(x, v):
        return _force(k, b, x, v, clamp) / m

    k1x, k1v = V, acc(X, V)
    k2x, k2v = V + 0.5 * tau * k1v, acc(X + 0.5 * tau * k1x, V + 0.5 * tau * k1v)
    k3x, k3v = V + 0.5 * tau * k2v, acc(X + 0.5 * tau * k2x, V + 0.5 * tau * k2v)
    k4x, k4v = V + tau * k3v, acc(X + tau * k3x, V + tau * k3v)
    return (X + tau / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
            V + tau / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


def simulate(cfg: SimConfig):
    """Integrate one approach-contact-rebound cycle.

    Returns ``(trajectory, metrics)``. The run stops at ``cfg.horizon`` or
    once the post-contact averaging window (plus guard band) has elapsed.
    """
    p = cfg.plant
    m, k, b, h = p.m, p.k, p.b, p.h
    clamp = cfg.clamp_push_only
    dt = cfg.step
    nd = cfg.delay_steps
    n_max = int(math.ceil(cfg.horizon / dt))
    hist = _History(cfg.x0, cfg.v0, dt, n_max)
    X, V = hist.X, hist.V
    X[0], V[0] = cfg.x0, -cfg.v0
    crossings = {}  # step index -> fraction where x_r changes sign
    guard = 2.0 * h
    blowup = 1e6 * cfg.x0

    contact_seen = False
    exit_time = None
    n_done = n_max
    in_contact_now = False  # delay-free contact mode

    for i in range(n_max):
        x_i, v_i = X[i], V[i]
        if nd:
            j = i - nd
            cuts = [0.0]
            if j in crossings:
                cuts.append(crossings[j])
            cuts.append(1.0)
            xs, vs = x_i, v_i
            split = None
            for c0, c1 in zip(cuts[:-1], cuts[1:]):
                if c1 <= c0:
                    continue
                xd_mid = hist.at(j, 0.5 * (c0 + c1))[0]
                xs, vs = _rk4_sub(hist, j, c0, c1, xs, vs, dt, m, k, b, clamp, xd_mid < 0.0)
                if c1 < 1.0:
                    split = (c1, xs, vs)
            if split is not None:
                hist.splits[i] = split
            X[i + 1], V[i + 1] = xs, vs
        else:
            xs, vs = _rk4_state(x_i, v_i, dt, m, k, b, clamp, in_contact_now)
            if (xs < 0.0) != (x_i < 0.0) and x_i != 0.0:
                c = _hermite_root(x_i, v_i, xs, vs, dt)
                xa, va = _rk4_state(x_i, v_i, c * dt, m, k, b, clamp, in_contact_now)
                in_contact_now = xs < 0.0
                xs, vs = _rk4_state(xa, va, (1.0 - c) * dt, m, k, b, clamp, in_contact_now)
                hist.splits[i] = (c, xa, va)
            elif x_i == 0.0:
                in_contact_now = xs < 0.0
            X[i + 1], V[i + 1] = xs, vs

        if (X[i + 1] < 0.0) != (x_i < 0.0):
            split = hist.splits.get(i)
            if split is None:
                crossings[i] = _hermite_root(x_i, v_i, X[i + 1], V[i + 1], dt)
            else:
                cs, xa, va = split
                if (xa < 0.0) != (x_i < 0.0):
                    crossings[i] = cs * _hermite_root(x_i, v_i, xa, va, cs * dt)
                else:
                    crossings[i] = cs + (1 - cs) * _hermite_root(xa, va, X[i + 1], V[i + 1], (1 - cs) * dt)

        if not math.isfinite(X[i + 1]) or abs(X[i + 1]) > blowup:
            traj = _assemble(cfg, hist, i + 1)
            raise SimulationDiverged(f"|x_r| exceeded {blowup:g} m at t={(i + 1) * dt:.6g} s", traj)

        # separation seen by the hardware at t_{i+1}
        lag = i + 1 - nd
        x_act = X[lag] if lag >= 0 else cfg.x0 - cfg.v0 * lag * dt
        if x_act < 0.0:
            contact_seen = True
            exit_time = None
        elif contact_seen and exit_time is None:
            exit_time = (i + 1) * dt
        if exit_time is not None and V[i + 1] > 0.0:
            if (i + 1) * dt >= exit_time + guard + cfg.post_contact_window + 2 * dt:
                n_done = i + 1
                break

    traj = _assemble(cfg, hist, n_done)
    metrics = analyze(traj, window=cfg.post_contact_window, observer_dt=cfg.observer_dt, plant=p)
    return traj, metrics


def _assemble(cfg: SimConfig, hist: _History, n: int) -> Trajectory:
    p = cfg.plant
    nd = cfg.delay_steps
    dt = cfg.step
    idx = np.arange(n + 1)
    x_r = np.asarray(hist.X[: n + 1])
    v_r = np.asarray(hist.V[: n + 1])
    lag = idx - nd
    past = lag >= 0
    x = np.where(past, x_r[np.clip(lag, 0, None)], cfg.x0 - cfg.v0 * lag * dt)
    v_m = np.where(past, v_r[np.clip(lag, 0, None)], -cfg.v0)
    contact = x < 0.0
    spring = -p.k * x
    damper = -p.b * v_m
    f_in = np.where(contact, spring + damper, 0.0)
    if cfg.clamp_push_only:
        f_in = np.maximum(f_in, 0.0)
    sensed = (0.0 if cfg.virtual_stiffness else spring) + (0.0 if cfg.virtual_damping else damper)
    f = np.where(contact, sensed, 0.0)
    return Trajectory(
        t=idx * dt, x_r=x_r, x=x, v_r=v_r, v_m=v_m, f=f, f_in=f_in, contact=contact,
        h=p.h, meta={"dt_requested": cfg.dt, "dt": dt, "dt_adjusted": cfg.dt_adjusted},
    )


# -- metrics ---------------------------------------------------------------------


def _contact_span(traj: Trajectory):
    """Sample indices of the first contact sample and the first non-contact sample after the last."""
    idx = np.flatnonzero(traj.contact)
    if idx.size == 0:
        raise ContactError("trajectory has no contact samples")
    first, last = int(idx[0]), int(idx[-1])
    if first == 0:
        raise ContactError("trajectory starts in contact; no approach phase")
    if last + 1 >= len(traj):
        raise ContactError("contact still ongoing at the end of the trajectory")
    return first, last + 1


def _refined_crossing(traj: Trajectory, i: int) -> float:
    """Time where x crosses zero between samples i-1 and i (linear refinement)."""
    x0, x1 = traj.x[i - 1], traj.x[i]
    t0, t1 = traj.t[i - 1], traj.t[i]
    if x1 == x0:
        return float(t1)
    return float(t0 + (t1 - t0) * x0 / (x0 - x1))


def contact_times(traj: Trajectory):
    first, after = _contact_span(traj)
    return _refined_crossing(traj, first), _refined_crossing(traj, after)


def contact_duration(traj: Trajectory) -> float:
    t_start, t_end = contact_times(traj)
    return t_end - t_start


def restitution(traj: Trajectory, window: float = DEFAULT_WINDOW, guard: Optional[float] = None):
    """Averaged approach and rebound speeds and their ratio.

    Speeds are averaged over ``window`` seconds before the first contact and
    after the last one, each kept ``guard`` seconds (default ``2 h``) away
    from the contact. Returns ``(v_minus, v_plus, epsilon)``.
    """
    if guard is None:
        guard = 2.0 * (traj.h or 0.0)
    t_start, t_end = contact_times(traj)
    t = traj.t
    pre = (t >= t_start - guard - window) & (t <= t_start - guard)
    post = (t >= t_end + guard) & (t <= t_end + guard + window)
    if not pre.any():
        raise ContactError("no approach samples inside the pre-contact window")
    if not post.any():
        raise ContactError("no rebound samples inside the post-contact window")
    v_minus = float(-np.mean(traj.v_m[pre]))
    v_plus = float(np.mean(traj.v_m[post]))
    if v_minus <= 0.0:
        raise ContactError(f"approach speed {v_minus!r} is not positive")
    return v_minus, v_plus, v_plus / v_minus


def predicted_duration(p: PlantParams, k_hat: float, include_damping: bool = False) -> float:
    """Half-period estimate of the contact duration, ``pi / omega_c`` with ``k_hat`` for ``k``.

    By default the crossing frequency is evaluated without the damping term,
    which reproduces the tabulated test predictions; ``include_damping``
    uses the full delay-independent crossing frequency instead.
    """
    if not k_hat > 0.0:
        raise DomainError(f"k_hat must be > 0, got {k_hat!r}")
    q = p.with_(k=float(k_hat), b=p.b if include_damping else 0.0)
    return math.pi / crossing_frequency(q)


def estimate_stiffness(traj: Trajectory) -> float:
    """Slope of the sensed force against penetration over the contact samples."""
    sel = traj.contact & (traj.x < 0.0)
    x = traj.x[sel]
    f = traj.f[sel]
    if x.size < 2 or np.ptp(x) == 0.0:
        raise ContactError("not enough penetration samples to fit a stiffness")
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, f, rcond=None)
    k_hat = -float(coef[0])
    if not k_hat > 0.0:
        raise NumericalError(f"fitted stiffness {k_hat!r} is not positive")
    return k_hat


def passivity_observer(traj: Trajectory, observer_dt: float = DEFAULT_OBSERVER_DT):
    """Energy added by the loop during contact, sampled every ``observer_dt``.

    Power terms are taken in the approach-positive velocity convention, so
    positive values mean the loop injects energy (active) and negative
    values mean it dissipates (passive). Returns ``(times, delta_E)``.
    """
    dt = traj.dt
    if observer_dt < dt * (1 - 1e-9):
        raise DomainError(f"observer_dt {observer_dt!r} below trajectory step {dt!r}")
    t0 = traj.t[0]
    n_obs = int(math.floor((traj.t[-1] - t0) / observer_dt + 1e-9)) + 1
    idx = np.rint(np.arange(n_obs) * observer_dt / dt).astype(int)
    idx = idx[idx < len(traj)]
    idx = idx[traj.contact[idx]]
    # closing speeds are -v_m and -v_r
    power = traj.f_in[idx] * traj.v_r[idx] - traj.f[idx] * traj.v_m[idx]
    return traj.t[idx], observer_dt * np.cumsum(power)


def analyze(traj: Trajectory, window=DEFAULT_WINDOW, observer_dt=DEFAULT_OBSERVER_DT,
            plant: Optional[PlantParams] = None, guard: Optional[float] = None) -> ContactMetrics:
    """All contact metrics of a trajectory; ``contact=False`` when it never touches."""
    if not traj.contact.any():
        return ContactMetrics(contact=False)
    t_start, t_end = contact_times(traj)
    v_minus, v_plus, eps = restitution(traj, window, guard)
    try:
        k_hat = estimate_stiffness(traj)
    except (ContactError, NumericalError):
        k_hat = math.nan
    tau_hat = math.nan
    if plant is not None and math.isfinite(k_hat):
        tau_hat = predicted_duration(plant, k_hat)
    obs_t, obs_e = passivity_observer(traj, observer_dt)
    return ContactMetrics(
        contact=True, v_minus=v_minus, v_plus=v_plus, epsilon=eps,
        tau=t_end - t_start, tau_hat=tau_hat, k_hat=k_hat,
        delta_E_final=float(obs_e[-1]) if obs_e.size else 0.0,
        delta_E_t=obs_t, delta_E_series=obs_e, t_start=t_start, t_end=t_end,
    )


# -- ingestion -------------------------------------------------------------------

_REQUIRED = ("t", "x_r", "x", "v_r", "v_m", "f")


def ingest_trace(path, h: Optional[float] = None) -> Trajectory:
    """Read a recorded trace (``t,x_r,x,v_r,v_m,f[,f_in][,contact]``).

    A missing ``f_in`` column defaults to ``f``. The contact flag is always
    rederived as ``x < 0``. Non-uniform time stamps are resampled onto a
    uniform grid by linear interpolation.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [c.strip() for c in next(reader)]
        except StopIteration:
            raise TraceFormatError("empty file", line=1) from None
        missing = [c for c in _REQUIRED if c not in header]
        if missing:
            raise TraceFormatError(f"missing column(s) {missing}", line=1)
        cols = {name: header.index(name) for name in header}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise TraceFormatError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            try:
                values = [float(c) for c in row]
            except ValueError as exc:
                raise TraceFormatError(str(exc), line=lineno) from None
            if not all(math.isfinite(v) for v in values):
                raise TraceFormatError("non-finite value", line=lineno)
            if rows and values[cols["t"]] <= rows[-1][0][cols["t"]]:
                raise TraceFormatError("time stamps must increase strictly", line=lineno)
            rows.append((values, lineno))
    if len(rows) < 3:
        raise TraceFormatError(f"need at least 3 samples, got {len(rows)}")
    data = np.array([r[0] for r in rows])

    def col(name, default=None):
        return data[:, cols[name]] if name in cols else default

    t = col("t")
    series = {name: col(name) for name in _REQUIRED[1:]}
    series["f_in"] = col("f_in", series["f"])
    steps = np.diff(t)
    dt = float(np.mean(steps))
    meta = {"source": os.fspath(path), "resampled": False}
    if np.max(np.abs(steps - dt)) > 1e-6 * dt:
        n = int(round((t[-1] - t[0]) / float(np.median(steps))))
        grid = np.linspace(t[0], t[-1], n + 1)
        series = {name: np.interp(grid, t, s) for name, s in series.items()}
        t = grid
        meta["resampled"] = True
    return Trajectory(
        t=t, x_r=series["x_r"], x=series["x"], v_r=series["v_r"], v_m=series["v_m"],
        f=series["f"], f_in=series["f_in"], contact=series["x"] < 0.0, h=h, meta=meta,
    )
