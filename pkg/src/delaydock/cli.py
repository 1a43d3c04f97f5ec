"""Command-line front end.

Exit status: 0 success, 2 usage error, 3 domain error, 4 numerical error.
Errors go to stderr prefixed with ``error_code=<status>``.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import math
import sys

from . import pade, pole_location, regions
from .emulation import solve_virtual_damping
from .model import DomainError, NumericalError, PlantParams
from .simulator import (
    DEFAULT_DT,
    DEFAULT_OBSERVER_DT,
    DEFAULT_V0,
    DEFAULT_WINDOW,
    DEFAULT_X0,
    SimConfig,
    TraceFormatError,
    analyze,
    atomic_write,
    ingest_trace,
    simulate,
)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _json(payload, args) -> str:
    payload = dict(payload)
    if args.stamp:
        payload["generated_at"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n"


def _kv_csv(payload) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])
    for key, value in _flatten(payload):
        writer.writerow([key, f"{value:.9g}" if isinstance(value, float) else value])
    return buf.getvalue()


def _flatten(payload, prefix=""):
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            yield from _flatten(value, name + ".")
        elif isinstance(value, (list, tuple)):
            for i, v in enumerate(value):
                if isinstance(v, (list, tuple)):
                    v = " ".join(repr(x) for x in v)
                yield f"{name}.{i}", v
        else:
            yield name, value


def _delay(args, required=True) -> float:
    h_ms, h_s = getattr(args, "h_ms", None), getattr(args, "h_s", None)
    if h_ms is not None:
        return h_ms * 1e-3
    if h_s is not None:
        return h_s
    if required:
        raise UsageError("a delay is required: pass --h-ms or --h-s")
    return 0.0


def _plant(args, h_required=True) -> PlantParams:
    missing = [n for n in ("m", "k") if getattr(args, n) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + n for n in missing))
    return PlantParams(args.m, args.k, args.b, _delay(args, h_required))


def _cmd_analyze(args):
    p = _plant(args)
    v = pole_location.classify(p)
    cs = pole_location.critical_delay_set(p, 1)
    margins = pade.routh_margins(p)
    payload = {
        "m": p.m, "k": p.k, "b": p.b, "h": p.h,
        "verdict": v.verdict.value,
        "margin": v.margin,
        "h_c": cs.h_c,
        "omega_c": cs.omega_c,
        "sigma": cs.sigma,
        "h_c_approx": pole_location.approx_critical_delay(p),
        "delay_free": pole_location.delay_free_stable(p).verdict.value,
        "pade": {
            "h_c": pade.pade_critical_delay(p),
            "q34": margins.q34, "q35": margins.q35, "q36": margins.q36,
            "stable": margins.stable,
        },
    }
    try:
        r = pole_location.dominant_root(p)
        payload["dominant_root"] = {"real": r.real_part, "imag": r.imag_part, "residual": r.residual}
    except NumericalError as exc:
        payload["dominant_root"] = {"error": str(exc)}
    return payload, _kv_csv(payload)


def _cmd_critical(args):
    p = _plant(args, h_required=False)
    cs = pole_location.critical_delay_set(p, args.n)
    payload = {
        "m": p.m, "k": p.k, "b": p.b,
        "omega_c": cs.omega_c,
        "h_c": cs.h_c,
        "h_values": list(cs.h_values),
        "sigma": cs.sigma,
        "h_c_approx": pole_location.approx_critical_delay(p),
    }
    return payload, _kv_csv(payload)


def _cmd_pade(args):
    p = _plant(args, h_required=False)
    c = pade.pade_cubic(p)
    margins = pade.routh_margins(p)
    payload = {
        "m": p.m, "k": p.k, "b": p.b, "h": p.h,
        "cubic": {"a3": c.a3, "a2": c.a2, "a1": c.a1, "a0": c.a0},
        "routh": {"q34": margins.q34, "q35": margins.q35, "q36": margins.q36, "stable": margins.stable},
        "roots": [[z.real, z.imag] for z in pade.pade_roots(p)],
    }
    if p.b > 0.0:
        payload["h_c"] = pade.pade_critical_delay(p)
        payload["omega_c"] = pade.pade_crossing_frequency(p)
    return payload, _kv_csv(payload)


def _cmd_rootlocus(args):
    p = _plant(args, h_required=args.vary != "h")
    trace = pade.root_locus(p, args.vary, args.start, args.stop, args.steps)
    payload = {
        "parameter": trace.parameter,
        "samples": [
            {"value": float(v), "roots": [[z.real, z.imag] for z in row]}
            for v, row in zip(trace.values, trace.roots)
        ],
    }
    return payload, trace.to_csv()


def _fixed(args, y_axis):
    held = {}
    swept = getattr(args, "sweep_param", None)
    for name in regions.AXES:
        if name == y_axis or name == swept:
            continue
        value = getattr(args, name)
        if value is None:
            raise UsageError(f"--{name} is required when the y axis is {y_axis}")
        held[name] = value
    return held


def _cmd_boundary(args):
    held = _fixed(args, args.y_axis)
    if args.sweep_param:
        curves = regions.sensitivity_family(
            args.y_axis, args.sweep_param, args.sweep, held,
            (args.y_from, args.y_to), args.samples, args.method,
        )
    else:
        curves = [regions.boundary_curve(args.y_axis, held, (args.y_from, args.y_to), args.samples, args.method)]
    payload = {
        "y_axis": args.y_axis,
        "method": args.method,
        "curves": [
            {"label": c.label, "fixed": c.fixed, "points": c.points.tolist(),
             "skipped": [y for y, _ in c.skipped]}
            for c in curves
        ],
    }
    if len(curves) == 1:
        text = curves[0].to_csv()
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["label", "h", args.y_axis])
        for c in curves:
            for h, y in c.points:
                writer.writerow([c.label, f"{h:.9g}", f"{y:.9g}"])
        text = buf.getvalue()
    return payload, text


def _cmd_grid(args):
    held = _fixed(args, args.y_axis)
    grid = regions.classify_grid(
        (args.h_from, args.h_to), args.y_axis, (args.y_from, args.y_to),
        args.nx, args.ny, held, args.method,
    )
    payload = {
        "y_axis": grid.y_axis,
        "method": grid.method,
        "h": grid.h.tolist(),
        "y": grid.y.tolist(),
        "verdicts": ["".join(row) for row in grid.letters()],
    }
    return payload, grid.to_csv()


def _sim_config(args, plant):
    return SimConfig(
        plant, v0=args.v0, x0=args.x0, dt=args.dt, t_max=args.t_max,
        post_contact_window=args.window, clamp_push_only=args.clamp_push_only,
        observer_dt=args.observer_dt,
        virtual_stiffness=args.virtual_stiffness, virtual_damping=not args.hardware_damping,
    )


def _cmd_simulate(args):
    p = _plant(args)
    traj, metrics = simulate(_sim_config(args, p))
    if args.trajectory:
        traj.save_csv(args.trajectory)
    payload = {"contact": metrics.contact, **metrics.as_dict(), "dt": traj.meta["dt"]}
    return payload, traj.to_csv()


def _cmd_metrics(args):
    traj = ingest_trace(args.trace, h=_delay(args, required=False))
    plant = None
    if args.m is not None and args.k is not None:
        plant = PlantParams(args.m, args.k, args.b, traj.h or 0.0)
    metrics = analyze(traj, window=args.window, observer_dt=args.observer_dt, plant=plant)
    payload = {"contact": metrics.contact, **metrics.as_dict()}
    return payload, _kv_csv(payload)


def _cmd_emulate(args):
    p = _plant(args)
    result = solve_virtual_damping(args.target_eps, p.m, p.k, p.h, _sim_config(args, p), tol=args.tol)
    return result.as_dict(), result.comparison_csv()


def _add_plant(sp, b_default=0.0, with_delay=True):
    sp.add_argument("--m", type=float, help="equivalent mass [kg]")
    sp.add_argument("--k", type=float, help="stiffness [N/m]")
    sp.add_argument("--b", type=float, default=b_default, help="damping [N s/m]")
    if with_delay:
        g = sp.add_mutually_exclusive_group()
        g.add_argument("--h-ms", type=float, help="loop delay [ms]")
        g.add_argument("--h-s", type=float, help="loop delay [s]")


def _add_sim(sp):
    sp.add_argument("--v0", type=float, default=DEFAULT_V0, help="approach speed [m/s]")
    sp.add_argument("--x0", type=float, default=DEFAULT_X0, help="initial gap [m]")
    sp.add_argument("--dt", type=float, default=DEFAULT_DT, help="integrator step [s]")
    sp.add_argument("--t-max", type=float, default=None, help="horizon [s]")
    sp.add_argument("--window", type=float, default=DEFAULT_WINDOW, help="speed averaging window [s]")
    sp.add_argument("--observer-dt", type=float, default=DEFAULT_OBSERVER_DT, help="observer sample time [s]")
    sp.add_argument("--clamp-push-only", action="store_true", help="zero tensile contact force")
    sp.add_argument("--virtual-stiffness", action="store_true", help="stiffness computed in software")
    sp.add_argument("--hardware-damping", action="store_true", help="damping sensed, not virtual")


def _add_output(sp, default_format="json"):
    sp.add_argument("--format", choices=("json", "csv"), default=default_format)
    sp.add_argument("--output", "-o", help="write to this file instead of stdout")
    sp.add_argument("--stamp", action="store_true", help="add a timestamp to JSON output")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="delaydock", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("analyze", help="stability verdict and margins")
    _add_plant(sp)
    _add_output(sp)

    sp = sub.add_parser("critical", help="crossing frequency and critical delays")
    _add_plant(sp, with_delay=False)
    sp.add_argument("--n", type=int, default=3, help="number of crossing delays")
    _add_output(sp)

    sp = sub.add_parser("pade", help="Pade cubic, Routh margins and critical delay")
    _add_plant(sp)
    _add_output(sp)

    sp = sub.add_parser("rootlocus", help="Pade root locus over one parameter")
    _add_plant(sp)
    sp.add_argument("--vary", choices=pade.PARAMETERS, required=True)
    sp.add_argument("--from", dest="start", type=float, required=True)
    sp.add_argument("--to", dest="stop", type=float, required=True)
    sp.add_argument("--steps", type=int, default=101)
    _add_output(sp, "csv")

    for name, help_ in (("boundary", "critical boundary curve(s)"), ("grid", "classified stability grid")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--m", type=float)
        sp.add_argument("--k", type=float)
        sp.add_argument("--b", type=float)
        sp.add_argument("--y-axis", choices=regions.AXES, required=True)
        sp.add_argument("--y-from", type=float, required=True)
        sp.add_argument("--y-to", type=float, required=True)
        sp.add_argument("--method", choices=regions.METHODS, default="pole-location")
        if name == "boundary":
            sp.add_argument("--samples", type=int, default=101)
            sp.add_argument("--sweep-param", choices=regions.AXES)
            sp.add_argument("--sweep", type=float, nargs="+", default=[])
        else:
            sp.add_argument("--h-from", type=float, required=True)
            sp.add_argument("--h-to", type=float, required=True)
            sp.add_argument("--nx", type=int, default=51)
            sp.add_argument("--ny", type=int, default=51)
        _add_output(sp, "csv")

    sp = sub.add_parser("simulate", help="time-domain contact simulation")
    _add_plant(sp)
    _add_sim(sp)
    sp.add_argument("--trajectory", help="also write the trajectory CSV here")
    _add_output(sp)

    sp = sub.add_parser("metrics", help="contact metrics of a recorded trace")
    sp.add_argument("--trace", required=True, help="CSV with t,x_r,x,v_r,v_m,f[,f_in]")
    _add_plant(sp)
    sp.add_argument("--window", type=float, default=DEFAULT_WINDOW)
    sp.add_argument("--observer-dt", type=float, default=DEFAULT_OBSERVER_DT)
    _add_output(sp)

    sp = sub.add_parser("emulate", help="virtual damping reproducing a target restitution")
    _add_plant(sp)
    _add_sim(sp)
    sp.add_argument("--target-eps", type=float, required=True)
    sp.add_argument("--tol", type=float, default=1e-3)
    _add_output(sp)
    return parser


COMMANDS = {
    "analyze": _cmd_analyze,
    "critical": _cmd_critical,
    "pade": _cmd_pade,
    "rootlocus": _cmd_rootlocus,
    "boundary": _cmd_boundary,
    "grid": _cmd_grid,
    "simulate": _cmd_simulate,
    "metrics": _cmd_metrics,
    "emulate": _cmd_emulate,
}


def _fail(code, message, stderr):
    stderr.write(f"error_code={code} {message}\n")
    return code


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        payload, text = COMMANDS[args.command](args)
        if args.format == "json" or text is None:
            text = _json(payload, args)
        if args.output:
            atomic_write(args.output, text)
        else:
            stdout.write(text)
    except UsageError as exc:
        return _fail(EXIT_USAGE, str(exc), stderr)
    except (DomainError, TraceFormatError, OSError) as exc:
        return _fail(EXIT_DOMAIN, str(exc), stderr)
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, str(exc), stderr)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
