"""Stability analysis and contact simulation of a loop-delay docking simulator."""

from .model import (
    DomainError,
    MassPair,
    NumericalError,
    PlantParams,
    StabilityVerdict,
    Verdict,
    equivalent_mass,
)
from .pole_location import (
    CrossingSet,
    DominantRoot,
    approx_critical_delay,
    classify,
    critical_delay,
    critical_delay_set,
    crossing_frequency,
    delay_free_damping,
    delay_free_restitution,
    delay_free_stable,
    dominant_root,
    max_critical_delay,
    neutral_damping,
    switch_criterion,
)
from .pade import (
    PadeCubic,
    RootLocusTrace,
    RouthMargins,
    evans_form,
    pade_critical_delay,
    pade_crossing_frequency,
    pade_cubic,
    root_locus,
    routh_margins,
)
from .regions import BoundaryCurve, VerdictGrid, boundary_curve, classify_grid, sensitivity_family
from .simulator import (
    ContactError,
    ContactMetrics,
    SimConfig,
    Trajectory,
    analyze,
    contact_duration,
    estimate_stiffness,
    ingest_trace,
    passivity_observer,
    predicted_duration,
    restitution,
    simulate,
)

__version__ = "0.1.0"
