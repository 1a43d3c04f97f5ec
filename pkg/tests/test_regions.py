import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaydock import (
    DomainError,
    PlantParams,
    Verdict,
    boundary_curve,
    classify,
    classify_grid,
    critical_delay,
    pade_critical_delay,
    sensitivity_family,
)
from delaydock.regions import sweep_workers


def test_b_curve_passes_reference_point():
    c = boundary_curve("b", {"m": 60, "k": 1000}, (0, 100), 101)
    assert c.points[0].tolist() == [0.0, 0.0]
    i = np.argmin(abs(c.y - 50))
    assert c.h[i] == pytest.approx(0.0493, abs=1e-4)
    assert np.all(np.diff(c.h) >= 0)


def test_k_curve_axis_swap():
    c = boundary_curve("k", {"m": 60, "b": 50}, (500, 1500), 11)
    i = np.argmin(abs(c.y - 1000))
    assert c.h[i] == pytest.approx(critical_delay(PlantParams(60, 1000, 50)), abs=1e-12)


def test_points_are_on_boundary():
    for axis, fixed, rng in [
        ("b", {"m": 60, "k": 1000}, (1, 200)),
        ("k", {"m": 60, "b": 50}, (100, 3000)),
        ("m", {"k": 1000, "b": 50}, (1, 1000)),
    ]:
        c = boundary_curve(axis, fixed, rng, 40)
        for h, y in c.points:
            p = PlantParams(h=h, **fixed, **{axis: y})
            assert abs(h - critical_delay(p)) <= 1e-6
            assert classify(p).verdict is Verdict.NEUTRALLY_STABLE


def test_out_of_domain_points_are_skipped():
    with pytest.warns(UserWarning):
        c = boundary_curve("k", {"m": 60, "b": 50}, (0, 1000), 11)
    assert len(c.points) == 10
    assert c.skipped and c.skipped[0][0] == 0.0


def test_curve_csv():
    text = boundary_curve("b", {"m": 60, "k": 1000}, (0, 100), 3).to_csv()
    lines = text.splitlines()
    assert lines[0] == "h,b" and lines[1] == "0,0"
    assert lines[3] == f"{critical_delay(PlantParams(60, 1000, 100)):.9g},100"
    assert len(lines) == 4


def test_grid_examples():
    g = classify_grid((0.0, 0.1), "b", (0, 100), 11, 3, {"m": 60, "k": 1000})
    assert g.verdicts.shape == (3, 11)
    ih = lambda h: int(np.argmin(abs(g.h - h)))
    assert g.verdicts[1, ih(0.01)] is Verdict.STABLE
    assert g.verdicts[1, ih(0.10)] is Verdict.UNSTABLE
    assert all(v is Verdict.UNSTABLE for v in g.verdicts[0, 1:])
    assert g.verdicts[0, 0] is Verdict.NEUTRALLY_STABLE


def test_grid_neutral_cell_and_csv():
    h_c = critical_delay(PlantParams(60, 1000, 50))
    g = classify_grid((0.0, 2 * h_c), "b", (50, 60), 3, 2, {"m": 60, "k": 1000})
    assert g.verdicts[0, 1] is Verdict.NEUTRALLY_STABLE
    lines = g.to_csv().splitlines()
    assert lines[0] == "h,b,verdict"
    assert len(lines) == 1 + 6
    # row-major with h fastest
    assert [l.split(",")[2] for l in lines[1:4]] == ["S", "N", "U"]


def test_grid_pade_method():
    g = classify_grid((0.0, 0.1), "b", (10, 100), 5, 5, {"m": 60, "k": 1000}, method="pade")
    for j, b in enumerate(g.y):
        h_c = pade_critical_delay(PlantParams(60, 1000, b))
        for i, h in enumerate(g.h):
            if abs(h - h_c) > 1e-6:
                assert (g.verdicts[j, i] is Verdict.STABLE) == (h < h_c)


def test_sensitivity_stiffness_shrinks_region():
    fam = sensitivity_family("b", "k", [500, 1000, 2000], {"m": 60}, (1, 100), 50)
    assert [c.label for c in fam] == ["k=500", "k=1000", "k=2000"]
    hs = np.array([c.h for c in fam])
    assert np.all(hs[0] > hs[1]) and np.all(hs[1] > hs[2])


def test_sensitivity_mass_insensitive_at_small_damping():
    fam = sensitivity_family("b", "m", [30, 60, 120], {"k": 1000}, (1, 10), 10)
    hs = np.array([c.h for c in fam])
    assert np.ptp(hs, axis=0).max() / hs.max() < 0.01


def test_mass_curve_plateau():
    c = boundary_curve("m", {"k": 1000, "b": 20}, (100, 5000), 50)
    assert c.h[-1] == pytest.approx(0.020, abs=2e-4)


@given(st.floats(5, 500), st.floats(500, 2000))
@settings(max_examples=20, deadline=None)
def test_methods_agree_at_light_damping(m, k):
    b_max = 0.3 * np.sqrt(k * m)  # damping ratio 0.15
    a = boundary_curve("b", {"m": m, "k": k}, (1.0, b_max), 10)
    b = boundary_curve("b", {"m": m, "k": k}, (1.0, b_max), 10, method="pade")
    assert np.all(np.abs(b.h / a.h - 1) < 0.01)


def test_parallel_sweep_is_deterministic(monkeypatch):
    serial = boundary_curve("b", {"m": 60, "k": 1000}, (0, 100), 64).to_csv()
    monkeypatch.setenv("DELAYDOCK_THREADS", "4")
    assert sweep_workers() == 4
    assert boundary_curve("b", {"m": 60, "k": 1000}, (0, 100), 64).to_csv() == serial
    monkeypatch.setenv("DELAYDOCK_THREADS", "junk")
    assert sweep_workers() == 1


@pytest.mark.parametrize(
    "call",
    [
        lambda: boundary_curve("h", {"m": 1, "k": 1}, (0, 1), 5),
        lambda: boundary_curve("b", {"m": 1}, (0, 1), 5),
        lambda: boundary_curve("b", {"m": 1, "k": 1}, (0, 1), 1),
        lambda: boundary_curve("b", {"m": 1, "k": 1}, (0, 1), 5, method="nyquist"),
        lambda: classify_grid((0, 1), "b", (0, 1), 1, 5, {"m": 1, "k": 1}),
        lambda: sensitivity_family("b", "k", [], {"m": 1}, (0, 1), 5),
        lambda: sensitivity_family("b", "b", [1], {"m": 1, "k": 1}, (0, 1), 5),
    ],
)
def test_bad_requests(call):
    with pytest.raises(DomainError):
        call()
