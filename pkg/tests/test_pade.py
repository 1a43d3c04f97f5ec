import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from delaydock import (
    DomainError,
    PlantParams,
    critical_delay,
    evans_form,
    pade_critical_delay,
    pade_crossing_frequency,
    pade_cubic,
    root_locus,
    routh_margins,
)
from delaydock.pade import PARAMETERS, pade_roots


def oracle_cubic(m, k, b, h):
    """Expand m s^2 (2 + s h) + (2 - s h)(k + b s) with numpy polynomial arithmetic."""
    lhs = np.polynomial.polynomial.polymul([0, 0, m], [2, h])
    rhs = np.polynomial.polynomial.polymul([2, -h], [k, b])
    out = np.zeros(4)
    out[: len(lhs)] += lhs
    out[: len(rhs)] += rhs
    return out[::-1]


params = st.tuples(st.floats(1, 1000), st.floats(1, 5000), st.floats(0.1, 300), st.floats(0.0, 0.5))


def test_cubic_examples():
    c = pade_cubic(PlantParams(60, 1000, 50, 0.049478))
    assert c.a3 == pytest.approx(2.9687, abs=1e-4)
    assert c.a2 == pytest.approx(117.526, abs=1e-3)
    assert c.a1 == pytest.approx(50.522, abs=1e-3)
    assert c.a0 == 2000.0
    assert tuple(pade_cubic(PlantParams(1, 1, 1, 1)).coeffs) == (1, 1, 1, 2)
    assert tuple(pade_cubic(PlantParams(60, 1000, 50, 0)).coeffs) == (0, 120, 100, 2000)


def test_zero_delay_gives_delay_free_roots():
    roots = np.sort_complex(pade_roots(PlantParams(60, 1000, 50)))
    assert np.allclose(roots, np.sort_complex(np.roots([60, 50, 1000])))


@given(params)
def test_cubic_matches_expansion(pr):
    c = pade_cubic(PlantParams(*pr))
    assert np.allclose(c.coeffs, oracle_cubic(*pr), rtol=1e-13, atol=0)


@given(params)
def test_evans_identity(pr):
    p = PlantParams(*pr)
    target = pade_cubic(p).coeffs
    for gain in PARAMETERS:
        P, Q = evans_form(p, gain)
        got = P + getattr(p, gain) * Q
        assert np.allclose(got, target, rtol=1e-12, atol=1e-12 * np.abs(target).max())


def test_evans_examples():
    p = PlantParams(60, 1000, 50, 0.05)
    P, Q = evans_form(p, "h")
    assert np.allclose(P, [0, 120, 100, 2000]) and np.allclose(Q, [60, -50, -1000, 0])
    assert np.allclose(evans_form(p, "k")[1], [0, 0, -0.05, 2])
    P, _ = evans_form(p, "m")
    assert np.allclose(P, pade_cubic(p).coeffs - 60 * np.array([0.05, 2, 0, 0]))
    with pytest.raises(DomainError):
        evans_form(p, "x")


def test_routh_examples():
    p = PlantParams(60, 1000, 50)
    assert abs(routh_margins(p.with_(h=0.0495)).q34) < 1e-3
    low = routh_margins(p.with_(h=0.016))
    assert low.q34 > 0 and low.stable
    high = routh_margins(p.with_(h=0.10))
    assert high.q34 < 0 and not high.stable
    undamped = routh_margins(PlantParams(60, 1000, 0, 0.01))
    assert undamped.undamped and undamped.q34 == -math.inf and not undamped.stable


def test_q34_is_normalized_hurwitz_determinant():
    p = PlantParams(60, 1000, 50, 0.03)
    c = pade_cubic(p)
    assert routh_margins(p).q34 == pytest.approx((c.a2 * c.a1 - c.a3 * c.a0) / (p.b * p.k), rel=1e-12)


def test_routh_against_roots_random_draws():
    rng = np.random.default_rng(20240601)
    mismatches = 0
    for _ in range(1000):
        m, k, b = rng.uniform(1, 500), rng.uniform(100, 3000), rng.uniform(0.5, 150)
        h = rng.uniform(0, 3 * b / k)
        p = PlantParams(m, k, b, h)
        roots = np.roots(oracle_cubic(m, k, b, h))
        by_roots = bool(np.all(roots.real < 0))
        margin = np.abs(roots.real).min() / np.abs(roots).max()
        if margin < 1e-9:
            continue
        mismatches += routh_margins(p).stable != by_roots
        assert pade_cubic(p).routh_stable == routh_margins(p).stable
    assert mismatches == 0


def test_pade_critical_delay_reference():
    p = PlantParams(60, 1000, 50)
    h = pade_critical_delay(p)
    assert h == pytest.approx(0.0495, abs=1e-4)
    assert abs(routh_margins(p.with_(h=h)).q34) < 1e-9
    assert pade_crossing_frequency(p) == pytest.approx(4.125, abs=0.05)
    assert pade_critical_delay(PlantParams(60, 1000, 0)) == 0.0
    with pytest.raises(DomainError):
        pade_crossing_frequency(PlantParams(60, 1000, 0))


@given(st.floats(1, 1000), st.floats(100, 5000), st.floats(0.5, 200))
def test_pade_critical_delay_is_q34_root(m, k, b):
    p = PlantParams(m, k, b)
    h = pade_critical_delay(p)
    lo, hi = 0.0, h * 1.5
    f = lambda x: routh_margins(p.with_(h=x)).q34
    assert f(lo) > 0 > f(hi)
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if f(mid) > 0 else (lo, mid)
    assert abs(lo - h) <= 1e-9


@given(st.floats(1, 1000), st.floats(100, 5000), st.floats(0.5, 200))
def test_crossing_frequency_boundary_identity(m, k, b):
    p = PlantParams(m, k, b)
    c = pade_cubic(p.with_(h=pade_critical_delay(p)))
    w = pade_crossing_frequency(p)
    assert abs(w - math.sqrt(c.a0 / c.a2)) < 1e-6 * w


def test_small_damping_series():
    p = PlantParams(500, 1000, 1)
    assert pade_critical_delay(p) == pytest.approx(p.b / p.k, rel=1e-3)
    assert pade_crossing_frequency(PlantParams(60, 1000, 1e-3)) == pytest.approx(math.sqrt(1000 / 60), rel=1e-4)


# --- root locus ------------------------------------------------------------

def _vieta_ok(trace, p):
    for v, row in zip(trace.values, trace.roots):
        kw = {"m": p.m, "k": p.k, "b": p.b, "h": p.h, trace.parameter: v}
        a3, a2, a1, a0 = oracle_cubic(kw["m"], kw["k"], kw["b"], kw["h"])
        r = row[np.isfinite(row)]
        if a3 == 0:
            continue
        assert abs(r.sum() + a2 / a3) <= 1e-8 * max(1.0, abs(a2 / a3))
        assert abs(np.prod(r) + a0 / a3) <= 1e-8 * abs(a0 / a3)
        conj = np.sort_complex(r.conj())
        assert np.allclose(np.sort_complex(r), conj, atol=1e-9 * np.abs(r).max())


def test_locus_vary_h():
    p = PlantParams(60, 1000, 50)
    tr = root_locus(p, "h", 0.0, 0.1, 1001)
    assert np.isnan(tr.roots[0]).sum() == 1
    right = tr.rightmost_real()
    i = np.nonzero(right > 0)[0][0]
    h_cross = np.interp(0.0, right[i - 1:i + 1], tr.values[i - 1:i + 1])
    assert h_cross == pytest.approx(0.0495, abs=5e-4)
    _vieta_ok(tr, p)


def test_locus_vary_b():
    p = PlantParams(60, 1000, 0, 0.05)
    tr = root_locus(p, "b", 0.0, 3000.0, 30001)
    stable = tr.rightmost_real() < 0
    enter = tr.values[np.argmax(stable)]
    assert enter == pytest.approx(50.0, abs=2.0)
    # leaves the half-plane again once b h exceeds 2 m
    assert not stable[-1]
    assert tr.values[len(stable) - np.argmax(stable[::-1])] > 2 * p.m / p.h * 0.95
    _vieta_ok(tr, p)


def test_locus_vary_m():
    p = PlantParams(60, 1000, 50, 0.05)
    tr = root_locus(p, "m", 1.0, 5000.0, 500)
    assert np.all(tr.rightmost_real() >= -1e-6)
    # roots creep toward the origin as m grows
    mags = np.abs(tr.roots)
    assert np.nanmin(mags[-1]) < np.nanmin(mags[len(mags) // 10])
    _vieta_ok(tr, p)


def test_locus_vary_k():
    p = PlantParams(60, 1, 50, 0.0493)
    tr = root_locus(p, "k", 10.0, 2000.0, 400)
    stable = tr.rightmost_real() < 0
    k_exit = tr.values[np.argmin(stable)]
    assert k_exit == pytest.approx(1000.0, rel=0.03)
    _vieta_ok(tr, p)


def test_locus_branches_are_continuous():
    tr = root_locus(PlantParams(60, 1000, 50), "h", 0.001, 0.1, 500)
    # one column holds the real root, the other two keep the sign of their imaginary part
    im = tr.roots.imag
    signs = [np.unique(np.sign(np.round(im[:, j], 9))) for j in range(3)]
    assert sorted(len(s) for s in signs) == [1, 1, 1]
    assert sorted(s[0] for s in signs) == [-1.0, 0.0, 1.0]


def test_locus_csv():
    tr = root_locus(PlantParams(60, 1000, 50), "h", 0.0, 0.1, 3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "param,re1,im1,re2,im2,re3,im3"
    assert len(lines) == 4
    assert "nan" in lines[1]


@pytest.mark.parametrize(
    "args",
    [("x", 0, 1, 10), ("h", 0.1, 0.0, 10), ("h", 0, 1, 1), ("b", -1, 1, 10)],
)
def test_locus_rejects_bad_input(args):
    with pytest.raises(DomainError):
        root_locus(PlantParams(60, 1000, 50), *args)


@given(st.floats(5, 500), st.floats(500, 2000), st.floats(1e-9, 0.15))
def test_method_agreement_light_damping(m, k, zeta):
    # first-order Pade tracks the exact boundary within 1% while damping is light
    b = 2.0 * zeta * math.sqrt(k * m)
    p = PlantParams(m, k, b)
    assert abs(pade_critical_delay(p) / critical_delay(p) - 1) < 0.01


def test_critical_delay_tiny_damping():
    # both delays approach b/k as the damping vanishes
    for b in (1e-300, 5e-324):
        p = PlantParams(60, 1000, b)
        assert pade_critical_delay(p) == pytest.approx(b / 1000, rel=1e-12)


def test_method_disagreement_heavy_damping():
    p = PlantParams(5, 500, 90)
    assert pade_critical_delay(p) / critical_delay(p) - 1 == pytest.approx(0.164, abs=1e-3)
