import numpy as np
import pytest
from hypothesis import given, strategies as st

from gtdispatch.exceptions import DomainError
from gtdispatch.scenario import generate_weather
from gtdispatch.surrogate import (AmbientConditions, SurrogateParams, efficiency, fuel_rate, max_power,
                                  max_power_array, mechanical_idle_fuel_rate)

ISO = AmbientConditions(15.0, 101.325, 60.0)
HOT = AmbientConditions(35.0, 93.0, 30.0)
COLD = AmbientConditions(-30.0, 95.0, 80.0)

temps = st.floats(-60, 60)
pressures = st.floats(50, 110)
humid = st.floats(0, 100)


@pytest.mark.parametrize("ambient, expected", [
    (ISO, 30.3),  # ceiling binds: 32.0 > 30.3
    (HOT, 25.258919319022947),  # 32 * (93/101.325) * (1 - 0.007 * 20)
    (COLD, 30.3),  # formula gives ~39.45, clamped
])
def test_max_power_examples(ambient, expected):
    assert max_power(ambient) == pytest.approx(expected, rel=1e-12)


def test_cold_formula_value_exceeds_ceiling():
    raw = 32 * (95 / 101.325) * (1 - 0.007 * (-45))
    assert raw == pytest.approx(39.45, abs=0.01)
    assert max_power(COLD, SurrogateParams(p_flat=100.0)) == pytest.approx(raw)


@pytest.mark.parametrize("load, expected", [(1.0, 272.7), (0.5, 163.62), (0.0, 0.0)])
def test_fuel_rate_examples(load, expected):
    assert fuel_rate(load, ISO) == pytest.approx(expected, rel=1e-12)


def test_half_load_efficiency():
    assert efficiency(0.5, ISO) == pytest.approx(1 / 3, rel=1e-12)


@pytest.mark.parametrize("load", [-0.1, 1.01])
def test_fuel_rate_domain(load):
    with pytest.raises(DomainError):
        fuel_rate(load, ISO)


def test_idle_fuel():
    assert mechanical_idle_fuel_rate(ISO) == pytest.approx(54.54)
    # 0.2 * 25.2589 * 3.6 / 0.4 (the 45.468 figure arises from rounding p_max to 25.26)
    assert mechanical_idle_fuel_rate(HOT) == pytest.approx(45.466, abs=0.01)
    assert mechanical_idle_fuel_rate(ISO, SurrogateParams(c_idle=0.0)) == 0.0


@pytest.mark.parametrize("kwargs", [dict(temperature=70, pressure=100, rel_humidity=50),
                                    dict(temperature=10, pressure=0, rel_humidity=50),
                                    dict(temperature=10, pressure=100, rel_humidity=101)])
def test_ambient_invariants(kwargs):
    with pytest.raises(DomainError):
        AmbientConditions(**kwargs)


@given(temps, pressures, humid)
def test_max_power_bounds(t, p, h):
    assert 0.0 <= max_power(AmbientConditions(t, p, h)) <= 30.3


@given(temps, temps, pressures)
def test_max_power_monotone_in_temperature(t1, t2, p):
    lo, hi = sorted((t1, t2))
    assert max_power(AmbientConditions(hi, p, 50)) <= max_power(AmbientConditions(lo, p, 50))


@given(temps, pressures, pressures)
def test_max_power_monotone_in_pressure(t, p1, p2):
    lo, hi = sorted((p1, p2))
    assert max_power(AmbientConditions(t, lo, 50)) <= max_power(AmbientConditions(t, hi, 50))


@given(temps, humid, humid)
def test_humidity_ignored_by_default(t, h1, h2):
    assert max_power(AmbientConditions(t, 95, h1)) == max_power(AmbientConditions(t, 95, h2))


def test_efficiency_strictly_increasing_and_full_load():
    loads = np.linspace(0.01, 1.0, 200)
    eta = [efficiency(x, HOT) for x in loads]
    assert np.all(np.diff(eta) > 0)
    assert eta[-1] == pytest.approx(0.40, rel=1e-12)


@given(st.floats(0.01, 1.0), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_fuel_rate_affine(a, b, c):
    if abs(b - a) < 1e-6:
        return
    slope = (fuel_rate(b, HOT) - fuel_rate(a, HOT)) / (b - a)
    assert fuel_rate(c, HOT) == pytest.approx(fuel_rate(a, HOT) + slope * (c - a), rel=1e-9)


def test_annual_span_of_default_weather():
    w = generate_weather(0)
    p = max_power_array(w.temperature, w.pressure, w.rel_humidity)
    span = (p.max() - p.min()) / p.max()
    assert 0.20 <= span <= 0.30
