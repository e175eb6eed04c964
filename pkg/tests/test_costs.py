import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gtdispatch.costs import (CostBreakdown, GtMode, GtState, OmParameters, OmVariant, fuel_cost, grid_cost,
                              om_step, startup_correction)
from gtdispatch.exceptions import DomainError

OM = OmParameters()
FIXED = 780000 / 8760
CYCLE = 33e6 / 26000
HOURLY = 33e6 / 200000


def brute_force_variable_om(actions, variant=OmVariant.DYNAMIC, params=OM):
    """Count starts and hours past the threshold straight from an on/off sequence."""
    on = [bool(a) for a in actions]
    thr = round(params.life_hours / params.life_cycles)
    if variant is OmVariant.NO_VARIABLE:
        return 0.0
    if variant is OmVariant.HOURLY_ONLY:
        return sum(on) * params.variable_lifetime / params.life_hours
    starts = extra = 0
    for _, grp in itertools.groupby(on):
        grp = list(grp)
        if grp[0]:
            starts += 1
            extra += max(0, len(grp) - thr)
    return starts * params.variable_lifetime / params.life_cycles + extra * params.variable_lifetime / params.life_hours


def ledger_variable_om(actions, variant=OmVariant.DYNAMIC):
    state, total = GtState(), 0.0
    for a in actions:
        c, state = om_step(state, bool(a), OM, variant)
        total += c - FIXED
    return total


def test_table_defaults():
    assert OM.threshold == 8
    assert OM.fixed_hourly == pytest.approx(89.04, abs=0.005)
    assert OM.cycle_cost == pytest.approx(1269.23, abs=0.005)
    assert OM.hourly_cost == 165.0


@pytest.mark.parametrize("state, cost, new", [
    (GtState(GtMode.OFF, 0), 1358.27, GtState(GtMode.RUNNING, 1)),
    (GtState(GtMode.RUNNING, 3), 89.04, GtState(GtMode.RUNNING, 4)),
    (GtState(GtMode.RUNNING, 7), 89.04, GtState(GtMode.EXTENDED, 8)),
    (GtState(GtMode.EXTENDED, 12), 254.04, GtState(GtMode.EXTENDED, 13)),
])
def test_om_step_dynamic_examples(state, cost, new):
    c, s = om_step(state.check(), True)
    assert c == pytest.approx(cost, abs=0.005)
    assert s == new
    s.check()


@pytest.mark.parametrize("variant", list(OmVariant))
@pytest.mark.parametrize("state", [GtState(), GtState(GtMode.RUNNING, 5), GtState(GtMode.EXTENDED, 40)])
def test_off_costs_fixed_only(variant, state):
    c, s = om_step(state, False, OM, variant)
    assert c == pytest.approx(FIXED)
    assert s == GtState(GtMode.OFF, 0)


def test_variant_charges():
    assert om_step(GtState(), True, OM, OmVariant.HOURLY_ONLY)[0] == pytest.approx(FIXED + HOURLY)
    assert om_step(GtState(GtMode.RUNNING, 2), True, OM, OmVariant.HOURLY_ONLY)[0] == pytest.approx(FIXED + HOURLY)
    assert om_step(GtState(), True, OM, OmVariant.NO_VARIABLE)[0] == pytest.approx(FIXED)


def test_state_transitions_identical_across_variants():
    rng = np.random.default_rng(3)
    actions = rng.random(500) < 0.6
    traces = []
    for v in OmVariant:
        s, trace = GtState(), []
        for a in actions:
            _, s = om_step(s, bool(a), OM, v)
            trace.append(s)
        traces.append(trace)
    assert traces[0] == traces[1] == traces[2]


def test_inconsistent_state_rejected():
    with pytest.raises(DomainError):
        GtState(GtMode.RUNNING, 8).check()
    with pytest.raises(DomainError):
        GtState(GtMode.OFF, 2).check()


@pytest.mark.parametrize("n", range(1, 31))
def test_cycle_amortization(n):
    actions = [0] + [1] * n + [0, 0]
    assert ledger_variable_om(actions) == pytest.approx(CYCLE + max(0, n - 8) * HOURLY, rel=1e-12)


def test_break_even_cycle():
    assert ledger_variable_om([1] * 8 + [0]) == pytest.approx(CYCLE)
    # eight hours at the blended rate of both lifetimes
    assert CYCLE == pytest.approx(8 * 33e6 / (2 * 200000) * 2 * 200000 / (8 * 26000))


@pytest.mark.parametrize("variant", list(OmVariant))
@given(st.lists(st.booleans(), min_size=1, max_size=200))
def test_ledger_matches_brute_force(variant, actions):
    assert ledger_variable_om(actions, variant) == pytest.approx(
        brute_force_variable_om(actions, variant), rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("price, mwh, expected", [(95, 10, 950), (0, 20, 0), (42.5, 0, 0), (-10, 3, -30)])
def test_grid_cost(price, mwh, expected):
    assert grid_cost(price, mwh) == expected


def test_grid_cost_domain():
    with pytest.raises(DomainError):
        grid_cost(50, -1)


@pytest.mark.parametrize("q, expected", [(100, 390), (0, 0), (272.7, 1063.53)])
def test_fuel_cost(q, expected):
    assert fuel_cost(q) == pytest.approx(expected)


def test_fuel_cost_domain():
    with pytest.raises(DomainError):
        fuel_cost(-0.1)


@pytest.mark.parametrize("temp, net, fuel", [(10, 20.2, 199.98), (-5, 12.625, 145.44), (0, 20.2, 199.98)])
def test_startup_correction(temp, net, fuel):
    n, f = startup_correction(30.3, 272.7, 54.54, temp)
    assert n == pytest.approx(net)
    assert f == pytest.approx(fuel)


@given(st.floats(0.1, 40), st.floats(1, 300), st.floats(0, 1), st.floats(-40, 40))
def test_startup_reduces_energy_and_fuel(power, fuel, idle_frac, temp):
    idle = idle_frac * fuel * 0.999
    n, f = startup_correction(power, fuel, idle, temp)
    assert n < power
    assert f < fuel


def test_cost_breakdown_total():
    c = CostBreakdown(1.0, 2.0, 3.0, 4.0, 5.0)
    assert c.total == 15.0
    assert c.as_dict()["total"] == 15.0
    assert c.om == 12.0


def test_variant_parse():
    assert OmVariant.parse("dynamic") is OmVariant.DYNAMIC
    assert OmVariant.parse("hourly-only") is OmVariant.HOURLY_ONLY
    assert OmVariant.parse("none") is OmVariant.NO_VARIABLE
    with pytest.raises(DomainError):
        OmVariant.parse("weekly")
