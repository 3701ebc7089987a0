import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import resistive_root, two_bus
from solvcheck.netmodel import reduce
from solvcheck.pfsolve import SolveOptions, solve
from solvcheck.sweep import (
    InsolvableCaseError,
    SweepConfig,
    apply_penetration,
    convert_dgs,
    impedance_sensitivity,
    linearized_voltage,
    load_power_factors,
    power_factor_sensitivity,
    run_sweep,
    scale_impedance,
    set_load_power_factor,
)
from solvcheck.verify import random_case


@pytest.fixture(scope="module")
def feeder_sweep(feeder_case):
    return run_sweep(apply_penetration(feeder_case, 40))


def test_two_bus_resistive_sweep():
    rep = run_sweep(two_bus(0.1))
    assert rep.lambda_critical == pytest.approx(2.5, abs=0.01)
    assert rep.lambda_cunity == pytest.approx(rep.lambda_critical)
    assert rep.mismatch_pct == pytest.approx(0.0, abs=0.5)
    assert rep.rows[-1].converged is False


def test_two_bus_reactive_sweep():
    rep = run_sweep(two_bus(0.1j))
    assert rep.lambda_critical == pytest.approx(5.0, abs=0.01)
    assert rep.lambda_bolognani == pytest.approx(2.5, abs=0.01)
    assert rep.lambda_bolognani < rep.lambda_cunity <= rep.lambda_critical


def test_base_case_insolvable():
    with pytest.raises(InsolvableCaseError):
        run_sweep(two_bus(0.1, s=-3.0))


def test_no_divergence_within_range():
    rep = run_sweep(two_bus(0.1), SweepConfig(step=0.1, max_loading=2.0))
    assert rep.lambda_critical is None
    assert rep.mismatch_pct is None
    assert all(r.converged for r in rep.rows)
    assert rep.rows[-1].loading == pytest.approx(2.0)


@pytest.mark.parametrize("kw", [{"step": 0}, {"step": -0.1}, {"max_loading": 1.0}, {"dg_mode": "pv"}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        SweepConfig(**kw)


def test_rows_strictly_increasing(feeder_sweep):
    lams = [r.loading for r in feeder_sweep.rows]
    assert all(a < b for a, b in zip(lams, lams[1:]))


def test_fixture_sweep_invariants(feeder_sweep):
    rep = feeder_sweep
    assert rep.lambda_bolognani <= rep.lambda_cunity <= rep.lambda_critical
    last = [r for r in rep.rows if r.converged][-1]
    assert last.c_min <= 1.05
    base = next(r for r in rep.rows if abs(r.loading - 1) < 1e-9)
    assert last.sigma_min * 10 < base.sigma_min


def test_c_min_non_increasing(feeder_sweep):
    c = [r.c_min for r in feeder_sweep.rows if r.converged]
    assert all(b <= a + 1e-12 for a, b in zip(c, c[1:]))


def test_penetration_capacity(feeder_case):
    case = apply_penetration(feeder_case, 70)
    load = sum(abs(b.s_base) for b in case.buses if b.kind == "pq_load")
    dg = sum(abs(b.s_base) for b in case.buses if b.kind == "pq_dg")
    assert dg / load == pytest.approx(0.7)
    assert all(b.s_base.imag == 0 for b in case.buses if b.kind == "pq_dg")


def test_current_mode_matches_power_at_zero_load(feeder_case):
    cp = apply_penetration(feeder_case, 50)
    ci = apply_penetration(feeder_case, 50, "current")
    assert not any(b.kind == "pq_dg" for b in ci.buses)
    back = convert_dgs(ci, "power")
    for a, b in zip(cp.buses, back.buses):
        if a.kind == "pq_dg":
            assert b.s_base == pytest.approx(a.s_base, abs=1e-12)


def test_impedance_scale_two_bus():
    rep = impedance_sensitivity(two_bus(0.1), 0.5, options=SolveOptions(tol=1e-13))
    V2 = resistive_root(0.2, 1.0)
    assert V2 == pytest.approx(0.723607, abs=1e-6)
    assert rep.C_before[0] == pytest.approx(7.8730, abs=5e-5)
    assert rep.C_after[0] == pytest.approx(V2 * V2 / 0.2, abs=1e-9)
    assert rep.C_after[0] == pytest.approx(2.6180, abs=5e-5)


def test_impedance_identity(feeder_case):
    rep = impedance_sensitivity(feeder_case, 1.0)
    np.testing.assert_array_equal(rep.delta, 0.0)


def test_impedance_scale_bounds(feeder_case):
    with pytest.raises(ValueError):
        impedance_sensitivity(feeder_case, 1.5)
    with pytest.raises(ValueError):
        impedance_sensitivity(feeder_case, 0.0)


def test_scale_impedance_scales_admittance():
    net, scaled = reduce(two_bus(0.1)), reduce(scale_impedance(two_bus(0.1), 0.25))
    np.testing.assert_allclose(scaled.Z, net.Z / 0.25)


@pytest.mark.parametrize("z", [0.1 + 0.1j, 0.05 + 0.1j, 0.1j])
def test_power_factor_two_bus(z):
    rep = power_factor_sensitivity(two_bus(z), 0.9)
    assert rep.C_after[0] < rep.C_before[0]


def test_power_factor_purely_resistive_line():
    # with no line reactance a lagging load depresses |V| less, so C rises
    rep = power_factor_sensitivity(two_bus(0.1), 0.9)
    assert rep.C_after[0] > rep.C_before[0]


def test_power_factor_unchanged(feeder_case):
    rep = power_factor_sensitivity(feeder_case, 0.9, base_pf=0.9)
    np.testing.assert_allclose(rep.delta, 0.0, atol=1e-12)


def test_power_factor_must_drop():
    with pytest.raises(ValueError):
        power_factor_sensitivity(two_bus(0.1, s=-0.9 - 0.3j), 0.99)


def test_set_power_factor_keeps_magnitude(feeder_case):
    case = set_load_power_factor(feeder_case, 0.85)
    assert all(v == pytest.approx(0.85) for v in load_power_factors(case).values())
    for a, b in zip(feeder_case.buses, case.buses):
        if a.kind == "pq_load":
            assert abs(b.s_base) == pytest.approx(abs(a.s_base))
            assert b.s_base.imag < 0  # lagging load drawn from the network


@pytest.mark.parametrize("a", [0.8])
def test_fixture_impedance_lowers_every_c(feeder_case, a):
    rep = impedance_sensitivity(apply_penetration(feeder_case, 10), a)
    assert np.all(rep.delta < 0)


def test_fixture_power_factor_lowers_every_load_c(feeder_case):
    case = apply_penetration(feeder_case, 10)
    rep = power_factor_sensitivity(case, 0.85, base_pf=0.95)
    loads = reduce(case).load_mask
    assert np.all(rep.delta[loads] < 0)


def test_linearized_voltage_two_bus(two_bus_net):
    assert linearized_voltage(two_bus_net, [-1.0])[0] == pytest.approx(0.9)
    exact = solve(two_bus_net).V[0]
    assert abs(0.9 - exact) / exact == pytest.approx(0.0143, abs=5e-4)


def test_linearized_voltage_zero(feeder_case):
    net = reduce(feeder_case)
    np.testing.assert_allclose(linearized_voltage(net, np.zeros(net.n)), net.slack_voltage)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 8))
def test_linearized_voltage_light_load(seed, n):
    rng = np.random.default_rng(seed)
    net = reduce(random_case(n, rng))
    # light load: Euclidean norm of the injection vector at most 0.1
    s = rng.uniform(-1, 1, net.n) + 1j * rng.uniform(-1, 1, net.n)
    s *= rng.uniform(0, 0.1) / np.linalg.norm(s)
    exact = solve(net, s=s).V
    assert np.max(np.abs(linearized_voltage(net, s) - exact)) < 0.01
