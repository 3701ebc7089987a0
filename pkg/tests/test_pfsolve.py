import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import reactive_root, resistive_root, two_bus
from solvcheck.netmodel import reduce
from solvcheck.pfsolve import (
    Divergence,
    SolveOptions,
    residual,
    snapshot_from_currents,
    solve,
    solve_augmented,
)
from solvcheck.sweep import apply_penetration
from solvcheck.verify import random_case

# V = (1 + sqrt(0.6)) / 2
V_TWO_BUS = 0.8872983346207417


def test_two_bus_quadratic_root(two_bus_net):
    snap = solve(two_bus_net)
    assert snap.V[0] == pytest.approx(V_TWO_BUS, abs=1e-10)
    assert snap.V[0] == pytest.approx(resistive_root(0.1, 1.0), abs=1e-10)
    assert snap.S[0] == pytest.approx(1.0)  # absorbed polarity
    assert snap.injection[0] == pytest.approx(-1.0)
    assert residual(two_bus_net, snap) < 1e-8


def test_zero_injection_fixed_point(feeder_case):
    net = reduce(feeder_case)
    snap = solve(net, s=np.zeros(net.n, complex))
    np.testing.assert_allclose(snap.V, net.E_pq, atol=1e-15)
    np.testing.assert_allclose(snap.I, 0, atol=1e-15)
    assert snap.iterations == 0


def test_beyond_nose_diverges(two_bus_net):
    with pytest.raises(Divergence) as err:
        solve(two_bus_net, s=[-2.6 + 0j])
    assert err.value.reason in ("max_iter", "singular_jacobian", "voltage_collapse_to_zero", "line_search_failed")
    assert err.value.last is not None and not err.value.last.converged


def test_residual_of_perturbed_snapshot(two_bus_net):
    snap = solve(two_bus_net)
    moved = snapshot_from_currents(two_bus_net, snap.I * (1 + 1e-3), snap.injection)
    assert residual(two_bus_net, moved) > 1e-6


def test_residual_at_analytic_root(two_bus_net):
    V = resistive_root(0.1, 1.0)
    snap = snapshot_from_currents(two_bus_net, [1.0 / V], [-1.0])
    assert residual(two_bus_net, snap) < 1e-12


@pytest.mark.parametrize("p", [0.1, 0.5, 1.0, 2.0, 2.4, 2.49])
def test_resistive_oracle(p):
    snap = solve(reduce(two_bus(0.1)), s=[-p], options=SolveOptions(tol=1e-13))
    assert abs(snap.V[0] - resistive_root(0.1, p)) < 1e-10


@pytest.mark.parametrize("z, p", [(0.05, 3.0), (0.2, 1.0), (0.01, 20.0)])
def test_resistive_oracle_other_lines(z, p):
    snap = solve(reduce(two_bus(z)), s=[-p], options=SolveOptions(tol=1e-13))
    assert abs(snap.V[0] - resistive_root(z, p)) < 1e-10


@pytest.mark.parametrize("p", [1.0, 2.5, 4.0, 4.9])
def test_reactive_oracle(p):
    snap = solve(reduce(two_bus(0.1j)), s=[-p], options=SolveOptions(tol=1e-13))
    assert abs(snap.V[0] - reactive_root(0.1, p)) < 1e-10


def test_warm_start_consistency(feeder_case):
    net = reduce(feeder_case)
    a = solve(net, loading=2.0, options=SolveOptions(tol=1e-12))
    b = solve(net, loading=2.0, options=SolveOptions(tol=1e-12), init=a)
    assert np.max(np.abs(a.V - b.V)) < 1e-10
    assert b.iterations == 0


def test_options_validated():
    with pytest.raises(ValueError):
        SolveOptions(tol=0)
    with pytest.raises(ValueError):
        SolveOptions(max_iter=0)


def test_non_finite_injection_rejected(two_bus_net):
    with pytest.raises(ValueError):
        solve(two_bus_net, s=[np.nan])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), n_ci=st.integers(1, 3), n_tie=st.integers(0, 2))
def test_constant_current_folding_matches_augmented(seed, n, n_ci, n_tie):
    net = reduce(random_case(n, np.random.default_rng(seed), n_ci=n_ci, n_tie=n_tie))
    opts = SolveOptions(tol=1e-12)
    try:
        v_aug = solve_augmented(net, options=opts)
    except Divergence:
        return
    snap = solve(net, options=opts)
    assert np.max(np.abs(snap.V - v_aug[: net.n])) < 1e-10
    assert np.max(np.abs(net.voltages_all(snap.V) - v_aug)) < 1e-10


def test_load_voltage_falls_with_its_own_power(feeder_case):
    case = apply_penetration(feeder_case, 40)
    net = reduce(case)
    loads = np.flatnonzero(net.load_mask)
    prev = None
    last = None
    for lam in np.arange(0.25, 4.0, 0.25):
        prev = solve(net, loading=lam, init=prev)
        v = np.abs(prev.V[loads])
        if last is not None:
            assert np.all(v <= last + 1e-12)
        last = v
