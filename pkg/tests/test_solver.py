import math

import numpy as np
import pytest

from torsion_flow.errors import BlowUpAt, InvalidOptions, InvalidParameter, UnknownPreset
from torsion_flow.flow import FlowKind, FlowState
from torsion_flow.presets import PresetFamily, parse_preset_name, preset_registry
from torsion_flow.solver import (
    EventKind,
    IntegratorOptions,
    Method,
    TerminalEvent,
    integrate,
    normalized_a0_blowup_time,
    normalized_a0_closed_form,
    pdq_blowup_time,
    pdq_closed_form,
    preset,
    prequant_blowup_time,
    prequant_closed_form,
)


def test_options_validation():
    with pytest.raises(InvalidOptions):
        IntegratorOptions(rtol=-1.0)
    with pytest.raises(InvalidOptions):
        IntegratorOptions(samples=1)
    with pytest.raises(InvalidOptions):
        IntegratorOptions(method="euler")
    assert IntegratorOptions(method="rk4").method is Method.RK4


def test_integrate_rejects_bad_horizon(su2):
    with pytest.raises(InvalidOptions):
        integrate(FlowKind.NORMALIZED, su2, FlowState(0.0, 2.0), 0.0)


def test_heisenberg_trajectory_is_constant(heisenberg):
    trajectory = integrate(FlowKind.UNNORMALIZED, heisenberg, FlowState(0.2, 1.5, 2.0), 1.0)
    assert trajectory.terminal_event.kind is EventKind.COMPLETED
    assert trajectory.times[0] == 0.0
    assert trajectory.times[-1] == pytest.approx(1.0)
    assert np.all(np.diff(trajectory.times) > 0)
    assert len(trajectory.states) == len(trajectory.times) == 200
    assert np.allclose(trajectory.column("c"), 1.5)
    assert np.allclose(trajectory.column("B"), 2.0)


@pytest.mark.parametrize("kind", list(FlowKind))
def test_heisenberg_is_a_steady_soliton(heisenberg, kind):
    s0 = FlowState(0.4, 1.2, 0.7, phi=0.0, tau=30.0)
    trajectory = integrate(kind, heisenberg, s0, 10.0)
    assert trajectory.terminal_event.kind is EventKind.COMPLETED
    for name, value in (("a", 0.4), ("c", 1.2), ("B", 0.7)):
        assert np.max(np.abs(trajectory.column(name) - value)) < 1e-12


def test_degenerate_circle_bundle_exits_through_b():
    nd, s0 = preset("pdq", 1.0)
    trajectory = integrate(FlowKind.UNNORMALIZED, nd, s0, 1.0)
    event = trajectory.terminal_event
    assert event.kind is EventKind.DOMAIN_EXIT
    assert event.field == "B"
    assert event.time == pytest.approx(0.5, abs=1e-9)
    assert trajectory.times[-1] < 0.5
    assert np.allclose(trajectory.column("B"), 1.0 - 2.0 * trajectory.times, atol=1e-9)


def test_su2_normalized_flow_converges(su2):
    trajectory = integrate(FlowKind.NORMALIZED, su2, FlowState(0.0, 2.0), 50.0)
    event = trajectory.terminal_event
    assert event.kind is EventKind.CONVERGED
    assert event.point == (0.0, 1.0)
    assert event.time < 50.0
    final = trajectory.final_state
    assert abs(final.a) < 1e-8
    assert abs(final.c - 1.0) < 1e-8


@pytest.mark.parametrize("a0", np.linspace(-2.0, 2.0, 5))
@pytest.mark.parametrize("c0", np.linspace(0.25, 4.0, 5))
def test_su2_normalized_flow_converges_from_start_grid(su2, a0, c0):
    final = integrate(FlowKind.NORMALIZED, su2, FlowState(float(a0), float(c0)), 50.0).final_state
    assert abs(final.a) < 1e-6
    assert abs(final.c - 1.0) < 1e-6


@pytest.mark.parametrize("a0", np.linspace(-2.0, 2.0, 5))
@pytest.mark.parametrize("c0", np.linspace(0.25, 4.0, 5))
def test_hyperbolic_normalized_flow_leaves_every_grid_start(sl2_hyperbolic, a0, c0):
    event = integrate(FlowKind.NORMALIZED, sl2_hyperbolic, FlowState(float(a0), float(c0)), 10.0).terminal_event
    assert event.kind in (EventKind.BLOW_UP, EventKind.DOMAIN_EXIT)


def test_hyperbolic_fixed_point_is_not_reported_as_converged(sl2_hyperbolic):
    trajectory = integrate(FlowKind.NORMALIZED, sl2_hyperbolic, FlowState(0.0, 1.0), 10.0)
    event = trajectory.terminal_event
    assert event.kind is EventKind.COMPLETED
    assert event.time == pytest.approx(10.0)
    assert np.max(np.abs(trajectory.column("a"))) < 1e-9
    assert np.max(np.abs(trajectory.column("c") - 1.0)) < 1e-9


@pytest.mark.parametrize("t", [0.1, 0.5, 0.9])
def test_rossi_spheres_flow_to_standard_structure(t):
    nd, s0 = preset("rossi", t)
    final = integrate(FlowKind.NORMALIZED, nd, s0, 50.0).final_state
    assert math.hypot(final.a, final.c - 1.0) < 1e-6
    assert final.B == 0.5


def test_normalized_blow_up_matches_exact_time():
    nd, s0 = preset("pdq", -1.0)
    trajectory = integrate(FlowKind.NORMALIZED, nd, s0, 2.0)
    event = trajectory.terminal_event
    assert event.kind is EventKind.BLOW_UP
    assert event.field == "c"
    t_star = normalized_a0_blowup_time(-1.0, 1.0)
    assert t_star == pytest.approx(math.pi / 4)
    assert t_star - 1e-4 <= event.time <= t_star + 1e-4


@pytest.mark.parametrize("K", [-1.0, 0.0, 1.0])
@pytest.mark.parametrize("c0", [0.5, 1.0, 2.0])
def test_pdq_matches_closed_form(K, c0):
    nd, s0 = preset("pdq", K)
    s0 = s0.with_fields(c=c0)
    t_end = min(1.0, 0.9 * pdq_blowup_time(K, s0.c, s0.b))
    trajectory = integrate(FlowKind.UNNORMALIZED, nd, s0, t_end)
    assert trajectory.terminal_event.kind is EventKind.COMPLETED
    for t, state in zip(trajectory.times, trajectory.states):
        c, B = pdq_closed_form(K, c0, 1.0, t)
        assert state.c == pytest.approx(c, rel=1e-8)
        assert state.B == pytest.approx(B, rel=1e-8)
        assert abs(state.a) < 1e-12


@pytest.mark.parametrize("K", [-1.0, 1.0])
@pytest.mark.parametrize("c0", [0.5, 1.0, 2.0])
def test_prequant_matches_closed_form(K, c0):
    nd, s0 = preset("prequant", K)
    s0 = s0.with_fields(c=c0)
    t_end = min(1.0, 0.9 * prequant_blowup_time(K, s0.c, s0.B))
    trajectory = integrate(FlowKind.UNNORMALIZED, nd, s0, t_end)
    for t, state in zip(trajectory.times, trajectory.states):
        c, B = prequant_closed_form(K, c0, 1.0, t)
        assert state.c == pytest.approx(c, rel=1e-8)
        assert state.B == pytest.approx(B, rel=1e-8)
    assert trajectory.terminal_event.kind is EventKind.COMPLETED


def test_rk4_is_fourth_order():
    nd, s0 = preset("pdq", 0.0)
    errors = []
    for dt in (1e-1, 5e-2, 2.5e-2):
        opts = IntegratorOptions(method=Method.RK4, dt=dt)
        final = integrate(FlowKind.UNNORMALIZED, nd, s0, 1.0, opts).final_state
        errors.append(abs(final.c - math.e))
    ratios = [errors[0] / errors[1], errors[1] / errors[2]]
    assert all(12.0 < r < 20.0 for r in ratios)


def test_pdq_closed_form_values():
    c, B = pdq_closed_form(0.0, 1.0, 1.0, 1.0)
    assert c == pytest.approx(math.e)
    assert B == pytest.approx(1.0 / math.e)
    assert pdq_closed_form(1.0, 1.0, 1.0, 0.25) == pytest.approx((1.0, 0.5))
    assert pdq_closed_form(-1.0, 1.0, 1.0, 0.3)[1] == pytest.approx(math.cosh(0.6))
    assert pdq_closed_form(2.0, 0.5, 1.5, 0.0) == pytest.approx((0.5, 2.25))
    with pytest.raises(InvalidParameter):
        pdq_closed_form(1.0, 0.0, 1.0, 0.1)


def test_blowup_times():
    assert pdq_blowup_time(1.0, 1.0, 1.0) == pytest.approx(0.5)
    assert pdq_blowup_time(-1.0, 1.0, 1.0) == math.inf
    c, B = pdq_closed_form(4.0, 1.0, 1.0, pdq_blowup_time(4.0, 1.0, 1.0))
    assert B == pytest.approx(0.0, abs=1e-12)
    assert prequant_blowup_time(1.0, 1.0, 1.0) == pytest.approx(0.5)
    assert prequant_blowup_time(-1.0, 1.0, 1.0) == math.inf


def test_prequant_closed_form_values():
    assert prequant_closed_form(-1.0, 1.0, 1.0, 0.4) == pytest.approx((1.0, 1.8))
    assert prequant_closed_form(1.0, 1.0, 1.0, 0.4) == pytest.approx((1.0, 0.2))
    assert prequant_closed_form(2.0, 0.3, 1.5, 0.0) == pytest.approx((0.3, 1.5))
    with pytest.raises(InvalidParameter):
        prequant_closed_form(0.0, 1.0, 1.0, 0.1)


def test_normalized_a0_closed_form():
    assert normalized_a0_closed_form(0.0, 1.0, 2.0) == pytest.approx(3.0)
    assert normalized_a0_closed_form(1.0, 0.2, 20.0) == pytest.approx(1.0)
    assert normalized_a0_closed_form(4.0, 3.0, 0.0) == pytest.approx(3.0)
    assert normalized_a0_closed_form(-1.0, 1.0, 0.5) == pytest.approx(math.tan(0.5 + math.pi / 4))
    with pytest.raises(BlowUpAt) as info:
        normalized_a0_closed_form(-1.0, 1.0, 1.0)
    assert info.value.t_star == pytest.approx(math.pi / 4)


def test_presets():
    nd, s0 = preset("pdq:-1")
    assert nd.free_parameters == (1.0, 0.0, 1.0, 0.0)
    assert s0 == FlowState(0.0, 1.0, 1.0)
    nd, s0 = preset("heisenberg")
    assert nd.free_parameters == (0.0, 0.0, 0.0, 0.0)
    nd, s0 = preset("rossi", 0.0)
    assert nd.free_parameters == (-1.0, 0.0, 1.0, 0.0)
    assert (s0.a, s0.c, s0.B) == (0.0, 1.0, 0.5)
    nd, _ = preset("prequant", 2.0)
    assert nd.free_parameters == (-2.0, 0.0, 0.5, 0.0)


def test_preset_errors():
    with pytest.raises(UnknownPreset) as info:
        preset("torus")
    assert "heisenberg" in str(info.value)
    with pytest.raises(InvalidParameter):
        preset("prequant", 0.0)
    with pytest.raises(InvalidParameter):
        preset("rossi", 1.0)
    with pytest.raises(InvalidParameter):
        preset("pdq")
    with pytest.raises(InvalidParameter):
        preset("su2", 1.0)
    with pytest.raises(InvalidParameter):
        preset("pdq:1", 2.0)


def test_preset_registry_listing():
    assert preset_registry.names() == ["heisenberg", "pdq", "prequant", "rossi", "sl2_hyperbolic", "su2"]
    assert {p.name for p in preset_registry.all() if p.family is PresetFamily.CIRCLE_BUNDLE} == {"pdq", "prequant"}
    assert parse_preset_name("rossi:0.5") == ("rossi", 0.5)
    with pytest.raises(InvalidParameter):
        parse_preset_name("pdq:one")


def test_terminal_event_text():
    event = TerminalEvent(EventKind.DOMAIN_EXIT, 0.5, field="B")
    assert str(event) == "domain_exit field=B time=0.5"
    converged = TerminalEvent(EventKind.CONVERGED, 12.0, point=(0.0, 1.0))
    assert str(converged).startswith("converged point=(0,1)")
