import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahbopt import (
    CapabilityError,
    InvalidInputError,
    NumericalFailureError,
    Objective,
    SolverConfig,
    SolverState,
    ahb_alpha,
    ahb_beta,
    ahb_step,
    alrhb_step,
    gd_step,
    initial_state,
    make_abs_value,
    make_power,
    make_quadratic,
    nesterov_step,
    run_solver,
    update_gamma_tilde,
)


def scalar_quadratic():
    return make_quadratic([1.0])


def test_ahb_alpha_values():
    assert ahb_alpha(1.0, 0.0) == 1.0
    assert ahb_alpha(2.0, 0.96) == pytest.approx(0.98)
    assert ahb_alpha(10.0, 0.5) == pytest.approx(0.15)


def test_ahb_alpha_validation():
    with pytest.raises(InvalidInputError):
        ahb_alpha(0.0, 0.5)
    with pytest.raises(InvalidInputError):
        ahb_alpha(1.0, 1.0)
    with pytest.raises(InvalidInputError):
        ahb_alpha(1.0, -0.1)


def test_update_gamma_tilde_plugin():
    carried = SolverState(k=1, x=np.zeros(1), x_prev=np.zeros(1),
                          gamma_tilde=2.0, alpha_prev=1.0, beta_prev=0.5,
                          f_prev_gap=0.0, g_prev_norm_sq=0.0)
    assert update_gamma_tilde(carried, 1.0, 1.0) == pytest.approx(2.0)


def test_gamma_tilde_matches_direct_recursion():
    # drive the stepper and rebuild the surrogate sequence independently
    obj = make_quadratic([1.0, 10.0])
    cfg = SolverConfig(method="ahb", mu0=0.5, beta_cap=1.0, max_iters=100)
    state = initial_state(np.array([1.0, -2.0]))
    xs, alphas, betas, surrogates = [state.x.copy()], [], [], []
    for _ in range(12):
        state = ahb_step(state, obj, cfg)
        xs.append(state.x.copy())
        alphas.append(state.alpha_prev)
        betas.append(state.beta_prev)
        surrogates.append(state.gamma_tilde)

    gamma = 0.0
    for k in range(1, len(xs)):
        m = xs[k] - xs[k - 1]
        g_prev = obj.gradient(xs[k - 1])
        gamma = (float(m @ m)
                 - alphas[k - 1] * (obj.value(xs[k - 1])
                                    + float(g_prev @ g_prev) / (2.0 * obj.lipschitz))
                 + betas[k - 1] * gamma)
        assert surrogates[k - 1] == pytest.approx(gamma, rel=1e-12, abs=1e-15)


def test_ahb_beta_values():
    assert ahb_beta(1.0, np.array([1.0]), np.zeros(1), 0.0, 1.0) == 0.0
    g = np.array([3.0])
    m = np.array([1.0])
    # (1*3 - 1) / 1 then scaled: use the documented plug-in numbers instead
    assert ahb_beta(1.0, np.array([1.5]), np.array([2.0]), 1.0, 1.0) == pytest.approx(0.5)
    assert ahb_beta(1.0, np.array([-5.0]), np.array([1.0]), 0.0, 1.0) == 0.0
    assert ahb_beta(1.0, g, m, 0.0, 1.0) == 1.0  # clamped to the cap


def test_ahb_scalar_hand_trace():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="ahb", mu0=0.0, beta_cap=1.0, max_iters=10)
    state = initial_state(np.array([2.0]))

    state = ahb_step(state, obj, cfg)
    assert state.x == pytest.approx([0.0])
    assert state.gamma_tilde == pytest.approx(0.0)
    assert state.record.fval == 2.0
    assert state.record.beta == 0.0

    state = ahb_step(state, obj, cfg)
    assert state.x == pytest.approx([0.0])
    assert state.record.gap == 0.0


def test_ahb_fixed_point_at_minimizer():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="ahb", mu0=0.5, max_iters=5)
    state = ahb_step(initial_state(np.zeros(1)), obj, cfg)
    np.testing.assert_array_equal(state.x, np.zeros(1))


def test_gd_steps():
    obj = scalar_quadratic()
    state = gd_step(initial_state(np.array([2.0])), obj,
                    SolverConfig(method="gd", gd_mu=1.0))
    assert state.x == pytest.approx([0.0])
    state = gd_step(initial_state(np.array([2.0])), obj,
                    SolverConfig(method="gd", gd_mu=1.96))
    assert state.x == pytest.approx([-1.92])
    state = gd_step(initial_state(np.zeros(1)), obj,
                    SolverConfig(method="gd", gd_mu=1.5))
    np.testing.assert_array_equal(state.x, np.zeros(1))


def test_nesterov_first_step_has_no_extrapolation():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="nesterov", nesterov_nu=3.0)
    state = nesterov_step(initial_state(np.array([2.0])), obj, cfg)
    assert state.z == pytest.approx([2.0])
    assert state.x == pytest.approx([0.0])


def test_nesterov_momentum_coefficient():
    obj = make_quadratic([1.0])
    cfg = SolverConfig(method="nesterov", nesterov_nu=3.0)
    state = SolverState(k=4, x=np.array([1.0]), x_prev=np.array([0.3]))
    nxt = nesterov_step(state, obj, cfg)
    assert nxt.z == pytest.approx([1.0 + (3.0 / 7.0) * 0.7])


def test_alrhb_first_step():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="alrhb", alrhb_beta=0.96)
    state = alrhb_step(initial_state(np.array([2.0])), obj, cfg)
    assert state.record.alpha == pytest.approx(1.0)
    assert state.x == pytest.approx([0.0])


def test_alrhb_stops_at_critical_point():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="alrhb", alrhb_beta=0.96, max_iters=10)
    trace = run_solver(obj, cfg, np.array([2.0]))
    assert trace.meta["stop_reason"] == "critical_point"
    assert trace.records[-1].gap == 0.0


def test_alrhb_step_collapses_without_gap_or_momentum():
    # zero gap with a nonzero gradient isolates the 1/(2L) term
    flat = Objective(dim=1, value_fn=lambda x: 0.0,
                     gradient_fn=lambda x: np.array([1.0]),
                     lipschitz=2.0, min_value=0.0)
    state = alrhb_step(initial_state(np.zeros(1)), flat,
                       SolverConfig(method="alrhb", alrhb_beta=0.5))
    assert state.record.alpha == pytest.approx(0.25)


def test_run_solver_max_iters_zero():
    obj = make_quadratic([1.0])
    cfg = SolverConfig(method="ahb", mu0=0.0, max_iters=0, gap_tol=0.0)
    trace = run_solver(obj, cfg, np.array([3.0]))
    assert [r.k for r in trace.records] == [0]
    assert trace.meta["stop_reason"] == "max_iters"


def test_run_solver_gap_sequence():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="ahb", mu0=0.0, max_iters=10)
    trace = run_solver(obj, cfg, np.array([2.0]))
    assert [r.gap for r in trace.records] == [2.0, 0.0]
    assert trace.meta["stop_reason"] == "gap_tol"


def test_run_solver_infinite_gap_tol():
    obj = scalar_quadratic()
    cfg = SolverConfig(method="ahb", gap_tol=math.inf, max_iters=50)
    trace = run_solver(obj, cfg, np.array([2.0]))
    assert len(trace.records) == 1
    assert trace.records[0].k == 0


def test_run_solver_record_every():
    obj = make_quadratic([1.0, 10.0])
    cfg = SolverConfig(method="gd", gd_mu=1.0, max_iters=10, record_every=4)
    trace = run_solver(obj, cfg, np.array([1.0, 1.0]))
    assert [r.k for r in trace.records] == [0, 4, 8, 10]


def test_run_solver_checks_domain():
    obj = make_power(4.0, 1, 4.0)
    cfg = SolverConfig(method="ahb", max_iters=5)
    with pytest.raises(InvalidInputError):
        run_solver(obj, cfg, np.array([2.1]))
    trace = run_solver(obj, cfg, np.array([2.0]))
    assert trace.meta["growth_radius"] == pytest.approx(4.0)


def test_run_solver_capability_errors():
    cfg = SolverConfig(method="ahb", max_iters=3)
    with pytest.raises(CapabilityError) as exc:
        run_solver(make_abs_value(), cfg, np.array([1.0]))
    assert exc.value.missing == "gradient_fn"

    no_min = Objective(dim=1, value_fn=lambda x: float(x[0] ** 2),
                       gradient_fn=lambda x: 2.0 * x, lipschitz=2.0)
    with pytest.raises(CapabilityError) as exc:
        run_solver(no_min, cfg, np.array([1.0]))
    assert exc.value.missing == "min_value"


def test_numerical_failure_carries_iteration():
    exploding = Objective(
        dim=1,
        value_fn=lambda x: float("inf") if abs(x[0]) > 5 else float(x[0] ** 2),
        gradient_fn=lambda x: 2.0 * x,
        lipschitz=0.1,  # deliberately too small: the 19.6 step overshoots
        min_value=0.0,
    )
    cfg = SolverConfig(method="gd", gd_mu=1.96, max_iters=50)
    with pytest.raises(NumericalFailureError) as exc:
        run_solver(exploding, cfg, np.array([1.0]))
    assert exc.value.iteration >= 1


def test_initial_state_validation():
    with pytest.raises(InvalidInputError):
        initial_state(np.zeros((2, 2)))
    with pytest.raises(InvalidInputError):
        initial_state(np.array([]))


def test_solver_config_validation():
    for kwargs in ({"mu0": 1.0}, {"mu0": -0.1}, {"beta_cap": 0.0},
                   {"gd_mu": 2.0}, {"gd_mu": 0.0}, {"nesterov_nu": 1.5},
                   {"alrhb_beta": 1.0}, {"max_iters": -1}, {"gap_tol": -1.0},
                   {"record_every": 0}, {"method": "newton"}):
        with pytest.raises(InvalidInputError):
            SolverConfig(**kwargs)


def test_solver_config_json_round_trip():
    cfg = SolverConfig(method="nesterov", nesterov_nu=4.0, max_iters=7)
    again = SolverConfig.from_json_dict(cfg.to_json_dict())
    assert again == cfg
    assert SolverConfig.from_json_dict({}) == SolverConfig()
    with pytest.raises(InvalidInputError):
        SolverConfig.from_json_dict({"momentum": 0.9})


def test_run_solver_deterministic():
    obj = make_quadratic([1.0, 10.0])
    cfg = SolverConfig(method="ahb", mu0=0.96, max_iters=100)
    x0 = np.array([3.0, 1.0])
    first = run_solver(obj, cfg, x0)
    second = run_solver(obj, cfg, x0)
    assert len(first.records) == len(second.records)
    for a, b in zip(first.records, second.records):
        assert a == b


@settings(max_examples=25, deadline=None)
@given(
    spectrum=st.lists(st.floats(0.1, 20.0), min_size=1, max_size=4),
    mu0=st.floats(0.0, 0.99, exclude_max=False),
    scale=st.floats(-3.0, 3.0),
)
def test_certified_decrease_property(spectrum, mu0, scale):
    # the adaptive momentum never loses more distance than the gradient
    # term provably recovers
    obj = make_quadratic(spectrum)
    cfg = SolverConfig(method="ahb", mu0=mu0, beta_cap=1.0, max_iters=40)
    rng = np.random.default_rng(0)
    x0 = rng.standard_normal(obj.dim) + scale
    slack = 1e-9 * (1.0 + float(x0 @ x0))
    c0 = 2.0 * (1.0 - mu0 * mu0) / obj.lipschitz
    state = initial_state(x0)
    for _ in range(40):
        d_prev = float(state.x @ state.x)
        gap_prev = obj.value(state.x)
        state = ahb_step(state, obj, cfg)
        d_cur = float(state.x @ state.x)
        assert d_cur <= d_prev - c0 * gap_prev + slack
        assert 0.0 <= state.beta_prev <= 1.0


@settings(max_examples=20, deadline=None)
@given(
    alpha=st.floats(0.01, 2.0),
    gamma=st.floats(-5.0, 5.0),
    cap=st.floats(0.1, 3.0),
    gm=st.floats(-4.0, 4.0),
    msq=st.floats(1e-6, 9.0),
)
def test_beta_always_within_clamp(alpha, gamma, cap, gm, msq):
    m = np.array([math.sqrt(msq)])
    g = np.array([gm / math.sqrt(msq)])
    beta = ahb_beta(alpha, g, m, gamma, cap)
    assert 0.0 <= beta <= cap


def test_uncapped_momentum_accelerates_quartic_decay():
    # With the stock cap of 1 the adaptive weight saturates near 1 on
    # the flat quartic and the iterates decay about one power faster
    # than the certified k^(-1/2) envelope. Pin that loosely so a
    # change in the adaptive rule gets noticed.
    from ahbopt import fit_rate_from_trace

    obj = make_power(4.0, 1, 4.0)
    cfg = SolverConfig(method="ahb", mu0=0.96, beta_cap=1.0, max_iters=4000)
    trace = run_solver(obj, cfg, np.array([2.0]))
    exponent, _ = fit_rate_from_trace(trace, "power", k_min=100)
    assert exponent < -0.8
