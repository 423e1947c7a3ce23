"""First-order solvers sharing one iteration loop and trace format.

The centerpiece is a heavy ball scheme whose momentum coefficient is
chosen fresh at every iterate: it maximizes the momentum weight subject
to a computable surrogate certifying that the squared distance to the
solution set still decreases. Three baselines (fixed-step gradient
descent, Nesterov's accelerated method, and a heavy ball variant with an
adaptive learning rate and fixed momentum) run through the same loop so
traces are directly comparable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import CapabilityError, InvalidInputError, NumericalFailureError
from .trace import IterationRecord, Trace

Array = np.ndarray

METHODS = ("ahb", "gd", "nesterov", "alrhb")

_STOP_GAP, _STOP_MAX, _STOP_CRITICAL = "gap_tol", "max_iters", "critical_point"


@dataclass(frozen=True)
class SolverConfig:
    """Method selection plus every per-method constant.

    Defaults reproduce the stock comparison setup: momentum-capped
    adaptive heavy ball with mu0 = 0.96 and cap 1, gradient descent step
    1.96/L, Nesterov offset 3, and fixed momentum 0.96 for the adaptive
    learning rate variant.
    """

    method: str = "ahb"
    mu0: float = 0.96
    beta_cap: float = 1.0
    gd_mu: float = 1.96
    nesterov_nu: float = 3.0
    alrhb_beta: float = 0.96
    max_iters: int = 1000
    gap_tol: float = 0.0
    record_every: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"unknown method '{self.method}'; expected one of {METHODS}")
        if not 0.0 <= self.mu0 < 1.0:
            raise InvalidInputError("mu0 must lie in [0, 1)")
        if not self.beta_cap > 0.0:
            raise InvalidInputError("beta_cap must be positive (may be inf)")
        if not 0.0 < self.gd_mu < 2.0:
            raise InvalidInputError("gd_mu must lie in (0, 2)")
        if not self.nesterov_nu >= 2.0:
            raise InvalidInputError("nesterov_nu must be at least 2")
        if not 0.0 < self.alrhb_beta < 1.0:
            raise InvalidInputError("alrhb_beta must lie in (0, 1)")
        if self.max_iters < 0:
            raise InvalidInputError("max_iters must be nonnegative")
        if self.gap_tol < 0.0 or math.isnan(self.gap_tol):
            raise InvalidInputError("gap_tol must be nonnegative")
        if self.record_every < 1:
            raise InvalidInputError("record_every must be at least 1")

    def to_json_dict(self) -> dict:
        return {
            "method": self.method, "mu0": self.mu0, "beta_cap": self.beta_cap,
            "gd_mu": self.gd_mu, "nesterov_nu": self.nesterov_nu,
            "alrhb_beta": self.alrhb_beta, "max_iters": self.max_iters,
            "gap_tol": self.gap_tol, "record_every": self.record_every,
        }

    @classmethod
    def from_json_dict(cls, data) -> "SolverConfig":
        if not isinstance(data, dict):
            raise InvalidInputError("solver config must be an object")
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        extra = set(data) - set(cls.__dataclass_fields__)
        if extra:
            raise InvalidInputError(f"unknown solver config keys: {sorted(extra)}")
        return cls(**known)


@dataclass
class SolverState:
    """Mutable loop state at iterate k.

    ``gamma_tilde`` is the distance-decrease surrogate for the current
    iterate; the ``*_prev`` fields carry the step size, momentum weight,
    optimality gap, and squared gradient norm of the iterate just left,
    which the surrogate recursion consumes. ``record``, when set, holds
    the measurements of the iterate this state was advanced from.
    """

    k: int
    x: Array
    x_prev: Array
    gamma_tilde: float = 0.0
    alpha_prev: float = 0.0
    beta_prev: float = 0.0
    f_prev_gap: float = 0.0
    g_prev_norm_sq: float = 0.0
    z: Optional[Array] = None
    record: Optional[IterationRecord] = None
    stop: Optional[str] = None


def initial_state(x0) -> SolverState:
    x = np.array(x0, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError("start point must be a nonempty 1-d vector")
    return SolverState(k=0, x=x, x_prev=x.copy())


def ahb_alpha(lipschitz, mu0) -> float:
    """Step size (1 + mu0) / L."""
    if not lipschitz > 0:
        raise InvalidInputError("lipschitz must be positive")
    if not 0.0 <= mu0 < 1.0:
        raise InvalidInputError("mu0 must lie in [0, 1)")
    return (1.0 + mu0) / lipschitz


def update_gamma_tilde(state, m_k_norm_sq, lipschitz) -> float:
    """Advance the distance-decrease surrogate by one step.

    The passed state's ``alpha_prev``, ``beta_prev``, ``f_prev_gap``,
    ``g_prev_norm_sq``, and ``gamma_tilde`` all refer to the previous
    iterate; ``m_k_norm_sq`` is the squared length of the step that was
    just taken. At k = 0 the surrogate is 0 by definition and this is
    not called.
    """
    return (m_k_norm_sq
            - state.alpha_prev * (state.f_prev_gap + state.g_prev_norm_sq / (2.0 * lipschitz))
            + state.beta_prev * state.gamma_tilde)


def ahb_beta(alpha_k, g_k, m_k, gamma_tilde_k, beta_cap) -> float:
    """Largest safe momentum weight, clamped to [0, beta_cap].

    The unclamped value (alpha_k * <g_k, m_k> - gamma_tilde_k) / |m_k|^2
    is the point where the certified distance decrease would be lost;
    a zero momentum direction returns 0.
    """
    m_sq = float(m_k @ m_k)
    if m_sq == 0.0:
        return 0.0
    raw = (alpha_k * float(g_k @ m_k) - gamma_tilde_k) / m_sq
    return float(min(max(0.0, raw), beta_cap))


@dataclass
class _Eval:
    # everything measured at the current iterate that advancing needs
    fval: float
    gap: float
    g: Array
    alpha: float
    beta: float
    m: Array
    z: Optional[Array] = None
    critical: bool = False


def _require(obj, *names):
    for name in names:
        if getattr(obj, name) is None:
            raise CapabilityError(name)


def _evaluate(state, obj):
    fval = obj.value(state.x)
    g = obj.gradient(state.x)
    if not math.isfinite(fval) or not np.all(np.isfinite(g)):
        raise NumericalFailureError(state.k)
    return fval, g


def _gap(fval, obj):
    if obj.min_value is None:
        return float("nan")
    return max(fval - obj.min_value, 0.0)


def _record(state, obj, fval, gap, gnorm, alpha, beta, step_norm):
    dist = None
    if obj.solution_oracle is not None:
        dist = float(obj.solution_oracle(state.x))
    return IterationRecord(k=state.k, fval=fval, gap=gap, gnorm=gnorm,
                           alpha=alpha, beta=beta, step_norm=step_norm, dist=dist)


def _measure_ahb(state, obj, cfg):
    _require(obj, "gradient_fn", "lipschitz", "min_value")
    fval, g = _evaluate(state, obj)
    alpha = ahb_alpha(obj.lipschitz, cfg.mu0)
    m = state.x - state.x_prev
    beta = ahb_beta(alpha, g, m, state.gamma_tilde, cfg.beta_cap)
    gap = _gap(fval, obj)
    rec = _record(state, obj, fval, gap, float(np.linalg.norm(g)), alpha, beta,
                  float(np.linalg.norm(m)))
    return rec, _Eval(fval=fval, gap=gap, g=g, alpha=alpha, beta=beta, m=m)


def _advance_ahb(state, ev, obj, cfg):
    x_next = state.x - ev.alpha * ev.g + ev.beta * ev.m
    nxt = SolverState(k=state.k + 1, x=x_next, x_prev=state.x,
                      gamma_tilde=state.gamma_tilde,
                      alpha_prev=ev.alpha, beta_prev=ev.beta,
                      f_prev_gap=ev.gap, g_prev_norm_sq=float(ev.g @ ev.g))
    m_next = x_next - state.x
    nxt.gamma_tilde = update_gamma_tilde(nxt, float(m_next @ m_next), obj.lipschitz)
    return nxt


def _measure_gd(state, obj, cfg):
    _require(obj, "gradient_fn", "lipschitz")
    fval, g = _evaluate(state, obj)
    alpha = cfg.gd_mu / obj.lipschitz
    m = state.x - state.x_prev
    rec = _record(state, obj, fval, _gap(fval, obj), float(np.linalg.norm(g)),
                  alpha, 0.0, float(np.linalg.norm(m)))
    return rec, _Eval(fval=fval, gap=rec.gap, g=g, alpha=alpha, beta=0.0, m=m)


def _advance_gd(state, ev, obj, cfg):
    return SolverState(k=state.k + 1, x=state.x - ev.alpha * ev.g, x_prev=state.x,
                       alpha_prev=ev.alpha, f_prev_gap=ev.gap,
                       g_prev_norm_sq=float(ev.g @ ev.g))


def _measure_nesterov(state, obj, cfg):
    _require(obj, "gradient_fn", "lipschitz")
    fval = obj.value(state.x)
    if not math.isfinite(fval):
        raise NumericalFailureError(state.k)
    m = state.x - state.x_prev
    coef = (state.k - 1.0) / (state.k + cfg.nesterov_nu)
    z = state.x + coef * m
    g = obj.gradient(z)
    if not np.all(np.isfinite(g)):
        raise NumericalFailureError(state.k)
    alpha = 1.0 / obj.lipschitz
    # gnorm is the gradient actually computed, i.e. at the extrapolated point
    rec = _record(state, obj, fval, _gap(fval, obj), float(np.linalg.norm(g)),
                  alpha, coef, float(np.linalg.norm(m)))
    return rec, _Eval(fval=fval, gap=rec.gap, g=g, alpha=alpha, beta=coef, m=m, z=z)


def _advance_nesterov(state, ev, obj, cfg):
    return SolverState(k=state.k + 1, x=ev.z - ev.alpha * ev.g, x_prev=state.x,
                       z=ev.z, alpha_prev=ev.alpha, beta_prev=ev.beta,
                       f_prev_gap=ev.gap, g_prev_norm_sq=float(ev.g @ ev.g))


def _measure_alrhb(state, obj, cfg):
    _require(obj, "gradient_fn", "lipschitz", "min_value")
    fval, g = _evaluate(state, obj)
    gap = _gap(fval, obj)
    g_sq = float(g @ g)
    m = state.x - state.x_prev
    if g_sq == 0.0:
        # critical point: the adaptive step is undefined, the loop stops here
        rec = _record(state, obj, fval, gap, 0.0, 0.0, cfg.alrhb_beta,
                      float(np.linalg.norm(m)))
        return rec, _Eval(fval=fval, gap=gap, g=g, alpha=0.0, beta=cfg.alrhb_beta,
                          m=m, critical=True)
    alpha = (1.0 / (2.0 * obj.lipschitz) + gap / g_sq
             + cfg.alrhb_beta * float(g @ m) / g_sq)
    rec = _record(state, obj, fval, gap, math.sqrt(g_sq), alpha, cfg.alrhb_beta,
                  float(np.linalg.norm(m)))
    return rec, _Eval(fval=fval, gap=gap, g=g, alpha=alpha, beta=cfg.alrhb_beta, m=m)


def _advance_alrhb(state, ev, obj, cfg):
    return SolverState(k=state.k + 1, x=state.x - ev.alpha * ev.g + ev.beta * ev.m,
                       x_prev=state.x, alpha_prev=ev.alpha, beta_prev=ev.beta,
                       f_prev_gap=ev.gap, g_prev_norm_sq=float(ev.g @ ev.g))


_DISPATCH = {
    "ahb": (_measure_ahb, _advance_ahb),
    "gd": (_measure_gd, _advance_gd),
    "nesterov": (_measure_nesterov, _advance_nesterov),
    "alrhb": (_measure_alrhb, _advance_alrhb),
}


def _step(method, state, obj, cfg):
    measure, advance = _DISPATCH[method]
    rec, ev = measure(state, obj, cfg)
    if ev.critical:
        state.record = rec
        state.stop = _STOP_CRITICAL
        return state
    nxt = advance(state, ev, obj, cfg)
    nxt.record = rec
    return nxt


def ahb_step(state, obj, cfg) -> SolverState:
    """One adaptive heavy ball step; the returned state's ``record``
    holds the measurements of the iterate stepped from."""
    return _step("ahb", state, obj, cfg)


def gd_step(state, obj, cfg) -> SolverState:
    """One gradient descent step with step size gd_mu / L."""
    return _step("gd", state, obj, cfg)


def nesterov_step(state, obj, cfg) -> SolverState:
    """One accelerated step: extrapolate by (k-1)/(k+nu), then a 1/L
    gradient step from the extrapolated point."""
    return _step("nesterov", state, obj, cfg)


def alrhb_step(state, obj, cfg) -> SolverState:
    """One heavy ball step with adaptive learning rate and fixed
    momentum; at a critical point the state is returned unchanged with
    ``stop`` set."""
    return _step("alrhb", state, obj, cfg)


def _check_domain(obj, x0, meta):
    # iterate containment argument needs twice the starting distance to fit
    if obj.domain_radius is None or obj.solution_oracle is None:
        return
    reach = 2.0 * float(obj.solution_oracle(x0))
    if reach > obj.domain_radius * (1.0 + 1e-12):
        raise InvalidInputError(
            f"start point needs 2 * dist(x0, S) = {reach:g} within the "
            f"Lipschitz ball of radius {obj.domain_radius:g}")
    meta["growth_radius"] = reach


def run_solver(obj, cfg, x0, problem_spec=None, x0_seed=None) -> Trace:
    """Run a configured method from x0 and return its trace.

    Records are kept every ``record_every`` iterates plus the final one.
    The loop stops when the optimality gap reaches ``gap_tol`` (when the
    minimum value is known), when ``max_iters`` steps have been taken,
    or at a critical point for the adaptive learning rate method.
    """
    measure, advance = _DISPATCH[cfg.method]
    state = initial_state(x0)
    meta = {
        "problem": problem_spec.to_dict() if problem_spec is not None else None,
        "config": cfg.to_json_dict(),
        "x0_seed": x0_seed,
        "stop_reason": None,
        "wall_ms": None,
    }
    _check_domain(obj, state.x, meta)
    started = time.perf_counter()
    records = []
    while True:
        rec, ev = measure(state, obj, cfg)
        recorded = rec.k % cfg.record_every == 0
        if recorded:
            records.append(rec)
        if ev.critical:
            reason = _STOP_CRITICAL
        elif obj.min_value is not None and rec.gap <= cfg.gap_tol:
            reason = _STOP_GAP
        elif state.k >= cfg.max_iters:
            reason = _STOP_MAX
        else:
            reason = None
        if reason is not None:
            if not recorded:
                records.append(rec)
            break
        state = advance(state, ev, obj, cfg)
    meta["stop_reason"] = reason
    meta["wall_ms"] = (time.perf_counter() - started) * 1e3
    return Trace(records=records, meta=meta)
