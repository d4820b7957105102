"""Time propagation under piecewise-smooth H(t) with Rydberg-loss accounting.

The primary integrator exponentiates H(t_mid) exactly over each step, so the
large static interaction diagonals (tens of GHz) cost nothing in step size;
the step is limited only by envelope smoothness.  A scipy explicit
Runge-Kutta propagation is kept alongside as an independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .model import HamiltonianEvaluator, HamiltonianSpec, NoiseRealization


class PropagationError(RuntimeError):
    """Non-finite amplitudes during integration (step too large or bad spec)."""


@dataclass(frozen=True)
class StepPolicy:
    """Integrator step control.

    The automatic step is sigma/gaussian_resolution for stages with an
    active Gaussian envelope and duration/square_resolution otherwise;
    max_step clamps it from above.  When convergence_target is set,
    propagate() keeps halving the step until a further halving changes no
    output amplitude by more than the target.
    """

    max_step: float | None = None
    convergence_target: float | None = None
    max_refinements: int = 5
    gaussian_resolution: int = 800
    square_resolution: int = 200


@dataclass(frozen=True)
class Stage:
    duration: float
    spec: HamiltonianSpec

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError("stage duration must be positive")


@dataclass(frozen=True)
class StagePlan:
    stages: tuple[Stage, ...]
    policy: StepPolicy = StepPolicy()

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.stages)


@dataclass
class PropagationResult:
    """Final state plus Rydberg-exposure bookkeeping.

    norm_loss is 1 - |psi|^2, the population lost to Rydberg decay.
    rydberg_traj holds (times, P_r) samples at every integrator step;
    time_integrated_rydberg is the trapezoid of P_r(t) in us.
    """

    final_state: np.ndarray
    norm_loss: float
    rydberg_times: np.ndarray
    rydberg_populations: np.ndarray
    time_integrated_rydberg: float
    population_traj: np.ndarray | None = None


def evolve_step(h: np.ndarray, dt: float, psi: np.ndarray) -> np.ndarray:
    """Apply exp(-i h dt) to a state (or matrix of column states)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    return expm(-1j * dt * h) @ psi


# Above this dimension the per-step propagator switches from a dense expm to
# a Hermitian eigendecomposition with the (tiny, diagonal) decay split off
# symmetrically; at the default step sizes the splitting error sits far
# below the property-test tolerances that large systems are used for.
_EIGH_DIM_THRESHOLD = 64


def _step_propagator(h: np.ndarray, dt: float) -> np.ndarray:
    if h.shape[0] < _EIGH_DIM_THRESHOLD:
        return expm(-1j * dt * h)
    gamma = -2.0 * np.diag(h).imag  # per-state decay rate
    h_h = h.copy()
    np.fill_diagonal(h_h, np.diag(h).real)
    w, v = np.linalg.eigh(h_h)
    u = (v * np.exp(-1j * dt * w)) @ v.conj().T
    if np.any(gamma):
        damp = np.exp(-0.25 * dt * gamma)
        u = damp[:, None] * u * damp[None, :]
    return u


def _stage_steps(stage: Stage, policy: StepPolicy, refine: int = 0) -> int:
    """Number of uniform steps for a stage."""
    gaussian_sigmas = [
        d.envelope.sigma
        for d in stage.spec.drives
        if d.envelope.kind == "truncated_gaussian" and d.envelope.amplitude != 0.0
    ]
    if gaussian_sigmas:
        dt = min(gaussian_sigmas) / policy.gaussian_resolution
    else:
        dt = stage.duration / policy.square_resolution
    if policy.max_step is not None:
        dt = min(dt, policy.max_step)
    n = max(1, math.ceil(stage.duration / dt))
    return n * (2**refine)


def _stage_is_constant(stage: Stage, noise: NoiseRealization | None) -> bool:
    for d in stage.spec.drives:
        if d.envelope.kind == "truncated_gaussian" and d.envelope.amplitude != 0.0:
            return False
        if noise is not None and d.family in noise.intensity_factors:
            return False
    return True


def _propagate_columns(
    plan: StagePlan,
    psi: np.ndarray,
    noise: NoiseRealization | None = None,
    refine: int = 0,
    record_populations: bool = False,
):
    """Propagate column states through all stages.

    Returns (final columns, times, P_r samples per column, population
    trajectory or None).  psi may be a vector or a (dim, n_cols) matrix.
    """
    single = psi.ndim == 1
    cols = psi.reshape(-1, 1).astype(complex) if single else psi.astype(complex)

    times = [0.0]
    first_basis = plan.stages[0].spec.basis
    ryd_diag = first_basis.rydberg_projector_diagonal()[:, None]
    p_r = [np.sum(ryd_diag * np.abs(cols) ** 2, axis=0)]
    pops = [np.abs(cols) ** 2] if record_populations else None

    t_offset = 0.0
    step_count = 0
    for stage in plan.stages:
        if stage.spec.basis.dim != cols.shape[0]:
            raise ValueError("stage basis dimension does not match the propagated state")
        evaluator = HamiltonianEvaluator(stage.spec, noise)
        n = _stage_steps(stage, plan.policy, refine)
        dt = stage.duration / n
        constant = _stage_is_constant(stage, noise)
        u_const = _step_propagator(evaluator(0.5 * dt), dt) if constant else None
        for k in range(n):
            if constant:
                u = u_const
            else:
                t_mid = (k + 0.5) * dt
                if noise is not None:
                    # Intensity factors are keyed by global time.
                    h = _with_global_time_noise(evaluator, t_mid, t_offset, noise)
                else:
                    h = evaluator(t_mid)
                u = _step_propagator(h, dt)
            cols = u @ cols
            step_count += 1
            if step_count % 100 == 0 and not np.all(np.isfinite(cols)):
                raise PropagationError(f"non-finite amplitudes at t={t_offset + (k + 1) * dt:.6f} us")
            times.append(t_offset + (k + 1) * dt)
            p_r.append(np.sum(ryd_diag * np.abs(cols) ** 2, axis=0))
            if record_populations:
                pops.append(np.abs(cols) ** 2)
        t_offset += stage.duration

    if not np.all(np.isfinite(cols)):
        raise PropagationError("non-finite amplitudes in final state")

    times = np.asarray(times)
    p_r = np.asarray(p_r)  # (n_samples, n_cols)
    pop_traj = np.asarray(pops) if record_populations else None
    if single:
        return cols[:, 0], times, p_r[:, 0], (pop_traj[:, :, 0] if pop_traj is not None else None)
    return cols, times, p_r, pop_traj


def _with_global_time_noise(
    evaluator: HamiltonianEvaluator, t_local: float, t_offset: float, noise: NoiseRealization
) -> np.ndarray:
    """H(t) with envelopes at stage-local time but noise at global time."""
    from .model import envelope_value

    h = evaluator._static.copy()
    for d, k in zip(evaluator.spec.drives, evaluator._couplings):
        f = envelope_value(d.envelope, t_local)
        if f == 0.0:
            continue
        f *= noise.intensity_at(d.family, t_offset + t_local)
        h += f * k
    return h


def propagate(
    plan: StagePlan,
    psi0: np.ndarray,
    noise: NoiseRealization | None = None,
    record_populations: bool = False,
) -> PropagationResult:
    """Propagate one state through the staged protocol.

    Honors the plan's step policy; with a convergence_target set, the step is
    halved (up to max_refinements times) until a further halving moves no
    amplitude by more than the target.
    """
    norm0 = float(np.vdot(psi0, psi0).real)
    if norm0 > 1.0 + 1e-9:
        raise ValueError("initial state norm exceeds 1")

    refine = 0
    final, times, p_r, pops = _propagate_columns(plan, psi0, noise, refine, record_populations)
    target = plan.policy.convergence_target
    if target is not None:
        for refine in range(1, plan.policy.max_refinements + 1):
            finer, times, p_r, pops = _propagate_columns(plan, psi0, noise, refine, record_populations)
            delta = float(np.max(np.abs(finer - final)))
            final = finer
            if delta < target:
                break
        else:
            raise PropagationError(f"step refinement did not reach target {target}")

    norm = float(np.vdot(final, final).real)
    return PropagationResult(
        final_state=final,
        norm_loss=max(0.0, norm0 - norm),
        rydberg_times=times,
        rydberg_populations=p_r,
        time_integrated_rydberg=float(np.trapezoid(p_r, times)),
        population_traj=pops,
    )


def propagate_matrix(
    plan: StagePlan,
    columns: np.ndarray,
    noise: NoiseRealization | None = None,
):
    """Propagate many initial states at once (one expm per step, shared).

    Returns (final columns, per-column norm loss, per-column integrated
    Rydberg population).
    """
    norms0 = np.sum(np.abs(columns) ** 2, axis=0)
    final, times, p_r, _ = _propagate_columns(plan, columns, noise)
    norms = np.sum(np.abs(final) ** 2, axis=0)
    loss = np.maximum(0.0, norms0 - norms)
    t_ryd = np.trapezoid(p_r, times, axis=0)
    return final, loss, t_ryd


def propagate_rk(
    plan: StagePlan,
    psi0: np.ndarray,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Cross-check propagation with scipy's explicit Runge-Kutta (RK45).

    Independent of the exponential stepper; used to validate it on small
    systems.  Returns the final state only.
    """
    psi = np.asarray(psi0, dtype=complex)
    for stage in plan.stages:
        evaluator = HamiltonianEvaluator(stage.spec, None)

        def rhs(t, y):
            return -1j * (evaluator(t) @ y)

        sol = solve_ivp(
            rhs,
            (0.0, stage.duration),
            psi,
            method="DOP853",
            rtol=rtol,
            atol=atol,
            dense_output=False,
        )
        if not sol.success:
            raise PropagationError(f"RK cross-check failed: {sol.message}")
        psi = sol.y[:, -1]
    return psi
