"""Fixed-step fourth-order Runge-Kutta propagation of the multi-D2 state."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .ansatz import MultiD2State, log_overlap
from .eom import DEFAULT_SVD_CUTOFF, derivatives
from .observables import TrajectoryRecord, snapshot
from .params import ModelParams

log = logging.getLogger(__name__)

# allowed |d norm / dt| before a step is split (0 disables), and the deepest split
GUARD_RATE = 1e-6
MAX_SPLIT_DEPTH = 10
ROUNDOFF_FACTOR = 100.0
# the empty configurations start with zero amplitude and move fastest in the
# first instants; that window is resolved with fixed substeps
WARMUP_TIME = 0.04
WARMUP_DT = 2e-5


class PropagationAbort(RuntimeError):
    """Trajectory stopped by a health check; ``record`` holds the rows so far."""

    def __init__(self, message: str, step: int, t: float, cond: float, record=None):
        super().__init__(f"{message} (step {step}, t={t:.6g}, condition estimate {cond:.3e})")
        self.step = step
        self.t = t
        self.cond = cond
        self.record = record


@dataclass(frozen=True)
class PropagationConfig:
    dt: float = 0.001
    t_end: float = 400.0
    output_stride: int = 100
    svd_cutoff: float = DEFAULT_SVD_CUTOFF
    norm_tolerance: float = 1e-3
    guard: float = GUARD_RATE
    warmup_time: float = WARMUP_TIME
    warmup_dt: float = WARMUP_DT

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt > 0 required")
        if self.t_end < 0:
            raise ValueError("t_end >= 0 required")
        if self.output_stride < 1:
            raise ValueError("output_stride >= 1 required")
        if not self.svd_cutoff > 0:
            raise ValueError("svd_cutoff > 0 required")
        if not self.norm_tolerance > 0:
            raise ValueError("norm_tolerance > 0 required")
        if self.guard < 0:
            raise ValueError("guard >= 0 required")
        if self.warmup_time < 0 or not self.warmup_dt > 0:
            raise ValueError("warmup_time >= 0 and warmup_dt > 0 required")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


def rk4_step(state: MultiD2State, params: ModelParams, dt: float,
             svd_cutoff: float = DEFAULT_SVD_CUTOFF, return_cond: bool = False):
    """One classical RK4 step; the state's own ``t`` is the start time."""
    if dt == 0:
        return (state.copy(), np.nan) if return_cond else state.copy()
    t = state.t
    y = state.to_vector()

    def f(tt, yy):
        return derivatives(MultiD2State.from_vector(yy, tt), params, tt, svd_cutoff,
                           return_info=True)

    k1, info = f(t, y)
    k2, _ = f(t + dt / 2, y + dt / 2 * k1)
    k3, _ = f(t + dt / 2, y + dt / 2 * k2)
    k4, _ = f(t + dt, y + dt * k3)
    y_new = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    new = MultiD2State.from_vector(y_new, t + dt)
    if not np.all(np.isfinite(y_new)):
        raise PropagationAbort("NaN/Inf in state", 0, t + dt, info.condition_estimate)
    if return_cond:
        return new, info.condition_estimate
    return new


def _norm_of(vec: np.ndarray, M: int) -> tuple[float, float]:
    """Norm and its round-off scale sum |rho_ln S_ln|."""
    A = vec[: 4 * M].reshape(4, M)
    z = vec[4 * M :].reshape(3, M)
    terms = (A.conj().T @ A) * np.exp(log_overlap(z))
    return float(np.sum(terms).real), float(np.sum(np.abs(terms)))


def guarded_step(state: MultiD2State, params: ModelParams, dt: float,
                 svd_cutoff: float = DEFAULT_SVD_CUTOFF, guard: float = GUARD_RATE,
                 max_depth: int = MAX_SPLIT_DEPTH, return_cond: bool = False):
    """RK4 step of length ``dt`` that splits itself in halves, recursively, while
    the norm changes by more than ``guard * dt``.

    The variational flow conserves the norm exactly, so the norm change of a
    step is a cheap local error indicator. Changes below the round-off floor
    of the norm sum are not acted upon. It fires at configuration
    re-shuffling events, where the metric is nearly singular and the vector
    field changes on time scales far below the nominal step.
    """
    n0, scale0 = _norm_of(state.to_vector(), state.M)
    new, cond = rk4_step(state, params, dt, svd_cutoff, return_cond=True)
    n1, scale1 = _norm_of(new.to_vector(), new.M)
    # cancelling configurations put a round-off floor under the measured change
    tol = max(guard * dt, ROUNDOFF_FACTOR * np.finfo(float).eps * max(scale0, scale1))
    if guard > 0 and max_depth > 0 and abs(n1 - n0) > tol:
        half = 0.5 * dt
        mid, _ = guarded_step(state, params, half, svd_cutoff, guard, max_depth - 1, True)
        new, cond = guarded_step(mid, params, half, svd_cutoff, guard, max_depth - 1, True)
    if return_cond:
        return new, cond
    return new


def propagate(state: MultiD2State, params: ModelParams, config: PropagationConfig,
              sink=None, progress=None) -> TrajectoryRecord:
    """Integrate to ``config.t_end``, recording a row every ``output_stride`` steps
    and at the final time.

    Steps that start before ``config.warmup_time`` are taken as substeps no
    longer than ``config.warmup_dt``; the recorded grid is unaffected. With
    ``config.guard > 0`` every step goes through :func:`guarded_step`.

    ``sink``, if given, is called with every recorded row dict. Raises
    :class:`PropagationAbort` on NaN contamination or when |norm - 1| exceeds
    ``config.norm_tolerance``.
    """
    record = TrajectoryRecord()
    n_steps = config.n_steps
    cur = state.copy()
    cur.t = 0.0 if cur.t is None else cur.t
    t0 = cur.t
    cond = np.nan

    def emit(st, c):
        row = snapshot(st, params, c)
        record.append(row)
        if sink is not None:
            sink(row)
        if not np.all(np.isfinite([row[k] for k in row if k != "cond_estimate"])):
            raise PropagationAbort("NaN in observables", k, st.t, c, record)
        if abs(row["norm"] - 1.0) > config.norm_tolerance:
            raise PropagationAbort(f"norm drift {row['norm'] - 1.0:+.3e}", k, st.t, c, record)

    def step(st, dt):
        if config.guard > 0:
            return guarded_step(st, params, dt, config.svd_cutoff, config.guard, return_cond=True)
        return rk4_step(st, params, dt, config.svd_cutoff, return_cond=True)

    # steps of the main grid that fall into the warm-up window are substepped
    n_sub = max(1, int(np.ceil(config.dt / config.warmup_dt - 1e-9)))
    k = 0
    emit(cur, cond)
    for k in range(1, n_steps + 1):
        try:
            if (k - 1) * config.dt < config.warmup_time - 1e-12:
                for _ in range(n_sub):
                    cur, cond = step(cur, config.dt / n_sub)
            else:
                cur, cond = step(cur, config.dt)
        except PropagationAbort as exc:
            raise PropagationAbort("NaN/Inf in state", k, exc.t, exc.cond, record) from None
        # keep time on the grid rather than accumulating rounding
        cur.t = t0 + k * config.dt
        if k % config.output_stride == 0 or k == n_steps:
            emit(cur, cond)
        if progress is not None:
            progress(k, n_steps)
    return record
