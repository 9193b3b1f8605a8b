"""Closed-loop episode engine: Euler integration, logging, metrics.

One episode advances sheep and dogs simultaneously from the pre-step
state with explicit Euler at a fixed dt, the dogs following one of the
three velocity policies with speeds clamped to the scenario's cap. The
log records, per tick, positions, commands, barrier values, constraint
slacks, the analytically evaluated barrier condition, and assumption
monitor results; episode metrics summarize breach, deadlock, and the
total dog movement budget.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import bounds as bounds_mod
from .cbf import CbfGains, select_gains_table, stacked_centralized
from .controllers import (
    ControlOutput,
    DualConfig,
    allocate,
    allocated_step,
    centralized_step,
    dual_subgradient_step,
)
from .errors import InitialBreachError
from .world import SheepParams, WorldState, Zone, sheep_velocities

log = logging.getLogger(__name__)

CONTROLLERS = ("centralized", "allocated", "dual")

# All sheep slower than this, sustained for DEADLOCK_WINDOW seconds of
# simulated time, counts as a deadlock.
DEADLOCK_SPEED = 1e-3
DEADLOCK_WINDOW = 2.0


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to reproduce one episode byte-for-byte."""

    name: str
    world0: WorldState
    params: SheepParams
    zones: tuple[Zone, ...]
    controller: str = "centralized"
    dual: DualConfig | None = None
    gains_base: float = 1.0
    gains_margin: float = 0.5
    dt: float = 0.01
    t_end: float = 10.0
    bounds: bounds_mod.DistanceBounds = field(
        default_factory=lambda: bounds_mod.DistanceBounds(
            l_s=0.05, m_s=20.0, l_d=0.05, m_g=20.0, m_p=20.0, u_d_max=2.0
        )
    )
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "zones", tuple(self.zones))
        if self.controller not in CONTROLLERS:
            raise ValueError(f"unknown controller {self.controller!r}")
        if self.controller == "dual" and self.dual is None:
            object.__setattr__(self, "dual", DualConfig())

    def validate(self) -> None:
        """Raise if the scenario cannot start a well-posed episode."""
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least one step")
        if not self.zones:
            raise ValueError("need at least one protected zone")
        for zi, zone in enumerate(self.zones):
            for i in range(self.world0.n_sheep):
                d = self.world0.sheep[i] - zone.center
                if float(d @ d) <= zone.inflated_radius**2:
                    raise InitialBreachError(
                        f"sheep {i} starts inside zone {zi} (inflated radius "
                        f"{zone.inflated_radius:.4g})"
                    )

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.t_end / self.dt + 1e-9))


@dataclass(eq=False)
class EpisodeLog:
    """Tick-by-tick record plus final metrics for one episode.

    Arrays share a leading tick axis of length ``rows``; a breach
    truncates the episode at the offending tick, otherwise
    rows = floor(t_end/dt) + 1. The final row's command is evaluated at
    the final state but never applied, so the budget sums the first
    rows-1 commands.
    """

    name: str
    controller: str
    dt: float
    t: np.ndarray
    sheep: np.ndarray
    dogs: np.ndarray
    u: np.ndarray
    h: np.ndarray
    slack: np.ndarray
    ode_residual: np.ndarray
    sheep_speed_max: np.ndarray
    monitor_counts: np.ndarray
    monitor_messages: list[tuple[int, str]]
    gains: list[list[CbfGains]]
    breach: bool
    breach_time: float | None
    deadlock: bool
    budget: float
    min_h: float
    fallback_ticks: int
    v_negative_ticks: int

    @property
    def rows(self) -> int:
        return self.t.shape[0]


@dataclass(eq=False)
class EpisodeContext:
    """Frozen per-episode controller state threaded through steps."""

    gains: list[list[CbfGains]]
    alloc: tuple[int, ...] | None = None
    prev_dogs: np.ndarray | None = None


def estimate_dog_velocities(
    current: np.ndarray, previous: np.ndarray | None, dt: float
) -> np.ndarray:
    """Backward-difference velocity estimates, zeros on the first tick."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    cur = np.asarray(current, dtype=float).reshape(-1, 2)
    if previous is None:
        return np.zeros_like(cur)
    return (cur - np.asarray(previous, dtype=float).reshape(-1, 2)) / dt


def _clamp_speeds(u: np.ndarray, u_max: float) -> np.ndarray:
    if not u.size:
        return u
    speed = np.linalg.norm(u, axis=1)
    over = speed > u_max
    if not over.any():
        return u
    out = u.copy()
    out[over] *= (u_max / speed[over])[:, None]
    return out


def _control(w: WorldState, scenario: Scenario, ctx: EpisodeContext) -> ControlOutput:
    if scenario.controller == "centralized":
        return centralized_step(w, scenario.params, ctx.gains, scenario.zones)
    if scenario.controller == "allocated":
        return allocated_step(
            w,
            scenario.params,
            ctx.gains,
            scenario.zones,
            ctx.alloc,
            prev_dog_positions=ctx.prev_dogs,
            dt=scenario.dt,
        )
    return dual_subgradient_step(
        w, scenario.params, ctx.gains, scenario.zones, scenario.dual
    )


def step(
    state: WorldState, scenario: Scenario, ctx: EpisodeContext
) -> tuple[WorldState, ControlOutput]:
    """One closed-loop transition from the given state.

    The controller is evaluated first, commands are clamped to the
    scenario's speed cap, then sheep and dogs integrate one explicit
    Euler step simultaneously from the pre-step state.
    """
    out = _control(state, scenario, ctx)
    u = _clamp_speeds(out.u, scenario.bounds.u_d_max)
    f = sheep_velocities(state, scenario.params)
    nxt = WorldState(
        sheep=state.sheep + scenario.dt * f,
        dogs=state.dogs + scenario.dt * u if state.n_dogs else state.dogs,
        time=state.time + scenario.dt,
    )
    if not np.array_equal(u, out.u):
        out = replace(out, u=u)
    return nxt, out


def _h_matrix(w: WorldState, zones) -> np.ndarray:
    d = w.sheep[:, None, :] - np.array([z.center for z in zones])[None, :, :]
    rr = np.array([z.inflated_radius**2 for z in zones])
    return np.einsum("iza,iza->iz", d, d) - rr[None, :]


def run(scenario: Scenario) -> EpisodeLog:
    """Simulate one full episode and assemble its log.

    Barrier gains are selected from the initial state and frozen; the
    allocation (if any) is likewise fixed at t=0. The loop stops at
    t_end, or at the first tick whose state breaches any zone. Logged
    slacks are taken at the solver's point; the ode_residual column uses
    the commanded (clamped) velocities.
    """
    scenario.validate()
    p, zones, db = scenario.params, scenario.zones, scenario.bounds
    w = scenario.world0
    gains = select_gains_table(w, p, zones, scenario.gains_base, scenario.gains_margin)
    ctx = EpisodeContext(gains=gains)
    if scenario.controller == "allocated":
        ctx.alloc = allocate(w)

    m, n, nz = w.n_sheep, w.n_dogs, len(zones)
    n_steps = scenario.n_steps
    total = n_steps + 1

    t_arr = np.zeros(total)
    sheep_arr = np.zeros((total, m, 2))
    dogs_arr = np.zeros((total, n, 2))
    u_arr = np.zeros((total, n, 2))
    h_arr = np.zeros((total, m, nz))
    slack_arr = np.zeros((total, m, nz))
    resid_arr = np.zeros((total, m, nz))
    speed_arr = np.zeros(total)
    mon_counts = np.zeros(total, dtype=int)
    mon_messages: list[tuple[int, str]] = []

    alpha = np.array([[g.alpha for g in row] for row in gains])
    beta = np.array([[g.beta for g in row] for row in gains])
    p1 = np.array([[g.p1 for g in row] for row in gains])

    budget = 0.0
    fallback_ticks = 0
    v_negative_ticks = 0
    breach = False
    breach_time = None
    deadlock_run = 0
    deadlock_need = int(math.ceil(DEADLOCK_WINDOW / scenario.dt - 1e-9)) + 1
    deadlock = False

    rows = 0
    for k in range(total):
        h_now = _h_matrix(w, zones)
        nxt, out = (None, None)
        if k < n_steps:
            nxt, out = step(w, scenario, ctx)
        else:
            out = _control(w, scenario, ctx)
            out = replace(out, u=_clamp_speeds(out.u, db.u_d_max))

        # The barrier condition hdd + alpha*hd + beta*h with the
        # commanded velocities, via the joint-constraint identity
        # residual = 2 (rhs - row . u); the joint rhs carries no dog
        # velocities, so this is exact regardless of which policy
        # produced u.
        u_flat = out.u.reshape(-1)
        resid = 2.0 * (out.joint_b - (out.joint_a @ u_flat if out.joint_a.size else 0.0))
        resid_arr[k] = resid.reshape(m, nz)
        slack_arr[k] = np.asarray(out.slack).reshape(m, nz)

        f = sheep_velocities(w, p)
        hd = 2.0 * np.einsum(
            "iza,ia->iz",
            w.sheep[:, None, :] - np.array([z.center for z in zones])[None, :, :],
            f,
        )
        if np.any(hd + p1 * h_now < 0):
            v_negative_ticks += 1

        msgs = bounds_mod.monitor_assumptions(w, p, zones, db)
        mon_counts[k] = len(msgs)
        for msg in msgs:
            mon_messages.append((k, msg))

        t_arr[k] = w.time
        sheep_arr[k] = w.sheep
        dogs_arr[k] = w.dogs
        u_arr[k] = out.u
        h_arr[k] = h_now
        speed_arr[k] = float(np.linalg.norm(f, axis=1).max())
        if out.fallback:
            fallback_ticks += 1
        rows = k + 1

        if speed_arr[k] < DEADLOCK_SPEED:
            deadlock_run += 1
            if deadlock_run >= deadlock_need:
                deadlock = True
        else:
            deadlock_run = 0

        if h_now.min() < 0:
            breach = True
            breach_time = w.time
            break

        if k < n_steps:
            budget += scenario.dt * float(np.linalg.norm(out.u, axis=1).sum())
            ctx.prev_dogs = w.dogs
            w = nxt

    if v_negative_ticks:
        log.info(
            "%s: cascade value hd + p1*h went transiently negative on %d tick(s)",
            scenario.name,
            v_negative_ticks,
        )

    sl = slice(0, rows)
    return EpisodeLog(
        name=scenario.name,
        controller=scenario.controller,
        dt=scenario.dt,
        t=t_arr[sl],
        sheep=sheep_arr[sl],
        dogs=dogs_arr[sl],
        u=u_arr[sl],
        h=h_arr[sl],
        slack=slack_arr[sl],
        ode_residual=resid_arr[sl],
        sheep_speed_max=speed_arr[sl],
        monitor_counts=mon_counts[sl],
        monitor_messages=mon_messages,
        gains=gains,
        breach=breach,
        breach_time=breach_time,
        deadlock=deadlock,
        budget=budget,
        min_h=float(h_arr[sl].min()),
        fallback_ticks=fallback_ticks,
        v_negative_ticks=v_negative_ticks,
    )
