"""Barrier functions and the linear velocity constraints they induce.

The barrier for one (sheep, zone) pair is the squared clearance
h = |x_S - x_P|^2 - (radius + buffer)^2. Dog velocities enter only the
second time derivative of h, so safety is enforced through the
second-order condition hdd + alpha*hd + beta*h >= 0, which is linear in
the dog velocities. This module evaluates the barrier chain, picks the
pole gains from the initial state, and assembles the constraint rows in
both the joint (all dogs) and per-dog forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InitialBreachError
from .world import (
    FieldBatch,
    SheepParams,
    WorldState,
    Zone,
    dog_jacobian_blocks,
    flow_jacobian_sum,
    sheep_velocities,
    sheep_velocity,
)


@dataclass(frozen=True)
class CbfGains:
    """Pole gains of the cascaded barrier. Both must be positive."""

    p1: float
    p2: float

    def __post_init__(self):
        if not (self.p1 > 0 and self.p2 > 0):
            raise ValueError("barrier gains must be positive")

    @property
    def alpha(self) -> float:
        return self.p1 + self.p2

    @property
    def beta(self) -> float:
        return self.p1 * self.p2


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """One row ``row . u <= rhs`` on a dog velocity vector.

    ``row`` has length 2*n_dogs for the joint form and 2 for the
    per-dog form. ``sheep_index``/``zone_index`` record which barrier
    generated the row.
    """

    row: np.ndarray
    rhs: float
    sheep_index: int
    zone_index: int

    def __post_init__(self):
        object.__setattr__(self, "row", np.asarray(self.row, dtype=float).reshape(-1))
        object.__setattr__(self, "rhs", float(self.rhs))
        if not np.all(np.isfinite(self.row)) or not np.isfinite(self.rhs):
            raise ValueError("constraint must be finite")


def barrier_h(xs, zone: Zone) -> float:
    """Squared clearance of a point from the inflated zone boundary."""
    d = np.asarray(xs, dtype=float) - zone.center
    return float(d @ d - zone.inflated_radius**2)


def barrier_h_dot(w: WorldState, p: SheepParams, i: int, zone: Zone) -> float:
    """First time derivative of h: 2 (x_Si - x_P) . f_i."""
    return float(2.0 * (w.sheep[i] - zone.center) @ sheep_velocity(w, p, i))


def barrier_h_ddot(
    w: WorldState,
    p: SheepParams,
    i: int,
    zone: Zone,
    dog_velocities,
    f_all: np.ndarray | None = None,
) -> float:
    """Second time derivative of h given the dog velocities.

    2 f_i.f_i + 2 (x_Si - x_P) . ( sum_j (df_i/dx_Sj) f_j
                                   + sum_l (df_i/dx_Dl) u_Dl )
    """
    if f_all is None:
        f_all = sheep_velocities(w, p)
    fi = f_all[i]
    g = w.sheep[i] - zone.center
    drift = flow_jacobian_sum(w, p, i, f_all)
    out = 2.0 * float(fi @ fi) + 2.0 * float(g @ drift)
    if w.n_dogs:
        u = np.asarray(dog_velocities, dtype=float).reshape(w.n_dogs, 2)
        blocks = dog_jacobian_blocks(w, p, i)
        out += 2.0 * float(g @ np.einsum("lab,lb->a", blocks, u))
    return out


def select_gains(
    w0: WorldState,
    p: SheepParams,
    i: int,
    zone: Zone,
    base: float = 1.0,
    margin: float = 0.5,
) -> CbfGains:
    """Pick pole gains for one (sheep, zone) pair from the initial state.

    p1 must exceed -hd(0)/h(0) and p2 must exceed
    -(hdd(0) + p1*hd(0)) / (hd(0) + p1*h(0)); each gain is the binding
    ratio inflated by ``margin`` when the ratio is positive, and
    ``base`` otherwise. hdd(0) is evaluated with all dogs at rest, since
    no controller has run yet. Gains are selected once and frozen for
    the whole episode.
    """
    if base <= 0:
        raise ValueError("base gain must be positive")
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    h0 = barrier_h(w0.sheep[i], zone)
    if h0 <= 0:
        raise InitialBreachError(
            f"sheep {i} starts inside the inflated zone (h = {h0:.6g})"
        )
    hd0 = barrier_h_dot(w0, p, i, zone)

    ratio1 = -hd0 / h0
    p1 = max(base, (1.0 + margin) * ratio1) if ratio1 > 0 else base

    hdd0 = barrier_h_ddot(w0, p, i, zone, np.zeros((w0.n_dogs, 2)))
    v0 = hd0 + p1 * h0
    ratio2 = -(hdd0 + p1 * hd0) / v0
    p2 = max(base, (1.0 + margin) * ratio2) if ratio2 > 0 else base
    return CbfGains(p1=p1, p2=p2)


def select_gains_table(
    w0: WorldState,
    p: SheepParams,
    zones,
    base: float = 1.0,
    margin: float = 0.5,
) -> list[list[CbfGains]]:
    """Gains for every (sheep, zone) pair; table[i][z]."""
    return [
        [select_gains(w0, p, i, z, base=base, margin=margin) for z in zones]
        for i in range(w0.n_sheep)
    ]


def _constraint_rhs(
    w: WorldState,
    p: SheepParams,
    gains: CbfGains,
    i: int,
    zone: Zone,
    f_all: np.ndarray,
) -> float:
    fi = f_all[i]
    g = w.sheep[i] - zone.center
    h = barrier_h(w.sheep[i], zone)
    drift = flow_jacobian_sum(w, p, i, f_all)
    return (
        float(fi @ fi)
        + float(g @ drift)
        + gains.alpha * float(g @ fi)
        + gains.beta * h / 2.0
    )


def centralized_constraint(
    w: WorldState,
    p: SheepParams,
    gains: CbfGains,
    i: int,
    zone: Zone,
    zone_index: int = 0,
    f_all: np.ndarray | None = None,
) -> LinearConstraint:
    """Joint constraint on the stacked velocities of every dog.

    ``row . u_all <= rhs`` is the barrier condition
    hdd + alpha*hd + beta*h >= 0 divided by two, with
    row = (x_P - x_Si)^T [dog blocks] and
    rhs = f_i.f_i + (x_Si - x_P) . sum_j (df_i/dx_Sj) f_j
          + alpha (x_Si - x_P).f_i + beta h / 2.
    """
    if f_all is None:
        f_all = sheep_velocities(w, p)
    g = zone.center - w.sheep[i]
    blocks = dog_jacobian_blocks(w, p, i)
    row = np.einsum("a,lab->lb", g, blocks).reshape(-1)
    rhs = _constraint_rhs(w, p, gains, i, zone, f_all)
    return LinearConstraint(row=row, rhs=rhs, sheep_index=i, zone_index=zone_index)


def allocated_constraint(
    w: WorldState,
    p: SheepParams,
    gains: CbfGains,
    i: int,
    k: int,
    other_dog_velocities,
    zone: Zone,
    zone_index: int = 0,
    f_all: np.ndarray | None = None,
) -> LinearConstraint:
    """Per-dog constraint: sheep i's barrier as a row on dog k's velocity.

    The joint row is split by moving every other dog's (measured or
    estimated) contribution into the right-hand side:
    rhs = rhs_joint + (x_Si - x_P) . sum_{l != k} (df_i/dx_Dl) u_Dl.
    ``other_dog_velocities`` has shape (n_dogs, 2); entry k is ignored.
    """
    if f_all is None:
        f_all = sheep_velocities(w, p)
    u = np.asarray(other_dog_velocities, dtype=float).reshape(w.n_dogs, 2)
    g = zone.center - w.sheep[i]
    blocks = dog_jacobian_blocks(w, p, i)
    row = g @ blocks[k]
    rhs = _constraint_rhs(w, p, gains, i, zone, f_all)
    for l in range(w.n_dogs):
        if l != k:
            rhs -= float(g @ (blocks[l] @ u[l]))
    return LinearConstraint(row=row, rhs=rhs, sheep_index=i, zone_index=zone_index)


class ConstraintBatch:
    """Every (sheep, zone) joint constraint of one state, vectorized.

    ``blocks[i, z, l]`` is the 2-vector of dog l in the joint row of
    pair (i, z); ``a``/``b`` are the stacked matrix and rhs with rows
    ordered sheep-major, pairs[r] = (sheep, zone) for row r. One
    construction serves the joint solve, the per-dog split, and the
    barrier-condition logging of a whole tick.
    """

    def __init__(self, w: WorldState, p: SheepParams, gains_table, zones):
        m, n, nz = w.n_sheep, w.n_dogs, len(zones)
        batch = FieldBatch(w, p)
        centers = np.array([z.center for z in zones])
        infl2 = np.array([z.inflated_radius**2 for z in zones])
        alpha = np.array([[g.alpha for g in row] for row in gains_table])
        beta = np.array([[g.beta for g in row] for row in gains_table])

        x_rel = w.sheep[:, None, :] - centers[None, :, :]  # (m, nz, 2)
        h = np.einsum("iza,iza->iz", x_rel, x_rel) - infl2[None, :]
        ff = np.einsum("ia,ia->i", batch.f, batch.f)
        rhs = (
            ff[:, None]
            + np.einsum("iza,ia->iz", x_rel, batch.drift)
            + alpha * np.einsum("iza,ia->iz", x_rel, batch.f)
            + beta * h / 2.0
        )
        blocks = np.einsum("iza,ilab->izlb", -x_rel, batch.jac_dog)

        self.field = batch
        self.h = h
        self.blocks = blocks
        self.a = blocks.reshape(m * nz, 2 * n)
        self.b = rhs.reshape(m * nz)
        self.pairs = [(i, z) for i in range(m) for z in range(nz)]


def stacked_centralized(
    w: WorldState,
    p: SheepParams,
    gains_table,
    zones,
) -> tuple[np.ndarray, np.ndarray, list[tuple[int, int]]]:
    """Stack every (sheep, zone) joint constraint into A u <= b.

    Returns (A, b, pairs) with A of shape (m*n_zones, 2*n_dogs) and
    pairs[r] = (sheep_index, zone_index) for row r; rows are ordered
    sheep-major.
    """
    cb = ConstraintBatch(w, p, gains_table, zones)
    return cb.a, cb.b, cb.pairs
