"""Dog velocity strategies: joint QP, per-dog allocation, dual iteration.

Three interchangeable policies compute per-dog velocities from one
state. The joint policy solves a single min-norm QP over all dogs. The
allocation policy gives each dog one sheep and a private 2-variable QP,
using backward-difference estimates of the other dogs' velocities. The
dual policy distributes the joint QP: each dog iterates a closed-form
local solve and a projected multiplier step, exchanging multipliers
with its peers in synchronous rounds, and returns the running primal
average.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .cbf import ConstraintBatch, LinearConstraint
from .errors import AllocationError, InfeasibleConstraintError
from .qp import QpProblem, QpSolution, solve_min_norm
from .world import SheepParams, WorldState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class DualConfig:
    """Knobs of the dual-subgradient iteration.

    step_rule 'diminishing' uses gamma_t = gamma0/t, 'constant' uses
    gamma0 at every round. averaging 'uniform' mixes every multiplier
    including the dog's own with weight 1/n_dogs; 'exclude-self' is the
    as-published line that skips the dog's own multiplier while still
    dividing by n_dogs, kept for fidelity experiments.
    """

    k_max: int = 1000
    gamma0: float = 1.0
    step_rule: str = "diminishing"
    averaging: str = "uniform"

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be at least 1")
        if self.gamma0 <= 0:
            raise ValueError("gamma0 must be positive")
        if self.step_rule not in ("diminishing", "constant"):
            raise ValueError(f"unknown step_rule {self.step_rule!r}")
        if self.averaging not in ("uniform", "exclude-self"):
            raise ValueError(f"unknown averaging {self.averaging!r}")


@dataclass(frozen=True, eq=False)
class DualState:
    """Snapshot of one dog's side of the dual iteration."""

    mu: np.ndarray
    primal_sum: np.ndarray
    iteration: int


@dataclass(frozen=True, eq=False)
class ControlOutput:
    """Velocities plus the constraints the policy actually solved.

    ``slack`` is rhs - row.u per built constraint at the solver's
    point, aligned with ``constraints``; ``fallback`` marks a joint QP
    that came back infeasible and was replaced by the least-violation
    point. ``joint_a``/``joint_b`` always carry the stacked joint
    system of the tick (every policy derives from it), so callers can
    evaluate the barrier condition without rebuilding it.
    """

    u: np.ndarray
    constraints: list[LinearConstraint]
    slack: np.ndarray
    joint_a: np.ndarray
    joint_b: np.ndarray
    fallback: bool = False
    mu_trace: np.ndarray | None = None


def allocate(w: WorldState) -> tuple[int, ...]:
    """One-to-one sheep-to-dog assignment, greedy by distance.

    Sheep are visited in index order; each takes its nearest still-free
    dog, ties going to the lower dog index. Deterministic, and a
    bijection whenever team sizes match (anything else raises).
    """
    if w.n_sheep != w.n_dogs:
        raise AllocationError(
            f"allocation needs equal team sizes, got {w.n_sheep} sheep and "
            f"{w.n_dogs} dogs; use the joint or dual policy instead"
        )
    free = list(range(w.n_dogs))
    out = []
    for i in range(w.n_sheep):
        dists = [float(np.linalg.norm(w.dogs[k] - w.sheep[i])) for k in free]
        k = free.pop(int(np.argmin(dists)))
        out.append(k)
    return tuple(out)


def _least_violation(a: np.ndarray, b: np.ndarray, iters: int = 50) -> np.ndarray:
    """Best-effort point for an infeasible system: descend the squared
    hinge loss sum(max(a_i.u - b_i, 0)^2) by repeated least squares on
    the violated rows."""
    u = np.zeros(a.shape[1])
    for _ in range(iters):
        viol = a @ u - b
        act = viol > 1e-12
        if not act.any():
            break
        du, *_ = np.linalg.lstsq(a[act], -viol[act], rcond=None)
        if float(np.linalg.norm(du)) < 1e-12:
            break
        u = u + 0.9 * du
    return u


def _joint_constraints(a, b, pairs) -> list[LinearConstraint]:
    return [
        LinearConstraint(row=a[r], rhs=b[r], sheep_index=i, zone_index=zi)
        for r, (i, zi) in enumerate(pairs)
    ]


def centralized_step(w: WorldState, p: SheepParams, gains_table, zones) -> ControlOutput:
    """All-dog velocities from the single joint min-norm QP.

    Stacks one constraint per (sheep, zone) pair and solves over the
    2*n_dogs stacked velocity vector. An infeasible stack (possible
    when dogs are outnumbered) falls back to the least-violation point
    and flags the tick instead of halting the episode.
    """
    cb = ConstraintBatch(w, p, gains_table, zones)
    a, b = cb.a, cb.b
    sol = solve_min_norm(QpProblem(a_rows=a, b=b, dim=2 * w.n_dogs))
    fallback = not sol.optimal
    if fallback:
        u_flat = _least_violation(a, b)
        log.warning("joint herding QP infeasible at t=%.3f; using least-violation point", w.time)
    else:
        u_flat = sol.u
    u = u_flat.reshape(w.n_dogs, 2) if w.n_dogs else np.zeros((0, 2))
    slack = b - a @ u_flat if a.size else b.copy()
    return ControlOutput(
        u=u,
        constraints=_joint_constraints(a, b, cb.pairs),
        slack=slack,
        joint_a=a,
        joint_b=b,
        fallback=fallback,
    )


def allocated_step(
    w: WorldState,
    p: SheepParams,
    gains_table,
    zones,
    alloc: tuple[int, ...],
    prev_dog_positions: np.ndarray | None = None,
    dt: float | None = None,
    other_dog_velocities: np.ndarray | None = None,
) -> ControlOutput:
    """Per-dog velocities, one private QP per dog.

    Dog ``alloc[i]`` herds sheep i and solves a 2-variable QP with one
    row per zone. The other dogs' velocities entering each rhs are
    taken from ``other_dog_velocities`` when given, otherwise estimated
    by backward differences of ``prev_dog_positions`` over ``dt``
    (zeros when no previous sample exists).
    """
    if len(alloc) != w.n_sheep or sorted(alloc) != list(range(w.n_dogs)):
        raise AllocationError(f"invalid allocation {alloc!r}")
    if other_dog_velocities is not None:
        u_est = np.asarray(other_dog_velocities, dtype=float).reshape(w.n_dogs, 2)
    elif prev_dog_positions is None:
        u_est = np.zeros((w.n_dogs, 2))
    else:
        if dt is None or dt <= 0:
            raise ValueError("dt must be positive to estimate velocities")
        u_est = (w.dogs - np.asarray(prev_dog_positions, dtype=float)) / dt

    cb = ConstraintBatch(w, p, gains_table, zones)
    nz = len(zones)
    # Moving every other dog's estimated contribution across the
    # inequality: rhs for (i, z, dog k) is the joint rhs minus the
    # non-k block products.
    contrib = np.einsum("izlb,lb->izl", cb.blocks, u_est)  # (m, nz, n)
    contrib_sum = contrib.sum(axis=2)

    u = np.zeros((w.n_dogs, 2))
    constraints: list[LinearConstraint] = []
    slack = []
    for i in range(w.n_sheep):
        k = alloc[i]
        a = cb.blocks[i, :, k, :]  # (nz, 2)
        b = cb.b.reshape(w.n_sheep, nz)[i] - (contrib_sum[i] - contrib[i, :, k])
        sol = solve_min_norm(QpProblem(a_rows=a, b=b, dim=2))
        if not sol.optimal:
            raise InfeasibleConstraintError(
                f"per-dog QP infeasible for dog {k} / sheep {i} at t={w.time:.3f}; "
                f"rows had |row| in [{np.linalg.norm(a, axis=1).min():.3e}, "
                f"{np.linalg.norm(a, axis=1).max():.3e}] and rhs min {b.min():.3e}; "
                "check the distance-bound monitor for a violated assumption"
            )
        u[k] = sol.u
        constraints.extend(
            LinearConstraint(row=a[zi], rhs=b[zi], sheep_index=i, zone_index=zi)
            for zi in range(nz)
        )
        slack.extend(b - a @ sol.u)
    return ControlOutput(
        u=u,
        constraints=constraints,
        slack=np.array(slack),
        joint_a=cb.a,
        joint_b=cb.b,
    )


def dual_subgradient_step(
    w: WorldState,
    p: SheepParams,
    gains_table,
    zones,
    cfg: DualConfig,
    trace: bool = False,
) -> ControlOutput:
    """Distributed solve of the joint QP by dual decomposition.

    Every dog k keeps a multiplier vector over all stacked constraints,
    initialized to zero. Each synchronous round it averages the
    multipliers per ``cfg.averaging``, takes the closed-form local
    minimizer u_k = -A_k^T v_k / 2 (A_k being its 2-column block of the
    stacked matrix), and projects a subgradient step
    v_k + gamma_t (A_k u_k - b/n_dogs) back onto the nonnegative
    orthant. The returned velocity is the average of the local
    solutions over all rounds, which approaches the joint optimum as
    rounds grow. ``trace=True`` records the multiplier matrix after
    every round.
    """
    cb = ConstraintBatch(w, p, gains_table, zones)
    a, b = cb.a, cb.b
    constraints = _joint_constraints(a, b, cb.pairs)
    n, m_rows = w.n_dogs, a.shape[0]
    if n == 0:
        return ControlOutput(u=np.zeros((0, 2)), constraints=constraints,
                             slack=b.copy(), joint_a=a, joint_b=b)
    if not trace and np.all(b >= 0.0):
        # Every subgradient -b/n starts nonpositive and u stays 0, so
        # the projection pins every multiplier at zero for all rounds:
        # the full iteration returns exactly zero velocities.
        return ControlOutput(u=np.zeros((n, 2)), constraints=constraints,
                             slack=b.copy(), joint_a=a, joint_b=b)

    # Per-dog column blocks and their Gram matrices: with the local
    # minimizer closed form, one round only needs G_k v, not A_k itself.
    a3 = a.reshape(m_rows, n, 2).transpose(1, 0, 2)  # (n, rows, 2)
    gram = a3 @ a3.transpose(0, 2, 1)  # (n, rows, rows)
    b_share = b / n

    mu = np.zeros((n, m_rows))
    v_sum = np.zeros((n, m_rows))
    mu_trace = np.zeros((cfg.k_max, n, m_rows)) if trace else None
    for t in range(1, cfg.k_max + 1):
        gamma = cfg.gamma0 / t if cfg.step_rule == "diminishing" else cfg.gamma0
        if cfg.averaging == "uniform":
            v = np.broadcast_to(mu.mean(axis=0), (n, m_rows))
        else:
            v = (mu.sum(axis=0) - mu) / n
        v_sum += v
        resid = -0.5 * np.einsum("kab,kb->ka", gram, v) - b_share
        mu = np.maximum(v + gamma * resid, 0.0)
        if trace:
            mu_trace[t - 1] = mu

    # The local solution is linear in v, so averaging the iterates
    # equals applying the closed form to the averaged multipliers.
    v_bar = v_sum / cfg.k_max
    u = -0.5 * np.einsum("kra,kr->ka", a3, v_bar)
    u_flat = u.reshape(-1)
    return ControlOutput(
        u=u,
        constraints=constraints,
        slack=b - a @ u_flat,
        joint_a=a,
        joint_b=b,
        mu_trace=mu_trace,
    )
