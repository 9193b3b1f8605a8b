"""Closed-form feasibility bounds and the runtime assumption monitor.

The per-dog herding QP stays feasible as long as the agents respect a
set of distance bounds; this module evaluates the Frobenius-norm bounds
on the velocity-field Jacobians, the flock speed bound, and the derived
lower bound on the per-dog constraint rhs. The monitor checks the
distance bounds against a live state each tick: the bounds are scenario
inputs, so its job is to report when the hypothesis fails, not to
enforce it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cbf import CbfGains
from .world import SheepParams, WorldState

_SQRT2 = math.sqrt(2.0)
_CF = 3.0 + _SQRT2  # Frobenius factor shared by all the rank-one bounds


@dataclass(frozen=True)
class DistanceBounds:
    """Assumed distance envelope for one scenario.

    l_s/m_s bound sheep-sheep distances, l_d lower-bounds sheep-dog
    distances, m_g and m_p upper-bound each sheep's distance to the goal
    and to any zone center, and u_d_max caps commanded dog speed.
    """

    l_s: float
    m_s: float
    l_d: float
    m_g: float
    m_p: float
    u_d_max: float

    def __post_init__(self):
        if not 0 < self.l_s <= self.m_s:
            raise ValueError("need 0 < l_s <= m_s")
        if self.l_d <= 0:
            raise ValueError("l_d must be positive")
        if min(self.m_g, self.m_p, self.u_d_max) < 0:
            raise ValueError("m_g, m_p, u_d_max must be nonnegative")


@dataclass(frozen=True)
class FeasibilityReport:
    """Evaluated bound chain for one scenario."""

    lambda_m: float
    lambda_s: float
    lambda_d: float
    f_max: float
    b_lower: float
    feasible_certificate: bool

    def as_dict(self) -> dict:
        return {
            "lambda_m": self.lambda_m,
            "lambda_s": self.lambda_s,
            "lambda_d": self.lambda_d,
            "f_max": self.f_max,
            "b_lower": self.b_lower,
            "feasible_certificate": self.feasible_certificate,
        }


def lambda_s(k_s: float, r_s: float, l_s: float) -> float:
    """Frobenius bound on a cross-sheep Jacobian block:
    sqrt(2) k_s + (3+sqrt(2)) k_s r_s^3 / l_s^3."""
    if l_s <= 0:
        raise ValueError("l_s must be positive")
    return _SQRT2 * k_s + _CF * k_s * r_s**3 / l_s**3


def lambda_d(k_d: float, l_d: float) -> float:
    """Frobenius bound on a dog Jacobian block: (3+sqrt(2)) k_d / l_d^3."""
    if l_d <= 0:
        raise ValueError("l_d must be positive")
    return _CF * k_d / l_d**3


def lambda_m(
    n: int,
    k_s: float,
    k_g: float,
    k_d: float,
    r_s: float,
    l_s: float,
    l_d: float,
) -> float:
    """Frobenius bound on a sheep's self Jacobian with n agents per team:
    (n-1) k_s (sqrt(2) + (3+sqrt(2)) r_s^3/l_s^3) + sqrt(2) k_g
    + n (3+sqrt(2)) k_d / l_d^3."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return (n - 1) * lambda_s(k_s, r_s, l_s) + _SQRT2 * k_g + n * lambda_d(k_d, l_d)


def flock_pair_speed_max(k_s: float, r_s: float, l_s: float, m_s: float) -> float:
    """Largest magnitude of one cohesion/separation summand.

    k_s (r + r_s^3/r^2) has a local minimum at r = 2^(1/3) r_s, so its
    maximum over [l_s, m_s] sits at an endpoint.
    """
    if not 0 < l_s <= m_s:
        raise ValueError("need 0 < l_s <= m_s")
    return max(
        k_s * l_s + k_s * r_s**3 / l_s**2,
        k_s * m_s + k_s * r_s**3 / m_s**2,
    )


def f_max_bound(n: int, params: SheepParams, db: DistanceBounds) -> float:
    """Upper bound on any sheep's speed with n agents per team:
    (n-1) F_max + k_g m_g + n k_d / l_d^2."""
    if n < 1:
        raise ValueError("n must be at least 1")
    fmax = flock_pair_speed_max(params.k_s, params.r_s, db.l_s, db.m_s)
    return (n - 1) * fmax + params.k_g * db.m_g + n * params.k_d / db.l_d**2


def _b_lower_from_alpha(n: int, params: SheepParams, alpha: float, db: DistanceBounds) -> float:
    lam_s = lambda_s(params.k_s, params.r_s, db.l_s)
    lam_m = lambda_m(n, params.k_s, params.k_g, params.k_d, params.r_s, db.l_s, db.l_d)
    lam_d = lambda_d(params.k_d, db.l_d)
    gamma = -(alpha + lam_m + (n - 1) * lam_s) * db.m_p
    return gamma * f_max_bound(n, params, db) - (n - 1) * lam_d * db.m_p * db.u_d_max


def b_lower_bound(n: int, params: SheepParams, gains: CbfGains, db: DistanceBounds) -> float:
    """Worst-case lower bound on the per-dog constraint rhs.

    gamma * [ (n-1) F_max + k_g m_g + n k_d / l_d^2 ]
      - (n-1) lambda_d m_p u_d_max,
    with gamma = -(alpha + lambda_m + (n-1) lambda_s) m_p. Finite for
    any finite distance envelope, which is what rules out an unbounded
    constraint.
    """
    return _b_lower_from_alpha(n, params, gains.alpha, db)


def feasibility_report(
    n: int,
    params: SheepParams,
    alpha: float,
    db: DistanceBounds,
    equal_teams: bool = True,
) -> FeasibilityReport:
    """Evaluate the whole bound chain for one scenario.

    ``alpha`` is the largest barrier alpha across (sheep, zone) pairs.
    The per-dog feasibility argument needs one dog per sheep, so the
    certificate flag is only raised for equal team sizes with a finite
    bound chain.
    """
    lam_s = lambda_s(params.k_s, params.r_s, db.l_s)
    lam_d = lambda_d(params.k_d, db.l_d)
    lam_m = lambda_m(n, params.k_s, params.k_g, params.k_d, params.r_s, db.l_s, db.l_d)
    fmax = f_max_bound(n, params, db)
    b_low = _b_lower_from_alpha(n, params, alpha, db)
    finite = all(map(math.isfinite, (lam_s, lam_d, lam_m, fmax, b_low)))
    return FeasibilityReport(
        lambda_m=lam_m,
        lambda_s=lam_s,
        lambda_d=lam_d,
        f_max=fmax,
        b_lower=b_low,
        feasible_certificate=bool(equal_teams and finite),
    )


def monitor_assumptions(
    w: WorldState,
    params: SheepParams,
    zones,
    db: DistanceBounds,
) -> list[str]:
    """Check one state against the distance envelope.

    Returns one message per violated clause; an empty list certifies
    the tick. Every pairwise sheep-sheep distance must lie in
    [l_s, m_s], every sheep-dog distance must be at least l_d, and each
    sheep must stay within m_g of the goal and m_p of every zone center.
    """
    out: list[str] = []
    m = w.n_sheep
    for i in range(m):
        for j in range(i + 1, m):
            d = float(np.linalg.norm(w.sheep[j] - w.sheep[i]))
            if d < db.l_s:
                out.append(f"sheep {i}-{j} distance {d:.4g} below l_s={db.l_s:.4g}")
            elif d > db.m_s:
                out.append(f"sheep {i}-{j} distance {d:.4g} above m_s={db.m_s:.4g}")
    for i in range(m):
        for l in range(w.n_dogs):
            d = float(np.linalg.norm(w.sheep[i] - w.dogs[l]))
            if d < db.l_d:
                out.append(f"sheep {i} - dog {l} distance {d:.4g} below l_d={db.l_d:.4g}")
    for i in range(m):
        d = float(np.linalg.norm(w.sheep[i] - params.goal))
        if d > db.m_g:
            out.append(f"sheep {i} goal distance {d:.4g} above m_g={db.m_g:.4g}")
        for zi, zone in enumerate(zones):
            d = float(np.linalg.norm(w.sheep[i] - zone.center))
            if d > db.m_p:
                out.append(
                    f"sheep {i} zone {zi} center distance {d:.4g} above m_p={db.m_p:.4g}"
                )
    return out
