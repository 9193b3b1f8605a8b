"""Bundled scenario suite mirroring the reference experiments.

Eight episodes: three allocated runs (2v2, 3v3, and 4v4 defending two
zones), two joint-QP runs with fewer dogs than sheep (2v4, 3v5), two
dual-decomposition runs (2v3 with the goal at the zone center, 2v4 on
the same geometry as the joint run for budget comparison), and a 5v5
run whose goal sits at the zone center so the flock stalls outside.
Names read "<dogs>v<sheep>". A dogless negative control is provided
separately: with nobody herding, the flock walks straight in.

Coordinates are in meters. The default protected zone has radius 0.6
with a 0.1 buffer and sits at the origin; flock gains are 0.5 / 1.0 /
0.1 with a 1.0 m inter-sheep margin. Geometry follows the arena-scale
setups of the reference runs: dogs start near the zone on the flock
side, close enough to their sheep that commanded speeds stay well
under the 2 m/s cap. Allocated episodes use a finer step than the
joint ones because their rhs terms rely on one-tick-stale velocity
estimates of the other dogs. Distance-bound envelopes were rounded
outward from simulated runs so the assumption monitor stays clean over
each whole episode.
"""

from __future__ import annotations

import numpy as np

from .bounds import DistanceBounds
from .controllers import DualConfig
from .sim import Scenario
from .world import SheepParams, WorldState, Zone

DEFAULT_PARAMS = dict(k_s=0.5, k_g=1.0, k_d=0.1, r_s=1.0)
DEFAULT_ZONE = dict(center=(0.0, 0.0), radius=0.6, buffer=0.1)


def _scenario(name, sheep, dogs, goal, controller, *, zones=None, db, dt=0.01,
              t_end=10.0, dual=None, seed=0):
    params = SheepParams(goal=goal, **DEFAULT_PARAMS)
    if zones is None:
        zones = (Zone(**DEFAULT_ZONE),)
    return Scenario(
        name=name,
        world0=WorldState(sheep=sheep, dogs=dogs, time=0.0),
        params=params,
        zones=tuple(zones),
        controller=controller,
        dual=dual,
        dt=dt,
        t_end=t_end,
        bounds=DistanceBounds(**db),
        seed=seed,
    )


def two_v_two() -> Scenario:
    return _scenario(
        "2v2",
        sheep=[(1.5, 0.5), (1.5, -0.5)],
        dogs=[(1.0, 0.42), (1.0, -0.42)],
        goal=(-1.7, 0.0),
        controller="allocated",
        dt=0.002,
        t_end=6.0,
        db=dict(l_s=0.5, m_s=4.0, l_d=0.1, m_g=6.0, m_p=4.0, u_d_max=2.0),
    )


def three_v_three() -> Scenario:
    return _scenario(
        "3v3",
        sheep=[(1.6, 0.8), (1.8, 0.0), (1.6, -0.8)],
        dogs=[(1.05, 0.6), (1.2, 0.0), (1.05, -0.6)],
        goal=(-1.8, 0.0),
        controller="allocated",
        dt=0.002,
        t_end=6.0,
        db=dict(l_s=0.4, m_s=4.0, l_d=0.1, m_g=6.0, m_p=4.0, u_d_max=2.0),
    )


def four_v_four_two_zones() -> Scenario:
    zones = (
        Zone(center=(0.0, 1.0), radius=0.6, buffer=0.1),
        Zone(center=(0.0, -1.0), radius=0.6, buffer=0.1),
    )
    return _scenario(
        "4v4-two-zones",
        sheep=[(1.7, 1.3), (1.8, 0.45), (1.8, -0.45), (1.7, -1.3)],
        dogs=[(1.15, 1.05), (1.25, 0.4), (1.25, -0.4), (1.15, -1.05)],
        goal=(-2.0, 0.0),
        controller="allocated",
        zones=zones,
        dt=0.002,
        t_end=6.0,
        db=dict(l_s=0.4, m_s=5.0, l_d=0.1, m_g=6.0, m_p=5.0, u_d_max=2.0),
    )


def two_v_four_centralized() -> Scenario:
    return _scenario(
        "2v4-centralized",
        sheep=[(1.7, 1.0), (1.8, 0.35), (1.8, -0.35), (1.7, -1.0)],
        dogs=[(1.05, 0.45), (1.05, -0.45)],
        goal=(-2.0, 0.0),
        controller="centralized",
        dt=0.02,
        t_end=7.0,
        db=dict(l_s=0.4, m_s=5.0, l_d=0.1, m_g=6.0, m_p=5.0, u_d_max=2.0),
    )


def three_v_five_centralized() -> Scenario:
    return _scenario(
        "3v5-centralized",
        sheep=[(1.6, 1.2), (1.75, 0.6), (1.85, 0.0), (1.75, -0.6), (1.6, -1.2)],
        dogs=[(1.05, 0.6), (1.15, 0.0), (1.05, -0.6)],
        goal=(-2.0, 0.0),
        controller="centralized",
        dt=0.01,
        t_end=7.0,
        db=dict(l_s=0.35, m_s=5.0, l_d=0.1, m_g=6.0, m_p=5.0, u_d_max=2.0),
    )


def two_v_three_dual() -> Scenario:
    return _scenario(
        "2v3-dual",
        sheep=[(1.6, 0.8), (1.8, 0.0), (1.6, -0.8)],
        dogs=[(1.05, 0.5), (1.05, -0.5)],
        goal=(0.0, 0.0),
        controller="dual",
        dual=DualConfig(k_max=2000, gamma0=0.02, step_rule="constant"),
        dt=0.02,
        t_end=8.0,
        db=dict(l_s=0.4, m_s=4.0, l_d=0.1, m_g=4.0, m_p=4.0, u_d_max=2.0),
    )


def two_v_four_dual() -> Scenario:
    base = two_v_four_centralized()
    return Scenario(
        name="2v4-dual",
        world0=base.world0,
        params=base.params,
        zones=base.zones,
        controller="dual",
        dual=DualConfig(k_max=2000, gamma0=0.02, step_rule="constant"),
        dt=base.dt,
        t_end=base.t_end,
        bounds=base.bounds,
        seed=base.seed,
    )


def five_v_five_deadlock() -> Scenario:
    angles = np.deg2rad(90.0 - 72.0 * np.arange(5))
    sheep = np.stack([2.0 * np.cos(angles), 2.0 * np.sin(angles)], axis=1)
    dogs = np.stack([1.1 * np.cos(angles), 1.1 * np.sin(angles)], axis=1)
    return _scenario(
        "5v5-deadlock",
        sheep=sheep,
        dogs=dogs,
        goal=(0.0, 0.0),
        controller="allocated",
        dt=0.002,
        t_end=18.0,
        db=dict(l_s=0.4, m_s=4.0, l_d=0.1, m_g=3.0, m_p=3.0, u_d_max=2.0),
    )


def negative_control() -> Scenario:
    """No dogs at all: the flock walks straight into the zone."""
    return _scenario(
        "no-dogs",
        sheep=[(1.6, 0.3), (1.6, -0.3)],
        dogs=[],
        goal=(-1.7, 0.0),
        controller="centralized",
        dt=0.01,
        t_end=6.0,
        db=dict(l_s=0.3, m_s=4.0, l_d=0.05, m_g=6.0, m_p=4.0, u_d_max=2.0),
    )


SUITE = (
    two_v_two,
    three_v_three,
    four_v_four_two_zones,
    two_v_four_centralized,
    three_v_five_centralized,
    two_v_three_dual,
    two_v_four_dual,
    five_v_five_deadlock,
)

BY_NAME = {f().name: f for f in SUITE} | {"no-dogs": negative_control}


def suite_scenarios() -> list[Scenario]:
    """The eight bundled episodes, in fixed order."""
    return [f() for f in SUITE]
