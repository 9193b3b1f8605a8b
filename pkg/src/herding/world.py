"""Domain types and the flock velocity field with its analytic derivatives.

Each sheep follows first-order dynamics: a cohesion/separation sum over
the other sheep, a linear attraction to a shared goal, and an
inverse-square repulsion from every dog. Dogs are velocity-controlled
points. Everything in this module is a pure function of the state;
the Jacobian operators return the 2x2 blocks later assembled into
linear constraints on the dog velocities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError

# Distances below this are treated as coincident agents. The velocity
# field blows up as 1/r^2, so we refuse rather than clamp: clamping
# would silently break every bound derived from a positive minimum
# separation.
DISTANCE_EPS = 1e-9


def as_vec2(v, name: str = "vector") -> np.ndarray:
    """Coerce ``v`` to a finite float array of shape (2,)."""
    arr = np.asarray(v, dtype=float)
    if arr.shape != (2,):
        raise ValueError(f"{name} must have shape (2,), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {arr}")
    return arr


def _as_points(v, name: str, allow_empty: bool = False) -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.size == 0:
        if not allow_empty:
            raise ValueError(f"{name} must contain at least one point")
        return arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"{name} must have shape (k, 2), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True, eq=False)
class WorldState:
    """Positions of every sheep and every dog at one instant.

    ``sheep`` has shape (m, 2) with m >= 1; ``dogs`` has shape (n, 2)
    and may be empty (a dogless world is the negative control for the
    whole pipeline). Agent index is agent identity for an entire run.
    """

    sheep: np.ndarray
    dogs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "sheep", _as_points(self.sheep, "sheep"))
        object.__setattr__(self, "dogs", _as_points(self.dogs, "dogs", allow_empty=True))
        object.__setattr__(self, "time", float(self.time))

    @property
    def n_sheep(self) -> int:
        return self.sheep.shape[0]

    @property
    def n_dogs(self) -> int:
        return self.dogs.shape[0]


@dataclass(frozen=True, eq=False)
class SheepParams:
    """Gains of the flock velocity field.

    k_s : cohesion/separation gain (1/s)
    k_g : goal attraction gain (1/s)
    k_d : dog repulsion gain (m^3/s)
    r_s : inter-sheep safety margin (m); pairs closer than this repel
    goal : shared goal position (m)
    """

    k_s: float
    k_g: float
    k_d: float
    r_s: float
    goal: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        object.__setattr__(self, "goal", as_vec2(self.goal, "goal"))
        for nm in ("k_s", "k_g", "k_d", "r_s"):
            object.__setattr__(self, nm, float(getattr(self, nm)))
        if self.k_s < 0 or self.k_g < 0 or self.k_d < 0:
            raise ValueError("gains must be nonnegative")
        if self.r_s <= 0:
            raise ValueError("r_s must be positive")


@dataclass(frozen=True, eq=False)
class Zone:
    """A protected disc: no sheep may come within radius+buffer of center."""

    center: np.ndarray
    radius: float
    buffer: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec2(self.center, "zone center"))
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "buffer", float(self.buffer))
        if self.radius <= 0:
            raise ValueError("zone radius must be positive")
        if self.buffer < 0:
            raise ValueError("zone buffer must be nonnegative")

    @property
    def inflated_radius(self) -> float:
        return self.radius + self.buffer


def _check_sheep_index(w: WorldState, i: int) -> None:
    if not 0 <= i < w.n_sheep:
        raise IndexError(f"sheep index {i} out of range [0, {w.n_sheep})")


def _check_dog_index(w: WorldState, l: int) -> None:
    if not 0 <= l < w.n_dogs:
        raise IndexError(f"dog index {l} out of range [0, {w.n_dogs})")


def _guard_distances(r: np.ndarray, what: str, i: int) -> None:
    if r.size and float(r.min()) < DISTANCE_EPS:
        j = int(r.argmin())
        raise DegenerateGeometryError(
            f"sheep {i} is coincident with {what} {j} (distance {r.min():.3e})"
        )


def sheep_velocity(w: WorldState, p: SheepParams, i: int) -> np.ndarray:
    """Velocity of sheep ``i`` under the flock dynamics.

    Returns
    -------
    ndarray, shape (2,)
        k_s * sum_{j != i} (1 - r_s^3/|d_ji|^3) d_ji
        + k_g (goal - x_i)
        + k_d * sum_l (x_i - x_Dl) / |x_i - x_Dl|^3
        with d_ji = x_j - x_i.
    """
    _check_sheep_index(w, i)
    xi = w.sheep[i]
    out = p.k_g * (p.goal - xi)

    if w.n_sheep > 1:
        d = np.delete(w.sheep, i, axis=0) - xi
        r = np.linalg.norm(d, axis=1)
        _guard_distances(r, "sheep", i)
        out = out + p.k_s * ((1.0 - p.r_s**3 / r**3)[:, None] * d).sum(axis=0)

    if w.n_dogs:
        e = xi - w.dogs
        r = np.linalg.norm(e, axis=1)
        _guard_distances(r, "dog", i)
        out = out + p.k_d * (e / (r**3)[:, None]).sum(axis=0)

    return out


def sheep_velocities(w: WorldState, p: SheepParams) -> np.ndarray:
    """Stacked ``sheep_velocity`` for every sheep, shape (m, 2)."""
    return np.array([sheep_velocity(w, p, i) for i in range(w.n_sheep)])


def jac_sheep_wrt_sheep(w: WorldState, p: SheepParams, i: int, j: int) -> np.ndarray:
    """d f_i / d x_{S_j} for j != i, a 2x2 block.

    Equals k_s [ (1 - r_s^3/r^3) I + 3 r_s^3 d d^T / r^5 ],
    d = x_j - x_i, r = |d|.
    """
    _check_sheep_index(w, i)
    _check_sheep_index(w, j)
    if i == j:
        raise ValueError("use jac_sheep_self for the i == j block")
    d = w.sheep[j] - w.sheep[i]
    r = float(np.linalg.norm(d))
    _guard_distances(np.array([r]), "sheep", i)
    return p.k_s * (
        (1.0 - p.r_s**3 / r**3) * np.eye(2) + 3.0 * p.r_s**3 * np.outer(d, d) / r**5
    )


def jac_sheep_wrt_dog(w: WorldState, p: SheepParams, i: int, l: int) -> np.ndarray:
    """d f_i / d x_{D_l}, a 2x2 block.

    Equals k_d [ -I/r^3 + 3 d d^T / r^5 ], d = x_i - x_Dl, r = |d|.
    Its determinant is -2 k_d^2 / r^6: strictly negative for any finite
    separation, so the block never has a null space.
    """
    _check_sheep_index(w, i)
    _check_dog_index(w, l)
    d = w.sheep[i] - w.dogs[l]
    r = float(np.linalg.norm(d))
    _guard_distances(np.array([r]), "dog", i)
    return p.k_d * (-np.eye(2) / r**3 + 3.0 * np.outer(d, d) / r**5)


def dog_jacobian_blocks(w: WorldState, p: SheepParams, i: int) -> np.ndarray:
    """All d f_i / d x_{D_l} blocks at once, shape (n_dogs, 2, 2)."""
    _check_sheep_index(w, i)
    if not w.n_dogs:
        return np.zeros((0, 2, 2))
    e = w.sheep[i] - w.dogs
    r = np.linalg.norm(e, axis=1)
    _guard_distances(r, "dog", i)
    eye = np.eye(2)[None, :, :]
    outer = e[:, :, None] * e[:, None, :]
    return p.k_d * (-eye / (r**3)[:, None, None] + 3.0 * outer / (r**5)[:, None, None])


def jac_sheep_self(w: WorldState, p: SheepParams, i: int) -> np.ndarray:
    """d f_i / d x_{S_i}, a 2x2 block.

    By translation invariance of the pairwise terms this is
    - sum_{j != i} jac_sheep_wrt_sheep(i, j) - k_g I
    - sum_l jac_sheep_wrt_dog(i, l).
    """
    _check_sheep_index(w, i)
    out = -p.k_g * np.eye(2)
    for j in range(w.n_sheep):
        if j != i:
            out = out - jac_sheep_wrt_sheep(w, p, i, j)
    if w.n_dogs:
        out = out - dog_jacobian_blocks(w, p, i).sum(axis=0)
    return out


def flow_jacobian_sum(w: WorldState, p: SheepParams, i: int, f_all: np.ndarray) -> np.ndarray:
    """sum_j (d f_i / d x_{S_j}) f_j over every sheep j, including j = i.

    This is the sheep-driven part of d/dt f_i along the flow; ``f_all``
    must hold the current sheep velocities, shape (m, 2).
    """
    _check_sheep_index(w, i)
    out = jac_sheep_self(w, p, i) @ f_all[i]
    for j in range(w.n_sheep):
        if j != i:
            out = out + jac_sheep_wrt_sheep(w, p, i, j) @ f_all[j]
    return out


class FieldBatch:
    """Velocity field and every Jacobian block of one state, vectorized.

    One construction does all the pairwise work the constraint builders
    need: ``f`` (m, 2) sheep velocities, ``jac_sheep`` (m, m, 2, 2)
    with [j, i] = d f_i / d x_{S_j} (diagonal [i, i] holds the self
    block), and ``jac_dog`` (m, n, 2, 2) with [i, l] = d f_i / d x_{D_l}.
    Agrees with the per-index operations to floating-point roundoff.
    """

    def __init__(self, w: WorldState, p: SheepParams):
        m, n = w.n_sheep, w.n_dogs
        eye = np.eye(2)

        d = w.sheep[None, :, :] - w.sheep[:, None, :]  # d[i, j] = x_j - x_i
        r2 = np.einsum("ija,ija->ij", d, d)
        np.fill_diagonal(r2, 1.0)
        r = np.sqrt(r2)
        if m > 1:
            off = ~np.eye(m, dtype=bool)
            rmin = float(r[off].min())
            if rmin < DISTANCE_EPS:
                i, j = divmod(int(np.where(off, r, np.inf).argmin()), m)
                raise DegenerateGeometryError(
                    f"sheep {i} is coincident with sheep {j} (distance {rmin:.3e})"
                )

        fac = 1.0 - p.r_s**3 / r**3
        np.fill_diagonal(fac, 0.0)
        f = p.k_s * np.einsum("ij,ija->ia", fac, d) + p.k_g * (p.goal - w.sheep)

        # jac_pair[i, j] = d f_i / d x_{S_j} for j != i
        outer = d[:, :, :, None] * d[:, :, None, :]
        jac_pair = p.k_s * (
            fac[:, :, None, None] * eye
            + 3.0 * p.r_s**3 * outer / (r**5)[:, :, None, None]
        )
        jac_pair[np.arange(m), np.arange(m)] = 0.0

        if n:
            e = w.sheep[:, None, :] - w.dogs[None, :, :]  # e[i, l] = x_i - x_Dl
            q2 = np.einsum("ila,ila->il", e, e)
            q = np.sqrt(q2)
            qmin = float(q.min())
            if qmin < DISTANCE_EPS:
                i, l = divmod(int(q.argmin()), n)
                raise DegenerateGeometryError(
                    f"sheep {i} is coincident with dog {l} (distance {qmin:.3e})"
                )
            f = f + p.k_d * np.einsum("ila,il->ia", e, 1.0 / q**3)
            outer_d = e[:, :, :, None] * e[:, :, None, :]
            jac_dog = p.k_d * (
                -eye / (q**3)[:, :, None, None]
                + 3.0 * outer_d / (q**5)[:, :, None, None]
            )
        else:
            jac_dog = np.zeros((m, 0, 2, 2))

        # self block by translation invariance of the pairwise terms
        jac_self = -jac_pair.sum(axis=1) - p.k_g * eye - jac_dog.sum(axis=1)
        jac_sheep = jac_pair.transpose(1, 0, 2, 3).copy()  # [j, i] = J of f_i wrt x_j
        jac_sheep[np.arange(m), np.arange(m)] = jac_self

        self.f = f
        self.jac_sheep = jac_sheep
        self.jac_dog = jac_dog
        # drift[i] = sum_j (d f_i / d x_{S_j}) f_j, the sheep-driven
        # part of d/dt f_i along the flow
        self.drift = np.einsum("jiab,jb->ia", jac_sheep, f)
