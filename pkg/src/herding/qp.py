"""Exact solver for small min-norm QPs: argmin |u|^2 s.t. A u <= b.

The herding constraint sets are tiny (at most sheep x zones rows, at
most 2*n_dogs variables), so the optimum is found exactly by active-set
enumeration: for a feasible problem the unique minimizer is the
least-norm solution of some subset of rows taken as equalities, with
nonnegative multipliers. Subsets are visited smallest-first in a fixed
order, which makes the reported active set deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

FEAS_TOL = 1e-9
MULT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QpProblem:
    """Row-wise inequality system over ``dim`` variables."""

    a_rows: np.ndarray
    b: np.ndarray
    dim: int

    def __post_init__(self):
        rhs = np.asarray(self.b, dtype=float).reshape(-1)
        a = np.asarray(self.a_rows, dtype=float).reshape(rhs.shape[0], self.dim)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(rhs))):
            raise ValueError("problem data must be finite")
        object.__setattr__(self, "a_rows", a)
        object.__setattr__(self, "b", rhs)


@dataclass(frozen=True, eq=False)
class QpSolution:
    """Optimal point, tight rows, and status ('optimal' | 'infeasible')."""

    u: np.ndarray
    active_set: tuple[int, ...]
    status: str

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _finish(u: np.ndarray, a: np.ndarray, b: np.ndarray, idx: np.ndarray) -> QpSolution:
    if a.shape[0]:
        tight = np.abs(a @ u - b) <= FEAS_TOL * np.maximum(1.0, np.abs(b))
        active = tuple(int(i) for i in idx[tight])
    else:
        active = ()
    return QpSolution(u=u, active_set=active, status="optimal")


def solve_min_norm(qp: QpProblem) -> QpSolution:
    """Exact optimum of argmin |u|^2 subject to the problem's rows.

    Zero rows are vacuous when their rhs is nonnegative and certify
    infeasibility otherwise. A single remaining row is projected in
    closed form; several rows go through subset enumeration. Returns
    status 'infeasible' instead of raising when no point satisfies
    every row.
    """
    dim = qp.dim
    a_full, b_full = qp.a_rows, qp.b

    # Zero rows constrain nothing but can be flatly contradictory.
    if a_full.shape[0]:
        norms = np.linalg.norm(a_full, axis=1)
        zero = norms <= 0.0
        if np.any(zero) and np.any(b_full[zero] < -FEAS_TOL):
            return QpSolution(np.zeros(dim), (), "infeasible")
        keep = ~zero
        a, b, idx = a_full[keep], b_full[keep], np.flatnonzero(keep)
    else:
        a, b, idx = a_full, b_full, np.array([], dtype=int)

    n_rows = a.shape[0]
    if n_rows == 0 or dim == 0:
        # No effective rows: the origin is optimal. With no variables the
        # empty vector is the whole space, feasible iff every rhs >= 0.
        if dim == 0 and np.any(b < -FEAS_TOL):
            return QpSolution(np.zeros(0), (), "infeasible")
        return _finish(np.zeros(dim), a, b, idx)

    if np.all(b >= -FEAS_TOL):
        # Origin feasible: it is the unconstrained minimizer.
        return _finish(np.zeros(dim), a, b, idx)

    if n_rows == 1:
        u = a[0] * (min(float(b[0]), 0.0) / float(a[0] @ a[0]))
        return _finish(u, a, b, idx)

    scale = np.maximum(1.0, np.abs(b))
    for size in range(1, min(n_rows, dim) + 1):
        for subset in combinations(range(n_rows), size):
            rows = a[list(subset)]
            rhs = b[list(subset)]
            gram = rows @ rows.T
            try:
                y = np.linalg.solve(gram, rhs)
            except np.linalg.LinAlgError:
                continue
            # Guard against near-singular Gram systems.
            if not np.all(np.isfinite(y)):
                continue
            if np.linalg.norm(gram @ y - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
                continue
            # Multipliers are -2y; optimality needs them nonnegative.
            if np.any(y > MULT_TOL):
                continue
            u = rows.T @ y
            if np.all(a @ u - b <= FEAS_TOL * scale):
                return _finish(u, a, b, idx)

    return QpSolution(np.zeros(dim), (), "infeasible")
