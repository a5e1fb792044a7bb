"""Dense linear programming with certificates.

A two-phase primal simplex on small dense problems.  Every verdict is backed
by a machine-checkable artifact: optimal solves carry dual multipliers with a
verified duality gap, infeasible solves carry a Farkas certificate, unbounded
solves carry an improving ray.  Numerical failure raises ``SolverError``
rather than returning a wrong status.

Problems are stated as

    maximize    objective . x
    subject to  a_ub @ x <= b_ub
                a_eq @ x == b_eq
                x_i >= lower_i        (``None`` marks a free variable)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import SolverError

FEASIBILITY_TOL = 1e-9
DUALITY_GAP_TOL = 1e-8
_COST_TOL = 1e-10
_PIVOT_TOL = 1e-10
_DEGENERATE_STREAK_LIMIT = 30


@dataclass(frozen=True)
class LinearProgram:
    """Immutable LP in maximization form.  Use :meth:`build` to construct."""

    objective: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    a_eq: np.ndarray
    b_eq: np.ndarray
    lower: tuple

    @staticmethod
    def build(
        objective: Sequence[float],
        a_ub=None,
        b_ub=None,
        a_eq=None,
        b_eq=None,
        lower: Union[float, None, Sequence] = 0.0,
    ) -> "LinearProgram":
        c = np.atleast_1d(np.asarray(objective, dtype=float))
        if c.ndim != 1 or c.size == 0:
            raise ValueError("objective must be a nonempty vector")
        n = c.shape[0]

        def _rows(a, b, tag):
            if a is None and b is None:
                return np.zeros((0, n)), np.zeros(0)
            a = np.asarray(a, dtype=float)
            a = a.reshape(-1, n) if a.size else np.zeros((0, n))
            b = np.atleast_1d(np.asarray(b, dtype=float)) if b is not None else np.zeros(0)
            if a.shape[0] != b.shape[0]:
                raise ValueError(f"{tag}: row count mismatch ({a.shape[0]} vs {b.shape[0]})")
            return a, b

        a_ub, b_ub = _rows(a_ub, b_ub, "a_ub/b_ub")
        a_eq, b_eq = _rows(a_eq, b_eq, "a_eq/b_eq")

        if lower is None or np.isscalar(lower):
            bounds = (None if lower is None else float(lower),) * n
        else:
            if len(lower) != n:
                raise ValueError("lower bounds length mismatch")
            bounds = tuple(None if l is None else float(l) for l in lower)

        for arr, tag in ((c, "objective"), (a_ub, "a_ub"), (b_ub, "b_ub"), (a_eq, "a_eq"), (b_eq, "b_eq")):
            if arr.size and not np.all(np.isfinite(arr)):
                raise ValueError(f"{tag} contains non-finite coefficients")
        if any(b is not None and not np.isfinite(b) for b in bounds):
            raise ValueError("lower bounds must be finite or None")

        return LinearProgram(c, a_ub, b_ub, a_eq, b_eq, bounds)

    @property
    def n_vars(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class FarkasCertificate:
    """Multipliers proving infeasibility of the constraint system.

    ``y_ub >= 0`` on inequality rows, ``y_eq`` free on equality rows and
    ``y_lower >= 0`` on the bound rows ``-x_i <= -lower_i``.  The aggregated
    constraint ``y_ub.A_ub + y_eq.A_eq - y_lower == 0`` has right-hand side
    ``y_ub.b_ub + y_eq.b_eq - y_lower.lower < 0``: no ``x`` can satisfy it.
    """

    y_ub: np.ndarray
    y_eq: np.ndarray
    y_lower: np.ndarray

    def combination(self, lp: LinearProgram) -> np.ndarray:
        combo = self.y_ub @ lp.a_ub + self.y_eq @ lp.a_eq
        return combo - self.y_lower

    def value(self, lp: LinearProgram) -> float:
        low = np.array([0.0 if l is None else l for l in lp.lower])
        return float(self.y_ub @ lp.b_ub + self.y_eq @ lp.b_eq - self.y_lower @ low)

    def as_inequality_form(self, lp: LinearProgram):
        """Expand to the all-``<=`` canonicalization: ``y >= 0``, ``y.A = 0``, ``y.b < 0``."""
        n = lp.n_vars
        bounded = [i for i, l in enumerate(lp.lower) if l is not None]
        bound_rows = -np.eye(n)[bounded]
        bound_rhs = np.array([-lp.lower[i] for i in bounded])
        a_all = np.vstack([lp.a_ub, lp.a_eq, -lp.a_eq, bound_rows])
        b_all = np.concatenate([lp.b_ub, lp.b_eq, -lp.b_eq, bound_rhs])
        y = np.concatenate(
            [
                self.y_ub,
                np.maximum(self.y_eq, 0.0),
                np.maximum(-self.y_eq, 0.0),
                self.y_lower[bounded],
            ]
        )
        return y, a_all, b_all


@dataclass(frozen=True)
class LpOutcome:
    """Result of :func:`solve_lp`.

    ``status`` is one of ``optimal``, ``infeasible``, ``unbounded``.  Optimal
    outcomes carry the primal point, dual multipliers and the verified dual
    objective; the other two carry their respective certificates.
    """

    status: str
    value: Optional[float] = None
    x: Optional[np.ndarray] = None
    dual_ub: Optional[np.ndarray] = None
    dual_eq: Optional[np.ndarray] = None
    dual_lower: Optional[np.ndarray] = None
    dual_value: Optional[float] = None
    farkas: Optional[FarkasCertificate] = None
    ray: Optional[np.ndarray] = None
    iterations: int = 0


class _Standardized:
    """Conversion of a :class:`LinearProgram` to equality standard form."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        n = lp.n_vars
        self.shift = np.array([0.0 if l is None else l for l in lp.lower])

        # Column layout: one column per bounded variable, two per free one.
        cols = []  # per std column: (orig index, sign)
        self.var_cols: list[tuple[int, ...]] = []
        for i, l in enumerate(lp.lower):
            if l is None:
                self.var_cols.append((len(cols), len(cols) + 1))
                cols.append((i, 1.0))
                cols.append((i, -1.0))
            else:
                self.var_cols.append((len(cols),))
                cols.append((i, 1.0))
        a_orig = np.vstack([lp.a_ub, lp.a_eq]) if (lp.a_ub.size or lp.a_eq.size) else np.zeros((0, n))
        m_ub = lp.a_ub.shape[0]
        m = a_orig.shape[0]
        rhs = np.concatenate([lp.b_ub, lp.b_eq]) - a_orig @ self.shift

        # Row equilibration: divide each row by its sup-norm for conditioning.
        row_norm = np.abs(a_orig).max(axis=1) if m else np.zeros(0)
        self.row_scale = np.where(row_norm > 1e-300, row_norm, 1.0)
        a_orig = a_orig / self.row_scale[:, None]
        rhs = rhs / self.row_scale

        a_vars = np.zeros((m, len(cols)))
        for j, (i, sgn) in enumerate(cols):
            a_vars[:, j] = sgn * a_orig[:, i]
        self.cols = cols

        slack = np.zeros((m, m_ub))
        slack[:m_ub, :] = np.eye(m_ub)
        a_aug = np.hstack([a_vars, slack])

        self.sigma = np.where(rhs < 0, -1.0, 1.0)
        self.a = a_aug * self.sigma[:, None]
        self.b = rhs * self.sigma
        self.m_ub = m_ub
        self.m = m
        self.n_cols = len(cols)
        self.n_slack = m_ub
        self.slack_col = lambda row: self.n_cols + row  # rows < m_ub only

        # Minimization objective on standardized columns.
        c = np.zeros(self.a.shape[1])
        for j, (i, sgn) in enumerate(cols):
            c[j] = -sgn * lp.objective[i]
        self.c = c

    def x_from_std(self, u: np.ndarray) -> np.ndarray:
        x = self.shift.copy()
        for i, idx in enumerate(self.var_cols):
            if len(idx) == 1:
                x[i] += u[idx[0]]
            else:
                x[i] += u[idx[0]] - u[idx[1]]
        return x

    def direction_from_std(self, du: np.ndarray) -> np.ndarray:
        d = np.zeros(self.lp.n_vars)
        for i, idx in enumerate(self.var_cols):
            if len(idx) == 1:
                d[i] = du[idx[0]]
            else:
                d[i] = du[idx[0]] - du[idx[1]]
        return d


def _simplex(a, b, c, basis, allowed, max_iter):
    """Primal simplex on ``min c.u s.t. a u = b, u >= 0`` from a feasible basis.

    Dantzig pricing with a permanent switch to Bland's rule after a run of
    degenerate pivots, which guarantees termination.  Returns
    ``(status, basis, x_basic, entering, direction, iterations)`` where status
    is ``optimal`` or ``unbounded``.
    """
    m = a.shape[0]
    if m == 0:
        neg = np.nonzero((c < -_COST_TOL) & allowed)[0]
        if neg.size:
            return "unbounded", basis, np.zeros(0), int(neg[0]), np.zeros(0), 0
        return "optimal", basis, np.zeros(0), None, None, 0

    bland = False
    streak = 0
    iterations = 0
    while True:
        if iterations > max_iter:
            raise SolverError(f"simplex iteration budget ({max_iter}) exceeded")
        basis_mat = a[:, basis]
        try:
            x_basic = np.linalg.solve(basis_mat, b)
            y = np.linalg.solve(basis_mat.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular basis encountered") from exc
        reduced = c - y @ a
        reduced[~allowed] = 0.0
        reduced[basis] = 0.0

        if bland:
            candidates = np.nonzero(reduced < -_COST_TOL)[0]
            optimal = candidates.size == 0
            entering = None if optimal else int(candidates[0])
        else:
            entering = int(np.argmin(reduced))
            optimal = reduced[entering] >= -_COST_TOL
        if optimal:
            # one step of iterative refinement against basis-solve drift
            residual = b - basis_mat @ x_basic
            if np.abs(residual).max(initial=0.0) > 1e-14:
                x_basic = x_basic + np.linalg.solve(basis_mat, residual)
            return "optimal", basis, x_basic, None, None, iterations

        direction = np.linalg.solve(basis_mat, a[:, entering])
        positive = direction > _PIVOT_TOL
        if not positive.any():
            return "unbounded", basis, x_basic, entering, direction, iterations

        ratios = np.full(m, np.inf)
        ratios[positive] = np.maximum(x_basic[positive], 0.0) / direction[positive]
        theta = ratios.min()
        ties = np.nonzero(ratios <= theta + 1e-12)[0]
        # Smallest basic-variable index among ties keeps pivoting deterministic.
        leaving = int(min(ties, key=lambda r: basis[r]))

        streak = streak + 1 if theta <= 1e-12 else 0
        if streak > _DEGENERATE_STREAK_LIMIT:
            bland = True

        basis[leaving] = entering
        iterations += 1


def solve_lp(lp: LinearProgram, max_iter: Optional[int] = None) -> LpOutcome:
    """Solve ``lp``, returning a certified :class:`LpOutcome`."""
    std = _Standardized(lp)
    a, b, c = std.a, std.b, std.c
    m = std.m
    n_total = a.shape[1]
    if max_iter is None:
        max_iter = 200 + 50 * (m + n_total)

    basis = np.empty(m, dtype=int)
    needs_artificial = []
    for row in range(m):
        if row < std.m_ub and std.sigma[row] > 0:
            basis[row] = std.slack_col(row)
        else:
            needs_artificial.append(row)

    total_iters = 0
    active_rows = np.arange(m)

    if needs_artificial:
        art_cols = np.zeros((m, len(needs_artificial)))
        for k, row in enumerate(needs_artificial):
            art_cols[row, k] = 1.0
            basis[row] = n_total + k
        a1 = np.hstack([a, art_cols])
        c1 = np.concatenate([np.zeros(n_total), np.ones(len(needs_artificial))])
        allowed = np.ones(a1.shape[1], dtype=bool)
        status, basis, x_basic, _, _, iters = _simplex(a1, b, c1, basis, allowed, max_iter)
        total_iters += iters
        if status != "optimal":
            raise SolverError("phase-1 simplex reported unbounded (internal error)")
        phase1_value = float(c1[basis] @ x_basic)
        if phase1_value > FEASIBILITY_TOL * (1.0 + abs(b).max(initial=0.0)):
            y = np.linalg.solve(a1[:, basis].T, c1[basis])
            return _infeasible_outcome(lp, std, y, total_iters)

        # Drive artificials out of the basis; rows that cannot pivot are redundant.
        keep = np.ones(m, dtype=bool)
        for row in range(m):
            if basis[row] < n_total:
                continue
            basis_mat = a1[:, basis]
            w = np.linalg.solve(basis_mat.T, np.eye(m)[row])
            tableau_row = w @ a
            pivots = np.nonzero(np.abs(tableau_row) > 1e-8)[0]
            pivots = [j for j in pivots if j not in set(basis.tolist())]
            if pivots:
                basis[row] = int(pivots[0])
            else:
                keep[row] = False
        if not keep.all():
            active_rows = np.nonzero(keep)[0]
            a = a[keep]
            b = b[keep]
            basis = basis[keep]

    allowed = np.ones(a.shape[1], dtype=bool)
    status, basis, x_basic, entering, direction, iters = _simplex(a, b, c, basis, allowed, max_iter)
    total_iters += iters

    if status == "unbounded":
        du = np.zeros(n_total)
        du[entering] = 1.0
        if len(basis):
            du[basis] = -direction
        ray = std.direction_from_std(du)
        return LpOutcome(status="unbounded", ray=ray, iterations=total_iters)

    u = np.zeros(n_total)
    if len(basis):
        u[basis] = np.maximum(x_basic, 0.0)
    x = std.x_from_std(u)
    value = float(lp.objective @ x)

    y_active = np.linalg.solve(a[:, basis].T, c[basis]) if len(basis) else np.zeros(0)
    y_full = np.zeros(m)
    y_full[active_rows] = y_active
    y_hat = std.sigma * y_full / std.row_scale
    dual_ub = np.maximum(-y_hat[: std.m_ub], 0.0)
    dual_eq = -y_hat[std.m_ub :]
    reduced = dual_ub @ lp.a_ub + dual_eq @ lp.a_eq - lp.objective
    dual_lower = np.array(
        [max(reduced[i], 0.0) if lp.lower[i] is not None else 0.0 for i in range(lp.n_vars)]
    )
    low = np.array([0.0 if l is None else l for l in lp.lower])
    dual_value = float(dual_ub @ lp.b_ub + dual_eq @ lp.b_eq - dual_lower @ low)

    _verify_optimal(lp, x, value, dual_value)
    return LpOutcome(
        status="optimal",
        value=value,
        x=x,
        dual_ub=dual_ub,
        dual_eq=dual_eq,
        dual_lower=dual_lower,
        dual_value=dual_value,
        iterations=total_iters,
    )


def _infeasible_outcome(lp: LinearProgram, std: _Standardized, y_phase1: np.ndarray, iters: int) -> LpOutcome:
    y_hat = std.sigma * y_phase1 / std.row_scale
    y_ub = np.maximum(-y_hat[: std.m_ub], 0.0)
    y_eq = -y_hat[std.m_ub :]
    combo = y_ub @ lp.a_ub + y_eq @ lp.a_eq
    y_lower = np.array(
        [max(combo[i], 0.0) if lp.lower[i] is not None else 0.0 for i in range(lp.n_vars)]
    )
    cert = FarkasCertificate(y_ub=y_ub, y_eq=y_eq, y_lower=y_lower)
    scale = 1.0 + max(abs(cert.y_ub).max(initial=0.0), abs(cert.y_eq).max(initial=0.0), 1.0)
    if cert.value(lp) > -1e-12 or np.abs(cert.combination(lp)).max(initial=0.0) > 1e-7 * scale:
        raise SolverError("infeasibility detected but Farkas certificate failed verification")
    return LpOutcome(status="infeasible", farkas=cert, iterations=iters)


def _verify_optimal(lp: LinearProgram, x: np.ndarray, value: float, dual_value: float) -> None:
    scale = 1.0 + max(
        abs(lp.b_ub).max(initial=0.0), abs(lp.b_eq).max(initial=0.0), abs(x).max(initial=0.0)
    )
    residual = 0.0
    if lp.a_ub.size:
        residual = max(residual, float((lp.a_ub @ x - lp.b_ub).max()))
    if lp.a_eq.size:
        residual = max(residual, float(np.abs(lp.a_eq @ x - lp.b_eq).max()))
    for i, l in enumerate(lp.lower):
        if l is not None:
            residual = max(residual, l - x[i])
    if residual > FEASIBILITY_TOL * scale:
        raise SolverError(f"optimal point violates feasibility (residual {residual:.2e})")
    gap = abs(value - dual_value)
    if gap > DUALITY_GAP_TOL * (1.0 + abs(value)):
        raise SolverError(f"primal/dual objective gap {gap:.2e} exceeds tolerance")
