"""Force-density equilibrium of pin-jointed structures.

The force density of a member is its axial force divided by its length.
With force densities fixed, nodal equilibrium is linear in the nodal
coordinates: Q x = p_x and Q y = p_y, where Q is assembled from the
member force densities and the connectivity. Partitioning nodes into
free and fixed (supports plus loaded nodes, which carry all the loads)
gives a linear solve for the free coordinates,

    Q_free x_free = -Q_link x_fix

and the loads/reactions at the fixed nodes are recovered from the lower
block rows. Free-node coordinates scale exactly with the fixed-node
coordinates (per direction), which is what makes the force-density
parameterization attractive for shape optimization: member lengths may
pass through zero without making this solve singular.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lapack

from .errors import SingularEquilibrium
from .ground import GroundStructure, scale_structure

#: condition-estimate threshold above which a factorization is treated as
#: singular (same policy for equilibrium and stiffness solves)
COND_LIMIT = 1e12

#: default box bounds on force densities, large enough not to bind
DEFAULT_Q_BOUND = 1000.0


@dataclass
class ForceDensityVector:
    """Design variables: one force density per member, clamped to a box."""

    q: np.ndarray
    q_lower: np.ndarray | float = -DEFAULT_Q_BOUND
    q_upper: np.ndarray | float = DEFAULT_Q_BOUND

    def __post_init__(self):
        self.q = np.clip(np.asarray(self.q, dtype=float),
                         self.q_lower, self.q_upper)

    def __len__(self):
        return self.q.size


def as_density_array(q, m=None):
    """Accept a ForceDensityVector or a plain array of force densities."""
    arr = q.q if isinstance(q, ForceDensityVector) else np.asarray(q, dtype=float)
    if m is not None and arr.size != m:
        raise ValueError(f"expected {m} force densities, got {arr.size}")
    return arr


@dataclass
class ForceDensityMatrix:
    """Force-density matrix in free/fixed partition blocks.

    The full matrix is symmetric with zero row sums: member k between
    nodes (a, b) adds +q_k to both diagonal entries and -q_k to both
    off-diagonal entries (a, b) and (b, a).
    """

    Q_free: np.ndarray
    Q_link: np.ndarray
    Q_fix: np.ndarray
    free_index: np.ndarray
    fixed_index: np.ndarray

    def full(self):
        """Reassemble the n-by-n matrix in original node order."""
        n = self.free_index.size + self.fixed_index.size
        Q = np.zeros((n, n))
        Q[np.ix_(self.free_index, self.free_index)] = self.Q_free
        Q[np.ix_(self.free_index, self.fixed_index)] = self.Q_link
        Q[np.ix_(self.fixed_index, self.free_index)] = self.Q_link.T
        Q[np.ix_(self.fixed_index, self.fixed_index)] = self.Q_fix
        return Q


@dataclass
class EquilibriumGeometry:
    """Nodal coordinates in force-density equilibrium.

    dx, dy and lengths are per-member coordinate differences and lengths
    (lengths[i]^2 == dx[i]^2 + dy[i]^2 by construction). reactions_x/y
    are the fixed-node load vectors recovered from the lower block rows;
    at supports these are reactions, at loaded nodes applied loads.
    """

    x: np.ndarray
    y: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    lengths: np.ndarray
    reactions_x: np.ndarray
    reactions_y: np.ndarray


def assemble(g: GroundStructure, q) -> ForceDensityMatrix:
    """Assemble the force-density matrix blocks for densities q."""
    qa = as_density_array(q, g.m)
    qC_free = qa[:, None] * g._C_free
    Q_free = g._C_free.T @ qC_free
    Q_link = qC_free.T @ g._C_fix
    Q_fix = g._C_fix.T @ (qa[:, None] * g._C_fix)
    return ForceDensityMatrix(Q_free, Q_link, Q_fix,
                              g.free_index, g.fixed_index)


def solve_free_coordinates(g: GroundStructure, q) -> EquilibriumGeometry:
    """Solve the partitioned equilibrium for the free-node coordinates.

    No loads act on free nodes, so the right-hand side comes entirely
    from the fixed-node coordinates. Free nodes all of whose members
    have exactly zero force density have no equations binding them (the
    topology has removed them); they keep their reference coordinates
    and are left out of the solve. Raises SingularEquilibrium when every
    density is zero or when the live free block is singular or has a
    condition estimate above COND_LIMIT (a mechanism-like candidate).
    """
    qa = as_density_array(q, g.m)
    if not np.any(qa):
        raise SingularEquilibrium("all force densities are zero")
    fdmx = assemble(g, qa)
    x = np.empty(g.n)
    y = np.empty(g.n)
    x[g.fixed_index] = g.x_fix
    y[g.fixed_index] = g.y_fix
    x[g.free_index] = g.x0_free
    y[g.free_index] = g.y0_free
    nfree = g.free_index.size
    xy_free = np.column_stack([g.x0_free, g.y0_free])
    if nfree:
        touched = np.zeros(g.n, dtype=bool)
        nz = qa != 0.0
        touched[g._ia[nz]] = True
        touched[g._ib[nz]] = True
        live = touched[g.free_index]
        Qff = fdmx.Q_free
        Qfl = fdmx.Q_link
        if not live.all():
            Qff = Qff[np.ix_(live, live)]
            Qfl = Qfl[live]
        if live.any():
            sol = _solve_checked(Qff, -(Qfl @ g._fix_xy))
            xy_free[live] = sol
            x[g.free_index[live]] = sol[:, 0]
            y[g.free_index[live]] = sol[:, 1]
    react = fdmx.Q_link.T @ xy_free + fdmx.Q_fix @ g._fix_xy
    dx = x[g._ib] - x[g._ia]
    dy = y[g._ib] - y[g._ia]
    lengths = np.sqrt(dx * dx + dy * dy)
    return EquilibriumGeometry(x, y, dx, dy, lengths,
                               react[:, 0], react[:, 1])


def _solve_checked(A, rhs):
    """LU solve with a reciprocal-condition check on the factorization."""
    anorm = np.abs(A).sum(axis=0).max()
    lu, piv, info = lapack.dgetrf(A)
    if info != 0:
        raise SingularEquilibrium("equilibrium block is exactly singular")
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    if not np.isfinite(rcond) or rcond < 1.0 / COND_LIMIT:
        raise SingularEquilibrium(
            f"free-node equilibrium block condition {1.0 / max(rcond, 1e-300):.3e}")
    sol, info = lapack.dgetrs(lu, piv, rhs)
    if info != 0:
        raise SingularEquilibrium("equilibrium solve failed")
    return sol


@dataclass
class AffineScalingReport:
    """Measured invariance of the equilibrium solve under axis scaling."""

    alpha: float
    x_discrepancy: float
    y_discrepancy: float

    @property
    def max_discrepancy(self):
        return max(self.x_discrepancy, self.y_discrepancy)


def _rel_diff(a, b):
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(b), initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(a - b), initial=0.0) / scale)


def check_affine_scaling(g: GroundStructure, q, alpha) -> AffineScalingReport:
    """Compare alpha-scaled free coordinates against solving the
    alpha-scaled structure with the same force densities.

    Scaling the fixed x-coordinates by alpha must scale the free
    x-coordinates by alpha exactly (and likewise in y); this reports the
    max relative discrepancy actually observed for each direction.
    """
    base = solve_free_coordinates(g, q)
    xs = solve_free_coordinates(scale_structure(g, alpha, 1.0), q)
    ys = solve_free_coordinates(scale_structure(g, 1.0, alpha), q)
    free = g.free_index
    return AffineScalingReport(
        alpha=float(alpha),
        x_discrepancy=_rel_diff(alpha * base.x[free], xs.x[free]),
        y_discrepancy=_rel_diff(alpha * base.y[free], ys.y[free]),
    )
