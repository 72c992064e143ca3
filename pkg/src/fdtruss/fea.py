"""Linear truss analysis that turns a force-density candidate into a
realized design.

A candidate q is realized in four steps:

1. take the fixed-node coordinates and q as given;
2. solve the force-density equilibrium for the free coordinates;
3. compute member lengths, assign areas A_i = L_i |q_i| / sigma_bar, and
   assemble the stiffness matrix with displacements constrained at the
   support nodes only (loaded nodes keep their location as a design
   datum but are free to displace);
4. solve for displacements under the applied loads and recover the
   member axial forces N~_i, hence the equilibrium-consistent force
   densities q~_i = N~_i / L_i.

q itself is only an auxiliary variable: the axial forces implied by q
balance the reactions the equilibrium solve produces at the fixed nodes,
not the actual applied loads, so the energy objectives are evaluated at
q~ rather than q. At a converged optimum the two coincide (the design is
fully stressed) and q~ is a fixed point of the map q -> q~(q).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularEquilibrium, SingularStiffness
from .fdm import EquilibriumGeometry, as_density_array, solve_free_coordinates
from .ground import GroundStructure

#: members with area below this fraction of the largest area are left out
#: of the stiffness assembly (their q~ is reported as zero)
AREA_FLOOR_REL = 1e-12

#: ersatz stiffness added to every unconstrained dof, relative to the
#: largest diagonal entry. Shape/topology candidates routinely leave
#: nodes held only by vanishing members or by exactly collinear chords;
#: their zero-stiffness transverse modes carry no load, and this floor
#: keeps the factorization well-posed without measurably perturbing the
#: load path (same scale as a floor-area member's own stiffness).
STIFFNESS_REG_REL = 1e-12


@dataclass
class StiffnessSystem:
    """Reduced stiffness system: constrained support components dropped."""

    K: np.ndarray
    f: np.ndarray
    u: np.ndarray


@dataclass
class TrussDesign:
    """A fully realized structure: geometry, member sizing and forces.

    areas follow A_i = L_i |q_i| / sigma_bar for the generating q;
    q_tilde and N_tilde come from the displacement solve. retained marks
    the members that entered the stiffness assembly.
    """

    structure: GroundStructure
    geometry: EquilibriumGeometry
    q: np.ndarray
    areas: np.ndarray
    sigma_bar: float
    E: float
    q_tilde: np.ndarray
    N_tilde: np.ndarray
    retained: np.ndarray
    system: StiffnessSystem

    def stresses(self):
        """Member stresses N~_i / A_i (zero for members below the floor)."""
        s = np.zeros(self.areas.size)
        s[self.retained] = self.N_tilde[self.retained] / self.areas[self.retained]
        return s

    def volume(self):
        return float(self.areas @ self.geometry.lengths)


def _analyze(g: GroundStructure, geom: EquilibriumGeometry, areas, E):
    """Displacement solve on a given geometry with explicit areas."""
    areas = np.asarray(areas, dtype=float)
    amax = areas.max(initial=0.0)
    if amax <= 0.0:
        raise SingularStiffness("all member areas are zero")
    retained = (areas >= AREA_FLOOR_REL * amax) & (geom.lengths > 0.0)
    if not retained.any():
        raise SingularStiffness("no members above the analysis floor")

    L = np.where(retained, geom.lengths, 1.0)
    c = np.where(retained, geom.dx / L, 0.0)
    s = np.where(retained, geom.dy / L, 0.0)
    ea_l = np.where(retained, E * areas / L, 0.0)
    ktype = np.empty((areas.size, 3))
    ktype[:, 0] = ea_l * c * c
    ktype[:, 1] = ea_l * c * s
    ktype[:, 2] = ea_l * s * s
    vals = (ktype[:, g._block_type] * g._block_sign).reshape(-1)[g._k_keep]

    ndof = g._ndof
    K = np.bincount(g._k_lin, weights=vals, minlength=ndof * ndof)
    K = K.reshape(ndof, ndof)
    f = g._f_red
    if ndof == 0:
        system = StiffnessSystem(K, f, np.zeros(0))
        zeros = np.zeros(g.m)
        return system, zeros, zeros.copy(), retained

    K.flat[:: ndof + 1] += STIFFNESS_REG_REL * K.diagonal().max()
    try:
        u = cho_solve(cho_factor(K, check_finite=False), f,
                      check_finite=False)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SingularStiffness(str(exc)) from exc
    if not np.isfinite(u).all():
        raise SingularStiffness("displacement solve overflowed")

    u_full = np.zeros(2 * g.n)
    u_full[g._dof_map >= 0] = u
    ia, ib = g._ia, g._ib
    elongation = (c * (u_full[2 * ib] - u_full[2 * ia])
                  + s * (u_full[2 * ib + 1] - u_full[2 * ia + 1]))
    N = ea_l * elongation

    # the ersatz diagonal must not carry the load: if the members account
    # for less than ~all of the external work, the load path is broken
    # (e.g. the loaded node hangs on floored members) and the candidate
    # is structurally meaningless
    total_work = float(f @ u)
    member_work = float(N @ elongation)
    if total_work > 0.0 and member_work < 0.99 * total_work:
        raise SingularStiffness(
            "load not carried by members (share %.3g)" %
            (member_work / total_work))

    q_tilde = np.where(retained, N / L, 0.0)
    return StiffnessSystem(K, f, u), N, q_tilde, retained


def realize_design(g: GroundStructure, q, sigma_bar, E=1.0) -> TrussDesign:
    """Run the four-step realization of a force-density candidate.

    Raises SingularEquilibrium if the free-coordinate solve fails and
    SingularStiffness if the sized structure is unstable; both mark the
    candidate infeasible for the optimizers.
    """
    qa = as_density_array(q, g.m)
    geom = solve_free_coordinates(g, qa)
    areas = geom.lengths * np.abs(qa) / sigma_bar
    system, N, q_tilde, retained = _analyze(g, geom, areas, E)
    return TrussDesign(g, geom, qa.copy(), areas, float(sigma_bar), float(E),
                       q_tilde, N, retained, system)


def compliance(d: TrussDesign, g: GroundStructure | None = None):
    """External work f.u of the applied loads on the realized design."""
    f = d.structure._f_red if g is None else g._f_red
    return float(f @ d.system.u)


def member_energy_compliance(d: TrussDesign):
    """Compliance recomputed as sum N~^2 L / (E A) over retained members.

    Equal to the external work for linear elasticity; used as a
    cross-check of the displacement solve.
    """
    r = d.retained
    return float(np.sum(d.N_tilde[r] ** 2 * d.geometry.lengths[r]
                        / (d.E * d.areas[r])))


#: fixed-point realization: members whose |q| falls below this fraction
#: of the largest |q| are snapped to exactly zero between iterations
CONSISTENCY_SNAP_REL = 1e-9


def realize_consistent(g: GroundStructure, q, sigma_bar, E=1.0,
                       max_iters=1000, tol_rel=1e-12,
                       snap_rel=CONSISTENCY_SNAP_REL):
    """Realize the fully-stressed design a candidate q encodes.

    The auxiliary q fixes the geometry, but its member magnitudes (hence
    the areas) need not match the forces the structure actually attracts.
    This iterates the redesign map q <- q~(q) -- resize every member to
    its analyzed force, vanishing members snapped to zero -- until the
    densities are a fixed point, i.e. the areas are consistent with the
    forces and every retained member is stressed to the reference level.
    At a converged optimum the map is already stationary and this is a
    no-op; for un-converged candidates (a GA genome, say) it completes
    the encoded layout into an analyzable fully-stressed truss.

    Returns (design, q_fixed). A full redesign step that leaves the
    analyzable set is retried with damping toward the current iterate;
    iteration stops at the last analyzable point if damping runs out.
    Raises like realize_design if even the initial q cannot be analyzed.
    """
    qa = as_density_array(q, g.m).copy()
    d = realize_design(g, qa, sigma_bar, E)
    for _ in range(max_iters):
        target = d.q_tilde.copy()
        scale = np.abs(target).max(initial=0.0)
        if scale <= 0.0:
            break
        target[np.abs(target) < snap_rel * scale] = 0.0
        d_next = None
        for damp in (1.0, 0.5, 0.25, 0.125):
            qn = target if damp == 1.0 else qa + damp * (target - qa)
            try:
                d_next = realize_design(g, qn, sigma_bar, E)
                break
            except (SingularEquilibrium, SingularStiffness):
                continue
        if d_next is None:
            break
        rel = np.max(np.abs(qn - qa)) / max(np.abs(qa).max(), 1e-300)
        qa, d = qn, d_next
        if rel < tol_rel:
            break
    return d, qa
