"""Split strain-energy objectives and volume normalization.

For a fully stressed truss at reference stress sigma_bar, the compliance
can be written as a sum over members of (sigma_bar / E) L_i^2 |q_i|.
Since L_i^2 = dx_i^2 + dy_i^2, that total splits into an x-part and a
y-part, giving the two objectives minimized here:

    Fx = sum (sigma_bar/E) dx_i^2 |q_i|
    Fy = sum (sigma_bar/E) dy_i^2 |q_i|

These are not work components (Fx can be nonzero with a purely vertical
load); they are useful because scaling the structure's fixed nodes by
(sqrt(mu_x), sqrt(mu_y)) turns F = Fx + Fy into mu_x Fx + mu_y Fy at
unchanged force densities, so one Pareto front over (Fx, Fy) encodes the
optima of every aspect ratio at once.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ZeroVolume
from .fdm import EquilibriumGeometry, as_density_array
from .fea import TrussDesign
from . import fea as _fea

#: members whose |q~| falls below this fraction of the largest |q~| are
#: treated as removed from the topology for reporting and rendering
TOPOLOGY_THRESHOLD_REL = 1e-6


@dataclass
class ObjectiveValues:
    """Objective bundle: split components, total, and optional weighting."""

    Fx: float
    Fy: float
    F: float
    mu_x: float = 1.0
    mu_y: float = 1.0
    F_star: float | None = None
    c: float = 0.0


@dataclass
class VolumeNormalization:
    """Record of a uniform area rescale to hit a target volume."""

    V_target: float
    sigma_bar_adjusted: float
    scale: float


def split_objectives(geom: EquilibriumGeometry, q_eval, sigma_bar, E) -> ObjectiveValues:
    """Evaluate Fx, Fy and their total on a solved geometry.

    q_eval is whatever density vector the caller wants the energy
    evaluated at; the optimizers pass the equilibrium-consistent q~.
    """
    qa = np.abs(as_density_array(q_eval))
    coef = sigma_bar / E
    fx = float(coef * np.sum(geom.dx ** 2 * qa))
    fy = float(coef * np.sum(geom.dy ** 2 * qa))
    return ObjectiveValues(Fx=fx, Fy=fy, F=fx + fy)


def weighted_sum(geom: EquilibriumGeometry, q_eval, mu_x, mu_y, sigma_bar, E, c):
    """Smoothed weighted sum mu_x Fx + mu_y Fy with |q| ~ sqrt(q^2 + c).

    The smoothing constant c > 0 keeps the objective differentiable
    across sign changes of the densities; with c -> 0 and unit weights
    this reduces to F from split_objectives.
    """
    if mu_x < 0 or mu_y < 0:
        raise ValueError("weights must be nonnegative")
    if c <= 0:
        raise ValueError("smoothing constant must be positive")
    qa = as_density_array(q_eval)
    smooth = np.sqrt(qa * qa + c)
    coef = sigma_bar / E
    return float(coef * np.sum((mu_x * geom.dx ** 2 + mu_y * geom.dy ** 2)
                               * smooth))


def active_members(q_tilde, rel_threshold=TOPOLOGY_THRESHOLD_REL):
    """Mask of members considered present in the final topology."""
    qa = np.abs(np.asarray(q_tilde, dtype=float))
    scale = qa.max(initial=0.0)
    if scale == 0.0:
        return np.zeros(qa.size, dtype=bool)
    return qa >= rel_threshold * scale


def normalize_volume(d: TrussDesign, V_target):
    """Uniformly rescale areas so the total volume equals V_target.

    The reference stress is adjusted to sigma_bar / scale so the sizing
    relation A_i = L_i |q_i| / sigma_bar still holds, and the
    displacement analysis is rerun on the rescaled areas (forces are
    unchanged by a uniform rescale; compliance divides by the scale).
    """
    v0 = d.volume()
    if v0 <= 0.0:
        raise ZeroVolume("cannot normalize a design with zero volume")
    scale = float(V_target) / v0
    areas = d.areas * scale
    system, N, q_tilde, retained = _fea._analyze(d.structure, d.geometry,
                                                 areas, d.E)
    norm = VolumeNormalization(float(V_target), d.sigma_bar / scale, scale)
    nd = TrussDesign(d.structure, d.geometry, d.q.copy(), areas,
                     norm.sigma_bar_adjusted, d.E, q_tilde, N, retained,
                     system)
    return nd, norm
