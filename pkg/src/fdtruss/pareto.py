"""Pareto-front post-processing: slopes, weight ratios, aspect ratios.

Each front point generated by the GA corresponds to the optimum of some
weighted sum mu_x Fx + mu_y Fy. At a point of a convex front the weight
ratio mu_x/mu_y lies between the magnitudes of the slopes of the two
adjacent front segments, and the aspect ratio of the equivalent scaled
structure is r = sqrt(mu_x/mu_y). This module estimates those ratios
from a front, selects the point nearest a requested r, and realizes it
on the r-scaled structure.
"""

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .energy import normalize_volume
from .errors import NonConvexWarning, TooFewPoints
from .fea import compliance, realize_consistent
from .ground import GroundStructure, scale_structure

#: two points are duplicates when both objectives agree to this tolerance
DUPLICATE_TOL = 1e-12


@dataclass
class ParetoPoint:
    """One front solution: objectives, generating genome, estimates.

    beta is the slope of the segment to the previous point in Fx order
    (undefined for the first point); mu_ratio is the estimated
    mu_x/mu_y and r_est = sqrt(mu_ratio).
    """

    fx: float
    fy: float
    genome: np.ndarray
    beta: float | None = None
    mu_ratio: float | None = None
    r_est: float | None = None

    @property
    def objectives(self):
        return (self.fx, self.fy)


def _points_of(front):
    return list(front.points) if hasattr(front, "points") else list(front)


def clean_front(front):
    """Sort by increasing Fx, dropping duplicates and dominated points."""
    pts = sorted(_points_of(front), key=lambda p: (p.fx, p.fy))
    out = []
    for p in pts:
        if out:
            prev = out[-1]
            same = (abs(p.fx - prev.fx) <= DUPLICATE_TOL * max(1.0, abs(p.fx))
                    and abs(p.fy - prev.fy) <= DUPLICATE_TOL * max(1.0, abs(p.fy)))
            if same:
                continue
            if p.fy >= prev.fy:  # dominated straggler (fx is already >=)
                continue
        out.append(p)
    return out


def estimate_ratios(front):
    """Annotate a front with slopes, weight ratios and aspect ratios.

    Slopes beta_i are taken between consecutive cleaned points. Interior
    points get mu_x/mu_y as the geometric mean of the two adjacent
    |beta| (always inside the interval they span); the first and last
    points get their single adjacent |beta|. Warns NonConvexWarning when
    |beta| is not monotonically decreasing along the front.
    """
    pts = clean_front(front)
    if len(pts) < 3:
        raise TooFewPoints(
            f"need at least 3 distinct nondominated points, have {len(pts)}")
    k = len(pts)
    beta = np.empty(k)  # beta[i]: slope from point i-1 to point i, i >= 1
    beta[0] = np.nan
    for i in range(1, k):
        beta[i] = (pts[i].fy - pts[i - 1].fy) / (pts[i].fx - pts[i - 1].fx)
    mags = np.abs(beta[1:])
    if np.any(np.diff(mags) > 1e-9 * np.maximum(mags[:-1], 1.0)):
        warnings.warn("front slope magnitudes are not monotone; "
                      "ratio estimates may be noisy", NonConvexWarning)

    out = []
    for i, p in enumerate(pts):
        if i == 0:
            ratio = abs(beta[1])
        elif i == k - 1:
            ratio = abs(beta[k - 1])
        else:
            ratio = float(np.sqrt(abs(beta[i]) * abs(beta[i + 1])))
        out.append(ParetoPoint(
            fx=p.fx, fy=p.fy, genome=p.genome,
            beta=None if i == 0 else float(beta[i]),
            mu_ratio=float(ratio),
            r_est=float(np.sqrt(ratio)),
        ))
    return out


def solution_for_ratio(points, r):
    """The point whose estimated aspect ratio is nearest r (ties: lower Fx)."""
    pts = _points_of(points)
    if not pts:
        raise TooFewPoints("empty front")
    if any(p.r_est is None for p in pts):
        raise ValueError("points have no ratio estimates; run estimate_ratios")
    return min(pts, key=lambda p: (abs(p.r_est - r), p.fx))


def realize_at_ratio(g: GroundStructure, point, r, V_target, sigma_bar, E=1.0):
    """Realize a front point on the r-scaled structure at target volume.

    Scales the structure by (r, 1), re-solves the free coordinates with
    the point's genome (identical to scaling the unscaled solution, by
    the affine property), completes the genome into its fully-stressed
    design, volume-normalizes it, and returns (design, compliance).
    """
    gs = scale_structure(g, r, 1.0)
    d, _ = realize_consistent(gs, point.genome, sigma_bar, E)
    nd, _ = normalize_volume(d, V_target)
    return nd, compliance(nd, gs)


# -- front CSV ------------------------------------------------------------

FRONT_CSV_HEADER = ["index", "Fx", "Fy", "beta", "mu_ratio", "r_est"]


def _fmt(v):
    return "" if v is None else format(v, ".17g")


def write_front_csv(points, path):
    """Write the front table (17 significant digits, empty for missing)."""
    pts = _points_of(points)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FRONT_CSV_HEADER)
        for i, p in enumerate(pts):
            writer.writerow([i, _fmt(p.fx), _fmt(p.fy), _fmt(p.beta),
                             _fmt(p.mu_ratio), _fmt(p.r_est)])


def read_front_csv(path):
    """Read a front table back; genomes are not stored in the CSV."""
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != FRONT_CSV_HEADER:
            raise ValueError(f"unexpected front CSV header: {header}")
        for row in reader:
            _, fx, fy, beta, mu_ratio, r_est = row
            out.append(ParetoPoint(
                fx=float(fx), fy=float(fy), genome=None,
                beta=float(beta) if beta else None,
                mu_ratio=float(mu_ratio) if mu_ratio else None,
                r_est=float(r_est) if r_est else None,
            ))
    return out
