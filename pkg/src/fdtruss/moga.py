"""Real-coded multiobjective GA over force densities (NSGA-III style).

Minimizes the pair of split strain-energy objectives (Fx, Fy), both
evaluated at the equilibrium-consistent densities q~, over box-bounded
genomes of per-member force densities. Environmental selection uses
nondominated sorting plus reference-point niching on a uniform lattice
of directions over the two-objective simplex; variation is bounded
simulated binary crossover (distribution index 30) and bounded
polynomial mutation (distribution index 20).

Candidates whose realization fails (singular equilibrium or stiffness)
get an infeasible marker that every feasible objective pair dominates.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import fea as _fea
from .energy import split_objectives
from .errors import ConfigError, SingularEquilibrium, SingularStiffness
from .fdm import DEFAULT_Q_BOUND, EquilibriumGeometry
from .fea import realize_design
from .ground import GroundStructure
from .pareto import ParetoPoint

#: objective marker for candidates that cannot be analyzed
INFEASIBLE = (np.inf, np.inf)

SBX_ETA = 30.0
MUTATION_ETA = 20.0


@dataclass
class Individual:
    genome: np.ndarray
    objectives: tuple
    rank: int | None = None
    niche: int | None = None


@dataclass
class GAConfig:
    """Run parameters for the multiobjective GA.

    p_mutation defaults to 1/m (one expected gene flip per genome) when
    left as None. init_center defaults to the uniform-section force
    densities of the ground structure. seed_individuals are injected
    into the initial population verbatim (clamped to the bounds).
    """

    population_size: int = 40
    generations: int = 500
    p_crossover: float = 0.9
    p_mutation: float | None = None
    q_lower: float = -DEFAULT_Q_BOUND
    q_upper: float = DEFAULT_Q_BOUND
    init_center: np.ndarray | None = None
    init_halfwidth: float = 10.0
    seed_individuals: tuple = ()
    rng_seed: int = 0

    def validate(self, m):
        if self.population_size < 2:
            raise ConfigError("population_size must be at least 2")
        if self.generations < 0:
            raise ConfigError("generations must be nonnegative")
        if not 0.0 <= self.p_crossover <= 1.0:
            raise ConfigError("p_crossover must be in [0, 1]")
        pm = 1.0 / m if self.p_mutation is None else self.p_mutation
        if not 0.0 < pm <= 1.0:
            raise ConfigError("p_mutation must be in (0, 1]")
        if self.init_halfwidth <= 0.0:
            raise ConfigError("init_halfwidth must be positive")
        if not self.q_lower < self.q_upper:
            raise ConfigError("q_lower must be below q_upper")
        return pm


@dataclass
class FrontArchive:
    """First nondominated rank of the final population."""

    points: list
    final_population: list = field(default_factory=list)
    n_evaluations: int = 0
    generations: int = 0
    rng_seed: int = 0

    def objective_array(self):
        return np.array([(p.fx, p.fy) for p in self.points]).reshape(-1, 2)


def initial_force_densities(g: GroundStructure):
    """Force densities of the ground structure with uniform unit areas.

    Runs the displacement analysis on the grid as drawn (initial
    coordinates, A_i = 1) and returns N_i / L_i. Independent of E, since
    uniformly scaling all stiffnesses rescales displacements but not
    forces. Used to center the GA's initial population.
    """
    x, y = g.full_initial_coordinates()
    dx = x[g._ib] - x[g._ia]
    dy = y[g._ib] - y[g._ia]
    lengths = np.hypot(dx, dy)
    geom = EquilibriumGeometry(x, y, dx, dy, lengths,
                               np.zeros(g.fixed_index.size),
                               np.zeros(g.fixed_index.size))
    _, _, q_tilde, _ = _fea._analyze(g, geom, np.ones(g.m), E=1.0)
    return q_tilde


def evaluate(genome, g: GroundStructure, sigma_bar, E):
    """Objective pair (Fx, Fy) at q~, or INFEASIBLE on analysis failure."""
    try:
        d = realize_design(g, genome, sigma_bar, E)
    except (SingularEquilibrium, SingularStiffness):
        return INFEASIBLE
    vals = split_objectives(d.geometry, d.q_tilde, sigma_bar, E)
    return (vals.Fx, vals.Fy)


def nondominated_sort(objective_pairs):
    """Ranks by nondomination: rank 0 is dominated by nothing.

    A point dominates another when it is <= in both objectives and < in
    at least one. Infeasible markers (inf, inf) end up in a rank after
    every feasible point.
    """
    F = np.asarray(objective_pairs, dtype=float).reshape(-1, 2)
    n = F.shape[0]
    if n == 0:
        return []
    le = (F[:, None, :] <= F[None, :, :]).all(axis=-1)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=-1)
    dom = le & lt  # dom[i, j]: i dominates j
    n_dom = dom.sum(axis=0).astype(int)
    ranks = np.full(n, -1, dtype=int)
    rank = 0
    while (ranks < 0).any():
        front = (ranks < 0) & (n_dom == 0)
        if not front.any():  # cannot happen: domination is a strict partial order
            front = ranks < 0
        ranks[front] = rank
        n_dom = n_dom - dom[front].sum(axis=0)
        n_dom[front] = -1
        rank += 1
    return ranks.tolist()


def reference_directions(n_points):
    """Uniform simplex-lattice directions for two objectives."""
    h = max(n_points - 1, 1)
    t = np.arange(h + 1) / h
    return np.column_stack([t, 1.0 - t])


def hypervolume(objective_pairs, ref):
    """Dominated area relative to a reference point (2 objectives)."""
    P = np.asarray(objective_pairs, dtype=float).reshape(-1, 2)
    P = P[np.isfinite(P).all(axis=1)]
    P = P[(P[:, 0] < ref[0]) & (P[:, 1] < ref[1])]
    if P.shape[0] == 0:
        return 0.0
    P = P[np.lexsort((P[:, 1], P[:, 0]))]
    hv = 0.0
    fy_level = ref[1]
    for fx, fy in P:
        if fy < fy_level:
            hv += (ref[0] - fx) * (fy_level - fy)
            fy_level = fy
    return float(hv)


# -- variation operators -------------------------------------------------

def _sbx_pair(p1, p2, lo, hi, rng, eta=SBX_ETA):
    """Bounded simulated binary crossover on one parent pair."""
    c1 = p1.copy()
    c2 = p2.copy()
    cross = rng.random(p1.size) <= 0.5
    cross &= np.abs(p1 - p2) > 1e-14
    if cross.any():
        x1 = np.minimum(p1[cross], p2[cross])
        x2 = np.maximum(p1[cross], p2[cross])
        span = x2 - x1
        rand = rng.random(x1.size)
        exp = 1.0 / (eta + 1.0)

        beta = 1.0 + 2.0 * (x1 - lo) / span
        alpha = 2.0 - beta ** -(eta + 1.0)
        beta_q = np.where(rand <= 1.0 / alpha,
                          (rand * alpha) ** exp,
                          (1.0 / (2.0 - rand * alpha)) ** exp)
        v1 = 0.5 * (x1 + x2 - beta_q * span)

        beta = 1.0 + 2.0 * (hi - x2) / span
        alpha = 2.0 - beta ** -(eta + 1.0)
        beta_q = np.where(rand <= 1.0 / alpha,
                          (rand * alpha) ** exp,
                          (1.0 / (2.0 - rand * alpha)) ** exp)
        v2 = 0.5 * (x1 + x2 + beta_q * span)

        v1 = np.clip(v1, lo, hi)
        v2 = np.clip(v2, lo, hi)
        swap = rng.random(x1.size) <= 0.5
        c1[cross] = np.where(swap, v2, v1)
        c2[cross] = np.where(swap, v1, v2)
    return c1, c2


def _polynomial_mutation(X, lo, hi, p_mutation, rng, eta=MUTATION_ETA):
    """Bounded polynomial mutation applied in place, gene-wise."""
    mask = rng.random(X.shape) < p_mutation
    if not mask.any():
        return X
    x = X[mask]
    span = hi - lo
    delta_1 = (x - lo) / span
    delta_2 = (hi - x) / span
    rand = rng.random(x.size)
    exp = 1.0 / (eta + 1.0)
    low_side = rand < 0.5
    xy = np.where(low_side, 1.0 - delta_1, 1.0 - delta_2)
    val = np.where(low_side,
                   2.0 * rand + (1.0 - 2.0 * rand) * xy ** (eta + 1.0),
                   2.0 * (1.0 - rand) + 2.0 * (rand - 0.5) * xy ** (eta + 1.0))
    delta_q = np.where(low_side, val ** exp - 1.0, 1.0 - val ** exp)
    X[mask] = np.clip(x + delta_q * span, lo, hi)
    return X


def _make_offspring(genomes, p_crossover, p_mutation, lo, hi, rng):
    n = genomes.shape[0]
    perm = rng.permutation(n)
    children = []
    for i in range(0, n - 1, 2):
        p1 = genomes[perm[i]]
        p2 = genomes[perm[i + 1]]
        if rng.random() <= p_crossover:
            c1, c2 = _sbx_pair(p1, p2, lo, hi, rng)
        else:
            c1, c2 = p1.copy(), p2.copy()
        children.append(c1)
        children.append(c2)
    if n % 2:
        children.append(genomes[perm[-1]].copy())
    X = np.array(children)
    _polynomial_mutation(X, lo, hi, p_mutation, rng)
    return X


# -- environmental selection ----------------------------------------------

def _associate(norm_objs, ref_dirs):
    """Nearest reference ray (index, perpendicular distance) per point."""
    d = ref_dirs / np.linalg.norm(ref_dirs, axis=1, keepdims=True)
    proj = norm_objs @ d.T  # (k, R)
    sq = (norm_objs ** 2).sum(axis=1, keepdims=True)
    perp = np.sqrt(np.maximum(sq - proj ** 2, 0.0))
    niche = perp.argmin(axis=1)
    return niche, perp[np.arange(len(niche)), niche]


def _environmental_select(objs, N, ref_dirs, rng):
    """Indices of the N survivors of a combined population.

    Whole nondominated fronts are taken while they fit; the overflowing
    front is truncated by reference-point niching. The per-objective
    best feasible points are always retained, so the best value of each
    single objective never regresses between generations.
    """
    n = objs.shape[0]
    ranks = np.asarray(nondominated_sort(objs))
    selected = []
    last = None
    for r in range(ranks.max() + 1):
        idx = np.nonzero(ranks == r)[0]
        if len(selected) + idx.size <= N:
            selected.extend(idx.tolist())
            if len(selected) == N:
                break
        else:
            last = idx
            break
    if last is None or len(selected) == N:
        return np.array(selected[:N], dtype=int)

    need = N - len(selected)
    feasible = np.isfinite(objs).all(axis=1)
    last_feasible = [i for i in last if feasible[i]]
    if not last_feasible:
        selected.extend(last[:need].tolist())
        return np.array(selected, dtype=int)

    pool = np.array(selected + last_feasible, dtype=int)
    pool_objs = objs[pool]
    finite_pool = pool_objs[np.isfinite(pool_objs).all(axis=1)]
    ideal = finite_pool.min(axis=0)
    spread = np.maximum(finite_pool.max(axis=0) - ideal, 1e-12)

    remaining = list(last_feasible)
    chosen = []

    # keep the single-objective minimizers of the combined pool
    for k in (0, 1):
        best = pool[int(np.argmin(pool_objs[:, k]))]
        if best in remaining and need > 0:
            remaining.remove(best)
            chosen.append(int(best))
            need -= 1

    sel_feasible = [i for i in selected if feasible[i]]
    if need > 0 and remaining:
        members = np.array(sel_feasible + chosen + remaining, dtype=int)
        norm = (objs[members] - ideal) / spread
        niche_of, perp_of = _associate(norm, ref_dirs)
        niche = dict(zip(members.tolist(), niche_of.tolist()))
        perp = dict(zip(members.tolist(), perp_of.tolist()))
        counts = np.zeros(ref_dirs.shape[0], dtype=int)
        for i in sel_feasible + chosen:
            counts[niche[i]] += 1
        while need > 0 and remaining:
            avail = sorted({niche[i] for i in remaining})
            min_count = min(counts[j] for j in avail)
            candidates_niches = [j for j in avail if counts[j] == min_count]
            j = candidates_niches[int(rng.integers(len(candidates_niches)))]
            cands = [i for i in remaining if niche[i] == j]
            if counts[j] == 0:
                pick = min(cands, key=lambda i: (perp[i], i))
            else:
                pick = cands[int(rng.integers(len(cands)))]
            remaining.remove(pick)
            chosen.append(pick)
            counts[j] += 1
            need -= 1

    selected.extend(chosen)
    return np.array(selected, dtype=int)


# -- driver ---------------------------------------------------------------

def _rank0_points(genomes, objs):
    feasible = np.isfinite(objs).all(axis=1)
    if not feasible.any():
        return []
    ranks = np.asarray(nondominated_sort(objs))
    idx = np.nonzero((ranks == 0) & feasible)[0]
    idx = sorted(idx, key=lambda i: (objs[i, 0], objs[i, 1]))
    return [ParetoPoint(fx=float(objs[i, 0]), fy=float(objs[i, 1]),
                        genome=genomes[i].copy()) for i in idx]


def run(g: GroundStructure, config: GAConfig, sigma_bar, E,
        snapshot_path=None) -> FrontArchive:
    """Evolve the population and return the final first-rank front.

    The initial population is uniform in [q0 - w, q0 + w] around the
    uniform-section densities q0, with the seed individuals appended
    verbatim. With generations = 0 the archive is the nondominated
    subset of that initial population. When snapshot_path is given, one
    JSON line per generation records the current first rank.
    """
    pm = config.validate(g.m)
    rng = np.random.default_rng(config.rng_seed)
    lo = float(config.q_lower)
    hi = float(config.q_upper)
    N = config.population_size

    q0 = (np.asarray(config.init_center, dtype=float)
          if config.init_center is not None else initial_force_densities(g))
    if q0.size != g.m:
        raise ConfigError(f"init_center must have length {g.m}")

    genomes = q0 + rng.uniform(-config.init_halfwidth, config.init_halfwidth,
                               size=(N, g.m))
    genomes = np.clip(genomes, lo, hi)
    if len(config.seed_individuals):
        seeds = np.clip(np.asarray(list(config.seed_individuals), dtype=float),
                        lo, hi).reshape(-1, g.m)
        genomes = np.vstack([genomes, seeds])

    objs = np.array([evaluate(x, g, sigma_bar, E) for x in genomes])
    n_evals = genomes.shape[0]
    refs = reference_directions(N)

    snap = open(snapshot_path, "w", encoding="utf-8") if snapshot_path else None
    try:
        if config.generations > 0 and genomes.shape[0] > N:
            keep = _environmental_select(objs, N, refs, rng)
            genomes = genomes[keep]
            objs = objs[keep]
        for gen in range(1, config.generations + 1):
            children = _make_offspring(genomes, config.p_crossover, pm,
                                       lo, hi, rng)
            child_objs = np.array([evaluate(x, g, sigma_bar, E)
                                   for x in children])
            n_evals += children.shape[0]
            all_genomes = np.vstack([genomes, children])
            all_objs = np.vstack([objs, child_objs])
            keep = _environmental_select(all_objs, N, refs, rng)
            genomes = all_genomes[keep]
            objs = all_objs[keep]
            if snap is not None:
                ranks = np.asarray(nondominated_sort(objs))
                front = [[float(objs[i, 0]), float(objs[i, 1])]
                         for i in np.nonzero(ranks == 0)[0]
                         if np.isfinite(objs[i]).all()]
                snap.write(json.dumps({"generation": gen,
                                       "evaluations": n_evals,
                                       "front": front}) + "\n")
    finally:
        if snap is not None:
            snap.close()

    ranks = np.asarray(nondominated_sort(objs))
    final = [Individual(genome=genomes[i].copy(),
                        objectives=(float(objs[i, 0]), float(objs[i, 1])),
                        rank=int(ranks[i]))
             for i in range(genomes.shape[0])]
    return FrontArchive(points=_rank0_points(genomes, objs),
                        final_population=final,
                        n_evaluations=n_evals,
                        generations=config.generations,
                        rng_seed=config.rng_seed)
