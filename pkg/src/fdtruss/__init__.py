"""Simultaneous shape and topology optimization of plane trusses using
member force densities as design variables.

The package realizes candidate designs through a force-density
equilibrium solve plus a linear stiffness analysis, splits the strain
energy into x/y components, and finds the compliance-optimal trusses of
every ground-structure aspect ratio in one multiobjective GA run; a
weighted-sum local optimizer provides the single-ratio baselines.
"""

from .errors import (ConfigError, FdtrussError, NonConvexWarning,
                     NoProgressWarning, SingularEquilibrium,
                     SingularStiffness, StartInfeasible, TooFewPoints,
                     ZeroVolume)
from .ground import (GroundStructure, Member, generate_grid, load_problem,
                     problem_text, save_problem, scale_structure)
from .fdm import (AffineScalingReport, EquilibriumGeometry,
                  ForceDensityMatrix, ForceDensityVector, assemble,
                  check_affine_scaling, solve_free_coordinates)
from .fea import (StiffnessSystem, TrussDesign, compliance,
                  member_energy_compliance, realize_consistent,
                  realize_design)
from .energy import (ObjectiveValues, VolumeNormalization, active_members,
                     normalize_volume, split_objectives, weighted_sum)
from .moga import (FrontArchive, GAConfig, Individual, INFEASIBLE, evaluate,
                   hypervolume, initial_force_densities, nondominated_sort,
                   reference_directions, run)
from .wsopt import (MethodResult, WSConfig, WSResult, minimize,
                    scaling_design, scaling_method, weighted_design,
                    weighted_method)
from .pareto import (ParetoPoint, clean_front, estimate_ratios,
                     read_front_csv, realize_at_ratio, solution_for_ratio,
                     write_front_csv)

__version__ = "0.1.0"
