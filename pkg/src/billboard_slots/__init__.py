"""Multi-product billboard slot selection.

Two problem variants over a trajectory database and a grid of billboard slots:

* common selection -- one slot set meeting every product's influence threshold,
  solved by continuous greedy, repeated randomized rounding and greedy repair
  (:func:`solve_common`);
* disjoint selection -- one slot set per product under per-product budgets,
  solved by sampling product/slot permutations of a budgeted greedy
  (:func:`solve_disjoint`).
"""
from .baselines import random_allocation, topk_allocation
from .continuous_greedy import GreedyTrace, Polytope, continuous_greedy, lp_direction
from .cover import BicriteriaConfig, CoverSolution, normalize, repair, round_and_union, solve_common
from .disjoint import (AllocationOutcome, PermutationSample, SampleStats, run_one_permutation, sample_size,
                       solve_disjoint)
from .influence import (Coverage, InfluenceMatrix, build_influence_matrix, influence, marginal_gain,
                        product_influence, singleton_influence, sparsity, total_supply)
from .instance import Instance
from .model import (Billboard, BillboardSlot, CostTable, InfeasibleError, ParseError, ProductSpec, SlotUniverse,
                    TimeInterval, TrajectoryRecord, ValidationError, derive_slots, load_billboards, load_costs,
                    load_products, load_trajectories, trajectory_horizon, validate_instance)
from .multilinear import F_exact, F_mc, aggregate_weights, lifted_weight, lifted_weights, product_scales

__version__ = "0.1.0"
