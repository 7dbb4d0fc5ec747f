"""r-complex contagion on succinct hierarchical blockmodels."""

from .cascade import (CascadeResult, SeedAllocation, place_seeds, run_independent_cascade,
                      run_r_complex)
from .model import (Criticality, DensityValue, HierarchyTree, PowerLawWeight, TreeNode,
                    activatable_fraction, classify, densest_leaf, density, is_vulnerable,
                    maximal_dense_subtrees, node, validate)
from .optimizer import (AllocationResult, HValueTable, brute_force_allocate, build_h_table,
                        dp_allocate, estimate_sigma, h_theoretical, submodular_demo)
from .sampler import GraphSample, sample_gnp, sample_graph
from .treespec import TreeSpecError, load_tree, parse_tree
from .walk import (HitEstimate, WalkParams, check_log_concavity, coupled_ensemble, coupled_trial,
                   estimate_hit_prob, estimate_hit_prob_tilted, hit_distribution,
                   simulate_walk)

__version__ = "0.1.0"
