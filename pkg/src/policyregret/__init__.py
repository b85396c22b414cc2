"""Simulation library for prediction games against adaptive adversaries.

Builds materialized history-dependent loss processes (oblivious tables,
i.i.d. arms, switching-cost wrappers, paired random walks, bounded-memory
kernels), runs them against a family of online learners under full or bandit
feedback, and measures policy regret, standard regret, switch counts, and
empirical scaling exponents.
"""

from .adversaries import (AdversaryRealization, BoundsReport,
                          MemoryTwoReductionSpec, RandomWalkSpec,
                          load_loss_table, load_random_walk,
                          realize_bounded_memory, realize_iid,
                          realize_memory_two_reduction, realize_oblivious,
                          realize_random_walk, save_loss_table,
                          save_random_walk, validate_bounds,
                          wrap_switching_cost)
from .game import (AlternatingPlayer, ConfigurationError, ConstantPlayer,
                   ContractViolation, FeedbackModel, GameTranscript, Player,
                   RegretLedger, UniformRandomPlayer, play_game, policy_regret,
                   standard_regret, switch_count)
from .harness import (ExperimentSpec, FitResult, SweepResult,
                      cell_seed_sequences, fit_rate, lower_bound_probe,
                      pseudo_regret, run_single, run_sweep)
from .learners import Exp3P, FollowLazyLeader, Hedge, importance_weighted_losses
from .reductions import (BoundsConfig, DoublingHorizon, DriftDifferenceExp3P,
                         MinibatchHedge, RangeNormalizedHedge,
                         SuccessiveElimination, SwitchingCostFLL,
                         elimination_stage_lengths, enumerate_start_sets,
                         exploration_geometry, sample_exploration_starts,
                         sampler_uniformity_report, scaled_loss_estimate,
                         write_trace)

__version__ = "0.1.0"
