"""Random CSP instances with sharp solution-count thresholds.

Generate Model RB instances deterministically, count their solutions
exactly, decide count thresholds in exact integer arithmetic, estimate
counts from closed forms, encode to CNF, and run grid experiments.
"""

__version__ = "0.1.0"

from .cnf_encode import Cnf, DimacsError, count_models, encode_direct, read_dimacs, write_dimacs
from .exact_count import (CapExceeded, CountResult, Decision, count_backtrack,
                          count_brute, decide_at_least, decide_from_count)
from .experiments import (AccuracyRow, ComparisonRow, PointSpec, SweepConfig,
                          SweepRow, accuracy_table, crossing_point, emit_csv,
                          emit_svg_plot, estimator_comparison, sweep_tightness,
                          write_manifest)
from .rb_model import (ApplicabilityReport, Assignment, Constraint, DerivedSizes,
                       Instance, InstanceFormatError, ModelBCheck, RbParams,
                       derive_sizes, effective_tightness, generate, read_instance,
                       theorem_applicability, validate_model_b, write_instance)
from .theory import (Estimate, ExpectedCount, PairProbabilities, SimilarityStats,
                     Threshold, ae_count, conditional_expected_count,
                     critical_density, critical_tightness, expected_count,
                     h_eval, int_nth_root, pair_probabilities, second_moment_ratio,
                     similarity, threshold, threshold_ceiling)

__all__ = [name for name in dir() if not name.startswith("_")]
