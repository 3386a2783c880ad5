"""Exact constructions of Kakutani towers, fat towers and the stability-time
counterexample for ergodic averages."""

from .field import QuadNumber, golden, parse_quad, to_decimal
from .sets import IntervalSet, normalize
from .systems import (Address, LeveledSet, PiecewiseTranslation, SkyscraperSystem,
                      build_inflation, rotation, system_from_spec)
from .towers import Column, Tower, inflation_tower, kakutani, rokhlin
from .counterexample import (StabilityEngine, build_config, chain_check, choose_N0,
                             stability_partition)
from .intrinsic import check_growth, limit_diagnostics, run_intrinsic
from .estimator import mean_curve, sample_points, stability_time

__version__ = "0.1.0"
