"""Random walks, local-time fields and Gaussian fields on binary trees."""

from .errors import NumericError, StateError
from .experiments import EXPERIMENTS, run_experiment
from .gff import GaussianField, NegCorrField, derivative_martingale, sample_dgff, sample_negcorr
from .report import ExperimentReport, emit
from .rng import stream
from .stats import CenteringSchedule, centering
from .tree import TreeKind, TreeShape, VertexRef, ancestor, meet
from .walk import (Composite, Covered, LocalTimeField, RealTime, RootLocalTime, SumLeafLocalTime,
                   WalkConfig, WalkOutcome, cover_times, run_phases, simulate, stop_nu, stop_tau)

__all__ = [
    "NumericError", "StateError", "EXPERIMENTS", "run_experiment", "GaussianField", "NegCorrField",
    "derivative_martingale", "sample_dgff", "sample_negcorr", "ExperimentReport", "emit", "stream",
    "CenteringSchedule", "centering", "TreeKind", "TreeShape", "VertexRef", "ancestor", "meet",
    "Composite", "Covered", "LocalTimeField", "RealTime", "RootLocalTime", "SumLeafLocalTime",
    "WalkConfig", "WalkOutcome", "cover_times", "run_phases", "simulate", "stop_nu", "stop_tau",
]
