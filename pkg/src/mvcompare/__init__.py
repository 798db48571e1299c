"""Multivariate statistical comparison of classification algorithms."""

__version__ = "0.1.0"

from .errors import (
    DegenerateVariance,
    MvCompareError,
    ParseError,
    SingularCovariance,
    SingularScatter,
    SpecError,
    UndefinedMeasure,
    ValidationError,
)
from .ingest import ConfusionCounts, ExperimentTable, parse_table, read_table, validate_table
from .metrics import MeasureSet, PerformanceSample, measure_from_counts, performance_matrix, samples_for
from .mvtests import TestOutcome, anova, hotelling_paired, manova_wilks, mardia_test, paired_t
from .posthoc import (
    extract_measures,
    find_cliques,
    holm_correct,
    ordering,
    pairwise_grid,
    posthoc_dimensions,
)
