"""Covariance-adapted k-sample mean tests for functional data.

Curves are projected onto a few orthonormal basis functions and the group
score means are compared with a quadratic form that whitens each group by
its own covariance, so unequal group covariances are handled directly.

>>> import numpy as np
>>> from funkmean import FunctionalDataset, BasisSpec, project_dataset, t_flrt
>>> t = np.linspace(0, 1, 50)
>>> rng = np.random.default_rng(0)
>>> data = FunctionalDataset.from_arrays(t, [rng.normal(size=(40, 50)), rng.normal(size=(30, 50))])
>>> result = t_flrt(project_dataset(data, BasisSpec("fourier", 3)))
>>> result.df
3
"""

__version__ = "0.1.0"

from .basis import BasisMatrix, BasisSpec, evaluate_basis, orthonormalize_spline, trapezoid_weights
from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_statistics, bootstrap_test
from .csvio import CurveTable, read_curves, write_long, write_wide
from .diagnostics import (
    DiagnosticCurve,
    ReorderProfile,
    SpikeRule,
    detect_spikes,
    emit_diagnostic_artifacts,
    multi_basis_diagnostic,
    reorder_diagnostic,
    split_dataset,
)
from .errors import *  # noqa: F401,F403
from .flrt import (
    GroupCovariance,
    GroupedScores,
    HotellingResult,
    TestResult,
    condition_report,
    group_covariance,
    hotelling_t2,
    noncentrality_estimate,
    pooled_mean,
    projection_pair,
    t_flrt,
)
from .projection import (
    DiscretizedCurve,
    FunctionalDataset,
    project_curve,
    project_dataset,
    project_values,
    rescale_dataset,
    rescale_domain,
)
from .simulate import (
    ExperimentConfig,
    ExperimentTable,
    GroupDesign,
    MaternParams,
    MeanSpec,
    bessel_k,
    gp_sample,
    matern_cov,
    preset,
    run_power_experiment,
    run_size_experiment,
    simulate_dataset,
)
