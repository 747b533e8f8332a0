"""Blind source separation by constant-modulus rotation sweeps.

Library layout:

* :mod:`rotcma.linalg` -- small fixed-size eigen/root kernels
* :mod:`rotcma.signals` -- constellations, channels, observations
* :mod:`rotcma.metrics` -- ambiguity resolution, SINR, SER
* :mod:`rotcma.whitening` -- prewhitening / subspace projection
* :mod:`rotcma.rotations` -- plane/hyperbolic rotation parameter solvers
* :mod:`rotcma.separators` -- batch separation algorithms
* :mod:`rotcma.adaptive` -- sliding-window adaptive separation
* :mod:`rotcma.harness` -- Monte Carlo campaigns and CSV output
* :mod:`rotcma.report` -- figures from campaign CSVs
"""

from .adaptive import AdaptiveState, adaptive_init, adaptive_step, select_max_deviation
from .harness import (
    ExperimentConfig,
    TrialMetrics,
    TrialPoint,
    load_config,
    run_campaign,
    run_trial,
    summarize,
)
from .metrics import AmbiguityMap, resolve_ambiguity, ser, sinr
from .rotations import (
    GivensParams,
    NormParams,
    ShearParams,
    apply_norm,
    apply_two_row,
    givens_params,
    norm_param,
    shear_exact,
    shear_linear,
    shear_semi_exact,
)
from .separators import SeparatorConfig, SeparatorState, run_gcma, run_hgcma, run_lscma
from .signals import (
    ChannelScenario,
    Constellation,
    cm_cost,
    gen_channel,
    gen_sources,
    make_constellation,
    make_scenario,
    noise_var_for_snr,
    observe,
    scenario_sources,
)
from .whitening import DegenerateCovarianceError, Whitener, fit_whitener, whiten

__version__ = "0.1.0"
