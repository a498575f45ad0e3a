"""Needlet frames on flat tori and two-sample Poisson homogeneity testing.

Submodules:
    harmonics     Fourier basis, spectral densities, positivity gates
    frame         window function, shells, cubature, needlet evaluation
    pointprocess  seeded Poisson sampling on the two labeled torus copies
    ustat         the two-sample statistic, its kernel, exact variance
    bounds        contraction norms, Wasserstein bound, rate envelopes
    harness       Monte Carlo experiments, empirical distances, testing
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: F401
    BoundReport,
    ContractionNorms,
    clt_condition,
    contraction_norms,
    make_bound_report,
    rate_envelope,
    rate_envelope_terms,
    wasserstein_bound,
)
from .frame import (  # noqa: F401
    NeedletFrame,
    WindowFunction,
    build_frame,
    build_window,
    lp_norm_scan,
    needlet_coeffs,
    needlet_eval,
)
from .harmonics import (  # noqa: F401
    HarmonicDensity,
    basis_eval,
    density_eval,
    density_sup,
    eigenvalue,
    from_coeffs,
    load_coeffs,
    make_density,
    save_coeffs,
)
from .harness import (  # noqa: F401
    ExperimentConfig,
    ExperimentReport,
    empirical_wasserstein,
    hypothesis_test,
    rate_regression,
    run_experiment,
)
from .pointprocess import (  # noqa: F401
    PointSample,
    load_points,
    sample_pair,
    sample_process,
    save_points,
    stream,
)
from .ustat import (  # noqa: F401
    LabeledPoint,
    UStatResult,
    analytic_variance,
    compute_U,
    double_integral_oracle,
    kernel_h,
    normalize,
    ustat_summary,
)
