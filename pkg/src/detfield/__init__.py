"""Numerical laboratory for determinantal random point fields on 1-d lattices."""

from .errors import (AdmissibilityLost, DegenerateProjection, DuplicateSites,
                     EnvelopeViolated, MalformedSpectral, MissingFourier, MZero,
                     NumericallySingular, OrderTooLarge, ParseError, SigmaZero,
                     TooManySites, ValidationError, VarianceTooSmall)
from .exact import (BruteForceDistribution, CumulantTable,
                    brute_force_distribution, charfn_logdet, cumulant_table,
                    cumulants_to_moments, cumulants_via_logdet, mean_Sf,
                    raw_moments_to_cumulants, rho_n, var_Sf, var_spectral)
from .experiments import (CltResult, ExperimentSpec, MScanResult,
                          VarianceScanResult, VerdictRecord, WhiteNoiseResult,
                          clt_verdict, m_scan, run_clt, theorem2_run,
                          variance_scan)
from .kernels import (MatrixKernel, PerturbationEnvelope, build_circulant,
                      perturb, rank_one_envelope)
from .sampler import (Configuration, empirical_correlations, sample,
                      sample_batch, sample_count_batch, stream_for)
from .spectral import (IntervalUnion, Tabulated, ValidationReport, flat,
                       m_lambda, m_lambda_torus, named, scaled_beta_union,
                       sigma2, sine, triangle, two_intervals, validate_spectral)
from .testfuncs import TestFunction, bump, gaussian, indicator, step_combo

__version__ = "0.1.0"
