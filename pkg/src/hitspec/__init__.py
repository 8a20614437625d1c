"""hitspec: hitting, return and non-overlapping return times of symbolic
sources, their exact thermodynamic spectra and Monte Carlo estimators."""

__version__ = "0.1.0"

from .symbolic import (Censored, Pattern, StreamCursor, hitting_time, is_censored, min_period,
                       naive_scan_all, non_overlapping_return_time, return_time, scan_all)
from .sources import (InvalidSpec, MarkovSpec, MPParams, PotentialTable, SourceSpec, cylinder_measure, energy,
                      mp_sojourn_lengths, potential_from_markov, sample_stream)
from .thermo import (SpectrumCurve, RateFunction, asymptotic_variance, brute_force_partition, entropy,
                     hitting_spectrum_W, nonoverlap_spectrum_Rhat, partition_sum, pressure, pressure_2phi,
                     rate_function, renyi_M, twisted_slope, u0_bound)
from .estimators import (DegenerateSource, EstimationPlan, FitReport, FluctuationReport, RecurrenceSample,
                         clt_check, entropy_estimate, exp_law_fit, kac_check, lil_trace, mp_divergence_check,
                         sa_bound_check, sample_recurrence, spectrum_estimate_R, spectrum_estimate_W)

__all__ = [name for name in dir() if not name.startswith("_")]
