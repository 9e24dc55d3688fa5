"""Correlated Ramsey measurements for low-frequency signal detection."""
from .model import (DDProtocol, NoiseModel, Param, RamseyProtocol, ResponseFunction, SignalParams,
                    ValidationError, coherence_time, matched_ramsey, response_function)
from .phase import dd_phase, phase_quadrature_oracle, ramsey_max_frequency, ramsey_phase
from .fisher import (detection_threshold, fisher_approx_dd, fisher_approx_nr, fisher_correlated_ramsey,
                     fisher_dd, fisher_single, gain_approx, gain_exact, sensitivity)
from .qdyne import (TimeTrace, crb_report, estimate_mle, log_likelihood, read_trace, run_campaign,
                    simulate_trace, write_trace)
from .kernels import BACKEND

__version__ = "0.1.0"
