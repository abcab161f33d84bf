"""Setting-choice-dependent pulse correlations from band-limited modulators.

A three-pole linear filter model of the modulator drive chain, correlation
strengths by exhaustive sequence enumeration, exponential long-range bounds
with effective correlation lengths, filter identification from waveforms,
and a hybrid security-parameter pipeline.
"""
__version__ = "0.1.0"

from .bounds import (DELTA_MAX, BoundParams, EffectiveLength, bound_eps_l_intensity, bound_eps_l_phase,
                     effective_length, effective_length_closed_form, effective_length_scan, security_constants)
from .correlations import (AlignmentSelection, CorrelationReport, EpsilonResult, LTIIntensitySource,
                           LTIPhaseSource, WaveformSource, aggregate, characterize, correlation_strengths,
                           enumerate_sequences, epsilon_l, intensity_epsilon_pair, per_setting_breakdown,
                           phase_epsilon_pair, scan_alignment)
from .errors import (ConfigError, CoverageError, DataError, DegenerateFilterError, DomainError, HookContractError,
                     MissingSequenceError, NoFitError, NumericError, PulseCorrError, ResolutionError)
from .fitting import DEFAULT_FIT_SEQUENCE, FitResult, fit_three_pole, synth_fixture
from .intensity import GaussianProfile, IntensityConfig, interfere, mean_photon_dirac, mean_photon_gaussian, poisson_fidelity
from .lti import (TABLE_I, TABLE_I_ENVELOPE, DecayEnvelope, FilterSpec, ThreePoleParams, decay_envelope,
                  error_function, step_response, step_response_oracle)
from .modulation import (BB84_PHASES, DECOY_ALPHABET, THREE_STATE_PHASES, PulseTrainConfig, SettingAlphabet,
                         modulated_signal, pairwise_phase_difference)
from .security import HybridSeries, ProtocolParams, channel_yield, eps_phi_total, hybrid_series, key_rate
from .waveform import Waveform, read_waveform_csv, write_waveform_csv
