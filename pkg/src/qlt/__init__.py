"""Quantized linear transceiver analysis: closed-form spectrum/rate/capacity
predictions with Monte-Carlo and waveform validation harnesses."""

from .analysis import (
    RateReport,
    SpectrumReport,
    SubbandPlan,
    awgn_linear_rate,
    awgn_rate_at_transmit_snr,
    feasible_fractions,
    kl_divergence,
    linear_rate,
    noise_free_rate,
    powers_from_fractions,
    predict_spectrum,
    share_floor,
)
from .bounds import (
    UpperBoundReport,
    cumulant,
    max_entropy,
    rate_function,
    rate_upper_bound,
    tilted_distribution,
    tilted_mean_energy,
)
from .errors import (
    BoundaryEnergyError,
    ConfigError,
    ContractError,
    FeasibilityError,
    InfeasibleEnergyError,
    InfiniteRateError,
    NumericalFailureError,
    QltError,
    UnboundedConstellationError,
)
from .moments import (
    AgnMoments,
    ChannelSpec,
    MonteCarlo,
    Quadrature,
    chain_moments,
    tx_moments,
)
from .montecarlo import (
    HouseholderChain,
    SimConfig,
    SimReport,
    run_chain_trials,
    run_tx_trials,
    sample_haar_unitary,
    subband_assignment,
)
from .quantizer import (
    Constellation,
    QuantizerSpec,
    clip_for_power,
    constellation_of,
    quantize,
    quantizer_from_json,
    quantizer_to_json,
)
from .waveform import (
    AclrReport,
    WaveformConfig,
    apply_dac_and_measure,
    design_interp_filter,
    measure_aclr,
    sweep_bits,
    synthesize_baseband,
)

__version__ = "0.1.0"
