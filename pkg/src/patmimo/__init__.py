"""patmimo: packet-error-probability bounds for pilot-assisted short-packet
MIMO transmission over block-fading channels, and the link optimizations
built on them (pilot overhead, diversity allocation, antenna configuration).
"""

__version__ = "0.1.0"

from .bounds import (
    E0Estimate,
    ErrorProbEstimate,
    SampleSizeError,
    TauHatResult,
    density_samples,
    e0_from_samples,
    estimate_e0,
    find_tau_hat,
    rcus_mc,
    rcus_threshold_nats,
    saddlepoint_epsilon,
    saddlepoint_from_samples,
)
from .channel import (
    QPSK_POINTS,
    BlockFadingConfig,
    CoherenceBlockSample,
    ConfigError,
    db_to_linear,
    linear_to_db,
    make_pilot_matrix,
    ml_estimate,
    sample_coherence_block,
    sample_fading,
    sample_qpsk_data,
)
from .lte import (
    BlockGeometry,
    ChannelProfile,
    GeometryError,
    builtin_profiles,
    make_geometry,
    profile_by_name,
)
from .metrics import (
    DegenerateEstimateError,
    ScalarObservationBlock,
    alamouti_encode,
    alamouti_equivalent_observations,
    alamouti_symbol_stream,
    info_density_mimo,
    info_density_scalar,
    mrc_reduce,
    snn_log_metric,
)
from .sampling import SCHEMES, block_densities, partition_densities
from .streams import partition_plan, stream
from .sweeps import (
    BracketError,
    MinSnrResult,
    SweepResult,
    SweepRow,
    diversity_envelope,
    min_snr_for_target,
    pilot_sweep,
    snr_curve,
)

__all__ = [
    "BlockFadingConfig",
    "BlockGeometry",
    "BracketError",
    "ChannelProfile",
    "CoherenceBlockSample",
    "ConfigError",
    "DegenerateEstimateError",
    "E0Estimate",
    "ErrorProbEstimate",
    "GeometryError",
    "MinSnrResult",
    "QPSK_POINTS",
    "SCHEMES",
    "SampleSizeError",
    "ScalarObservationBlock",
    "SweepResult",
    "SweepRow",
    "TauHatResult",
    "alamouti_encode",
    "alamouti_equivalent_observations",
    "alamouti_symbol_stream",
    "block_densities",
    "builtin_profiles",
    "db_to_linear",
    "density_samples",
    "diversity_envelope",
    "e0_from_samples",
    "estimate_e0",
    "find_tau_hat",
    "info_density_mimo",
    "info_density_scalar",
    "linear_to_db",
    "make_geometry",
    "make_pilot_matrix",
    "min_snr_for_target",
    "ml_estimate",
    "mrc_reduce",
    "partition_densities",
    "partition_plan",
    "pilot_sweep",
    "profile_by_name",
    "rcus_mc",
    "rcus_threshold_nats",
    "saddlepoint_epsilon",
    "saddlepoint_from_samples",
    "sample_coherence_block",
    "sample_fading",
    "sample_qpsk_data",
    "snn_log_metric",
    "snr_curve",
    "stream",
]
