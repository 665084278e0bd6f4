"""Monte Carlo test bench for delayed-choice Mach-Zehnder signaling schemes.

The package simulates a switched Mach-Zehnder interferometer under two rival
rules for when the optical switch fixes a photon's wave or particle behavior,
runs the switch-as-transmitter bit channel those rules imply, and analyzes
the companion double-slit pattern-transition experiment.
"""

from .diffraction import (
    PatternKind,
    ScreenSample,
    SlitGeometry,
    SprtOutcome,
    TransitionResult,
    double_slit_intensity,
    log_likelihood_ratio,
    photons_needed,
    sample_position,
    sample_positions,
    single_slit_intensity,
    transition_experiment,
    window_coverage,
)
from .interferometer import (
    SPEED_OF_LIGHT,
    DetectionRecord,
    ExperimentGeometry,
    Outcome,
    PhotonTrial,
    PhysicalModel,
    SwitchSchedule,
    SwitchState,
    blocked_fraction,
    estimate_px,
    resolve_model,
    run_experiment,
    run_trial,
    transit_times,
)
from .quantum import (
    Mode,
    TwoModeState,
    apply,
    block_mode,
    bs50,
    detection_probs,
    is_unitary,
    phase_shift,
    sample_outcome,
)
from .signaling import (
    Alignment,
    BitFrame,
    ChannelReport,
    DecodedMessage,
    analytic_ber,
    ber,
    channel_report,
    confusion_counts,
    decode,
    effective_signal_velocity,
    encode,
    group_by_symbol,
    mutual_information_estimate,
    run_channel,
    schedule_emissions,
)

__version__ = "0.1.0"
