"""The optical switch as a transmitter: bits -> schedule -> decoded bits.

Bit 1 drives the switch on (interference, detector X only), bit 0 drives it
off (absorption plus 50/50 clicks).  The receiver watches the detectors and
thresholds the per-symbol detector-X fraction.  Under the ideal channel a
1-symbol scores 1.0 and a 0-symbol scores 1/4 in expectation, so the
decision threshold sits at their midpoint, 0.625.

The module also quantifies the causality content of the scheme: under the
arrival-time rule the last instant a toggle can influence a click is the
photon's arrival at beam splitter 2, which turns the switch-to-recombiner
distance over the decision lead time into an effective signal velocity.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .interferometer import (
    SPEED_OF_LIGHT,
    DetectionRecord,
    ExperimentGeometry,
    Outcome,
    PhotonTrial,
    PhysicalModel,
    SwitchSchedule,
    SwitchState,
    run_experiment,
)

# Midpoint of the ideal per-symbol statistics (1.0 for a one, 0.25 for a
# zero); ties decide upward.
DECODE_THRESHOLD = 0.625


class Alignment(Enum):
    """Which flight event of each photon is centered in its symbol window."""

    AT_ARRIVAL = "at-arrival"
    AT_PASSAGE = "at-passage"


@dataclass(frozen=True)
class BitFrame:
    """A frame of bits sent at one symbol per ``symbol_period`` seconds."""

    bits: tuple[int, ...]
    symbol_period: float
    photons_per_symbol: int = 1

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        object.__setattr__(self, "bits", bits)
        if len(bits) == 0:
            raise ValueError("bits must be nonempty")
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        if not (math.isfinite(self.symbol_period) and self.symbol_period > 0.0):
            raise ValueError(f"symbol_period must be > 0, got {self.symbol_period!r}")
        if self.photons_per_symbol < 1:
            raise ValueError(
                f"photons_per_symbol must be >= 1, got {self.photons_per_symbol!r}"
            )


@dataclass(frozen=True)
class DecodedMessage:
    """Receiver output: decoded bits plus the per-symbol detector-X fraction."""

    bits: tuple[int, ...]
    per_symbol_stat: tuple[float, ...]

    def __post_init__(self):
        if len(self.bits) != len(self.per_symbol_stat):
            raise ValueError("bits and per_symbol_stat must have equal length")


@dataclass(frozen=True)
class ChannelReport:
    """Summary metrics of one transmitted frame."""

    ber: float
    mutual_information: float
    effective_velocity_over_c: float
    model: PhysicalModel

    def __post_init__(self):
        if not 0.0 <= self.ber <= 1.0:
            raise ValueError(f"ber must lie in [0, 1], got {self.ber!r}")
        if not 0.0 <= self.mutual_information <= 1.0:
            raise ValueError(
                f"mutual_information must lie in [0, 1], got {self.mutual_information!r}"
            )
        if self.effective_velocity_over_c <= 0.0:
            raise ValueError("effective_velocity_over_c must be > 0")


def encode(frame: BitFrame, start_time: float = 0.0) -> SwitchSchedule:
    """Switch schedule carrying the frame: on during 1-windows, off during 0s.

    Toggles appear only at window boundaries where consecutive bits differ;
    before the frame and after it the switch holds the first and last bit's
    state respectively.
    """
    initial = SwitchState.ON if frame.bits[0] == 1 else SwitchState.OFF
    toggles = [
        start_time + k * frame.symbol_period
        for k in range(1, len(frame.bits))
        if frame.bits[k] != frame.bits[k - 1]
    ]
    return SwitchSchedule(initial, tuple(toggles))


def schedule_emissions(
    frame: BitFrame,
    geometry: ExperimentGeometry,
    align: Alignment = Alignment.AT_ARRIVAL,
    start_time: float = 0.0,
    require_nonneg_emission: bool = False,
) -> list[PhotonTrial]:
    """Emission times placing m alignment events per symbol window.

    The m events of a window sit at the odd fractions (2j + 1) / (2m) of the
    window, strictly inside it, clear of the boundary toggles.  Emission
    times are the events minus the flight time to the aligned element, so
    photons of early symbols may have to leave before the frame starts; set
    ``require_nonneg_emission`` to reject configurations whose windows are
    too short for every emission to fall at or after ``start_time``.
    """
    if align is Alignment.AT_ARRIVAL:
        lead = geometry.transit_total
    else:
        lead = geometry.transit_to_switch
    m = frame.photons_per_symbol
    period = frame.symbol_period
    trials = []
    for k in range(len(frame.bits)):
        for j in range(m):
            event = start_time + (k + (2 * j + 1) / (2 * m)) * period
            emission = event - lead
            if require_nonneg_emission and emission < start_time:
                raise ValueError(
                    "symbol window too short: photon "
                    f"{j} of symbol {k} would have to be emitted {start_time - emission:.3g} s "
                    "before the frame starts"
                )
            trials.append(PhotonTrial(emission_time=emission))
    return trials


def group_by_symbol(
    records: list[DetectionRecord], frame: BitFrame
) -> list[list[DetectionRecord]]:
    """Split a record batch back into per-symbol groups of m photons."""
    m = frame.photons_per_symbol
    expected = len(frame.bits) * m
    if len(records) != expected:
        raise ValueError(
            f"got {len(records)} records for {len(frame.bits)} symbols of {m} photons"
        )
    return [records[k * m : (k + 1) * m] for k in range(len(frame.bits))]


def decode(
    symbol_records: list[list[DetectionRecord]],
    frame: BitFrame,
    threshold: float = DECODE_THRESHOLD,
) -> DecodedMessage:
    """Threshold the per-symbol detector-X fraction over emitted photons.

    Blocked photons and detector-Y clicks both depress the statistic: a
    missing photon is evidence the switch was off.
    """
    if len(symbol_records) != len(frame.bits):
        raise ValueError(
            f"got {len(symbol_records)} symbol groups for {len(frame.bits)} sent bits"
        )
    m = frame.photons_per_symbol
    stats = []
    bits = []
    for group in symbol_records:
        s = sum(1 for r in group if r.outcome is Outcome.DET_X) / m
        stats.append(s)
        bits.append(1 if s >= threshold else 0)
    return DecodedMessage(tuple(bits), tuple(stats))


def ber(sent: BitFrame, decoded: DecodedMessage) -> float:
    """Fraction of decoded bits differing from the sent bits."""
    if len(sent.bits) != len(decoded.bits):
        raise ValueError(
            f"length mismatch: sent {len(sent.bits)} bits, decoded {len(decoded.bits)}"
        )
    wrong = sum(1 for a, b in zip(sent.bits, decoded.bits) if a != b)
    return wrong / len(sent.bits)


def analytic_ber(m: int, theta: float = DECODE_THRESHOLD) -> float:
    """Exact error rate of the threshold decoder on the ideal channel.

    A 1-symbol never errs (every photon clicks X).  Each photon of a
    0-symbol independently survives the switch and clicks X with probability
    1/4, so the symbol errs when Binomial(m, 1/4) >= ceil(theta * m); bits
    are taken equiprobable, halving the rate.
    """
    if m < 1:
        raise ValueError(f"m must be >= 1, got {m}")
    if not 0.25 < theta < 1.0:
        raise ValueError(f"theta must lie in (1/4, 1), got {theta!r}")
    k_min = math.ceil(theta * m)
    tail = sum(
        math.comb(m, k) * 0.25**k * 0.75 ** (m - k) for k in range(k_min, m + 1)
    )
    return 0.5 * tail


def confusion_counts(sent: BitFrame, decoded: DecodedMessage) -> np.ndarray:
    """2x2 count matrix, rows = sent bit, columns = decoded bit."""
    if len(sent.bits) != len(decoded.bits):
        raise ValueError("sent and decoded frames differ in length")
    counts = np.zeros((2, 2), dtype=np.int64)
    for a, b in zip(sent.bits, decoded.bits):
        counts[a, b] += 1
    return counts


def mutual_information_estimate(confusion) -> float:
    """Plug-in mutual information (bits/symbol) from a 2x2 count matrix."""
    counts = np.asarray(confusion, dtype=float)
    if counts.shape != (2, 2) or np.any(counts < 0):
        raise ValueError("confusion must be a nonnegative 2x2 count matrix")
    total = counts.sum()
    if total <= 0:
        raise ValueError("confusion matrix must hold at least one count")
    joint = counts / total
    px = joint.sum(axis=1)
    py = joint.sum(axis=0)
    info = 0.0
    for i in range(2):
        for j in range(2):
            if joint[i, j] > 0.0:
                info += joint[i, j] * math.log2(joint[i, j] / (px[i] * py[j]))
    return max(info, 0.0)


def effective_signal_velocity(
    geometry: ExperimentGeometry, model: PhysicalModel, decision_lead: float
) -> float:
    """Speed (in units of c) at which a switch decision reaches the detectors.

    Arrival-time rule: a toggle ``decision_lead`` seconds before a photon's
    arrival still flips that photon's statistics, and the detection happens
    ``len_switch_bs2`` away from the switch, so the influence covers that
    distance in the lead time.  Passage-time rule: influence rides the
    photon itself and can never beat light in the medium.
    """
    if not (math.isfinite(decision_lead) and decision_lead > 0.0):
        raise ValueError(f"decision_lead must be > 0, got {decision_lead!r}")
    if model is PhysicalModel.ARRIVAL_TIME:
        return geometry.len_switch_bs2 / decision_lead / SPEED_OF_LIGHT
    return 1.0 / geometry.n_switch_bs2


def run_channel(
    frame: BitFrame,
    model: PhysicalModel,
    geometry: ExperimentGeometry,
    seed: int,
    align: Alignment = Alignment.AT_ARRIVAL,
    start_time: float = 0.0,
    workers: int = 1,
) -> tuple[DecodedMessage, list[DetectionRecord]]:
    """encode -> simulate -> decode for one frame."""
    schedule = encode(frame, start_time)
    emissions = schedule_emissions(frame, geometry, align, start_time=start_time)
    records = run_experiment(model, schedule, geometry, emissions, seed, workers)
    decoded = decode(group_by_symbol(records, frame), frame)
    return decoded, records


def default_decision_lead(frame: BitFrame) -> float:
    """Shortest toggle-to-alignment-event gap under the even-spacing rule."""
    return frame.symbol_period / (2 * frame.photons_per_symbol)


def channel_report(
    sent: BitFrame,
    decoded: DecodedMessage,
    geometry: ExperimentGeometry,
    model: PhysicalModel,
    decision_lead: float | None = None,
) -> ChannelReport:
    """BER, mutual information and effective velocity for one frame."""
    if decision_lead is None:
        decision_lead = default_decision_lead(sent)
    return ChannelReport(
        ber=ber(sent, decoded),
        mutual_information=mutual_information_estimate(confusion_counts(sent, decoded)),
        effective_velocity_over_c=effective_signal_velocity(geometry, model, decision_lead),
        model=model,
    )
