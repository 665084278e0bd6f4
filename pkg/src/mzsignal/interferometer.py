"""Spacetime model of the switched Mach-Zehnder apparatus.

The optical layout is: source -> beam splitter 1 -> (glass fiber) -> optical
switch in arm X -> free path -> beam splitter 2 -> detectors X and Y.  The
switch follows a piecewise-constant on/off schedule.  Two rival rules decide
whether recombination at beam splitter 2 is coherent:

* ArrivalTime: coherence is set by the switch state at the instant the
  photon arrives at beam splitter 2 (the delayed-influence hypothesis;
  "pilot-wave" is an accepted alias because it predicts the same thing).
* PassageTime: the photon's fate is sealed by the switch state when it
  passes the switch location (the causal alternative).

In both rules the switch is physically absorbing: a photon that meets an
open ("off") switch loses its arm-X amplitude on the spot, and no later
toggle can restore it.
"""

import bisect
import cmath
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import streams
from .quantum import Mode, TwoModeState, _RSQRT2, _choose, block_mode, detection_probs

SPEED_OF_LIGHT = 299_792_458.0  # m/s


class SwitchState(Enum):
    ON = "On"
    OFF = "Off"

    def flipped(self) -> "SwitchState":
        return SwitchState.OFF if self is SwitchState.ON else SwitchState.ON


class Outcome(Enum):
    DET_X = "DetX"
    DET_Y = "DetY"
    BLOCKED = "Blocked"


class PhysicalModel(Enum):
    ARRIVAL_TIME = "arrival-time"
    PASSAGE_TIME = "passage-time"


# "pilot-wave" resolves to the arrival-time rule: a pilot wave present (or
# absent) at beam splitter 2 when the photon gets there is exactly the
# switch-state-at-arrival criterion, so no separate dynamics are needed.
MODEL_NAMES = {
    "arrival-time": PhysicalModel.ARRIVAL_TIME,
    "passage-time": PhysicalModel.PASSAGE_TIME,
    "pilot-wave": PhysicalModel.ARRIVAL_TIME,
}


def resolve_model(name: str) -> PhysicalModel:
    """Map a model name (including aliases) to its variant."""
    key = name.strip().lower().replace("_", "-")
    try:
        return MODEL_NAMES[key]
    except KeyError:
        accepted = ", ".join(sorted(MODEL_NAMES))
        raise ValueError(f"unknown model {name!r}; accepted names: {accepted}") from None


@dataclass(frozen=True)
class ExperimentGeometry:
    """Segment lengths (m) and refractive indices of the light path.

    Defaults follow the historical layout where they are known: a 5 m glass
    fiber (n = 1.5) between beam splitter 1 and the switch.  The 4 m vacuum
    gap between switch and beam splitter 2 is a configurable choice of this
    simulator, not a measured value.
    """

    len_src_bs1: float = 0.0
    len_bs1_switch: float = 5.0
    len_switch_bs2: float = 4.0
    n_src_bs1: float = 1.0
    n_bs1_switch: float = 1.5
    n_switch_bs2: float = 1.0

    def __post_init__(self):
        for name in ("len_src_bs1", "len_bs1_switch", "len_switch_bs2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{name} must be a finite length >= 0, got {value!r}")
        for name in ("n_src_bs1", "n_bs1_switch", "n_switch_bs2"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 1.0):
                raise ValueError(f"{name} must be a finite index >= 1, got {value!r}")

    @property
    def transit_to_switch(self) -> float:
        """Flight time (s) from emission to the optical switch."""
        return (
            self.len_src_bs1 * self.n_src_bs1 + self.len_bs1_switch * self.n_bs1_switch
        ) / SPEED_OF_LIGHT

    @property
    def transit_switch_bs2(self) -> float:
        """Flight time (s) from the switch to beam splitter 2."""
        return self.len_switch_bs2 * self.n_switch_bs2 / SPEED_OF_LIGHT

    @property
    def transit_total(self) -> float:
        """Flight time (s) from emission to beam splitter 2."""
        return self.transit_to_switch + self.transit_switch_bs2


@dataclass(frozen=True)
class SwitchSchedule:
    """Piecewise-constant on/off timeline of the optical switch.

    The schedule is right-continuous: at a toggle instant the new state
    already holds.
    """

    initial: SwitchState
    toggles: tuple[float, ...] = ()

    def __post_init__(self):
        if not isinstance(self.initial, SwitchState):
            raise ValueError(f"initial must be a SwitchState, got {self.initial!r}")
        toggles = tuple(float(t) for t in self.toggles)
        object.__setattr__(self, "toggles", toggles)
        for t in toggles:
            if not math.isfinite(t):
                raise ValueError(f"toggle times must be finite, got {t!r}")
        if any(b <= a for a, b in zip(toggles, toggles[1:])):
            raise ValueError("toggle times must be strictly increasing")

    @classmethod
    def always_on(cls) -> "SwitchSchedule":
        return cls(SwitchState.ON)

    @classmethod
    def always_off(cls) -> "SwitchSchedule":
        return cls(SwitchState.OFF)

    def state_at(self, t: float) -> SwitchState:
        """Switch state at time ``t`` (new state exactly at a toggle)."""
        if not math.isfinite(t):
            raise ValueError(f"query time must be finite, got {t!r}")
        flips = bisect.bisect_right(self.toggles, t)
        return self.initial if flips % 2 == 0 else self.initial.flipped()


@dataclass(frozen=True, slots=True)
class PhotonTrial:
    """One photon: when it leaves the source and the interferometer phase."""

    emission_time: float
    phase: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.emission_time):
            raise ValueError(f"emission_time must be finite, got {self.emission_time!r}")
        if not math.isfinite(self.phase):
            raise ValueError(f"phase must be finite, got {self.phase!r}")


@dataclass(frozen=True, slots=True)
class DetectionRecord:
    """Full audit record of one photon's trip through the apparatus."""

    outcome: Outcome
    emission_time: float
    passage_time: float
    arrival_time: float
    switch_at_passage: SwitchState
    switch_at_arrival: SwitchState
    coherent: bool


def transit_times(trial: PhotonTrial, geometry: ExperimentGeometry) -> tuple[float, float]:
    """(passage_time at the switch, arrival_time at beam splitter 2)."""
    passage = trial.emission_time + geometry.transit_to_switch
    return passage, passage + geometry.transit_switch_bs2


_BALANCED = TwoModeState(_RSQRT2, 1j * _RSQRT2)


def _launch_state(phase: float) -> TwoModeState:
    # Equals apply(phase_shift(phase, Mode.X), apply(bs50(), TwoModeState(1, 0)));
    # spelled out because this runs once per photon.
    if phase == 0.0:
        return _BALANCED
    return TwoModeState(cmath.exp(1j * phase) * _RSQRT2, 1j * _RSQRT2)


def _decide_trial(
    model: PhysicalModel,
    trial: PhotonTrial,
    schedule: SwitchSchedule,
    geometry: ExperimentGeometry,
    u_block: float,
    u_click: float,
) -> DetectionRecord:
    """Trial outcome from two pre-drawn uniforms (see run_trial)."""
    passage, arrival = transit_times(trial, geometry)
    sw_passage = schedule.state_at(passage)
    sw_arrival = schedule.state_at(arrival)
    state = _launch_state(trial.phase)

    both_arms = sw_passage is SwitchState.ON
    if not both_arms:
        survivor, blocked_prob = block_mode(state, Mode.X)
        if survivor is None or u_block < blocked_prob:
            return DetectionRecord(
                Outcome.BLOCKED, trial.emission_time, passage, arrival,
                sw_passage, sw_arrival, False,
            )
        state = survivor

    if model is PhysicalModel.PASSAGE_TIME:
        coherent = both_arms
    else:
        coherent = both_arms and sw_arrival is SwitchState.ON

    px, py = detection_probs(state, coherent)
    click = _choose(px, py, u_click)
    outcome = Outcome.DET_X if click is Mode.X else Outcome.DET_Y
    return DetectionRecord(
        outcome, trial.emission_time, passage, arrival,
        sw_passage, sw_arrival, coherent,
    )


def run_trial(
    model: PhysicalModel,
    trial: PhotonTrial,
    schedule: SwitchSchedule,
    geometry: ExperimentGeometry,
    rng: np.random.Generator,
) -> DetectionRecord:
    """Simulate one photon.

    Consumes exactly one draw block (``streams.DRAWS_PER_BLOCK`` uniforms)
    from ``rng``: draw 0 decides absorption at an off switch, draw 1 decides
    the detector click, the rest are reserved.  The fixed budget is what
    makes trial i of a batch own counter tick i of the master stream.
    """
    u = rng.random(streams.DRAWS_PER_BLOCK)
    return _decide_trial(model, trial, schedule, geometry, float(u[0]), float(u[1]))


def _trial_chunk(args) -> list[DetectionRecord]:
    model, schedule, geometry, chunk, seed, start = args
    rng = streams.block_stream(seed, start)
    u = rng.random(streams.DRAWS_PER_BLOCK * len(chunk))
    step = streams.DRAWS_PER_BLOCK
    return [
        _decide_trial(model, trial, schedule, geometry, u[i * step], u[i * step + 1])
        for i, trial in enumerate(chunk)
    ]


def run_experiment(
    model: PhysicalModel,
    schedule: SwitchSchedule,
    geometry: ExperimentGeometry,
    emissions: list[PhotonTrial],
    seed: int,
    workers: int = 1,
) -> list[DetectionRecord]:
    """Simulate a batch of photons, one record per trial.

    Results are a pure function of (inputs, seed): trial i always uses
    counter tick i of the seed's master stream, so worker count and
    execution order are unobservable in the output.
    """
    if len(emissions) == 0:
        raise ValueError("emissions must be nonempty")
    if workers <= 1:
        return _trial_chunk((model, schedule, geometry, emissions, seed, 0))
    bounds = np.linspace(0, len(emissions), workers + 1).astype(int)
    tasks = [
        (model, schedule, geometry, emissions[a:b], seed, int(a))
        for a, b in zip(bounds, bounds[1:])
        if b > a
    ]
    records: list[DetectionRecord] = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_trial_chunk, tasks):
            records.extend(part)
    return records


def estimate_px(records: list[DetectionRecord]) -> tuple[float, float]:
    """Detector-X fraction among detected photons, with binomial stderr."""
    n_x = sum(1 for r in records if r.outcome is Outcome.DET_X)
    n_y = sum(1 for r in records if r.outcome is Outcome.DET_Y)
    n = n_x + n_y
    if n == 0:
        raise ValueError("no detector clicks: every photon was blocked")
    p = n_x / n
    return p, math.sqrt(p * (1.0 - p) / n)


def blocked_fraction(records: list[DetectionRecord]) -> float:
    """Fraction of emitted photons absorbed at the switch."""
    if not records:
        raise ValueError("records must be nonempty")
    return sum(1 for r in records if r.outcome is Outcome.BLOCKED) / len(records)
