"""Unit tests for the apparatus timeline, switch schedule and trial runner."""

import math

import numpy as np
import pytest

from mzsignal.interferometer import (
    SPEED_OF_LIGHT,
    ExperimentGeometry,
    Outcome,
    PhotonTrial,
    PhysicalModel,
    SwitchSchedule,
    SwitchState,
    _launch_state,
    blocked_fraction,
    estimate_px,
    resolve_model,
    run_experiment,
    run_trial,
    transit_times,
)
from mzsignal.quantum import Mode, TwoModeState, apply, bs50, phase_shift
from mzsignal.streams import master_stream


def fig3_setup(geometry=None, phase=0.0):
    """Always-on schedule toggled off midway between passage and arrival."""
    g = geometry or ExperimentGeometry()
    trial = PhotonTrial(0.0, phase)
    passage, arrival = transit_times(trial, g)
    schedule = SwitchSchedule(SwitchState.ON, ((passage + arrival) / 2,))
    return g, trial, schedule, passage, arrival


class TestGeometry:
    def test_transit_through_glass_fiber(self):
        g = ExperimentGeometry(len_src_bs1=0.0, len_bs1_switch=5.0, len_switch_bs2=0.0)
        passage, arrival = transit_times(PhotonTrial(0.0), g)
        assert passage == pytest.approx(5.0 * 1.5 / SPEED_OF_LIGHT, rel=1e-15)
        assert passage == pytest.approx(25.017e-9, abs=0.01e-9)
        assert arrival == passage

    def test_zero_lengths_degenerate(self):
        g = ExperimentGeometry(len_src_bs1=0.0, len_bs1_switch=0.0, len_switch_bs2=0.0)
        passage, arrival = transit_times(PhotonTrial(3.5), g)
        assert passage == 3.5
        assert arrival == 3.5

    def test_vacuum_gap_transit(self):
        g = ExperimentGeometry()
        passage, arrival = transit_times(PhotonTrial(0.0), g)
        assert arrival - passage == pytest.approx(4.0 / SPEED_OF_LIGHT, rel=1e-15)
        assert arrival - passage == pytest.approx(13.34e-9, abs=0.01e-9)

    def test_emission_offset_shifts_both_times(self):
        g = ExperimentGeometry()
        p0, a0 = transit_times(PhotonTrial(0.0), g)
        p1, a1 = transit_times(PhotonTrial(1.0), g)
        assert p1 - p0 == pytest.approx(1.0, rel=1e-12)
        assert a1 - a0 == pytest.approx(1.0, rel=1e-12)

    def test_invalid_geometry_rejected(self):
        with pytest.raises(ValueError, match="len_bs1_switch"):
            ExperimentGeometry(len_bs1_switch=-1.0)
        with pytest.raises(ValueError, match="n_switch_bs2"):
            ExperimentGeometry(n_switch_bs2=0.5)


class TestSwitchSchedule:
    def test_constant_schedule(self):
        assert SwitchSchedule.always_on().state_at(1.0) is SwitchState.ON

    def test_right_continuity_at_toggle(self):
        sched = SwitchSchedule(SwitchState.ON, (10e-9,))
        assert sched.state_at(10e-9) is SwitchState.OFF
        assert sched.state_at(10e-9 - 1e-15) is SwitchState.ON

    def test_toggle_parity(self):
        sched = SwitchSchedule(SwitchState.OFF, (5e-9, 15e-9))
        assert sched.state_at(10e-9) is SwitchState.ON
        assert sched.state_at(20e-9) is SwitchState.OFF
        assert sched.state_at(0.0) is SwitchState.OFF

    def test_non_increasing_toggles_rejected(self):
        with pytest.raises(ValueError, match="strictly increasing"):
            SwitchSchedule(SwitchState.ON, (2e-9, 2e-9))

    def test_matches_linear_scan(self):
        rng = np.random.default_rng(8)
        times = np.sort(rng.uniform(0, 1, size=25))
        sched = SwitchSchedule(SwitchState.ON, tuple(times))
        for t in rng.uniform(-0.1, 1.1, size=200):
            flips = int(np.sum(times <= t))
            expect = SwitchState.ON if flips % 2 == 0 else SwitchState.OFF
            assert sched.state_at(float(t)) is expect


class TestModelResolution:
    def test_accepted_names(self):
        assert resolve_model("arrival-time") is PhysicalModel.ARRIVAL_TIME
        assert resolve_model("passage-time") is PhysicalModel.PASSAGE_TIME
        assert resolve_model("pilot-wave") is PhysicalModel.ARRIVAL_TIME
        assert resolve_model("Pilot_Wave") is PhysicalModel.ARRIVAL_TIME

    def test_unknown_name_lists_accepted(self):
        with pytest.raises(ValueError, match="arrival-time, passage-time, pilot-wave"):
            resolve_model("wavefunction")


class TestLaunchState:
    def test_matches_unitary_chain(self):
        # the fast path must equal the explicit bs50 + phase-plate route
        for phi in np.linspace(-2 * math.pi, 2 * math.pi, 41):
            fast = _launch_state(float(phi))
            slow = apply(phase_shift(float(phi), Mode.X), apply(bs50(), TwoModeState(1.0, 0.0)))
            assert fast.amp_x == pytest.approx(slow.amp_x, abs=1e-12)
            assert fast.amp_y == pytest.approx(slow.amp_y, abs=1e-12)


class TestRunTrial:
    def test_always_on_clicks_detector_x(self):
        g = ExperimentGeometry()
        rng = master_stream(1)
        for _ in range(200):
            rec = run_trial(PhysicalModel.ARRIVAL_TIME, PhotonTrial(0.0), SwitchSchedule.always_on(), g, rng)
            assert rec.outcome is Outcome.DET_X
            assert rec.coherent

    def test_always_off_blocks_half_and_splits_rest(self):
        g = ExperimentGeometry()
        records = run_experiment(
            PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g,
            [PhotonTrial(0.0)] * 20_000, seed=2,
        )
        blocked = blocked_fraction(records)
        assert abs(blocked - 0.5) <= 3 * math.sqrt(0.25 / 20_000)
        px, _ = estimate_px(records)
        detected = sum(1 for r in records if r.outcome is not Outcome.BLOCKED)
        assert abs(px - 0.5) <= 3 * math.sqrt(0.25 / detected)
        assert all(r.switch_at_passage is SwitchState.OFF for r in records)
        assert all(not r.coherent for r in records)

    def test_fig3_scenario_separates_models(self):
        g, trial, schedule, _, _ = fig3_setup()
        arr = run_experiment(PhysicalModel.ARRIVAL_TIME, schedule, g, [trial] * 20_000, seed=3)
        pas = run_experiment(PhysicalModel.PASSAGE_TIME, schedule, g, [trial] * 20_000, seed=3)
        assert blocked_fraction(arr) == 0.0
        assert blocked_fraction(pas) == 0.0
        px_arr, _ = estimate_px(arr)
        px_pas, _ = estimate_px(pas)
        assert abs(px_arr - 0.5) <= 3 * math.sqrt(0.25 / 20_000)
        assert px_pas == 1.0

    def test_record_timestamps_and_switch_states(self):
        g, trial, schedule, passage, arrival = fig3_setup()
        rec = run_trial(PhysicalModel.ARRIVAL_TIME, trial, schedule, g, master_stream(4))
        assert rec.emission_time == 0.0
        assert rec.passage_time == passage
        assert rec.arrival_time == arrival
        assert rec.switch_at_passage is SwitchState.ON
        assert rec.switch_at_arrival is SwitchState.OFF
        assert not rec.coherent

    def test_timestamp_ordering_invariant(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            g = ExperimentGeometry(
                len_src_bs1=float(rng.uniform(0, 3)),
                len_bs1_switch=float(rng.uniform(0, 10)),
                len_switch_bs2=float(rng.uniform(0, 10)),
                n_bs1_switch=float(rng.uniform(1, 2)),
            )
            trial = PhotonTrial(float(rng.uniform(-1, 1)))
            rec = run_trial(
                PhysicalModel.PASSAGE_TIME, trial, SwitchSchedule.always_on(), g, master_stream(5)
            )
            assert rec.emission_time <= rec.passage_time <= rec.arrival_time


class TestRunExperiment:
    def test_single_trial(self):
        g = ExperimentGeometry()
        records = run_experiment(
            PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_on(), g, [PhotonTrial(0.0)], seed=0
        )
        assert len(records) == 1
        assert records[0].outcome is Outcome.DET_X

    def test_empty_emissions_rejected(self):
        g = ExperimentGeometry()
        with pytest.raises(ValueError, match="nonempty"):
            run_experiment(PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_on(), g, [], seed=0)

    def test_same_seed_identical_records(self):
        g = ExperimentGeometry()
        trials = [PhotonTrial(0.0)] * 4000
        a = run_experiment(PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g, trials, seed=6)
        b = run_experiment(PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g, trials, seed=6)
        assert a == b

    def test_worker_count_unobservable(self):
        g = ExperimentGeometry()
        trials = [PhotonTrial(0.0)] * 4000
        serial = run_experiment(PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g, trials, seed=7)
        parallel = run_experiment(
            PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g, trials, seed=7, workers=3
        )
        assert serial == parallel

    def test_sequential_run_trial_matches_batch(self):
        g, trial, schedule, _, _ = fig3_setup()
        batch = run_experiment(PhysicalModel.ARRIVAL_TIME, schedule, g, [trial] * 300, seed=8)
        rng = master_stream(8)
        one_by_one = [
            run_trial(PhysicalModel.ARRIVAL_TIME, trial, schedule, g, rng) for _ in range(300)
        ]
        assert batch == one_by_one

    def test_blocked_rate_is_model_independent(self):
        g = ExperimentGeometry()
        trials = [PhotonTrial(0.0)] * 10_000
        arr = run_experiment(PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g, trials, seed=9)
        pas = run_experiment(PhysicalModel.PASSAGE_TIME, SwitchSchedule.always_off(), g, trials, seed=9)
        assert [r.outcome is Outcome.BLOCKED for r in arr] == [
            r.outcome is Outcome.BLOCKED for r in pas
        ]


class TestScheduleInvariance:
    def test_arrival_time_ignores_toggles_after_arrival(self):
        g, trial, _, passage, arrival = fig3_setup()
        base = SwitchSchedule.always_on()
        late = SwitchSchedule(SwitchState.ON, (arrival + 1e-9, arrival + 2e-9))
        trials = [trial] * 5000
        a = run_experiment(PhysicalModel.ARRIVAL_TIME, base, g, trials, seed=10)
        b = run_experiment(PhysicalModel.ARRIVAL_TIME, late, g, trials, seed=10)
        assert a == b

    def test_passage_time_ignores_toggles_after_passage(self):
        g, trial, mid_toggle, passage, arrival = fig3_setup()
        base = SwitchSchedule.always_on()
        trials = [trial] * 5000
        a = run_experiment(PhysicalModel.PASSAGE_TIME, base, g, trials, seed=11)
        b = run_experiment(PhysicalModel.PASSAGE_TIME, mid_toggle, g, trials, seed=11)
        # outcome distribution is untouched even though the toggle sits inside
        # the passage -> arrival window; only the audit field differs
        assert [r.outcome for r in a] == [r.outcome for r in b]
        assert all(x.switch_at_arrival is SwitchState.ON for x in a)
        assert all(x.switch_at_arrival is SwitchState.OFF for x in b)

    def test_arrival_time_sensitive_to_mid_flight_toggle(self):
        g, trial, mid_toggle, _, _ = fig3_setup()
        base = SwitchSchedule.always_on()
        trials = [trial] * 5000
        a = run_experiment(PhysicalModel.ARRIVAL_TIME, base, g, trials, seed=12)
        b = run_experiment(PhysicalModel.ARRIVAL_TIME, mid_toggle, g, trials, seed=12)
        px_a, _ = estimate_px(a)
        px_b, _ = estimate_px(b)
        assert px_a == 1.0
        assert abs(px_b - 0.5) <= 3 * math.sqrt(0.25 / 5000)


class TestPhaseSweep:
    def test_px_follows_cos_squared(self):
        g = ExperimentGeometry()
        n = 3000
        for k, phi in enumerate(np.linspace(0.0, 2 * math.pi, 7)):
            records = run_experiment(
                PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_on(), g,
                [PhotonTrial(0.0, float(phi))] * n, seed=100 + k,
            )
            px, _ = estimate_px(records)
            expect = math.cos(phi / 2) ** 2
            sigma = math.sqrt(max(expect * (1 - expect), 1e-30) / n)
            assert abs(px - expect) <= max(3 * sigma, 1e-12)


class TestEstimatePx:
    def test_all_detector_x(self):
        g = ExperimentGeometry()
        records = run_experiment(
            PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_on(), g, [PhotonTrial(0.0)] * 50, seed=0
        )
        assert estimate_px(records) == (1.0, 0.0)

    def test_even_split_stderr(self):
        g, trial, schedule, _, _ = fig3_setup()
        records = run_experiment(PhysicalModel.ARRIVAL_TIME, schedule, g, [trial] * 40, seed=20)
        n_x = sum(1 for r in records if r.outcome is Outcome.DET_X)
        px, se = estimate_px(records)
        assert px == n_x / 40
        assert se == pytest.approx(math.sqrt(px * (1 - px) / 40), rel=1e-12)

    def test_blocked_only_rejected(self):
        with pytest.raises(ValueError, match="blocked"):
            g = ExperimentGeometry()
            trial = PhotonTrial(0.0)
            # hand-built blocked-only records via a schedule that always blocks
            # cannot exist (blocking is probabilistic), so filter real ones
            records = run_experiment(
                PhysicalModel.ARRIVAL_TIME, SwitchSchedule.always_off(), g, [trial] * 200, seed=21
            )
            blocked_only = [r for r in records if r.outcome is Outcome.BLOCKED]
            estimate_px(blocked_only)
