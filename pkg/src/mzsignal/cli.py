"""Command-line driver: config parsing, experiment dispatch, result emission.

Configs are flat JSON objects; every key has a flag of the same name (with
dashes) that overrides the file value.  A run is fully determined by its
echoed config, and rerunning any experiment with the same config and seed
reproduces its output files byte for byte.

Exit codes: 0 success, 2 config or usage errors, 1 runtime failures.
"""

import argparse
import csv
import json
import math
import secrets
import sys
import time
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Any

from . import streams
from .diffraction import (
    PatternKind,
    ScreenSample,
    SlitGeometry,
    log_likelihood_ratio,
    sample_positions,
    transition_experiment,
    window_coverage,
)
from .interferometer import (
    SPEED_OF_LIGHT,
    DetectionRecord,
    ExperimentGeometry,
    PhotonTrial,
    PhysicalModel,
    SwitchSchedule,
    SwitchState,
    blocked_fraction,
    resolve_model,
    run_experiment,
)
from .signaling import (
    Alignment,
    BitFrame,
    channel_report,
    default_decision_lead,
    run_channel,
)

SCHEMA_VERSION = 1

EXPERIMENTS = (
    "interferometer",
    "send-message",
    "double-slit",
    "transition",
    "compare-models",
)

RECORD_CSV_HEADER = (
    "outcome",
    "emission_time",
    "passage_time",
    "arrival_time",
    "switch_at_passage",
    "switch_at_arrival",
    "coherent",
)
SAMPLE_CSV_HEADER = ("x", "arrival_time")


class ConfigError(Exception):
    """Invalid configuration; the message names the offending key."""


def _positive_int(key, value, minimum=1):
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ConfigError(f"{key}: must be an integer >= {minimum}, got {value!r}")
    return value


def _finite_float(key, value):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: must be a number, got {value!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {value!r}")
    return value


def _positive_float(key, value):
    value = _finite_float(key, value)
    if value <= 0.0:
        raise ConfigError(f"{key}: must be > 0, got {value!r}")
    return value


def _nonneg_float(key, value):
    value = _finite_float(key, value)
    if value < 0.0:
        raise ConfigError(f"{key}: must be >= 0, got {value!r}")
    return value


def _index_float(key, value):
    value = _finite_float(key, value)
    if value < 1.0:
        raise ConfigError(f"{key}: refractive index must be >= 1, got {value!r}")
    return value


def _choice(key, value, options):
    if not isinstance(value, str) or value.lower() not in options:
        raise ConfigError(f"{key}: must be one of {sorted(options)}, got {value!r}")
    return value.lower()


def _seed_value(key, value):
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value < 2**64:
        raise ConfigError(f"{key}: must be an unsigned 64-bit integer, got {value!r}")
    return value


def _bits_value(key, value):
    if not isinstance(value, str) or not value or set(value) - {"0", "1"}:
        raise ConfigError(f"{key}: must be a nonempty string of 0s and 1s, got {value!r}")
    return value


def _toggles_value(key, value):
    if isinstance(value, str):
        parts = [p for p in value.split(",") if p.strip()]
    elif isinstance(value, (list, tuple)):
        parts = list(value)
    else:
        raise ConfigError(f"{key}: must be a list of times, got {value!r}")
    times = tuple(_finite_float(key, p) for p in parts)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ConfigError(f"{key}: toggle times must be strictly increasing")
    return times


def _model_value(key, value):
    try:
        resolve_model(str(value))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    return str(value)


def _alpha_value(key, value):
    value = _finite_float(key, value)
    if not 0.0 < value < 0.5:
        raise ConfigError(f"{key}: must lie in (0, 0.5), got {value!r}")
    return value


@dataclass(frozen=True)
class _Key:
    name: str
    default: Any
    check: Any
    experiments: tuple[str, ...]
    help: str
    flag_type: Any = str


_MZ = ("interferometer", "send-message", "compare-models")
_SCHED = ("interferometer", "compare-models")
_SLIT = ("double-slit", "transition")

_KEYS = [
    _Key("seed", None, _seed_value, EXPERIMENTS, "64-bit seed (generated and printed if omitted)", int),
    _Key("output", None, lambda k, v: str(v), EXPERIMENTS, "output file path (stdout summary if omitted)"),
    _Key("format", "json", lambda k, v: _choice(k, v, {"csv", "json"}), EXPERIMENTS, "output format"),
    _Key("model", "arrival-time", _model_value, _MZ, "physical model: arrival-time, passage-time, or pilot-wave"),
    _Key("trials", 10_000, _positive_int, ("interferometer", "compare-models", "double-slit"), "number of photons to simulate", int),
    _Key("workers", 1, _positive_int, _MZ, "parallel worker processes for trial evaluation", int),
    _Key("phase", 0.0, _finite_float, _SCHED, "interferometer phase offset on arm X (radians)", float),
    _Key("schedule_initial", "on", lambda k, v: _choice(k, v, {"on", "off"}), _SCHED, "switch state before the first toggle"),
    _Key("schedule_toggles", (), _toggles_value, _SCHED, "comma-separated toggle times in seconds"),
    _Key("len_src_bs1", 0.0, _nonneg_float, _MZ, "source to beam splitter 1 length (m)", float),
    _Key("len_bs1_switch", 5.0, _nonneg_float, _MZ, "beam splitter 1 to switch length (m)", float),
    _Key("len_switch_bs2", 4.0, _nonneg_float, _MZ, "switch to beam splitter 2 length (m)", float),
    _Key("n_src_bs1", 1.0, _index_float, _MZ, "refractive index, source to beam splitter 1", float),
    _Key("n_bs1_switch", 1.5, _index_float, _MZ, "refractive index, beam splitter 1 to switch", float),
    _Key("n_switch_bs2", 1.0, _index_float, _MZ, "refractive index, switch to beam splitter 2", float),
    _Key("bits", "10110", _bits_value, ("send-message",), "bit string to transmit"),
    _Key("symbol_period", 1e-3, _positive_float, ("send-message",), "seconds per symbol window", float),
    _Key("photons_per_symbol", 64, _positive_int, ("send-message",), "photons emitted per symbol", int),
    _Key("align", "at-arrival", lambda k, v: _choice(k, v, {"at-arrival", "at-passage"}), ("send-message",), "flight event centered in each symbol window"),
    _Key("decision_lead", None, _positive_float, ("send-message",), "toggle-to-event lead (s) for the velocity figure; default period/(2m)", float),
    _Key("wavelength", 633e-9, _positive_float, _SLIT, "light wavelength (m)", float),
    _Key("slit_width", 50e-6, _positive_float, _SLIT, "slit width a (m)", float),
    _Key("slit_separation", 250e-6, _positive_float, _SLIT, "slit separation d (m)", float),
    _Key("screen_distance", 1.0, _positive_float, _SLIT, "slit plane to screen distance L (m)", float),
    _Key("window_min", -0.15, _finite_float, _SLIT, "screen window lower edge (m)", float),
    _Key("window_max", 0.15, _finite_float, _SLIT, "screen window upper edge (m)", float),
    _Key("pattern", "double", lambda k, v: _choice(k, v, {"single", "double"}), ("double-slit",), "which pattern the photons follow"),
    _Key("photon_rate", 1e6, _positive_float, ("double-slit", "transition"), "photons per second crossing the slit plane", float),
    _Key("open_time", 0.0, _finite_float, ("transition",), "instant the second slit opens (s)", float),
    _Key("alpha", 0.01, _alpha_value, ("transition",), "SPRT error bound", float),
    _Key("photon_budget", 1_000_000, _positive_int, ("transition",), "max photons before the test reports inconclusive", int),
]

_KEY_BY_NAME = {k.name: k for k in _KEYS}


def keys_for(experiment: str) -> list[_Key]:
    return [k for k in _KEYS if experiment in k.experiments]


@dataclass
class RunConfig:
    """Fully validated inputs of one run (only the experiment's keys are set)."""

    experiment: str
    values: dict[str, Any]
    seed_generated: bool = False

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None

    # Execution details that provably cannot change the computed results:
    # the output path is a sink location, and the worker count is
    # unobservable by the determinism contract of run_experiment.
    _NOT_ECHOED = ("output", "workers")

    def echo(self) -> dict[str, Any]:
        """Flat config dict that reproduces this run when fed back in."""
        out: dict[str, Any] = {"experiment": self.experiment}
        for key in keys_for(self.experiment):
            if key.name in self._NOT_ECHOED:
                continue
            value = self.values[key.name]
            if key.name == "schedule_toggles":
                value = list(value)
            out[key.name] = value
        return out

    def geometry(self) -> ExperimentGeometry:
        return ExperimentGeometry(
            len_src_bs1=self.len_src_bs1,
            len_bs1_switch=self.len_bs1_switch,
            len_switch_bs2=self.len_switch_bs2,
            n_src_bs1=self.n_src_bs1,
            n_bs1_switch=self.n_bs1_switch,
            n_switch_bs2=self.n_switch_bs2,
        )

    def slit_geometry(self) -> SlitGeometry:
        return SlitGeometry(
            wavelength=self.wavelength,
            slit_width=self.slit_width,
            slit_separation=self.slit_separation,
            screen_distance=self.screen_distance,
            screen_window=(self.window_min, self.window_max),
        )

    def schedule(self) -> SwitchSchedule:
        initial = SwitchState.ON if self.schedule_initial == "on" else SwitchState.OFF
        return SwitchSchedule(initial, tuple(self.schedule_toggles))


@dataclass
class RunSummary:
    """Everything one run produced; payload is the per-photon data stream."""

    experiment: str
    config: dict[str, Any]
    metrics: dict[str, Any]
    duration_seconds: float = 0.0
    payload: list = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """JSON-stable summary; volatile fields (duration) stay out so that
        identical configs produce byte-identical files."""
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "config": self.config,
            "metrics": self.metrics,
        }


def parse_config(
    experiment: str,
    config_file: str | None = None,
    overrides: dict[str, Any] | None = None,
) -> RunConfig:
    """Merge defaults, config-file values and flag overrides, then validate."""
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {list(EXPERIMENTS)}, got {experiment!r}")
    allowed = {k.name for k in keys_for(experiment)}
    merged = {k.name: k.default for k in keys_for(experiment)}

    if config_file is not None:
        try:
            with open(config_file, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"config: cannot read {config_file}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: {config_file} is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config: {config_file} must hold a JSON object")
        for key, value in loaded.items():
            if key == "experiment":
                if value != experiment:
                    raise ConfigError(
                        f"experiment: config file says {value!r} but the "
                        f"{experiment!r} subcommand was invoked"
                    )
                continue
            if key not in allowed:
                raise ConfigError(f"{key}: unknown key for experiment {experiment!r}")
            merged[key] = value

    for key, value in (overrides or {}).items():
        if key not in allowed:
            raise ConfigError(f"{key}: unknown key for experiment {experiment!r}")
        merged[key] = value

    values: dict[str, Any] = {}
    for spec in keys_for(experiment):
        value = merged[spec.name]
        if value is None:
            values[spec.name] = None
        else:
            values[spec.name] = spec.check(spec.name, value)

    if "window_min" in values and values["window_min"] >= values["window_max"]:
        raise ConfigError("window_min: must be strictly less than window_max")
    if experiment == "compare-models" and values["format"] != "json":
        raise ConfigError("format: compare-models writes a JSON summary; use format=json")

    seed_generated = values["seed"] is None
    if seed_generated:
        values["seed"] = secrets.randbits(64)
    return RunConfig(experiment=experiment, values=values, seed_generated=seed_generated)


def _toggle_between(schedule: SwitchSchedule, passage: float, arrival: float) -> bool:
    return bisect_right(schedule.toggles, arrival) > bisect_right(schedule.toggles, passage)


def _detection_metrics(records) -> dict[str, Any]:
    n_x = sum(1 for r in records if r.outcome.value == "DetX")
    n_y = sum(1 for r in records if r.outcome.value == "DetY")
    detected = n_x + n_y
    metrics: dict[str, Any] = {
        "trials": len(records),
        "det_x": n_x,
        "det_y": n_y,
        "blocked": len(records) - detected,
        "blocked_fraction": blocked_fraction(records),
    }
    if detected:
        p = n_x / detected
        metrics["p_x_estimate"] = p
        metrics["p_x_stderr"] = math.sqrt(p * (1.0 - p) / detected)
    else:
        metrics["p_x_estimate"] = None
        metrics["p_x_stderr"] = None
    return metrics


def _run_interferometer(cfg: RunConfig) -> tuple[dict[str, Any], list]:
    model = resolve_model(cfg.model)
    emissions = [PhotonTrial(0.0, cfg.phase)] * cfg.trials
    records = run_experiment(model, cfg.schedule(), cfg.geometry(), emissions, cfg.seed, cfg.workers)
    metrics = _detection_metrics(records)
    metrics["model_resolved"] = model.value
    return metrics, records


def _run_send_message(cfg: RunConfig) -> tuple[dict[str, Any], list]:
    model = resolve_model(cfg.model)
    frame = BitFrame(
        bits=tuple(int(c) for c in cfg.bits),
        symbol_period=cfg.symbol_period,
        photons_per_symbol=cfg.photons_per_symbol,
    )
    geometry = cfg.geometry()
    decoded, records = run_channel(
        frame, model, geometry, cfg.seed, Alignment(cfg.align), workers=cfg.workers
    )
    lead = cfg.decision_lead if cfg.decision_lead is not None else default_decision_lead(frame)
    report = channel_report(frame, decoded, geometry, model, lead)
    metrics = {
        "model_resolved": model.value,
        "sent_bits": cfg.bits,
        "decoded_bits": "".join(str(b) for b in decoded.bits),
        "ber": report.ber,
        "mutual_information_bits": report.mutual_information,
        "effective_velocity_over_c": report.effective_velocity_over_c,
        "decision_lead": lead,
        "per_symbol_stat": list(decoded.per_symbol_stat),
    }
    return metrics, records


def _run_double_slit(cfg: RunConfig) -> tuple[dict[str, Any], list]:
    g = cfg.slit_geometry()
    kind = PatternKind.SINGLE_SLIT if cfg.pattern == "single" else PatternKind.DOUBLE_SLIT
    xs = sample_positions(kind, g, cfg.trials, streams.substream(cfg.seed, 0))
    flight = g.screen_distance / SPEED_OF_LIGHT
    samples = [
        ScreenSample(float(x), k / cfg.photon_rate + flight) for k, x in enumerate(xs)
    ]
    metrics = {
        "pattern": cfg.pattern,
        "n_samples": len(samples),
        "window_coverage": window_coverage(kind, g),
        "fraunhofer_parameter": g.fraunhofer_parameter,
        "fringe_spacing": g.fringe_spacing,
        "envelope_scale": g.envelope_scale,
        "log_likelihood_ratio_double_vs_single": log_likelihood_ratio(xs, g),
    }
    return metrics, samples


def _run_transition(cfg: RunConfig) -> tuple[dict[str, Any], list]:
    g = cfg.slit_geometry()
    result = transition_experiment(
        g, cfg.open_time, cfg.photon_rate, cfg.alpha, cfg.seed, cfg.photon_budget
    )
    metrics = {
        "conclusive": result.conclusive,
        "identify_time": result.identify_time,
        "implied_speed_over_c": result.implied_speed_over_c,
        "photons_used": result.photons_used,
        "flight_time": g.screen_distance / SPEED_OF_LIGHT,
    }
    return metrics, list(result.samples)


def run(config: RunConfig) -> RunSummary:
    """Execute the configured experiment and collect its summary."""
    runners = {
        "interferometer": _run_interferometer,
        "send-message": _run_send_message,
        "double-slit": _run_double_slit,
        "transition": _run_transition,
        "compare-models": None,
    }
    if config.experiment == "compare-models":
        return compare_models(config)
    start = time.perf_counter()
    metrics, payload = runners[config.experiment](config)
    duration = time.perf_counter() - start
    return RunSummary(
        experiment=config.experiment,
        config=config.echo(),
        metrics=metrics,
        duration_seconds=duration,
        payload=payload,
    )


def compare_models(config: RunConfig) -> RunSummary:
    """Run the same seeded experiment under both rival rules, side by side."""
    start = time.perf_counter()
    geometry = config.geometry()
    schedule = config.schedule()
    emissions = [PhotonTrial(0.0, config.phase)] * config.trials
    per_model: dict[str, Any] = {}
    records_by_model = {}
    for model in (PhysicalModel.ARRIVAL_TIME, PhysicalModel.PASSAGE_TIME):
        records = run_experiment(model, schedule, geometry, emissions, config.seed, config.workers)
        per_model[model.value] = _detection_metrics(records)
        records_by_model[model] = records
    reference = records_by_model[PhysicalModel.ARRIVAL_TIME]
    differing = [
        i
        for i, r in enumerate(reference)
        if _toggle_between(schedule, r.passage_time, r.arrival_time)
    ]
    metrics = {
        "models": per_model,
        "differing_trials_count": len(differing),
        "differing_trials": differing,
    }
    return RunSummary(
        experiment=config.experiment,
        config=config.echo(),
        metrics=metrics,
        duration_seconds=time.perf_counter() - start,
        payload=[],
    )


def _csv_rows(payload) -> tuple[tuple[str, ...], list[tuple]]:
    if payload and isinstance(payload[0], ScreenSample):
        return SAMPLE_CSV_HEADER, [(s.x, s.arrival_time) for s in payload]
    rows = [
        (
            r.outcome.value,
            r.emission_time,
            r.passage_time,
            r.arrival_time,
            r.switch_at_passage.value,
            r.switch_at_arrival.value,
            "true" if r.coherent else "false",
        )
        for r in payload
    ]
    return RECORD_CSV_HEADER, rows


def emit(data, fmt: str, path: str | None) -> None:
    """Write records/samples as CSV or a summary as JSON (stdout if no path).

    CSV rows carry one detection record (or screen sample) each; times are
    plain double-precision seconds.  JSON summaries have stable key order.
    """
    if fmt == "csv":
        if isinstance(data, RunSummary):
            data = data.payload
        header, rows = _csv_rows(data)
        text_target = open(path, "w", encoding="utf-8", newline="") if path else sys.stdout
        try:
            writer = csv.writer(text_target, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        except OSError as exc:
            raise RuntimeError(f"cannot write output file {path}: {exc}") from None
        finally:
            if path:
                text_target.close()
    elif fmt == "json":
        obj = data.to_dict() if isinstance(data, RunSummary) else data
        text = json.dumps(obj, indent=2) + "\n"
        if path:
            try:
                with open(path, "w", encoding="utf-8") as fh:
                    fh.write(text)
            except OSError as exc:
                raise RuntimeError(f"cannot write output file {path}: {exc}") from None
        else:
            sys.stdout.write(text)
    else:
        raise ValueError(f"unknown format {fmt!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mzsignal",
        description="Monte Carlo test bench for delayed-choice Mach-Zehnder signaling",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for experiment in EXPERIMENTS:
        p = sub.add_parser(experiment, help=f"run the {experiment} experiment")
        p.add_argument("--config", metavar="PATH", default=None, help="JSON config file")
        for key in keys_for(experiment):
            p.add_argument(
                "--" + key.name.replace("_", "-"),
                dest=key.name,
                type=key.flag_type,
                default=None,
                help=key.help + (f" (default {key.default!r})" if key.default is not None else ""),
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {
        key.name: getattr(args, key.name)
        for key in keys_for(args.experiment)
        if getattr(args, key.name) is not None
    }
    try:
        cfg = parse_config(args.experiment, args.config, overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        summary = run(cfg)
        if cfg.output is not None:
            if cfg.format == "csv":
                emit(summary, "csv", cfg.output)
            else:
                emit(summary, "json", cfg.output)
        else:
            emit(summary, "json", None)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    seed_note = " (generated)" if cfg.seed_generated else ""
    print(
        f"{cfg.experiment}: seed={cfg.seed}{seed_note} "
        f"duration={summary.duration_seconds:.3f}s",
        file=sys.stderr,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
