"""Far-field slit patterns and how fast a receiver can tell them apart.

A single slit of width a throws the smooth envelope sinc^2(pi a x / (lambda L))
on a screen at distance L; opening the second slit (separation d) multiplies
it by the fringe factor cos^2(pi d x / (lambda L)).  Photons land one by one
at positions drawn from the normalized pattern, and a sequential probability
ratio test (SPRT) on those positions decides which pattern is live.

The transition experiment opens the second slit at a chosen instant and asks
when the SPRT at the screen can certify the change.  Every photon still needs
L / c to fly from the slit plane to the screen, and the test needs a positive
number of post-transition photons, so the implied "pattern formation speed"
never exceeds c.  (Following common usage the single-slit pattern is often
called the Airy pattern; strictly that name belongs to a circular aperture.)
"""

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.integrate import simpson

from . import streams
from .interferometer import SPEED_OF_LIGHT

# Minimum fraction of the infinite-screen intensity the window must capture
# before position sampling is considered faithful.
COVERAGE_MIN = 0.99
# Densities are floored at this fraction of the central-peak density so a
# sample landing on a pattern zero cannot produce an infinite log ratio.
DENSITY_FLOOR_RATIO = 1e-12
# a^2 / (lambda L) above this is reported as a far-field validity warning.
FRAUNHOFER_WARN = 0.1

_NORM_GRID = (1 << 21) + 1  # Simpson nodes for window normalization


class PatternKind(Enum):
    SINGLE_SLIT = "single"
    DOUBLE_SLIT = "double"


@dataclass(frozen=True)
class SlitGeometry:
    """Slit-plane and screen layout, all lengths in meters."""

    wavelength: float = 633e-9
    slit_width: float = 50e-6
    slit_separation: float = 250e-6
    screen_distance: float = 1.0
    screen_window: tuple[float, float] = (-0.15, 0.15)

    def __post_init__(self):
        for name in ("wavelength", "slit_width", "slit_separation", "screen_distance"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be a finite length > 0, got {value!r}")
        if self.slit_separation < self.slit_width:
            raise ValueError("slit_separation must be >= slit_width")
        window = (float(self.screen_window[0]), float(self.screen_window[1]))
        object.__setattr__(self, "screen_window", window)
        if not (math.isfinite(window[0]) and math.isfinite(window[1])):
            raise ValueError("screen_window bounds must be finite")
        if window[0] >= window[1]:
            raise ValueError("screen_window must satisfy x_min < x_max")
        if self.fraunhofer_parameter >= FRAUNHOFER_WARN:
            warnings.warn(
                f"far-field validity is marginal: a^2/(lambda L) = "
                f"{self.fraunhofer_parameter:.3g}",
                stacklevel=2,
            )

    @property
    def fraunhofer_parameter(self) -> float:
        """a^2 / (lambda L); the far-field formulas assume this << 1."""
        return self.slit_width**2 / (self.wavelength * self.screen_distance)

    @property
    def fringe_spacing(self) -> float:
        """Distance lambda L / d between adjacent double-slit maxima."""
        return self.wavelength * self.screen_distance / self.slit_separation

    @property
    def envelope_scale(self) -> float:
        """First zero lambda L / a of the single-slit envelope."""
        return self.wavelength * self.screen_distance / self.slit_width


def single_slit_intensity(x, g: SlitGeometry):
    """Envelope sinc^2(pi a x / (lambda L)), peak 1 at x = 0."""
    u = np.multiply(x, g.slit_width / (g.wavelength * g.screen_distance))
    return np.sinc(u) ** 2


def double_slit_intensity(x, g: SlitGeometry):
    """Fringes under the envelope: cos^2(pi d x / (lambda L)) * sinc^2(...)."""
    v = np.multiply(x, math.pi * g.slit_separation / (g.wavelength * g.screen_distance))
    return np.cos(v) ** 2 * single_slit_intensity(x, g)


def intensity(kind: PatternKind, x, g: SlitGeometry):
    if kind is PatternKind.SINGLE_SLIT:
        return single_slit_intensity(x, g)
    return double_slit_intensity(x, g)


@lru_cache(maxsize=64)
def _window_norm(kind: PatternKind, g: SlitGeometry) -> float:
    """Integral of the unnormalized intensity over the screen window."""
    xs = np.linspace(g.screen_window[0], g.screen_window[1], _NORM_GRID)
    return float(simpson(intensity(kind, xs, g), x=xs))


def _total_norm(kind: PatternKind, g: SlitGeometry) -> float:
    # Infinite-screen integrals in closed form: the envelope integrates to
    # lambda L / a, and for d >= a the fringe factor averages to exactly 1/2.
    lam_l_over_a = g.wavelength * g.screen_distance / g.slit_width
    if kind is PatternKind.SINGLE_SLIT:
        return lam_l_over_a
    return 0.5 * lam_l_over_a


def window_coverage(kind: PatternKind, g: SlitGeometry) -> float:
    """Fraction of the pattern's total intensity inside the window."""
    return _window_norm(kind, g) / _total_norm(kind, g)


def normalized_density(kind: PatternKind, x, g: SlitGeometry):
    """Probability density of a landing position, normalized on the window."""
    return intensity(kind, x, g) / _window_norm(kind, g)


def _check_window(kind: PatternKind, g: SlitGeometry) -> None:
    coverage = window_coverage(kind, g)
    if coverage < COVERAGE_MIN:
        raise ValueError(
            f"screen_window captures only {coverage:.4f} of the {kind.value}-slit "
            f"pattern; at least {COVERAGE_MIN} is required"
        )


def sample_positions(
    kind: PatternKind, g: SlitGeometry, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw n landing positions by rejection against a flat unit envelope.

    The target intensity never exceeds 1 (the fringe factor is bounded by 1
    and the envelope peaks at 1), so uniform proposals over the window
    accepted with probability intensity(x) reproduce the normalized pattern.
    The draw sequence is a pure function of the rng state.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    _check_window(kind, g)
    lo, hi = g.screen_window
    width = hi - lo
    accept_rate = _window_norm(kind, g) / width
    out = np.empty(n, dtype=float)
    filled = 0
    while filled < n:
        todo = n - filled
        batch = int(np.clip(todo / accept_rate * 1.2 + 16, 64, 1 << 21))
        xs = lo + width * rng.random(batch)
        keep = xs[rng.random(batch) < intensity(kind, xs, g)]
        take = min(todo, keep.size)
        out[filled : filled + take] = keep[:take]
        filled += take
    return out


def sample_position(kind: PatternKind, g: SlitGeometry, rng: np.random.Generator) -> float:
    """Draw one landing position."""
    return float(sample_positions(kind, g, 1, rng)[0])


def _llr_terms(xs, g: SlitGeometry) -> np.ndarray:
    """Per-sample log(p_double / p_single) with floored densities."""
    xs = np.asarray(xs, dtype=float)
    z_s = _window_norm(PatternKind.SINGLE_SLIT, g)
    z_d = _window_norm(PatternKind.DOUBLE_SLIT, g)
    p_s = np.maximum(single_slit_intensity(xs, g), DENSITY_FLOOR_RATIO) / z_s
    p_d = np.maximum(double_slit_intensity(xs, g), DENSITY_FLOOR_RATIO) / z_d
    return np.log(p_d) - np.log(p_s)


def log_likelihood_ratio(samples, g: SlitGeometry) -> float:
    """Total log(p_double / p_single) over samples; positive favors double."""
    xs = np.asarray(samples, dtype=float)
    if xs.size == 0:
        raise ValueError("samples must be nonempty")
    return float(np.sum(_llr_terms(xs, g)))


def sprt_thresholds(alpha: float, beta: float) -> tuple[float, float]:
    """(upper, lower) log-likelihood thresholds for error bounds (alpha, beta)."""
    for name, value in (("alpha", alpha), ("beta", beta)):
        if not 0.0 < value < 0.5:
            raise ValueError(f"{name} must lie in (0, 0.5), got {value!r}")
    return math.log((1.0 - beta) / alpha), math.log(beta / (1.0 - alpha))


@dataclass(frozen=True)
class SprtOutcome:
    """One sequential test: decision (None if the budget ran out), size, score."""

    decision: PatternKind | None
    n_samples: int
    log_likelihood: float


_SPRT_CHUNK = 64


def _sprt_run(
    truth: PatternKind,
    g: SlitGeometry,
    alpha: float,
    beta: float,
    rng: np.random.Generator,
    budget: int,
) -> SprtOutcome:
    """Run one SPRT on positions drawn from ``truth`` until it decides."""
    upper, lower = sprt_thresholds(alpha, beta)
    llr = 0.0
    used = 0
    while used < budget:
        m = min(_SPRT_CHUNK, budget - used)
        xs = sample_positions(truth, g, m, rng)
        path = llr + np.cumsum(_llr_terms(xs, g))
        crossed = np.nonzero((path >= upper) | (path <= lower))[0]
        if crossed.size:
            stop = int(crossed[0])
            decided = PatternKind.DOUBLE_SLIT if path[stop] >= upper else PatternKind.SINGLE_SLIT
            return SprtOutcome(decided, used + stop + 1, float(path[stop]))
        llr = float(path[-1])
        used += m
    return SprtOutcome(None, used, llr)


def photons_needed(
    alpha: float,
    beta: float,
    g: SlitGeometry,
    n_runs: int = 1000,
    seed: int = 0,
    budget: int = 100_000,
) -> int:
    """Expected SPRT sample count, estimated by Monte Carlo.

    Runs ``n_runs`` sequential tests under each true pattern and returns the
    mean count of the slower hypothesis, rounded up: the planning number for
    a receiver that must resolve the pattern either way.  Run i under
    hypothesis h draws from substream(seed, h * n_runs + i), so repeated
    calls (and calls at different error bounds) see identical sample paths.
    """
    if n_runs < 1:
        raise ValueError(f"n_runs must be >= 1, got {n_runs}")
    means = []
    for h, truth in enumerate((PatternKind.SINGLE_SLIT, PatternKind.DOUBLE_SLIT)):
        counts = [
            _sprt_run(truth, g, alpha, beta, streams.substream(seed, h * n_runs + i), budget).n_samples
            for i in range(n_runs)
        ]
        means.append(sum(counts) / n_runs)
    return math.ceil(max(means))


@dataclass(frozen=True, slots=True)
class ScreenSample:
    """One photon landing: screen position and screen-arrival time."""

    x: float
    arrival_time: float


@dataclass(frozen=True)
class TransitionResult:
    """Outcome of one slit-opening experiment."""

    conclusive: bool
    identify_time: float | None
    implied_speed_over_c: float | None
    photons_used: int
    samples: tuple[ScreenSample, ...]


def transition_experiment(
    g: SlitGeometry,
    open_time: float,
    photon_rate: float,
    alpha: float,
    seed: int,
    photon_budget: int = 1_000_000,
) -> TransitionResult:
    """Open the second slit at ``open_time`` and time the pattern detection.

    Photons cross the slit plane every 1 / photon_rate seconds after the
    opening, land L / c later at positions drawn from the double-slit
    pattern, and feed an SPRT (error bounds alpha on both sides) that starts
    fresh at the transition.  ``identify_time`` is the screen time of the
    deciding photon; if the test wrongly settles on the single-slit pattern
    it restarts and keeps watching.  Pre-transition photons are not drawn:
    the restarted statistic ignores them by construction.

    ``implied_speed_over_c`` = L / (c * (identify_time - open_time)) can
    reach but never exceed 1, because the deciding photon itself had to
    cover L after the transition.
    """
    if not (math.isfinite(photon_rate) and photon_rate > 0.0):
        raise ValueError(f"photon_rate must be > 0, got {photon_rate!r}")
    if not (math.isfinite(open_time)):
        raise ValueError(f"open_time must be finite, got {open_time!r}")
    if photon_budget < 1:
        raise ValueError(f"photon_budget must be >= 1, got {photon_budget}")
    upper, lower = sprt_thresholds(alpha, alpha)
    flight = g.screen_distance / SPEED_OF_LIGHT
    rng = streams.substream(seed, 0)
    llr = 0.0
    used = 0
    samples: list[ScreenSample] = []
    while used < photon_budget:
        m = min(_SPRT_CHUNK, photon_budget - used)
        xs = sample_positions(PatternKind.DOUBLE_SLIT, g, m, rng)
        terms = _llr_terms(xs, g)
        for x, term in zip(xs, terms):
            used += 1
            screen_time = open_time + used / photon_rate + flight
            samples.append(ScreenSample(float(x), screen_time))
            llr += float(term)
            if llr >= upper:
                latency = screen_time - open_time
                return TransitionResult(
                    conclusive=True,
                    identify_time=screen_time,
                    implied_speed_over_c=flight / latency,
                    photons_used=used,
                    samples=tuple(samples),
                )
            if llr <= lower:
                llr = 0.0
    return TransitionResult(
        conclusive=False,
        identify_time=None,
        implied_speed_over_c=None,
        photons_used=used,
        samples=tuple(samples),
    )
