"""Two-mode single-photon amplitude algebra.

A photon inside the interferometer is a normalized pair of complex
amplitudes over the two arms X and Y.  Beam splitters and phase plates are
2x2 unitaries, the optical switch absorbs the amplitude of one arm, and
detection turns amplitudes into click probabilities.

Conventions (fixed here, used everywhere else in the package):

* the 50/50 beam splitter is the symmetric matrix (1/sqrt2) [[1, i], [i, 1]];
* detector X is wired to the output port that the balanced interferometer
  feeds, so the all-on, zero-phase configuration clicks X with certainty and
  a phase offset ``phi`` on arm X gives P(X) = cos^2(phi / 2).
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

# Exact-algebra tolerance for unitarity and state norms.
ALGEBRA_TOL = 1e-12
# Slack allowed on pX + pY = 1 when sampling an outcome.
PROB_SUM_TOL = 1e-9

_RSQRT2 = 1.0 / math.sqrt(2.0)


class Mode(Enum):
    """Interferometer arm (and matching detector) label."""

    X = "X"
    Y = "Y"


@dataclass(frozen=True)
class TwoModeState:
    """Normalized photon amplitudes over arms X and Y.

    ``survival`` is the probability that the photon still exists at all,
    accumulated over past absorption events; the amplitudes themselves stay
    normalized to 1 so the algebra never divides by a decaying norm.
    """

    amp_x: complex
    amp_y: complex
    survival: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "amp_x", complex(self.amp_x))
        object.__setattr__(self, "amp_y", complex(self.amp_y))
        for amp in (self.amp_x, self.amp_y):
            if not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
                raise ValueError(f"amplitudes must be finite, got {amp!r}")
        norm = abs(self.amp_x) ** 2 + abs(self.amp_y) ** 2
        if abs(norm - 1.0) > ALGEBRA_TOL:
            raise ValueError(f"|amp_x|^2 + |amp_y|^2 must be 1, got {norm!r}")
        if not (0.0 < self.survival <= 1.0):
            raise ValueError(f"survival must lie in (0, 1], got {self.survival!r}")

    def probabilities(self) -> tuple[float, float]:
        """Born weights of the two arms (not detector probabilities)."""
        return abs(self.amp_x) ** 2, abs(self.amp_y) ** 2


def bs50() -> np.ndarray:
    """Symmetric 50/50 beam-splitter unitary, (1/sqrt2) [[1, i], [i, 1]]."""
    return np.array(
        [[_RSQRT2, 1j * _RSQRT2], [1j * _RSQRT2, _RSQRT2]], dtype=np.complex128
    )


def phase_shift(phi: float, mode: Mode) -> np.ndarray:
    """Diagonal unitary applying exp(i phi) to one arm, identity to the other."""
    if not math.isfinite(phi):
        raise ValueError(f"phase must be finite, got {phi!r}")
    u = np.eye(2, dtype=np.complex128)
    idx = 0 if mode is Mode.X else 1
    u[idx, idx] = cmath.exp(1j * phi)
    return u


def is_unitary(u: np.ndarray, tol: float = ALGEBRA_TOL) -> bool:
    """True when conj(u).T @ u is the identity within ``tol`` per entry."""
    u = np.asarray(u, dtype=np.complex128)
    if u.shape != (2, 2):
        return False
    return bool(np.all(np.abs(u.conj().T @ u - np.eye(2)) <= tol))


def apply(u: np.ndarray, state: TwoModeState) -> TwoModeState:
    """Evolve ``state`` by the unitary ``u``; survival is untouched."""
    if not is_unitary(u):
        raise ValueError("matrix is not unitary within 1e-12")
    ax = complex(u[0, 0]) * state.amp_x + complex(u[0, 1]) * state.amp_y
    ay = complex(u[1, 0]) * state.amp_x + complex(u[1, 1]) * state.amp_y
    return TwoModeState(ax, ay, state.survival)


def block_mode(state: TwoModeState, mode: Mode) -> tuple[TwoModeState | None, float]:
    """Absorb the amplitude of one arm (the switch set to "off").

    Returns ``(surviving_state, blocked_prob)``.  The surviving state is
    renormalized with its phase kept and its survival reduced by the lost
    weight.  When the blocked arm held all the amplitude there is nothing
    left to renormalize and the first element is None ("fully absorbed").
    """
    if mode is Mode.X:
        removed, kept = state.amp_x, state.amp_y
    else:
        removed, kept = state.amp_y, state.amp_x
    removed_w = abs(removed) ** 2
    kept_w = abs(kept) ** 2
    blocked_prob = removed_w / (removed_w + kept_w)
    if kept_w == 0.0:
        return None, 1.0
    unit_kept = kept / math.sqrt(kept_w)
    survival = state.survival * (1.0 - blocked_prob)
    if mode is Mode.X:
        return TwoModeState(0.0, unit_kept, survival), blocked_prob
    return TwoModeState(unit_kept, 0.0, survival), blocked_prob


def detection_probs(state: TwoModeState, coherent: bool) -> tuple[float, float]:
    """Click probabilities (pX, pY) for a photon reaching the recombiner.

    Coherent case: the state passes the 50/50 splitter and the Born rule is
    read off, with detector X on the port that the balanced interferometer
    feeds.  Incoherent case: the arms do not interfere and each populated
    arm routes 50/50, so the detectors split evenly regardless of the state.
    """
    if not coherent:
        return 0.5, 0.5
    # bs50 applied by hand; detector X reads the second output port.
    bx = (state.amp_x + 1j * state.amp_y) * _RSQRT2
    by = (1j * state.amp_x + state.amp_y) * _RSQRT2
    px = by.real * by.real + by.imag * by.imag
    py = bx.real * bx.real + bx.imag * bx.imag
    return px, py


def _choose(px: float, py: float, u: float) -> Mode:
    """Map one uniform draw to a detector under (px, py)."""
    if px < 0.0 or py < 0.0 or abs(px + py - 1.0) > PROB_SUM_TOL:
        raise ValueError(f"invalid outcome probabilities ({px!r}, {py!r})")
    return Mode.X if u < px else Mode.Y


def sample_outcome(px: float, py: float, rng: np.random.Generator) -> Mode:
    """Draw a detector click from (px, py); px + py must be 1 within 1e-9."""
    return _choose(px, py, rng.random())
