"""Uncertain planning horizons.

The epidemic ends at one of the candidate times T_1 < ... < T_n with prior
probabilities theta_1..theta_n. Solving proceeds segment by segment: forward
states are continuous across each T_k, while value functions jump because
with conditional probability theta~_k = P(T = T_k | T > T_{k-1}) the game
ends and terminal penalties are collected.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HorizonSchedule",
    "conditional_probs",
    "apply_value_jump",
    "state_continuity",
    "parse_horizon_spec",
]

_PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class HorizonSchedule:
    """Candidate terminal times with their probabilities.

    times must be strictly increasing and positive; probabilities must be
    nonnegative and sum to one.
    """

    times: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        probs = tuple(float(q) for q in self.probs)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probs", probs)
        if len(times) == 0 or len(times) != len(probs):
            raise ValueError("times and probs must be equal-length and nonempty")
        if times[0] <= 0.0 or any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"times must be positive and strictly increasing, got {times}")
        if any(q < 0.0 for q in probs):
            raise ValueError(f"probabilities must be nonnegative, got {probs}")
        if abs(sum(probs) - 1.0) > _PROB_SUM_TOL:
            raise ValueError(f"probabilities must sum to 1, got sum {sum(probs)}")

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def final_time(self) -> float:
        return self.times[-1]

    @classmethod
    def deterministic(cls, T: float) -> "HorizonSchedule":
        return cls((T,), (1.0,))


def conditional_probs(schedule: HorizonSchedule) -> np.ndarray:
    """Conditional termination probabilities theta~_k for k = 1..n-1.

    theta~_k = theta_k / sum_{l >= k} theta_l. A zero tail with a positive
    theta_k cannot occur for a valid schedule but is guarded anyway; a zero
    theta_k with zero tail yields a trivial jump theta~_k = 0.
    """
    probs = np.asarray(schedule.probs)
    tails = np.cumsum(probs[::-1])[::-1]
    out = np.empty(schedule.n - 1)
    for k in range(schedule.n - 1):
        if tails[k] <= 0.0:
            if probs[k] > 0.0:
                raise ValueError(f"zero tail probability with positive theta at index {k}")
            out[k] = 0.0
        else:
            out[k] = probs[k] / tails[k]
    return out


def apply_value_jump(v_after, theta_tilde: float, terminal) -> np.ndarray:
    """Blend the continuation value with the terminal penalties at T_k.

    Approaching T_k, the game ends with conditional probability theta~_k
    (collecting the terminal values) and continues otherwise:
    v_before = theta~_k * terminal + (1 - theta~_k) * v_after, componentwise.
    """
    if not 0.0 <= theta_tilde <= 1.0:
        raise ValueError(f"theta_tilde must lie in [0, 1], got {theta_tilde}")
    v_after = np.asarray(v_after, dtype=float)
    terminal = np.asarray(terminal, dtype=float)
    return theta_tilde * terminal + (1.0 - theta_tilde) * v_after


def state_continuity(state_before):
    """Forward states pass through candidate terminal times unchanged."""
    return np.asarray(state_before, dtype=float)


def parse_horizon_spec(spec: str) -> HorizonSchedule:
    """Parse a schedule string of comma-separated time:prob pairs.

    Example: "150:0.5,300:0.5".
    """
    times, probs = [], []
    for i, chunk in enumerate(spec.split(","), start=1):
        parts = chunk.strip().split(":")
        if len(parts) != 2:
            raise ValueError(f"horizon entry {i} ({chunk!r}) is not a time:prob pair")
        try:
            times.append(float(parts[0]))
            probs.append(float(parts[1]))
        except ValueError:
            raise ValueError(f"horizon entry {i} ({chunk!r}) has a non-numeric field") from None
    return HorizonSchedule(tuple(times), tuple(probs))
