"""Annealing schedules H(t) = A(t) * H_start + B(t) * H_target.

Schedules are piecewise-linear in the stored (t, A, B) knots.  The default is
the linear ramp A = 1 - t/T, B = t/T; device-like curves can be supplied as a
knot table (one ``t A B`` line per knot), which is preserved exactly.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParseError

DOMINANCE_RATIO = 10.0


@dataclass(frozen=True)
class AnnealSchedule:
    """Driving functions sampled on strictly increasing knots over [0, T]."""

    total_time: float
    samples: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        if len(self.samples) < 2:
            raise ValueError("need at least two (t, A, B) knots")
        ts = [s[0] for s in self.samples]
        if ts[0] != 0.0 or abs(ts[-1] - self.total_time) > 1e-12 * self.total_time:
            raise ValueError("knots must start at t=0 and end at t=T")
        if any(t1 >= t2 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("knot times must be strictly increasing")
        for t, a, b in self.samples:
            if a < 0 or b < 0:
                raise ValueError(f"negative driving value at t={t}")
        _, a0, b0 = self.samples[0]
        _, af, bf = self.samples[-1]
        if a0 < DOMINANCE_RATIO * b0:
            raise ValueError("schedule must start transverse-dominated: A(0) >= 10 B(0)")
        if bf < DOMINANCE_RATIO * af:
            raise ValueError("schedule must end target-dominated: B(T) >= 10 A(T)")

    def at(self, t: float) -> tuple[float, float]:
        """(A, B) at time t, linearly interpolated and clamped to [0, T]."""
        ts = [s[0] for s in self.samples]
        a = float(np.interp(t, ts, [s[1] for s in self.samples]))
        b = float(np.interp(t, ts, [s[2] for s in self.samples]))
        return a, b


def default_schedule(total_time: float) -> AnnealSchedule:
    """Linear ramp: A(t) = 1 - t/T, B(t) = t/T."""
    if total_time <= 0:
        raise ValueError("total_time must be positive")
    return AnnealSchedule(
        total_time, ((0.0, 1.0, 0.0), (float(total_time), 0.0, 1.0))
    )


@dataclass(frozen=True)
class ConstantSchedule:
    """Fixed (A, B) held for ``total_time``; a probe, not an anneal.

    Duck-typed like AnnealSchedule but exempt from the endpoint-dominance
    invariants, for relaxation and detailed-balance studies at one point of
    the driving plane.
    """

    total_time: float
    a: float
    b: float

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        if self.a < 0 or self.b < 0:
            raise ValueError("driving values must be non-negative")

    def at(self, t: float) -> tuple[float, float]:
        return self.a, self.b


def constant_schedule(total_time: float, a: float, b: float) -> ConstantSchedule:
    return ConstantSchedule(total_time, a, b)


def parse_schedule(text: str) -> AnnealSchedule:
    """Parse a knot table: one ``t A B`` line per knot."""
    samples = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 3:
            raise ParseError(lineno, "expected 't A B'")
        try:
            samples.append(tuple(float(x) for x in tokens))
        except ValueError:
            raise ParseError(lineno, "bad number in schedule line") from None
    if len(samples) < 2:
        raise ParseError(1, "schedule needs at least two knots")
    return AnnealSchedule(samples[-1][0], tuple(samples))


def serialize_schedule(schedule: AnnealSchedule) -> str:
    return "\n".join(f"{t!r} {a!r} {b!r}" for t, a, b in schedule.samples) + "\n"
