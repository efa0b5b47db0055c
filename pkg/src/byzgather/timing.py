"""Closed-form round counts shared by every agent.

All values are plain Python integers, but each result is checked against a
64-bit unsigned ceiling so that a configuration which could not be executed by
a fixed-width implementation is rejected instead of silently accepted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ConfigurationTooLarge

U64_MAX = (1 << 64) - 1


def checked(value: int, what: str = "value") -> int:
    """Return ``value`` unchanged if it fits in an unsigned 64-bit word."""
    if value < 0 or value > U64_MAX:
        raise ConfigurationTooLarge(f"{what}={value} does not fit in 64 bits")
    return value


def strong_team_min(f: int) -> int:
    """Smallest number of good agents forming a strong team against ``f`` faults."""
    if f < 0:
        raise ValueError("f must be non-negative")
    return 5 * f * f + 6 * f + 2


def team_requirement(f: int) -> int:
    """R(f) = (5f+1)(f+1)+1; algebraically equal to :func:`strong_team_min`."""
    if f < 0:
        raise ValueError("f must be non-negative")
    return (5 * f + 1) * (f + 1) + 1


def f_tilde(p: int) -> int:
    """Largest y >= 0 with (5y+1)(y+1)+1 <= p.

    Only defined for p >= 2; smaller inputs raise ``ValueError``.
    """
    if p < 2:
        raise ValueError("f_tilde is undefined below 2")
    # Start from the real root of 5y^2 + 6y + 2 - p = 0 and fix rounding.
    y = max(0, int(((36 + 20 * (p - 2)) ** 0.5 - 6) // 10))
    while team_requirement(y + 1) <= p:
        y += 1
    while team_requirement(y) > p:
        y -= 1
    return y


@dataclass(frozen=True)
class GroupTiming:
    """Durations used by the grouping routine for parameters (T, n) and X = X_n."""

    T: int
    n: int
    X: int

    def __post_init__(self) -> None:
        if self.T < 1 or self.n < 2 or self.X < 1:
            raise ValueError(f"invalid grouping parameters T={self.T} n={self.n} X={self.X}")
        checked(self.group_time_bound, "group_time_bound")

    @property
    def S(self) -> int:
        return checked(self.n * self.n * self.T * self.X + 1, "S")

    @property
    def H(self) -> int:
        T, n, X = self.T, self.n, self.X
        return checked((n + 1) * (T + 4 * X + (X * n) * (T * n + n) * (2 * X + T)) + 3, "H")

    @property
    def step_len(self) -> int:
        return checked(5 * self.T + 5 * self.X + self.H, "step_len")

    @property
    def invite(self) -> int:
        return 2 * self.T + 3 * self.X

    @property
    def attend_window(self) -> int:
        """Length of Wait-for-attendees, of the searcher's stay window, and of the search budget."""
        return 2 * self.T + self.X + self.H

    @property
    def process_len(self) -> int:
        return checked(self.S * self.step_len, "process_len")

    @property
    def group_time_bound(self) -> int:
        return checked(2 * self.S * self.step_len, "group_time_bound")


def group_time_bound(T: int, n: int, X: int) -> int:
    return GroupTiming(T, n, X).group_time_bound


def merge_time_bound(T: int, X: int) -> int:
    """Exclusive bound on the duration of the merging routine: 4T + 6X - 1."""
    if T < 1 or X < 1:
        raise ValueError("T and X must be positive")
    return checked(4 * T + 6 * X - 1, "merge_time_bound")


@dataclass(frozen=True)
class TimingProfile:
    """Constants of the top-level gathering loop for a size bound N with X = X_N."""

    N: int
    X: int

    @property
    def group(self) -> GroupTiming:
        return GroupTiming(self.X, self.N, self.X)

    @property
    def G(self) -> int:
        return self.group.group_time_bound

    @property
    def merge_T(self) -> int:
        return checked(self.X + self.G, "merge T")

    @property
    def M(self) -> int:
        return merge_time_bound(self.merge_T, self.X)

    @property
    def T_N(self) -> int:
        return checked(self.X + self.G + self.M, "T_N")

    @property
    def iteration_len(self) -> int:
        return checked(3 * self.X + 4 * (self.G + self.M) + 2, "iteration_len")

    def deadline(self, i: int) -> int:
        """Offset from the procedure start at which iteration ``i`` must be over."""
        return checked(self.X + i * self.iteration_len, "deadline")

    def liveness_bound(self, min_label_bits: int) -> int:
        """12 (4c+8) (T_N+1) for the smallest label of bit length c."""
        return checked(12 * (4 * min_label_bits + 8) * (self.T_N + 1), "liveness_bound")


def size_bound_from_gk(gk: int) -> int:
    """N = 2^(2^gk)."""
    if gk < 0:
        raise ValueError("gk must be non-negative")
    if gk > 5:
        raise ConfigurationTooLarge(f"gk={gk} gives a size bound beyond 2^32")
    return 2 ** (2**gk)
