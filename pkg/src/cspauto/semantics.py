"""Bounded traces, refusals and stable failures of an explicit Lts."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator

from cspauto.errors import TraceNotFound, TruncationWarning
from cspauto.kernel import TAU, Event, Lts, trace_key

Trace = tuple  # tuple[Event, ...]


def _warn_truncated(lts: Lts) -> None:
    if lts.truncated:
        warnings.warn(
            "Lts was truncated; result is a lower bound", TruncationWarning, stacklevel=3
        )


def _default_sigma(lts: Lts, sigma) -> frozenset:
    if sigma is None:
        return lts.visible_events
    return frozenset(e for e in sigma if e.visible)


def trace_levels(lts: Lts, depth: int) -> Iterator[tuple]:
    """Yield ``(trace, states_after_trace)`` for every trace of length <= depth.

    Traces are produced level by level; within a level the order is not
    canonical.  ``states_after_trace`` is τ-closed.
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    closures = {}

    def close(states):
        key = frozenset(states)
        got = closures.get(key)
        if got is None:
            got = closures[key] = lts.tau_closure(key)
        return got

    succ = lts.successors
    level = {(): close([lts.initial])}
    yield from level.items()
    for _ in range(depth):
        nxt = {}
        for tr, states in level.items():
            groups = {}
            for s in states:
                for ev, t in succ[s]:
                    if ev is not TAU:
                        groups.setdefault(ev, set()).add(t)
            for ev, targets in groups.items():
                nxt[tr + (ev,)] = close(targets)
        if not nxt:
            return
        yield from nxt.items()
        level = nxt


def traces_up_to(lts: Lts, depth: int) -> list:
    """All τ-erased traces of length <= depth, sorted by (length, events)."""
    _warn_truncated(lts)
    return sorted((tr for tr, _ in trace_levels(lts, depth)), key=trace_key)


def maximal_sets(sets: Iterable[frozenset]) -> frozenset:
    """Antichain of the inclusion-maximal members of ``sets``."""
    uniq = set(sets)
    return frozenset(s for s in uniq if not any(s < o for o in uniq))


@dataclass(frozen=True)
class RefusalSet:
    """Subset-closed family of refusals, stored as its maximal elements."""

    sigma: frozenset
    maximal: frozenset

    def __contains__(self, refusal) -> bool:
        x = frozenset(refusal)
        return any(x <= m for m in self.maximal)

    def expand(self) -> frozenset:
        """Every member of the family; exponential in the size of sigma."""
        out = set()
        for m in self.maximal:
            items = sorted(m, key=lambda e: e.key)
            for k in range(len(items) + 1):
                out.update(frozenset(c) for c in combinations(items, k))
        return frozenset(out)


def _refusal(lts: Lts, state: int, sigma: frozenset) -> frozenset:
    return sigma - lts.initials(state)


def refusals_of(lts: Lts, states: Iterable[int], sigma: frozenset) -> RefusalSet:
    stable = [s for s in states if lts.is_stable(s)]
    return RefusalSet(sigma, maximal_sets(_refusal(lts, s, sigma) for s in stable))


def refusals_after(lts: Lts, trace: Iterable[Event], sigma=None) -> RefusalSet:
    """Refusals of the process after ``trace``, relative to the universe ``sigma``.

    ✓ is never part of a refusal universe.
    """
    _warn_truncated(lts)
    sigma = _default_sigma(lts, sigma)
    trace = tuple(trace)
    states = lts.after(trace)
    if not states:
        raise TraceNotFound(f"not a trace: {trace}")
    return refusals_of(lts, states, sigma)


@dataclass(frozen=True)
class Failure:
    trace: tuple
    refusal: frozenset


@dataclass(frozen=True)
class FailureSet:
    """Stable failures up to a depth; membership is subset-closed in the refusal."""

    sigma: frozenset
    by_trace: dict = field(hash=False)

    def __contains__(self, item) -> bool:
        trace, refusal = item
        maxima = self.by_trace.get(tuple(trace))
        if maxima is None:
            return False
        x = frozenset(refusal)
        return any(x <= m for m in maxima)

    def __iter__(self) -> Iterator[Failure]:
        for tr in sorted(self.by_trace, key=trace_key):
            for m in sorted(self.by_trace[tr], key=lambda s: sorted(e.key for e in s)):
                yield Failure(tr, m)

    def __len__(self):
        return sum(len(v) for v in self.by_trace.values())

    @property
    def traces(self) -> frozenset:
        return frozenset(self.by_trace)


def failures_up_to(lts: Lts, depth: int, sigma=None) -> FailureSet:
    """Maximal stable failures ``(t, sigma - initials)`` for every trace up to depth."""
    _warn_truncated(lts)
    sigma = _default_sigma(lts, sigma)
    by_trace = {}
    for tr, states in trace_levels(lts, depth):
        maxima = refusals_of(lts, states, sigma).maximal
        if maxima:
            by_trace[tr] = maxima
    return FailureSet(sigma, by_trace)


def is_deterministic(lts: Lts) -> bool:
    """No τ anywhere and no label leading to two different states."""
    for row in lts.successors:
        seen = {}
        for ev, t in row:
            if ev is TAU:
                return False
            if seen.setdefault(ev, t) != t:
                return False
    return True
