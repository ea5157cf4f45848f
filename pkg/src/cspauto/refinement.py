"""Traces and stable-failures refinement checking with shortest counterexamples.

The specification is normalised (τ-closure plus subset construction) into a
deterministic graph; the implementation is then explored in lockstep with it,
breadth-first, by the selected graph kernel.
"""

from __future__ import annotations

from array import array
from bisect import bisect_right
from dataclasses import dataclass
from typing import ClassVar

from cspauto import _backend
from cspauto.errors import SpecTruncated
from cspauto.kernel import TAU, TICK, Event, Lts, format_trace
from cspauto.semantics import maximal_sets

TRACES = "traces"
FAILURES = "failures"


# ---------------------------------------------------------------------------
# verdicts


@dataclass(frozen=True)
class Holds:
    holds: ClassVar[bool] = True

    def __str__(self):
        return "Holds"


@dataclass(frozen=True)
class FailsTraces:
    """``witness + (event,)`` is a trace of the implementation but not of the spec."""

    witness: tuple
    event: Event
    holds: ClassVar[bool] = False

    def __str__(self):
        return f"FailsTraces: after {format_trace(self.witness)} the implementation can do {self.event}"


@dataclass(frozen=True)
class FailsFailures:
    """``(witness, refusal)`` is a failure of the implementation but not of the spec."""

    witness: tuple
    refusal: frozenset
    holds: ClassVar[bool] = False

    def __str__(self):
        ref = "{" + ", ".join(str(e) for e in sorted(self.refusal, key=lambda e: e.key)) + "}"
        return f"FailsFailures: after {format_trace(self.witness)} the implementation can refuse {ref}"


@dataclass(frozen=True)
class Deadlock:
    """A stable state with no transitions at all, reached by ``witness``."""

    witness: tuple
    holds: ClassVar[bool] = False

    def __str__(self):
        return f"Deadlock: after {format_trace(self.witness)}"


@dataclass(frozen=True)
class Inconclusive:
    reason: str
    holds: ClassVar = None

    def __str__(self):
        return f"Inconclusive: {self.reason}"


# ---------------------------------------------------------------------------
# normalisation


@dataclass(frozen=True)
class NormalizedSpec:
    """Deterministic τ-free graph over subsets of spec states.

    ``acceptances[n]`` is the antichain of minimal visible initials of the
    stable members of node ``n`` (None for the traces model).
    """

    members: tuple
    initials: tuple
    edges: tuple
    acceptances: tuple | None
    model: str

    def __len__(self):
        return len(self.members)

    def dfa(self, label_index: dict, nlabels: int) -> array:
        table = array("i", [-1]) * (len(self.members) * nlabels)
        for n, row in enumerate(self.edges):
            for ev, m in row.items():
                lab = label_index.get(ev)
                if lab is not None:
                    table[n * nlabels + lab] = m
        return table


def _minimal_sets(sets) -> frozenset:
    uniq = set(sets)
    return frozenset(s for s in uniq if not any(o < s for o in uniq))


def normalize(lts: Lts, model: str = TRACES) -> NormalizedSpec:
    if lts.truncated:
        raise SpecTruncated("cannot normalise a truncated specification")
    if model not in (TRACES, FAILURES):
        raise ValueError(f"unknown model {model!r}")
    succ = lts.successors
    root = lts.tau_closure([lts.initial])
    index = {root: 0}
    members = [root]
    initials, edges, acceptances = [], [], []
    k = 0
    while k < len(members):
        node = members[k]
        k += 1
        groups = {}
        for s in sorted(node):
            for ev, t in succ[s]:
                if ev is not TAU:
                    groups.setdefault(ev, set()).add(t)
        row = {}
        for ev in sorted(groups, key=lambda e: e.key):
            target = lts.tau_closure(groups[ev])
            m = index.get(target)
            if m is None:
                m = index[target] = len(members)
                members.append(target)
            row[ev] = m
        initials.append(frozenset(groups))
        edges.append(row)
        if model == FAILURES:
            stable = [s for s in node if lts.is_stable(s)]
            acceptances.append(
                _minimal_sets(frozenset(e for e in lts.initials(s) if e.visible) for s in stable)
            )
    return NormalizedSpec(
        tuple(members), tuple(initials), tuple(edges),
        tuple(acceptances) if model == FAILURES else None, model,
    )


# ---------------------------------------------------------------------------
# product exploration


def _label_table(*ltss: Lts) -> tuple:
    evs = set()
    for lts in ltss:
        evs.update(e for e in lts.events if e is not TAU)
    ordered = sorted(evs, key=lambda e: e.key)
    index = {ev: i + 1 for i, ev in enumerate(ordered)}
    return [TAU] + ordered, index


class _Product:
    def __init__(self, spec_norm: NormalizedSpec, impl: Lts, extra_labels=(), kernels=None):
        kernels = kernels or _backend.kernels
        events = set(e for e in impl.events if e is not TAU)
        for row in spec_norm.edges:
            events.update(row)
        events.update(extra_labels)
        ordered = sorted(events, key=lambda e: e.key)
        self.labels = [TAU] + ordered
        self.index = {ev: i + 1 for i, ev in enumerate(ordered)}
        self.impl = impl
        nlabels = len(self.labels)
        offsets, labs, dsts = impl.graph(self.index)
        dfa = spec_norm.dfa(self.index, nlabels)
        self.result = kernels.explore_product(
            offsets, labs, dsts, impl.initial, dfa, nlabels, 0, True
        )

    def trace(self, x: int) -> tuple:
        _, _, parent, via, _, _ = self.result
        out = []
        while x >= 0:
            if via[x] > 0:
                out.append(self.labels[via[x]])
            x = parent[x]
        return tuple(reversed(out))

    def level(self, x: int) -> int:
        return bisect_right(self.result[4], x) - 1


def _inconclusive(spec: Lts, impl: Lts):
    which = [n for n, l in (("specification", spec), ("implementation", impl)) if l.truncated]
    if which:
        return Inconclusive(f"{' and '.join(which)} state space truncated; raise the state limit")
    return None


def _traces_verdict(prod: _Product):
    violations = prod.result[5]
    if not violations:
        return None, None
    x, lab = min(violations, key=lambda v: (prod.level(v[0]), _tkey(prod.trace(v[0])), v[1]))
    return prod.level(x), FailsTraces(prod.trace(x), prod.labels[lab])


def _tkey(trace):
    return tuple(e.key for e in trace)


def check_traces_refinement(spec: Lts, impl: Lts, kernels=None):
    """Does every trace of ``impl`` belong to ``spec``?"""
    bad = _inconclusive(spec, impl)
    if bad:
        return bad
    prod = _Product(normalize(spec, TRACES), impl, kernels=kernels)
    _, verdict = _traces_verdict(prod)
    return verdict or Holds()


def check_failures_refinement(spec: Lts, impl: Lts, sigma=None, kernels=None):
    """Traces containment plus stable-failures containment relative to ``sigma``.

    ``sigma`` defaults to the visible events of both processes.
    """
    bad = _inconclusive(spec, impl)
    if bad:
        return bad
    if sigma is None:
        sigma = spec.visible_events | impl.visible_events
    sigma = frozenset(e for e in sigma if e.visible)
    norm = normalize(spec, FAILURES)
    prod = _Product(norm, impl, kernels=kernels)
    tlevel, tverdict = _traces_verdict(prod)
    pair_state, pair_node = prod.result[0], prod.result[1]
    best = None
    accept_cache = {}
    for x in range(len(pair_state)):
        lvl = prod.level(x)
        if tlevel is not None and lvl > tlevel:
            break
        if best is not None and lvl > best[0]:
            break
        i, n = pair_state[x], pair_node[x]
        if not impl.is_stable(i):
            continue
        init = impl.initials(i)
        accs = accept_cache.get(n)
        if accs is None:
            accs = accept_cache[n] = [a & sigma for a in norm.acceptances[n]]
        if any(a <= init for a in accs):
            continue
        refusal = sigma - init
        key = (lvl, _tkey(prod.trace(x)), sorted(e.key for e in refusal))
        if best is None or key < best[1]:
            best = (lvl, key, FailsFailures(prod.trace(x), refusal))
    if tverdict is not None and (best is None or tlevel <= best[0]):
        return tverdict
    if best is not None:
        return best[2]
    return Holds()


def deadlock_free(lts: Lts, kernels=None):
    """Holds unless a stable state with no transitions is reachable.

    The state reached by ✓ is successful termination, not deadlock.
    """
    if lts.truncated:
        return Inconclusive("state space truncated; raise the state limit")
    kernels = kernels or _backend.kernels
    labels, index = _label_table(lts)
    if TICK not in index:
        index[TICK] = len(labels)
        labels.append(TICK)
    nlabels = len(labels)
    # node 0 = running (everything allowed), node 1 = terminated
    dfa = array("i", [-1]) * (2 * nlabels)
    for ev, lab in index.items():
        dfa[lab] = 1 if ev is TICK else 0
    offsets, labs, dsts = lts.graph(index)
    pair_state, pair_node, parent, via, _, _ = kernels.explore_product(
        offsets, labs, dsts, lts.initial, dfa, nlabels, 0, False
    )
    for x, (i, n) in enumerate(zip(pair_state, pair_node)):
        if n == 0 and offsets[i] == offsets[i + 1]:
            out = []
            while x >= 0:
                if via[x] > 0:
                    out.append(labels[via[x]])
                x = parent[x]
            return Deadlock(tuple(reversed(out)))
    return Holds()
