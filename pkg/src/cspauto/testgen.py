"""Test cases from the traces of an attack composition.

Each trace that exercises at least one attacker capability becomes one test
case: attacker events are injection points, system events observation points.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from cspauto.automodels import ALL_BUSES, AttackScenario, ThreatActor, compose_attack
from cspauto.errors import ComponentOutOfRange, LtsTruncated
from cspauto.kernel import DEFAULT_MAX_STATES, Event, Lts, build_lts, trace_key, value_key
from cspauto.semantics import traces_up_to

DEFAULT_DEPTH = 8


@dataclass(frozen=True)
class TestCase:
    __test__ = False  # not a pytest class

    id: str
    scenario: str
    actor: ThreatActor | None
    events: tuple
    attacker_events: tuple
    target_buses: frozenset

    def role(self, ev: Event) -> str:
        return "inject" if ev in self.attacker_events else "observe"


def case_id(scenario: str, actor, events) -> str:
    payload = json.dumps(
        {
            "scenario": scenario,
            "actor": actor.value if actor else None,
            "events": [str(e) for e in events],
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def make_case(scenario: AttackScenario, events, attacker_channels=None) -> TestCase:
    channels = attacker_channels or scenario.attacker_channels
    events = tuple(events)
    attacks = tuple(e for e in events if e.visible and e.channel in channels)
    buses = frozenset(e.args[0] for e in attacks if e.args and e.args[0] in ALL_BUSES)
    return TestCase(
        case_id(scenario.name, scenario.actor, events),
        scenario.name,
        scenario.actor,
        events,
        attacks,
        buses,
    )


def scenario_lts(scenario: AttackScenario, max_states: int = DEFAULT_MAX_STATES) -> Lts:
    lts = build_lts(compose_attack(scenario), scenario.env, max_states=max_states)
    if lts.truncated:
        raise LtsTruncated(
            f"scenario {scenario.name} exceeds {max_states} states; "
            "raise the state limit (CSPAUTO_MAX_STATES)"
        )
    return lts


def generate_tests(
    scenario: AttackScenario,
    depth: int = DEFAULT_DEPTH,
    maximal_only: bool = False,
    max_states: int = DEFAULT_MAX_STATES,
    lts: Lts | None = None,
) -> list:
    """Test cases for every trace up to ``depth`` containing an attacker event.

    With ``maximal_only`` a trace that is a proper prefix of another kept
    trace is dropped.  Output is ordered by (length, events).
    """
    if depth < 0:
        raise ValueError("depth must be >= 0")
    lts = lts or scenario_lts(scenario, max_states)
    channels = scenario.attacker_channels
    kept = [
        t for t in traces_up_to(lts, depth)
        if any(e.visible and e.channel in channels for e in t)
    ]
    if maximal_only:
        prefixes = {t[:k] for t in kept for k in range(len(t))}
        kept = [t for t in kept if t not in prefixes]
    kept.sort(key=trace_key)
    return [make_case(scenario, t, channels) for t in kept]


def replays(tc: TestCase, lts: Lts) -> bool:
    return lts.accepts(tc.events)


def enumerate_payload_variants(
    tc: TestCase,
    scenario: AttackScenario,
    channel: str,
    component: int,
    values,
    lts: Lts | None = None,
) -> list:
    """Substitute each of ``values`` into component ``component`` of every
    ``channel`` event; keep the variants the composition can still perform."""
    for e in tc.events:
        if e.visible and e.channel == channel and not 0 <= component < len(e.args):
            raise ComponentOutOfRange(
                f"{e} has no component {component} (arity {len(e.args)})"
            )
    lts = lts or scenario_lts(scenario)
    channels = scenario.attacker_channels
    out = []
    seen = set()
    for v in sorted(set(values), key=value_key):
        events = tuple(
            Event(e.channel, e.args[:component] + (v,) + e.args[component + 1:])
            if e.visible and e.channel == channel else e
            for e in tc.events
        )
        if events in seen or not lts.accepts(events):
            continue
        seen.add(events)
        out.append(make_case(scenario, events, channels))
    return out
