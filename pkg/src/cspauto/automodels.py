"""Built-in vehicle architecture, attacker and threat-actor models.

The system model is a centralised gateway with two CAN high-speed networks,
one CAN low-speed network and a FlexRay network; MOST and LIN hang off ECUs
on CAN high-speed 2 and CAN low-speed respectively.  Every branch ends in
STOP, so the architecture has finitely many maximal traces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from importlib import resources

from cspauto.errors import CspError, EmptyRestriction
from cspauto.kernel import (
    AlphaParallel,
    Binder,
    Environment,
    EventSet,
    InputPrefix,
    Proc,
    Ref,
    ValueSet,
    alphabet,
    chain,
    event,
    ext_choice,
    prefix,
    validate_env,
    value_key,
)

ALL_BUSES = (
    "engine_cu", "gearbox", "head_unit", "can_ecu30", "can_ecu32", "video", "radar",
    "dvd", "mp3", "radio", "media", "lin_sensor", "lin_actuator",
)
PAYLOADS = tuple(range(0, 11))

SPOOFING, BLOCK, EAVESDROP, CHANGE = "spoofing", "block", "eavesdrop", "change_functionality"
ATTACK_CHANNELS = (SPOOFING, BLOCK, EAVESDROP, CHANGE)

SYSTEM_EVENTS = (
    "gateway_canhs1", "gateway_canhs2", "gateway_canls", "gateway_flexray",
    "canhs_most", "canls_lin",
) + ALL_BUSES

SYSTEM_PROCESSES = ("GATEWAY", "CANHS1", "CANHS2", "CANLS", "FLEXRAY", "MOST", "LIN")


class ThreatActor(enum.Enum):
    OWNER_DRIVER = "owner_driver"
    EVIL_MECHANIC = "evil_mechanic"
    THIEF = "thief"
    REMOTE_ATTACKER = "remote_attacker"


_CAPABILITIES = {
    ThreatActor.OWNER_DRIVER: frozenset(ATTACK_CHANNELS),
    ThreatActor.THIEF: frozenset({SPOOFING, BLOCK, EAVESDROP}),
    ThreatActor.REMOTE_ATTACKER: frozenset({SPOOFING, BLOCK, EAVESDROP}),
    ThreatActor.EVIL_MECHANIC: frozenset({CHANGE}),
}


def actor_capabilities(actor: ThreatActor) -> frozenset:
    """Attack channels a threat actor may use."""
    return _CAPABILITIES[ThreatActor(actor)]


def _stops(*events):
    return ext_choice(*(chain(e) for e in events))


def system_definitions() -> dict:
    return {
        "GATEWAY": ext_choice(
            prefix("gateway_canhs1", Ref("CANHS1")),
            prefix("gateway_canhs2", Ref("CANHS2")),
            prefix("gateway_canls", Ref("CANLS")),
            prefix("gateway_flexray", Ref("FLEXRAY")),
        ),
        "CANHS1": prefix("gateway_canhs1", _stops("engine_cu", "gearbox", "head_unit")),
        "CANHS2": prefix(
            "gateway_canhs2", ext_choice(chain("can_ecu30"), prefix("canhs_most", Ref("MOST")))
        ),
        "CANLS": prefix(
            "gateway_canls", ext_choice(chain("can_ecu32"), prefix("canls_lin", Ref("LIN")))
        ),
        "FLEXRAY": prefix("gateway_flexray", _stops("video", "radar")),
        "MOST": prefix("canhs_most", _stops("dvd", "mp3", "radio", "media")),
        "LIN": prefix("canls_lin", _stops("lin_sensor", "lin_actuator")),
    }


def attacker_process(
    buses=ALL_BUSES,
    payloads=PAYLOADS,
    capabilities=ATTACK_CHANNELS,
    name: str = "Attacker",
    bus_set_name: str | None = None,
) -> Proc:
    """Body of the recursive attacker: a choice over its capability channels.

    Every branch continues as ``Ref(name)``, so ``name`` must be bound to the
    returned term in the environment used for expansion.
    """
    buses = tuple(buses)
    payloads = tuple(payloads)
    if not buses or not payloads:
        raise ValueError("attacker needs at least one bus and one payload")
    unknown = set(capabilities) - set(ATTACK_CHANNELS)
    if unknown:
        raise ValueError(f"unknown capability {sorted(unknown)}")
    bus_dom = ValueSet(buses, bus_set_name)
    loop = Ref(name)
    branches = []
    for ch in ATTACK_CHANNELS:
        if ch not in capabilities:
            continue
        fields = (Binder("b", bus_dom),)
        if ch == SPOOFING:
            fields += (Binder("c", ValueSet(payloads)),)
        branches.append(InputPrefix(ch, fields, loop))
    if not branches:
        raise ValueError("attacker needs at least one capability")
    return ext_choice(*branches)


def attack_channel_decls(buses=ALL_BUSES, payloads=PAYLOADS, bus_set_name="All_Buses") -> dict:
    bus_dom = ValueSet(tuple(buses), bus_set_name)
    return {
        SPOOFING: (bus_dom, ValueSet(tuple(payloads))),
        BLOCK: (bus_dom,),
        EAVESDROP: (bus_dom,),
        CHANGE: (bus_dom,),
    }


ATTACK_PATH = (event("gateway_canhs1"), event("engine_cu"), event(SPOOFING, "engine_cu", 2))


def builtin_env() -> Environment:
    """Architecture plus attacker, as shipped in ``gateway.cspa`` + ``attacker.cspa``."""
    sets = {
        "All_Buses": tuple((b,) for b in ALL_BUSES),
        "AttackPath": tuple((e.channel,) + e.args for e in ATTACK_PATH),
    }
    channels = {e: () for e in SYSTEM_EVENTS}
    channels.update(attack_channel_decls())
    definitions = system_definitions()
    definitions["Attacker"] = attacker_process(bus_set_name="All_Buses")
    sets = {
        name: tuple(sorted(items, key=lambda it: tuple(value_key(v) for v in it)))
        for name, items in sets.items()
    }
    return validate_env(Environment(definitions, channels, sets))


def shipped_script(name: str) -> str:
    """Text of a corpus file shipped in ``cspauto/data``."""
    return resources.files("cspauto").joinpath("data", name).read_text(encoding="utf-8")


def shipped_files() -> list:
    return sorted(
        p.name for p in resources.files("cspauto").joinpath("data").iterdir()
        if p.name.endswith(".cspa")
    )


# ---------------------------------------------------------------------------
# attack scenarios

LITERAL = "literal"
SHARED_ONLY = "shared"


@dataclass(frozen=True)
class AttackScenario:
    name: str
    attacker: Proc
    system: Proc
    attack_path: frozenset
    env: Environment = field(compare=False)
    mode: str = LITERAL
    actor: ThreatActor | None = None

    def __post_init__(self):
        if not self.attack_path:
            raise CspError("attack path must not be empty")
        if self.mode not in (LITERAL, SHARED_ONLY):
            raise ValueError(f"unknown composition mode {self.mode!r}")
        if self.actor is not None:
            used = {e.channel for e in alphabet(self.attacker, self.env)}
            extra = used - actor_capabilities(self.actor)
            if extra:
                raise CspError(
                    f"attacker uses {sorted(extra)} beyond {self.actor.value} capabilities"
                )

    @property
    def attacker_channels(self) -> frozenset:
        return frozenset(e.channel for e in alphabet(self.attacker, self.env))


def compose_attack(s: AttackScenario) -> Proc:
    """Alphabetised parallel of attacker and system restricted to the attack path.

    Literal mode restricts both sides to the whole path.  SharedOnly restricts
    each side to the path events it can itself perform.
    """
    path = frozenset(s.attack_path)
    if s.mode == LITERAL:
        a = b = EventSet(tuple(path))
        return AlphaParallel(s.attacker, a, b, s.system)
    left = path & alphabet(s.attacker, s.env)
    right = path & alphabet(s.system, s.env)
    if not left or not right:
        side = "attacker" if not left else "system"
        raise EmptyRestriction(f"no attack-path event is performable by the {side}")
    return AlphaParallel(s.attacker, EventSet(tuple(left)), EventSet(tuple(right)), s.system)


def attack1(mode: str = LITERAL, actor: ThreatActor | None = None, env: Environment = None):
    """Attacker against the whole gateway, restricted to the engine spoofing path."""
    env = env or builtin_env()
    attacker_name = "Attacker"
    if actor is not None:
        attacker_name = "Attacker_" + ThreatActor(actor).value
        body = attacker_process(
            capabilities=actor_capabilities(actor), name=attacker_name, bus_set_name="All_Buses"
        )
        env = env.extend(definitions={attacker_name: body})
    return AttackScenario(
        name="attack1",
        attacker=Ref(attacker_name),
        system=Ref("GATEWAY"),
        attack_path=frozenset(ATTACK_PATH),
        env=env,
        mode=mode,
        actor=ThreatActor(actor) if actor is not None else None,
    )


SCENARIOS = {"attack1": attack1}


def scenario(name: str, mode: str = LITERAL, actor=None) -> AttackScenario:
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise CspError(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}") from None
    return factory(mode=mode, actor=actor)
