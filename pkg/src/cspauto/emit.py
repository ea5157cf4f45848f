"""Serialise test suites as XML documents or CAPL-style scripts."""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from cspauto import __version__
from cspauto.kernel import TICK, Event

GENERATOR = "cspauto"
TICK_CHANNEL = "✓"


@dataclass(frozen=True)
class SuiteMeta:
    scenario: str
    actor: str | None = None
    version: str = __version__


def _actor_name(actor) -> str:
    if actor is None:
        return ""
    return getattr(actor, "value", str(actor))


def _args(ev: Event) -> str:
    return ",".join(str(a) for a in ev.args)


def emit_xml(suite, meta: SuiteMeta) -> str:
    """XML test suite; one ``step`` per event, in trace order."""
    root = ET.Element(
        "testsuite",
        {
            "scenario": meta.scenario,
            "actor": _actor_name(meta.actor),
            "generator": GENERATOR,
            "version": meta.version,
        },
    )
    for tc in suite:
        case = ET.SubElement(root, "testcase", {"id": tc.id})
        for i, ev in enumerate(tc.events):
            ET.SubElement(
                case,
                "step",
                {
                    "index": str(i),
                    "role": tc.role(ev),
                    "channel": TICK_CHANNEL if ev is TICK else ev.channel,
                    "args": _args(ev),
                },
            )
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


@lru_cache(maxsize=1)
def _schema():
    from lxml import etree

    xsd = resources.files("cspauto").joinpath("data", "testsuite.xsd").read_bytes()
    return etree.XMLSchema(etree.fromstring(xsd))


def validate_xml(text: str) -> list:
    """Schema errors of an emitted document; empty when valid."""
    from lxml import etree

    try:
        doc = etree.fromstring(text.encode("utf-8"))
    except etree.XMLSyntaxError as exc:
        return [str(exc)]
    schema = _schema()
    if schema.validate(doc):
        return []
    return [f"{e.line}: {e.message}" for e in schema.error_log]


def read_xml(text: str):
    """Parse an emitted document back into ``(attributes, [(id, events, roles)])``."""
    root = ET.fromstring(text)
    cases = []
    for case in root.findall("testcase"):
        events, roles = [], []
        for step in case.findall("step"):
            ch = step.get("channel")
            if ch == TICK_CHANNEL:
                events.append(TICK)
            else:
                raw = step.get("args")
                args = tuple(
                    int(a) if re.fullmatch(r"-?\d+", a) else a for a in raw.split(",")
                ) if raw else ()
                events.append(Event(ch, args))
            roles.append(step.get("role"))
        cases.append((case.get("id"), tuple(events), tuple(roles)))
    return dict(root.attrib), cases


# ---------------------------------------------------------------------------
# CAPL

_IDENT = re.compile(r"[^A-Za-z0-9_]")


def _ascii(text: str) -> str:
    return text.replace(TICK_CHANNEL, "tick").encode("ascii", "backslashreplace").decode("ascii")


def _msg_name(ev: Event) -> str:
    return "msg_" + _IDENT.sub("_", _ascii("tick" if ev is TICK else ev.channel))


def emit_capl(suite, meta: SuiteMeta) -> str:
    """CAPL-style scaffolding: one ``testcase_<id>()`` per test case.

    Inject steps send a placeholder message, observe steps wait for one;
    message identifiers are left for the test engineer to bind.
    """
    suite = list(suite)
    lines = [
        "/*@!Encoding:ASCII*/",
        "/*",
        f" * Generated by {GENERATOR} {_ascii(meta.version)}",
        f" * scenario: {_ascii(meta.scenario)}",
        f" * actor: {_ascii(_actor_name(meta.actor)) or 'none'}",
        f" * test cases: {len(suite)}",
        " */",
    ]
    if suite:
        msgs = sorted({_msg_name(ev) for tc in suite for ev in tc.events})
        lines += ["", "variables", "{", "  const dword STEP_TIMEOUT = 1000; // ms"]
        lines += [f"  message 0x0 {m}; // placeholder identifier" for m in msgs]
        lines.append("}")
    for tc in suite:
        lines += ["", f"testcase testcase_{tc.id}()", "{"]
        for i, ev in enumerate(tc.events):
            role = tc.role(ev)
            lines.append(f"  // step {i}: {role} {_ascii(str(ev))}")
            if role == "inject":
                args = ", ".join(_ascii(str(a)) for a in ev.args)
                lines.append(f"  output({_msg_name(ev)}); // args: {args}")
            else:
                lines.append(f"  testWaitForMessage({_msg_name(ev)}, STEP_TIMEOUT);")
        lines.append("}")
    return "\n".join(lines) + "\n"
