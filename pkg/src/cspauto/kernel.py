"""Process terms, their operational semantics and explicit state-space expansion.

Terms are immutable and compare structurally.  Each term caches its canonical
text (the same text the pretty-printer emits), which doubles as the state key
used to order successors deterministically.
"""

from __future__ import annotations

import itertools
import re
from array import array
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Union

from cspauto.errors import (
    ArityMismatch,
    CspError,
    DomainMismatch,
    FreeVariable,
    UnboundReference,
    UnguardedRecursion,
    UnknownChannel,
)

DEFAULT_MAX_STATES = 100_000
DEFAULT_MAX_DEPTH = 1_000

ATOM_RE = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
PROC_NAME_RE = re.compile(r"[A-Z][A-Za-z0-9_]*\Z")
INT_MIN, INT_MAX = -(2**31), 2**31 - 1
KEYWORDS = frozenset({"STOP", "SKIP", "channel", "set"})

Value = Union[str, int]


# ---------------------------------------------------------------------------
# values and events


@dataclass(frozen=True)
class Var:
    """A variable bound by an input binder, e.g. ``x`` in ``c?x:{1,2}``."""

    name: str

    def __str__(self):
        return self.name


def value_key(v):
    if isinstance(v, Var):
        return (2, 0, v.name)
    if isinstance(v, int):
        return (0, v, "")
    return (1, 0, v)


def check_value(v) -> Value:
    if isinstance(v, bool):
        raise TypeError(f"not a CSP value: {v!r}")
    if isinstance(v, int):
        if not INT_MIN <= v <= INT_MAX:
            raise ValueError(f"integer {v} does not fit in 32 bits")
        return v
    if isinstance(v, str) and ATOM_RE.match(v) and v not in KEYWORDS:
        return v
    raise ValueError(f"not a CSP value: {v!r}")


VISIBLE, TICK_KIND, TAU_KIND = 0, 1, 2


@dataclass(frozen=True, eq=False)
class Event:
    channel: str
    args: tuple = ()
    kind: int = VISIBLE
    key: tuple = field(init=False, repr=False, compare=False, hash=False)
    _hash: int = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(
            self, "key", (self.kind, self.channel, tuple(value_key(a) for a in self.args))
        )
        object.__setattr__(self, "_hash", hash((self.channel, self.args, self.kind)))

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Event):
            return NotImplemented
        return (
            self._hash == other._hash
            and self.channel == other.channel
            and self.args == other.args
            and self.kind == other.kind
        )

    def __hash__(self):
        return self._hash

    @property
    def visible(self) -> bool:
        return self.kind == VISIBLE

    @property
    def ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def __str__(self):
        if not self.args:
            return self.channel
        return self.channel + "".join(f".{a}" for a in self.args)

    def __lt__(self, other):
        return self.key < other.key


TAU = Event("τ", kind=TAU_KIND)
TICK = Event("✓", kind=TICK_KIND)


def event(channel: str, *args) -> Event:
    """Build a visible event, validating the channel name and components."""
    if not ATOM_RE.match(channel) or channel in KEYWORDS:
        raise ValueError(f"bad channel name {channel!r}")
    return Event(channel, tuple(check_value(a) for a in args))


def parse_event(text: str) -> Event:
    """``"spoofing.engine_cu.2"`` -> Event; integers are recognised by shape."""
    head, *rest = text.split(".")
    return event(head, *(int(p) if re.fullmatch(r"-?\d+", p) else p for p in rest))


def format_trace(trace: Iterable[Event]) -> str:
    return "<" + ", ".join(str(e) for e in trace) + ">"


def trace_key(trace) -> tuple:
    return (len(trace), tuple(e.key for e in trace))


# ---------------------------------------------------------------------------
# value and event sets


def _format_values(values) -> str:
    if len(values) >= 3 and all(isinstance(v, int) for v in values):
        if values[-1] - values[0] == len(values) - 1:
            return f"{{{values[0]}..{values[-1]}}}"
    return "{" + ", ".join(str(v) for v in values) + "}"


@dataclass(frozen=True)
class ValueSet:
    """A finite, canonically ordered set of values, optionally declared by name."""

    values: tuple
    name: str | None = None

    def __post_init__(self):
        vals = tuple(sorted(set(self.values), key=value_key))
        object.__setattr__(self, "values", vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __contains__(self, v):
        return v in self.values

    def __str__(self):
        return self.name or _format_values(self.values)


@dataclass(frozen=True)
class EventSet:
    """A finite set of visible events used by the parallel operators."""

    events: tuple
    name: str | None = None
    members: frozenset = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        evs = tuple(sorted(set(self.events), key=lambda e: e.key))
        object.__setattr__(self, "events", evs)
        object.__setattr__(self, "members", frozenset(evs))

    def __iter__(self):
        return iter(self.events)

    def __len__(self):
        return len(self.events)

    def __contains__(self, e):
        return e in self.members

    def __str__(self):
        return self.name or "{" + ", ".join(str(e) for e in self.events) + "}"


@dataclass(frozen=True)
class Binder:
    var: str
    domain: ValueSet


# ---------------------------------------------------------------------------
# process terms

CHOICE, ICHOICE, PAR, PREFIX, ATOMIC = 1, 2, 3, 4, 5


def _wrap(term: "Proc", min_level: int) -> str:
    return term.text if term.level >= min_level else f"({term.text})"


class Proc:
    """Base class of the closed set of process constructors."""

    level = ATOMIC
    _fields: tuple = ()

    def __post_init__(self):
        text = self._render()
        object.__setattr__(self, "text", text)
        object.__setattr__(self, "_hash", hash((type(self).__name__, text)))

    def _render(self) -> str:  # pragma: no cover - overridden
        raise NotImplementedError

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Proc) else False
        if self._hash != other._hash:
            return False
        return all(getattr(self, f) == getattr(other, f) for f in self._fields)

    def __str__(self):
        return self.text

    def __repr__(self):
        return f"<{type(self).__name__} {self.text}>"


@dataclass(frozen=True, eq=False, repr=False)
class Stop(Proc):
    def _render(self):
        return "STOP"


@dataclass(frozen=True, eq=False, repr=False)
class Skip(Proc):
    def _render(self):
        return "SKIP"


@dataclass(frozen=True, eq=False, repr=False)
class Ref(Proc):
    name: str
    _fields = ("name",)

    def _render(self):
        return self.name


@dataclass(frozen=True, eq=False, repr=False)
class Prefix(Proc):
    event: Event
    cont: Proc
    level = PREFIX
    _fields = ("event", "cont")

    def _render(self):
        return f"{self.event} -> {_wrap(self.cont, PREFIX)}"


@dataclass(frozen=True, eq=False, repr=False)
class InputPrefix(Proc):
    """``c.v?x:S?y:T -> P``; fields mix fixed values, variables and binders."""

    channel: str
    fields: tuple
    cont: Proc
    level = PREFIX
    _fields = ("channel", "fields", "cont")

    def _render(self):
        parts = [self.channel]
        for f in self.fields:
            if isinstance(f, Binder):
                parts.append(f"?{f.var}:{f.domain}")
            else:
                parts.append(f".{f}")
        return "".join(parts) + " -> " + _wrap(self.cont, PREFIX)

    @property
    def binders(self) -> tuple:
        return tuple(f for f in self.fields if isinstance(f, Binder))


@dataclass(frozen=True, eq=False, repr=False)
class _Binary(Proc):
    left: Proc
    right: Proc
    _fields = ("left", "right")
    op = "?"

    def _render(self):
        lvl = self.level
        return f"{_wrap(self.left, lvl + 1)} {self.op} {_wrap(self.right, lvl)}"


@dataclass(frozen=True, eq=False, repr=False)
class ExtChoice(_Binary):
    level = CHOICE
    op = "[]"


@dataclass(frozen=True, eq=False, repr=False)
class IntChoice(_Binary):
    level = ICHOICE
    op = "|~|"


@dataclass(frozen=True, eq=False, repr=False)
class SyncParallel(_Binary):
    level = PAR
    op = "||"


@dataclass(frozen=True, eq=False, repr=False)
class Interleave(_Binary):
    level = PAR
    op = "|||"


@dataclass(frozen=True, eq=False, repr=False)
class GenParallel(Proc):
    left: Proc
    sync: EventSet
    right: Proc
    level = PAR
    _fields = ("left", "sync", "right")

    def _render(self):
        return f"{_wrap(self.left, PAR + 1)} [| {self.sync} |] {_wrap(self.right, PAR)}"


@dataclass(frozen=True, eq=False, repr=False)
class AlphaParallel(Proc):
    left: Proc
    alpha_left: EventSet
    alpha_right: EventSet
    right: Proc
    level = PAR
    _fields = ("left", "alpha_left", "alpha_right", "right")

    def _render(self):
        return (
            f"{_wrap(self.left, PAR + 1)} [ {self.alpha_left} || {self.alpha_right} ] "
            f"{_wrap(self.right, PAR)}"
        )


STOP = Stop()
SKIP = Skip()


def prefix(ev: Event | str, cont: Proc) -> Prefix:
    return Prefix(event(ev) if isinstance(ev, str) else ev, cont)


def ext_choice(*terms: Proc) -> Proc:
    """Right-nested external choice; also how indexed choice is expanded."""
    return _nest(ExtChoice, terms)


def int_choice(*terms: Proc) -> Proc:
    return _nest(IntChoice, terms)


def _nest(ctor, terms):
    if not terms:
        raise ValueError("choice over an empty index set")
    out = terms[-1]
    for t in reversed(terms[:-1]):
        out = ctor(t, out)
    return out


def chain(*events, end: Proc = STOP) -> Proc:
    """``chain("a", "b")`` is ``a -> b -> STOP``."""
    out = end
    for ev in reversed(events):
        out = prefix(ev, out)
    return out


# ---------------------------------------------------------------------------
# environment


@dataclass(frozen=True)
class Environment:
    """Process definitions plus channel and set declarations.

    ``sets`` maps a set name to its items; an item is a tuple of values and
    reads either as a value (length one) or as an event ``head.arg...``.
    Zero-arity channels may be used without a declaration.
    """

    definitions: Mapping[str, Proc] = field(default_factory=dict)
    channels: Mapping[str, tuple] = field(default_factory=dict)
    sets: Mapping[str, tuple] = field(default_factory=dict)
    spans: Mapping[str, tuple] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        for name in ("definitions", "channels", "sets", "spans"):
            object.__setattr__(self, name, MappingProxyType(dict(getattr(self, name))))

    def __eq__(self, other):
        if not isinstance(other, Environment):
            return NotImplemented
        return (
            dict(self.definitions) == dict(other.definitions)
            and dict(self.channels) == dict(other.channels)
            and dict(self.sets) == dict(other.sets)
        )

    __hash__ = None

    def lookup(self, name: str) -> Proc:
        try:
            return self.definitions[name]
        except KeyError:
            raise UnboundReference(name) from None

    def extend(self, definitions=None, channels=None, sets=None) -> "Environment":
        return Environment(
            {**self.definitions, **(definitions or {})},
            {**self.channels, **(channels or {})},
            {**self.sets, **(sets or {})},
            self.spans,
        )

    def value_set(self, name: str) -> ValueSet:
        items = self.sets[name]
        return ValueSet(tuple(i[0] for i in items), name)

    def event_set(self, name: str) -> EventSet:
        return EventSet(tuple(Event(i[0], tuple(i[1:])) for i in self.sets[name]), name)


EMPTY_ENV = Environment()


# ---------------------------------------------------------------------------
# substitution


def substitute(term: Proc, binding: Mapping[str, Value]) -> Proc:
    """Replace free variables in ``term``; returns ``term`` itself if unchanged."""
    if not binding:
        return term
    kind = type(term)
    if kind is Prefix:
        ev = term.event
        if not ev.ground:
            ev = Event(ev.channel, tuple(_subst_value(a, binding) for a in ev.args))
        cont = substitute(term.cont, binding)
        if ev is term.event and cont is term.cont:
            return term
        return Prefix(ev, cont)
    if kind is InputPrefix:
        inner = dict(binding)
        fields = []
        for f in term.fields:
            if isinstance(f, Binder):
                fields.append(f)
                inner.pop(f.var, None)
            else:
                fields.append(_subst_value(f, binding) if isinstance(f, Var) and f.name in inner else f)
        cont = substitute(term.cont, inner)
        fields = tuple(fields)
        if cont is term.cont and fields == term.fields:
            return term
        return InputPrefix(term.channel, fields, cont)
    if kind in (ExtChoice, IntChoice, SyncParallel, Interleave):
        left, right = substitute(term.left, binding), substitute(term.right, binding)
        if left is term.left and right is term.right:
            return term
        return kind(left, right)
    if kind is GenParallel:
        left, right = substitute(term.left, binding), substitute(term.right, binding)
        if left is term.left and right is term.right:
            return term
        return GenParallel(left, term.sync, right)
    if kind is AlphaParallel:
        left, right = substitute(term.left, binding), substitute(term.right, binding)
        if left is term.left and right is term.right:
            return term
        return AlphaParallel(left, term.alpha_left, term.alpha_right, right)
    return term


def _subst_value(v, binding):
    if isinstance(v, Var):
        return binding.get(v.name, v)
    return v


def expand_input(term: InputPrefix) -> list:
    """All (event, continuation) instantiations of an input prefix, in binder order."""
    binders = [f for f in term.fields if isinstance(f, Binder)]
    out = []
    for combo in itertools.product(*(b.domain.values for b in binders)):
        binding = {}
        args = []
        it = iter(combo)
        for f in term.fields:
            if isinstance(f, Binder):
                v = next(it)
                binding[f.var] = v
                args.append(v)
            elif isinstance(f, Var):
                if f.name not in binding:
                    raise FreeVariable(f"free variable {f.name!r} in {term.text}")
                args.append(binding[f.name])
            else:
                args.append(f)
        out.append((Event(term.channel, tuple(args)), substitute(term.cont, binding)))
    return out


# ---------------------------------------------------------------------------
# operational semantics


def _trans_key(tr):
    return (tr[0].key, tr[1].text)


def step(term: Proc, env: Environment = EMPTY_ENV) -> tuple:
    """One-step transitions of ``term`` as a canonically sorted tuple of (Event, Proc)."""
    return tuple(sorted(set(_step(term, env, ())), key=_trans_key))


def _step(term, env, unfolding):
    kind = type(term)
    if kind is Prefix:
        if not term.event.ground:
            raise FreeVariable(f"free variable in {term.text}")
        return [(term.event, term.cont)]
    if kind is Stop:
        return []
    if kind is Skip:
        return [(TICK, STOP)]
    if kind is Ref:
        if term.name in unfolding:
            i = unfolding.index(term.name)
            raise UnguardedRecursion(unfolding[i:])
        return _step(env.lookup(term.name), env, unfolding + (term.name,))
    if kind is InputPrefix:
        return expand_input(term)
    if kind is IntChoice:
        return [(TAU, term.left), (TAU, term.right)]
    if kind is ExtChoice:
        out = []
        for ev, nxt in _step(term.left, env, unfolding):
            out.append((ev, ExtChoice(nxt, term.right) if ev is TAU else nxt))
        for ev, nxt in _step(term.right, env, unfolding):
            out.append((ev, ExtChoice(term.left, nxt) if ev is TAU else nxt))
        return out
    if kind is SyncParallel:
        return _par(term, env, unfolding, lambda e: True, None, None, SyncParallel)
    if kind is Interleave:
        return _par(term, env, unfolding, lambda e: False, None, None, Interleave)
    if kind is GenParallel:
        sync = term.sync.members
        return _par(
            term, env, unfolding, sync.__contains__, None, None,
            lambda l, r: GenParallel(l, term.sync, r),
        )
    if kind is AlphaParallel:
        a, b = term.alpha_left.members, term.alpha_right.members
        both = a & b
        return _par(
            term, env, unfolding, both.__contains__, a, b,
            lambda l, r: AlphaParallel(l, term.alpha_left, term.alpha_right, r),
        )
    raise TypeError(f"not a process term: {term!r}")


def _par(term, env, unfolding, synced, allow_left, allow_right, rebuild):
    left, right = term.left, term.right
    lsteps = _step(left, env, unfolding)
    rsteps = _step(right, env, unfolding)
    out = []
    rsync = {}
    rtick = False
    for ev, nxt in rsteps:
        if ev is TAU:
            out.append((TAU, rebuild(left, nxt)))
        elif ev is TICK:
            rtick = True
        elif synced(ev):
            rsync.setdefault(ev, []).append(nxt)
        elif allow_right is None or ev in allow_right:
            out.append((ev, rebuild(left, nxt)))
    for ev, nxt in lsteps:
        if ev is TAU:
            out.append((TAU, rebuild(nxt, right)))
        elif ev is TICK:
            if rtick:
                out.append((TICK, STOP))
        elif synced(ev):
            for rn in rsync.get(ev, ()):
                out.append((ev, rebuild(nxt, rn)))
        elif allow_left is None or ev in allow_left:
            out.append((ev, rebuild(nxt, right)))
    return out


# ---------------------------------------------------------------------------
# explicit labelled transition systems


@dataclass(frozen=True)
class Lts:
    """Explicit labelled transition system; state 0 is the initial state."""

    states: tuple
    transitions: tuple
    truncated: bool = False
    initial: int = 0

    def __len__(self):
        return len(self.states)

    @cached_property
    def successors(self) -> tuple:
        out = [[] for _ in self.states]
        for s, ev, t in self.transitions:
            out[s].append((ev, t))
        return tuple(tuple(x) for x in out)

    @cached_property
    def events(self) -> tuple:
        """Distinct labels on transitions, canonically ordered (τ and ✓ included)."""
        return tuple(sorted({ev for _, ev, _ in self.transitions}, key=lambda e: e.key))

    @cached_property
    def visible_events(self) -> frozenset:
        return frozenset(e for e in self.events if e.visible)

    def initials(self, state: int) -> frozenset:
        return frozenset(ev for ev, _ in self.successors[state] if ev is not TAU)

    def is_stable(self, state: int) -> bool:
        return all(ev is not TAU for ev, _ in self.successors[state])

    def tau_closure(self, seeds: Iterable[int]) -> frozenset:
        seen = set(seeds)
        todo = list(seen)
        succ = self.successors
        while todo:
            s = todo.pop()
            for ev, t in succ[s]:
                if ev is TAU and t not in seen:
                    seen.add(t)
                    todo.append(t)
        return frozenset(seen)

    def after(self, trace: Iterable[Event]) -> frozenset:
        """States reachable by ``trace`` (τ-closed); empty if not a trace."""
        current = self.tau_closure([self.initial])
        succ = self.successors
        for ev in trace:
            nxt = {t for s in current for e, t in succ[s] if e == ev}
            if not nxt:
                return frozenset()
            current = self.tau_closure(nxt)
        return current

    def accepts(self, trace: Iterable[Event]) -> bool:
        return bool(self.after(trace))

    def graph(self, labels: Mapping[Event, int]):
        """CSR arrays (offsets, labels, targets) with τ mapped to 0."""
        offsets = array("i", [0])
        labs = array("i")
        dsts = array("i")
        for row in self.successors:
            for ev, t in row:
                labs.append(0 if ev is TAU else labels[ev])
                dsts.append(t)
            offsets.append(len(labs))
        return offsets, labs, dsts


def build_lts(
    term: Proc,
    env: Environment = EMPTY_ENV,
    max_states: int = DEFAULT_MAX_STATES,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Lts:
    """Breadth-first expansion of ``term`` into an explicit Lts.

    States are numbered in discovery order, successors visited in canonical
    (event, term text) order, so the numbering is reproducible.  Hitting
    either limit drops the new state and marks the result truncated.
    """
    if max_states < 1 or max_depth < 1:
        raise ValueError("limits must be positive")
    index = {term: 0}
    states = [term]
    depth = [0]
    transitions = []
    truncated = False
    queue = deque([0])
    while queue:
        s = queue.popleft()
        for ev, nxt in step(states[s], env):
            t = index.get(nxt)
            if t is None:
                if depth[s] >= max_depth or len(states) >= max_states:
                    truncated = True
                    continue
                t = len(states)
                index[nxt] = t
                states.append(nxt)
                depth.append(depth[s] + 1)
                queue.append(t)
            transitions.append((s, ev, t))
    transitions.sort(key=lambda tr: (tr[0], tr[1].key, tr[2]))
    return Lts(tuple(states), tuple(transitions), truncated)


# ---------------------------------------------------------------------------
# static analyses


def alphabet(term: Proc, env: Environment = EMPTY_ENV) -> frozenset:
    """Visible events occurring syntactically in the full unfolding of ``term``."""
    out = set()
    seen = set()
    todo = [term]
    while todo:
        t = todo.pop()
        if t in seen:
            continue
        seen.add(t)
        kind = type(t)
        if kind is Prefix:
            if not t.event.ground:
                raise FreeVariable(f"free variable in {t.text}")
            out.add(t.event)
            todo.append(t.cont)
        elif kind is InputPrefix:
            for ev, cont in expand_input(t):
                out.add(ev)
                todo.append(cont)
        elif kind is Ref:
            todo.append(env.lookup(t.name))
        elif kind in (Stop, Skip):
            pass
        else:
            todo.append(t.left)
            todo.append(t.right)
    return frozenset(out)


def _unguarded_refs(term: Proc) -> list:
    out = []
    todo = [term]
    while todo:
        t = todo.pop()
        kind = type(t)
        if kind is Ref:
            out.append(t.name)
        elif kind in (Prefix, InputPrefix, Stop, Skip):
            continue
        else:
            todo.append(t.right)
            todo.append(t.left)
    return out


def _all_refs(term: Proc) -> list:
    out = []
    todo = [term]
    while todo:
        t = todo.pop()
        kind = type(t)
        if kind is Ref:
            out.append(t.name)
        elif kind in (Prefix, InputPrefix):
            todo.append(t.cont)
        elif kind in (Stop, Skip):
            continue
        else:
            todo.append(t.right)
            todo.append(t.left)
    return out


def check_references(env: Environment) -> None:
    for name, body in env.definitions.items():
        for ref in _all_refs(body):
            if ref not in env.definitions:
                raise UnboundReference(ref, f"{name} refers to undefined process {ref!r}")


def check_guarded(env: Environment) -> None:
    """Raise UnguardedRecursion with a shortest unguarded reference cycle.

    A cycle is guarded when it passes through a prefix.  Among shortest cycles
    the one starting earliest in definition order is reported.
    """
    check_references(env)
    names = list(env.definitions)
    edges = {n: list(dict.fromkeys(_unguarded_refs(env.definitions[n]))) for n in names}
    best = None
    for start in names:
        parent = {start: None}
        frontier = [start]
        found = None
        while frontier and found is None:
            nxt = []
            for n in frontier:
                for m in edges[n]:
                    if m == start:
                        found = n
                        break
                    if m not in parent:
                        parent[m] = n
                        nxt.append(m)
                if found is not None:
                    break
            frontier = nxt
        if found is None:
            continue
        cycle = [found]
        while cycle[-1] != start:
            cycle.append(parent[cycle[-1]])
        cycle.reverse()
        if best is None or len(cycle) < len(best):
            best = cycle
    if best is not None:
        raise UnguardedRecursion(best)


def check_event(env: Environment, ev_channel: str, fields: Iterable, scope: Mapping = None) -> None:
    """Check one event pattern against the channel declarations.

    ``fields`` are values, Vars or Binders; ``scope`` maps variables of
    enclosing binders to their ValueSet.
    """
    fields = tuple(fields)
    scope = dict(scope or {})
    decl = env.channels.get(ev_channel)
    if decl is None:
        if fields:
            raise UnknownChannel(ev_channel)
        return
    if len(decl) != len(fields):
        raise ArityMismatch(
            f"channel {ev_channel!r} takes {len(decl)} component(s), got {len(fields)}"
        )
    for i, (dom, f) in enumerate(zip(decl, fields)):
        if isinstance(f, Binder):
            extra = [v for v in f.domain if v not in dom]
            scope[f.var] = f.domain
        elif isinstance(f, Var):
            if f.name not in scope:
                raise FreeVariable(f"free variable {f.name!r} on channel {ev_channel!r}")
            extra = [v for v in scope[f.name] if v not in dom]
        else:
            extra = [f] if f not in dom else []
        if extra:
            raise DomainMismatch(
                f"value {extra[0]} outside domain {dom} of {ev_channel!r} component {i}"
            )


def check_channels(env: Environment) -> None:
    """Check arity and domain of every event in every definition."""
    for name in env.definitions:
        _check_term_events(env, env.definitions[name], {})
    arity = {}
    for name in env.definitions:
        for ev in _events_used(env.definitions[name]):
            ch, n = ev
            if ch in env.channels:
                continue
            if arity.setdefault(ch, n) != n:
                raise ArityMismatch(f"channel {ch!r} used with different arities")


def _events_used(term):
    todo = [term]
    while todo:
        t = todo.pop()
        kind = type(t)
        if kind is Prefix:
            yield (t.event.channel, len(t.event.args))
            todo.append(t.cont)
        elif kind is InputPrefix:
            yield (t.channel, len(t.fields))
            todo.append(t.cont)
        elif kind in (Ref, Stop, Skip):
            continue
        else:
            todo.append(t.left)
            todo.append(t.right)
            if kind is GenParallel:
                for e in t.sync:
                    yield (e.channel, len(e.args))
            elif kind is AlphaParallel:
                for e in itertools.chain(t.alpha_left, t.alpha_right):
                    yield (e.channel, len(e.args))


def _check_term_events(env, term, scope):
    kind = type(term)
    if kind is Prefix:
        check_event(env, term.event.channel, term.event.args, scope)
        _check_term_events(env, term.cont, scope)
    elif kind is InputPrefix:
        check_event(env, term.channel, term.fields, scope)
        inner = dict(scope)
        inner.update((b.var, b.domain) for b in term.binders)
        _check_term_events(env, term.cont, inner)
    elif kind in (Ref, Stop, Skip):
        return
    else:
        if kind is GenParallel:
            for e in term.sync:
                check_event(env, e.channel, e.args)
        elif kind is AlphaParallel:
            for e in itertools.chain(term.alpha_left, term.alpha_right):
                check_event(env, e.channel, e.args)
        _check_term_events(env, term.left, scope)
        _check_term_events(env, term.right, scope)


def validate_env(env: Environment) -> Environment:
    """Reference, channel and guardedness checks; returns ``env`` unchanged."""
    for name in env.definitions:
        if not PROC_NAME_RE.match(name) or name in KEYWORDS:
            raise CspError(f"bad process name {name!r}")
    check_references(env)
    check_channels(env)
    check_guarded(env)
    return env
